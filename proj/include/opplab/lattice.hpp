#pragma once

#include <vector>

#include "opplab/qform.hpp"

namespace opplab {

struct CountResult {
    double T = 0;
    double a = 0;
    double b = 0;
    std::int64_t total = 0;
    bool primitive_only = false;
    NormKind norm_kind = NormKind::Euclidean;
    double elapsed = 0;
    /// Some fiber had non-finite breakpoints and was enumerated point by point.
    bool fallback_used = false;
    /// The elementary shear was needed because every |B_kk| < 1e-6.
    bool sheared = false;
};

/// #{0 != v in Z^3 : ||v|| <= T, a <= Q(v) <= b}, by fiberwise solving.
CountResult count_in_shell(const QForm& q, double a, double b, double T, bool primitive_only,
                           NormKind norm = NormKind::Euclidean);

/// Triple-loop reference count; T <= 200.
CountResult count_bruteforce(const QForm& q, double a, double b, double T, bool primitive_only,
                             NormKind norm = NormKind::Euclidean);

struct MinValueResult {
    IVec3 vector = IVec3::Zero();
    double residual = 0;
};

/// Primitive v with 0 < ||v|| <= T minimizing |Q(v) - s|. Ties go to the
/// smaller norm, then to the lexicographically larger sign-normalized vector.
MinValueResult min_value_solve(const QForm& q, double s, double T, NormKind norm = NormKind::Euclidean);

struct LatticeVectorReport {
    IVec3 vector = IVec3::Zero();
    double image_norm = 0;
    bool is_primitive = false;
};

/// Basis g U of the lattice g Z^3 with U unimodular, greedily reduced so that
/// the columns are successive minima in dimension 3.
struct ReducedBasis {
    Mat3 basis;  // columns
    IMat3 unimodular;
};

ReducedBasis reduce_basis(const Mat3& g);

/// Nonzero v in Z^3 minimizing the Euclidean norm of g v.
LatticeVectorReport shortest_vector(const GroupElement& g);

/// Cusp functions: alpha_1 = 1/min ||g v||, alpha_2 = 1/min ||g* u||.
double alpha(const GroupElement& g, int index);

struct UpperBoundRow {
    double s = 0;
    std::int64_t count = 0;
    double ratio = 0;
};

/// #{||v|| <= e^s, |Q(v)| <= M} / e^{(1+eta)s} on the integer grid s_min..s_max.
std::vector<UpperBoundRow> upper_bound_check(const QForm& q, double M, double s_max, double s_min = 0,
                                             double eta = 0.1, NormKind norm = NormKind::Euclidean);

}  // namespace opplab
