#pragma once

#include <array>
#include <utility>
#include <vector>

#include "opplab/qform.hpp"

namespace opplab {

struct ExceptionalParams {
    double rho = 0.05;
    double A = 20;
    double t = 0;

    /// e^{rho t}, snapped to the nearest integer when within 1e-12 relative.
    double height() const;
    /// e^{-A rho t}.
    double smallness() const;
};

struct ExceptionalLine {
    IVec3 v = IVec3::Zero();
    double norm = 0;
    double value = 0;  // |Q(v)|
};

struct ExceptionalPlane {
    IVec3 u = IVec3::Zero();  // primitive covector; the plane is u . x = 0
    IVec3 w1 = IVec3::Zero();
    IVec3 w2 = IVec3::Zero();  // Z-basis of the plane with w1 x w2 = u
    double norm_w1 = 0;
    double norm_w2 = 0;
    double dual_value = 0;  // |Q*(u)|
};

struct ExceptionalSet {
    std::vector<ExceptionalLine> lines;
    std::vector<ExceptionalPlane> planes;
    ExceptionalParams params;
    NormKind norm = NormKind::Euclidean;

    bool empty() const { return lines.empty() && planes.empty(); }
    /// More than four lines or planes signals proximity to a rational form.
    bool exceeds_four() const { return lines.size() > 4 || planes.size() > 4; }
};

/// Primitive v with ||v|| <= e^{rho t} and |Q(v)| <= e^{-A rho t}, one per
/// line, sign-normalized, sorted by (norm, lexicographic).
ExceptionalSet find_exceptional_lines(const QForm& q, const ExceptionalParams& p,
                                      NormKind norm = NormKind::Euclidean);

/// Lines of the dual form, each completed to a reduced Z-basis of its kernel.
ExceptionalSet find_exceptional_planes(const QForm& q, const ExceptionalParams& p,
                                       NormKind norm = NormKind::Euclidean);

/// Both parts.
ExceptionalSet find_exceptional(const QForm& q, const ExceptionalParams& p, NormKind norm = NormKind::Euclidean);

/// Reduced Z-basis (w1, w2) of {x in Z^3 : u . x = 0} with w1 x w2 = u; u primitive.
std::pair<IVec3, IVec3> kernel_basis(const IVec3& u);

/// Number of nonzero v with ||v|| <= T and a <= Q(v) <= b lying on some listed
/// line or plane. Each point is counted once.
std::int64_t special_count(const QForm& q, const ExceptionalSet& exc, double a, double b, double T);

struct RationalApproximant {
    IMat3 P = IMat3::Zero();
    double lambda = 0;
    double distance = 0;  // max-abs entry of B_Q - lambda P
    bool exact = false;   // distance certified with rational arithmetic
};

/// Integral form through five almost-null vectors, no three coplanar.
RationalApproximant rational_from_five(const QForm& q, const std::array<IVec3, 5>& v);

/// Exhaustive minimization of ||Q - lambda P|| over integral symmetric P with
/// entries in [-N, N] and det P != 0; 1 <= N <= 12.
RationalApproximant diophantine_quality(const QForm& q, int N);

}  // namespace opplab
