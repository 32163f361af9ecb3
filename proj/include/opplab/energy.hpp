#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "opplab/qform.hpp"

namespace opplab {

/// Coordinates in the weight basis of weights (2, 1, 0, -1, -2) under a(t).
using RVector = Eigen::Matrix<double, 5, 1>;
using RMatrix = Eigen::Matrix<double, 5, 5>;

/// Max-abs coordinate.
inline double r_norm(const RVector& w) { return w.cwiseAbs().maxCoeff(); }

/// Traceless X with B0 X symmetric, one per weight, each with max-abs entry 1:
/// E13, E12 - E23, diag(1,-2,1)/2, E21 - E32, E31.
const std::array<Mat3, 5>& r_basis();

/// Matrix of the coordinates of w.
Mat3 r_matrix(const RVector& w);
/// Least-squares coordinates of a 3x3 matrix in r_basis (the off-basis part is dropped).
RVector r_coordinates(const Mat3& x);

/// Throws NotInH unless h^T B0 h = B0 (1e-8), det h = 1, and h keeps the
/// positive cone half containing (1,0,1).
void require_in_h(const GroupElement& h);

/// Coordinates of h X h^-1.
RVector ad_action(const GroupElement& h, const RVector& w);
/// 5x5 matrix of Ad(h) in the weight basis.
RMatrix ad_matrix(const GroupElement& h);

struct PointCloud {
    std::vector<RVector> points;
    double alpha = 1;
    double delta = 0;
};

/// Sum over w' != w of max(||w - w'||, delta)^-alpha; w must be a point of the cloud.
double energy(const PointCloud& cloud, const RVector& w);
/// Same for the point with the given index.
double energy_at(const PointCloud& cloud, std::size_t index);

/// Projection exponent for the 5-dimensional representation; 0 < alpha <= 5.
double varpi(double alpha);

/// Smallest margin varpi(alpha) - min(2 alpha, 2 kappa) over the grid
/// alpha = step, 2 step, ... <= 5 - kappa.
double varpi_positivity_margin(double kappa, double step = 0.01);

struct ExpansionResult {
    double integral = 0;
    double normalized = 0;
};

/// Integral over r in [0,1] of ||Ad(a(d) u(r)) w||^-alpha, and the same times
/// e^{2 alpha d} ||w||^alpha; requires 0 < alpha <= 1/5 and w != 0.
ExpansionResult expansion_check(const RVector& w, double d, double alpha, std::int64_t nodes);

/// Random alpha-regular set of n points in the max-norm unit ball: leaves of a
/// dyadic tree on [-1,1]^5 whose nodes keep floor or ceil of 2^alpha children,
/// one uniform point per chosen leaf.
std::vector<RVector> regular_cloud(std::int64_t n, double alpha, std::uint64_t seed);

struct ProjectionStats {
    std::int64_t n = 0;
    double alpha = 0;
    double ell = 0;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
    double delta = 0;
    double delta_prime = 0;
    double varpi = 0;
    double threshold = 0;        // e^{-varpi ell / 2}
    double upsilon = 0;          // max initial energy
    std::int64_t pairs = 0;      // (r, w) pairs evaluated
    double fraction = 0;         // share of pairs with decay <= threshold
    double median_decay = 0;
    double isolated_fraction = 0;  // share of w whose localized set is {w}
    double active_fraction = 0;    // fraction restricted to non-isolated w
    bool degenerate = false;
};

/// For random r in [0,1], compares the localized energy of Ad(a(ell) u(r)) w at
/// scale e^{2 ell} delta with the initial energy of w at delta = n^{-1/alpha}.
ProjectionStats projection_decay_experiment(std::int64_t n, double alpha, double ell, std::int64_t trials,
                                            std::uint64_t seed);

}  // namespace opplab
