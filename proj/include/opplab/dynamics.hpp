#pragma once

#include <cstdint>
#include <functional>

#include "opplab/qform.hpp"
#include "opplab/test_function.hpp"

namespace opplab {

/// diag(e^t, 1, e^-t).
GroupElement a(double t);
/// Upper unitriangular with (1,2) = (2,3) = r and (1,3) = r^2/2.
GroupElement u(double r);
/// Transpose of u(s).
GroupElement uminus(double s);
/// The rotation subgroup of SO(Q0); k(0) = I and k(pi) = B0.
GroupElement k(double theta);

using AngularWeight = std::function<double(double)>;
using SphereWeight = std::function<double(const Vec3&)>;

/// Sum of f(g v) over all v in Z^3, the origin included.
double siegel_transform(const TestFunction& f, const GroupElement& g);

struct CircleAverageResult {
    double value = 0;
    std::int64_t nodes = 0;
    double t = 0;
    double richardson_gap = 0;  // |value(nodes) - value(nodes / 2)|
};

/// (1/2pi) integral over theta of xi(theta) siegel_transform(f, a(t) k(theta) g)
/// by the trapezoid rule; nodes must be a power of two >= 256.
CircleAverageResult circle_average(const TestFunction& f, const AngularWeight& xi, double t, const GroupElement& g,
                                   std::int64_t nodes);

/// (1/d) integral of f((c + y^2)/(2d), -y, d) dy.
double j_integral(const TestFunction& f, double c, double d);

struct EmmCheck {
    double lhs = 0;
    double rhs = 0;
    double relerr = 0;
};

/// Compares the circle integral of f(a_t k v) xi(k^-1 e3) dk (dk = dtheta / 2pi)
/// with its asymptotic (sqrt 2 / (2 pi e^t)) J_f(Q0(v), e^-t ||v||) xi(v / ||v||).
/// Requires e^t/2 <= ||v|| <= e^t and t >= 2 log(support radius).
EmmCheck emm_calculus_check(const TestFunction& f, const SphereWeight& xi, const Vec3& v, double t,
                            std::int64_t nodes);

struct DecayResult {
    double integral = 0;
    double bound_ratio = 0;
};

/// Circle average of ||a_t k v||^{-1-delta}, compared with
/// delta^-1 e^{(-1+delta+sigma) t} ||v||^{-1-delta} when sigma_mode is set
/// (requires 0 < delta < 1 - sigma and |Q0(v)| >= e^{-2 sigma t}) or with
/// e^{delta t} ||v||^{-1-delta} otherwise.
DecayResult kintegral_decay(const Vec3& v, double t, double delta, double sigma, std::int64_t nodes,
                            bool sigma_mode = true);

/// Circle average of alpha_index(a(t) k(theta) g)^p; 0 < p <= 1, nodes >= 256.
double alpha_moment(const GroupElement& g, double t, double p, int index, std::int64_t nodes);

}  // namespace opplab
