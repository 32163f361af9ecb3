#include "opplab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "opplab/lattice.hpp"
#include "opplab/parallel.hpp"

namespace opplab {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
// Largest box of integer coordinates a single Siegel sum may scan.
constexpr double kSiegelBudget = 1e8;

bool is_power_of_two(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

double q0_value(const Vec3& v) { return 2 * v[0] * v[2] - v[1] * v[1]; }

// a(t) k(theta) v without forming matrices.
Vec3 flow_point(double et, double theta, const Vec3& v) {
    const Vec3 w = k(theta).matrix() * v;
    return Vec3(et * w[0], w[1], w[2] / et);
}

}  // namespace

GroupElement a(double t) { return GroupElement::unchecked(Vec3(std::exp(t), 1, std::exp(-t)).asDiagonal()); }

GroupElement u(double r) {
    Mat3 m;
    m << 1, r, r * r / 2, 0, 1, r, 0, 0, 1;
    return GroupElement::unchecked(m);
}

GroupElement uminus(double s) { return GroupElement::unchecked(u(s).matrix().transpose()); }

GroupElement k(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double r = s / std::numbers::sqrt2;
    Mat3 m;
    m << (1 + c) / 2, -r, (1 - c) / 2,  //
        r, c, -r,                        //
        (1 - c) / 2, r, (1 + c) / 2;
    return GroupElement::unchecked(m);
}

double siegel_transform(const TestFunction& f, const GroupElement& g) {
    if (f.is_zero()) return 0;
    const double R = f.support_radius() * (1 + 1e-12);
    const Mat3 B = reduce_basis(g.matrix()).basis;

    const Mat3 Ginv = (B.transpose() * B).inverse();
    double box = 1;
    for (int i = 0; i < 3; ++i) box *= 2 * std::floor(R * std::sqrt(Ginv(i, i))) + 1;
    if (!(box <= kSiegelBudget)) throw Error(ErrorKind::BudgetExceeded, "Siegel sum needs too many lattice points");

    // |B w| = |U w| with U upper triangular; enumerate w3, w2, w1 in nested ellipse slices.
    const Mat3 U = Eigen::HouseholderQR<Mat3>(B).matrixQR().triangularView<Eigen::Upper>();
    const double pad = 1e-9;
    auto range = [&](double center, double half, std::int64_t& lo, std::int64_t& hi) {
        lo = static_cast<std::int64_t>(std::ceil(center - half - pad));
        hi = static_cast<std::int64_t>(std::floor(center + half + pad));
    };
    double sum = 0;
    std::int64_t lo3, hi3;
    range(0, R / std::abs(U(2, 2)), lo3, hi3);
    for (std::int64_t w3 = lo3; w3 <= hi3; ++w3) {
        const double e3 = U(2, 2) * static_cast<double>(w3);
        const double r3 = R * R - e3 * e3;
        if (r3 < 0) continue;
        std::int64_t lo2, hi2;
        range(-U(1, 2) * static_cast<double>(w3) / U(1, 1), std::sqrt(r3) / std::abs(U(1, 1)), lo2, hi2);
        for (std::int64_t w2 = lo2; w2 <= hi2; ++w2) {
            const double e2 = U(1, 1) * static_cast<double>(w2) + U(1, 2) * static_cast<double>(w3);
            const double r2 = r3 - e2 * e2;
            if (r2 < 0) continue;
            std::int64_t lo1, hi1;
            range(-(U(0, 1) * static_cast<double>(w2) + U(0, 2) * static_cast<double>(w3)) / U(0, 0),
                  std::sqrt(r2) / std::abs(U(0, 0)), lo1, hi1);
            for (std::int64_t w1 = lo1; w1 <= hi1; ++w1) {
                const Vec3 w(static_cast<double>(w1), static_cast<double>(w2), static_cast<double>(w3));
                sum += f(B * w);
            }
        }
    }
    return sum;
}

CircleAverageResult circle_average(const TestFunction& f, const AngularWeight& xi, double t, const GroupElement& g,
                                   std::int64_t nodes) {
    if (!is_power_of_two(nodes) || nodes < 256)
        throw Error(ErrorKind::InvalidArgument, "nodes must be a power of two >= 256");
    CircleAverageResult res;
    res.t = t;
    res.nodes = nodes;
    if (f.is_zero()) return res;

    const GroupElement at = a(t);
    std::vector<double> vals(static_cast<std::size_t>(nodes));
    parallel_for(vals.size(), [&](std::size_t j) {
        const double theta = kTwoPi * static_cast<double>(j) / static_cast<double>(nodes);
        const double w = xi(theta);
        vals[j] = w == 0 ? 0 : w * siegel_transform(f, at * k(theta) * g);
    });
    double all = 0, even = 0;
    for (std::size_t j = 0; j < vals.size(); ++j) {
        all += vals[j];
        if (j % 2 == 0) even += vals[j];
    }
    res.value = all / static_cast<double>(nodes);
    res.richardson_gap = std::abs(res.value - even / static_cast<double>(nodes / 2));
    return res;
}

double j_integral(const TestFunction& f, double c, double d) {
    if (!(d > 0)) throw Error(ErrorKind::DomainError, "J_f needs d > 0");
    if (f.is_zero()) return 0;

    if (f.kind() == TestFunction::Kind::Ball) {
        // ((c+u)/2d)^2 + u + d^2 <= R^2 with u = y^2 is a quadratic in u.
        const double R = f.radius();
        const double bq = 2 * c + 4 * d * d;
        const double cq = c * c + 4 * d * d * d * d - 4 * d * d * R * R;
        const double disc = bq * bq - 4 * cq;
        if (disc < 0) return 0;
        const double sq = std::sqrt(disc);
        const double u_hi = (-bq + sq) / 2;
        if (u_hi < 0) return 0;
        const double u_lo = std::max(0.0, (-bq - sq) / 2);
        return f.amplitude() * 2 * (std::sqrt(u_hi) - std::sqrt(u_lo)) / d;
    }

    const auto& fx = f.factors()[0];
    const auto& fy = f.factors()[1];
    const double z = f.factors()[2](d);
    if (z == 0) return 0;
    const double ylo = -fy.hi, yhi = -fy.lo;
    std::vector<double> cuts{ylo, yhi};
    for (double X : fx.breakpoints()) {
        const double u2 = 2 * d * X - c;
        if (u2 >= 0) {
            cuts.push_back(std::sqrt(u2));
            cuts.push_back(-std::sqrt(u2));
        }
    }
    for (double Y : fy.breakpoints()) cuts.push_back(-Y);
    std::sort(cuts.begin(), cuts.end());
    auto integrand = [&](double y) { return fx((c + y * y) / (2 * d)) * fy(-y); };
    double total = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = std::max(cuts[i], ylo), hi = std::min(cuts[i + 1], yhi);
        if (!(hi > lo)) continue;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, lo, hi, 15, 1e-13);
    }
    return f.amplitude() * z * total / d;
}

EmmCheck emm_calculus_check(const TestFunction& f, const SphereWeight& xi, const Vec3& v, double t,
                            std::int64_t nodes) {
    if (f.is_zero()) return {};
    const double nv = v.norm();
    const double et = std::exp(t);
    if (!(nv >= et / 2 && nv <= et)) throw Error(ErrorKind::DomainError, "need e^t/2 <= |v| <= e^t");
    const double R = f.support_radius();
    if (t < 2 * std::log(R)) throw Error(ErrorKind::DomainError, "need t >= 2 log(support radius)");
    if (nodes < 16) throw Error(ErrorKind::InvalidArgument, "need at least 16 nodes");

    // The integrand lives where the middle coordinate of k v, which equals
    // rho_y sin(theta - theta*) up to sign, is within the support radius.
    const double theta_star = std::atan2(v[1] / std::numbers::sqrt2, (v[2] - v[0]) / 2);
    const double rho_y = std::sqrt((v[0] - v[2]) * (v[0] - v[2]) / 2 + v[1] * v[1]);
    const double x = R / rho_y;
    const double W = x >= 1 ? std::numbers::pi : std::min(std::numbers::pi, 1.5 * std::asin(x));

    auto integrand = [&](double theta) {
        const double val = f(flow_point(et, theta, v));
        if (val == 0) return 0.0;
        const Vec3 back = k(theta).matrix().row(2).transpose();  // k^-1 e3
        return val * xi(back);
    };
    constexpr int kOrder = 16;
    const std::int64_t panels = std::max<std::int64_t>(1, nodes / kOrder);
    const double h = 2 * W / static_cast<double>(panels);
    double lhs = 0;
    for (std::int64_t i = 0; i < panels; ++i) {
        const double lo = theta_star - W + h * static_cast<double>(i);
        lhs += boost::math::quadrature::gauss<double, kOrder>::integrate(integrand, lo, lo + h);
    }
    lhs /= kTwoPi;

    // Substituting y = <k v, e2> gives dk = sqrt2 dy / (2 pi |v|) and leaves the
    // bare y-integral, which is d J_f(c, d); so the prefactor is sqrt2 / (2 pi e^t).
    const double rhs = std::numbers::sqrt2 / (kTwoPi * et) * j_integral(f, q0_value(v), nv / et) * xi(Vec3(v / nv));
    return {lhs, rhs, std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-12)};
}

DecayResult kintegral_decay(const Vec3& v, double t, double delta, double sigma, std::int64_t nodes,
                            bool sigma_mode) {
    const double nv = v.norm();
    if (!(nv > 0)) throw Error(ErrorKind::DomainError, "v must be nonzero");
    if (nodes < 16) throw Error(ErrorKind::InvalidArgument, "need at least 16 nodes");
    if (!(delta > 0)) throw Error(ErrorKind::DomainError, "need delta > 0");
    double bound = std::exp(delta * t) * std::pow(nv, -1 - delta);
    if (sigma_mode) {
        if (!(delta < 1 - sigma)) throw Error(ErrorKind::DomainError, "need 0 < delta < 1 - sigma");
        if (std::abs(q0_value(v)) < std::exp(-2 * sigma * t) * (1 - 1e-12))
            throw Error(ErrorKind::DomainError, "need |Q0(v)| >= e^{-2 sigma t}");
        bound = std::exp((-1 + delta + sigma) * t) * std::pow(nv, -1 - delta) / delta;
    }
    const double et = std::exp(t);
    std::vector<double> vals(static_cast<std::size_t>(nodes));
    parallel_for(vals.size(), [&](std::size_t j) {
        const double theta = kTwoPi * static_cast<double>(j) / static_cast<double>(nodes);
        vals[j] = std::pow(flow_point(et, theta, v).norm(), -1 - delta);
    });
    double sum = 0;
    for (double x : vals) sum += x;
    DecayResult r;
    r.integral = sum / static_cast<double>(nodes);
    r.bound_ratio = r.integral / bound;
    return r;
}

double alpha_moment(const GroupElement& g, double t, double p, int index, std::int64_t nodes) {
    if (!(p > 0 && p <= 1)) throw Error(ErrorKind::DomainError, "need 0 < p <= 1");
    if (index != 1 && index != 2) throw Error(ErrorKind::DomainError, "alpha index must be 1 or 2");
    if (nodes < 256) throw Error(ErrorKind::InvalidArgument, "need at least 256 nodes");
    const GroupElement at = a(t);
    std::vector<double> vals(static_cast<std::size_t>(nodes));
    parallel_for(vals.size(), [&](std::size_t j) {
        const double theta = kTwoPi * static_cast<double>(j) / static_cast<double>(nodes);
        vals[j] = std::pow(alpha(at * k(theta) * g, index), p);
    });
    double sum = 0;
    for (double x : vals) sum += x;
    return sum / static_cast<double>(nodes);
}

}  // namespace opplab
