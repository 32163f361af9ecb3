#include "opplab/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/quadrature/gauss.hpp>

#include "opplab/detail/rng.hpp"
#include "opplab/dynamics.hpp"
#include "opplab/parallel.hpp"

namespace opplab {

namespace {

using Basis9 = Eigen::Matrix<double, 9, 5>;

Eigen::Matrix<double, 9, 1> flatten(const Mat3& x) { return Eigen::Map<const Eigen::Matrix<double, 9, 1>>(x.data()); }

const Eigen::Matrix<double, 5, 9>& projector() {
    static const Eigen::Matrix<double, 5, 9> p = [] {
        Basis9 m;
        for (int i = 0; i < 5; ++i) m.col(i) = flatten(r_basis()[static_cast<std::size_t>(i)]);
        return Eigen::Matrix<double, 5, 9>((m.transpose() * m).inverse() * m.transpose());
    }();
    return p;
}

Mat3 b0() { return QForm::model().matrix(); }

RMatrix conjugation_matrix(const Mat3& h, const Mat3& hinv) {
    RMatrix a;
    for (int i = 0; i < 5; ++i) a.col(i) = r_coordinates(h * r_basis()[static_cast<std::size_t>(i)] * hinv);
    return a;
}

double clipped(double dist, double delta, double alpha) { return std::pow(std::max(dist, delta), -alpha); }

// Uniform index in [0, k) from the top bits; portable unlike std distributions.
std::size_t pick(std::mt19937_64& rng, std::size_t k) {
    return std::min(k - 1, static_cast<std::size_t>(detail::unit(rng) * static_cast<double>(k)));
}

}  // namespace

const std::array<Mat3, 5>& r_basis() {
    static const std::array<Mat3, 5> basis = [] {
        std::array<Mat3, 5> b;
        for (auto& m : b) m.setZero();
        b[0](0, 2) = 1;
        b[1](0, 1) = 1;
        b[1](1, 2) = -1;
        b[2].diagonal() << 0.5, -1, 0.5;
        b[3](1, 0) = 1;
        b[3](2, 1) = -1;
        b[4](2, 0) = 1;
        return b;
    }();
    return basis;
}

Mat3 r_matrix(const RVector& w) {
    Mat3 x = Mat3::Zero();
    for (int i = 0; i < 5; ++i) x += w[i] * r_basis()[static_cast<std::size_t>(i)];
    return x;
}

RVector r_coordinates(const Mat3& x) { return projector() * flatten(x); }

void require_in_h(const GroupElement& h) {
    const Mat3& m = h.matrix();
    const double scale = std::max(1.0, max_abs(m) * max_abs(m));
    if (max_abs(m.transpose() * b0() * m - b0()) > 1e-8 * scale)
        throw Error(ErrorKind::NotInH, "element does not preserve Q0");
    if (std::abs(m.determinant() - 1) > 1e-8 * scale) throw Error(ErrorKind::NotInH, "determinant is not 1");
    if ((m * Vec3(1, 0, 1))[0] <= 0) throw Error(ErrorKind::NotInH, "element swaps the two cone halves");
}

RVector ad_action(const GroupElement& h, const RVector& w) {
    require_in_h(h);
    return r_coordinates(h.matrix() * r_matrix(w) * h.matrix().inverse());
}

RMatrix ad_matrix(const GroupElement& h) {
    require_in_h(h);
    return conjugation_matrix(h.matrix(), h.matrix().inverse());
}

double energy_at(const PointCloud& cloud, std::size_t index) {
    const RVector& w = cloud.points.at(index);
    double e = 0;
    for (std::size_t j = 0; j < cloud.points.size(); ++j) {
        if (j == index) continue;
        e += clipped(r_norm(w - cloud.points[j]), cloud.delta, cloud.alpha);
    }
    return e;
}

double energy(const PointCloud& cloud, const RVector& w) {
    const auto it = std::find(cloud.points.begin(), cloud.points.end(), w);
    if (it == cloud.points.end()) throw Error(ErrorKind::NotMember, "point is not in the cloud");
    return energy_at(cloud, static_cast<std::size_t>(it - cloud.points.begin()));
}

double varpi(double alpha) {
    if (!(alpha > 0 && alpha <= 5)) throw Error(ErrorKind::DomainError, "varpi needs 0 < alpha <= 5");
    if (alpha <= 3) {
        const double c = std::ceil(alpha);
        return 2 * alpha - (c - 1) * c / 2;
    }
    if (alpha <= 4) return std::max(2 * (alpha - 3), 2 * (5 - alpha) - 1);
    return 2 * (5 - alpha);
}

double varpi_positivity_margin(double kappa, double step) {
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 1;; ++i) {
        const double alpha = step * i;
        if (alpha > 5 - kappa + 1e-12) break;
        worst = std::min(worst, varpi(alpha) - std::min(2 * alpha, 2 * kappa));
    }
    return worst;
}

ExpansionResult expansion_check(const RVector& w, double d, double alpha, std::int64_t nodes) {
    if (!(alpha > 0 && alpha <= 0.2)) throw Error(ErrorKind::DomainError, "expansion needs 0 < alpha <= 1/5");
    const double nw = r_norm(w);
    if (!(nw > 0)) throw Error(ErrorKind::DomainError, "w must be nonzero");
    if (nodes < 16) throw Error(ErrorKind::InvalidArgument, "need at least 16 nodes");
    const RVector weights(std::exp(2 * d), std::exp(d), 1, std::exp(-d), std::exp(-2 * d));
    auto integrand = [&](double r) {
        const Mat3 ur = u(r).matrix();
        const RVector img = weights.cwiseProduct(conjugation_matrix(ur, u(-r).matrix()) * w);
        return std::pow(r_norm(img), -alpha);
    };
    constexpr int kOrder = 16;
    const std::int64_t panels = std::max<std::int64_t>(1, nodes / kOrder);
    const double h = 1.0 / static_cast<double>(panels);
    double total = 0;
    for (std::int64_t i = 0; i < panels; ++i) {
        const double lo = h * static_cast<double>(i);
        total += boost::math::quadrature::gauss<double, kOrder>::integrate(integrand, lo, lo + h);
    }
    return {total, total * std::exp(2 * alpha * d) * std::pow(nw, alpha)};
}

std::vector<RVector> regular_cloud(std::int64_t n, double alpha, std::uint64_t seed) {
    if (!(alpha > 0 && alpha <= 5)) throw Error(ErrorKind::DomainError, "need 0 < alpha <= 5");
    if (n <= 0) return {};
    auto rng = detail::stream_rng(seed, 0);
    const double branching = std::pow(2.0, alpha);
    const double base = std::floor(branching);
    const double frac = branching - base;

    // Nodes are lower corners of cubes with side 2^{1-level}.
    std::vector<RVector> level{RVector::Constant(-1)};
    double side = 2;
    int depth = 0;
    while (static_cast<std::int64_t>(level.size()) < n) {
        if (++depth > 40) throw Error(ErrorKind::DomainError, "regular tree did not reach n points by depth 40");
        side /= 2;
        std::vector<RVector> next;
        for (const RVector& corner : level) {
            std::size_t b = static_cast<std::size_t>(base) + (detail::unit(rng) < frac ? 1 : 0);
            b = std::min<std::size_t>(b, 32);
            std::array<int, 32> idx;
            std::iota(idx.begin(), idx.end(), 0);
            for (std::size_t i = 0; i < b; ++i) {
                std::swap(idx[i], idx[i + pick(rng, 32 - i)]);
                RVector child = corner;
                for (int c = 0; c < 5; ++c)
                    if (idx[i] & (1 << c)) child[c] += side;
                next.push_back(child);
            }
        }
        level.swap(next);
    }
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) std::swap(level[i], level[i + pick(rng, level.size() - i)]);
    level.resize(static_cast<std::size_t>(n));
    for (RVector& p : level)
        for (int c = 0; c < 5; ++c) p[c] += side * detail::unit(rng);
    return level;
}

ProjectionStats projection_decay_experiment(std::int64_t n, double alpha, double ell, std::int64_t trials,
                                            std::uint64_t seed) {
    if (n > 5000) throw Error(ErrorKind::BudgetExceeded, "projection experiment limited to n <= 5000");
    if (trials > 200) throw Error(ErrorKind::BudgetExceeded, "projection experiment limited to 200 trials");
    if (trials < 1) throw Error(ErrorKind::InvalidArgument, "need at least one trial");
    if (!(ell >= 0)) throw Error(ErrorKind::InvalidArgument, "need ell >= 0");

    ProjectionStats s;
    s.n = n;
    s.alpha = alpha;
    s.ell = ell;
    s.trials = trials;
    s.seed = seed;
    s.varpi = varpi(alpha);
    s.threshold = std::exp(-s.varpi * ell / 2);
    if (n <= 1) {
        s.degenerate = true;
        return s;
    }

    PointCloud cloud{regular_cloud(n, alpha, seed), alpha, std::pow(static_cast<double>(n), -1 / alpha)};
    const auto& pts = cloud.points;
    const std::size_t N = pts.size();
    s.delta = cloud.delta;
    s.delta_prime = std::exp(2 * ell) * cloud.delta;

    std::vector<double> pre(N);
    std::vector<std::vector<std::uint32_t>> near(N);
    const double radius = std::exp(-2 * ell);
    parallel_for(N, [&](std::size_t i) {
        pre[i] = energy_at(cloud, i);
        for (std::size_t j = 0; j < N; ++j)
            if (j != i && r_norm(pts[i] - pts[j]) <= radius) near[i].push_back(static_cast<std::uint32_t>(j));
    });
    s.upsilon = *std::max_element(pre.begin(), pre.end());
    s.isolated_fraction =
        static_cast<double>(std::count_if(near.begin(), near.end(), [](const auto& v) { return v.empty(); })) /
        static_cast<double>(N);

    const RVector weights(std::exp(2 * ell), std::exp(ell), 1, std::exp(-ell), std::exp(-2 * ell));
    std::vector<double> decay;
    decay.reserve(N * static_cast<std::size_t>(trials));
    std::int64_t active = 0, active_hits = 0;
    std::vector<RVector> img(N);
    std::vector<double> local(N);
    for (std::int64_t trial = 0; trial < trials; ++trial) {
        auto rng = detail::stream_rng(seed, 1 + static_cast<std::uint64_t>(trial));
        const double r = detail::unit(rng);
        const RMatrix A = weights.asDiagonal() * conjugation_matrix(u(r).matrix(), u(-r).matrix());
        for (std::size_t i = 0; i < N; ++i) img[i] = A * pts[i];
        parallel_for(N, [&](std::size_t i) {
            double e = 0;
            for (std::uint32_t j : near[i]) e += clipped(r_norm(img[i] - img[j]), s.delta_prime, alpha);
            local[i] = e / pre[i];
        });
        decay.insert(decay.end(), local.begin(), local.end());
        for (std::size_t i = 0; i < N; ++i) {
            if (near[i].empty()) continue;
            ++active;
            if (local[i] <= s.threshold) ++active_hits;
        }
    }
    s.pairs = static_cast<std::int64_t>(decay.size());
    s.fraction = static_cast<double>(std::count_if(decay.begin(), decay.end(),
                                                   [&](double x) { return x <= s.threshold; })) /
                 static_cast<double>(decay.size());
    s.active_fraction = active ? static_cast<double>(active_hits) / static_cast<double>(active) : 0;
    const std::size_t mid = decay.size() / 2;
    std::nth_element(decay.begin(), decay.begin() + static_cast<std::ptrdiff_t>(mid), decay.end());
    double median = decay[mid];
    if (decay.size() % 2 == 0) median = (median + *std::max_element(decay.begin(), decay.begin() + static_cast<std::ptrdiff_t>(mid))) / 2;
    s.median_decay = median;
    return s;
}

}  // namespace opplab
