#include "opplab/mainterm.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "opplab/detail/rng.hpp"
#include "opplab/parallel.hpp"

namespace opplab {

namespace {

struct PrincipalFrame {
    Mat3 axes;       // columns: positive axis, then the two negative axes
    Vec3 mu;         // (mu1, mu2, mu3) > 0 with B = O diag(mu1, -mu2, -mu3) O^T
};

PrincipalFrame principal_frame(const QForm& q) {
    const Signature sig = signature(q);
    if (sig != Signature{1, 2}) throw Error(ErrorKind::NotIndefinite, "main term needs signature (1,2)");
    Eigen::SelfAdjointEigenSolver<Mat3> es(q.matrix());
    const Vec3 ev = es.eigenvalues();  // ascending: two negatives, then the positive one
    PrincipalFrame f;
    f.axes.col(0) = es.eigenvectors().col(2);
    f.axes.col(1) = es.eigenvectors().col(1);
    f.axes.col(2) = es.eigenvectors().col(0);
    f.mu = Vec3(ev[2], -ev[1], -ev[0]);
    return f;
}

}  // namespace

CqEstimate cq_quadrature(const QForm& q, double tol, NormKind norm) {
    if (!(tol > 0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");
    const PrincipalFrame f = principal_frame(q);
    const double a = 1 / std::sqrt(f.mu[0]);
    const double b = 1 / std::sqrt(f.mu[1]);
    const double c = 1 / std::sqrt(f.mu[2]);
    const Vec3 diag(f.mu[0], -f.mu[1], -f.mu[2]);

    std::int64_t nodes = 0;
    // Cone points r P(theta) with P = (+-a, b cos, c sin) in the principal frame.
    // dsigma = r |P x P'| dr dtheta and |grad Q(rP)| = r |grad Q(P)|, so the
    // r-integral is the radius at which rP leaves the unit ball.
    auto integrand = [&](double theta) {
        ++nodes;
        const double ct = std::cos(theta), st = std::sin(theta);
        double sum = 0;
        for (double sign : {1.0, -1.0}) {
            const Vec3 p(sign * a, b * ct, c * st);
            const Vec3 dp(0, -b * st, c * ct);
            const double area = p.cross(dp).norm();
            const double grad = 2 * diag.cwiseProduct(p).norm();
            const double radius = 1 / norm_of(Vec3(f.axes * p), norm);
            sum += area / grad * radius;
        }
        return sum;
    };

    double err = 0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, 0.0, 2 * std::numbers::pi, 25, tol, &err);
    return CqEstimate{value, "quadrature", 0.0, nodes};
}

CqEstimate cq_montecarlo(const QForm& q, std::int64_t samples, double T_ref, double width, std::uint64_t seed,
                         NormKind norm) {
    if (samples < 10000) throw Error(ErrorKind::InvalidArgument, "at least 10^4 samples are required");
    if (!(T_ref > 0)) throw Error(ErrorKind::InvalidArgument, "T_ref must be positive");
    if (!(width >= 0)) throw Error(ErrorKind::InvalidArgument, "width must be nonnegative");
    if (width == 0) return CqEstimate{0.0, "montecarlo", 0.0, samples};

    constexpr std::int64_t kBlock = 1 << 16;
    const std::int64_t blocks = (samples + kBlock - 1) / kBlock;
    const double half = width / 2;
    const Mat3& B = q.matrix();
    std::vector<std::int64_t> hits(static_cast<std::size_t>(blocks), 0);

    parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t blk) {
        auto rng = detail::stream_rng(seed, blk);
        const std::int64_t n = std::min(kBlock, samples - static_cast<std::int64_t>(blk) * kBlock);
        std::int64_t h = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            Vec3 v;
            do {
                for (int k = 0; k < 3; ++k) v[k] = 2 * detail::unit(rng) - 1;
            } while (norm == NormKind::Euclidean && v.squaredNorm() > 1);
            v *= T_ref;
            if (std::abs(v.dot(B * v)) <= half) ++h;
        }
        hits[blk] = h;
    });

    std::int64_t total = 0;
    for (auto h : hits) total += h;
    const double ball = norm == NormKind::Euclidean ? 4.0 / 3.0 * std::numbers::pi : 8.0;
    const double scale = ball * T_ref * T_ref * T_ref / (width * T_ref);
    const double p = static_cast<double>(total) / static_cast<double>(samples);
    const double se = std::sqrt(p * (1 - p) / static_cast<double>(samples));
    return CqEstimate{scale * p, "montecarlo", scale * se, samples};
}

}  // namespace opplab
