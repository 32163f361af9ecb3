#include "opplab/exceptional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "opplab/detail/sweep.hpp"
#include "opplab/parallel.hpp"

namespace opplab {

namespace {

using BigVec = std::array<BigInt, 3>;
using BigMat = std::array<std::array<BigInt, 3>, 3>;

const double kLogBudget = std::log(1e6);

struct LexLess {
    bool operator()(const IVec3& a, const IVec3& b) const { return lex_less(a, b); }
};

void check_params(const ExceptionalParams& p) {
    if (!(p.rho > 0) || !(p.A > 0) || !(p.t >= 0))
        throw Error(ErrorKind::InvalidArgument, "need rho > 0, A > 0, t >= 0");
    if (p.rho * p.t > kLogBudget) throw Error(ErrorKind::BudgetExceeded, "rho t exceeds log(1e6)");
}

// All lattice points of the sweep (runs expanded), in task order.
template <class Keep>
std::vector<IVec3> collect(const detail::ShellSweep& sweep, Keep&& keep) {
    const std::size_t tasks = sweep.task_count();
    std::vector<std::vector<IVec3>> parts(tasks);
    parallel_for(tasks, [&](std::size_t t) {
        auto& out = parts[t];
        sweep.run_task(t, [&](const detail::Fiber& f) {
            sweep.scan_fiber(
                f,
                [&](const IVec3& v) {
                    if (keep(v)) out.push_back(v);
                },
                [&](const IVec3& base, const IVec3& step, std::int64_t x0, std::int64_t x1) {
                    for (std::int64_t x = x0; x <= x1; ++x) {
                        const IVec3 v = base + x * step;
                        if (keep(v)) out.push_back(v);
                    }
                });
        });
    });
    std::vector<IVec3> all;
    for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    return all;
}

std::vector<ExceptionalLine> small_lines(const QForm& q, const ExceptionalParams& p, NormKind norm) {
    check_params(p);
    const double H = p.height();
    const double eps = p.smallness();
    const std::array<IVec3, 3> basis{IVec3(1, 0, 0), IVec3(0, 1, 0), IVec3(0, 0, 1)};
    detail::ShellSweep sweep(basis, norm, H);
    sweep.set_window(q.matrix(), -eps, eps);
    sweep.set_fiber_axis(sweep.best_value_axis(q.matrix()));

    auto hits = collect(sweep, [](const IVec3& v) { return gcd3(v) == 1 && sign_normalized(v) == v; });
    std::vector<ExceptionalLine> lines;
    lines.reserve(hits.size());
    for (const IVec3& v : hits) lines.push_back({v, norm_of(v, norm), std::abs(q(v))});
    std::sort(lines.begin(), lines.end(), [](const ExceptionalLine& x, const ExceptionalLine& y) {
        if (x.norm != y.norm) return x.norm < y.norm;
        return lex_less(x.v, y.v);
    });
    return lines;
}

IVec3 to_ivec(const BigVec& v) {
    IVec3 out;
    for (int i = 0; i < 3; ++i) {
        if (boost::multiprecision::abs(v[i]) > BigInt(std::numeric_limits<std::int64_t>::max()))
            throw Error(ErrorKind::DomainError, "integer overflow in approximant");
        out[i] = static_cast<std::int64_t>(v[i]);
    }
    return out;
}

BigVec big_cross(const BigVec& a, const BigVec& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

BigInt big_gcd(const BigInt& a, const BigInt& b) { return boost::multiprecision::gcd(a, b); }

// adj(gamma) for integer gamma, so that adj(gamma) gamma = det(gamma) I.
BigMat adjugate(const IMat3& g) {
    BigMat m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m[i][j] = g(i, j);
    BigMat adj;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
            adj[i][j] = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        }
    }
    return adj;
}

BigVec apply(const BigMat& m, const IVec3& v) {
    BigVec out;
    for (int i = 0; i < 3; ++i) out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    return out;
}

double cbrt_inverse(double det) { return std::cbrt(1.0 / det); }

}  // namespace

double ExceptionalParams::height() const {
    const double h = std::exp(rho * t);
    const double r = std::round(h);
    return std::abs(h - r) <= 1e-12 * h ? r : h;
}

double ExceptionalParams::smallness() const { return std::exp(-A * rho * t); }

ExceptionalSet find_exceptional_lines(const QForm& q, const ExceptionalParams& p, NormKind norm) {
    ExceptionalSet s;
    s.params = p;
    s.norm = norm;
    s.lines = small_lines(q, p, norm);
    return s;
}

std::pair<IVec3, IVec3> kernel_basis(const IVec3& u) {
    if (gcd3(u) != 1) throw Error(ErrorKind::InvalidArgument, "covector must be primitive");
    // Integer column operations reduce the row u to a single +-1 entry; the
    // other two columns of the accumulated unimodular matrix span the kernel.
    IVec3 r = u;
    IMat3 U = IMat3::Identity();
    for (;;) {
        int piv = -1;
        for (int i = 0; i < 3; ++i)
            if (r[i] != 0 && (piv < 0 || std::abs(r[i]) < std::abs(r[piv]))) piv = i;
        bool done = true;
        for (int j = 0; j < 3; ++j) {
            if (j == piv || r[j] == 0) continue;
            const std::int64_t m = r[j] / r[piv];
            r[j] -= m * r[piv];
            U.col(j) -= m * U.col(piv);
            done = false;
        }
        if (done) {
            int k = 0;
            IVec3 w[2];
            for (int j = 0; j < 3; ++j)
                if (j != piv) w[k++] = U.col(j);
            IVec3 w1 = w[0], w2 = w[1];
            // Lagrange reduction of the plane basis.
            for (;;) {
                if (w2.squaredNorm() < w1.squaredNorm()) std::swap(w1, w2);
                const std::int64_t dot = w1.dot(w2), n1 = w1.squaredNorm();
                if (2 * std::abs(dot) <= n1) break;
                w2 -= static_cast<std::int64_t>(std::llround(static_cast<double>(dot) / static_cast<double>(n1))) * w1;
            }
            const IVec3 c = cross(w1, w2);
            if (c == -u) w2 = -w2;
            else if (c != u) throw Error(ErrorKind::SingularBasis, "kernel completion failed");
            return {w1, w2};
        }
    }
}

ExceptionalSet find_exceptional_planes(const QForm& q, const ExceptionalParams& p, NormKind norm) {
    ExceptionalSet s;
    s.params = p;
    s.norm = norm;
    for (const ExceptionalLine& l : small_lines(dual(q), p, norm)) {
        const auto [w1, w2] = kernel_basis(l.v);
        s.planes.push_back({l.v, w1, w2, norm_of(w1, norm), norm_of(w2, norm), l.value});
    }
    return s;
}

ExceptionalSet find_exceptional(const QForm& q, const ExceptionalParams& p, NormKind norm) {
    ExceptionalSet s = find_exceptional_lines(q, p, norm);
    s.planes = find_exceptional_planes(q, p, norm).planes;
    return s;
}

std::int64_t special_count(const QForm& q, const ExceptionalSet& exc, double a, double b, double T) {
    if (!(a <= b)) throw Error(ErrorKind::DomainError, "need a <= b");
    if (exc.empty() || !(T > 0)) return 0;
    const Mat3& B = q.matrix();
    const std::array<IVec3, 3> unit{IVec3(1, 0, 0), IVec3(0, 1, 0), IVec3(0, 0, 1)};
    detail::ShellSweep region(unit, exc.norm, T);
    region.set_window(B, a, b);

    std::set<IVec3, LexLess> hits;
    for (const ExceptionalLine& l : exc.lines) {
        for (std::int64_t n = 1;; ++n) {
            const IVec3 v = n * l.v;
            if (!region.in_region(v)) break;
            if (region.in_window(v)) {
                hits.insert(v);
                hits.insert(IVec3(-v));
            }
        }
    }
    for (const ExceptionalPlane& pl : exc.planes) {
        const std::array<IVec3, 2> basis{pl.w1, pl.w2};
        detail::ShellSweep sweep(basis, exc.norm, T);
        sweep.set_window(B, a, b);
        sweep.set_fiber_axis(sweep.best_value_axis(B));
        for (const IVec3& v : collect(sweep, [](const IVec3&) { return true; })) hits.insert(v);
    }
    return static_cast<std::int64_t>(hits.size());
}

RationalApproximant rational_from_five(const QForm& q, const std::array<IVec3, 5>& v) {
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j)
            for (int k = j + 1; k < 5; ++k)
                if (det3(v[i], v[j], v[k]) == 0)
                    throw Error(ErrorKind::CoplanarInput, "three of the five vectors are coplanar");

    IMat3 gamma;
    for (int i = 0; i < 3; ++i) gamma.col(i) = v[i];
    const BigMat adj = adjugate(gamma);

    // In the basis gamma the first three vectors are coordinate axes, so the
    // form has (near) zero diagonal. v4 and v5 have coordinates proportional
    // to A = adj(gamma) v, and Q(v) ~ 0 gives one linear condition each on the
    // off-diagonal entries (b23, b13, b12).
    const BigVec A4 = apply(adj, v[3]), A5 = apply(adj, v[4]);
    const BigVec c4{A4[1] * A4[2], A4[0] * A4[2], A4[0] * A4[1]};
    const BigVec c5{A5[1] * A5[2], A5[0] * A5[2], A5[0] * A5[1]};
    BigVec n = big_cross(c4, c5);
    const BigInt g = big_gcd(big_gcd(n[0], n[1]), n[2]);
    if (g == 0) throw Error(ErrorKind::NotIntegralizable, "null conditions are dependent");
    for (auto& x : n) x /= g;

    BigMat Pg;
    Pg[0] = {BigInt(0), n[2], n[1]};
    Pg[1] = {n[2], BigInt(0), n[0]};
    Pg[2] = {n[1], n[0], BigInt(0)};

    // The form in the gamma basis must be close to a multiple of Pg.
    const Mat3 Bg = gamma.cast<double>().transpose() * q.matrix() * gamma.cast<double>();
    Mat3 Pgd;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) Pgd(i, j) = static_cast<double>(Pg[i][j]);
    const double mu = (Bg.array() * Pgd.array()).sum() / Pgd.squaredNorm();
    const double scale = std::max(max_abs(Bg), std::numeric_limits<double>::min());
    if (max_abs(Bg - mu * Pgd) > 1e-3 * scale)
        throw Error(ErrorKind::NotIntegralizable, "form is not near an integral form through these vectors");

    // Pull back: P proportional to adj(gamma)^T Pg adj(gamma).
    BigMat P;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            BigInt s = 0;
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) s += adj[k][i] * Pg[k][l] * adj[l][j];
            P[i][j] = s;
        }
    }
    BigInt content = 0;
    for (auto& row : P)
        for (auto& x : row) content = big_gcd(content, x);
    RationalApproximant r;
    for (int i = 0; i < 3; ++i) {
        BigVec row{P[i][0] / content, P[i][1] / content, P[i][2] / content};
        r.P.row(i) = to_ivec(row).transpose();
    }
    const Mat3 Pd = r.P.cast<double>();
    const double det = Pd.determinant();
    if (det == 0) throw Error(ErrorKind::NotIntegralizable, "integral form is degenerate");
    r.lambda = cbrt_inverse(det);
    r.distance = max_abs(q.matrix() - r.lambda * Pd);

    if (q.is_exact()) {
        // Certify Q = c P over the rationals.
        const RMat3& E = *q.exact();
        Rational c = 0;
        for (int i = 0; i < 3 && c == 0; ++i)
            for (int j = 0; j < 3 && c == 0; ++j)
                if (r.P(i, j) != 0) c = E[i][j] / Rational(r.P(i, j));
        bool proportional = c != 0;
        for (int i = 0; i < 3 && proportional; ++i)
            for (int j = 0; j < 3 && proportional; ++j)
                proportional = E[i][j] == c * Rational(r.P(i, j));
        if (proportional) {
            r.exact = true;
            r.distance = 0;
        }
    }
    return r;
}

RationalApproximant diophantine_quality(const QForm& q, int N) {
    if (N <= 0) throw Error(ErrorKind::InvalidArgument, "N must be at least 1");
    if (N > 12)
        throw Error(ErrorKind::BudgetExceeded, "exhaustive search limited to N <= 12; use rational_from_five");
    const Mat3& B = q.matrix();
    const int W = 2 * N + 1;

    struct Best {
        double distance = std::numeric_limits<double>::infinity();
        IMat3 P = IMat3::Zero();
        double lambda = 0;
    };
    std::vector<Best> best(static_cast<std::size_t>(W));
    parallel_for(best.size(), [&](std::size_t task) {
        Best local;
        const std::int64_t p11 = static_cast<std::int64_t>(task) - N;
        for (std::int64_t p22 = -N; p22 <= N; ++p22)
            for (std::int64_t p33 = -N; p33 <= N; ++p33)
                for (std::int64_t p12 = -N; p12 <= N; ++p12)
                    for (std::int64_t p13 = -N; p13 <= N; ++p13)
                        for (std::int64_t p23 = -N; p23 <= N; ++p23) {
                            const std::int64_t det = p11 * (p22 * p33 - p23 * p23) -
                                                     p12 * (p12 * p33 - p23 * p13) +
                                                     p13 * (p12 * p23 - p22 * p13);
                            if (det == 0) continue;
                            const double lam = cbrt_inverse(static_cast<double>(det));
                            const double d = std::max(
                                {std::abs(B(0, 0) - lam * p11), std::abs(B(1, 1) - lam * p22),
                                 std::abs(B(2, 2) - lam * p33), std::abs(B(0, 1) - lam * p12),
                                 std::abs(B(0, 2) - lam * p13), std::abs(B(1, 2) - lam * p23)});
                            if (d < local.distance) {
                                local.distance = d;
                                local.lambda = lam;
                                local.P << p11, p12, p13, p12, p22, p23, p13, p23, p33;
                            }
                        }
        best[task] = local;
    });
    Best overall;
    for (const Best& b : best)
        if (b.distance < overall.distance) overall = b;
    RationalApproximant r;
    r.P = overall.P;
    r.lambda = overall.lambda;
    r.distance = overall.distance;
    return r;
}

}  // namespace opplab
