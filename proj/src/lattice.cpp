#include "opplab/lattice.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "opplab/detail/sweep.hpp"
#include "opplab/parallel.hpp"

namespace opplab {

namespace {

void require_normalized(const QForm& q) {
    const Signature sig = signature(q);
    if (sig.positives == 0 || sig.negatives == 0) throw Error(ErrorKind::NotIndefinite, "form is definite");
    if (!is_normalized(q)) throw Error(ErrorKind::NotNormalized, "form must have det 1 and signature (1,2)");
}

void require_window(double a, double b, double T) {
    if (!(a <= b)) throw Error(ErrorKind::DomainError, "need a <= b");
    if (!(T >= 1)) throw Error(ErrorKind::DomainError, "need T >= 1");
}

// Identity basis, or the elementary shear e_i -> e_i + e_j maximizing the
// new diagonal coefficient when every |B_kk| is below 1e-6.
std::array<IVec3, 3> counting_basis(const Mat3& b, bool& sheared) {
    std::array<IVec3, 3> basis{IVec3(1, 0, 0), IVec3(0, 1, 0), IVec3(0, 0, 1)};
    sheared = false;
    if (b.diagonal().cwiseAbs().maxCoeff() >= 1e-6) return basis;
    double best = -1;
    int bi = 0, bj = 1;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i == j) continue;
            const double c = std::abs(b(i, i) + 2 * b(i, j) + b(j, j));
            if (c > best) {
                best = c;
                bi = i;
                bj = j;
            }
        }
    }
    basis[bi][bj] = 1;
    sheared = true;
    return basis;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

CountResult count_in_shell(const QForm& q, double a, double b, double T, bool primitive_only, NormKind norm) {
    require_window(a, b, T);
    require_normalized(q);
    const auto t0 = std::chrono::steady_clock::now();

    CountResult res;
    res.T = T;
    res.a = a;
    res.b = b;
    res.primitive_only = primitive_only;
    res.norm_kind = norm;

    const auto basis = counting_basis(q.matrix(), res.sheared);
    detail::ShellSweep sweep(basis, norm, T);
    sweep.set_window(q.matrix(), a, b);
    sweep.set_fiber_axis(sweep.best_value_axis(q.matrix()));

    const std::size_t tasks = sweep.task_count();
    std::vector<std::int64_t> counts(tasks, 0);
    std::vector<char> fallback(tasks, 0);
    parallel_for(tasks, [&](std::size_t t) {
        std::int64_t c = 0;
        bool fb = false;
        sweep.run_task(t, [&](const detail::Fiber& f) {
            const bool ok = sweep.scan_fiber(
                f,
                [&](const IVec3& v) {
                    if (!primitive_only || gcd3(v) == 1) ++c;
                },
                [&](const IVec3& base, const IVec3& step, std::int64_t x0, std::int64_t x1) {
                    if (!primitive_only) {
                        c += x1 - x0 + 1;
                        return;
                    }
                    for (std::int64_t x = x0; x <= x1; ++x)
                        if (gcd3(base + x * step) == 1) ++c;
                });
            fb = fb || !ok;
        });
        counts[t] = c;
        fallback[t] = fb;
    });
    res.total = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
    res.fallback_used = std::find(fallback.begin(), fallback.end(), 1) != fallback.end();
    res.elapsed = elapsed_since(t0);
    return res;
}

CountResult count_bruteforce(const QForm& q, double a, double b, double T, bool primitive_only, NormKind norm) {
    require_window(a, b, T);
    if (T > 200) throw Error(ErrorKind::OracleTooLarge, "brute-force oracle limited to T <= 200");
    const auto t0 = std::chrono::steady_clock::now();
    const auto n = static_cast<std::int64_t>(std::floor(T));
    const double T2 = T * T;
    const Mat3& B = q.matrix();
    std::int64_t total = 0;
    for (std::int64_t x = -n; x <= n; ++x) {
        for (std::int64_t y = -n; y <= n; ++y) {
            for (std::int64_t z = -n; z <= n; ++z) {
                if (x == 0 && y == 0 && z == 0) continue;
                if (norm == NormKind::Euclidean && static_cast<double>(x * x + y * y + z * z) > T2) continue;
                const IVec3 v(x, y, z);
                const double val = QForm::evaluate(B, v);
                if (val < a || val > b) continue;
                if (primitive_only && gcd3(v) != 1) continue;
                ++total;
            }
        }
    }
    CountResult res;
    res.T = T;
    res.a = a;
    res.b = b;
    res.total = total;
    res.primitive_only = primitive_only;
    res.norm_kind = norm;
    res.elapsed = elapsed_since(t0);
    return res;
}

namespace {

struct Candidate {
    double residual = std::numeric_limits<double>::infinity();
    std::int64_t size = std::numeric_limits<std::int64_t>::max();
    IVec3 v = IVec3::Zero();

    bool better_than(const Candidate& o) const {
        if (residual != o.residual) return residual < o.residual;
        if (size != o.size) return size < o.size;
        for (int i = 0; i < 3; ++i)
            if (v[i] != o.v[i]) return v[i] > o.v[i];
        return false;
    }
};

std::int64_t integer_size(const IVec3& v, NormKind norm) {
    return norm == NormKind::Euclidean ? v.squaredNorm() : v.cwiseAbs().maxCoeff();
}

}  // namespace

MinValueResult min_value_solve(const QForm& q, double s, double T, NormKind norm) {
    if (!(T >= 1)) throw Error(ErrorKind::DomainError, "need T >= 1");
    const Mat3& B = q.matrix();

    Candidate seed;
    auto offer = [&](Candidate& best, const IVec3& v) -> double {
        const double r = std::abs(QForm::evaluate(B, v) - s);
        if (r > best.residual) return r;
        if (gcd3(v) != 1) return r;
        Candidate c{r, integer_size(v, norm), sign_normalized(v)};
        if (c.better_than(best)) best = c;
        return r;
    };
    for (const IVec3& e : {IVec3(1, 0, 0), IVec3(0, 1, 0), IVec3(0, 0, 1)}) offer(seed, e);

    bool sheared = false;
    const auto basis = counting_basis(B, sheared);
    detail::ShellSweep sweep(basis, norm, T);
    sweep.set_window(B, s, s);
    sweep.set_fiber_axis(sweep.best_value_axis(B));

    const std::size_t tasks = sweep.task_count();
    std::vector<Candidate> bests(tasks, seed);
    parallel_for(tasks, [&](std::size_t t) {
        Candidate best = seed;
        sweep.run_task(t, [&](const detail::Fiber& f) {
            auto at = [&](std::int64_t x) -> IVec3 { return f.base + x * f.step; };
            // Exact integer extent of the region along the fiber.
            std::int64_t xlo = std::max(f.lo, static_cast<std::int64_t>(std::ceil(f.region_lo)));
            while (xlo <= f.hi && !sweep.in_region(at(xlo))) ++xlo;
            while (xlo - 1 >= f.lo && sweep.in_region(at(xlo - 1))) --xlo;
            if (xlo > f.hi) return;
            std::int64_t xhi = std::min(f.hi, static_cast<std::int64_t>(std::floor(f.region_hi)));
            if (xhi < xlo) xhi = xlo;
            while (xhi > xlo && !sweep.in_region(at(xhi))) --xhi;
            while (xhi + 1 <= f.hi && sweep.in_region(at(xhi + 1))) ++xhi;

            double seeds[2];
            int ns = detail::quadratic_roots(f.qa, f.qb, f.qc - s, seeds);
            if (ns == 0) {
                seeds[0] = f.qa != 0.0 ? -f.qb / f.qa : static_cast<double>(xlo);
                ns = 1;
            }
            auto scan = [&](std::int64_t x0) {
                for (std::int64_t x = x0; x <= xhi; ++x) {
                    const IVec3 v = at(x);
                    if (v.isZero()) continue;
                    if (offer(best, v) > best.residual) break;
                }
                for (std::int64_t x = x0 - 1; x >= xlo; --x) {
                    const IVec3 v = at(x);
                    if (v.isZero()) continue;
                    if (offer(best, v) > best.residual) break;
                }
            };
            for (int i = 0; i < ns; ++i) {
                double r = seeds[i];
                if (!std::isfinite(r)) r = static_cast<double>(xlo);
                r = std::clamp(r, static_cast<double>(xlo), static_cast<double>(xhi));
                const auto fl = static_cast<std::int64_t>(std::floor(r));
                scan(std::clamp(fl, xlo, xhi));
                scan(std::clamp(fl + 1, xlo, xhi));
            }
        });
        bests[t] = best;
    });
    Candidate best = seed;
    for (const Candidate& c : bests)
        if (c.better_than(best)) best = c;
    return {best.v, best.residual};
}

ReducedBasis reduce_basis(const Mat3& g) {
    std::array<Vec3, 3> b{g.col(0), g.col(1), g.col(2)};
    std::array<IVec3, 3> u{IVec3(1, 0, 0), IVec3(0, 1, 0), IVec3(0, 0, 1)};
    auto n2 = [&](int i) { return b[i].squaredNorm(); };
    auto sort_basis = [&] {
        for (int i = 1; i < 3; ++i)
            for (int j = i; j > 0 && n2(j) < n2(j - 1); --j) {
                std::swap(b[j], b[j - 1]);
                std::swap(u[j], u[j - 1]);
            }
    };

    for (int iter = 0; iter < 500; ++iter) {
        sort_basis();
        // Lagrange reduction of the first two vectors.
        for (int inner = 0; inner < 500; ++inner) {
            const double mu = std::round(b[0].dot(b[1]) / b[0].squaredNorm());
            if (mu != 0) {
                b[1] -= mu * b[0];
                u[1] -= static_cast<std::int64_t>(mu) * u[0];
            }
            if (n2(1) < n2(0)) {
                std::swap(b[0], b[1]);
                std::swap(u[0], u[1]);
            } else {
                break;
            }
        }
        // Closest vector to b2 in the plane lattice spanned by b0, b1.
        Eigen::Matrix2d gram;
        gram << b[0].dot(b[0]), b[0].dot(b[1]), b[1].dot(b[0]), b[1].dot(b[1]);
        const Eigen::Vector2d c = gram.ldlt().solve(Eigen::Vector2d(b[2].dot(b[0]), b[2].dot(b[1])));
        const double r0 = std::round(c[0]), r1 = std::round(c[1]);
        double best = b[2].squaredNorm();
        double bc0 = 0, bc1 = 0;
        for (double c0 = r0 - 1; c0 <= r0 + 1; ++c0) {
            for (double c1 = r1 - 1; c1 <= r1 + 1; ++c1) {
                const double d = (b[2] - c0 * b[0] - c1 * b[1]).squaredNorm();
                if (d < best) {
                    best = d;
                    bc0 = c0;
                    bc1 = c1;
                }
            }
        }
        b[2] -= bc0 * b[0] + bc1 * b[1];
        u[2] -= static_cast<std::int64_t>(bc0) * u[0] + static_cast<std::int64_t>(bc1) * u[1];
        if (!(n2(2) < n2(1))) break;
    }
    sort_basis();

    ReducedBasis rb;
    for (int i = 0; i < 3; ++i) {
        rb.basis.col(i) = b[i];
        rb.unimodular.col(i) = u[i];
    }
    return rb;
}

LatticeVectorReport shortest_vector(const GroupElement& g) {
    const ReducedBasis rb = reduce_basis(g.matrix());
    double best = std::numeric_limits<double>::infinity();
    IVec3 best_c = IVec3::Zero();
    for (int i = -2; i <= 2; ++i) {
        for (int j = -2; j <= 2; ++j) {
            for (int k = -2; k <= 2; ++k) {
                if (i == 0 && j == 0 && k == 0) continue;
                const double n = (rb.basis * Vec3(i, j, k)).squaredNorm();
                if (n < best) {
                    best = n;
                    best_c = IVec3(i, j, k);
                }
            }
        }
    }
    LatticeVectorReport rep;
    rep.vector = rb.unimodular * best_c;
    rep.image_norm = (g * rep.vector).norm();
    rep.is_primitive = gcd3(rep.vector) == 1;
    return rep;
}

double alpha(const GroupElement& g, int index) {
    if (index == 1) return 1.0 / shortest_vector(g).image_norm;
    if (index == 2) return 1.0 / shortest_vector(wedge_dual(g)).image_norm;
    throw Error(ErrorKind::DomainError, "alpha index must be 1 or 2");
}

std::vector<UpperBoundRow> upper_bound_check(const QForm& q, double M, double s_max, double s_min, double eta,
                                             NormKind norm) {
    if (!(M >= 0)) throw Error(ErrorKind::DomainError, "need M >= 0");
    if (!(s_min >= 0) || s_max < s_min) throw Error(ErrorKind::DomainError, "need 0 <= s_min <= s_max");
    std::vector<UpperBoundRow> rows;
    for (double s = s_min; s <= s_max + 1e-12; s += 1.0) {
        const CountResult c = count_in_shell(q, -M, M, std::exp(s), false, norm);
        rows.push_back({s, c.total, static_cast<double>(c.total) / std::exp((1 + eta) * s)});
    }
    return rows;
}

}  // namespace opplab
