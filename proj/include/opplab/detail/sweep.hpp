#pragma once

// Fiberwise enumeration of integer points v = M w (w in Z^d, d <= 3) inside a
// norm ball of radius T, optionally restricted to a value window a <= Q(v) <= b.
//
// For fixed outer coordinates the fiber coordinate x enters both constraints
// quadratically, so the admissible set is a union of at most a few intervals.
// Floating roots only place breakpoints: each breakpoint r gets a two-point
// window {floor r, floor r + 1} that is tested with the exact predicate, and
// between windows the predicate is constant, so a single probe decides each
// gap. Correct as long as every computed root is within 1 of the true one.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>

#include "opplab/qform.hpp"
#include "opplab/types.hpp"

namespace opplab::detail {

/// Real roots of A x^2 + 2 beta x + C = 0, numerically stable form.
/// Returns the number of roots written (0, 1 or 2).
inline int quadratic_roots(double A, double beta, double C, double out[2]) {
    if (A == 0.0) {
        if (beta == 0.0) return 0;
        out[0] = -C / (2.0 * beta);
        return 1;
    }
    double disc = beta * beta - A * C;
    if (disc < 0.0) return 0;
    const double sq = std::sqrt(disc);
    const double q = -(beta + std::copysign(sq, beta));
    if (q == 0.0) {
        out[0] = -beta / A;
        return 1;
    }
    out[0] = q / A;
    out[1] = C / q;
    return 2;
}

struct Fiber {
    IVec3 base = IVec3::Zero();  // v at x = 0
    IVec3 step = IVec3::Zero();  // increment per unit x
    std::int64_t lo = 0, hi = -1;  // integer domain (superset of the region)
    double region_lo = 0, region_hi = 0;
    // Q(base + x step) = qa x^2 + 2 qb x + qc
    double qa = 0, qb = 0, qc = 0;
    bool base_is_zero = false;
};

class ShellSweep {
public:
    ShellSweep(std::span<const IVec3> basis, NormKind kind, double T)
        : d_(static_cast<int>(basis.size())), kind_(kind), T_(T), T2_(T * T) {
        if (d_ < 1 || d_ > 3) throw Error(ErrorKind::InvalidArgument, "sweep dimension must be 1..3");
        for (int i = 0; i < d_; ++i) m_[i] = basis[i];
        compute_bounds();
    }

    void set_window(const Mat3& b, double lo, double hi) {
        window_ = true;
        b_ = b;
        a_ = lo;
        bwin_ = hi;
    }

    void set_fiber_axis(int k) {
        axis_ = k;
        int n = 0;
        for (int i = 0; i < d_; ++i)
            if (i != k) outer_[n++] = i;
    }

    /// Axis with largest |Q(m_i)|; the natural fiber choice for value windows.
    int best_value_axis(const Mat3& b) const {
        int best = 0;
        double best_val = -1;
        for (int i = 0; i < d_; ++i) {
            const double c = std::abs(QForm::evaluate(b, m_[i]));
            if (c > best_val) {
                best_val = c;
                best = i;
            }
        }
        return best;
    }

    int dim() const { return d_; }
    NormKind kind() const { return kind_; }
    double radius() const { return T_; }

    bool in_region(const IVec3& v) const {
        if (kind_ == NormKind::Euclidean) return static_cast<double>(v.squaredNorm()) <= T2_;
        return std::abs(static_cast<double>(v[0])) <= T_ && std::abs(static_cast<double>(v[1])) <= T_ &&
               std::abs(static_cast<double>(v[2])) <= T_;
    }

    bool in_window(const IVec3& v) const {
        if (!window_) return true;
        const double q = QForm::evaluate(b_, v);
        return a_ <= q && q <= bwin_;
    }

    /// The exact membership predicate (v = 0 is never counted).
    bool contains(const IVec3& v) const {
        if (v[0] == 0 && v[1] == 0 && v[2] == 0) return false;
        return in_region(v) && in_window(v);
    }

    /// Tasks partition the first outer coordinate; a 1-dimensional sweep has one task.
    std::size_t task_count() const {
        if (d_ == 1) return 1;
        return static_cast<std::size_t>(2 * bound_[outer_[0]] + 1);
    }

    template <class OnFiber>
    void run_task(std::size_t task, OnFiber&& on_fiber) const {
        IVec3 w = IVec3::Zero();
        if (d_ == 1) {
            emit_fiber(w, on_fiber);
            return;
        }
        const int p = outer_[0];
        w[p] = static_cast<std::int64_t>(task) - bound_[p];
        if (d_ == 2) {
            emit_fiber(w, on_fiber);
            return;
        }
        const int q = outer_[1];
        std::int64_t qlo = -bound_[q], qhi = bound_[q];
        slice_range(p, q, w[p], qlo, qhi);
        for (std::int64_t j = qlo; j <= qhi; ++j) {
            w[q] = j;
            emit_fiber(w, on_fiber);
        }
    }

    /// Walks one fiber. on_hit(v) for individually tested members, on_run(base,
    /// step, x0, x1) for a gap [x0, x1] in which every point is a member.
    /// Returns false when the fiber had non-finite breakpoints and was
    /// enumerated point by point instead.
    template <class OnHit, class OnRun>
    bool scan_fiber(const Fiber& f, OnHit&& on_hit, OnRun&& on_run) const {
        if (f.lo > f.hi) return true;
        double pts[12];
        int n = 0;
        auto add = [&](double r) { pts[n++] = r; };
        add(f.region_lo);
        add(f.region_hi);
        if (f.base_is_zero) add(0.0);
        bool finite = std::isfinite(f.region_lo) && std::isfinite(f.region_hi);
        if (window_) {
            double r[2];
            for (double level : {a_, bwin_}) {
                const int k = quadratic_roots(f.qa, f.qb, f.qc - level, r);
                for (int i = 0; i < k; ++i) {
                    if (!std::isfinite(r[i])) finite = false;
                    add(r[i]);
                }
            }
            if (f.qa != 0.0) {
                const double vtx = -f.qb / f.qa;
                if (!std::isfinite(vtx)) finite = false;
                add(vtx);
            }
        }
        if (!finite) {
            for (std::int64_t x = f.lo; x <= f.hi; ++x) {
                const IVec3 v = f.base + x * f.step;
                if (contains(v)) on_hit(v);
            }
            return false;
        }

        std::int64_t starts[12];
        int ns = 0;
        const double dlo = static_cast<double>(f.lo), dhi = static_cast<double>(f.hi);
        for (int i = 0; i < n; ++i) {
            if (pts[i] < dlo - 2 || pts[i] > dhi + 2) continue;
            starts[ns++] = static_cast<std::int64_t>(std::floor(pts[i]));
        }
        std::sort(starts, starts + ns);

        std::int64_t cur = f.lo;
        auto gap = [&](std::int64_t x0, std::int64_t x1) {
            if (x0 > x1) return;
            const std::int64_t mid = x0 + (x1 - x0) / 2;
            if (contains(f.base + mid * f.step)) on_run(f.base, f.step, x0, x1);
        };
        for (int i = 0; i < ns; ++i) {
            std::int64_t ws = std::max(starts[i], f.lo);
            const std::int64_t we = std::min(starts[i] + 1, f.hi);
            if (we < cur) continue;
            ws = std::max(ws, cur);
            gap(cur, ws - 1);
            for (std::int64_t x = ws; x <= we; ++x) {
                const IVec3 v = f.base + x * f.step;
                if (contains(v)) on_hit(v);
            }
            cur = we + 1;
        }
        gap(cur, f.hi);
        return true;
    }

private:
    void compute_bounds() {
        Eigen::Matrix<double, 3, Eigen::Dynamic> M(3, d_);
        for (int i = 0; i < d_; ++i) M.col(i) = m_[i].cast<double>();
        const Eigen::MatrixXd G = M.transpose() * M;
        ginv_ = G.inverse();
        for (int i = 0; i < d_; ++i) {
            double r;
            if (kind_ == NormKind::Euclidean) {
                r = T_ * std::sqrt(ginv_(i, i));
            } else {
                const Eigen::MatrixXd pinv = ginv_ * M.transpose();
                r = T_ * pinv.row(i).cwiseAbs().sum();
            }
            bound_[i] = static_cast<std::int64_t>(std::floor(r)) + 1;
        }
        set_fiber_axis(d_ - 1);
    }

    // Range of w_q given w_p, from the projection of the ellipsoid onto (p, q).
    void slice_range(int p, int q, std::int64_t wp, std::int64_t& lo, std::int64_t& hi) const {
        if (kind_ != NormKind::Euclidean) return;
        Eigen::Matrix2d sub;
        sub << ginv_(p, p), ginv_(p, q), ginv_(q, p), ginv_(q, q);
        const Eigen::Matrix2d h = sub.inverse();
        double r[2];
        const double x = static_cast<double>(wp);
        const int k = quadratic_roots(h(1, 1), h(0, 1) * x, h(0, 0) * x * x - T2_, r);
        if (k < 2) {
            lo = 1;
            hi = 0;
            // Tangent slice: keep a small neighbourhood of the vertex.
            const double vtx = -h(0, 1) * x / h(1, 1);
            if (std::isfinite(vtx)) {
                lo = static_cast<std::int64_t>(std::floor(vtx)) - 1;
                hi = lo + 3;
            }
            return;
        }
        const double r0 = std::min(r[0], r[1]), r1 = std::max(r[0], r[1]);
        lo = std::max(lo, static_cast<std::int64_t>(std::floor(r0)) - 1);
        hi = std::min(hi, static_cast<std::int64_t>(std::ceil(r1)) + 1);
    }

    template <class OnFiber>
    void emit_fiber(const IVec3& w, OnFiber&& on_fiber) const {
        Fiber f;
        f.base = IVec3::Zero();
        for (int i = 0; i < d_; ++i)
            if (i != axis_) f.base += w[i] * m_[i];
        f.step = m_[axis_];
        f.base_is_zero = f.base.isZero();
        const Vec3 b = f.base.cast<double>(), s = f.step.cast<double>();

        if (kind_ == NormKind::Euclidean) {
            double r[2];
            const int k = quadratic_roots(s.dot(s), b.dot(s), b.dot(b) - T2_, r);
            if (k < 2) {
                const double vtx = -b.dot(s) / s.dot(s);
                // Disjoint from the ball up to rounding; probe the vertex only.
                if (k == 0 && b.dot(b) - b.dot(s) * b.dot(s) / s.dot(s) > T2_ * (1 + 1e-12) + 1) return;
                r[0] = r[1] = vtx;
            }
            f.region_lo = std::min(r[0], r[1]);
            f.region_hi = std::max(r[0], r[1]);
        } else {
            double lo = -HUGE_VAL, hi = HUGE_VAL;
            for (int i = 0; i < 3; ++i) {
                if (s[i] == 0) {
                    if (std::abs(b[i]) > T_) return;
                    continue;
                }
                double e0 = (-T_ - b[i]) / s[i], e1 = (T_ - b[i]) / s[i];
                if (e0 > e1) std::swap(e0, e1);
                lo = std::max(lo, e0);
                hi = std::min(hi, e1);
            }
            if (lo > hi + 2) return;
            f.region_lo = lo;
            f.region_hi = hi;
        }
        f.lo = static_cast<std::int64_t>(std::floor(f.region_lo)) - 1;
        f.hi = static_cast<std::int64_t>(std::ceil(f.region_hi)) + 1;
        if (window_) {
            f.qa = s.dot(b_ * s);
            f.qb = b.dot(b_ * s);
            f.qc = b.dot(b_ * b);
        }
        on_fiber(f);
    }

    int d_;
    NormKind kind_;
    double T_, T2_;
    std::array<IVec3, 3> m_{};
    std::array<std::int64_t, 3> bound_{};
    Eigen::MatrixXd ginv_;
    int axis_ = 0;
    std::array<int, 2> outer_{};
    bool window_ = false;
    Mat3 b_ = Mat3::Zero();
    double a_ = 0, bwin_ = 0;
};

}  // namespace opplab::detail
