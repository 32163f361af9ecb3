#pragma once

#include <optional>

#include "opplab/types.hpp"

namespace opplab {

/// Tolerance for group identities (det, products, inverses).
inline constexpr double kGroupTol = 1e-10;
/// Relative tolerance for factorization round trips.
inline constexpr double kFactorTol = 1e-8;

/// Element of SL3(R). The checked constructor enforces |det - 1| <= 1e-10;
/// internal code building products of known group elements uses unchecked().
class GroupElement {
public:
    GroupElement() : m_(Mat3::Identity()) {}
    explicit GroupElement(const Mat3& m);

    static GroupElement unchecked(const Mat3& m) {
        GroupElement g;
        g.m_ = m;
        return g;
    }
    static GroupElement identity() { return GroupElement(); }

    const Mat3& matrix() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

    GroupElement operator*(const GroupElement& o) const { return unchecked(m_ * o.m_); }
    Vec3 operator*(const Vec3& v) const { return m_ * v; }
    Vec3 operator*(const IVec3& v) const { return m_ * to_real(v); }

    GroupElement inverse() const { return unchecked(m_.inverse()); }

private:
    Mat3 m_;
};

/// (g^T)^{-1}; satisfies (g v1) x (g v2) = g* (v1 x v2) for unimodular g.
GroupElement wedge_dual(const GroupElement& g);

struct Signature {
    int positives = 0;
    int negatives = 0;
    bool operator==(const Signature&) const = default;
};

/// Real symmetric ternary quadratic form Q(v) = v^T B v, with an optional
/// exact rational image of B.
class QForm {
public:
    /// Q(v) = sum c_ii v_i^2 + sum_{i<j} c_ij v_i v_j.
    static QForm from_coefficients(double c11, double c22, double c33, double c12, double c13, double c23);
    /// Symmetrizes the input.
    static QForm from_matrix(const Mat3& m);
    static QForm from_rational(const RMat3& m);

    /// Q0 = 2xz - y^2.
    static QForm model();

    const Mat3& matrix() const { return b_; }
    const std::optional<RMat3>& exact() const { return exact_; }
    bool is_exact() const { return exact_.has_value(); }

    /// Max-abs entry of B.
    double norm() const { return max_abs(b_); }

    double operator()(const IVec3& v) const { return evaluate(b_, v); }
    double operator()(const Vec3& v) const { return v.dot(b_ * v); }

    /// Exact value; requires is_exact().
    Rational exact_value(const IVec3& v) const;

    /// The one evaluation used by every counting path; fixed operation
    /// order so that all enumerators agree bit for bit.
    static double evaluate(const Mat3& b, const IVec3& v) {
        const double x = static_cast<double>(v[0]);
        const double y = static_cast<double>(v[1]);
        const double z = static_cast<double>(v[2]);
        return b(0, 0) * x * x + b(1, 1) * y * y + b(2, 2) * z * z +
               2.0 * (b(0, 1) * x * y + b(0, 2) * x * z + b(1, 2) * y * z);
    }

    /// Multiplies the form by s; exactness survives when s is rational.
    QForm scaled(double s, const std::optional<Rational>& exact_s = std::nullopt) const;

private:
    Mat3 b_ = Mat3::Zero();
    std::optional<RMat3> exact_;
};

inline double evaluate(const QForm& q, const IVec3& v) { return q(v); }
inline double evaluate(const QForm& q, const Vec3& v) { return q(v); }

/// 2 B v.
Vec3 gradient(const QForm& q, const Vec3& v);
/// Exact gradient 2 B v for rational forms and integer vectors.
std::array<Rational, 3> exact_gradient(const QForm& q, const IVec3& v);

Signature signature(const QForm& q);

struct NormalizedForm {
    QForm form;
    double scale = 1.0;
};

/// s Q with det = 1 and signature (1,2).
NormalizedForm normalize_det(const QForm& q);

/// True when det B = 1 within kGroupTol and the signature is (1,2).
bool is_normalized(const QForm& q);

/// g_Q in SL3(R) with g_Q^T B0 g_Q = B_Q.
GroupElement factor_gq(const QForm& q);

/// Form with matrix B^{-1}.
QForm dual(const QForm& q);

/// Canonical 17-significant-digit serialization of B.
std::string canonical_string(const QForm& q);
/// FNV-1a 64 of canonical_string, as 16 hex digits.
std::string form_hash(const QForm& q);

}  // namespace opplab
