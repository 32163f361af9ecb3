#include "opplab/qform.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace opplab {

namespace {

Mat3 model_matrix() {
    Mat3 b;
    b << 0, 0, 1, 0, -1, 0, 1, 0, 0;
    return b;
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

Rational det_exact(const RMat3& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// Exact cube root of an integer small enough for a double estimate.
std::optional<BigInt> exact_icbrt(const BigInt& n) {
    if (n == 0) return BigInt(0);
    if (abs(n) > BigInt(1) << 62) return std::nullopt;
    const auto v = n.convert_to<long long>();
    const long long c = std::llround(std::cbrt(static_cast<double>(v)));
    for (long long d = c - 1; d <= c + 1; ++d) {
        if (BigInt(d) * d * d == n) return BigInt(d);
    }
    return std::nullopt;
}

std::optional<Rational> exact_rcbrt(const Rational& r) {
    auto num = exact_icbrt(boost::multiprecision::numerator(r));
    auto den = exact_icbrt(boost::multiprecision::denominator(r));
    if (!num || !den) return std::nullopt;
    return Rational(*num, *den);
}

}  // namespace

GroupElement::GroupElement(const Mat3& m) : m_(m) {
    const double d = m.determinant();
    if (!(std::abs(d - 1.0) <= kGroupTol)) {
        throw Error(ErrorKind::DomainError, "group element has det " + std::to_string(d) + " (need 1)");
    }
}

GroupElement wedge_dual(const GroupElement& g) { return GroupElement::unchecked(g.matrix().transpose().inverse()); }

QForm QForm::from_coefficients(double c11, double c22, double c33, double c12, double c13, double c23) {
    if (c11 == 0 && c22 == 0 && c33 == 0 && c12 == 0 && c13 == 0 && c23 == 0) {
        throw Error(ErrorKind::DegenerateForm, "all coefficients are zero");
    }
    Mat3 b;
    b << c11, c12 / 2, c13 / 2, c12 / 2, c22, c23 / 2, c13 / 2, c23 / 2, c33;
    QForm q;
    q.b_ = b;
    return q;
}

QForm QForm::from_matrix(const Mat3& m) {
    if (!m.allFinite()) throw Error(ErrorKind::InvalidArgument, "non-finite form matrix");
    QForm q;
    q.b_ = (m + m.transpose()) / 2;
    if (q.b_.isZero(0)) throw Error(ErrorKind::DegenerateForm, "zero form matrix");
    return q;
}

QForm QForm::from_rational(const RMat3& m) {
    RMat3 s;
    Mat3 b;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            s[i][j] = (m[i][j] + m[j][i]) / 2;
            b(i, j) = to_double(s[i][j]);
        }
    }
    QForm q;
    q.b_ = b;
    q.exact_ = s;
    if (q.b_.isZero(0)) throw Error(ErrorKind::DegenerateForm, "zero form matrix");
    return q;
}

QForm QForm::model() {
    RMat3 m;
    const Mat3 b = model_matrix();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m[i][j] = Rational(static_cast<int>(b(i, j)));
    return from_rational(m);
}

Rational QForm::exact_value(const IVec3& v) const {
    if (!exact_) throw Error(ErrorKind::InvalidArgument, "form has no exact coefficients");
    Rational acc = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) acc += (*exact_)[i][j] * v[i] * v[j];
    return acc;
}

QForm QForm::scaled(double s, const std::optional<Rational>& exact_s) const {
    QForm q;
    q.b_ = b_ * s;
    if (exact_ && exact_s) {
        RMat3 m = *exact_;
        for (auto& row : m)
            for (auto& e : row) e *= *exact_s;
        q.exact_ = m;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) q.b_(i, j) = to_double(m[i][j]);
    }
    return q;
}

Vec3 gradient(const QForm& q, const Vec3& v) { return 2.0 * (q.matrix() * v); }

std::array<Rational, 3> exact_gradient(const QForm& q, const IVec3& v) {
    if (!q.exact()) throw Error(ErrorKind::InvalidArgument, "form has no exact coefficients");
    std::array<Rational, 3> g;
    for (int i = 0; i < 3; ++i) {
        Rational acc = 0;
        for (int j = 0; j < 3; ++j) acc += (*q.exact())[i][j] * v[j];
        g[i] = 2 * acc;
    }
    return g;
}

Signature signature(const QForm& q) {
    const Mat3& b = q.matrix();
    const double scale = max_abs(b);
    if (std::abs(b.determinant()) <= 1e-14 * scale * scale * scale) {
        throw Error(ErrorKind::DegenerateForm, "singular form");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(b, Eigen::EigenvaluesOnly);
    Signature s;
    for (int i = 0; i < 3; ++i) (es.eigenvalues()[i] > 0 ? s.positives : s.negatives)++;
    return s;
}

NormalizedForm normalize_det(const QForm& q) {
    const Signature sig = signature(q);
    if (sig.positives == 0 || sig.negatives == 0) {
        throw Error(ErrorKind::NotIndefinite, "form is definite");
    }
    const double det = q.matrix().determinant();
    const double s = std::cbrt(1.0 / det);
    std::optional<Rational> exact_s;
    if (q.exact()) {
        exact_s = exact_rcbrt(Rational(1) / det_exact(*q.exact()));
    }
    NormalizedForm out{q.scaled(s, exact_s), s};
    if (exact_s) out.scale = to_double(*exact_s);
    return out;
}

bool is_normalized(const QForm& q) {
    if (std::abs(q.matrix().determinant() - 1.0) > kGroupTol) return false;
    const Signature sig = signature(q);
    return sig.positives == 1 && sig.negatives == 2;
}

GroupElement factor_gq(const QForm& q) {
    const Signature sig = signature(q);
    if (sig.positives == 0 || sig.negatives == 0) throw Error(ErrorKind::NotIndefinite, "form is definite");
    if (!is_normalized(q)) throw Error(ErrorKind::NotNormalized, "factor_gq needs det 1 and signature (1,2)");

    const Mat3& b = q.matrix();
    if (b == model_matrix()) return GroupElement::identity();

    Eigen::SelfAdjointEigenSolver<Mat3> es(b);
    // Eigenvalues ascend: two negatives, then the positive one.
    const Vec3 lam = es.eigenvalues();
    Mat3 o;
    o.col(0) = es.eigenvectors().col(2);
    o.col(1) = es.eigenvectors().col(0);
    o.col(2) = es.eigenvectors().col(1);
    const Vec3 mu(lam[2], -lam[0], -lam[1]);
    const double r = 1.0 / std::sqrt(2.0);
    Mat3 s;
    s << r, 0, r, 0, 1, 0, r, 0, -r;
    const Mat3 d = mu.cwiseSqrt().asDiagonal();
    Mat3 g = s * d * o.transpose();
    if (g.determinant() < 0) {
        o.col(2) = -o.col(2);
        g = s * d * o.transpose();
    }
    return GroupElement::unchecked(g);
}

QForm dual(const QForm& q) {
    const double det = q.matrix().determinant();
    const double scale = q.norm();
    if (std::abs(det) <= 1e-14 * scale * scale * scale) throw Error(ErrorKind::DegenerateForm, "singular form");
    return QForm::from_matrix(q.matrix().inverse());
}

std::string canonical_string(const QForm& q) {
    std::ostringstream os;
    char buf[32];
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", q.matrix()(i, j));
            os << (i + j ? "," : "") << buf;
        }
    }
    return os.str();
}

std::string form_hash(const QForm& q) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canonical_string(q)) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace opplab
