#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

namespace opplab {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using IVec3 = Eigen::Matrix<std::int64_t, 3, 1>;
using IMat3 = Eigen::Matrix<std::int64_t, 3, 3>;

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;
using RMat3 = std::array<std::array<Rational, 3>, 3>;

enum class NormKind { Euclidean, Max };

const char* to_string(NormKind k);
NormKind parse_norm_kind(const std::string& s);

enum class ErrorKind {
    DegenerateForm,
    NotIndefinite,
    NotNormalized,
    OracleTooLarge,
    BudgetExceeded,
    CoplanarInput,
    SingularBasis,
    NotIntegralizable,
    DomainError,
    NotInH,
    NotMember,
    InvalidArgument,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// Budget-type failures map to a separate CLI exit code.
    bool is_budget() const noexcept {
        return kind_ == ErrorKind::BudgetExceeded || kind_ == ErrorKind::OracleTooLarge;
    }

private:
    ErrorKind kind_;
};

inline Vec3 to_real(const IVec3& v) { return v.cast<double>(); }

std::int64_t gcd3(const IVec3& v);
inline bool is_primitive(const IVec3& v) { return gcd3(v) == 1; }

/// Flips v so that its first nonzero entry is positive.
IVec3 sign_normalized(const IVec3& v);

/// Lexicographic comparison of integer vectors.
inline bool lex_less(const IVec3& a, const IVec3& b) {
    for (int i = 0; i < 3; ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

inline IVec3 cross(const IVec3& a, const IVec3& b) {
    return IVec3(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]);
}

inline std::int64_t det3(const IVec3& a, const IVec3& b, const IVec3& c) { return a.dot(cross(b, c)); }

double norm_of(const Vec3& v, NormKind kind);
inline double norm_of(const IVec3& v, NormKind kind) { return norm_of(to_real(v), kind); }

double max_abs(const Mat3& m);

}  // namespace opplab
