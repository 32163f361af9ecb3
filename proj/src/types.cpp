#include "opplab/types.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>

#include "opplab/parallel.hpp"

namespace opplab {

const char* to_string(NormKind k) { return k == NormKind::Euclidean ? "euclidean" : "max"; }

NormKind parse_norm_kind(const std::string& s) {
    if (s == "euclidean") return NormKind::Euclidean;
    if (s == "max") return NormKind::Max;
    throw Error(ErrorKind::InvalidArgument, "unknown norm '" + s + "' (expected euclidean|max)");
}

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::DegenerateForm: return "DegenerateForm";
        case ErrorKind::NotIndefinite: return "NotIndefinite";
        case ErrorKind::NotNormalized: return "NotNormalized";
        case ErrorKind::OracleTooLarge: return "OracleTooLarge";
        case ErrorKind::BudgetExceeded: return "BudgetExceeded";
        case ErrorKind::CoplanarInput: return "CoplanarInput";
        case ErrorKind::SingularBasis: return "SingularBasis";
        case ErrorKind::NotIntegralizable: return "NotIntegralizable";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::NotInH: return "NotInH";
        case ErrorKind::NotMember: return "NotMember";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Error";
}

std::int64_t gcd3(const IVec3& v) {
    return std::gcd(std::gcd(std::llabs(v[0]), std::llabs(v[1])), std::llabs(v[2]));
}

IVec3 sign_normalized(const IVec3& v) {
    for (int i = 0; i < 3; ++i) {
        if (v[i] != 0) return v[i] < 0 ? IVec3(-v) : v;
    }
    return v;
}

double norm_of(const Vec3& v, NormKind kind) {
    return kind == NormKind::Euclidean ? v.norm() : v.cwiseAbs().maxCoeff();
}

double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

unsigned worker_count() {
    if (const char* env = std::getenv("OPPLAB_THREADS")) {
        long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

}  // namespace opplab
