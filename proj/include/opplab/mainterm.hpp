#pragma once

#include <cstdint>
#include <string>

#include "opplab/qform.hpp"

namespace opplab {

struct CqEstimate {
    double value = 0;
    std::string method;  // "quadrature" or "montecarlo"
    double stderr_ = 0;
    std::int64_t samples_or_nodes = 0;
};

/// Main-term constant: surface integral of 1/|grad Q| over the null cone
/// inside the unit ball of `norm`. Adaptive Gauss-Kronrod in the angle of
/// the principal frame; the radial integral is done in closed form.
CqEstimate cq_quadrature(const QForm& q, double tol, NormKind norm = NormKind::Euclidean);

/// vol{||v|| <= T_ref, |Q(v)| <= width/2} / (width T_ref) by uniform sampling.
/// Samples are drawn in fixed blocks with one RNG stream per block, so the
/// result depends on the seed only.
CqEstimate cq_montecarlo(const QForm& q, std::int64_t samples, double T_ref, double width, std::uint64_t seed,
                         NormKind norm = NormKind::Euclidean);

}  // namespace opplab
