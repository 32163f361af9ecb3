#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "opplab/qform.hpp"

namespace opplab::testing {

inline QForm q0() { return QForm::model(); }

/// sqrt(2) x^2 - y^2 - z^2 / sqrt(2); det 1, irrational.
inline QForm q1() {
    Mat3 b = Mat3::Zero();
    b(0, 0) = std::sqrt(2.0);
    b(1, 1) = -1.0;
    b(2, 2) = -1.0 / std::sqrt(2.0);
    return QForm::from_matrix(b);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

/// Random element of SL3(R) with entries of moderate size.
inline Mat3 random_sl3(std::mt19937_64& rng) {
    for (;;) {
        Mat3 m;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m(i, j) = uniform(rng, -1.5, 1.5);
        double d = m.determinant();
        if (std::abs(d) < 0.2) continue;
        if (d < 0) {
            m.col(0) = -m.col(0);
            d = -d;
        }
        return m / std::cbrt(d);
    }
}

/// Random integer matrix with det 1 (product of elementary moves).
inline IMat3 random_unimodular(std::mt19937_64& rng, int moves = 6) {
    IMat3 u = IMat3::Identity();
    std::uniform_int_distribution<int> idx(0, 2), coef(-2, 2);
    for (int s = 0; s < moves; ++s) {
        int i = idx(rng), j = idx(rng);
        if (i == j) continue;
        u.col(i) += coef(rng) * u.col(j);
    }
    return u;
}

/// Q0 o g for random g in SL3(R): a random normalized form.
inline QForm random_normalized_form(std::mt19937_64& rng) {
    const Mat3 g = random_sl3(rng);
    Mat3 b0;
    b0 << 0, 0, 1, 0, -1, 0, 1, 0, 0;
    return normalize_det(QForm::from_matrix(g.transpose() * b0 * g)).form;
}

}  // namespace opplab::testing
