/**
 * @file summation.hpp
 * @brief Compensated and pairwise summation.
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>

namespace qtwist {

/// Neumaier-compensated running sum of doubles.
class CompensatedSum {
public:
    void add(double x) {
        const double t = s_ + x;
        if (std::abs(s_) >= std::abs(x))
            c_ += (s_ - t) + x;
        else
            c_ += (x - t) + s_;
        s_ = t;
    }
    double value() const { return s_ + c_; }

private:
    double s_ = 0, c_ = 0;
};

/// Componentwise compensated sum for complex values.
class CompensatedSumC {
public:
    void add(std::complex<double> z) {
        re_.add(z.real());
        im_.add(z.imag());
    }
    std::complex<double> value() const { return {re_.value(), im_.value()}; }

private:
    CompensatedSum re_, im_;
};

/// Fixed-shape pairwise reduction: the tree depends only on the length.
template <class T>
T pairwise_sum(std::span<const T> v) {
    if (v.empty()) return T{};
    if (v.size() == 1) return v[0];
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace qtwist
