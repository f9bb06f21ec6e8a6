/**
 * @file gauss_sums.hpp
 * @brief tau_k(s) and G_k(s) for odd s: brute force and the prime-power product.
 */
#pragma once

#include <complex>
#include <vector>

#include "qtwist/arith.hpp"

namespace qtwist {

using cplx = std::complex<double>;

struct GaussSumValue {
    cplx value;
    u64 s;
    i64 k;
};

/// sum_{b mod s} (b|s) e(bk/s)
cplx tau_k_brute(i64 k, u64 s);
/// ((1-i)/2 + (-1|s)(1+i)/2) tau_k(s)
cplx G_brute(i64 k, u64 s);
/// Product of the prime-power table over p^beta || s.
cplx G_formula(i64 k, u64 s);

/// G_k(s) for fixed s and many k: factorization and square roots done once.
class GaussSumFormula {
public:
    explicit GaussSumFormula(u64 s);
    u64 modulus() const { return s_; }
    cplx operator()(i64 k) const;

private:
    struct Local {
        u64 p;
        int beta;
        double sqrt_p;
    };
    u64 s_;
    std::vector<Local> parts_;
};

}  // namespace qtwist
