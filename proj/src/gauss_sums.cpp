/**
 * @file gauss_sums.cpp
 */
#include "qtwist/gauss_sums.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qtwist {

namespace {

void require_odd(u64 s) {
    if (s == 0 || s % 2 == 0) throw std::domain_error("Gauss-type sums need an odd positive modulus");
}

}  // namespace

cplx tau_k_brute(i64 k, u64 s) {
    require_odd(s);
    const auto S = static_cast<i64>(s);
    std::vector<cplx> roots(s);
    for (u64 j = 0; j < s; ++j) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(s);
        roots[j] = {std::cos(a), std::sin(a)};
    }
    i64 kr = k % S;
    if (kr < 0) kr += S;
    cplx acc = 0.0;
    for (i64 b = 0; b < S; ++b) {
        const int j = kronecker(b, S);
        if (j == 0) continue;
        const cplx e = roots[static_cast<u64>((b * kr) % S)];
        acc += j > 0 ? e : -e;
    }
    return acc;
}

cplx G_brute(i64 k, u64 s) {
    const double m1 = kronecker(-1, static_cast<i64>(s));
    const cplx pre = cplx(0.5, -0.5) + m1 * cplx(0.5, 0.5);
    return pre * tau_k_brute(k, s);
}

GaussSumFormula::GaussSumFormula(u64 s) : s_(s) {
    require_odd(s);
    for (const auto& f : factorize(s).factors) parts_.push_back({f.p, f.e, std::sqrt(static_cast<double>(f.p))});
}

cplx GaussSumFormula::operator()(i64 k) const {
    double out = 1.0;
    for (const auto& [p, beta, sp] : parts_) {
        // alpha = v_p(k), infinite for k = 0
        int alpha = 0;
        i64 kr = k;
        if (k == 0) {
            alpha = beta + 10;
        } else {
            while (kr % static_cast<i64>(p) == 0) {
                kr /= static_cast<i64>(p);
                ++alpha;
            }
        }
        if (beta <= alpha) {
            if (beta % 2) return 0.0;
            out *= static_cast<double>(ipow_checked(p, beta - 1) * (p - 1));
        } else if (beta == alpha + 1) {
            const double pa = static_cast<double>(ipow_checked(p, alpha));
            if (beta % 2 == 0)
                out *= -pa;
            else
                out *= kronecker(kr, static_cast<i64>(p)) * pa * sp;
        } else {
            return 0.0;
        }
    }
    return out;
}

cplx G_formula(i64 k, u64 s) { return GaussSumFormula(s)(k); }

}  // namespace qtwist
