/**
 * @file arith.hpp
 * @brief Exact integer layer: symbols, multiplicative functions, factoring, sieves.
 */
#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace qtwist {

using i64 = std::int64_t;
using u64 = std::uint64_t;

struct PrimePower {
    u64 p;
    int e;
    bool operator==(const PrimePower&) const = default;
};

struct FactoredInteger {
    u64 n = 1;
    std::vector<PrimePower> factors;
};

/// Kronecker symbol (a|n), full extension to n <= 0 and even n.
int kronecker(i64 a, i64 n);

int mobius(u64 n);
u64 euler_phi(u64 n);

/// Primes below 10^6, built once.
std::span<const std::uint32_t> small_primes();

/// Throws std::overflow_error when n cannot be certified with the prime table.
FactoredInteger factorize(u64 n);

/// b in [0,m) with a*b = 1 mod m. Modulus 1 gives 0.
i64 mod_inverse(i64 a, i64 m);

/// l = l1 * l2^2 with l1 squarefree.
std::pair<u64, u64> squarefree_decompose(u64 l);

/// fourk = k1 * k2^2 with k1 a fundamental discriminant.
std::pair<i64, u64> fundamental_disc_decompose(i64 fourk);

struct TruncatedMobius {
    i64 MY;
    i64 RY;
};
TruncatedMobius mobius_truncated(u64 d, double Y);

/// Squarefree members of d = h (mod r) inside [lo, hi), ascending.
struct SquarefreeSieveWindow {
    u64 lo = 0, hi = 0, r = 1, h = 0;
    std::vector<u64> members;
    std::vector<std::int8_t> mu;  // mu(d) for each member
};
SquarefreeSieveWindow sieve_family(u64 lo, u64 hi, u64 r, u64 h);

/// Moebius values for every integer in [lo, hi).
std::vector<std::int8_t> mobius_window(u64 lo, u64 hi);

// checked helpers
u64 mul_checked(u64 a, u64 b);
i64 mul_checked(i64 a, i64 b);
u64 ipow_checked(u64 b, int e);
u64 isqrt(u64 n);
bool is_squarefree(u64 n);
bool is_prime(u64 n);
u64 radical(u64 n);

}  // namespace qtwist
