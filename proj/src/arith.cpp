/**
 * @file arith.cpp
 */
#include "qtwist/arith.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qtwist {

namespace {

constexpr std::uint32_t kPrimeLimit = 1'000'000;

std::vector<std::uint32_t> build_primes() {
    std::vector<bool> composite(kPrimeLimit + 1, false);
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 2; i <= kPrimeLimit; ++i) {
        if (composite[i]) continue;
        out.push_back(i);
        for (u64 j = u64{i} * i; j <= kPrimeLimit; j += i) composite[j] = true;
    }
    return out;
}

// (2|n) lookup by n mod 8
constexpr int kTab2[8] = {0, 1, 0, -1, 0, -1, 0, 1};

}  // namespace

std::span<const std::uint32_t> small_primes() {
    static const std::vector<std::uint32_t> primes = build_primes();
    return primes;
}

u64 mul_checked(u64 a, u64 b) {
    u64 out;
    if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("u64 multiplication overflow");
    return out;
}

i64 mul_checked(i64 a, i64 b) {
    i64 out;
    if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("i64 multiplication overflow");
    return out;
}

u64 ipow_checked(u64 b, int e) {
    u64 out = 1;
    for (int i = 0; i < e; ++i) out = mul_checked(out, b);
    return out;
}

u64 isqrt(u64 n) {
    auto x = static_cast<u64>(std::sqrt(static_cast<double>(n)));
    while (x > 0 && x * x > n) --x;
    while ((x + 1) * (x + 1) <= n) ++x;
    return x;
}

int kronecker(i64 a, i64 n) {
    if (a == std::numeric_limits<i64>::min() || n == std::numeric_limits<i64>::min())
        throw std::overflow_error("kronecker: argument out of range");
    if (n == 0) return (a == 1 || a == -1) ? 1 : 0;
    if ((a % 2 == 0) && (n % 2 == 0)) return 0;

    int k = 1;
    int v = 0;
    while (n % 2 == 0) {
        n /= 2;
        ++v;
    }
    if (v & 1) k = kTab2[a & 7];
    if (n < 0) {
        n = -n;
        if (a < 0) k = -k;
    }
    // n odd positive from here: Jacobi symbol
    a %= n;
    if (a < 0) a += n;
    while (a != 0) {
        v = 0;
        while (a % 2 == 0) {
            a /= 2;
            ++v;
        }
        if (v & 1) k *= kTab2[n & 7];
        if (a & n & 2) k = -k;
        const i64 t = a;
        a = n % t;
        n = t;
    }
    return n == 1 ? k : 0;
}

FactoredInteger factorize(u64 n) {
    if (n == 0) throw std::domain_error("factorize: n must be positive");
    FactoredInteger out{n, {}};
    u64 m = n;
    for (std::uint32_t p : small_primes()) {
        const u64 pp = p;
        if (pp * pp > m) break;
        if (m % pp) continue;
        int e = 0;
        while (m % pp == 0) {
            m /= pp;
            ++e;
        }
        out.factors.push_back({pp, e});
    }
    if (m > 1) {
        const u64 lim = u64{kPrimeLimit} * kPrimeLimit;
        if (m >= lim) throw std::overflow_error("factorize: cofactor " + std::to_string(m) + " exceeds the trial-division range");
        out.factors.push_back({m, 1});
    }
    return out;
}

int mobius(u64 n) {
    if (n == 0) throw std::domain_error("mobius: n must be positive");
    int mu = 1;
    for (const auto& f : factorize(n).factors) {
        if (f.e > 1) return 0;
        mu = -mu;
    }
    return mu;
}

u64 euler_phi(u64 n) {
    if (n == 0) throw std::domain_error("euler_phi: n must be positive");
    u64 phi = 1;
    for (const auto& f : factorize(n).factors) phi *= (f.p - 1) * ipow_checked(f.p, f.e - 1);
    return phi;
}

bool is_squarefree(u64 n) { return mobius(n) != 0; }

bool is_prime(u64 n) {
    if (n < 2) return false;
    const auto f = factorize(n);
    return f.factors.size() == 1 && f.factors[0].e == 1;
}

u64 radical(u64 n) {
    u64 r = 1;
    for (const auto& f : factorize(n).factors) r *= f.p;
    return r;
}

i64 mod_inverse(i64 a, i64 m) {
    if (m <= 0) throw std::domain_error("mod_inverse: modulus must be positive");
    if (m == 1) return 0;
    i64 r0 = a % m, r1 = m;
    if (r0 < 0) r0 += m;
    i64 s0 = 1, s1 = 0;
    while (r1 != 0) {
        const i64 q = r0 / r1;
        i64 t = r0 - q * r1;
        r0 = r1;
        r1 = t;
        t = s0 - q * s1;
        s0 = s1;
        s1 = t;
    }
    if (r0 != 1) throw std::domain_error("mod_inverse: gcd(a, m) > 1");
    i64 b = s0 % m;
    if (b < 0) b += m;
    return b;
}

std::pair<u64, u64> squarefree_decompose(u64 l) {
    if (l == 0) throw std::domain_error("squarefree_decompose: l must be positive");
    u64 l1 = 1, l2 = 1;
    for (const auto& f : factorize(l).factors) {
        if (f.e & 1) l1 *= f.p;
        l2 *= ipow_checked(f.p, f.e / 2);
    }
    return {l1, l2};
}

std::pair<i64, u64> fundamental_disc_decompose(i64 fourk) {
    if (fourk == 0) throw std::domain_error("fundamental_disc_decompose: input must be nonzero");
    if (fourk % 4 != 0) throw std::domain_error("fundamental_disc_decompose: input must be divisible by 4");
    const int sign = fourk < 0 ? -1 : 1;
    const u64 mag = static_cast<u64>(fourk < 0 ? -fourk : fourk);
    auto [m1, m2] = squarefree_decompose(mag);
    i64 core = sign * static_cast<i64>(m1);  // squarefree, fourk = core * m2^2
    // core = 1 mod 4 is already fundamental; otherwise absorb a factor 2 from m2
    if (((core % 4) + 4) % 4 == 1) return {core, m2};
    if (m2 % 2 != 0) throw std::logic_error("fundamental_disc_decompose: unexpected parity");
    return {4 * core, m2 / 2};
}

TruncatedMobius mobius_truncated(u64 d, double Y) {
    if (d == 0) throw std::domain_error("mobius_truncated: d must be positive");
    i64 my = 0;
    // k^2 | d means k | l2 where d = l1 * l2^2
    const u64 l2 = squarefree_decompose(d).second;
    for (u64 k = 1; k <= l2; ++k) {
        if (static_cast<double>(k) > Y) break;
        if (l2 % k == 0) my += mobius(k);
    }
    const i64 mu2 = (l2 == 1) ? 1 : 0;
    return {my, mu2 - my};
}

std::vector<std::int8_t> mobius_window(u64 lo, u64 hi) {
    if (hi <= lo) return {};
    if (lo == 0) throw std::domain_error("mobius_window: lo must be positive");
    const std::size_t len = hi - lo;
    std::vector<std::int8_t> mu(len, 1);
    std::vector<u64> rest(len);
    for (std::size_t i = 0; i < len; ++i) rest[i] = lo + i;
    const u64 root = isqrt(hi - 1);
    if (root > kPrimeLimit) throw std::overflow_error("mobius_window: window too high for prime table");
    for (std::uint32_t p32 : small_primes()) {
        const u64 p = p32;
        if (p > root) break;
        for (u64 d = ((lo + p - 1) / p) * p; d < hi; d += p) {
            const std::size_t i = d - lo;
            mu[i] = static_cast<std::int8_t>(-mu[i]);
            rest[i] /= p;
        }
        const u64 p2 = p * p;
        for (u64 d = ((lo + p2 - 1) / p2) * p2; d < hi; d += p2) mu[d - lo] = 0;
    }
    for (std::size_t i = 0; i < len; ++i)
        if (mu[i] != 0 && rest[i] > 1) mu[i] = static_cast<std::int8_t>(-mu[i]);
    return mu;
}

SquarefreeSieveWindow sieve_family(u64 lo, u64 hi, u64 r, u64 h) {
    if (r == 0) throw std::domain_error("sieve_family: modulus must be positive");
    SquarefreeSieveWindow w{lo, hi, r, h, {}, {}};
    if (hi <= lo) return w;
    const auto mu = mobius_window(lo, hi);
    const u64 hr = h % r;
    u64 first = lo + ((hr + r - lo % r) % r);
    for (u64 d = first; d < hi; d += r) {
        const auto m = mu[d - lo];
        if (m == 0) continue;
        w.members.push_back(d);
        w.mu.push_back(m);
    }
    return w;
}

}  // namespace qtwist
