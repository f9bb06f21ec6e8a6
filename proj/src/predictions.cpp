#include "qtwist/predictions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qtwist/gauss_sums.hpp"
#include "qtwist/lvalues.hpp"
#include "qtwist/summation.hpp"

namespace qtwist {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = std::numbers::egamma;

// p^{-s}
cplx pow_neg(u64 p, cplx s) { return std::exp(-s * std::log(static_cast<double>(p))); }

int valuation(u64 n, u64 p) {
    if (n == 0) return 0;
    int v = 0;
    while (n % p == 0) {
        n /= p;
        ++v;
    }
    return v;
}

std::vector<u64> prime_divisors(u64 n) {
    std::vector<u64> out;
    if (n <= 1) return out;
    for (const auto& pp : factorize(n).factors) out.push_back(pp.p);
    return out;
}

cplx euler_A_fn(u64 nu, cplx s, const std::function<cplx(u64)>& chi) {
    cplx out = 1.0;
    for (u64 p : prime_divisors(nu)) out *= 1.0 - chi(p) * pow_neg(p, s);
    return out;
}

// A_{r/q}(s, chi_{8h} psi)
cplx A_twisted(u64 nu, cplx s, u64 h, const DirichletCharacter& psi) {
    return euler_A_fn(nu, s, [&](u64 p) { return double(kronecker(i64(8 * h), i64(p))) * psi(i64(p)); });
}

// L(2, phi_0) for phi_0 principal mod r
double L2_principal(u64 r) {
    double v = kPi * kPi / 6.0;
    for (u64 p : prime_divisors(r)) v *= 1.0 - 1.0 / double(p * p);
    return v;
}

double phi_hat0(const TestFunction& Phi) { return mellin_phi(Phi, 0.0).value.real(); }

bool psi_is_quadratic(const DirichletCharacter& psi) { return psi.modulus() == 1 || psi.pow(2).is_principal(); }

// G_k(p^e) for v = v_p(k), leg = (k p^{-v} | p)
double G_prime_power(u64 p, int v, int leg, int e) {
    const double pd = static_cast<double>(p);
    if (e == 0) return 1.0;
    if (e <= v) return (e % 2 == 1) ? 0.0 : std::pow(pd, e - 1) * (pd - 1.0);
    if (e == v + 1) return (e % 2 == 0) ? -std::pow(pd, v) : leg * std::pow(pd, v) * std::sqrt(pd);
    return 0.0;
}

// sum_{i <= beta} x^i
cplx geometric_partial(cplx x, int beta) {
    cplx s = 0.0, t = 1.0;
    for (int i = 0; i <= beta; ++i) {
        s += t;
        t *= x;
    }
    return s;
}

// c_gamma with the beta-sum cut at beta_max
cplx kernel_local_G_cut(cplx x, u64 p, int gamma, int delta, int beta_max) {
    const double y = 1.0 / double(p);
    const double pd = double(p);
    cplx sum = 0.0;
    for (int beta = 0; beta <= beta_max && beta + delta <= 2 * gamma + 1; ++beta) {
        const int e = beta + delta;
        double g;
        // y^beta G(p^e) / p^{beta/2}, exponents combined to stay in range
        if (e == 0)
            g = 1.0;
        else if (e <= 2 * gamma)
            g = (e % 2 == 1) ? 0.0 : (1.0 - y) * std::pow(pd, e - 1.5 * beta);
        else
            g = std::pow(pd, 2 * gamma + 0.5 - 1.5 * beta);  // e = 2 gamma + 1, Legendre symbol of 4 is 1
        if (g != 0.0) sum += geometric_partial(x, beta) * g;
    }
    return (1.0 - y) * (1.0 - x * y) * sum;
}

struct KernelChars {
    DirichletCharacter chi, nu, kappa, A, B, AB, chiA, chiB, chi2, one;

    KernelChars(const DirichletCharacter& c, KernelConvention conv)
        : chi(c),
          nu(conv.j_conj ? c.conj() : c),
          kappa(conv.alpha_conj ? c.conj() : c),
          A(nu * c.pow(2)),
          B(kappa),
          AB(A * B),
          chiA(c * A),
          chiB(c * B),
          chi2(c.pow(2)),
          one(DirichletCharacter::trivial()) {}
};

// (1-y)(1-xy)(1 + (1+x)y - a y^2 u - b y^2/u + ab y^3) at p not | lr
cplx E_generic_factor(cplx x, cplx a, cplx b, double y, cplx u) {
    return (1.0 - y) * (1.0 - x * y) *
           (1.0 + (1.0 + x) * y - a * y * y * u - b * y * y / u + a * b * y * y * y);
}

void check_kernel_chi(const DirichletCharacter& chi) {
    if (chi.is_principal()) throw std::invalid_argument("kernel character must be non-principal");
}

}  // namespace

// ---------------------------------------------------------------------------

void validate(const FamilyParams& f) {
    const u64 q = f.q();
    if (q % 2 == 0) throw std::invalid_argument("psi must have odd modulus");
    if (q > 1) {
        const auto c = classify(f.psi);
        if (!c.is_even) throw std::invalid_argument("psi must be even");
        if (!c.is_primitive) throw std::invalid_argument("psi must be primitive");
    }
    if (f.r == 0 || f.r % 2 != 0 || !is_squarefree(f.r)) throw std::invalid_argument("r must be even and squarefree");
    if (f.r % q != 0) throw std::invalid_argument("q must divide r");
    if (f.h % 2 == 0 || std::gcd(f.h, f.r) != 1) throw std::invalid_argument("h must be odd and coprime to r");
    if (f.l == 0) throw std::invalid_argument("l must be positive");
}

std::vector<u64> primes_between(u64 lo, u64 hi) {
    std::vector<u64> out;
    if (hi <= lo) return out;
    const auto small = small_primes();
    const u64 small_top = 1'000'000;
    for (u64 p : small) {
        if (p >= hi) break;
        if (p >= lo) out.push_back(p);
    }
    if (hi <= small_top) return out;
    if (isqrt(hi) >= small_top) throw std::overflow_error("primes_between: range beyond the sieve table");
    constexpr u64 kBlock = u64{1} << 20;
    std::vector<char> composite(kBlock);
    for (u64 a = std::max(lo, small_top); a < hi; a += kBlock) {
        const u64 b = std::min(a + kBlock, hi);
        std::fill(composite.begin(), composite.end(), 0);
        for (u64 p : small) {
            if (p * p >= b) break;
            u64 m = std::max(p * p, (a + p - 1) / p * p);
            for (; m < b; m += p) composite[m - a] = 1;
        }
        for (u64 n = a; n < b; ++n)
            if (!composite[n - a]) out.push_back(n);
    }
    return out;
}

EulerProduct::EulerProduct(std::function<cplx(u64)> factor, std::vector<EulerPeel> peels, double rate, u64 exceptional)
    : factor_(std::move(factor)), peels_(std::move(peels)), rate_(rate), exceptional_(exceptional) {
    if (!(rate_ > 1.0)) throw std::invalid_argument("EulerProduct: residual rate must exceed 1");
}

EulerValue EulerProduct::evaluate(const EulerOptions& opt) const {
    constexpr u64 kFitLo = 100, kFitHi = 5000;
    CompensatedSumC logsum;
    bool zero = false;
    double C = 0.0;
    u64 done = 2;
    u64 P = std::max<u64>(opt.cutoff, 10'000);
    double tail = 0.0;
    for (;;) {
        for (u64 p : primes_between(done, P + 1)) {
            cplx g = factor_(p);
            for (const auto& pe : peels_) {
                const cplx base = 1.0 - pe.chi(i64(p)) * pow_neg(p, pe.s);
                if (pe.power > 0)
                    for (int i = 0; i < pe.power; ++i) g /= base;
                else
                    for (int i = 0; i < -pe.power; ++i) g *= base;
            }
            if (g == 0.0) {
                zero = true;
                continue;
            }
            const cplx lg = std::log(g);
            logsum.add(lg);
            if (p > kFitLo && p <= kFitHi && exceptional_ % p != 0)
                C = std::max(C, std::abs(lg) * std::pow(double(p), rate_));
        }
        done = P + 1;
        const double lp = std::log(double(P));
        tail = 2.52 * C * std::pow(double(P), 1.0 - rate_) / ((rate_ - 1.0) * lp);
        if (tail <= opt.tail_target) break;
        if (P >= opt.max_cutoff) {
            if (tail <= opt.tail_limit) break;
            std::ostringstream os;
            os << "Euler product tail " << tail << " above " << opt.tail_limit << " at P = " << P;
            throw std::runtime_error(os.str());
        }
        P = std::min(P * 4, opt.max_cutoff);
    }
    cplx value = zero ? cplx(0.0) : std::exp(logsum.value());
    for (const auto& pe : peels_) value *= std::pow(l_reference(pe.chi, pe.s), double(-pe.power));
    return {value, tail, P};
}

cplx euler_A(u64 nu, cplx s, const DirichletCharacter& chi) {
    return euler_A_fn(nu, s, [&](u64 p) { return chi(i64(p)); });
}

EulerValue euler_B(u64 nu, cplx s, const DirichletCharacter& chi, const EulerOptions& opt) {
    const double sigma = s.real();
    if (!(sigma > 0.0)) throw std::invalid_argument("euler_B needs Re s > 0");
    auto factor = [nu, s, chi](u64 p) -> cplx {
        if (nu % p == 0) return 1.0;
        return 1.0 - chi(i64(p)) * pow_neg(p, s) / double(p + 1);
    };
    std::vector<EulerPeel> peels{{chi, s + 1.0, 1}, {chi, s + 2.0, -1}};
    return EulerProduct(factor, std::move(peels), std::min(sigma + 3.0, 2.0 * sigma + 2.0), nu).evaluate(opt);
}

cplx euler_C(u64 mu, u64 nu, cplx s, const DirichletCharacter& chi) {
    cplx out = 1.0;
    for (u64 p : prime_divisors(nu)) {
        if (mu % p == 0) continue;
        out *= (1.0 + 1.0 / double(p)) * (1.0 - chi(i64(p)) * pow_neg(p, s) / double(p + 1));
    }
    return out;
}

cplx richardson_derivative(const std::function<cplx(cplx)>& g, cplx s0, const DerivativeOptions& opt) {
    auto central = [&](double h) { return (g(s0 + h) - g(s0 - h)) / (2.0 * h); };
    auto extrapolate = [&](double h1, double h2) {
        const cplx d1 = central(h1), d2 = central(h2);
        const double t = (h1 / h2) * (h1 / h2);
        return d2 + (d2 - d1) / (t - 1.0);
    };
    const cplx r1 = extrapolate(opt.coarse, opt.fine);
    const cplx r2 = extrapolate(0.5 * opt.coarse, 0.5 * opt.fine);
    const double diff = std::abs(r1 - r2);
    if (diff > opt.tolerance * std::max(1.0, std::abs(r1))) {
        std::ostringstream os;
        os << "finite-difference derivative unstable: levels differ by " << diff << " (value " << r1 << ")";
        throw std::runtime_error(os.str());
    }
    return r1;
}

// ---------------------------------------------------------------------------
// first moment

FirstMomentTerms first_moment_terms(const FamilyParams& f, const TestFunction& Phi) {
    validate(f);
    if (psi_is_quadratic(f.psi)) throw std::invalid_argument("first_moment_constant needs non-quadratic psi");
    FirstMomentTerms t{};
    t.phi_hat0 = phi_hat0(Phi);
    t.epsilon = epsilon_factor(f.psi, i64(f.h));
    if (std::gcd(f.l, f.r) > 1) return t;

    const auto psi2 = f.psi.pow(2);
    const u64 l1 = squarefree_decompose(f.l).first;
    const cplx pref = f.psi(i64(l1)) / (L2_principal(f.r) * std::sqrt(double(l1)) * double(f.r));
    t.L1 = l_reference(psi2, 1.0);
    t.A_r = euler_A(f.r, 1.0, psi2);
    t.B_r = euler_B(f.r, 1.0, psi2).value;
    t.C_rl = euler_C(f.r, f.l, 1.0, psi2);
    t.A_rq = A_twisted(f.r / f.q(), 0.5, f.h, f.psi);
    t.D = pref * t.phi_hat0 * t.A_r * t.B_r * t.L1 / (t.A_rq * t.C_rl);
    t.constant = t.D + t.epsilon * std::conj(t.D);
    return t;
}

cplx first_moment_constant(const FamilyParams& f, const TestFunction& Phi) { return first_moment_terms(f, Phi).constant; }

MainTermPolynomial first_moment_poly_trivial(const FamilyParams& f, const TestFunction& Phi, const DerivativeOptions& d) {
    validate(f);
    if (f.q() != 1) throw std::invalid_argument("first_moment_poly_trivial needs the trivial character");
    MainTermPolynomial out{1, 0.0, 0.0};
    if (std::gcd(f.l, f.r) > 1) return out;

    const auto one = DirichletCharacter::trivial();
    const u64 l1 = squarefree_decompose(f.l).first;
    const double pref = 1.0 / (L2_principal(f.r) * std::sqrt(double(l1)) * double(f.r));
    const double g14 = std::tgamma(0.25);
    auto g = [&](cplx s) -> cplx {
        const cplx w = 2.0 * s + 1.0;
        return mellin_phi(Phi, 0.5 * s).value * euler_A(f.r, w, one) * euler_B(f.r, w, one).value *
               gamma_c(0.5 * s + 0.25) / g14 * std::exp(0.5 * s * std::log(8.0 / kPi)) /
               (A_twisted(f.r, s + 0.5, f.h, one) * euler_C(f.r, f.l, w, one) * std::exp(s * std::log(double(l1))));
    };
    const cplx g0 = g(0.0);
    const cplx g1 = richardson_derivative(g, 0.0, d);
    // D + epsilon conj(D) with epsilon = 1 and D real
    out.c1 = 2.0 * pref * g0 / 4.0;
    out.c0 = 2.0 * pref * (g0 * kEulerGamma + g1 / 2.0);
    return out;
}

MainTermPolynomial first_moment_prediction(const FamilyParams& f, const TestFunction& Phi) {
    if (f.q() == 1) return first_moment_poly_trivial(f, Phi);
    return {0, first_moment_constant(f, Phi), 0.0};
}

// ---------------------------------------------------------------------------
// second moment, diagonal

cplx eta_factor(const DirichletCharacter& psi, u64 p, cplx s, u64 l, u64 r) {
    const u64 q = psi.modulus();
    const cplx z = pow_neg(p, s);
    const double y = 1.0 / double(p);
    if (q % p == 0) return 1.0 - z;
    if (r % p == 0) {
        const cplx a = psi(i64(p));
        return (1.0 - z) * (1.0 - a * a * z) * (1.0 - std::conj(a * a) * z);
    }
    if (l % p == 0) {
        const u64 l1 = squarefree_decompose(l).first;
        if (l1 % p == 0) return (1.0 - z) / (1.0 + y);
        return (1.0 - z * z) / (1.0 + y);
    }
    const cplx a = psi(i64(p));
    const cplx d = a + std::conj(a);
    const double inv = 1.0 / double(p + 1);
    return 1.0 - d * d * z * inv * (1.0 - z) + z * inv - z * z - z * z * z * inv;
}

cplx diagonal_local_series(const DirichletCharacter& psi, u64 p, cplx s, u64 l, u64 r, int terms) {
    const u64 l1 = squarefree_decompose(l).first;
    const int v = (l1 % p == 0) ? 1 : 0;
    const cplx a = psi(i64(p));
    const cplx abar = std::conj(a);
    auto dpsi = [&](int m) {
        cplx acc = 0.0;
        for (int i = 0; i <= m; ++i) acc += std::pow(a, i) * std::pow(abar, m - i);
        return acc;
    };
    const cplx z = pow_neg(p, s);
    const double y = 1.0 / double(p);
    cplx total = 0.0, zk = 1.0;
    for (int k = 0; k <= terms; ++k) {
        if (k > 0 && r % p == 0) break;
        const double c = (k > 0 || l % p == 0) ? 1.0 + y : 1.0;
        total += dpsi(v + 2 * k) * zk / c;
        zk *= z;
    }
    return total;
}

EulerValue eta_product(const DirichletCharacter& psi, cplx w, u64 l, u64 r, const EulerOptions& opt) {
    const auto p2 = psi.pow(2);
    const auto pb2 = p2.conj();
    const auto one = DirichletCharacter::trivial();
    const double sg = w.real();
    std::vector<EulerPeel> peels{{p2, w + 1.0, 1},       {pb2, w + 1.0, 1},       {one, w + 1.0, 1},
                                 {one, 2.0 * w, 1},      {p2, w + 2.0, -1},       {one, w + 2.0, -1},
                                 {pb2, w + 2.0, -1},     {p2, 2.0 * w + 1.0, -1}, {one, 2.0 * w + 1.0, -2},
                                 {pb2, 2.0 * w + 1.0, -1}};
    const double rate = std::min({sg + 3.0, 2.0 * sg + 2.0, 3.0 * sg + 1.0, 4.0 * sg});
    auto factor = [psi, w, l, r](u64 p) { return eta_factor(psi, p, w, l, r); };
    return EulerProduct(factor, std::move(peels), rate, mul_checked(l, r)).evaluate(opt);
}

MainTermPolynomial second_moment_diag_poly(const FamilyParams& f, const TestFunction& Phi, DiagonalNormalization norm,
                                           const DerivativeOptions& d) {
    validate(f);
    if (psi_is_quadratic(f.psi)) throw std::invalid_argument("second moment main term needs non-quadratic psi");
    MainTermPolynomial out{1, 0.0, 0.0};
    if (std::gcd(f.l, f.r) > 1) return out;

    const auto p2 = f.psi.pow(2);
    const auto pb2 = p2.conj();
    const u64 l1 = squarefree_decompose(f.l).first;
    const u64 q = f.q();
    const double kappa = norm == DiagonalNormalization::WithAfeFactor ? 2.0 : 1.0;
    const cplx pref = kappa * twisted_divisor(f.psi, l1) / (L2_principal(f.r) * std::sqrt(double(l1)) * double(f.r));
    const double g14 = std::tgamma(0.25);
    const double scale = std::log(8.0 * double(q) / (kPi * double(l1)));
    auto g = [&](cplx s) -> cplx {
        const cplx w = 2.0 * s + 1.0;
        const cplx gam = gamma_c(0.5 * s + 0.25) / g14;
        return gam * gam * mellin_phi(Phi, s).value * l_reference(p2, w) * l_reference(pb2, w) *
               eta_product(f.psi, w, f.l, f.r).value /
               (A_twisted(f.r / q, s + 0.5, f.h, f.psi) * A_twisted(f.r / q, s + 0.5, f.h, f.psi.conj())) *
               std::exp(s * scale);
    };
    const cplx g0 = g(0.0);
    const cplx g1 = richardson_derivative(g, 0.0, d);
    out.c1 = pref * g0 / 2.0;
    out.c0 = pref * (g0 * kEulerGamma + g1 / 2.0);
    return out;
}

// ---------------------------------------------------------------------------
// kernel local factors

cplx kernel_local_G(const DirichletCharacter& chi, u64 p, int gamma, int delta) {
    return kernel_local_G_cut(chi(i64(p)), p, gamma, delta, 2 * gamma + 2);
}

cplx H_star_factor(const DirichletCharacter& chi, u64 p, cplx s, u64 l, u64 r, u64 alpha, KernelConvention conv) {
    const u64 q = chi.modulus();
    const cplx x = chi(i64(p));
    const cplx nu = conv.j_conj ? std::conj(x) : x;
    const double y = 1.0 / double(p);
    const cplx u = pow_neg(p, 2.0 * s);
    if (q % p == 0) return 1.0;
    if (r % p == 0) return 1.0 / (1.0 - nu * u);
    if (alpha % p == 0) return (1.0 - y) * (1.0 - x * y) / (1.0 - nu * u);
    if (l % p == 0) {
        if (conv.j_conj || !conv.alpha_conj) return H_star_local(chi, p, s, l, r, alpha, conv);
        const int delta = valuation(l, p);
        const cplx common = (1.0 - y) / ((1.0 - x * u) * (1.0 - x * x * x * y * u));
        if (delta % 2 == 1)
            return std::pow(double(p), delta - 0.5) * std::pow(x, (delta - 1) / 2) * pow_neg(p, double(delta - 1) * s) *
                   common * (1.0 - x * y) * (1.0 + x * x * u);
        return std::pow(x, delta / 2) * std::pow(double(p), delta) * pow_neg(p, double(delta) * s) * common *
               (1.0 - x * x * y * y);
    }
    return (1.0 - y) * (1.0 - x * y) * (1.0 + (1.0 + x) * y - nu * x * x * y * y * u) /
           ((1.0 - nu * u) * (1.0 - nu * x * x * y * u));
}

cplx H_star_raw(const DirichletCharacter& chi, u64 p, cplx s, u64 l, u64 r, u64 alpha, KernelConvention conv, int terms) {
    const u64 q = chi.modulus();
    const cplx x = chi(i64(p));
    const cplx nu = conv.j_conj ? std::conj(x) : x;
    const double y = 1.0 / double(p);
    const cplx z = nu * pow_neg(p, 2.0 * s);
    if (q % p == 0) return 1.0;
    const bool flat = r % p == 0 || alpha % p == 0;
    const int delta = valuation(l, p);
    cplx total = 0.0, zg = 1.0;
    for (int g = 0; g <= terms; ++g) {
        cplx c;
        if (r % p == 0)
            c = 1.0;
        else if (flat)
            c = (1.0 - y) * (1.0 - x * y);
        else
            c = kernel_local_G_cut(x, p, g, delta, terms);
        total += zg * c;
        zg *= z;
    }
    return total;
}

cplx H_star_local(const DirichletCharacter& chi, u64 p, cplx s, u64 l, u64 r, u64 alpha, KernelConvention conv) {
    const u64 q = chi.modulus();
    const cplx x = chi(i64(p));
    const cplx nu = conv.j_conj ? std::conj(x) : x;
    const double y = 1.0 / double(p);
    const cplx z = nu * pow_neg(p, 2.0 * s);
    if (q % p == 0) return 1.0;
    if (r % p == 0) return 1.0 / (1.0 - z);
    if (alpha % p == 0) return (1.0 - y) * (1.0 - x * y) / (1.0 - z);

    const int delta = valuation(l, p);
    const int g0 = (delta + 1) / 2 + 1;
    std::vector<cplx> c(g0 + 5);
    for (int g = 0; g < int(c.size()); ++g) c[g] = kernel_local_G(chi, p, g, delta);

    // c_gamma = a + b y^gamma + c2 rho^gamma for gamma >= g0; a double root when x^2 = 1
    const cplx rho = x * x * y;
    const bool double_root = std::abs(x * x - 1.0) < 1e-12;
    std::array<std::array<cplx, 3>, 3> M{};
    std::array<cplx, 3> rhs{};
    auto basis = [&](int j) -> std::array<cplx, 3> {
        if (double_root) return {1.0, std::pow(y, j), double(j) * std::pow(y, j)};
        return {1.0, std::pow(y, j), std::pow(rho / y, j) * std::pow(y, j)};
    };
    for (int j = 0; j < 3; ++j) {
        M[j] = basis(j);
        rhs[j] = c[g0 + j];
    }
    // Gaussian elimination with partial pivoting
    for (int k = 0; k < 3; ++k) {
        int piv = k;
        for (int i = k + 1; i < 3; ++i)
            if (std::abs(M[i][k]) > std::abs(M[piv][k])) piv = i;
        std::swap(M[k], M[piv]);
        std::swap(rhs[k], rhs[piv]);
        for (int i = k + 1; i < 3; ++i) {
            const cplx m = M[i][k] / M[k][k];
            for (int j = k; j < 3; ++j) M[i][j] -= m * M[k][j];
            rhs[i] -= m * rhs[k];
        }
    }
    std::array<cplx, 3> coef{};
    for (int k = 2; k >= 0; --k) {
        cplx acc = rhs[k];
        for (int j = k + 1; j < 3; ++j) acc -= M[k][j] * coef[j];
        coef[k] = acc / M[k][k];
    }
    for (int j = 3; j < 5; ++j) {
        const auto b = basis(j);
        const cplx pred = coef[0] * b[0] + coef[1] * b[1] + coef[2] * b[2];
        if (std::abs(pred - c[g0 + j]) > 1e-12 * std::max(1.0, std::abs(c[g0 + j])))
            throw std::runtime_error("H_star_local: local kernel is not eventually geometric");
    }
    // coefficients are relative to gamma = g0
    cplx total = 0.0, zg = 1.0;
    for (int g = 0; g < g0; ++g) {
        total += zg * c[g];
        zg *= z;
    }
    const cplx zy = z * y;
    cplx tail = coef[0] / (1.0 - z) + coef[1] / (1.0 - zy);
    if (double_root)
        tail += coef[2] * zy / ((1.0 - zy) * (1.0 - zy));
    else
        tail += coef[2] / (1.0 - z * rho);
    return total + zg * tail;
}

EulerValue E_euler(const DirichletCharacter& chi, cplx s, u64 l, u64 r, KernelConvention conv, const EulerOptions& opt) {
    check_kernel_chi(chi);
    const double sg = std::abs(s.real());
    if (!(sg < 0.5)) throw std::invalid_argument("E_euler needs |Re s| < 1/2");
    const KernelChars k(chi, conv);
    auto factor = [chi, s, l, r, conv](u64 p) -> cplx {
        if (r % p == 0) return 1.0;
        const cplx x = chi(i64(p));
        const cplx nu = conv.j_conj ? std::conj(x) : x;
        const cplx kap = conv.alpha_conj ? std::conj(x) : x;
        const double y = 1.0 / double(p);
        const cplx u = pow_neg(p, 2.0 * s);
        if (l % p == 0)
            return H_star_factor(chi, p, s, l, r, 1, conv) * (1.0 - nu * u) * (1.0 - nu * x * x * y * u);
        return E_generic_factor(x, nu * x * x, kap, y, u);
    };
    std::vector<EulerPeel> peels{{k.one, 2.0, 1},           {k.chi, 2.0, 1},           {k.chi2, 2.0, 1},
                                 {k.A, 2.0 + 2.0 * s, 1},   {k.B, 2.0 - 2.0 * s, 1},   {k.AB, 3.0, -1},
                                 {k.chi, 3.0, -1},          {k.chi2, 3.0, -1},         {k.A, 3.0 + 2.0 * s, -1},
                                 {k.chiA, 3.0 + 2.0 * s, -1}, {k.B, 3.0 - 2.0 * s, -1}, {k.chiB, 3.0 - 2.0 * s, -1}};
    return EulerProduct(factor, std::move(peels), 4.0 - 2.0 * sg, mul_checked(l, r)).evaluate(opt);
}

namespace {

cplx two_factor(const KernelChars& k, cplx s) { return k.nu(2) * std::exp((1.0 - 2.0 * s) * std::log(2.0)) - 1.0; }

}  // namespace

cplx K_euler(const DirichletCharacter& chi, cplx s, u64 l, u64 r, KernelConvention conv, const EulerOptions& opt) {
    check_kernel_chi(chi);
    const KernelChars k(chi, conv);
    const u64 q = chi.modulus();
    return two_factor(k, s) * l_reference(k.nu, 2.0 * s) * l_reference(k.A, 2.0 * s + 1.0) *
           euler_A(r / q, 2.0 * s + 1.0, k.A) * E_euler(chi, s, l, r, conv, opt).value;
}

cplx K_alpha_sum(const DirichletCharacter& chi, cplx s, u64 l, u64 r, u64 alpha_max, KernelConvention conv,
                 const EulerOptions& opt) {
    check_kernel_chi(chi);
    const KernelChars k(chi, conv);
    // H*(s; l, r, 1) continued through L(2s, nu) L(2s+1, nu chi^2)
    auto factor = [chi, s, l, r, conv](u64 p) { return H_star_factor(chi, p, s, l, r, 1, conv); };
    std::vector<EulerPeel> peels{{k.nu, 2.0 * s, -1}, {k.A, 2.0 * s + 1.0, -1}, {k.one, 2.0, 1},
                                 {k.chi, 2.0, 1},     {k.chi2, 2.0, 1},         {k.A, 2.0 * s + 2.0, 1}};
    const double rate = std::min(3.0, 3.0 + 2.0 * s.real());
    const cplx H1 = EulerProduct(factor, std::move(peels), rate, mul_checked(l, r)).evaluate(opt).value;

    CompensatedSumC acc;
    for (u64 a = 1; a <= alpha_max; ++a) {
        if (std::gcd(a, mul_checked(l, r)) != 1) continue;
        const int mu = mobius(a);
        if (mu == 0) continue;
        cplx term = double(mu) * k.kappa(i64(a)) * std::exp((2.0 * s - 2.0) * std::log(double(a)));
        for (u64 p : prime_divisors(a)) {
            const cplx x = chi(i64(p));
            const cplx nu = k.nu(i64(p));
            const double y = 1.0 / double(p);
            const cplx u = pow_neg(p, 2.0 * s);
            term *= (1.0 - nu * x * x * y * u) / (1.0 + (1.0 + x) * y - nu * x * x * y * y * u);
        }
        acc.add(term);
    }
    return two_factor(k, s) * H1 * acc.value();
}

// ---------------------------------------------------------------------------
// script G

namespace {

struct ScriptGData {
    i64 D;  // k1 r/2
    DirichletCharacter a, b;
};

ScriptGData script_G_data(const DirichletCharacter& psi, const DirichletCharacter& phi, i64 k, u64 r) {
    if (k == 0) throw std::invalid_argument("script_G needs k != 0");
    const i64 k1 = fundamental_disc_decompose(mul_checked(i64{4}, k)).first;
    const i64 D = mul_checked(k1, i64(r / 2));
    const i64 M = 4 * (D < 0 ? -D : D);
    const auto eps = DirichletCharacter::from_function(make_group(u64(M)), [D](i64 n) { return double(kronecker(4 * D, n)); });
    return {D, eps * psi * phi, eps * psi.conj() * phi};
}

}  // namespace

std::pair<DirichletCharacter, DirichletCharacter> script_G_denominators(const DirichletCharacter& psi,
                                                                       const DirichletCharacter& phi, i64 k, u64 r) {
    auto d = script_G_data(psi, phi, k, r);
    return {d.a, d.b};
}

EulerValue script_G(const DirichletCharacter& psi, const DirichletCharacter& phi, cplx s, i64 k, u64 l, u64 r, u64 alpha,
                    const EulerOptions& opt) {
    const double sg = s.real();
    if (!(sg > 0.5)) throw std::invalid_argument("script_G needs Re s > 1/2");
    const auto data = script_G_data(psi, phi, k, r);
    const i64 fourk = mul_checked(i64{4}, k);
    const u64 absk = u64(k < 0 ? -k : k);
    auto factor = [=](u64 p) -> cplx {
        const double ep = kronecker(4 * data.D, i64(p));
        const cplx ps = psi(i64(p)), ph = phi(i64(p));
        const cplx z = pow_neg(p, s);
        const cplx lf = (1.0 - ep * ps * ph * z) * (1.0 - ep * std::conj(ps) * ph * z);
        if (alpha % p == 0 || r % p == 0) return lf;
        const int delta = valuation(l, p);
        const int v = valuation(u64(fourk < 0 ? -fourk : fourk), p);
        i64 unit = fourk;
        for (int i = 0; i < v; ++i) unit /= i64(p);
        const int leg = kronecker(unit, i64(p));
        const double half = double(kronecker(i64(r / 2), i64(p)));
        cplx sum = 0.0, zb = 1.0, hb = 1.0, phb = 1.0;
        for (int beta = 0; beta + delta <= v + 1; ++beta) {
            cplx dp = 0.0;
            for (int i = 0; i <= beta; ++i) dp += std::pow(ps, i) * std::pow(std::conj(ps), beta - i);
            sum += hb * dp * phb * zb * G_prime_power(p, v, leg, beta + delta) / std::pow(double(p), 0.5 * beta);
            zb *= z;
            hb *= half;
            phb *= ph;
        }
        return lf * sum;
    };
    std::vector<EulerPeel> peels{{data.a.pow(2), 2.0 * s, 1}, {data.a * data.b, 2.0 * s, 1}, {data.b.pow(2), 2.0 * s, 1}};
    const u64 exc = mul_checked(mul_checked(radical(std::max<u64>(alpha, 1)), r), mul_checked(radical(l), radical(absk)));
    return EulerProduct(factor, std::move(peels), 3.0 * sg, exc).evaluate(opt);
}

cplx script_D_series(const DirichletCharacter& psi, const DirichletCharacter& phi, cplx s, i64 k, u64 l, u64 r, u64 alpha,
                     u64 n_max) {
    const i64 fourk = mul_checked(i64{4}, k);
    const u64 ar = mul_checked(std::max<u64>(alpha, 1), r);
    CompensatedSumC acc;
    for (u64 n = 1; n <= n_max; n += 2) {
        if (std::gcd(n, ar) != 1) continue;
        const cplx ph = phi(i64(n));
        if (ph == 0.0) continue;
        const double G = G_formula(fourk, mul_checked(l, n)).real();
        if (G == 0.0) continue;
        const double half = kronecker(i64(r / 2), i64(n));
        acc.add(half * twisted_divisor(psi, n) * ph * G * std::exp(-(s + 0.5) * std::log(double(n))));
    }
    return acc.value();
}

// ---------------------------------------------------------------------------
// non-diagonal constant

namespace {

cplx gamma_ratio_sq(cplx s) {
    const cplx g = gamma_c(0.5 * s + 0.25) / std::tgamma(0.25);
    return g * g;
}

// (1/2 pi i) int over Re s = c of fn(s) ds, nodes symmetric in t
struct LineIntegral {
    cplx value;
    double error;
};

// panels 0, w, 2w, 4w, ... until the width reaches `width`, then uniform to t_max; mirrored
std::vector<double> line_mesh(const NondiagonalOptions& opt) {
    std::vector<double> b{0.0};
    double w = std::min(opt.line, opt.width) / 2;
    while (b.back() < opt.t_max) {
        b.push_back(std::min(opt.t_max, b.back() + w));
        w = std::min(2 * w, opt.width);
    }
    return b;
}

// Kronrod 21 with its embedded Gauss 10 on every panel; the error is their difference
LineIntegral line_integral(const std::function<cplx(cplx)>& fn, const NondiagonalOptions& opt) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
    using G = boost::math::quadrature::gauss<double, 10>;
    const auto& xk = GK::abscissa();
    const auto& wk = GK::weights();
    const auto& wg = G::weights();
    const auto mesh = line_mesh(opt);
    cplx kron = 0.0, gauss = 0.0;
    for (std::size_t i = 0; i + 1 < mesh.size(); ++i) {
        const double mid = 0.5 * (mesh[i] + mesh[i + 1]), half = 0.5 * (mesh[i + 1] - mesh[i]);
        for (double sign : {1.0, -1.0}) {
            cplx k = 0.0, g = 0.0;
            for (std::size_t j = 0; j < xk.size(); ++j) {
                const double t = sign * mid;
                cplx v = fn(cplx(opt.line, t + half * xk[j]));
                if (xk[j] != 0.0) v += fn(cplx(opt.line, t - half * xk[j]));
                k += wk[j] * v;
                if (j % 2 == 1) g += wg[j / 2] * v;
            }
            kron += k * half;
            gauss += g * half;
        }
    }
    return {kron / (2.0 * kPi), std::abs(kron - gauss) / (2.0 * kPi)};
}

cplx nondiag_prefactor(const FamilyParams& f, const TestFunction& Phi, KernelConvention conv) {
    const u64 q = f.q();
    const auto chi_r = chi_half(f.r);
    const auto pb2 = f.psi.conj().pow(2);
    const cplx L1 = l_reference(pb2, 1.0) * euler_A(f.r, 1.0, pb2);
    const auto phi1 = f.psi.conj() * chi_r;  // mod r/2
    const cplx t = tau(phi1);
    cplx chars;
    if (!conv.alpha_conj && conv.j_conj) {
        const auto phi2 = f.psi * chi_r;
        chars = phi1(2) * phi2(i64(f.h)) * f.psi.conj()(i64(f.l));
    } else {
        const i64 half = i64(f.r / 2);
        const i64 inv = mod_inverse(i64((2 * f.h) % u64(half)), half);
        chars = (f.psi * chi_r)(i64((u64(inv) * (f.l % u64(half))) % u64(half)));
    }
    (void)q;
    return 4.0 * phi_hat0(Phi) / (double(f.l) * double(f.r) * double(f.r)) * L1 * t * chars;
}

void check_nondiag(const FamilyParams& f) {
    validate(f);
    if (psi_is_quadratic(f.psi)) throw std::invalid_argument("non-diagonal constant needs non-quadratic psi");
    if ((f.r / 2) % 4 != 1) throw std::invalid_argument("non-diagonal constant implemented for r/2 = 1 (mod 4)");
}

}  // namespace

cplx nondiag_integrand(const FamilyParams& f, cplx s, const NondiagonalOptions& opt) {
    const u64 q = f.q();
    const auto chi = f.psi.conj().pow(2);
    const cplx K = K_euler(chi, s, f.l, f.r, opt.conv, opt.euler);
    const double scale = std::log(8.0 * double(f.l) * double(q) * double(f.r) / kPi);
    const cplx A = A_twisted(f.r / q, s + 0.5, f.h, f.psi) * A_twisted(f.r / q, s + 0.5, f.h, f.psi.conj());
    return gamma_ratio_sq(s) * gamma1(s) * K * std::exp(s * scale) / (A * s);
}

NondiagonalTerms nondiag_terms(const FamilyParams& f, const TestFunction& Phi, const NondiagonalOptions& opt) {
    check_nondiag(f);
    NondiagonalTerms out{};
    if (std::gcd(f.l, f.r) > 1) return out;
    out.prefactor = nondiag_prefactor(f, Phi, opt.conv);
    const auto li = line_integral([&](cplx s) { return nondiag_integrand(f, s, opt); }, opt);
    out.integral = li.value;
    out.quadrature_error = li.error;
    out.value = (out.prefactor * out.integral).real();
    return out;
}

double nondiag_constant(const FamilyParams& f, const TestFunction& Phi, const NondiagonalOptions& opt) {
    return nondiag_terms(f, Phi, opt).value;
}

cplx J_function(const DirichletCharacter& chi, cplx s, KernelConvention conv, const EulerOptions& opt) {
    const double q = double(chi.modulus());
    const u64 r = 2 * chi.modulus();
    return gamma_ratio_sq(s) * gamma1(s) * K_euler(chi, s, 1, r, conv, opt) *
           std::exp(s * std::log(16.0 * q * q / kPi));
}

QuarticClosedForm quartic_closed_form(const FamilyParams& f, const TestFunction& Phi, const DerivativeOptions& d) {
    check_nondiag(f);
    const u64 q = f.q();
    if (f.l != 1 || f.r != 2 * q) throw std::invalid_argument("quartic closed form needs l = 1, r = 2q");
    if (!f.psi.pow(4).is_principal()) throw std::invalid_argument("quartic closed form needs psi^4 principal");
    const auto chi = f.psi.conj().pow(2);
    const auto conv = KernelConvention::derived();
    const EulerOptions eo{100'000, 64'000'000, 1e-12, 1e-10};
    QuarticClosedForm out{};

    // s^2 times the integrand; the residue at 0 is its derivative there
    const double scale = std::log(16.0 * double(q) * double(q) / kPi);
    auto F = [&](cplx s) {
        const cplx sg1 = std::exp(-s * std::log(2.0 * kPi)) * gamma_c(s + 1.0) * cas(0.5 * kPi * s);
        return gamma_ratio_sq(s) * sg1 * K_euler(chi, s, 1, f.r, conv, eo) * std::exp(s * scale);
    };
    out.residue = richardson_derivative(F, 0.0, d);
    auto K = [&](cplx s) { return K_euler(chi, s, 1, f.r, KernelConvention::printed(), eo); };
    out.K0 = K(0.0);
    out.K_prime0 = richardson_derivative(K, 0.0, d);
    out.tau2 = std::pow(tau(f.psi.pow(2)), 2);

    const double ph0 = phi_hat0(Phi);
    const cplx pre = nondiag_prefactor(f, Phi, conv);
    out.value = (pre * out.residue / 2.0).real();

    const auto pb2 = f.psi.conj().pow(2);
    const cplx L1 = l_reference(pb2, 1.0) * euler_A(f.r, 1.0, pb2);
    const i64 inv2h = mod_inverse(i64((2 * f.h) % q), i64(q));
    const double digamma14 = -kEulerGamma - kPi / 2.0 - 3.0 * std::log(2.0);
    const cplx bracket =
        out.K_prime0 + (kEulerGamma + 2.0 * digamma14 + std::log(8.0 * double(q) / (kPi * kPi)) + kPi / 2.0) * out.K0;
    out.printed_value =
        (ph0 * L1 * tau(f.psi.conj()) * f.psi(inv2h) / (double(q) * double(q) * (1.0 + out.tau2)) * bracket).real();
    return out;
}

cplx orthogonality_average(const DirichletCharacter& psi, u64 r, u64 m) {
    if (m % 2 == 0) throw std::invalid_argument("m must be odd");
    for (u64 p : prime_divisors(m))
        if (r % p != 0) throw std::invalid_argument("every prime of m must divide r");
    const auto chi = psi.conj() * chi_half(r);
    const u64 E = chi.group()->exponent();
    std::vector<u64> count(2 * E, 0);
    for (u64 h = 1; h < r; ++h) {
        if (std::gcd(h, r) != 1) continue;
        const auto k = chi.log_value(i64(h));
        const int j = kronecker(i64(h), i64(m));
        count[(2 * u64(k) + (j < 0 ? E : 0)) % (2 * E)] += 1;
    }
    CompensatedSumC acc;
    for (u64 k = 0; k < 2 * E; ++k)
        if (count[k]) acc.add(double(count[k]) * unit_root(i64(k), i64(2 * E)));
    return acc.value();
}

double nondiag_h_average(const FamilyParams& f, const TestFunction& Phi, const NondiagonalOptions& opt) {
    check_nondiag(f);
    if (std::gcd(f.l, f.r) > 1) return 0.0;
    const u64 q = f.q();
    std::vector<u64> odd_rq;
    for (u64 p : prime_divisors(f.r / q))
        if (p != 2) odd_rq.push_back(p);
    std::map<std::vector<int>, cplx> integrals;
    CompensatedSum acc;
    u64 count = 0;
    for (u64 h = 1; h < f.r; h += 2) {
        if (std::gcd(h, f.r) != 1) continue;
        FamilyParams g = f;
        g.h = h;
        std::vector<int> key;
        for (u64 p : odd_rq) key.push_back(kronecker(i64(8 * h), i64(p)));
        auto it = integrals.find(key);
        if (it == integrals.end()) {
            const auto li = line_integral([&](cplx s) { return nondiag_integrand(g, s, opt); }, opt);
            it = integrals.emplace(key, li.value).first;
        }
        acc.add((nondiag_prefactor(g, Phi, opt.conv) * it->second).real());
        ++count;
    }
    return acc.value() / double(count);
}

SecondMomentPrediction second_moment_prediction(const FamilyParams& f, const TestFunction& Phi, DiagonalNormalization norm,
                                                const NondiagonalOptions& opt) {
    SecondMomentPrediction out;
    out.diagonal = second_moment_diag_poly(f, Phi, norm);
    out.nondiagonal = nondiag_constant(f, Phi, opt);
    out.total = out.diagonal;
    out.total.c0 += out.nondiagonal;
    return out;
}

}  // namespace qtwist
