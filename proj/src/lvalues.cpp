#include "qtwist/lvalues.hpp"

#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "qtwist/special_functions.hpp"
#include "qtwist/summation.hpp"

namespace qtwist {

namespace {

constexpr double kPi = std::numbers::pi;

// (x^{1-s} - 1)/(s - 1), finite at s = 1
cplx shifted_power_quotient(cplx s, double x) {
    const double lx = std::log(x);
    const cplx z = (1.0 - s) * lx;
    if (std::abs(z) < 1e-3) {
        const cplx series = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0;
        return -lx * series;
    }
    return (std::exp(z) - 1.0) / (s - 1.0);
}

int auto_shift(cplx s) { return std::max(20, static_cast<int>(std::ceil(2.0 * std::abs(s)))); }

// Euler-Maclaurin remainder of zeta(s, x) past the explicit sum, without the x^{1-s}/(s-1) term
cplx em_tail(cplx s, double x, int em_terms) {
    const double lx = std::log(x);
    cplx xs = std::exp(-s * lx);  // x^{-s}
    cplx total = 0.5 * xs;
    cplx rising = s;  // s (s+1) ... (s+2k-2)
    cplx pw = xs / x;  // x^{-s-2k+1}
    const double inv_x2 = 1.0 / (x * x);
    for (int k = 1; k <= em_terms; ++k) {
        const double c = boost::math::bernoulli_b2n<double>(k) / boost::math::factorial<double>(2 * k);
        total += c * rising * pw;
        rising *= (s + double(2 * k - 1)) * (s + double(2 * k));
        pw *= inv_x2;
    }
    return total;
}

void check_psi(const DirichletCharacter& psi) {
    const u64 q = psi.modulus();
    if (q % 2 == 0) throw std::invalid_argument("psi must have odd modulus");
    if (q == 1) return;
    const auto c = classify(psi);
    if (!c.is_even) throw std::invalid_argument("psi must be even");
    if (!c.is_primitive) throw std::invalid_argument("psi must be primitive");
}

void check_d(u64 d, u64 q) {
    if (d == 0 || d % 2 == 0) throw std::invalid_argument("d must be odd and positive");
    if (!is_squarefree(d)) throw std::invalid_argument("d must be squarefree");
    if (std::gcd(d, q) != 1) throw std::invalid_argument("d must be coprime to q");
}

bool is_fundamental(i64 D) {
    if (D == 1) return true;
    const auto a = static_cast<u64>(D < 0 ? -D : D);
    const i64 m4 = ((D % 4) + 4) % 4;
    if (m4 == 1) return is_squarefree(a);
    if (m4 != 0) return false;
    const i64 e = D / 4;
    const i64 e4 = ((e % 4) + 4) % 4;
    return (e4 == 2 || e4 == 3) && is_squarefree(a / 4);
}

}  // namespace

void validate(const TwistSpec& t) {
    check_psi(t.psi);
    check_d(t.d, t.psi.modulus());
}

DirichletCharacter kronecker_character(i64 D) {
    if (!is_fundamental(D)) throw std::invalid_argument("kronecker_character: not a fundamental discriminant");
    const auto N = static_cast<u64>(D < 0 ? -D : D);
    return DirichletCharacter::from_function(make_group(N), [D](i64 n) { return cplx(kronecker(D, n), 0.0); });
}

DirichletCharacter twist_character(const TwistSpec& t) {
    validate(t);
    return kronecker_character(mul_checked(i64{8}, static_cast<i64>(t.d))) * t.psi;
}

cplx hurwitz_zeta(cplx s, double a, int em_terms, int shift) {
    if (!(a > 0.0 && a <= 1.0)) throw std::domain_error("hurwitz_zeta: a must lie in (0, 1]");
    if (s == cplx(1.0, 0.0)) throw std::domain_error("hurwitz_zeta: pole at s = 1");
    const int M = shift > 0 ? shift : auto_shift(s);
    CompensatedSumC acc;
    for (int n = 0; n < M; ++n) acc.add(std::exp(-s * std::log(n + a)));
    const double x = M + a;
    acc.add(std::exp((1.0 - s) * std::log(x)) / (s - 1.0));
    acc.add(em_tail(s, x, em_terms));
    return acc.value();
}

cplx l_reference(const DirichletCharacter& chi, cplx s, int em_terms, int shift) {
    const u64 N = chi.modulus();
    if (N == 1) return hurwitz_zeta(s, 1.0, em_terms, shift);
    const bool principal = chi.is_principal();
    if (principal && s == cplx(1.0, 0.0)) throw std::domain_error("l_reference: pole at s = 1");
    const auto tab = chi.table();
    const int M = shift > 0 ? shift : auto_shift(s);
    const u64 top = static_cast<u64>(M) * N;
    CompensatedSumC head;
    for (u64 m = 1; m <= top; ++m) {
        const cplx c = tab[m % N];
        if (c == cplx{0.0, 0.0}) continue;
        head.add(c * std::exp(-s * std::log(static_cast<double>(m))));
    }
    // tails of zeta(s, a/N); for non-principal chi the x^{1-s}/(s-1) pieces are taken minus 1/(s-1)
    CompensatedSumC tail;
    for (u64 a = 1; a <= N; ++a) {
        const cplx c = tab[a % N];
        if (c == cplx{0.0, 0.0}) continue;
        const double x = M + static_cast<double>(a) / static_cast<double>(N);
        const cplx lead = principal ? std::exp((1.0 - s) * std::log(x)) / (s - 1.0) : shifted_power_quotient(s, x);
        tail.add(c * (lead + em_tail(s, x, em_terms)));
    }
    return head.value() + std::exp(-s * std::log(static_cast<double>(N))) * tail.value();
}

cplx completed_xi(const DirichletCharacter& chi, cplx s) {
    const u64 N = chi.modulus();
    if (N > 1) {
        const auto c = classify(chi);
        if (!c.is_even || !c.is_primitive) throw std::invalid_argument("completed_xi: chi must be even and primitive");
    }
    return std::exp(0.5 * s * std::log(static_cast<double>(N) / kPi)) * gamma_c(0.5 * s) * l_reference(chi, s);
}

TwistEvaluator::TwistEvaluator(DirichletCharacter psi) : psi_(std::move(psi)), q_(psi_.modulus()) {
    check_psi(psi_);
    table_ = psi_.table();
    tau_norm_ = q_ == 1 ? cplx(1.0) : tau(psi_) / std::sqrt(static_cast<double>(q_));
}

cplx TwistEvaluator::epsilon(u64 d) const {
    check_d(d, q_);
    const i64 e = mul_checked(i64{8}, static_cast<i64>(d));
    return tau_norm_ * table_[static_cast<u64>(e) % q_] * static_cast<double>(kronecker(e, static_cast<i64>(q_)));
}

u64 TwistEvaluator::first_cutoff(u64 d) const {
    const double N = 8.0 * double(d) * double(q_);
    return static_cast<u64>(omega_table(1).xi_max() * std::sqrt(N / kPi)) + 1;
}

u64 TwistEvaluator::second_cutoff(u64 d) const {
    const double N = 8.0 * double(d) * double(q_);
    return static_cast<u64>(omega_table(2).xi_max() * N / kPi) + 1;
}

cplx TwistEvaluator::central_value(u64 d) const { return central_value(d, 1.0); }

cplx TwistEvaluator::central_value(u64 d, double extend) const {
    const cplx eps = epsilon(d);
    const i64 e = static_cast<i64>(8 * d);
    const double scale = std::sqrt(kPi / (8.0 * double(d) * double(q_)));
    const u64 base = first_cutoff(d);
    const auto top = static_cast<u64>(std::ceil(double(base) * extend));
    CompensatedSumC acc;
    for (u64 n = 1; n <= top; n += 2) {
        const int k = kronecker(e, static_cast<i64>(n));
        if (k == 0) continue;
        const cplx p = table_[n % q_];
        const double xi = double(n) * scale;
        const double w = n <= base ? omega(1, xi) : omega_contour(1, xi).value.real();
        acc.add(double(k) * w / std::sqrt(double(n)) * (p + eps * std::conj(p)));
    }
    return acc.value();
}

std::shared_ptr<const std::vector<cplx>> TwistEvaluator::twisted_divisors(u64 n_max) const {
    std::lock_guard lock(dmu_);
    if (dpsi_ && dpsi_->size() > n_max) return dpsi_;
    const u64 size = std::max<u64>(n_max + 1, dpsi_ ? 2 * dpsi_->size() : 0);
    std::vector<std::uint32_t> spf(size, 0), ppart(size, 0);
    auto f = std::make_shared<std::vector<cplx>>(size, cplx{});
    if (size > 1) (*f)[1] = 1.0;
    for (u64 i = 2; i < size; ++i) {
        if (spf[i] == 0)
            for (u64 j = i; j < size; j += i)
                if (spf[j] == 0) spf[j] = static_cast<std::uint32_t>(i);
        const u64 p = spf[i], m = i / p;
        ppart[i] = static_cast<std::uint32_t>(m % p == 0 ? ppart[m] * p : p);
        if (ppart[i] == i) {
            // d_psi(p^k) = sum_j psi(p)^j conj(psi(p))^{k-j}
            const cplx a = table_[p % q_];
            int k = 0;
            for (u64 t = i; t > 1; t /= p) ++k;
            cplx s = 0, pa = 1;
            for (int j = 0; j <= k; ++j) {
                cplx pb = 1;
                for (int t = 0; t < k - j; ++t) pb *= std::conj(a);
                s += pa * pb;
                pa *= a;
            }
            (*f)[i] = s;
        } else {
            (*f)[i] = (*f)[ppart[i]] * (*f)[i / ppart[i]];
        }
    }
    dpsi_ = std::move(f);
    return dpsi_;
}

double TwistEvaluator::central_value_sq(u64 d) const {
    check_d(d, q_);
    const i64 e = static_cast<i64>(8 * d);
    const double scale = kPi / (8.0 * double(d) * double(q_));
    const u64 top = second_cutoff(d);
    const auto dp = twisted_divisors(top);
    CompensatedSumC acc;
    for (u64 n = 1; n <= top; n += 2) {
        const int k = kronecker(e, static_cast<i64>(n));
        if (k == 0) continue;
        const cplx c = (*dp)[n];
        if (c == cplx{0.0, 0.0}) continue;
        acc.add(double(k) * omega(2, double(n) * scale) / std::sqrt(double(n)) * c);
    }
    const cplx v = 2.0 * acc.value();
    if (std::abs(v.imag()) > 1e-8 * std::abs(v.real()) + 1e-12) throw std::runtime_error("central_value_sq: imaginary part too large");
    return v.real();
}

cplx central_value(const TwistSpec& t) {
    validate(t);
    return TwistEvaluator(t.psi).central_value(t.d);
}

double central_value_sq(const TwistSpec& t) {
    validate(t);
    return TwistEvaluator(t.psi).central_value_sq(t.d);
}

}  // namespace qtwist
