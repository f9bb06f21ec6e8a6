/**
 * @file characters.cpp
 */
#include "qtwist/characters.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace qtwist {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

u64 powmod(u64 b, u64 e, u64 m) {
    unsigned __int128 r = 1 % m, x = b % m;
    while (e) {
        if (e & 1) r = (r * x) % m;
        x = (x * x) % m;
        e >>= 1;
    }
    return static_cast<u64>(r);
}

// least primitive root of p^e, p odd
u64 primitive_root(u64 p, int e) {
    const u64 m = ipow_checked(p, e);
    const u64 phi = (p - 1) * (m / p);
    const auto fac = factorize(phi);
    for (u64 g = 2; g < m; ++g) {
        if (g % p == 0) continue;
        bool ok = true;
        for (const auto& f : fac.factors)
            if (powmod(g, phi / f.p, m) == 1) {
                ok = false;
                break;
            }
        if (ok) return g;
    }
    throw std::logic_error("primitive_root: none found");
}

// x mod m1 and 1 mod m2, m1 m2 coprime
u64 crt_lift(u64 x, u64 m1, u64 m2) {
    if (m2 == 1) return x % m1;
    // n = 1 + m2 * t, need n = x mod m1
    const i64 inv = mod_inverse(static_cast<i64>(m2 % m1), static_cast<i64>(m1));
    const u64 t = static_cast<u64>((static_cast<unsigned __int128>((x + m1 - 1) % m1) * inv) % m1);
    return 1 + m2 * t;
}

u64 v_p(u64 n, u64 p) {
    u64 v = 0;
    while (n % p == 0) {
        n /= p;
        ++v;
    }
    return v;
}

}  // namespace

cplx unit_root(i64 num, i64 den) {
    i64 r = num % den;
    if (r < 0) r += den;
    // exact on the quarter turns
    if (r == 0) return {1.0, 0.0};
    if (4 * r == den) return {0.0, 1.0};
    if (2 * r == den) return {-1.0, 0.0};
    if (4 * r == 3 * den) return {0.0, -1.0};
    const double a = kTwoPi * static_cast<double>(r) / static_cast<double>(den);
    return {std::cos(a), std::sin(a)};
}

CharacterGroup::CharacterGroup(u64 N) : N_(N), phi_(euler_phi(N)) {
    if (N == 0) throw std::domain_error("CharacterGroup: modulus must be positive");
    for (const auto& pp : factorize(N).factors) {
        const u64 comp = ipow_checked(pp.p, pp.e);
        const u64 rest = N / comp;
        if (pp.p == 2) {
            if (pp.e == 1) continue;  // (Z/2)^* trivial
            if (pp.e == 2) {
                factors_.push_back({comp, 3, 2, crt_lift(3, comp, rest)});
                tables_.push_back({-1, 0, -1, 1});
                continue;
            }
            const u64 ob = comp / 4;
            factors_.push_back({comp, comp - 1, 2, crt_lift(comp - 1, comp, rest)});
            factors_.push_back({comp, 5, ob, crt_lift(5, comp, rest)});
            std::vector<std::int64_t> ta(comp, -1), tb(comp, -1);
            u64 x = 1;
            for (u64 k = 0; k < ob; ++k) {
                ta[x] = 0;
                ta[comp - x] = 1;
                tb[x] = tb[comp - x] = static_cast<std::int64_t>(k);
                x = (x * 5) % comp;
            }
            tables_.push_back(std::move(ta));
            tables_.push_back(std::move(tb));
            continue;
        }
        const u64 g = primitive_root(pp.p, pp.e);
        const u64 ord = comp / pp.p * (pp.p - 1);
        factors_.push_back({comp, g, ord, crt_lift(g, comp, rest)});
        std::vector<std::int64_t> t(comp, -1);
        u64 x = 1;
        for (u64 k = 0; k < ord; ++k) {
            t[x] = static_cast<std::int64_t>(k);
            x = (x * g) % comp;
        }
        tables_.push_back(std::move(t));
    }
    for (const auto& f : factors_) exponent_ = std::lcm(exponent_, f.order);
    roots_.resize(exponent_);
    for (u64 k = 0; k < exponent_; ++k) roots_[k] = unit_root(static_cast<i64>(k), static_cast<i64>(exponent_));
}

bool CharacterGroup::dlog(i64 n, std::span<u64> out) const {
    i64 r = n % static_cast<i64>(N_);
    if (r < 0) r += static_cast<i64>(N_);
    if (std::gcd(static_cast<u64>(r), N_) != 1) return false;  // gcd(0, 1) = 1 keeps N = 1 working
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        const auto v = tables_[i][static_cast<u64>(r) % factors_[i].component];
        if (v < 0) return false;
        out[i] = static_cast<u64>(v);
    }
    return true;
}

GroupPtr make_group(u64 N) { return std::make_shared<const CharacterGroup>(N); }

DirichletCharacter::DirichletCharacter(GroupPtr g, std::vector<u64> exponents) : group_(std::move(g)), exps_(std::move(exponents)) {
    const auto fs = group_->factors();
    if (exps_.size() != fs.size()) throw std::invalid_argument("DirichletCharacter: exponent vector has wrong length");
    for (std::size_t i = 0; i < fs.size(); ++i) exps_[i] %= fs[i].order;
}

DirichletCharacter DirichletCharacter::principal(GroupPtr g) {
    const auto n = g->factors().size();
    return {std::move(g), std::vector<u64>(n, 0)};
}

DirichletCharacter DirichletCharacter::from_function(GroupPtr g, const std::function<cplx(i64)>& f) {
    std::vector<u64> e;
    for (const auto& fac : g->factors()) {
        const cplx v = f(static_cast<i64>(fac.global_gen));
        if (std::abs(std::abs(v) - 1.0) > 1e-6) throw std::invalid_argument("from_function: value at a generator is not a unit");
        const double turns = std::arg(v) / kTwoPi * static_cast<double>(fac.order);
        auto k = static_cast<i64>(std::llround(turns));
        k %= static_cast<i64>(fac.order);
        if (k < 0) k += static_cast<i64>(fac.order);
        e.push_back(static_cast<u64>(k));
    }
    return {std::move(g), std::move(e)};
}

std::int64_t DirichletCharacter::log_value(i64 n) const {
    std::array<u64, 24> logs{};
    if (!group_->dlog(n, logs)) return -1;
    const auto fs = group_->factors();
    const u64 L = group_->exponent();
    unsigned __int128 k = 0;
    for (std::size_t i = 0; i < fs.size(); ++i) k += static_cast<unsigned __int128>(exps_[i]) * logs[i] % fs[i].order * (L / fs[i].order);
    return static_cast<std::int64_t>(k % L);
}

cplx DirichletCharacter::operator()(i64 n) const {
    const auto k = log_value(n);
    return k < 0 ? cplx{0.0, 0.0} : group_->root(static_cast<u64>(k));
}

DirichletCharacter DirichletCharacter::conj() const { return pow(-1); }

DirichletCharacter DirichletCharacter::pow(i64 k) const {
    std::vector<u64> e(exps_.size());
    const auto fs = group_->factors();
    for (std::size_t i = 0; i < e.size(); ++i) {
        const auto m = static_cast<i64>(fs[i].order);
        i64 v = static_cast<i64>((static_cast<__int128>(exps_[i]) * (k % m)) % m);
        if (v < 0) v += m;
        e[i] = static_cast<u64>(v);
    }
    return {group_, std::move(e)};
}

DirichletCharacter DirichletCharacter::operator*(const DirichletCharacter& o) const {
    if (modulus() != o.modulus()) {
        const u64 M = std::lcm(modulus(), o.modulus());
        return lift(*this, M) * lift(o, M);
    }
    std::vector<u64> e(exps_.size());
    const auto fs = group_->factors();
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = (exps_[i] + o.exps_[i]) % fs[i].order;
    return {group_, std::move(e)};
}

bool DirichletCharacter::operator==(const DirichletCharacter& o) const { return modulus() == o.modulus() && exps_ == o.exps_; }

bool DirichletCharacter::is_principal() const {
    for (auto e : exps_)
        if (e) return false;
    return true;
}

std::string DirichletCharacter::label() const {
    std::ostringstream os;
    os << modulus() << '[';
    for (std::size_t i = 0; i < exps_.size(); ++i) os << (i ? "," : "") << exps_[i];
    os << ']';
    return os.str();
}

std::vector<cplx> DirichletCharacter::table() const {
    std::vector<cplx> t(modulus());
    for (u64 a = 0; a < modulus(); ++a) t[a] = (*this)(static_cast<i64>(a));
    return t;
}

std::vector<DirichletCharacter> enumerate_characters(u64 N) {
    auto g = make_group(N);
    const auto fs = g->factors();
    std::vector<DirichletCharacter> out;
    std::vector<u64> e(fs.size(), 0);
    while (true) {
        out.emplace_back(g, e);
        // mixed-radix increment, last digit fastest
        std::size_t i = e.size();
        while (i > 0) {
            --i;
            if (++e[i] < fs[i].order) break;
            e[i] = 0;
            if (i == 0) return out;
        }
        if (e.empty()) return out;
    }
}

CharacterClass classify(const DirichletCharacter& chi) {
    CharacterClass c{};
    c.is_even = chi.log_value(-1) == 0;
    const auto fs = chi.group()->factors();
    const auto ex = chi.exponents();
    c.order = 1;
    for (std::size_t i = 0; i < fs.size(); ++i) c.order = std::lcm(c.order, fs[i].order / std::gcd(ex[i], fs[i].order));
    u64 cond = 1;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const u64 comp = fs[i].component;
        if (comp % 2 == 0) {
            if (comp == 4) {
                if (ex[i]) cond *= 4;
                continue;
            }
            // pair (-1, 5): i is the -1 factor, i+1 the 5 factor
            const u64 ob = fs[i + 1].order / std::gcd(ex[i + 1], fs[i + 1].order);
            if (ob > 1)
                cond *= u64{1} << (v_p(ob, 2) + 2);
            else if (ex[i])
                cond *= 4;
            ++i;
            continue;
        }
        const u64 o = fs[i].order / std::gcd(ex[i], fs[i].order);
        if (o == 1) continue;
        u64 p = 0;
        for (const auto& f : factorize(comp).factors) p = f.p;
        cond *= ipow_checked(p, static_cast<int>(o % p == 0 ? 1 + v_p(o, p) : 1));
    }
    c.conductor = cond;
    c.is_primitive = cond == chi.modulus();
    return c;
}

DirichletCharacter lift(const DirichletCharacter& chi, u64 M) {
    if (M % chi.modulus() != 0) throw std::invalid_argument("lift: target modulus is not a multiple");
    if (M == chi.modulus()) return chi;
    return DirichletCharacter::from_function(make_group(M), [&](i64 n) { return chi(n); });
}

DirichletCharacter induce_primitive(const DirichletCharacter& chi) {
    const u64 f = classify(chi).conductor;
    if (f == chi.modulus()) return chi;
    const auto N = static_cast<i64>(chi.modulus());
    return DirichletCharacter::from_function(make_group(f), [&](i64 n) {
        for (i64 t = 0;; ++t) {
            const i64 m = n + static_cast<i64>(f) * t;
            if (std::gcd(m, N) == 1) return chi(m);
        }
    });
}

DirichletCharacter select_character(u64 N, u64 order, bool even, bool primitive) {
    for (auto& chi : enumerate_characters(N)) {
        const auto c = classify(chi);
        if (c.order == order && c.is_even == even && c.is_primitive == primitive) return chi;
    }
    throw std::invalid_argument("select_character: no character mod " + std::to_string(N) + " with the requested properties");
}

cplx tau_table(std::span<const cplx> values) {
    const auto N = static_cast<i64>(values.size());
    cplx s = 0.0;
    for (i64 a = 0; a < N; ++a)
        if (values[a] != cplx{0.0, 0.0}) s += values[a] * unit_root(a, N);
    return s;
}

cplx tau(const DirichletCharacter& chi) { return tau_table(chi.table()); }

cplx twisted_divisor(const DirichletCharacter& psi, u64 n) {
    if (n == 0) throw std::domain_error("twisted_divisor: n must be positive");
    const auto fac = factorize(n);
    std::vector<u64> divs{1};
    for (const auto& f : fac.factors) {
        const auto sz = divs.size();
        u64 pk = 1;
        for (int k = 1; k <= f.e; ++k) {
            pk *= f.p;
            for (std::size_t i = 0; i < sz; ++i) divs.push_back(divs[i] * pk);
        }
    }
    cplx s = 0.0;
    for (u64 d : divs) s += psi(static_cast<i64>(d)) * std::conj(psi(static_cast<i64>(n / d)));
    return s;
}

cplx epsilon_factor(const DirichletCharacter& psi, i64 h) {
    const auto q = static_cast<i64>(psi.modulus());
    if (std::gcd(mul_checked(i64{8}, h), q) != 1) throw std::domain_error("epsilon_factor: gcd(8h, q) > 1");
    if (q == 1) return 1.0;
    return tau(psi) / std::sqrt(static_cast<double>(q)) * psi(8 * h) * static_cast<double>(kronecker(8 * h, q));
}

cplx trig_expansion_coefficient(TrigKind kind, i64 k, const DirichletCharacter& phi) {
    const auto r = static_cast<i64>(phi.modulus());
    cplx s = 0.0;
    for (i64 a = 0; a < r; ++a) {
        const cplx v = phi(a);
        if (v == cplx{0.0, 0.0}) continue;
        const cplx e = unit_root(mul_checked(k % r, a), r);
        s += v * (kind == TrigKind::Cos ? e.real() : e.imag());
    }
    return s;
}

DirichletCharacter chi_half(u64 r) {
    if (r % 2 != 0) throw std::domain_error("chi_half: r must be even");
    const u64 m = r / 2;
    return DirichletCharacter::from_function(make_group(m), [m](i64 n) { return cplx(kronecker(n, static_cast<i64>(m)), 0.0); });
}

cplx exp_inner_product_closed_form(i64 k, u64 r, const DirichletCharacter& psi) {
    // chi' = conj(psi) chi_{r/2}; sum_a chi'(2a) e(a k^2/(r/2)) = chi'(2) conj chi'(k^2) tau(chi')
    const auto chi = induce_primitive(psi.conj() * chi_half(r));
    if (chi.modulus() != r / 2) throw std::domain_error("exp_inner_product_closed_form: conj(psi) chi_{r/2} is not primitive mod r/2");
    const i64 m = static_cast<i64>(chi.modulus());
    const i64 kk = mul_checked(k % m, k % m) % m;
    const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
    return sgn * chi(2) * std::conj(chi(kk)) * tau(chi);
}

cplx exp_inner_product_direct(i64 k, int sign, u64 r, const DirichletCharacter& psi) {
    const auto R = static_cast<i64>(r);
    const auto chi = DirichletCharacter::principal(make_group(r)) * psi.conj() * chi_half(r);
    const i64 kk = mul_checked(k % R, k % R) % R;
    cplx s = 0.0;
    for (i64 a = 0; a < R; ++a) {
        const cplx v = chi(a);
        if (v == cplx{0.0, 0.0}) continue;
        s += unit_root(sign * ((kk * a) % R), R) * v;
    }
    return s;
}

}  // namespace qtwist
