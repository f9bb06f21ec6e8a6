/**
 * @file characters.hpp
 * @brief Dirichlet characters via the CRT decomposition of (Z/NZ)^*.
 */
#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qtwist/arith.hpp"

namespace qtwist {

using cplx = std::complex<double>;

/// e(num/den) = exp(2 pi i num/den), argument reduced exactly first.
cplx unit_root(i64 num, i64 den);

/// One cyclic factor of the unit group.
struct CyclicFactor {
    u64 component;   // prime power modulus this factor lives on
    u64 generator;   // generator mod component
    u64 order;
    u64 global_gen;  // lift to mod N, = 1 on the other components
};

class CharacterGroup {
public:
    explicit CharacterGroup(u64 N);

    u64 modulus() const { return N_; }
    u64 exponent() const { return exponent_; }  // lcm of factor orders
    u64 order() const { return phi_; }
    std::span<const CyclicFactor> factors() const { return factors_; }

    /// Discrete logs of n on each factor; empty when gcd(n, N) > 1.
    bool dlog(i64 n, std::span<u64> out) const;

    /// Root of unity zeta_exponent^k.
    cplx root(u64 k) const { return roots_[k % exponent_]; }

private:
    u64 N_;
    u64 phi_;
    u64 exponent_ = 1;
    std::vector<CyclicFactor> factors_;
    std::vector<std::vector<std::int64_t>> tables_;  // per factor: residue mod component -> log, -1 if not unit
    std::vector<cplx> roots_;
};

using GroupPtr = std::shared_ptr<const CharacterGroup>;
GroupPtr make_group(u64 N);

struct CharacterClass {
    bool is_even;
    u64 order;
    bool is_primitive;
    u64 conductor;
};

class DirichletCharacter {
public:
    DirichletCharacter(GroupPtr g, std::vector<u64> exponents);

    static DirichletCharacter principal(GroupPtr g);
    static DirichletCharacter trivial() { return principal(make_group(1)); }
    /// Character of `g` agreeing with f on the generators; f must be multiplicative there.
    static DirichletCharacter from_function(GroupPtr g, const std::function<cplx(i64)>& f);

    u64 modulus() const { return group_->modulus(); }
    const GroupPtr& group() const { return group_; }
    std::span<const u64> exponents() const { return exps_; }

    /// Index k with chi(n) = zeta^k for the group exponent; -1 when gcd(n,N) > 1.
    std::int64_t log_value(i64 n) const;
    cplx operator()(i64 n) const;

    DirichletCharacter conj() const;
    DirichletCharacter pow(i64 k) const;
    DirichletCharacter operator*(const DirichletCharacter& o) const;
    bool operator==(const DirichletCharacter& o) const;

    bool is_principal() const;
    std::string label() const;

    /// Values chi(a) for a = 0..N-1.
    std::vector<cplx> table() const;

private:
    GroupPtr group_;
    std::vector<u64> exps_;
};

std::vector<DirichletCharacter> enumerate_characters(u64 N);
CharacterClass classify(const DirichletCharacter& chi);
DirichletCharacter induce_primitive(const DirichletCharacter& chi);
/// Lift chi to modulus M (a multiple of its modulus).
DirichletCharacter lift(const DirichletCharacter& chi, u64 M);

/// First character mod N (label order) with the given order, parity and primitivity.
DirichletCharacter select_character(u64 N, u64 order, bool even, bool primitive);

/// Gauss sum tau(chi).
cplx tau(const DirichletCharacter& chi);
/// Gauss sum of an arbitrary N-periodic table.
cplx tau_table(std::span<const cplx> values);

/// d_psi(n) = sum_{d|n} psi(d) conj psi(n/d).
cplx twisted_divisor(const DirichletCharacter& psi, u64 n);

/// tau(psi)/sqrt(q) * psi(8h) * (8h|q).
cplx epsilon_factor(const DirichletCharacter& psi, i64 h);

enum class TrigKind { Cos, Sin };
/// <trig(2 pi k ./r), conj phi> = sum_a trig(2 pi k a / r) phi(a).
cplx trig_expansion_coefficient(TrigKind kind, i64 k, const DirichletCharacter& phi);

/// chi_{r/2}: the Jacobi symbol (.|r/2) as a character mod r/2.
DirichletCharacter chi_half(u64 r);

/// (-1)^k chi'(2) conj(chi'(k^2)) tau(chi') with chi' = conj(psi)chi_{r/2} primitive mod r/2.
/// For psi^4 = 1 this is (-1)^k chi'(2k^2) tau(chi').
cplx exp_inner_product_closed_form(i64 k, u64 r, const DirichletCharacter& psi);
/// sum_{a mod r} e(sign k^2 a/r) * (phi0 conj(psi) chi_{r/2})(a), directly.
cplx exp_inner_product_direct(i64 k, int sign, u64 r, const DirichletCharacter& psi);

}  // namespace qtwist
