/**
 * @file moments.hpp
 * @brief Empirical moment sums over the families d = h (mod r) and the Poisson summation identity.
 */
#pragma once

#include <complex>
#include <string>
#include <vector>

#include "qtwist/characters.hpp"
#include "qtwist/lvalues.hpp"
#include "qtwist/predictions.hpp"
#include "qtwist/special_functions.hpp"

namespace qtwist {

struct FamilySpec {
    DirichletCharacter psi = DirichletCharacter::trivial();
    u64 r = 2;
    u64 h = 1;
    u64 l = 1;
    double X = 1024;
    double Y = 2;
    double delta = 0.05;

    FamilyParams params() const { return {psi, r, h, l}; }
    /// l r Y^2 <= X^{1/2 - delta}
    bool in_asymptotic_regime() const;
};

/// Throws std::invalid_argument with a readable message.
void validate(const FamilySpec& spec);

/// mu^2(d) (the moments proper) or the truncated M_Y(d) used with Poisson summation.
enum class SquarefreeWeight { Exact, Truncated };
/// |L|^2 from the first AFE squared, or from the second AFE (slow: its length grows like d).
enum class SecondMomentMethod { Product, SecondAfe };

struct SumOptions {
    unsigned workers = 1;
    u64 window = u64{1} << 16;
    std::size_t chunk = 64;
    SquarefreeWeight weight = SquarefreeWeight::Exact;
    SecondMomentMethod method = SecondMomentMethod::Product;
};

/// L(1/2, psi chi_{8d}) for odd d coprime to q, squarefree or not: the squarefree part d0
/// carries the central value, the primes of d/d0 remove their Euler factors.
cplx twisted_central_value(const TwistEvaluator& ev, u64 d);

/// (1/X) sum_{d = h (r)} w(d) chi_{8d}(l) L(1/2, psi chi_{8d}) Phi(d/X)
cplx empirical_first_moment(const FamilySpec& spec, const TestFunction& Phi, const SumOptions& opt = {});
/// (1/X) sum_{d = h (r)} w(d) chi_{8d}(l) |L(1/2, psi chi_{8d})|^2 Phi(d/X)
double empirical_second_moment(const FamilySpec& spec, const TestFunction& Phi, const SumOptions& opt = {});

// ---------------------------------------------------------------------------
// Poisson summation

struct PoissonTuple {
    u64 h = 1, r = 2;
    double X = 50, Y = 2;
    u64 s = 1;
};

void validate(const PoissonTuple& t);

/// sum_{d = h (r)} M_Y(d) (8d | s) F(d/X), summed directly.
double poisson_lhs(const PoissonTuple& t, const TestFunction& F);

struct PoissonRhs {
    double value;
    double tail_bound;       // what the k-truncation may have dropped
    std::size_t alpha_terms; // alpha surviving the coprimality conditions
    long max_k;
    double k0_part;          // the k = 0 terms alone
};

struct PoissonOptions {
    double tail_relative = 1e-12;
    double tail_limit = 1e-10;
    long k_limit = 2'000'000;
};

/// The dual side: alpha-sum of Gauss-type sums G_k(s) against hat F, the k-sum cut once the
/// decay of hat F has been seen over three octaves. Throws std::runtime_error if the cut
/// cannot be certified.
PoissonRhs poisson_rhs(const PoissonTuple& t, const TestFunction& F, const PoissonOptions& opt = {});

// ---------------------------------------------------------------------------
// Reports

enum class MomentKind { First, Second };

struct MomentReport {
    MomentKind kind = MomentKind::First;
    FamilySpec spec;
    cplx empirical = 0;
    MainTermPolynomial predicted;
    double nondiagonal = 0;  // included in predicted.c0 for the second moment
    cplx predicted_value = 0;
    cplx residual = 0;
    double envelope = 0;
    double seconds = 0;  // runtime metadata, not part of the body
    unsigned workers = 1;
};

/// Error-term shapes for the first and second moments, epsilon = 0 and unit constants.
double envelope_first(const FamilySpec& spec);
double envelope_second(const FamilySpec& spec);

/// Canonical JSON text of everything except runtime metadata.
std::string report_body_json(const MomentReport& rep);
/// {"body": ..., "runtime": {...}}
std::string report_json(const MomentReport& rep);
std::string report_csv_header();
std::string report_csv_row(const MomentReport& rep);

}  // namespace qtwist
