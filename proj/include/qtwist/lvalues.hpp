/**
 * @file lvalues.hpp
 * @brief Central values of L(s, psi x chi_{8d}) and a reference Dirichlet L evaluator.
 */
#pragma once

#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include "qtwist/characters.hpp"

namespace qtwist {

struct TwistSpec {
    DirichletCharacter psi;  // even primitive mod odd q, or trivial mod 1
    u64 d;                   // odd squarefree, coprime to q

    u64 modulus() const { return mul_checked(mul_checked(u64{8}, d), psi.modulus()); }
};

/// Throws std::invalid_argument when the twist is outside the supported family.
void validate(const TwistSpec& t);

/// Kronecker character (D|.) mod |D|; D must be a fundamental discriminant.
DirichletCharacter kronecker_character(i64 D);

/// psi chi_{8d} as a character mod 8dq.
DirichletCharacter twist_character(const TwistSpec& t);

/// Hurwitz zeta(s, a) for a in (0, 1], Euler-Maclaurin with `em_terms` Bernoulli corrections
/// after an explicit sum of `shift` terms (0 = automatic).
cplx hurwitz_zeta(cplx s, double a, int em_terms = 8, int shift = 0);

/// L(s, chi) = N^{-s} sum_a chi(a) zeta(s, a/N). Needs s != 1 for principal chi.
cplx l_reference(const DirichletCharacter& chi, cplx s, int em_terms = 8, int shift = 0);

/// xi(s, chi) = (N/pi)^{s/2} Gamma(s/2) L(s, chi) for even primitive chi.
cplx completed_xi(const DirichletCharacter& chi, cplx s);

/// Cached per-psi data for many central values at varying d.
class TwistEvaluator {
public:
    explicit TwistEvaluator(DirichletCharacter psi);

    const DirichletCharacter& psi() const { return psi_; }
    u64 q() const { return q_; }

    /// tau(psi)/sqrt(q) psi(8d) chi_{8d}(q)
    cplx epsilon(u64 d) const;

    /// Approximate functional equation with omega_1. Terms cut where omega_1 vanishes in double.
    cplx central_value(u64 d) const;
    /// Same, with the cutoff scaled by `extend` and the tail weights taken from the contour.
    cplx central_value(u64 d, double extend) const;

    /// 2 sum d_psi(n) chi_{8d}(n) n^{-1/2} omega_2(n pi/(8dq)). Throws if the imaginary part is not negligible.
    double central_value_sq(u64 d) const;

    /// Number of terms each AFE uses at this d.
    u64 first_cutoff(u64 d) const;
    u64 second_cutoff(u64 d) const;

private:
    DirichletCharacter psi_;
    u64 q_;
    std::vector<cplx> table_;  // psi(a), a mod q
    cplx tau_norm_;            // tau(psi)/sqrt(q)

    mutable std::mutex dmu_;
    mutable std::shared_ptr<const std::vector<cplx>> dpsi_;  // d_psi(n), n < size
    std::shared_ptr<const std::vector<cplx>> twisted_divisors(u64 n_max) const;
};

cplx central_value(const TwistSpec& t);
double central_value_sq(const TwistSpec& t);

}  // namespace qtwist
