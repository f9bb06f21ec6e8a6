/**
 * @file predictions.hpp
 * @brief Main terms of the first and second moments: Euler products, residues, the non-diagonal constant.
 */
#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "qtwist/characters.hpp"
#include "qtwist/special_functions.hpp"

namespace qtwist {

/// Family data shared by all predictions: psi mod q, d = h (mod r), twist by chi_{8d}(l).
struct FamilyParams {
    DirichletCharacter psi;
    u64 r = 2;
    u64 h = 1;
    u64 l = 1;

    u64 q() const { return psi.modulus(); }
};

/// r even squarefree with q | r, h odd and coprime to r, l >= 1. Throws std::invalid_argument.
void validate(const FamilyParams& f);

// ---------------------------------------------------------------------------
// Euler products

/// (1 - chi(p) p^{-s})^{power}, divided out of every factor before truncation.
struct EulerPeel {
    DirichletCharacter chi;
    cplx s;
    int power = 1;
};

struct EulerOptions {
    u64 cutoff = 1'000'000;
    u64 max_cutoff = 64'000'000;
    double tail_target = 1e-12;
    double tail_limit = 1e-10;
};

struct EulerValue {
    cplx value;
    double tail_estimate;  // bound on |log(true/truncated)|
    u64 cutoff;
};

/// prod_p factor(p). The peels are replaced by exact L-values; what remains must be
/// 1 + O(p^{-rate}) with rate > 1. Primes dividing `exceptional` are left out of the tail fit.
class EulerProduct {
public:
    EulerProduct(std::function<cplx(u64)> factor, std::vector<EulerPeel> peels, double rate, u64 exceptional = 1);
    EulerValue evaluate(const EulerOptions& opt = {}) const;
    double rate() const { return rate_; }

private:
    std::function<cplx(u64)> factor_;
    std::vector<EulerPeel> peels_;
    double rate_;
    u64 exceptional_;
};

/// Primes in [lo, hi).
std::vector<u64> primes_between(u64 lo, u64 hi);

/// prod_{p | nu} (1 - chi(p) p^{-s})
cplx euler_A(u64 nu, cplx s, const DirichletCharacter& chi);
/// prod_{p not | nu} (1 - chi(p)/(p^s (p+1))), Re s > 0
EulerValue euler_B(u64 nu, cplx s, const DirichletCharacter& chi, const EulerOptions& opt = {});
/// prod_{p not | mu, p | nu} (1 + 1/p)(1 - chi(p)/(p^s (p+1)))
cplx euler_C(u64 mu, u64 nu, cplx s, const DirichletCharacter& chi);

// ---------------------------------------------------------------------------
// Residue bookkeeping

struct MainTermPolynomial {
    int degree = 0;
    cplx c0 = 0;
    cplx c1 = 0;
    cplx operator()(double log_x) const { return c0 + c1 * log_x; }
};

struct DerivativeOptions {
    double coarse = 1e-2;
    double fine = 1e-3;
    double tolerance = 1e-7;
};

/// Central differences at two steps with one Richardson level; a second pair at half the
/// steps must agree within the tolerance or std::runtime_error is thrown.
cplx richardson_derivative(const std::function<cplx(cplx)>& g, cplx s0, const DerivativeOptions& opt = {});

// ---------------------------------------------------------------------------
// First moment

struct FirstMomentTerms {
    cplx D;         // one half of the diagonal
    cplx epsilon;   // root number at h
    cplx constant;  // D + epsilon conj(D)
    cplx L1;        // L(1, psi^2)
    cplx A_r, B_r, C_rl, A_rq;
    double phi_hat0;
};

/// Degree-0 main term for non-quadratic psi. Zero when gcd(l, r) > 1.
FirstMomentTerms first_moment_terms(const FamilyParams& f, const TestFunction& Phi);
cplx first_moment_constant(const FamilyParams& f, const TestFunction& Phi);
/// Degree-1 polynomial in log X for trivial psi.
MainTermPolynomial first_moment_poly_trivial(const FamilyParams& f, const TestFunction& Phi, const DerivativeOptions& d = {});
/// Dispatches on psi.
MainTermPolynomial first_moment_prediction(const FamilyParams& f, const TestFunction& Phi);

// ---------------------------------------------------------------------------
// Second moment, diagonal

/// Local factor of eta_psi(s; l, r) at the prime p.
cplx eta_factor(const DirichletCharacter& psi, u64 p, cplx s, u64 l, u64 r);
EulerValue eta_product(const DirichletCharacter& psi, cplx s, u64 l, u64 r, const EulerOptions& opt = {});
/// sum_k phi_0(p^k) d_psi(p^{v + 2k}) p^{-ks} / prod(1 + 1/p), v = v_p(l_1): the p-part of L_psi(s; l, r).
cplx diagonal_local_series(const DirichletCharacter& psi, u64 p, cplx s, u64 l, u64 r, int terms = 200);

/// Whether the leading 2 of the second approximate functional equation is kept in the diagonal.
enum class DiagonalNormalization { WithAfeFactor, WithoutAfeFactor };

MainTermPolynomial second_moment_diag_poly(const FamilyParams& f, const TestFunction& Phi,
                                           DiagonalNormalization norm = DiagonalNormalization::WithAfeFactor,
                                           const DerivativeOptions& d = {});

// ---------------------------------------------------------------------------
// Second moment, non-diagonal

/// Which characters multiply the j- and alpha-sums of the kernel. For chi = conj(psi)^2 the
/// residue at the pole carries conj(chi)(j) and chi(alpha); the printed closed form uses
/// chi(j) and conj(chi)(alpha). Both agree for real chi.
struct KernelConvention {
    bool j_conj = true;
    bool alpha_conj = false;
    static KernelConvention derived() { return {true, false}; }
    static KernelConvention printed() { return {false, true}; }
};

/// Local factor G_{chi,p}(1; p^{2 gamma}) of the square-k kernel: p not | alpha r, delta = v_p(l).
cplx kernel_local_G(const DirichletCharacter& chi, u64 p, int gamma, int delta);
/// H*_{chi,p}(s) from the case table. Cases p | l use the printed formulas (printed convention)
/// or the continued local sum (otherwise).
cplx H_star_factor(const DirichletCharacter& chi, u64 p, cplx s, u64 l, u64 r, u64 alpha,
                   KernelConvention conv = KernelConvention::printed());
/// The defining double sum over gamma and beta, truncated; Re s > 0 only.
cplx H_star_raw(const DirichletCharacter& chi, u64 p, cplx s, u64 l, u64 r, u64 alpha,
                KernelConvention conv = KernelConvention::printed(), int terms = 40);
/// The gamma-sum continued to all s by its exact geometric tail.
cplx H_star_local(const DirichletCharacter& chi, u64 p, cplx s, u64 l, u64 r, u64 alpha,
                  KernelConvention conv = KernelConvention::printed());

/// E_chi(s; l, r), |Re s| < 1/2.
EulerValue E_euler(const DirichletCharacter& chi, cplx s, u64 l, u64 r,
                   KernelConvention conv = KernelConvention::printed(), const EulerOptions& opt = {});
/// K_chi(s; l, r) from the closed form.
cplx K_euler(const DirichletCharacter& chi, cplx s, u64 l, u64 r,
             KernelConvention conv = KernelConvention::printed(), const EulerOptions& opt = {});
/// K from the alpha-sum with the analytically continued H*, alpha <= alpha_max.
cplx K_alpha_sum(const DirichletCharacter& chi, cplx s, u64 l, u64 r, u64 alpha_max,
                 KernelConvention conv = KernelConvention::printed(), const EulerOptions& opt = {});

/// G_{psi,phi}(s; k, l, r, alpha) as an Euler product, Re s > 1/2.
EulerValue script_G(const DirichletCharacter& psi, const DirichletCharacter& phi, cplx s, i64 k, u64 l, u64 r, u64 alpha,
                    const EulerOptions& opt = {});
/// The two L-functions dividing D_{psi,phi}: psi phi (k1 r/2 | .) and conj(psi) phi (k1 r/2 | .).
std::pair<DirichletCharacter, DirichletCharacter> script_G_denominators(const DirichletCharacter& psi,
                                                                       const DirichletCharacter& phi, i64 k, u64 r);
/// D_{psi,phi}(s; k, l, r, alpha) summed directly over n <= n_max.
cplx script_D_series(const DirichletCharacter& psi, const DirichletCharacter& phi, cplx s, i64 k, u64 l, u64 r, u64 alpha,
                     u64 n_max);

struct NondiagonalOptions {
    double line = 0.25;
    double t_max = 30.0;
    double width = 1.0;  // widest panel; panels near t = 0 shrink geometrically
    KernelConvention conv = KernelConvention::derived();
    EulerOptions euler = {100'000, 64'000'000, 1e-12, 1e-10};
};

struct NondiagonalTerms {
    cplx prefactor;   // the constant in front of the contour integral, real part not yet taken
    cplx integral;    // (1/2 pi i) int over the line
    double value;     // N_{h,l,r,psi,Phi}
    double quadrature_error;
};

/// Integrand of the contour integral divided by the prefactor: Gamma^2 Gamma_1 K (8lqr/pi)^s / (Gamma^2(1/4) A A s).
cplx nondiag_integrand(const FamilyParams& f, cplx s, const NondiagonalOptions& opt = {});
/// The non-diagonal constant. Requires psi non-quadratic, gcd(l, r) = 1 (else 0) and r/2 = 1 (mod 4).
NondiagonalTerms nondiag_terms(const FamilyParams& f, const TestFunction& Phi, const NondiagonalOptions& opt = {});
double nondiag_constant(const FamilyParams& f, const TestFunction& Phi, const NondiagonalOptions& opt = {});

/// J(s) = Gamma^2(s/2+1/4) Gamma_1(s) K_chi(s; 1, 2q) (16 q^2/pi)^s / Gamma^2(1/4), q the modulus of chi.
cplx J_function(const DirichletCharacter& chi, cplx s, KernelConvention conv = KernelConvention::derived(),
                const EulerOptions& opt = {100'000, 64'000'000, 1e-12, 1e-10});

struct QuarticClosedForm {
    double value;         // from the residue at 0 with the even symmetry of J
    cplx K0;              // K(0), vanishes through L(0, chi)
    cplx K_prime0;
    cplx residue;         // Res_{s=0} of the integrand
    cplx tau2;            // tau(psi^2)^2
    double printed_value; // the printed expression with 1 + tau^2 and its bracket
};
QuarticClosedForm quartic_closed_form(const FamilyParams& f, const TestFunction& Phi, const DerivativeOptions& d = {});

/// sum_{h mod r, (h, r) = 1} conj(psi) chi_{r/2}(h) (h | m), summed by root-of-unity index counts.
cplx orthogonality_average(const DirichletCharacter& psi, u64 r, u64 m);
/// (1/phi(r)) sum_h N_{h,l,r,psi,Phi}; the integral is shared between h with the same A-factors.
double nondiag_h_average(const FamilyParams& f, const TestFunction& Phi, const NondiagonalOptions& opt = {});

// ---------------------------------------------------------------------------

struct SecondMomentPrediction {
    MainTermPolynomial diagonal;
    double nondiagonal = 0;
    MainTermPolynomial total;
};
SecondMomentPrediction second_moment_prediction(const FamilyParams& f, const TestFunction& Phi,
                                                DiagonalNormalization norm = DiagonalNormalization::WithAfeFactor,
                                                const NondiagonalOptions& opt = {});

}  // namespace qtwist
