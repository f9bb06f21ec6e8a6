/**
 * @file special_functions.hpp
 * @brief Test bump, its transforms, the weights omega_j and the derived transforms.
 */
#pragma once

#include <array>
#include <complex>
#include <functional>
#include <memory>
#include <vector>

namespace qtwist {

using cplx = std::complex<double>;

/// log Gamma(z) for complex z (Lanczos, reflected for Re z < 1/2). Branch is not continuous.
cplx lgamma_c(cplx z);
cplx gamma_c(cplx z);

double cas(double x);
cplx cas(cplx z);

/// Gamma_1(s) = (2 pi)^{-s} Gamma(s) cas(pi s/2).
cplx gamma1(cplx s);

struct QuadratureOptions {
    double tol_rel = 1e-12;
    int max_refinements = 20;
};

struct QuadratureResult {
    cplx value;
    double error_estimate;  // difference between the last two refinement levels
};

/// Smooth function supported in [lo, hi].
struct TestFunction {
    std::function<double(double)> f;
    double lo = 1.0;
    double hi = 2.0;
    double operator()(double x) const { return (x <= lo || x >= hi) ? 0.0 : f(x); }
};

/// exp(-1/((x-1)(2-x))) on (1,2).
TestFunction phi_default();

/// int F(y) e(-xy) dy
QuadratureResult fourier_hat(const TestFunction& F, double x, const QuadratureOptions& opt = {});
/// int F(y) cas(2 pi x y) dy
QuadratureResult tilde_transform(const TestFunction& F, double x, const QuadratureOptions& opt = {});
/// int F(y) y^s dy
QuadratureResult mellin_phi(const TestFunction& F, cplx s, const QuadratureOptions& opt = {});

/// omega_j(xi) on the vertical line Re s = c. c must be > -1/2; the residue at 0 is added when c < 0.
QuadratureResult omega_contour(int j, double xi, double c, const QuadratureOptions& opt = {});
/// Line chosen automatically (c = 1 for xi >= 1, c = -1/4 below).
QuadratureResult omega_contour(int j, double xi, const QuadratureOptions& opt = {});

/// Independent evaluations: omega_1 = Q(1/4, xi^2); omega_2 as a Q(1/4, .) convolution.
double omega1_closed(double xi);
double omega2_convolution(double xi);

/// Piecewise Chebyshev interpolant of omega_j in log xi, built from contour values.
class OmegaTable {
public:
    explicit OmegaTable(int j);
    double operator()(double xi) const;
    double xi_max() const { return xi_max_; }
    int j() const { return j_; }

private:
    static constexpr int kDeg = 16;
    int j_;
    double u0_, u1_, width_, xi_max_;
    std::vector<std::array<double, kDeg + 1>> coef_;
};

/// Shared immutable tables, built on first use.
const OmegaTable& omega_table(int j);

/// Fast omega_j: table in range, contour quadrature below it, 0 beyond the certified cutoff.
double omega(int j, double xi);

/// F_{j,eta}(xi) = F(xi) omega_j(eta (pi/(8 q X xi))^{j/2})
double F_weight(int j, double eta, const TestFunction& F, double X, double q, double xi);

/// Omega(y) = omega_2(1/y)/y
double omega_cap(double y);

/// tilde Omega(x) = int_0^inf Omega(v) cas(2 pi x v) dv
QuadratureResult omega_tilde(double x);

/// f(xi, s) = int_0^inf tilde F_{2,t}(xi/t) t^{s-1} dt after the change of variables t -> 8qXy/t.
QuadratureResult f_integral(double xi, cplx s, const TestFunction& F, double X, double q, const QuadratureOptions& opt = {});
/// Same integral by direct double quadrature in (t, y); slow, used as an oracle.
QuadratureResult f_integral_direct(double xi, cplx s, const TestFunction& F, double X, double q, const QuadratureOptions& opt = {});

/// Composite Gauss-Legendre rule on [a, b] with `panels` panels of 20 nodes.
template <class Fn>
auto gauss_legendre(Fn&& fn, double a, double b, int panels) -> decltype(fn(a));

namespace detail {
const std::array<double, 20>& gl20_nodes();
const std::array<double, 20>& gl20_weights();
}  // namespace detail

template <class Fn>
auto gauss_legendre(Fn&& fn, double a, double b, int panels) -> decltype(fn(a)) {
    using R = decltype(fn(a));
    const auto& x = detail::gl20_nodes();
    const auto& w = detail::gl20_weights();
    const double h = (b - a) / panels;
    R total{};
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h, half = 0.5 * h;
        R part{};
        for (int k = 0; k < 20; ++k) part += w[k] * fn(mid + half * x[k]);
        total += part * half;
    }
    return total;
}

}  // namespace qtwist
