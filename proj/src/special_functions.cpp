/**
 * @file special_functions.cpp
 */
#include "qtwist/special_functions.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>
#include <utility>

namespace qtwist {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

// Lanczos, g = 7, n = 9
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
                                            771.32342877765313,   -176.61502916214059,   12.507343278686905,
                                            -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

const double kLogGammaQuarter = std::lgamma(0.25);

struct NodeSet {
    std::array<double, 20> x{};
    std::array<double, 20> w{};
};

NodeSet build_gl20() {
    using G = boost::math::quadrature::gauss<double, 20>;
    NodeSet n;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    // boost stores the nonnegative half
    for (std::size_t i = 0; i < a.size(); ++i) {
        n.x[i] = -a[a.size() - 1 - i];
        n.w[i] = w[a.size() - 1 - i];
        n.x[a.size() + i] = a[i];
        n.w[a.size() + i] = w[i];
    }
    return n;
}

const NodeSet& gl20() {
    static const NodeSet n = build_gl20();
    return n;
}

bool converged(double delta, double value, double floor, const QuadratureOptions& opt) {
    return delta <= opt.tol_rel * std::abs(value) || delta <= floor;
}

// Composite GL with doubling, for smooth integrands on [a,b]; panels0 sets the starting resolution.
template <class Fn>
QuadratureResult refine_gl(Fn&& fn, double a, double b, int panels0, double floor, const QuadratureOptions& opt, const char* what) {
    int panels = std::max(1, panels0);
    cplx prev = gauss_legendre(fn, a, b, panels);
    for (int level = 0; level < opt.max_refinements; ++level) {
        panels *= 2;
        const cplx cur = gauss_legendre(fn, a, b, panels);
        const double delta = std::abs(cur - prev);
        if (converged(delta, std::abs(cur), floor, opt)) return {cur, delta};
        prev = cur;
    }
    throw std::runtime_error(std::string("quadrature did not converge: ") + what);
}

// omega kernel G(s)^j / s on Re s = c, sampled on GL nodes of panels of width h over [0, T]
struct OmegaKernel {
    std::vector<double> t;
    std::vector<cplx> kw;  // weight * kernel
};

double omega_height(int j, double c) {
    // Stirling-checked tail: integrate the exact |kernel| envelope, stop below 1e-18
    for (double T = 4.0;; T += 1.0) {
        const cplx s(c, T);
        const double mag = std::exp(j * (lgamma_c(0.5 * s + 0.25).real() - kLogGammaQuarter)) / std::abs(s);
        // |Gamma(sigma + i t/2)| decays at least like exp(-pi t/4) beyond T
        if (mag * 4.0 / (j * kPi) < 1e-18) return T;
        if (T > 400) throw std::runtime_error("omega_height: no certified truncation");
    }
}

std::shared_ptr<const OmegaKernel> omega_kernel(int j, double c, int level) {
    static std::mutex mu;
    static std::map<std::tuple<int, double, int>, std::shared_ptr<const OmegaKernel>> cache;
    const auto key = std::make_tuple(j, c, level);
    {
        std::lock_guard lk(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto k = std::make_shared<OmegaKernel>();
    const double T = omega_height(j, c);
    const double h = std::ldexp(1.0, -level);
    const int panels = static_cast<int>(std::ceil(T / h));
    const auto& g = gl20();
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * h;
        for (int i = 0; i < 20; ++i) {
            const double t = mid + 0.5 * h * g.x[i];
            const cplx s(c, t);
            const cplx ker = std::exp(static_cast<double>(j) * (lgamma_c(0.5 * s + 0.25) - kLogGammaQuarter)) / s;
            k->t.push_back(t);
            k->kw.push_back(0.5 * h * g.w[i] * ker);
        }
    }
    std::lock_guard lk(mu);
    return cache.emplace(key, std::move(k)).first->second;
}

double omega_on_kernel(const OmegaKernel& k, double xi, double c) {
    const double L = std::log(xi);
    const double scale = std::exp(-c * L);
    double acc = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < k.t.size(); ++i) {
        const double ph = -k.t[i] * L;
        const double term = k.kw[i].real() * std::cos(ph) - k.kw[i].imag() * std::sin(ph);
        // Kahan
        const double y = term - comp;
        const double s = acc + y;
        comp = (s - acc) - y;
        acc = s;
    }
    return scale * acc / kPi;
}

}  // namespace

namespace detail {
const std::array<double, 20>& gl20_nodes() { return gl20().x; }
const std::array<double, 20>& gl20_weights() { return gl20().w; }
}  // namespace detail

cplx lgamma_c(cplx z) {
    if (z.real() < 0.5) {
        // reflection
        return std::log(kPi) - std::log(std::sin(kPi * z)) - lgamma_c(1.0 - z);
    }
    z -= 1.0;
    cplx x = kLanczos[0];
    for (int i = 1; i < 9; ++i) x += kLanczos[i] / (z + static_cast<double>(i));
    const cplx t = z + kLanczosG + 0.5;
    return 0.5 * std::log(kTwoPi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

cplx gamma_c(cplx z) {
    if (z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real())) throw std::domain_error("gamma_c: pole at a nonpositive integer");
    return std::exp(lgamma_c(z));
}

double cas(double x) { return std::cos(x) + std::sin(x); }
cplx cas(cplx z) { return std::cos(z) + std::sin(z); }

cplx gamma1(cplx s) { return std::exp(-s * std::log(kTwoPi)) * gamma_c(s) * cas(0.5 * kPi * s); }

TestFunction phi_default() {
    return {[](double x) { return std::exp(-1.0 / ((x - 1.0) * (2.0 - x))); }, 1.0, 2.0};
}

QuadratureResult fourier_hat(const TestFunction& F, double x, const QuadratureOptions& opt) {
    auto fn = [&](double y) { return F(y) * std::polar(1.0, -kTwoPi * x * y); };
    const double l1 = gauss_legendre([&](double y) { return std::abs(F(y)); }, F.lo, F.hi, 8);
    const int p0 = 2 + static_cast<int>(std::ceil(std::abs(x) * (F.hi - F.lo) / 2));
    return refine_gl(fn, F.lo, F.hi, p0, 1e-15 * l1, opt, "fourier_hat");
}

QuadratureResult tilde_transform(const TestFunction& F, double x, const QuadratureOptions& opt) {
    auto fn = [&](double y) { return cplx(F(y) * cas(kTwoPi * x * y), 0.0); };
    const double l1 = gauss_legendre([&](double y) { return std::abs(F(y)); }, F.lo, F.hi, 8);
    const int p0 = 2 + static_cast<int>(std::ceil(std::abs(x) * (F.hi - F.lo) / 2));
    return refine_gl(fn, F.lo, F.hi, p0, 1e-15 * l1, opt, "tilde_transform");
}

QuadratureResult mellin_phi(const TestFunction& F, cplx s, const QuadratureOptions& opt) {
    auto fn = [&](double y) { return F(y) * std::exp(s * std::log(y)); };
    const double l1 = gauss_legendre([&](double y) { return std::abs(F(y)) * std::pow(y, s.real()); }, F.lo, F.hi, 8);
    const double cycles = std::abs(s.imag()) * std::log(F.hi / F.lo) / kTwoPi;
    return refine_gl(fn, F.lo, F.hi, 2 + static_cast<int>(std::ceil(cycles / 2)), 1e-15 * l1, opt, "mellin_phi");
}

QuadratureResult omega_contour(int j, double xi, double c, const QuadratureOptions& opt) {
    if (j != 1 && j != 2) throw std::invalid_argument("omega: j must be 1 or 2");
    if (!(xi > 0)) throw std::domain_error("omega: xi must be positive");
    if (c <= -0.5 || c == 0.0) throw std::domain_error("omega: line must avoid the poles at 0 and -1/2");
    const double residue = c < 0 ? 1.0 : 0.0;
    const double floor = 1e-16 * std::max(1.0, std::pow(xi, -c));
    double prev = omega_on_kernel(*omega_kernel(j, c, 0), xi, c);
    for (int level = 1; level <= opt.max_refinements; ++level) {
        const double cur = omega_on_kernel(*omega_kernel(j, c, level), xi, c);
        const double delta = std::abs(cur - prev);
        if (converged(delta, cur + residue, floor, opt)) return {cur + residue, delta};
        prev = cur;
    }
    throw std::runtime_error("omega_contour: refinement did not converge");
}

QuadratureResult omega_contour(int j, double xi, const QuadratureOptions& opt) { return omega_contour(j, xi, xi >= 1.0 ? 1.0 : -0.25, opt); }

double omega1_closed(double xi) { return boost::math::gamma_q(0.25, xi * xi); }

double omega2_convolution(double xi) {
    // (1/Gamma(1/4)) int_0^inf e^{-t} t^{1/4} Q(1/4, xi^2/t) dlog t
    auto fn = [xi](double v) {
        const double t = std::exp(v);
        return cplx(std::exp(-t) * std::pow(t, 0.25) * boost::math::gamma_q(0.25, xi * xi / t));
    };
    QuadratureOptions opt;
    opt.tol_rel = 1e-14;
    opt.max_refinements = 8;
    const double a = std::log(xi * xi / 120.0), b = std::log(60.0);
    const double v = refine_gl(fn, a, b, static_cast<int>(std::ceil((b - a) / 0.5)), 1e-19, opt, "omega2_convolution").value.real();
    return v / std::tgamma(0.25);
}

OmegaTable::OmegaTable(int j) : j_(j) {
    if (j != 1 && j != 2) throw std::invalid_argument("OmegaTable: j must be 1 or 2");
    // omega_1 < 1e-17 past 6.3, omega_2 < 1e-17 past 22 (checked against the closed forms in tests)
    xi_max_ = j == 1 ? 6.3 : 22.0;
    width_ = 0.25;
    u0_ = std::log(1e-30);
    const int nseg = static_cast<int>(std::ceil((std::log(xi_max_) - u0_) / width_));
    u1_ = u0_ + nseg * width_;
    coef_.resize(nseg);
    constexpr int n = kDeg + 1;
    for (int s = 0; s < nseg; ++s) {
        const double a = u0_ + s * width_;
        std::array<double, n> f{};
        for (int k = 0; k < n; ++k) {
            const double x = std::cos(kPi * (k + 0.5) / n);
            f[k] = omega_contour(j, std::exp(a + 0.5 * width_ * (x + 1.0))).value.real();
        }
        for (int m = 0; m < n; ++m) {
            double c = 0;
            for (int k = 0; k < n; ++k) c += f[k] * std::cos(kPi * m * (k + 0.5) / n);
            coef_[s][m] = (m == 0 ? 1.0 : 2.0) * c / n;
        }
    }
}

double OmegaTable::operator()(double xi) const {
    if (xi >= xi_max_) return 0.0;
    const double u = std::log(xi);
    if (u < u0_) return omega_contour(j_, xi).value.real();
    auto s = static_cast<std::size_t>((u - u0_) / width_);
    if (s >= coef_.size()) s = coef_.size() - 1;
    const double x = 2.0 * (u - (u0_ + s * width_)) / width_ - 1.0;
    // Clenshaw
    const auto& c = coef_[s];
    double b1 = 0, b2 = 0;
    for (int m = kDeg; m >= 1; --m) {
        const double b0 = 2 * x * b1 - b2 + c[m];
        b2 = b1;
        b1 = b0;
    }
    return x * b1 - b2 + c[0];
}

const OmegaTable& omega_table(int j) {
    static const OmegaTable t1(1);
    static const OmegaTable t2(2);
    if (j == 1) return t1;
    if (j == 2) return t2;
    throw std::invalid_argument("omega_table: j must be 1 or 2");
}

double omega(int j, double xi) {
    if (!(xi > 0)) throw std::domain_error("omega: xi must be positive");
    return omega_table(j)(xi);
}

double F_weight(int j, double eta, const TestFunction& F, double X, double q, double xi) {
    const double v = F(xi);
    if (v == 0.0) return 0.0;
    return v * omega(j, eta * std::pow(kPi / (8 * q * X * xi), 0.5 * j));
}

double omega_cap(double y) {
    if (!(y > 0)) throw std::domain_error("omega_cap: y must be positive");
    return omega(2, 1.0 / y) / y;
}

QuadratureResult omega_tilde(double x) {
    if (x == 0.0) throw std::domain_error("omega_tilde: divergent at x = 0");
    const double w = kTwoPi * std::abs(x);
    auto f = [](double v) { return v > 0 ? omega_cap(v) : 0.0; };
    boost::math::quadrature::ooura_fourier_cos<double> qc(1e-12);
    boost::math::quadrature::ooura_fourier_sin<double> qs(1e-12);
    const auto [c, ec] = qc.integrate(f, w);
    const auto [s, es] = qs.integrate(f, w);
    const double v = x > 0 ? c + s : c - s;
    return {v, std::abs(ec * c) + std::abs(es * s)};
}

QuadratureResult f_integral(double xi, cplx s, const TestFunction& F, double X, double q, const QuadratureOptions& opt) {
    if (xi == 0.0) throw std::domain_error("f_integral: xi must be nonzero");
    if (s.real() <= -1.0) throw std::domain_error("f_integral: needs Re s > -1");
    // t -> 8qXy/(pi w) splits off the y-integral:
    // f = Phi_check(s) (8qX/pi)^s int_0^inf omega_2(1/w) cas(2 pi a w) w^{-s-1} dw, a = pi xi/(8qX)
    const double a = kPi * xi / (8.0 * q * X);
    const double w = kTwoPi * std::abs(a), sgn = a > 0 ? 1.0 : -1.0;
    const auto mel = mellin_phi(F, s, opt);
    // w^{-s-1} = w^{-sigma-1} (cos(tau log w) - i sin(tau log w))
    const double sig = s.real(), tau = s.imag();
    auto base = [sig](double v) {
        if (!(v > 0)) return 0.0;
        const double o = omega(2, 1.0 / v);
        return o == 0.0 ? 0.0 : o * std::pow(v, -sig - 1.0);
    };
    auto re = [&](double v) { return v > 0 ? base(v) * std::cos(tau * std::log(v)) : 0.0; };
    auto im = [&](double v) { return v > 0 ? -base(v) * std::sin(tau * std::log(v)) : 0.0; };
    boost::math::quadrature::ooura_fourier_cos<double> qc(std::max(opt.tol_rel, 1e-13));
    boost::math::quadrature::ooura_fourier_sin<double> qs(std::max(opt.tol_rel, 1e-13));
    const auto [cr, ecr] = qc.integrate(re, w);
    const auto [sr, esr] = qs.integrate(re, w);
    double ci = 0, si = 0, eci = 0, esi = 0;
    if (tau != 0.0) {
        std::tie(ci, eci) = qc.integrate(im, w);
        std::tie(si, esi) = qs.integrate(im, w);
    }
    const cplx integral(cr + sgn * sr, ci + sgn * si);
    const double err = std::abs(ecr * cr) + std::abs(esr * sr) + std::abs(eci * ci) + std::abs(esi * si);
    const cplx scale = std::exp(s * std::log(8.0 * q * X / kPi));
    const cplx v = mel.value * scale * integral;
    return {v, std::abs(scale) * (std::abs(mel.value) * err + mel.error_estimate * std::abs(integral))};
}

QuadratureResult f_integral_direct(double xi, cplx s, const TestFunction& F, double X, double q, const QuadratureOptions& opt) {
    if (xi == 0.0) throw std::domain_error("f_integral: xi must be nonzero");
    if (s.real() <= -1.0) throw std::domain_error("f_integral: needs Re s > -1");
    // x = |xi|/t: f = int_0^inf [int Phi(y) omega_2(c0/(x y)) cas(2 pi sgn x y) dy] (|xi|/x)^s dx/x
    const double axi = std::abs(xi), sgn = xi > 0 ? 1.0 : -1.0;
    const double c0 = axi * kPi / (8.0 * q * X);
    const double ximax = omega_table(2).xi_max();
    const double xmin = c0 / (F.hi * ximax);
    const double l1 = gauss_legendre([&](double y) { return std::abs(F(y)); }, F.lo, F.hi, 8);
    // beyond x_cut the bump transform is below 1e-14 of its mass
    double xcut = 8.0;
    while (std::abs(fourier_hat(F, xcut).value) > 1e-14 * l1 || std::abs(fourier_hat(F, xcut + 0.37).value) > 1e-14 * l1) xcut += 8.0;
    xcut *= 1.5;

    auto inner = [&](double x, int mult) {
        const int panels = mult * (2 + static_cast<int>(std::ceil(x * (F.hi - F.lo) / 2)));
        const double v = gauss_legendre(
            [&](double y) {
                const double fy = F(y);
                if (fy == 0.0) return 0.0;
                return fy * omega(2, c0 / (x * y)) * cas(kTwoPi * sgn * x * y);
            },
            F.lo, F.hi, panels);
        return v * std::exp(s * std::log(axi / x));
    };
    auto total = [&](int mult) {
        cplx acc = 0.0;
        // log-spaced part below 1, linear part above
        if (xmin < 1.0) {
            const double la = std::log(xmin), lb = 0.0;
            const int panels = mult * std::max(2, static_cast<int>(std::ceil((lb - la) / 0.5)));
            acc += gauss_legendre([&](double lx) { return inner(std::exp(lx), mult); }, la, lb, panels);
        }
        const double a = std::max(1.0, xmin);
        if (a < xcut) {
            const int panels = mult * std::max(2, static_cast<int>(std::ceil((xcut - a) / 0.5)));
            acc += gauss_legendre([&](double x) { return inner(x, mult) / x; }, a, xcut, panels);
        }
        return acc;
    };
    cplx prev = total(1);
    for (int level = 1, mult = 2; level <= opt.max_refinements; ++level, mult *= 2) {
        const cplx cur = total(mult);
        const double delta = std::abs(cur - prev);
        if (converged(delta, std::abs(cur), 1e-16 * l1, opt)) return {cur, delta};
        prev = cur;
    }
    throw std::runtime_error("f_integral: refinement did not converge");
}

}  // namespace qtwist
