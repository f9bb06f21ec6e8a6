#include "qtwist/moments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qtwist/arith.hpp"
#include "qtwist/gauss_sums.hpp"
#include "qtwist/parallel.hpp"
#include "qtwist/summation.hpp"

namespace qtwist {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<u64> odd_prime_divisors(u64 n) {
    std::vector<u64> out;
    for (const auto& pe : factorize(n).factors)
        if (pe.p != 2) out.push_back(pe.p);
    return out;
}

// d in (X, 2X): first and one-past-last integer
std::pair<u64, u64> d_range(double X, const TestFunction& F) {
    const u64 lo = static_cast<u64>(std::floor(F.lo * X)) + 1;
    const u64 hi = static_cast<u64>(std::ceil(F.hi * X));
    return {lo, std::max(lo, hi)};
}

struct Member {
    u64 d;
    double w;
};

// family members of one window with their weights
std::vector<Member> window_members(u64 lo, u64 hi, u64 r, u64 h, SquarefreeWeight weight, double Y) {
    std::vector<Member> out;
    if (weight == SquarefreeWeight::Exact) {
        const auto w = sieve_family(lo, hi, r, h);
        out.reserve(w.members.size());
        for (u64 d : w.members) out.push_back({d, 1.0});
        return out;
    }
    const u64 hr = h % r;
    for (u64 d = lo + (hr + r - lo % r) % r; d < hi; d += r) {
        const i64 m = mobius_truncated(d, Y).MY;
        if (m != 0) out.push_back({d, double(m)});
    }
    return out;
}

// (1/X) sum over the family of w(d) chi_{8d}(l) Phi(d/X) term(d), windowed, pairwise within and across windows
template <class T, class Term>
T family_sum(const FamilySpec& spec, const TestFunction& Phi, const SumOptions& opt, Term&& term) {
    validate(spec);
    const auto [lo, hi] = d_range(spec.X, Phi);
    const u64 window = std::max<u64>(opt.window, spec.r);
    std::vector<T> partial;
    for (u64 a = lo; a < hi; a += window) {
        const u64 b = std::min(hi, a + window);
        const auto members = window_members(a, b, spec.r, spec.h, opt.weight, spec.Y);
        std::vector<T> terms(members.size(), T{});
        parallel_for(members.size(), opt.workers, opt.chunk, [&](std::size_t i) {
            const u64 d = members[i].d;
            const double chi_l = kronecker(mul_checked(i64{8}, i64(d)), i64(spec.l));
            if (chi_l == 0.0) return;
            const double phi = Phi(double(d) / spec.X);
            if (phi == 0.0) return;
            terms[i] = T(members[i].w * chi_l * phi) * term(d);
        });
        partial.push_back(pairwise_sum(std::span<const T>(terms)));
    }
    return pairwise_sum(std::span<const T>(partial)) / T(spec.X);
}

}  // namespace

bool FamilySpec::in_asymptotic_regime() const {
    return double(l) * double(r) * Y * Y <= std::pow(X, 0.5 - delta);
}

void validate(const FamilySpec& spec) {
    validate(spec.params());
    if (!(spec.X > 1)) throw std::invalid_argument("X must exceed 1");
    if (!(spec.Y > 1)) throw std::invalid_argument("Y must exceed 1");
    if (!(spec.delta > 0)) throw std::invalid_argument("delta must be positive");
}

cplx twisted_central_value(const TwistEvaluator& ev, u64 d) {
    const auto [d0, m] = squarefree_decompose(d);
    cplx v = ev.central_value(d0);
    if (m == 1) return v;
    const i64 eight_d0 = mul_checked(i64{8}, i64(d0));
    for (u64 p : odd_prime_divisors(m)) {
        if (d0 % p == 0) continue;
        v *= 1.0 - ev.psi()(i64(p)) * double(kronecker(eight_d0, i64(p))) / std::sqrt(double(p));
    }
    return v;
}

cplx empirical_first_moment(const FamilySpec& spec, const TestFunction& Phi, const SumOptions& opt) {
    const TwistEvaluator ev(spec.psi);
    return family_sum<cplx>(spec, Phi, opt, [&](u64 d) { return twisted_central_value(ev, d); });
}

double empirical_second_moment(const FamilySpec& spec, const TestFunction& Phi, const SumOptions& opt) {
    const TwistEvaluator ev(spec.psi);
    if (opt.method == SecondMomentMethod::Product)
        return family_sum<double>(spec, Phi, opt, [&](u64 d) { return std::norm(twisted_central_value(ev, d)); });
    return family_sum<double>(spec, Phi, opt, [&](u64 d) {
        const auto [d0, m] = squarefree_decompose(d);
        double v = ev.central_value_sq(d0);
        if (m == 1) return v;
        const i64 eight_d0 = mul_checked(i64{8}, i64(d0));
        for (u64 p : odd_prime_divisors(m))
            if (d0 % p != 0)
                v *= std::norm(1.0 - ev.psi()(i64(p)) * double(kronecker(eight_d0, i64(p))) / std::sqrt(double(p)));
        return v;
    });
}

// ---------------------------------------------------------------------------
// Poisson summation

void validate(const PoissonTuple& t) {
    if (t.s % 2 == 0) throw std::invalid_argument("s must be odd");
    if (t.r == 0) throw std::invalid_argument("r must be positive");
    if (std::gcd(t.s, t.r) != 1) throw std::invalid_argument("s must be coprime to r");
    if (!(t.X > 1) || !(t.Y > 1)) throw std::invalid_argument("X and Y must exceed 1");
}

double poisson_lhs(const PoissonTuple& t, const TestFunction& F) {
    validate(t);
    const auto [lo, hi] = d_range(t.X, F);
    CompensatedSum acc;
    const u64 hr = t.h % t.r;
    for (u64 d = lo + (hr + t.r - lo % t.r) % t.r; d < hi; d += t.r) {
        const i64 m = mobius_truncated(d, t.Y).MY;
        if (m == 0) continue;
        const int ks = kronecker(mul_checked(i64{8}, i64(d)), i64(t.s));
        if (ks == 0) continue;
        acc.add(double(m * ks) * F(double(d) / t.X));
    }
    return acc.value();
}

namespace {

// bound on sum_{k > K} |hat F(k step)| from |hat F| sampled over three octaves above K step
struct TailProbe {
    double bound;
    bool decaying;
};

// values under the quadrature floor count as zero
TailProbe probe_tail(const TestFunction& F, double step, long K, double floor) {
    std::array<double, 4> m{};
    const double x0 = double(K) * step;
    for (int j = 0; j < 4; ++j) {
        const double a = x0 * double(1 << j);
        for (int i = 0; i < 8; ++i) m[j] = std::max(m[j], std::abs(fourier_hat(F, a * (1.0 + i / 8.0)).value));
        if (m[j] <= floor) {
            m[j] = 0.0;
            break;  // higher octaves are left at zero
        }
    }
    // each octave must shrink by more than the doubling of its length
    for (int j = 0; j < 3; ++j)
        if (m[j + 1] > 0.5 * m[j]) return {std::numeric_limits<double>::infinity(), false};
    const double rho = m[2] > 0 ? 2.0 * m[3] / m[2] : 0.0;
    const double bound = double(K) * (m[0] + 2 * m[1] + 4 * m[2] + 8 * m[3] / (1.0 - rho));
    return {bound, true};
}

// hat F(k step), k = 1..K, on fixed Gauss-Legendre nodes with the phases advanced by recurrence
std::vector<cplx> fourier_progression(const TestFunction& F, double step, long K) {
    const double xmax = double(K) * step;
    const int panels = 32 + static_cast<int>(std::ceil(xmax * (F.hi - F.lo)));
    const auto& gx = detail::gl20_nodes();
    const auto& gw = detail::gl20_weights();
    const double width = (F.hi - F.lo) / panels;
    std::vector<double> y, wf;
    for (int p = 0; p < panels; ++p)
        for (int i = 0; i < 20; ++i) {
            const double yi = F.lo + (p + 0.5) * width + 0.5 * width * gx[i];
            const double fi = F(yi);
            if (fi == 0.0) continue;
            y.push_back(yi);
            wf.push_back(0.5 * width * gw[i] * fi);
        }
    std::vector<cplx> z(y.size()), c(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) z[i] = std::polar(1.0, -kTwoPi * step * y[i]);
    std::vector<cplx> out(static_cast<std::size_t>(K));
    for (long k = 1; k <= K; ++k) {
        cplx acc = 0.0;
        if (k % 32 == 1) {
            for (std::size_t i = 0; i < y.size(); ++i) c[i] = std::polar(1.0, -kTwoPi * double(k) * step * y[i]);
        } else {
            for (std::size_t i = 0; i < y.size(); ++i) c[i] *= z[i];
        }
        for (std::size_t i = 0; i < y.size(); ++i) acc += wf[i] * c[i];
        out[static_cast<std::size_t>(k - 1)] = acc;
    }
    return out;
}

}  // namespace

PoissonRhs poisson_rhs(const PoissonTuple& t, const TestFunction& F, const PoissonOptions& opt) {
    validate(t);
    const u64 amax = std::min(isqrt(static_cast<u64>(std::floor(2.0 * t.X))), static_cast<u64>(std::floor(t.Y)));
    const double sd = double(t.s);
    const double minus_one = kronecker(-1, i64(t.s));
    const cplx one_plus_i(1.0, 1.0);
    const double floor = 1e-12 * gauss_legendre([&](double y) { return std::abs(F(y)); }, F.lo, F.hi, 8);

    // G_k(s) depends on k mod s
    std::vector<double> gk_table(t.s);
    for (u64 k = 0; k < t.s; ++k) gk_table[k] = G_formula(i64(k), t.s).real();

    PoissonRhs out{0.0, 0.0, 0, 0, 0.0};
    CompensatedSum total, k0;
    for (u64 alpha = 1; alpha <= amax; ++alpha) {
        if (std::gcd(alpha, t.s) != 1) continue;
        const int mu = mobius(alpha);
        if (mu == 0) continue;
        const u64 a2 = alpha * alpha;
        const u64 g = std::gcd(a2, t.r);
        if (t.h % g != 0) continue;
        ++out.alpha_terms;
        const u64 R = t.r / g;
        const double coef = double(g) * mu / double(a2) * kronecker(mul_checked(i64{8}, i64(R)), i64(t.s)) * t.X / (double(t.r) * sd);
        // e(k m / R) with m = conj(alpha^2/g) (h/g) conj(s) mod R
        const i64 Ri = i64(R);
        const i64 m = R == 1 ? 0
                             : i64((__int128(mod_inverse(i64((a2 / g) % R), Ri)) * i64((t.h / g) % R) % Ri) *
                                   mod_inverse(i64(t.s % R), Ri) % Ri);
        const double step = t.X / (double(a2) * double(R) * sd);

        const double fh0 = fourier_hat(F, 0.0).value.real();
        const double g0 = gk_table[0];
        const double term0 = coef * g0 * fh0;
        k0.add(term0);

        // K by doubling until the sampled decay of hat F certifies the tail, then the sum 1..K
        const double scale = std::abs(coef) * std::abs(fh0) * std::sqrt(sd);
        long K = 4;
        double tail = 0;
        double inner = 0;
        for (;;) {
            const auto probe = probe_tail(F, step, K, floor);
            if (probe.decaying) tail = std::abs(coef) * 2.0 * std::sqrt(2.0) * sd * probe.bound;
            if (probe.decaying && tail <= opt.tail_relative * std::max(std::abs(total.value() + term0), scale)) {
                const auto fh = fourier_progression(F, step, K);
                // spot checks against the adaptive transform
                for (long k : {1L, (K + 1) / 2, K}) {
                    const cplx ref = fourier_hat(F, double(k) * step).value;
                    if (std::abs(ref - fh[k - 1]) > floor)
                        throw std::runtime_error("poisson_rhs: fixed-node transform disagrees with the adaptive one");
                }
                CompensatedSum acc;
                for (long k = 1; k <= K; ++k) {
                    const double ph = kTwoPi * double((__int128(k) * m) % Ri) / double(R);
                    const double gk = gk_table[std::size_t(k % i64(t.s))];
                    // k and -k: G_{-k} = (-1|s) G_k, hat F(-x) = conj hat F(x)
                    const cplx e = std::polar(1.0, ph);
                    const cplx f = fh[k - 1];
                    acc.add(gk * ((one_plus_i * f * e).real() + minus_one * (one_plus_i * std::conj(f) * std::conj(e)).real()));
                }
                inner = acc.value();
                const double running = std::abs(total.value() + term0 + coef * inner);
                if (tail <= opt.tail_relative * std::max(running, scale)) break;
            }
            if (K * 2 > opt.k_limit) {
                if (probe.decaying && tail <= opt.tail_limit * (1.0 + std::abs(total.value() + term0 + coef * inner))) break;
                throw std::runtime_error("poisson_rhs: k-sum truncation could not be certified");
            }
            K *= 2;
        }
        out.max_k = std::max(out.max_k, K);
        out.tail_bound += tail;
        total.add(term0);
        total.add(coef * inner);
    }
    out.value = total.value();
    out.k0_part = k0.value();
    return out;
}

// ---------------------------------------------------------------------------
// Reports

double envelope_first(const FamilySpec& spec) {
    const double l = double(spec.l), r = double(spec.r), X = spec.X, Y = spec.Y;
    return std::pow(l, 1.5) * r * Y * Y / std::sqrt(X) + std::sqrt(l) / (r * std::pow(X, 0.25)) + 1.0 / std::sqrt(Y);
}

double envelope_second(const FamilySpec& spec) {
    const double l = double(spec.l), r = double(spec.r), X = spec.X, Y = spec.Y;
    return 1.0 / (std::sqrt(l) * r * std::sqrt(X)) + l * r * r * Y / std::pow(X, 0.375) + 1.0 / Y + 1.0 / (r * r * Y);
}

namespace {

using ojson = nlohmann::ordered_json;

ojson complex_json(cplx z) { return ojson{{"re", z.real()}, {"im", z.imag()}}; }

ojson body(const MomentReport& rep) {
    const auto& s = rep.spec;
    ojson fam;
    fam["q"] = s.psi.modulus();
    fam["character"] = s.psi.label();
    fam["r"] = s.r;
    fam["h"] = s.h;
    fam["l"] = s.l;
    fam["X"] = s.X;
    fam["Y"] = s.Y;
    fam["delta"] = s.delta;
    fam["asymptotic_regime"] = s.in_asymptotic_regime();
    ojson pred;
    pred["degree"] = rep.predicted.degree;
    pred["c0"] = complex_json(rep.predicted.c0);
    pred["c1"] = complex_json(rep.predicted.c1);
    pred["nondiagonal"] = rep.nondiagonal;
    ojson j;
    j["moment"] = rep.kind == MomentKind::First ? "first" : "second";
    j["family"] = fam;
    j["empirical"] = complex_json(rep.empirical);
    j["predicted"] = pred;
    j["predicted_value"] = complex_json(rep.predicted_value);
    j["residual"] = complex_json(rep.residual);
    j["envelope"] = rep.envelope;
    return j;
}

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

std::string report_body_json(const MomentReport& rep) { return body(rep).dump(2); }

std::string report_json(const MomentReport& rep) {
    ojson j;
    j["body"] = body(rep);
    j["runtime"] = ojson{{"seconds", rep.seconds}, {"workers", rep.workers}};
    return j.dump(2);
}

std::string report_csv_header() { return "q,r,h,l,X,Y,empirical_re,empirical_im,predicted,residual,envelope,seconds"; }

std::string report_csv_row(const MomentReport& rep) {
    const auto& s = rep.spec;
    std::ostringstream os;
    os << s.psi.modulus() << ',' << s.r << ',' << s.h << ',' << s.l << ',' << num(s.X) << ',' << num(s.Y) << ','
       << num(rep.empirical.real()) << ',' << num(rep.empirical.imag()) << ',' << num(rep.predicted_value.real()) << ','
       << num(std::abs(rep.residual)) << ',' << num(rep.envelope) << ',' << num(rep.seconds);
    return os.str();
}

}  // namespace qtwist
