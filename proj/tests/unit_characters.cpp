#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "doctest.h"
#include "qtwist/characters.hpp"
#include "test_support.hpp"

using namespace qtwist;
using testsupport::uniform;

namespace {

const cplx I{0.0, 1.0};

bool near(cplx a, cplx b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

cplx tau_naive(const DirichletCharacter& chi) {
    const auto N = static_cast<double>(chi.modulus());
    cplx s = 0.0;
    for (u64 a = 0; a < chi.modulus(); ++a) s += chi(static_cast<i64>(a)) * std::polar(1.0, 2 * std::numbers::pi * static_cast<double>(a) / N);
    return s;
}

// smallest m with chi^m principal, by evaluation
u64 order_brute(const DirichletCharacter& chi) {
    for (u64 m = 1;; ++m) {
        bool ok = true;
        for (u64 a = 1; a < chi.modulus() && ok; ++a)
            if (std::gcd(a, chi.modulus()) == 1 && !near(std::pow(chi(static_cast<i64>(a)), static_cast<double>(m)), 1.0, 1e-9)) ok = false;
        if (ok) return m;
    }
}

// least f | N such that chi is trivial on units = 1 mod f
u64 conductor_brute(const DirichletCharacter& chi) {
    const u64 N = chi.modulus();
    for (u64 f = 1; f <= N; ++f) {
        if (N % f) continue;
        bool ok = true;
        for (u64 a = 1; a < N && ok; a += 1)
            if (std::gcd(a, N) == 1 && a % f == 1 % f && !near(chi(static_cast<i64>(a)), 1.0, 1e-9)) ok = false;
        if (ok) return f;
    }
    return N;
}

}  // namespace

TEST_CASE("group structure") {
    for (u64 N = 1; N <= 300; ++N) {
        const auto g = make_group(N);
        u64 prod = 1;
        for (const auto& f : g->factors()) prod *= f.order;
        REQUIRE(prod == euler_phi(N));
        // exponent vectors are unique: dlog is a bijection on units
        std::set<std::vector<u64>> seen;
        for (u64 a = 0; a < N; ++a) {
            std::vector<u64> v(g->factors().size());
            const bool unit = g->dlog(static_cast<i64>(a), v);
            REQUIRE(unit == (std::gcd(a, N) == 1));
            if (unit) REQUIRE(seen.insert(v).second);
        }
    }
}

TEST_CASE("enumerate_characters") {
    CHECK(enumerate_characters(1).size() == 1);
    const auto c5 = enumerate_characters(5);
    REQUIRE(c5.size() == 4);
    std::multiset<u64> orders;
    for (const auto& c : c5) orders.insert(classify(c).order);
    CHECK(orders == std::multiset<u64>{1, 2, 4, 4});
    CHECK(enumerate_characters(34).size() == 16);
    // distinct as functions
    const auto c34 = enumerate_characters(34);
    for (std::size_t i = 0; i < c34.size(); ++i)
        for (std::size_t j = i + 1; j < c34.size(); ++j) {
            bool differ = false;
            for (i64 a = 1; a < 34; a += 2) differ |= !near(c34[i](a), c34[j](a));
            REQUIRE(differ);
        }
}

TEST_CASE("evaluate") {
    const auto g5 = make_group(5);
    CHECK(near(DirichletCharacter::principal(g5)(7), 1.0));
    const auto chi = DirichletCharacter::from_function(g5, [](i64) { return I; });  // chi(2) = i
    REQUIRE(near(chi(2), I));
    CHECK(near(chi(4), -1.0));
    for (const auto& c : enumerate_characters(34)) CHECK(c(17) == cplx{0.0, 0.0});
}

TEST_CASE("classify examples") {
    const auto p5 = classify(DirichletCharacter::principal(make_group(5)));
    CHECK(p5.is_even);
    CHECK(p5.order == 1);
    CHECK(!p5.is_primitive);
    CHECK(p5.conductor == 1);
    CHECK(classify(DirichletCharacter::trivial()).is_primitive);

    const auto psi = DirichletCharacter(make_group(17), {4});
    REQUIRE(near(psi(3), I));
    const auto c = classify(psi);
    CHECK(c.is_even);
    CHECK(c.order == 4);
    CHECK(c.is_primitive);

    const auto leg5 = DirichletCharacter::from_function(make_group(5), [](i64 n) { return cplx(kronecker(n, 5), 0); });
    for (i64 a = 0; a < 5; ++a) REQUIRE(near(leg5(a), double(kronecker(a, 5))));
    const auto l = classify(leg5);
    CHECK(l.is_even);
    CHECK(l.order == 2);
    CHECK(l.is_primitive);
    CHECK(l.conductor == 5);
}

TEST_CASE("classification against brute force") {
    for (u64 N : {1, 2, 3, 4, 8, 9, 12, 16, 24, 25, 27, 32, 34, 40, 45, 48, 63, 64, 72, 80, 96, 100}) {
        for (const auto& chi : enumerate_characters(N)) {
            const auto c = classify(chi);
            REQUIRE(c.order == order_brute(chi));
            REQUIRE(c.conductor == conductor_brute(chi));
            REQUIRE(c.is_even == near(chi(-1), 1.0));
            const auto prim = induce_primitive(chi);
            REQUIRE(prim.modulus() == c.conductor);
            REQUIRE(classify(prim).is_primitive);
            for (i64 a = 0; a < static_cast<i64>(N); ++a)
                if (std::gcd(a, static_cast<i64>(N)) == 1) REQUIRE(near(prim(a), chi(a), 1e-12));
        }
    }
}

TEST_CASE("induce_primitive examples") {
    const auto p34 = DirichletCharacter::principal(make_group(34));
    CHECK(induce_primitive(p34).modulus() == 1);
    const auto psi = DirichletCharacter(make_group(17), {4});
    const auto chi = DirichletCharacter::principal(make_group(34)) * psi.conj() * chi_half(34);
    CHECK(chi.modulus() == 34);
    const auto prim = induce_primitive(chi);
    CHECK(prim.modulus() == 17);
    CHECK(classify(prim).is_primitive);
    CHECK(induce_primitive(psi) == psi);
}

TEST_CASE("multiplicativity and orthogonality") {
    for (u64 N = 1; N <= 100; ++N) {
        const auto chars = enumerate_characters(N);
        for (const auto& chi : chars) {
            for (int t = 0; t < (N > 60 ? 40 : 1000 / static_cast<int>(chars.size()) + 1); ++t) {
                const i64 a = uniform(0, static_cast<i64>(N) - 1), b = uniform(0, static_cast<i64>(N) - 1);
                REQUIRE(near(chi(a) * chi(b), chi((a * b) % static_cast<i64>(N)), 1e-12));
            }
            cplx s = 0.0;
            for (i64 a = 0; a < static_cast<i64>(N); ++a) s += chi(a);
            if (chi.is_principal())
                REQUIRE(near(s, double(euler_phi(N))));
            else
                REQUIRE(std::abs(s) <= 1e-12);
        }
    }
}

TEST_CASE("tau examples") {
    CHECK(near(tau(DirichletCharacter::trivial()), 1.0));
    const auto leg5 = DirichletCharacter::from_function(make_group(5), [](i64 n) { return cplx(kronecker(n, 5), 0); });
    CHECK(near(tau(leg5), std::sqrt(5.0)));
    for (u64 N = 1; N <= 50; ++N)
        for (const auto& chi : enumerate_characters(N)) {
            if (!classify(chi).is_primitive) continue;
            REQUIRE(std::abs(std::abs(tau(chi)) - std::sqrt(double(N))) <= 1e-11);
            REQUIRE(near(tau(chi), tau_naive(chi), 1e-10));
        }
}

TEST_CASE("tau of a product of primitive characters") {
    for (u64 N1 = 2; N1 <= 20; ++N1)
        for (u64 N2 = 2; N1 * N2 <= 200; ++N2) {
            if (std::gcd(N1, N2) != 1) continue;
            for (const auto& c1 : enumerate_characters(N1)) {
                if (!classify(c1).is_primitive) continue;
                for (const auto& c2 : enumerate_characters(N2)) {
                    if (!classify(c2).is_primitive) continue;
                    const auto c12 = c1 * c2;
                    const cplx lhs = tau(c12);
                    const cplx rhs = tau(c1) * tau(c2) * c1(static_cast<i64>(N2)) * c2(static_cast<i64>(N1));
                    REQUIRE(near(lhs, rhs, 1e-10));
                }
            }
        }
}

TEST_CASE("twisted divisor function") {
    const auto psi = DirichletCharacter(make_group(17), {4});
    CHECK(near(twisted_divisor(psi, 1), 1.0));
    for (u64 p : {2, 3, 5, 7, 11, 13, 19, 23}) {
        CHECK(near(twisted_divisor(psi, p), 2.0 * psi(static_cast<i64>(p)).real()));
        const auto pp = static_cast<i64>(p * p);
        CHECK(near(twisted_divisor(psi, p * p), psi(pp) + 1.0 + std::conj(psi(pp))));
    }
    for (int t = 0; t < 500; ++t) {
        const auto m = static_cast<u64>(uniform(1, 3000)), n = static_cast<u64>(uniform(1, 3000));
        const cplx v = twisted_divisor(psi, m * n);
        REQUIRE(std::abs(v.imag()) <= 1e-10);
        if (std::gcd(m, n) == 1) REQUIRE(near(v, twisted_divisor(psi, m) * twisted_divisor(psi, n), 1e-9));
    }
}

TEST_CASE("epsilon factor") {
    CHECK(near(epsilon_factor(DirichletCharacter::trivial(), 5), 1.0));
    const auto psi = DirichletCharacter(make_group(17), {4});
    const cplx e1 = epsilon_factor(psi, 1);
    CHECK(std::abs(std::abs(e1) - 1.0) <= 1e-12);
    CHECK(near(e1, tau(psi) / std::sqrt(17.0) * psi(8) * double(kronecker(8, 17))));
    CHECK_THROWS(epsilon_factor(psi, 17));
    // depends on h only through h mod r when q | r
    for (i64 h = 1; h < 34; h += 2) {
        if (h == 17) continue;
        REQUIRE(near(epsilon_factor(psi, h), epsilon_factor(psi, h + 34 * 7), 1e-12));
    }
}

TEST_CASE("trig expansion") {
    const auto p10 = DirichletCharacter::principal(make_group(10));
    CHECK(near(trig_expansion_coefficient(TrigKind::Cos, 0, p10), double(euler_phi(10))));
    for (const auto& phi : enumerate_characters(34)) CHECK(near(trig_expansion_coefficient(TrigKind::Sin, 0, phi), 0.0));
    for (u64 r : {2, 10, 34})
        for (i64 k : {1, 3, 4, 7}) {
            const auto chars = enumerate_characters(r);
            for (i64 a = 1; a < static_cast<i64>(r); ++a) {
                if (std::gcd(a, static_cast<i64>(r)) != 1) continue;
                cplx c = 0.0, s = 0.0;
                for (const auto& phi : chars) {
                    c += trig_expansion_coefficient(TrigKind::Cos, k, phi) * std::conj(phi(a));
                    s += trig_expansion_coefficient(TrigKind::Sin, k, phi) * std::conj(phi(a));
                }
                const double th = 2 * std::numbers::pi * double(k * a) / double(r);
                REQUIRE(near(c / double(euler_phi(r)), std::cos(th), 1e-12));
                REQUIRE(near(s / double(euler_phi(r)), std::sin(th), 1e-12));
                // the form used in the expansion of cos(2 pi k conj(a)/r): sum coeff * phi(a)
                cplx c2 = 0.0;
                for (const auto& phi : chars) c2 += trig_expansion_coefficient(TrigKind::Cos, k, phi) * phi(a);
                const double th2 = 2 * std::numbers::pi * double(k * mod_inverse(a, static_cast<i64>(r))) / double(r);
                REQUIRE(near(c2 / double(euler_phi(r)), std::cos(th2), 1e-12));
            }
        }
}

TEST_CASE("exponential inner product") {
    const auto triv = DirichletCharacter::trivial();
    for (i64 k = 0; k < 6; ++k) {
        const cplx expect = (k % 2) ? -1.0 : 1.0;
        CHECK(near(exp_inner_product_direct(k, 1, 2, triv), expect));
        CHECK(near(exp_inner_product_closed_form(k, 2, triv), expect));
    }
    const auto psi = DirichletCharacter(make_group(17), {4});
    const auto chi = induce_primitive(psi.conj() * chi_half(34));
    CHECK(near(exp_inner_product_closed_form(1, 34, psi), -chi(2) * tau(chi), 1e-12));
    for (i64 k = -40; k <= 40; ++k)
        for (int sign : {1, -1}) REQUIRE(near(exp_inner_product_closed_form(k, 34, psi), exp_inner_product_direct(k, sign, 34, psi), 1e-11));
    // psi^4 = 1: the printed chi'(2k^2) form agrees
    for (i64 k = 1; k <= 40; ++k) REQUIRE(near(exp_inner_product_closed_form(k, 34, psi), ((k % 2) ? -1.0 : 1.0) * chi(2 * k * k) * tau(chi), 1e-11));
    // larger r with a second odd prime, and a non-quartic psi
    for (u64 r : {102, 170}) {
        for (const auto& ps : enumerate_characters(17)) {
            const auto c = classify(ps);
            if (!c.is_primitive || !c.is_even) continue;
            if (c.order == 2) {
                CHECK_THROWS(exp_inner_product_closed_form(1, r, ps));
                continue;
            }
            for (i64 k = 0; k <= 25; ++k) REQUIRE(near(exp_inner_product_closed_form(k, r, ps), exp_inner_product_direct(k, 1, r, ps), 1e-10));
        }
    }
}

TEST_CASE("labels and selection") {
    const auto psi = select_character(17, 4, true, true);
    CHECK(psi.label() == "17[4]");
    CHECK(near(psi(3), I));
    CHECK(DirichletCharacter(make_group(40), {1, 1, 3}).label() == "40[1,1,3]");
}
