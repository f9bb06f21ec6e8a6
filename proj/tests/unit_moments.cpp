#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "qtwist/moments.hpp"
#include "test_support.hpp"

using namespace qtwist;
using testsupport::rel_err;

namespace {

DirichletCharacter quartic17() { return select_character(17, 4, true, true); }

bool squarefree_naive(u64 d) {
    for (u64 p = 2; p * p <= d; ++p)
        if (d % (p * p) == 0) return false;
    return true;
}

// straight loop over d in (X, 2X)
cplx brute_first(const FamilySpec& s, const TestFunction& Phi) {
    const TwistEvaluator ev(s.psi);
    cplx acc = 0;
    for (u64 d = 1; double(d) < 2 * s.X; ++d) {
        if (double(d) <= s.X || d % s.r != s.h % s.r || !squarefree_naive(d)) continue;
        acc += double(kronecker(i64(8 * d), i64(s.l))) * Phi(double(d) / s.X) * ev.central_value(d);
    }
    return acc / s.X;
}

// sum_{a^2 | d, a <= Y} mu(a), by definition
i64 MY_naive(u64 d, double Y) {
    i64 m = 0;
    for (u64 a = 1; double(a) <= Y && a * a <= d; ++a)
        if (d % (a * a) == 0) m += mobius(a);
    return m;
}

}  // namespace

TEST_CASE("family validation") {
    FamilySpec s{quartic17(), 34, 1, 1, 4096, 2};
    CHECK_NOTHROW(validate(s));
    s.X = 1;
    CHECK_THROWS_WITH(validate(s), "X must exceed 1");
    s.X = 4096;
    s.Y = 0.5;
    CHECK_THROWS_AS(validate(s), std::invalid_argument);
    s.Y = 2;
    s.h = 2;
    CHECK_THROWS_AS(validate(s), std::invalid_argument);
    s.h = 1;
    s.r = 51;
    CHECK_THROWS_AS(validate(s), std::invalid_argument);

    FamilySpec t{quartic17(), 34, 1, 1, 65536, 3};
    CHECK(!t.in_asymptotic_regime());  // 34 * 9 > 65536^0.45
    t.X = 1e9;
    CHECK(t.in_asymptotic_regime());
}

TEST_CASE("empirical first moment vs direct loop") {
    const auto Phi = phi_default();
    for (FamilySpec s : {FamilySpec{quartic17(), 34, 1, 1, 300, 2}, FamilySpec{quartic17(), 34, 3, 1, 500, 2},
                         FamilySpec{quartic17(), 34, 5, 3, 800, 2}, FamilySpec{DirichletCharacter::trivial(), 2, 1, 1, 400, 2},
                         FamilySpec{DirichletCharacter::trivial(), 10, 3, 7, 600, 2}}) {
        const cplx e = empirical_first_moment(s, Phi, {1, 37});
        const cplx b = brute_first(s, Phi);
        CHECK(std::abs(e - b) <= 1e-13 * std::max(1.0, std::abs(b)));
    }
}

TEST_CASE("small X and l sharing a factor with r") {
    const auto Phi = phi_default();
    // (8, 16) holds no multiple of 34 plus 1
    CHECK(empirical_first_moment({quartic17(), 34, 1, 1, 8, 2}, Phi) == cplx(0.0));
    CHECK(empirical_second_moment({quartic17(), 34, 1, 1, 8, 2}, Phi) == 0.0);
    CHECK(empirical_first_moment({quartic17(), 34, 1, 2, 2000, 2}, Phi) == cplx(0.0));
    CHECK(empirical_second_moment({quartic17(), 34, 3, 34, 2000, 2}, Phi) == 0.0);
}

TEST_CASE("second moment is nonnegative and the two methods agree") {
    const auto Phi = phi_default();
    const FamilySpec s{quartic17(), 34, 3, 1, 600, 2};
    const double prod = empirical_second_moment(s, Phi);
    CHECK(prod > 0);
    SumOptions afe;
    afe.method = SecondMomentMethod::SecondAfe;
    CHECK(rel_err(empirical_second_moment(s, Phi, afe), prod) <= 1e-9);
}

TEST_CASE("sums are bit-identical across workers and chunk sizes") {
    const auto Phi = phi_default();
    const FamilySpec s{quartic17(), 34, 1, 1, 3000, 2};
    SumOptions base;
    base.window = 1024;
    const cplx m1 = empirical_first_moment(s, Phi, base);
    const double m2 = empirical_second_moment(s, Phi, base);
    for (unsigned w : {2u, 3u, 5u})
        for (std::size_t c : {std::size_t{1}, std::size_t{7}, std::size_t{64}}) {
            SumOptions o = base;
            o.workers = w;
            o.chunk = c;
            CHECK(empirical_first_moment(s, Phi, o) == m1);
            CHECK(empirical_second_moment(s, Phi, o) == m2);
        }
}

TEST_CASE("truncated weight") {
    for (u64 d = 1; d < 3000; ++d)
        for (double Y : {1.5, 3.0, 10.0})
            REQUIRE(mobius_truncated(d, Y).MY == MY_naive(d, Y));

    // mu^2 and M_Y agree up to d with a square factor a^2, a > Y
    const auto Phi = phi_default();
    FamilySpec s{quartic17(), 34, 1, 1, 20000, 2};
    const cplx exact = empirical_first_moment(s, Phi);
    SumOptions tr;
    tr.weight = SquarefreeWeight::Truncated;
    double prev = 1e300;
    for (double Y : {2.0, 6.0, 20.0}) {
        s.Y = Y;
        const double diff = std::abs(empirical_first_moment(s, Phi, tr) - exact);
        CHECK(diff < prev);
        prev = diff;
    }
    s.Y = 200;  // sqrt(2X) = 200: every square factor is seen
    CHECK(std::abs(empirical_first_moment(s, Phi, tr) - exact) <= 1e-15);
}

TEST_CASE("Poisson summation identity") {
    const auto Phi = phi_default();
    struct Fixture {
        PoissonTuple t;
        double lhs;  // frozen; NaN when only the identity is checked
    };
    const double nan = std::nan("");
    const Fixture cases[] = {
        {{1, 2, 50, 7, 3}, 0.0},  // Phi symmetric about 3/2, (8d|3) odd under d -> 150 - d
        {{3, 34, 200, 3, 15}, -0.005174074198700},
        {{1, 2, 50, 7, 1}, 0.137557289718573},
        {{1, 2, 100, 20, 9}, nan},
        {{3, 10, 300, 20, 7}, nan},
        {{7, 10, 300, 5, 9}, nan},
        {{5, 34, 400, 4, 3}, nan},
        {{1, 10, 1000, 40, 21}, nan},
        {{3, 2, 2000, 50, 45}, nan},
        {{11, 34, 3000, 10, 1}, nan},
    };
    for (const auto& c : cases) {
        CAPTURE(c.t.s);
        CAPTURE(c.t.X);
        const double lhs = poisson_lhs(c.t, Phi);
        if (!std::isnan(c.lhs)) CHECK(std::abs(lhs - c.lhs) <= 1e-14);
        const auto rhs = poisson_rhs(c.t, Phi);
        CHECK(rhs.tail_bound <= 1e-10);
        CHECK(std::abs(lhs - rhs.value) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    }
    CHECK_THROWS_AS(poisson_lhs({1, 2, 50, 7, 4}, Phi), std::invalid_argument);
    CHECK_THROWS_AS(poisson_rhs({1, 6, 50, 7, 3}, Phi), std::invalid_argument);
}

TEST_CASE("k = 0 carries square moduli") {
    const auto Phi = phi_default();
    // the k != 0 share falls as X grows
    auto share = [&](double X) {
        const auto r = poisson_rhs({1, 2, X, 10, 9}, Phi);
        return std::abs(r.value - r.k0_part) / std::abs(r.value);
    };
    CHECK(share(10000) < share(1000));
    // s not a square: G_0 = 0
    CHECK(poisson_rhs({1, 2, 1000, 10, 15}, Phi).k0_part == 0.0);
}

TEST_CASE("report serialization") {
    MomentReport rep;
    rep.spec = {quartic17(), 34, 1, 1, 4096, 2};
    rep.empirical = cplx(1e-4, -2e-5);
    rep.predicted.degree = 0;
    rep.predicted.c0 = cplx(1.1e-4, -2e-5);
    rep.predicted_value = rep.predicted.c0;
    rep.residual = rep.empirical - rep.predicted_value;
    rep.envelope = envelope_first(rep.spec);
    rep.seconds = 1.25;
    rep.workers = 4;
    const auto body = report_body_json(rep);
    CHECK(body.find("seconds") == std::string::npos);
    CHECK(body.find("workers") == std::string::npos);
    CHECK(body.find("\"moment\": \"first\"") != std::string::npos);
    auto other = rep;
    other.seconds = 99;
    other.workers = 1;
    CHECK(report_body_json(other) == body);
    CHECK(report_json(other) != report_json(rep));
    CHECK(report_json(rep).find("\"runtime\"") != std::string::npos);

    const auto row = report_csv_row(rep);
    const auto header = report_csv_header();
    CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
    CHECK(row.rfind("17,34,1,1,4096,2,", 0) == 0);
}

TEST_CASE("envelopes shrink with X") {
    FamilySpec s{quartic17(), 34, 1, 1, 1024, 2};
    const double e1 = envelope_first(s), e2 = envelope_second(s);
    s.X = 1 << 20;
    CHECK(envelope_first(s) < e1);
    CHECK(envelope_second(s) < e2);
}
