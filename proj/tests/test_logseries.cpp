#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "za/logseries.hpp"
#include "za/odekernels.hpp"

using namespace za;

namespace {
const Real NU = 4.5 + 1.0 / PI;

LogPowerSeries mono(Exponent mu, int s, Cplx c, char var = 'x') {
    LogPowerSeries out;
    out.var = var;
    out.add_term({mu, s, 0}, c);
    return out;
}
}  // namespace

TEST_CASE("exponent lattice: equality and no-collision certificate") {
    Exponent a{1, 2, 1, 0}, b{1, 2, 1, 0}, c{1, 2, 0, 0};
    CHECK(a == b);
    CHECK(!(a == c));
    CHECK(a.value(NU) == doctest::Approx(1.5 + 2 * NU));
    CHECK(exponent_no_collision(NU, 200, 1e-9));
    // a rational nu collides immediately
    CHECK(!exponent_no_collision(4.5, 200, 1e-9));
}

TEST_CASE("series arithmetic: calculus identities and lattice cancellation") {
    // differentiate(x^0 log x) = x^{-1}
    auto s = mono(Exponent::integer(0), 1, 1.0);
    auto d = s.differentiate(NU);
    REQUIRE(d.terms.size() == 1);
    auto k = d.terms.begin()->first;
    CHECK(k.mu == Exponent::integer(-1));
    CHECK(k.s == 0);
    CHECK(d.terms.begin()->second == Cplx(1));

    // mul(x^{nu}, x^{-nu}) = x^0
    auto p1 = mono(Exponent::nu_units(1), 0, 2.0);
    auto p2 = mono(Exponent::nu_units(-1), 0, 3.0);
    auto pr = mul(p1, p2);
    REQUIRE(pr.terms.size() == 1);
    CHECK(pr.terms.begin()->first.mu == Exponent::integer(0));
    CHECK(pr.terms.begin()->second == Cplx(6));

    // anchor mismatch throws
    LogPowerSeries other = p1;
    other.anchor = Anchor::Infinity;
    CHECK_THROWS_AS(add(p1, other), NumericsError);
}

TEST_CASE("W-series square: coefficient of R^4 vs brute-force oracle") {
    // W = sum (-1)^k (R^2/8)^k
    LogPowerSeries W;
    W.var = 'R';
    for (int kk = 0; kk <= 6; ++kk)
        W.add_term({Exponent::integer(2 * kk), 0, 0}, std::pow(-1.0 / 8.0, kk));
    auto W2 = mul(W, W);
    // brute-force polynomial multiplication oracle
    std::vector<Real> a(13, 0.0);
    for (int kk = 0; kk <= 6; ++kk) a[2 * kk] = std::pow(-1.0 / 8.0, kk);
    std::vector<Real> conv(26, 0.0);
    for (int i = 0; i <= 12; ++i)
        for (int j = 0; j <= 12; ++j) conv[i + j] += a[i] * a[j];
    CHECK(conv[4] == doctest::Approx(3.0 / 64.0));
    auto it = W2.terms.find({Exponent::integer(4), 0, 0});
    REQUIRE(it != W2.terms.end());
    CHECK(it->second.real() == doctest::Approx(3.0 / 64.0).epsilon(1e-15));
    // exactness of the whole truncated product against the oracle
    for (int p = 0; p <= 12; p += 2) {
        auto jt = W2.terms.find({Exponent::integer(p), 0, 0});
        Real got = (jt == W2.terms.end()) ? 0.0 : jt->second.real();
        CHECK(got == doctest::Approx(conv[p]).epsilon(1e-15));
    }
}

TEST_CASE("rational mode: exact arithmetic and serialization round trip") {
    RatSeries W;
    W.var = 'R';
    for (int kk = 0; kk <= 6; ++kk) {
        Rat c = Rat(1);
        for (int i = 0; i < kk; ++i) c = c * Rat(-1, 8);
        W.add_term({Exponent::integer(2 * kk), 0, 0}, CRat(c));
    }
    auto W2 = mul(W, W);
    auto it = W2.terms.find({Exponent::integer(4), 0, 0});
    REQUIRE(it != W2.terms.end());
    CHECK(it->second.re.c.size() == 1);
    CHECK(it->second.re.c[0] == Rat(3, 64));

    // differentiate stays exact in Q[nu]: d/dx x^{nu} = nu x^{nu-1}
    RatSeries xnu;
    xnu.var = 'x';
    xnu.add_term({Exponent::nu_units(1), 0, 0}, CRat(Rat(1)));
    auto dx = xnu.differentiate(NU);
    REQUIRE(dx.terms.size() == 1);
    NuPoly expect;
    expect.c = {Rat(0), Rat(1)};  // 0 + 1*nu
    CHECK(dx.terms.begin()->second.re == expect);

    // serialization round trip is exact in rational mode
    std::string text = W2.serialize();
    RatSeries back = parse_series_rational(text, W2.anchor, W2.var);
    CHECK(back.terms.size() == W2.terms.size());
    for (auto& [k, c] : W2.terms) {
        auto jt = back.terms.find(k);
        REQUIRE(jt != back.terms.end());
        CHECK(jt->second == c);
    }
}

TEST_CASE("rebase_log: involution and random-point equivalence") {
    // series in B1 = log y - nu log t (logbase_c = -nu), with (log y)^2 term
    LogPowerSeries s;
    s.var = 'y';
    s.logbase_c = 0.0;  // plain log y
    s.add_term({Exponent::integer(1), 2, 0}, Cplx(1.5, -0.25));
    s.add_term({Exponent::nu_units(1), 1, 0}, Cplx(2.0));

    auto to_plus = rebase_log(s, 0.5);   // basis log y + (1/2) log t
    auto back = rebase_log(to_plus, 0.0);
    REQUIRE(back.terms.size() == s.terms.size());
    for (auto& [k, c] : s.terms) {
        auto it = back.terms.find(k);
        REQUIRE(it != back.terms.end());
        CHECK(std::abs(it->second - c) <= 1e-15 * std::abs(c));
    }

    // constant (s = 0) series unchanged
    LogPowerSeries cst;
    cst.var = 'y';
    cst.add_term({Exponent::integer(2), 0, 0}, Cplx(3));
    auto cst2 = rebase_log(cst, 0.5);
    CHECK(cst2.terms.size() == 1);
    CHECK(cst2.terms.begin()->second == Cplx(3));

    // pointwise equivalence of representations at random (t, y)
    LogPowerSeries block;
    block.var = 'y';
    block.logbase_c = -NU;  // (log y - nu log t)^m basis
    block.add_term({Exponent::integer(0), 1, 0}, Cplx(1.0));
    block.add_term({Exponent::integer(2), 2, 0}, Cplx(0.5, 1.0));
    auto reb = rebase_log(block, 0.5);
    std::mt19937 rng(1234);
    std::uniform_real_distribution<Real> dt(0.001, 0.01), dy(0.5, 2.0);
    for (int i = 0; i < 20; ++i) {
        Real t = dt(rng), y = dy(rng);
        Cplx v1 = block.eval(NU, y, std::log(t));
        Cplx v2 = reb.eval(NU, y, std::log(t));
        CHECK(std::abs(v1 - v2) <= 1e-12 * (std::abs(v1) + 1.0));
    }
}

TEST_CASE("evaluation consistency inside the trust radius") {
    LogPowerSeries s;
    s.var = 'x';
    std::mt19937 rng(7);
    std::uniform_real_distribution<Real> dc(-1.0, 1.0);
    for (int kk = 0; kk < 10; ++kk)
        s.add_term({Exponent{kk, (kk % 3) - 1, 0, 0}, kk % 2, 0}, Cplx(dc(rng), dc(rng)));
    for (Real x : {0.05, 0.2, 0.45}) {
        CHECK(s.in_trust(x));
        // independent direct summation
        Cplx direct(0);
        for (auto& [k, c] : s.terms) {
            Cplx v = c * std::pow(x, k.mu.value(NU));
            for (int i = 0; i < k.s; ++i) v *= std::log(x);
            direct += v;
        }
        Cplx got = s.eval(NU, x);
        CHECK(std::abs(got - direct) <= 1e-14 * (std::abs(direct) + 1.0));
    }
    CHECK(!s.in_trust(0.9));
}

TEST_CASE("frobenius: Euler operator pure power (trivial)") {
    // y^2 f'' : indicial roots gamma(gamma-1) = 0 -> 0, 1; generic Euler with
    // a0 shift: y^2 f'' - ga(ga-1) f = 0 has solution y^{ga}. Use ga = 2nu.
    SeriesODE ode;
    ode.a2.var = ode.a1.var = ode.a0.var = 'y';
    ode.a2.add_term({Exponent::integer(2), 0, 0}, Cplx(1));
    Real ga = 2 * NU;
    ode.a0.add_term({Exponent::integer(0), 0, 0}, Cplx(-ga * (ga - 1.0)));
    LogPowerSeries rhs = ode.a2.like_empty();
    auto f = frobenius_solve(ode, Exponent::nu_units(2), rhs, 10, NU);
    REQUIRE(f.terms.size() == 1);
    CHECK(f.terms.begin()->first.mu == Exponent::nu_units(2));
    CHECK(f.terms.begin()->second == Cplx(1));
}

TEST_CASE("frobenius: Lbeta regular branch matches the (m+2)(m+4) chain and RK") {
    const Real beta = OperatorSpec::beta_l(NU, 2);  // 2nu - 3
    SeriesODE ode = lbeta_ode_at0(beta);
    // constant source c0 = 1: solve a L w = a * 1
    LogPowerSeries rhs;
    rhs.var = 'a';
    rhs.add_term({Exponent::integer(1), 0, 0}, Cplx(1));
    auto w = frobenius_solve(ode, Exponent::integer(2), rhs, 12, NU);
    // chain from the proof: ctil_0 (m+2)(m+4) = c0 with m = 0
    auto c0 = w.terms.find({Exponent::integer(2), 0, 0});
    REQUIRE(c0 != w.terms.end());
    CHECK(c0->second.real() == doctest::Approx(1.0 / 8.0).epsilon(1e-14));
    // next coefficients exist and the series solves the ODE symbolically:
    // residual only beyond K lattice steps (relative to coefficient scale)
    auto resid = ode_apply(ode, w, NU);
    for (auto& [k, c] : rhs.terms) resid.add_term(k, -c);
    Real scale = 0;
    for (auto& [k, c] : w.terms) scale = std::max(scale, std::abs(c));
    Real low_resid = 0;
    for (auto& [k, c] : resid.terms)
        if (k.mu.value(NU) < 1 + 12 - 0.5) low_resid += std::abs(c);
    CHECK(low_resid <= 1e-12 * std::max(scale, 1.0));

    // numeric cross-check: RK with series-provided data from a = 1e-3
    OperatorSpec spec = OperatorSpec::lbeta(beta);
    Real a0 = 1e-3;
    auto ev = [&](Real a, int d) { return detail::series_sol(w, 0, NU, a, d); };
    OdeRhs rk = [&](Real a, const OdeState& y, OdeState& dy) {
        dy.resize(2);
        dy[0] = y[1];
        // L w = 1: (1-a^2) w'' + ... = 1
        dy[1] = (Cplx(1) - (2 * (beta - 1) * a + 3 / a) * y[1] - (beta - beta * beta) * y[0]) /
                (1 - a * a);
    };
    OdeState y{ev(a0, 0), ev(a0, 1)};
    ode_integrate(rk, a0, 0.3, y);
    CHECK(std::abs(y[0] - ev(0.3, 0)) <= 1e-9 * (std::abs(y[0]) + 1));
}

TEST_CASE("frobenius residual: only lattice terms beyond K remain") {
    const Real beta = OperatorSpec::beta_l(NU, 3);
    SeriesODE ode = lbeta_ode_at0(beta);
    LogPowerSeries zero = ode.a2.like_empty();
    auto h = frobenius_solve(ode, Exponent::integer(0), zero, 16, NU);
    auto resid = ode_apply(ode, h, NU);
    Real scale = 0;
    for (auto& [k, c] : h.terms) scale = std::max(scale, std::abs(c));
    // residual terms below the truncation window are round-off relative to
    // the (growing) chain coefficients
    for (auto& [k, c] : resid.terms) {
        if (std::abs(c) < 1e-12 * std::max(scale, 1.0)) continue;
        CHECK(k.mu.value(NU) > 16 - 1.5);
    }
}
