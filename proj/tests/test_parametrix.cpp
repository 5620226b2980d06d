#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "za/frames.hpp"
#include "za/parametrix.hpp"

using namespace za;

namespace {
const Real NU = 4.5 + 1.0 / PI;

InnerCfg test_cfg() {
    InnerCfg cfg;
    cfg.nu = NU;
    cfg.Rmax = 1e12;
    cfg.cache_nodes = 520;
    return cfg;
}

// finite-difference box of a term-sum evaluator in physical (t, r)
Cplx box_fd(const InnerCfg& cfg, const TermSum& ts, Real t, Real r) {
    auto u = [&](Real tt, Real rr) {
        Real R = rr * std::pow(tt, -0.5 - cfg.nu);
        return sum_eval(cfg, ts, tt, R);
    };
    Real ht = 1e-4 * t, hr = 1e-5 * r;
    Cplx dtt = (u(t + ht, r) - 2.0 * u(t, r) + u(t - ht, r)) / (ht * ht);
    Cplx drr = (u(t, r + hr) - 2.0 * u(t, r) + u(t, r - hr)) / (hr * hr);
    Cplx dr = (u(t, r + hr) - u(t, r - hr)) / (2.0 * hr);
    return -dtt + drr + 3.0 / r * dr;
}
}  // namespace

TEST_CASE("ledger algebra: box matches finite differences (incl. a-factors)") {
    InnerCfg cfg = test_cfg();
    // f = lambda^2 W^2
    ParametrixState st = parametrix_initial(cfg);
    TermSum boxf = sum_box(cfg, st.source);
    for (Real t : {0.02, 0.05}) {
        for (Real R : {1.5, 7.0}) {
            Real r = R * std::pow(t, 0.5 + cfg.nu);
            Cplx exact = sum_eval(cfg, boxf, t, R);
            Cplx fd = box_fd(cfg, st.source, t, r);
            CHECK(std::abs(exact - fd) <= 2e-4 * (std::abs(exact) + std::abs(fd) + 1e-12));
        }
    }
    // a hyperbolic-type term t^{sigma} L(R)^2 g(a) with a chain coefficient
    Real beta = OperatorSpec::beta_l(NU, 2);
    Exponent bexp{-3, 2, 0, 0};
    auto chain = solve_hyp_chain(cfg, beta, bexp, {Cplx(0.3), Cplx(-0.1), Cplx(1.0)});
    InnerTerm T;
    T.tpow = Exponent{-3, 2, 0, 0};
    T.logb = 2;
    T.af = AFactor::of(chain.g[2]);
    TermSum ts{T};
    TermSum boxT = sum_box(cfg, ts);
    for (Real t : {0.05}) {
        for (Real R : {3.0, 12.0}) {
            Real r = R * std::pow(t, 0.5 + cfg.nu);
            Cplx exact = sum_eval(cfg, boxT, t, R);
            Cplx fd = box_fd(cfg, ts, t, r);
            CHECK(std::abs(exact - fd) <= 5e-4 * (std::abs(exact) + std::abs(fd) + 1e-12));
        }
    }
}

TEST_CASE("hyperbolic operator identity: t^2 h^{-1} box(h f(a)) = L_beta f") {
    // the conjugation that defines the hyperbolic step, checked on a smooth f
    InnerCfg cfg = test_cfg();
    const int l = 2, k = 0;
    const Real beta = OperatorSpec::beta_l(NU, l) + k;
    // f(a) = a^2/(1+a^2): build as a chain coefficient? use a closed form via
    // a small custom HypCoefficient is overkill -- evaluate box on the term
    // with af built from a solved chain coefficient g (any smooth g works and
    // g is one), and compare with L_beta applied to g via the ODE handles.
    Exponent bexp{-l - 1 + k, 2 * l - 2, 0, 0};
    auto chain = solve_hyp_chain(cfg, beta, bexp, {Cplx(1.0)});
    auto g = chain.g[0];
    InnerTerm T;
    T.tpow = Exponent{k - 1 - l, 2 * l - 2, 0, 0};  // h(t) = t^k lambda^2 (t lambda)^{-2l}
    T.af = AFactor::of(g);
    TermSum boxT = sum_box(cfg, {T});
    OperatorSpec LB = OperatorSpec::lbeta(beta);
    for (Real t : {0.03, 0.008}) {
        for (Real a : {0.4, 2.5, 9.0}) {
            Real R = a * std::pow(t, 0.5 - NU);  // consistent (t, R, a) triple
            Cplx lhs = sum_eval(cfg, boxT, t, R) * t * t /
                       std::pow(t, T.tpow.value(NU));
            Cplx rhs = LB.apply(a, g->eval(a, 0), g->eval(a, 1), g->eval(a, 2));
            CHECK(std::abs(lhs - rhs) <= 1e-6 * (std::abs(rhs) + 1.0));
        }
    }
}

TEST_CASE("initial source: e0 profile, leading coefficient, FD oracle") {
    InnerCfg cfg = test_cfg();
    ParametrixState st = parametrix_initial(cfg);
    // FD-in-t oracle at fixed r for e0 = -d_t^2 (lambda^2 W^2)
    for (Real t : {0.05}) {
        for (Real R : {0.5, 3.0, 20.0}) {
            Real r = R * std::pow(t, 0.5 + cfg.nu);
            auto f = [&](Real tt) {
                Real lam2 = std::pow(tt, -1.0 - 2.0 * NU);
                Real RR = r * std::pow(tt, -0.5 - NU);
                return lam2 * std::pow(ground_state(RR).W, 2);
            };
            Real ht = 1e-4 * t;
            Real fd = -(f(t + ht) - 2.0 * f(t) + f(t - ht)) / (ht * ht);
            Cplx exact = sum_eval(cfg, st.residual, t, R);
            CHECK(std::abs(exact - fd) <= 1e-5 * std::abs(fd));
        }
    }
    // e0 = t^{-2} lambda^2 (c4 R^{-4} + ...) with c4 = -64 * 2nu(2nu+1)
    Real c4 = sum_eval(cfg, st.residual, 1.0, 1e5).real() * std::pow(1e5, 4.0);
    CHECK(c4 == doctest::Approx(-64.0 * 2.0 * NU * (2.0 * NU + 1.0)).epsilon(1e-6));
    // even Taylor at 0: value finite, odd-derivative-free (symmetric samples)
    Cplx v1 = sum_eval(cfg, st.residual, 1.0, 1e-4);
    Cplx v2 = sum_eval(cfg, st.residual, 1.0, 2e-4);
    CHECK(std::abs(v1 - v2) <= 1e-6 * std::abs(v1));
}

TEST_CASE("elliptic steps: residual identity, n1 leading form, swap choice") {
    InnerCfg cfg = test_cfg();
    ParametrixState st = parametrix_initial(cfg);
    elliptic_step(st);
    CHECK(st.log.back().rule == 'e');
    CHECK(st.log.back().tail_swap);  // e0 = O(R^{-4}) allows the tail swap
    elliptic_step(st);
    CHECK(!st.log.back().tail_swap);  // e1 = O(R^{-2} log R) does not

    // residual identity: box(sum n_k) - d_t^2 f == tracked residual, recomputed
    // from scratch through the ledger
    TermSum all = st.corrections_sum();
    TermSum box_all = sum_box(cfg, all);
    TermSum dttf = sum_dtt(cfg, st.source);
    for (Real t : {0.01, 0.004}) {
        for (Real R : {2.0, 30.0, 300.0}) {
            Cplx recomputed = sum_eval(cfg, box_all, t, R) - sum_eval(cfg, dttf, t, R);
            Cplx tracked = sum_eval(cfg, st.residual, t, R);
            CHECK(std::abs(recomputed - tracked) <=
                  1e-8 * (std::abs(tracked) + std::abs(recomputed) + 1e-300));
        }
    }

    // n1 leading form: lambda^2/(lambda t)^2 (c21 R^{-2} log R + c2 R^{-2} + ...)
    // fit at t = 1 over large R
    {
        std::vector<std::vector<Cplx>> cols(2);
        std::vector<Cplx> y;
        for (Real R : geomspace(1e4, 1e7, 30)) {
            y.push_back(sum_eval(cfg, st.corrections[0], 1.0, R) * R * R);
            cols[0].push_back(Cplx(std::log(R)));
            cols[1].push_back(Cplx(1.0));
        }
        auto c = lstsq(cols, y);
        CHECK(std::abs(c[0]) > 1e-6);  // genuine R^{-2} log R content
        // fit quality: the two-term model captures the tail
        Real resid = 0, scale = 0;
        for (size_t i = 0; i < y.size(); ++i) {
            resid += std::norm(y[i] - c[0] * cols[0][i] - c[1] * cols[1][i]);
            scale += std::norm(y[i]);
        }
        CHECK(std::sqrt(resid / scale) <= 1e-3);
    }

    // zero source: empty state stays empty
    ParametrixState z = parametrix_from_source(cfg, {});
    CHECK(z.residual.empty());
    elliptic_step(z);
    CHECK(sum_eval(cfg, z.residual, 0.01, 5.0) == Cplx(0));
}

TEST_CASE("criterion-4 shape: two elliptic steps gain 2(2nu-1) in the t-slope") {
    InnerCfg cfg = test_cfg();
    ParametrixState st = parametrix_initial(cfg);
    auto slope_of = [&](const TermSum& e) {
        std::vector<Real> ts, ns;
        for (Real t : geomspace(1e-3, 1e-2, 9)) {
            Real m = 0;
            for (Real R : geomspace(2.0, 50.0, 12))
                m = std::max(m, std::abs(sum_eval(cfg, e, t, R)));
            ts.push_back(t);
            ns.push_back(m);
        }
        return fit_loglog(ts, ns).slope;
    };
    Real s0 = slope_of(st.residual);
    elliptic_step(st);
    elliptic_step(st);
    Real s2 = slope_of(st.residual);
    Real gain = s2 - s0;
    CHECK(std::abs(gain - 2.0 * (2.0 * NU - 1.0)) <= 0.1 * 2.0 * (2.0 * NU - 1.0));
    // each step gains exactly (t lambda)^{-2} = t^{2nu-1} for this source
    CHECK(gain == doctest::Approx(2.0 * (2.0 * NU - 1.0)).epsilon(1e-3));
}

TEST_CASE("hyperbolic step: top-error fit, chain, constant solution, R-slope") {
    InnerCfg cfg = test_cfg();
    ParametrixState st = parametrix_initial(cfg);
    elliptic_step(st);
    elliptic_step(st);

    // e2^0 = t^{-2} lambda^2/(lambda t)^4 (d02 log^2 R + d01 log R + d00)
    auto d0 = fit_top_error(st, 2);
    CHECK(std::abs(d0[2]) > 1e-8);

    // the constant particular solution of L_beta c = -d02 is d02/(beta^2-beta)
    Real beta = OperatorSpec::beta_l(NU, 2);
    {
        auto chain = solve_hyp_chain(cfg, beta, Exponent{-3, 2, 0, 0}, {d0[2]});
        auto cser = chain.g[0]->full_series(3);  // infinity series
        auto it = cser.terms.find({Exponent::integer(0), 0, 0});
        REQUIRE(it != cser.terms.end());
        CHECK(std::abs(it->second - d0[2] / (beta * beta - beta)) <=
              1e-9 * std::abs(it->second));
    }

    hyperbolic_step(st, 2, 2);
    CHECK(st.log.back().rule == 'h');

    // chain consistency: t^2 h^{-1} box(n3) + sum_b d0b log^b R -> 0 like
    // R^{-2} (checked at R = 1e2, 1e3 with frozen a)
    {
        const TermSum& n3 = st.corrections.back();
        TermSum boxn3 = sum_box(cfg, n3);
        Real t = 0.05, a = 1.7;
        Real hval = std::pow(t, Exponent{-3, 2, 0, 0}.value(NU));
        auto mismatch = [&](Real R) {
            Cplx lhs = sum_eval_frozen_a(cfg, boxn3, t, R, a) * t * t / hval;
            Cplx target(0);
            Real lr = logLpow(R, 1, 0);
            Real pw = 1.0;
            for (int b = 0; b <= 2; ++b) {
                target += d0[b] * pw;
                pw *= lr;
            }
            // after the step the box of n3 should reproduce -e2^0 ( = -target)
            return std::abs(lhs + target);
        };
        Real m2 = mismatch(1e2), m3 = mismatch(1e3);
        CHECK(m3 < m2 / 20.0);  // R^{-2}-class decay of the leftover
    }

    // criterion-5 shape: residual R-profile at fixed (t, a) fits slope <= -2+0.1
    // (log factor as nuisance) over R in [1e2, 1e4]
    {
        std::vector<Real> Rs, vs;
        Real t = 0.01, a = 0.5;
        for (Real R : geomspace(1e2, 1e4, 25)) {
            Rs.push_back(R);
            vs.push_back(std::abs(sum_eval_frozen_a(cfg, st.residual, t, R, a)));
        }
        auto fit = fit_loglog(Rs, vs, true);
        CHECK(fit.slope <= -2.0 + 0.1);
        CHECK(fit.slope >= -3.5);  // sanity: not super-decaying either
    }
}

TEST_CASE("box_inverse driver: schedule, depth-4 state, trace") {
    InnerCfg cfg = test_cfg();
    ParametrixState st = box_inverse(cfg, {}, 4, true);
    REQUIRE(st.corrections.size() == 4);
    CHECK(st.log[1].rule == 'e');
    CHECK(st.log[2].rule == 'e');
    CHECK(st.log[3].rule == 'h');
    CHECK(st.log[4].rule == 'e');
    std::string csv = parametrix_trace_csv(st);
    CHECK(csv.find("k,rule,tail_swap,t_order,lead_pow,lead_log") == 0);
    // the trace has one line per step plus header and the initial row
    int lines = (int)std::count(csv.begin(), csv.end(), '\n');
    CHECK(lines == 6);
}
