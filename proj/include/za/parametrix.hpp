#pragma once

// The wave parametrix: alternating elliptic and hyperbolic modifier steps
// approximately inverting the d'Alembertian on the construction's source
// class.
//
//   elliptic:   Delta_R n_new = -lambda^{-2} e_old,  e_new = -d_t^2 n_new
//   hyperbolic: n_new = h(t) sum_b L(R)^b g_b(a)  with the L_beta chain on
//               the non-decaying top error; e_new = e_old + box n_new (exact)
//
// Residuals are always the exact box images of the accumulated corrections,
// evaluated through the ledger algebra.

#include <sstream>

#include "za/innerterms.hpp"

namespace za {

// ---- the L_beta chain of one hyperbolic step -------------------------------

// commutator bracket Omega[g](a) of Eqs. (main-sys-L-2/3):
//   (-1-2nu) a g' - (2nu-3) g + (2/a)(g' + g/a) + (3/a^2) g - 2(1/2+nu)^2 g
// and the second coupling Xi[g] = (1/a^2) g - (1/2+nu)^2 g.
inline Cplx hyp_bracket_omega(Real nu, const HypCoefficient& g, Real a, int extra_d = 0) {
    auto G = [&](int k) { return g.eval(a, k + extra_d); };
    if (extra_d == 0) {
        return (-1.0 - 2.0 * nu) * a * G(1) - (2.0 * nu - 3.0) * G(0) +
               (2.0 / a) * (G(1) + G(0) / a) + (3.0 / (a * a)) * G(0) -
               2.0 * (0.5 + nu) * (0.5 + nu) * G(0);
    }
    // first derivative of the bracket (needed for rhs.eval(.,1)); chain rule
    if (extra_d == 1) {
        Cplx g0 = g.eval(a, 0), g1 = g.eval(a, 1), g2 = g.eval(a, 2);
        return (-1.0 - 2.0 * nu) * (g1 + a * g2) - (2.0 * nu - 3.0) * g1 +
               (2.0 / a) * (g2 + g1 / a) - (2.0 / (a * a)) * (g1 + g0 / a) -
               (2.0 / (a * a * a)) * g0 + (3.0 / (a * a)) * g1 -
               (6.0 / (a * a * a)) * g0 - 2.0 * (0.5 + nu) * (0.5 + nu) * g1;
    }
    // second derivative via differences of the first (accuracy is ample for
    // the g'''' chain)
    Real h = 1e-6 * (std::abs(a) + 1.0);
    return (hyp_bracket_omega(nu, g, a + h, 1) - hyp_bracket_omega(nu, g, a - h, 1)) /
           (2.0 * h);
}

inline Cplx hyp_bracket_xi(Real nu, const HypCoefficient& g, Real a, int d = 0) {
    auto G = [&](int k) { return g.eval(a, k); };
    if (d == 0) return G(0) / (a * a) - (0.5 + nu) * (0.5 + nu) * G(0);
    if (d == 1)
        return G(1) / (a * a) - 2.0 * G(0) / (a * a * a) -
               (0.5 + nu) * (0.5 + nu) * G(1);
    Real h = 1e-6 * (std::abs(a) + 1.0);
    return (hyp_bracket_xi(nu, g, a + h, 1) - hyp_bracket_xi(nu, g, a - h, 1)) / (2.0 * h);
}

// symbolic Omega / Xi on local series (for the band and infinity anchors)
// anchor: 0 = a-series at 0; 1 = band left (x = 1-a); 2 = band right (x = a-1);
// 3 = infinity (x = 1/a)
inline LogPowerSeries series_bracket_omega(const LogPowerSeries& g, int anchor, Real nu,
                                           int K) {
    auto inv_a = [&](const LogPowerSeries& s, int p) {
        // multiply by a^{-p}
        LogPowerSeries out = s;
        switch (anchor) {
            case 0: {
                out = s.like_empty();
                for (auto& [k, c] : s.terms)
                    out.add_term({k.mu - Exponent::integer(p), k.s, k.st}, c);
                return out;
            }
            case 1: {
                LogPowerSeries r = series_div_a(s, false, K, nu);
                for (int i = 1; i < p; ++i) r = series_div_a(r, false, K, nu);
                return r;
            }
            case 2: {
                LogPowerSeries r = series_div_a(s, true, K, nu);
                for (int i = 1; i < p; ++i) r = series_div_a(r, true, K, nu);
                return r;
            }
            case 3: {
                out = s.like_empty();
                for (auto& [k, c] : s.terms)
                    out.add_term({k.mu + Exponent::integer(p), k.s, k.st}, c);
                return out;
            }
        }
        return out;
    };
    auto a_dda = [&](const LogPowerSeries& s) {
        switch (anchor) {
            case 0: {
                // a d/da on a-series: mu-multiply and log-lowering
                LogPowerSeries d = s.differentiate(nu);
                LogPowerSeries out = s.like_empty();
                for (auto& [k, c] : d.terms)
                    out.add_term({k.mu + Exponent::integer(1), k.s, k.st}, c);
                return out;
            }
            case 1: return series_a_dda(s, false, nu);
            case 2: return series_a_dda(s, true, nu);
            case 3: {
                // a d/da = -x d/dx on x = 1/a series
                LogPowerSeries d = s.differentiate(nu);
                LogPowerSeries out = s.like_empty();
                for (auto& [k, c] : d.terms)
                    out.add_term({k.mu + Exponent::integer(1), k.s, k.st}, c * Cplx(-1));
                return out;
            }
        }
        return s;
    };
    // g' in a, as a series: (a d/da g) * a^{-1}
    LogPowerSeries adg = a_dda(g);
    LogPowerSeries gp = inv_a(adg, 1);
    LogPowerSeries out =
        add(adg.scale(Cplx(-1.0 - 2.0 * nu)), g.scale(Cplx(-(2.0 * nu - 3.0))));
    out = add(out, inv_a(gp, 1).scale(Cplx(2)));
    out = add(out, inv_a(g, 2).scale(Cplx(2)));
    out = add(out, inv_a(g, 2).scale(Cplx(3)));
    out = add(out, g.scale(Cplx(-2.0 * (0.5 + nu) * (0.5 + nu))));
    return out;
}

inline LogPowerSeries series_bracket_xi(const LogPowerSeries& g, int anchor, Real nu,
                                        int K) {
    LogPowerSeries out = g.like_empty();
    switch (anchor) {
        case 0:
            for (auto& [k, c] : g.terms)
                out.add_term({k.mu - Exponent::integer(2), k.s, k.st}, c);
            break;
        case 1: {
            out = series_div_a(series_div_a(g, false, K, nu), false, K, nu);
            break;
        }
        case 2: {
            out = series_div_a(series_div_a(g, true, K, nu), true, K, nu);
            break;
        }
        case 3:
            for (auto& [k, c] : g.terms)
                out.add_term({k.mu + Exponent::integer(2), k.s, k.st}, c);
            break;
    }
    return add(out, g.scale(Cplx(-(0.5 + nu) * (0.5 + nu))));
}

// Builds the coefficient chain g_B, ..., g_0 for target top error
// sum_b d0[b] log^b(R); beta = beta_l + k on the lattice.
struct HypChain {
    std::vector<HypCoefficientPtr> g;  // index b
    Real beta = 0;
    Exponent beta_exp;
};

inline HypChain solve_hyp_chain(const InnerCfg& cfg, Real beta, Exponent beta_exp,
                                const std::vector<Cplx>& d0, int K = 24) {
    const Real nu = cfg.nu;
    const int B = (int)d0.size() - 1;
    HypChain chain;
    chain.beta = beta;
    chain.beta_exp = beta_exp;
    chain.g.resize(B + 1);
    for (int b = B; b >= 0; --b) {
        HypRhs rhs = HypRhs::constant(-d0[b], nu);
        if (b + 1 <= B) {
            auto gp = chain.g[b + 1];
            Real bb = b + 1;
            auto base_eval = rhs.eval;
            rhs.eval = [base_eval, gp, nu, bb](Real a, int d) {
                return base_eval(a, d) - bb * hyp_bracket_omega(nu, *gp, a, d);
            };
            for (int anchor : {0, 1, 2, 3}) {
                LogPowerSeries gser = gp->full_series(anchor);
                LogPowerSeries om = series_bracket_omega(gser, anchor, nu, K)
                                        .scale(Cplx(-bb));
                LogPowerSeries* dst = anchor == 0   ? &rhs.ser0
                                      : anchor == 1 ? &rhs.serL
                                      : anchor == 2 ? &rhs.serR
                                                    : &rhs.serInf;
                for (auto& [k, c] : om.terms) dst->add_term(k, c);
            }
        }
        if (b + 2 <= B) {
            auto gpp = chain.g[b + 2];
            Real bb = Real(b + 1) * Real(b + 2);
            auto base_eval = rhs.eval;
            rhs.eval = [base_eval, gpp, nu, bb](Real a, int d) {
                return base_eval(a, d) - bb * hyp_bracket_xi(nu, *gpp, a, d);
            };
            for (int anchor : {0, 1, 2, 3}) {
                LogPowerSeries gser = gpp->full_series(anchor);
                LogPowerSeries xi =
                    series_bracket_xi(gser, anchor, nu, K).scale(Cplx(-bb));
                LogPowerSeries* dst = anchor == 0   ? &rhs.ser0
                                      : anchor == 1 ? &rhs.serL
                                      : anchor == 2 ? &rhs.serR
                                                    : &rhs.serInf;
                for (auto& [k, c] : xi.terms) dst->add_term(k, c);
            }
        }
        chain.g[b] = std::make_shared<HypCoefficient>(beta, beta_exp, rhs, nu, K);
    }
    return chain;
}

// ---- parametrix driver ------------------------------------------------------

struct StepLog {
    int k = 0;
    char rule = 'e';        // 'e' elliptic, 'h' hyperbolic
    bool tail_swap = false; // elliptic: which Green branch was used
    Exponent t_order;       // exact t-power of the new correction
    Real lead_pow = 0;      // R-profile class of the residual after the step
    int lead_log = 0;
};

struct ParametrixState {
    InnerCfg cfg;
    TermSum source;                 // f with box n ~ d_t^2 f
    std::vector<TermSum> corrections;
    TermSum residual;               // e_k
    std::vector<StepLog> log;

    TermSum corrections_sum() const {
        TermSum s;
        for (auto& c : corrections) sum_append(s, c);
        return s;
    }
};

// initial source f = lambda^2 W^2: e_0 = -d_t^2 f
inline ParametrixState parametrix_initial(const InnerCfg& cfg) {
    ParametrixState st;
    st.cfg = cfg;
    InnerTerm f;
    f.tpow = Exponent{-1, -2, 0, 0};  // lambda^2 = t^{-1-2nu}
    f.rf = WRLogNode::make(PolyWR::W(2));
    st.source = {f};
    st.residual = sum_scale(sum_dtt(cfg, st.source), Cplx(-1));
    auto [p, lg] = sum_lead(st.residual);
    st.log.push_back({0, '0', false, Exponent{-1, -2, 0, 0}, p, lg});
    return st;
}

inline ParametrixState parametrix_from_source(const InnerCfg& cfg, TermSum f) {
    ParametrixState st;
    st.cfg = cfg;
    st.source = std::move(f);
    st.residual = sum_scale(sum_dtt(cfg, st.source), Cplx(-1));
    auto [p, lg] = sum_lead(st.residual);
    st.log.push_back({0, '0', false, Exponent{}, p, lg});
    return st;
}

inline bool residual_has_afactor(const TermSum& ts) {
    for (auto& T : ts)
        if (!T.af.trivial()) return true;
    return false;
}

inline void elliptic_step(ParametrixState& st) {
    // integrand h = lambda^{-2} e
    TermSum h = sum_shift_tpow(st.residual, Exponent{1, 2, 0, 0});
    auto [p, lg] = sum_lead(st.residual);
    bool swap = (p < -2.0 - 1e-9);
    InnerTerm n;
    n.rf = std::make_shared<EllipticTNode>(st.cfg, h, swap);
    // exact identity: e_new = -d_t^2 n_new
    st.corrections.push_back({n});
    st.residual = sum_scale(sum_dtt(st.cfg, {n}), Cplx(-1));
    auto [pn, ln] = sum_lead(st.residual);
    st.log.push_back({(int)st.corrections.size(), 'e', swap, n.tpow, pn, ln});
}

// fit the non-decaying top error sum_b d0b log^b R at t = 1 over a large-R
// window (valid while the residual is a-independent)
inline std::vector<Cplx> fit_top_error(const ParametrixState& st, int B,
                                       Real Rlo = 1e6, Real Rhi = 1e10, int n = 40) {
    if (residual_has_afactor(st.residual))
        throw NumericsError("fit_top_error: a-dependent residual; hyperbolic step at "
                            "this depth is outside the materialized budget");
    std::vector<std::vector<Cplx>> cols(B + 1);
    std::vector<Cplx> y;
    for (Real R : geomspace(Rlo, Rhi, n)) {
        y.push_back(sum_eval(st.cfg, st.residual, 1.0, R));
        Real lr = std::log(R);
        Real pw = 1.0;
        for (int b = 0; b <= B; ++b) {
            cols[b].push_back(Cplx(pw));
            pw *= lr;
        }
    }
    return lstsq(cols, y);
}

inline void hyperbolic_step(ParametrixState& st, int B, int l_index, int k_index = 0) {
    const Real nu = st.cfg.nu;
    auto d0 = fit_top_error(st, B);
    Real beta = OperatorSpec::beta_l(nu, l_index) + k_index;
    Exponent beta_exp{-l_index - 1 + k_index, 2 * l_index - 2, 0, 0};
    auto chain = solve_hyp_chain(st.cfg, beta, beta_exp, d0);
    // n_new = t^{k} lambda^2 (t lambda)^{-2l} sum_b L^b g_b(a):
    // lambda^2 (t lambda)^{-2l} = t^{-1-2nu} t^{l(2nu-1)}
    Exponent hpow{k_index - 1 - l_index, 2 * l_index - 2, 0, 0};
    TermSum nnew;
    for (int b = 0; b <= B; ++b) {
        InnerTerm T;
        T.tpow = hpow;
        T.logb = b;
        T.af = AFactor::of(chain.g[b]);
        nnew.push_back(T);
    }
    st.corrections.push_back(nnew);
    // exact residual update: e += box(n_new)
    sum_append(st.residual, sum_box(st.cfg, nnew));
    auto [pn, ln] = sum_lead(st.residual);
    st.log.push_back({(int)st.corrections.size(), 'h', false, hpow, pn, ln});
}

// drives n_steps of the alternation; the rule is chosen from the residual's
// tracked tail exponent (non-decaying top part -> hyperbolic)
inline ParametrixState box_inverse(const InnerCfg& cfg, const TermSum& source, int n_steps,
                                   bool initial_W2 = false) {
    ParametrixState st =
        initial_W2 ? parametrix_initial(cfg) : parametrix_from_source(cfg, source);
    int l_count = 0;
    for (int k = 0; k < n_steps; ++k) {
        auto [p, lg] = sum_lead(st.residual);
        if (p >= -1e-9) {
            hyperbolic_step(st, lg, l_count == 0 ? 2 : l_count + 2);
        } else {
            elliptic_step(st);
            ++l_count;
        }
    }
    return st;
}

// per-step trace table as CSV
inline std::string parametrix_trace_csv(const ParametrixState& st) {
    std::ostringstream os;
    os << "k,rule,tail_swap,t_order,lead_pow,lead_log,resid_linf_ref\n";
    for (auto& L : st.log) {
        Real ref = 0;
        if (L.k == (int)st.corrections.size()) {
            for (Real R : {10.0, 100.0, 1000.0})
                ref = std::max(ref, std::abs(sum_eval(st.cfg, st.residual, 0.01, R)));
        }
        os << L.k << ',' << L.rule << ',' << (L.tail_swap ? 1 : 0) << ','
           << L.t_order.value(st.cfg.nu) << ',' << L.lead_pow << ',' << L.lead_log << ','
           << ref << '\n';
    }
    return os.str();
}

}  // namespace za
