#pragma once

// Coefficient functions g_b(a) of the hyperbolic modifier steps: solutions of
// L_beta g = rhs, regular (O(a^2)) at a = 0, represented as
//   - Frobenius series near 0,
//   - checkpointed integration on [a_ser, 1-d] and [1+d, a_far],
//   - Puiseux band series at a = 1 (phi-pair coefficients + local particular),
//   - symbolic infinity series (phi^inf pair + particular, log-lifted),
// joined across a = 1 only through the Puiseux data: series coefficients
// continue with the (-1)^k sign rule on the integer displacement.
// All local series live on the exact exponent lattice (beta enters through
// its lattice representation), so chained right-hand sides stay symbolic.

#include <memory>

#include "za/logseries.hpp"
#include "za/odekernels.hpp"

namespace za {

// multiply a band series by 1/a (left: 1/(1-x), right: 1/(1+x))
inline LogPowerSeries series_div_a(const LogPowerSeries& s, bool right, int K, Real nu) {
    LogPowerSeries geo = s.like_empty();
    for (int k = 0; k <= K; ++k)
        geo.add_term({Exponent::integer(k), 0, 0}, right ? Cplx((k % 2) ? -1.0 : 1.0)
                                                         : Cplx(1));
    (void)nu;
    return mul(s, geo);
}

// a * d/da on a band series: left x = 1-a: a d_a = -(1-x) d_x; right: (1+x) d_x
inline LogPowerSeries series_a_dda(const LogPowerSeries& s, bool right, Real nu) {
    LogPowerSeries ds = s.differentiate(nu);
    LogPowerSeries xds = ds.like_empty();
    for (auto& [k, c] : ds.terms)
        xds.add_term({k.mu + Exponent::integer(1), k.s, k.st}, c);
    if (!right) return add(ds.scale(Cplx(-1)), xds);
    return add(ds, xds);
}

// continuation across a = 1: each coefficient picks up (-1)^p on the integer
// displacement p within its coset (sign rule for Puiseux expansions)
inline LogPowerSeries puiseux_continue(const LogPowerSeries& s) {
    LogPowerSeries out = s.like_empty();
    for (auto& [k, c] : s.terms) {
        Real f = (k.mu.p % 2 == 0) ? 1.0 : -1.0;
        out.add_term(k, c * f);
    }
    return out;
}

// shift all exponents of a series by e
inline LogPowerSeries series_shift(const LogPowerSeries& s, Exponent e) {
    LogPowerSeries out = s.like_empty();
    for (auto& [k, c] : s.terms) out.add_term({k.mu + e, k.s, k.st}, c);
    return out;
}

// rhs handle: pointwise values/derivatives plus local series at the anchors
// (0: a-series; 1/2: band left/right in x = |1-a|; 3: infinity in x = 1/a)
struct HypRhs {
    std::function<Cplx(Real, int)> eval;  // (a, deriv <= 2)
    LogPowerSeries ser0, serL, serR, serInf;

    static HypRhs constant(Cplx c, Real nu) {
        (void)nu;
        HypRhs r;
        r.eval = [c](Real, int d) { return d == 0 ? c : Cplx(0); };
        r.ser0.var = 'a';
        r.serL.var = r.serR.var = r.serInf.var = 'x';
        if (c != Cplx(0)) {
            r.ser0.add_term({Exponent::integer(0), 0, 0}, c);
            r.serL.add_term({Exponent::integer(0), 0, 0}, c);
            r.serR.add_term({Exponent::integer(0), 0, 0}, c);
            r.serInf.add_term({Exponent::integer(0), 0, 0}, c);
        }
        return r;
    }
};

class HypCoefficient {
public:
    HypCoefficient(Real beta, Exponent beta_exp, const HypRhs& rhs, Real nu, int K = 24)
        : beta_(beta), beta_exp_(beta_exp), nu_(nu), rhs_(rhs) {
        spec_ = OperatorSpec::lbeta(beta);

        // --- series at 0: unique O(a^2) particular (a * rhs for the aL form)
        {
            SeriesODE ode = lbeta_ode_at0(beta);
            LogPowerSeries arhs = series_shift(rhs.ser0, Exponent::integer(1));
            arhs.var = 'a';
            ser0_ = frobenius_solve(ode, Exponent::integer(2), arhs, K, nu);
        }

        // --- numeric left, band fit, continuation right, numeric right
        numL_ = integrate_from(a_ser_, sval(ser0_, a_ser_, 0), sval(ser0_, a_ser_, 1),
                               1.0 - d_band_, 90);
        {
            SeriesODE odeL = lbeta_ode_at1(beta, false);
            LogPowerSeries m = odeL.a2.like_empty();
            m.add_term({Exponent::integer(0), 0, 0}, Cplx(1));
            m.add_term({Exponent::integer(1), 0, 0}, Cplx(-1));
            phi1L_ = frobenius_solve(odeL, Exponent::integer(0), odeL.a2.like_empty(), K, nu);
            Exponent rho2 = beta_exp + Exponent{1, 0, 1, 0};  // beta + 3/2
            phi2L_ = series_shift(frobenius_conjugated(odeL, Cplx(beta + 1.5), K, nu), rho2);
            LogPowerSeries rL = mul(m, rhs.serL);
            partL_ = rL.empty() ? odeL.a2.like_empty()
                                : frobenius_solve(odeL, Exponent::integer(0), rL, K, nu, 10);
            // fit (c1, c2) at a = 1 - d_band (d/da = -d/dx on the left)
            Real x0 = d_band_;
            Cplx v = numL_.eval(1.0 - d_band_, 0) - sval(partL_, x0, 0);
            Cplx dv = numL_.eval(1.0 - d_band_, 1) + sval(partL_, x0, 1);
            Cplx p1 = sval(phi1L_, x0, 0), dp1 = -sval(phi1L_, x0, 1);
            Cplx p2 = sval(phi2L_, x0, 0), dp2 = -sval(phi2L_, x0, 1);
            Cplx det = p1 * dp2 - p2 * dp1;
            c1_ = (v * dp2 - p2 * dv) / det;
            c2_ = (p1 * dv - v * dp1) / det;
            bandL_ = add(add(phi1L_.scale(c1_), phi2L_.scale(c2_)), partL_);
            bandR_ = puiseux_continue(bandL_);
        }
        numR_ = integrate_from(1.0 + d_band_, sval(bandR_, d_band_, 0),
                               sval(bandR_, d_band_, 1), a_far_, 140);

        // --- infinity branch
        {
            SeriesODE odeI = lbeta_ode_atinf(beta);
            phi1I_ = series_shift(frobenius_conjugated(odeI, Cplx(-beta), K, nu),
                                  Exponent{0, 0, 0, 0} - beta_exp);
            phi2I_ = series_shift(frobenius_conjugated(odeI, Cplx(1.0 - beta), K, nu),
                                  Exponent{1, 0, 0, 0} - beta_exp);
            partI_ = rhs.serInf.empty()
                         ? odeI.a2.like_empty()
                         : frobenius_solve(odeI, Exponent::integer(0), rhs.serInf, K, nu, 10);
            Real af1 = 0.86 * a_far_, af2 = a_far_;
            auto branch = [&](const LogPowerSeries& s, Real a, int da) {
                Cplx v = sval(s, 1.0 / a, da);
                return da == 0 ? v : v * (-1.0 / (a * a));
            };
            Cplx r1 = numR_.eval(af1, 0) - branch(partI_, af1, 0);
            Cplx r2 = numR_.eval(af2, 0) - branch(partI_, af2, 0);
            Cplx p11 = branch(phi1I_, af1, 0), p12 = branch(phi2I_, af1, 0);
            Cplx p21 = branch(phi1I_, af2, 0), p22 = branch(phi2I_, af2, 0);
            Cplx det = p11 * p22 - p12 * p21;
            c1i_ = (r1 * p22 - p12 * r2) / det;
            c2i_ = (p11 * r2 - r1 * p21) / det;
            infFull_ = add(add(phi1I_.scale(c1i_), phi2I_.scale(c2i_)), partI_);
        }
    }

    Cplx eval(Real a, int deriv) const {
        if (deriv <= 1) return raw(a, deriv);
        if (deriv == 2) return d2_from_ode(a);
        if (deriv == 3) return d3_from_ode(a);
        if (deriv == 4) return d4_from_ode(a);
        throw NumericsError("HypCoefficient: deriv > 4");
    }

    Real beta() const { return beta_; }
    Exponent beta_exp() const { return beta_exp_; }

    // complete lattice series at anchor 0 / bandL / bandR / infinity
    LogPowerSeries full_series(int anchor) const {
        switch (anchor) {
            case 0: return ser0_;
            case 1: return bandL_;
            case 2: return bandR_;
            case 3: return infFull_;
        }
        throw NumericsError("full_series: anchor");
    }

private:
    CheckpointedSolution integrate_from(Real a0, Cplx u0, Cplx du0, Real a1, int n) const {
        OperatorSpec spec = spec_;
        auto rhs = rhs_;
        OdeRhs f = [spec, rhs](Real a, const OdeState& y, OdeState& dy) {
            dy.resize(2);
            dy[0] = y[1];
            dy[1] = (rhs.eval(a, 0) / spec.scale(a)) - spec.pcoef(a) * y[1] -
                    spec.qcoef(a) * y[0];
        };
        OdeOptions opt;
        opt.rel_tol = 1e-12;
        opt.abs_tol = 1e-14;
        return CheckpointedSolution(std::move(f), a0, u0, du0, a1, n, true, opt);
    }

    Cplx sval(const LogPowerSeries& s, Real x, int d) const {
        return detail::series_sol(s, 0, nu_, x, d);
    }

    Cplx raw(Real a, int d) const {
        if (a < a_ser_) return sval(ser0_, a, d);
        if (a <= 1.0 - d_band_) return numL_.eval(a, d);
        if (a < 1.0) {
            Cplx v = sval(bandL_, 1.0 - a, d);
            return d == 1 ? -v : v;
        }
        if (a <= 1.0 + d_band_) return sval(bandR_, a - 1.0, d);
        if (a <= a_far_) return numR_.eval(a, d);
        Cplx v = sval(infFull_, 1.0 / a, d);
        return d == 0 ? v : v * (-1.0 / (a * a));
    }

    Cplx d2_from_ode(Real a) const {
        return rhs_.eval(a, 0) / spec_.scale(a) - spec_.pcoef(a) * raw(a, 1) -
               spec_.qcoef(a) * raw(a, 0);
    }
    Cplx d3_from_ode(Real a) const {
        Real h = 1e-6 * (std::abs(a) + 1.0);
        auto pf = [&](Real x) { return spec_.pcoef(x); };
        auto qf = [&](Real x) { return spec_.qcoef(x); };
        Cplx dp = (pf(a + h) - pf(a - h)) / (2 * h);
        Cplx dq = (qf(a + h) - qf(a - h)) / (2 * h);
        auto Ff = [&](Real x) { return rhs_.eval(x, 0) / spec_.scale(x); };
        Cplx dF = (Ff(a + h) - Ff(a - h)) / (2 * h);
        return dF - dp * raw(a, 1) - pf(a) * d2_from_ode(a) - dq * raw(a, 0) -
               qf(a) * raw(a, 1);
    }
    Cplx d4_from_ode(Real a) const {
        Real h = 1e-5 * (std::abs(a) + 1.0);
        return (d3_from_ode(a + h) - d3_from_ode(a - h)) / (2 * h);
    }

    Real beta_, nu_;
    Exponent beta_exp_;
    OperatorSpec spec_;
    HypRhs rhs_;
    LogPowerSeries ser0_;
    const Real a_ser_ = 0.15, d_band_ = 0.06, a_far_ = 28.0;
    CheckpointedSolution numL_, numR_;
    LogPowerSeries phi1L_, phi2L_, partL_, bandL_, bandR_;
    Cplx c1_{0}, c2_{0};
    LogPowerSeries phi1I_, phi2I_, partI_, infFull_;
    Cplx c1i_{0}, c2i_{0};
};

using HypCoefficientPtr = std::shared_ptr<const HypCoefficient>;

}  // namespace za
