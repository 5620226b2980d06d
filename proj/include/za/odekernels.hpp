#pragma once

// Fundamental systems and variation-of-constants solvers for the four
// operator families:
//   Lbeta        (1-a^2) u'' + (2(b-1)a + 3/a) u' + (b - b^2) u
//   SchrodInner  u'' + (3/y) u' - (i/2)(1 + y d_y) u + mu u
//   LinearizedPM -u'' - (3/R) u' - {3,1} W^2 u
//   EulerWave    (1/4)(y d_y)^2 u - (g - 1/2) y d_y u + g(g-1) u
// Local series come from one generic Frobenius engine (conjugation reduces
// non-lattice indicial roots to the integer root 0); asymptotic (irregular)
// anchors use the explicit recursions with optimal-truncation metadata.

#include <memory>

#include "za/common.hpp"
#include "za/logseries.hpp"
#include "za/ode.hpp"
#include "za/wrpoly.hpp"

namespace za {

enum class OpFamily { Lbeta, SchrodInner, LinearizedPM, EulerWave };

struct OperatorSpec {
    OpFamily family = OpFamily::Lbeta;
    Real beta = 0;    // Lbeta
    Cplx mu{0, 0};    // SchrodInner: mu_{a1,a2} = i(nu a1 + a2) - alpha0
    bool plus = false;  // LinearizedPM sign
    Real gamma = 0;   // EulerWave: nu b1 + b2

    static Real beta_l(Real nu, int l) { return (2.0 * l - 2.0) * nu - l - 1.0; }
    static OperatorSpec lbeta(Real b) { OperatorSpec s; s.family = OpFamily::Lbeta; s.beta = b; return s; }
    static OperatorSpec schrod(Cplx m) { OperatorSpec s; s.family = OpFamily::SchrodInner; s.mu = m; return s; }
    static OperatorSpec pm(bool p) { OperatorSpec s; s.family = OpFamily::LinearizedPM; s.plus = p; return s; }
    static OperatorSpec euler(Real g) { OperatorSpec s; s.family = OpFamily::EulerWave; s.gamma = g; return s; }

    // normalized form: op[u] = scale(x) * ( u'' + p(x) u' + q(x) u )
    Real scale(Real x) const {
        switch (family) {
            case OpFamily::Lbeta: return 1.0 - x * x;
            case OpFamily::SchrodInner: return 1.0;
            case OpFamily::LinearizedPM: return -1.0;
            case OpFamily::EulerWave: return x * x / 4.0;
        }
        return 1.0;
    }
    Cplx pcoef(Real x) const {
        switch (family) {
            case OpFamily::Lbeta:
                return (2.0 * (beta - 1.0) * x + 3.0 / x) / (1.0 - x * x);
            case OpFamily::SchrodInner:
                return Cplx(3.0 / x, -x / 2.0);
            case OpFamily::LinearizedPM:
                return 3.0 / x;
            case OpFamily::EulerWave:
                return (3.0 - 4.0 * gamma) / x;
        }
        return 0;
    }
    Cplx qcoef(Real x) const {
        switch (family) {
            case OpFamily::Lbeta:
                return (beta - beta * beta) / (1.0 - x * x);
            case OpFamily::SchrodInner:
                return mu - Cplx(0, 0.5);
            case OpFamily::LinearizedPM: {
                Real W = 1.0 / (1.0 + x * x / 8.0);
                return (plus ? 3.0 : 1.0) * W * W;
            }
            case OpFamily::EulerWave:
                return 4.0 * gamma * (gamma - 1.0) / (x * x);
        }
        return 0;
    }
    // full operator applied to exact data (u, u', u'')
    Cplx apply(Real x, Cplx u, Cplx du, Cplx d2u) const {
        return scale(x) * (d2u + pcoef(x) * du + qcoef(x) * u);
    }
};

// ------------------------------------------------- series construction -----

// Conjugated Frobenius: solves op(x^rho g) = 0 for analytic g with g(0) = 1,
// where `ode` is the lattice-exponent operator and rho is a plain number.
// Returns the series of g; the caller re-attaches the x^rho factor.
inline LogPowerSeries frobenius_conjugated(const SeriesODE& ode, Cplx rho, int K, Real nu,
                                           int Sbudget = 8) {
    SeriesODE cj;
    cj.a2 = ode.a2;
    LogPowerSeries xm1 = ode.a2.like_empty();
    xm1.add_term({Exponent::integer(-1), 0, 0}, Cplx(1));
    LogPowerSeries xm2 = ode.a2.like_empty();
    xm2.add_term({Exponent::integer(-2), 0, 0}, Cplx(1));
    cj.a1 = add(ode.a1, mul(ode.a2, xm1).scale(2.0 * rho));
    cj.a0 = add(add(ode.a0, mul(ode.a1, xm1).scale(rho)),
                mul(ode.a2, xm2).scale(rho * (rho - 1.0)));
    LogPowerSeries rhs = ode.a2.like_empty();
    return frobenius_solve(cj, Exponent::integer(0), rhs, K, nu, Sbudget);
}

// Lbeta written with analytic coefficients at each anchor (multiplied through
// by the stated prefactor, which does not change the kernel).
inline SeriesODE lbeta_ode_at0(Real beta) {
    // a L = a(1-a^2) d^2 + (3 + 2(b-1)a^2) d + (b-b^2) a
    SeriesODE o;
    o.a2.var = o.a1.var = o.a0.var = 'a';
    o.a2.add_term({Exponent::integer(1), 0, 0}, Cplx(1));
    o.a2.add_term({Exponent::integer(3), 0, 0}, Cplx(-1));
    o.a1.add_term({Exponent::integer(0), 0, 0}, Cplx(3));
    o.a1.add_term({Exponent::integer(2), 0, 0}, Cplx(2.0 * (beta - 1.0)));
    o.a0.add_term({Exponent::integer(1), 0, 0}, Cplx(beta - beta * beta));
    return o;
}

// x = 1 - a (left side, a < 1): (1-x) L = x(2-x)(1-x) d^2 - [2(b-1)(1-x)^2+3] d
//                                + (b-b^2)(1-x)
inline SeriesODE lbeta_ode_at1(Real beta, bool right) {
    SeriesODE o;
    o.a2.var = o.a1.var = o.a0.var = 'x';
    auto T = [](int p) { return TermKey{Exponent::integer(p), 0, 0}; };
    if (!right) {
        // x(2-x)(1-x) = 2x - 3x^2 + x^3
        o.a2.add_term(T(1), Cplx(2));
        o.a2.add_term(T(2), Cplx(-3));
        o.a2.add_term(T(3), Cplx(1));
        Real b2 = 2.0 * (beta - 1.0);
        o.a1.add_term(T(0), Cplx(-(b2 + 3.0)));
        o.a1.add_term(T(1), Cplx(2.0 * b2));
        o.a1.add_term(T(2), Cplx(-b2));
        o.a0.add_term(T(0), Cplx(beta - beta * beta));
        o.a0.add_term(T(1), Cplx(-(beta - beta * beta)));
    } else {
        // x = a - 1: (1+x) L = -x(x+2)(1+x) d^2 + [2(b-1)(1+x)^2 + 3] d
        //             + (b-b^2)(1+x)
        o.a2.add_term(T(1), Cplx(-2));
        o.a2.add_term(T(2), Cplx(-3));
        o.a2.add_term(T(3), Cplx(-1));
        Real b2 = 2.0 * (beta - 1.0);
        o.a1.add_term(T(0), Cplx(b2 + 3.0));
        o.a1.add_term(T(1), Cplx(2.0 * b2));
        o.a1.add_term(T(2), Cplx(b2));
        o.a0.add_term(T(0), Cplx(beta - beta * beta));
        o.a0.add_term(T(1), Cplx(beta - beta * beta));
    }
    return o;
}

// x = 1/a: L = (x^4 - x^2) d^2 + (-x^3 - 2 b x) d + (b - b^2)
inline SeriesODE lbeta_ode_atinf(Real beta) {
    SeriesODE o;
    o.a2.var = o.a1.var = o.a0.var = 'x';
    auto T = [](int p) { return TermKey{Exponent::integer(p), 0, 0}; };
    o.a2.add_term(T(4), Cplx(1));
    o.a2.add_term(T(2), Cplx(-1));
    o.a1.add_term(T(3), Cplx(-1));
    o.a1.add_term(T(1), Cplx(-2.0 * beta));
    o.a0.add_term(T(0), Cplx(beta - beta * beta));
    return o;
}

// y (L_S + mu) = y d^2 + (3 - (i/2) y^2) d + (mu - i/2) y
inline SeriesODE schrod_ode_at0(Cplx mu) {
    SeriesODE o;
    o.a2.var = o.a1.var = o.a0.var = 'y';
    auto T = [](int p) { return TermKey{Exponent::integer(p), 0, 0}; };
    o.a2.add_term(T(1), Cplx(1));
    o.a1.add_term(T(0), Cplx(3));
    o.a1.add_term(T(2), Cplx(0, -0.5));
    o.a0.add_term(T(1), mu - Cplx(0, 0.5));
    return o;
}

// Asymptotic branch coefficients of L_S + mu at y = infinity:
//  phi_inf = y^{-2 i mu - 1} (1 + d_1 y^-2 + ...),
//  psi_inf = e^{i y^2/4} y^{2 i mu - 3} (1 + c_1 y^-2 + ...).
// Coefficients grow like C^l l!, so only optimal truncation applies.
struct SchrodAsym {
    Cplx mu;
    Cplx gamma_phi, gamma_psi;  // exponents
    std::vector<Cplx> dphi, cpsi;

    explicit SchrodAsym(Cplx mu_, int K = 24) : mu(mu_) {
        const Cplx I(0, 1);
        gamma_phi = -2.0 * I * mu - 1.0;
        gamma_psi = 2.0 * I * mu - 3.0;
        dphi.assign(K + 1, Cplx(0));
        cpsi.assign(K + 1, Cplx(0));
        dphi[0] = cpsi[0] = 1.0;
        for (int l = 1; l <= K; ++l) {
            // phi: i l d_l + (g-2l+2)(g-2l+4) d_{l-1} = 0
            Cplx g = gamma_phi;
            dphi[l] = -(g - 2.0 * l + 2.0) * (g - 2.0 * l + 4.0) * dphi[l - 1] / (I * Real(l));
            // psi (conjugated): -i l c_l + (g-2l+2)(g-2l+4) c_{l-1} = 0
            g = gamma_psi;
            cpsi[l] = (g - 2.0 * l + 2.0) * (g - 2.0 * l + 4.0) * cpsi[l - 1] / (I * Real(l));
        }
    }

    // evaluate a branch with optimal truncation, optionally dropping the outer
    // prefactor (normalized = true gives the bracket sum only).
    Cplx eval_phi(Real y, int deriv = 0, int Kuse = -1) const {
        return eval(y, deriv, false, Kuse);
    }
    Cplx eval_psi(Real y, int deriv = 0, int Kuse = -1) const {
        return eval(y, deriv, true, Kuse);
    }
    // remainder-normalized bracket: sum_{l<=K} c_l y^{-2l}
    Cplx bracket(bool psi, Real y, int Kuse) const {
        const auto& c = psi ? cpsi : dphi;
        Cplx s(0);
        Real y2 = y * y;
        Real pw = 1.0;
        for (int l = 0; l <= Kuse && l < (int)c.size(); ++l) {
            s += c[l] * pw;
            pw /= y2;
        }
        return s;
    }
    int optimal_K(bool psi, Real y) const {
        const auto& c = psi ? cpsi : dphi;
        Real best = std::numeric_limits<Real>::max();
        int kb = 0;
        Real pw = 1.0;
        for (int l = 0; l < (int)c.size(); ++l) {
            Real mag = std::abs(c[l]) * pw;
            if (mag < best) { best = mag; kb = l; }
            pw /= (y * y);
        }
        return kb;
    }

private:
    Cplx eval(Real y, int deriv, bool psi, int Kuse) const {
        const auto& c = psi ? cpsi : dphi;
        const Cplx g = psi ? gamma_psi : gamma_phi;
        if (Kuse < 0) Kuse = optimal_K(psi, y);
        Kuse = std::min(Kuse, (int)c.size() - 1);
        const Cplx I(0, 1);
        // f(y) = [e^{i y^2/4}] y^g sum c_l y^{-2l}
        Cplx s(0), sp(0);  // bracket and its y-derivative
        for (int l = 0; l <= Kuse; ++l) {
            Cplx t = c[l] * std::pow(y, -2.0 * l);
            s += t;
            sp += t * Real(-2 * l) / y;
        }
        Cplx yg = std::pow(Cplx(y, 0), g);
        Cplx phase = psi ? std::exp(I * y * y / 4.0) : Cplx(1);
        Cplx f = phase * yg * s;
        if (deriv == 0) return f;
        Cplx df = phase * yg * (sp + g / y * s);
        if (psi) df += I * (y / 2.0) * f;
        if (deriv == 1) return df;
        throw NumericsError("SchrodAsym: deriv > 1 not provided");
    }
};

// ------------------------------------------------------ dense solutions ----

// A solution handle: local series at the anchor + numeric continuation, or a
// purely closed form. Provides value and first derivative; second derivative
// follows from the ODE.
class SolutionFn {
public:
    using Eval = std::function<Cplx(Real, int)>;  // (x, deriv 0/1)
    SolutionFn() = default;
    explicit SolutionFn(Eval e) : eval_(std::move(e)) {}
    Cplx operator()(Real x, int deriv = 0) const { return eval_(x, deriv); }
    bool valid() const { return bool(eval_); }

private:
    Eval eval_;
};

struct FundamentalSystem {
    OperatorSpec spec;
    Anchor anchor = Anchor::Zero;
    Real nu = 0;
    LogPowerSeries ser1, ser2;  // local series (conjugation factor re-attached
                                // via rho1/rho2 below where needed)
    Cplx rho1{0}, rho2{0};      // sol = x^rho * (analytic series)
    bool log_corrected = false; // resonant branch detected and lifted
    SolutionFn sol1, sol2;
    Real x_lo = 0, x_hi = 0;    // numeric validity interval

    Cplx sol(int which, Real x, int deriv = 0) const {
        return which == 1 ? sol1(x, deriv) : sol2(x, deriv);
    }
    Cplx wronskian(Real x) const {
        return sol1(x, 0) * sol2(x, 1) - sol1(x, 1) * sol2(x, 0);
    }
    // closed-form Wronskian models (up to one overall constant)
    Real wronskian_model(Real x) const {
        switch (spec.family) {
            case OpFamily::Lbeta:
                return std::pow(std::abs(1.0 - x * x), spec.beta + 0.5) / (x * x * x);
            case OpFamily::LinearizedPM:
                return 1.0 / (x * x * x);
            case OpFamily::EulerWave:
                return std::pow(x, 4.0 * spec.gamma - 3.0);
            case OpFamily::SchrodInner:
                return 1.0 / (x * x * x);  // modulus of y^{-3} e^{i y^2/4}
        }
        return 1.0;
    }
};

namespace detail {

// evaluate series with optional x^rho factor
inline Cplx series_sol(const LogPowerSeries& s, Cplx rho, Real nu, Real x, int deriv) {
    // f = x^rho * g(x); g from the series (log terms allowed)
    Cplx g(0), gp(0);
    const Real lx = std::log(x);
    for (auto& [k, c] : s.terms) {
        Real mv = k.mu.value(nu);
        Cplx xm = std::pow(x, mv);
        Real lp = 1.0;
        for (int i = 0; i < k.s; ++i) lp *= lx;
        g += c * xm * lp;
        Cplx dp = c * xm * lp * mv / x;
        if (k.s > 0) {
            Real lpm = 1.0;
            for (int i = 0; i < k.s - 1; ++i) lpm *= lx;
            dp += c * xm * Real(k.s) * lpm / x;
        }
        gp += dp;
    }
    if (rho == Cplx(0)) return deriv == 0 ? g : gp;
    Cplx xr = std::pow(Cplx(x, 0), rho);
    if (deriv == 0) return xr * g;
    return xr * (gp + rho / x * g);
}

// checkpointed numeric continuation of op[u] = 0 from (x0, u0, du0) to x1
inline CheckpointedSolution continue_numeric(const OperatorSpec& op, Real x0, Cplx u0,
                                             Cplx du0, Real x1, int n = 200,
                                             bool geometric = true) {
    OperatorSpec spec = op;
    OdeRhs rhs = [spec](Real x, const OdeState& y, OdeState& dy) {
        dy.resize(2);
        dy[0] = y[1];
        dy[1] = -spec.pcoef(x) * y[1] - spec.qcoef(x) * y[0];
    };
    OdeOptions opt;
    opt.rel_tol = 1e-12;
    opt.abs_tol = 1e-14;
    return CheckpointedSolution(std::move(rhs), x0, u0, du0, x1, n, geometric, opt);
}

}  // namespace detail

// ------------------------------------------------------- build_system ------

inline FundamentalSystem build_system(const OperatorSpec& spec, Anchor anchor, Real nu,
                                      int K = 40) {
    FundamentalSystem fs;
    fs.spec = spec;
    fs.anchor = anchor;
    fs.nu = nu;

    switch (spec.family) {
        case OpFamily::LinearizedPM: {
            auto pm = std::make_shared<PMSystem>(spec.plus);
            fs.sol1 = SolutionFn([pm](Real R, int d) { return Cplx(pm->phi_eval(R, d)); });
            fs.sol2 = SolutionFn([pm](Real R, int d) { return Cplx(pm->theta_eval(R, d)); });
            fs.x_lo = 0;
            fs.x_hi = 1e6;
            return fs;
        }
        case OpFamily::EulerWave: {
            Real g = spec.gamma;
            fs.sol1 = SolutionFn([g](Real y, int d) {
                return d == 0 ? Cplx(std::pow(y, 2 * g)) : Cplx(2 * g * std::pow(y, 2 * g - 1));
            });
            fs.sol2 = SolutionFn([g](Real y, int d) {
                return d == 0 ? Cplx(std::pow(y, 2 * g - 2))
                              : Cplx((2 * g - 2) * std::pow(y, 2 * g - 3));
            });
            fs.x_lo = 0;
            fs.x_hi = 1e9;
            return fs;
        }
        case OpFamily::Lbeta: {
            const Real b = spec.beta;
            if (anchor == Anchor::Zero) {
                SeriesODE ode = lbeta_ode_at0(b);
                LogPowerSeries zero = ode.a2.like_empty();
                fs.ser1 = frobenius_solve(ode, Exponent::integer(0), zero, K, nu);
                fs.ser2 = frobenius_solve(ode, Exponent::integer(-2), zero, K, nu);
                for (auto& [k, c] : fs.ser2.terms)
                    if (k.s > 0) fs.log_corrected = true;
                Real xs = 0.2;
                auto s1 = fs.ser1, s2 = fs.ser2;
                auto n1 = detail::continue_numeric(spec, xs, detail::series_sol(s1, 0, nu, xs, 0),
                                                   detail::series_sol(s1, 0, nu, xs, 1), 0.93,
                                                   80, false);
                auto n2 = detail::continue_numeric(spec, xs, detail::series_sol(s2, 0, nu, xs, 0),
                                                   detail::series_sol(s2, 0, nu, xs, 1), 0.93,
                                                   80, false);
                fs.sol1 = SolutionFn([s1, n1, nu, xs](Real x, int d) {
                    if (x < xs) return detail::series_sol(s1, 0, nu, x, d);
                    return n1.eval(x, d);
                });
                fs.sol2 = SolutionFn([s2, n2, nu, xs](Real x, int d) {
                    if (x < xs) return detail::series_sol(s2, 0, nu, x, d);
                    return n2.eval(x, d);
                });
                fs.x_lo = 1e-6;
                fs.x_hi = 0.93;
                return fs;
            }
            if (anchor == Anchor::OneLeft || anchor == Anchor::OneRight) {
                const bool right = (anchor == Anchor::OneRight);
                SeriesODE ode = lbeta_ode_at1(b, right);
                LogPowerSeries zero = ode.a2.like_empty();
                fs.ser1 = frobenius_solve(ode, Exponent::integer(0), zero, K, nu);
                for (auto& [k, c] : fs.ser1.terms)
                    if (k.s > 0) fs.log_corrected = true;  // resonant branch lift
                fs.rho2 = Cplx(b + 1.5);
                fs.ser2 = frobenius_conjugated(ode, fs.rho2, K, nu);
                const Real xser = 0.08;  // |1-a| where series hands over
                auto s1 = fs.ser1, s2 = fs.ser2;
                Cplx r2 = fs.rho2;
                // numeric continuation in a: a = 1 -+ x
                Real a0 = right ? 1.0 + xser : 1.0 - xser;
                Real a1 = right ? 30.0 : 0.02;
                auto to_x = [right](Real a) { return right ? a - 1.0 : 1.0 - a; };
                auto dxda = right ? 1.0 : -1.0;
                auto mkfun = [&](const LogPowerSeries& s, Cplx rho) {
                    Cplx u0 = detail::series_sol(s, rho, nu, to_x(a0), 0);
                    Cplx du0 = detail::series_sol(s, rho, nu, to_x(a0), 1) * dxda;
                    auto num = detail::continue_numeric(spec, a0, u0, du0, a1, 160, true);
                    Real xh = xser;
                    return SolutionFn([s, rho, nu, num, xh, right, dxda](Real a, int d) {
                        Real x = right ? a - 1.0 : 1.0 - a;
                        if (x < xh) {
                            Cplx v = detail::series_sol(s, rho, nu, x, d);
                            return d == 1 ? v * dxda : v;
                        }
                        return num.eval(a, d);
                    });
                };
                fs.sol1 = mkfun(s1, 0);
                fs.sol2 = mkfun(s2, r2);
                fs.x_lo = right ? 1.0 + 1e-7 : 0.02;
                fs.x_hi = right ? 30.0 : 1.0 - 1e-7;
                return fs;
            }
            // Anchor::Infinity: x = 1/a, sol1 = a^b (...), sol2 = a^{b-1} (...)
            SeriesODE ode = lbeta_ode_atinf(b);
            fs.rho1 = Cplx(-b);
            fs.rho2 = Cplx(1.0 - b);
            fs.ser1 = frobenius_conjugated(ode, fs.rho1, K, nu);
            fs.ser2 = frobenius_conjugated(ode, fs.rho2, K, nu);
            {
                auto s1 = fs.ser1, s2 = fs.ser2;
                Cplx r1 = fs.rho1, r2 = fs.rho2;
                const Real aser = 12.0;  // use series for a >= aser
                auto mk = [&](const LogPowerSeries& s, Cplx rho) {
                    auto ev = [s, rho, nuv = nu](Real a, int d) {
                        Real x = 1.0 / a;
                        Cplx v = detail::series_sol(s, rho, nuv, x, d);
                        if (d == 0) return v;
                        return v * (-x * x);  // d/da = -x^2 d/dx
                    };
                    Cplx u0 = ev(aser, 0), du0 = ev(aser, 1);
                    auto num = detail::continue_numeric(spec, aser, u0, du0, 1.06, 160, true);
                    return SolutionFn([ev, num, aser](Real a, int d) {
                        if (a >= aser) return ev(a, d);
                        return num.eval(a, d);
                    });
                };
                fs.sol1 = mk(s1, r1);
                fs.sol2 = mk(s2, r2);
                fs.x_lo = 1.06;
                fs.x_hi = 1e6;
            }
            return fs;
        }
        case OpFamily::SchrodInner: {
            if (anchor == Anchor::Zero) {
                SeriesODE ode = schrod_ode_at0(spec.mu);
                LogPowerSeries zero = ode.a2.like_empty();
                fs.ser1 = frobenius_solve(ode, Exponent::integer(0), zero, K, nu);
                fs.ser2 = frobenius_solve(ode, Exponent::integer(-2), zero, K, nu);
                for (auto& [k, c] : fs.ser2.terms)
                    if (k.s > 0) fs.log_corrected = true;
                const Real yser = 0.4;
                auto s1 = fs.ser1, s2 = fs.ser2;
                auto n1 = detail::continue_numeric(spec, yser,
                                                   detail::series_sol(s1, 0, nu, yser, 0),
                                                   detail::series_sol(s1, 0, nu, yser, 1),
                                                   46.0, 400, false);
                auto n2 = detail::continue_numeric(spec, yser,
                                                   detail::series_sol(s2, 0, nu, yser, 0),
                                                   detail::series_sol(s2, 0, nu, yser, 1),
                                                   46.0, 400, false);
                fs.sol1 = SolutionFn([s1, n1, nu, yser](Real y, int d) {
                    if (y < yser) return detail::series_sol(s1, 0, nu, y, d);
                    return n1.eval(y, d);
                });
                fs.sol2 = SolutionFn([s2, n2, nu, yser](Real y, int d) {
                    if (y < yser) return detail::series_sol(s2, 0, nu, y, d);
                    return n2.eval(y, d);
                });
                fs.x_lo = 1e-6;
                fs.x_hi = 46.0;
                return fs;
            }
            // Anchor::Infinity: asymptotic branches with optimal truncation,
            // numeric continuation inward to moderate y
            auto asym = std::make_shared<SchrodAsym>(spec.mu, 26);
            const Real yfar = 38.0;
            auto mk = [&](bool psi) {
                Cplx u0 = psi ? asym->eval_psi(yfar, 0) : asym->eval_phi(yfar, 0);
                Cplx du0 = psi ? asym->eval_psi(yfar, 1) : asym->eval_phi(yfar, 1);
                auto num = detail::continue_numeric(spec, yfar, u0, du0, 5.0, 500, false);
                return SolutionFn([asym, num, psi, yfar](Real y, int d) {
                    if (y >= yfar) return psi ? asym->eval_psi(y, d) : asym->eval_phi(y, d);
                    return num.eval(y, d);
                });
            };
            fs.sol1 = mk(false);  // phi_inf: power branch
            fs.sol2 = mk(true);   // psi_inf: oscillatory branch
            fs.x_lo = 5.0;
            fs.x_hi = 400.0;
            return fs;
        }
    }
    throw NumericsError("build_system: unreachable");
}

// ------------------------------------------- variation of constants --------

enum class BCKind { RegularAtAnchor, PrescribedValues, DecaySelected };

struct BVData {
    Real x_lo = 0, x_hi = 1;
    BCKind bc = BCKind::RegularAtAnchor;
    Cplx v{0}, dv{0};  // for PrescribedValues at x_lo
};

// Particular/BV solution of op[u] = f with the system's two solutions.
// Returns a callable (x, deriv<=2). deriv = 2 is recovered from the ODE.
class VocSolution {
public:
    VocSolution(const FundamentalSystem& fs, std::function<Cplx(Real)> f, BVData bv)
        : spec_(fs.spec), f_(std::move(f)), bv_(bv),
          s1_([fs](Real x, int d) { return fs.sol(1, x, d); }),
          s2_([fs](Real x, int d) { return fs.sol(2, x, d); }) {
        // normalized rhs g = f / scale
        auto g = [this](Real x) { return f_(x) / spec_.scale(x); };
        auto wr = [this](Real x) {
            return s1_(x, 0) * s2_(x, 1) - s1_(x, 1) * s2_(x, 0);
        };
        Real lo = bv_.x_lo, hi = bv_.x_hi;
        std::vector<Real> nodes;
        if (lo <= 0.0) lo = 1e-8;
        nodes = geomspace(lo, hi, 320);
        auto integrand1 = [this, g, wr](Real s) { return s1_(s, 0) * g(s) / wr(s); };
        auto integrand2 = [this, g, wr](Real s) { return s2_(s, 0) * g(s) / wr(s); };
        I1_ = CumulativeCache(integrand1, nodes);
        I2_ = CumulativeCache(integrand2, nodes);
        if (bv_.bc == BCKind::DecaySelected) {
            // swap: integrate from x_hi downward (suitable for decaying rhs)
            tail1_ = I1_(hi);
            tail2_ = I2_(hi);
            decay_ = true;
        }
        if (bv_.bc == BCKind::PrescribedValues) {
            // add homogeneous combination to match (v, dv) at x_lo
            Cplx a11 = s1_(lo, 0), a12 = s2_(lo, 0);
            Cplx a21 = s1_(lo, 1), a22 = s2_(lo, 1);
            Cplx det = a11 * a22 - a12 * a21;
            Cplx r1 = bv_.v, r2 = bv_.dv;  // particular part vanishes at lo
            c1_ = (r1 * a22 - a12 * r2) / det;
            c2_ = (a11 * r2 - r1 * a21) / det;
        }
    }

    Cplx operator()(Real x, int deriv = 0) const {
        Cplx i1 = I1_(x), i2 = I2_(x);
        if (decay_) { i1 -= tail1_; i2 -= tail2_; }
        Cplx u = s2_(x, 0) * i1 - s1_(x, 0) * i2 + c1_ * s1_(x, 0) + c2_ * s2_(x, 0);
        if (deriv == 0) return u;
        Cplx du = s2_(x, 1) * i1 - s1_(x, 1) * i2 + c1_ * s1_(x, 1) + c2_ * s2_(x, 1);
        if (deriv == 1) return du;
        // u'' from the ODE: scale (u'' + p u' + q u) = f
        Cplx d2 = f_(x) / spec_.scale(x) - spec_.pcoef(x) * du - spec_.qcoef(x) * u;
        return d2;
    }

private:
    OperatorSpec spec_;
    std::function<Cplx(Real)> f_;
    BVData bv_;
    SolutionFn s1_, s2_;
    CumulativeCache I1_, I2_;
    Cplx tail1_{0}, tail2_{0};
    Cplx c1_{0}, c2_{0};
    bool decay_ = false;
};

inline VocSolution variation_of_constants(const FundamentalSystem& fs,
                                          std::function<Cplx(Real)> rhs, BVData bv) {
    if (bv.bc == BCKind::DecaySelected) {
        // decay test: |rhs * x| must decay at the far end of the interval
        Real xa = 0.5 * (bv.x_lo + bv.x_hi), xb = bv.x_hi;
        Real ma = std::abs(rhs(xa)) * xa * xa, mb = std::abs(rhs(xb)) * xb * xb;
        if (!(mb < ma))
            throw NumericsError("variation_of_constants: DecaySelected requires decaying rhs");
    }
    return VocSolution(fs, std::move(rhs), bv);
}

// ------------------------------------------------------------ connect ------

struct ConnectionCoefficients {
    // rows: target solutions (1,2) of sys0 expressed in sysInf basis
    Cplx m11, m12, m21, m22;
    Real cond = 0;
    Real fit_residual = 0;
};

inline ConnectionCoefficients connect(const FundamentalSystem& sys0,
                                      const FundamentalSystem& sysInf, Real lo, Real hi,
                                      int n_samples = 60) {
    auto xs = linspace(lo, hi, n_samples);
    ConnectionCoefficients cc;
    Real cond_max = 0, res_max = 0;
    for (int which = 1; which <= 2; ++which) {
        std::vector<Cplx> y;
        std::vector<std::vector<Cplx>> cols(2);
        for (Real x : xs) {
            y.push_back(sys0.sol(which, x, 0));
            y.push_back(sys0.sol(which, x, 1));
            cols[0].push_back(sysInf.sol(1, x, 0));
            cols[0].push_back(sysInf.sol(1, x, 1));
            cols[1].push_back(sysInf.sol(2, x, 0));
            cols[1].push_back(sysInf.sol(2, x, 1));
        }
        Real cond;
        auto c = lstsq(cols, y, &cond);
        cond_max = std::max(cond_max, cond);
        Real num = 0, den = 0;
        for (size_t i = 0; i < y.size(); ++i) {
            Cplx pred = c[0] * cols[0][i] + c[1] * cols[1][i];
            num += std::norm(y[i] - pred);
            den += std::norm(y[i]);
        }
        res_max = std::max(res_max, std::sqrt(num / std::max(den, 1e-300)));
        if (which == 1) { cc.m11 = c[0]; cc.m12 = c[1]; }
        else { cc.m21 = c[0]; cc.m22 = c[1]; }
    }
    cc.cond = cond_max;
    cc.fit_residual = res_max;
    if (cc.cond > 1e6)
        throw NumericsError("connect: ill-conditioned fit (cond > 1e6)");
    return cc;
}

}  // namespace za
