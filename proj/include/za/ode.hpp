#pragma once

// Adaptive embedded Runge-Kutta (Dormand-Prince 5(4)) over small complex
// state vectors. Complex ODEs are integrated as coupled real systems only in
// the sense that std::complex arithmetic is componentwise here; one code path
// serves every operator family.

#include <array>
#include <functional>
#include <vector>

#include "za/common.hpp"

namespace za {

struct OdeOptions {
    Real rel_tol = 1e-11;
    Real abs_tol = 1e-13;
    Real h_init = 1e-4;
    Real h_min = 1e-14;
    int max_steps = 2000000;
};

using OdeState = std::vector<Cplx>;
using OdeRhs = std::function<void(Real, const OdeState&, OdeState&)>;

namespace dp45 {
inline constexpr Real c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr Real a21 = 1.0 / 5;
inline constexpr Real a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr Real a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr Real a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                      a54 = -212.0 / 729;
inline constexpr Real a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr Real b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
inline constexpr Real e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                      e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dp45

// Integrates y' = f(x, y) from xa to xb (either direction). Optionally calls
// `observer(x, y)` after each accepted step.
inline void ode_integrate(const OdeRhs& f, Real xa, Real xb, OdeState& y,
                          const OdeOptions& opt = {},
                          const std::function<void(Real, const OdeState&)>& observer = nullptr) {
    using namespace dp45;
    const int n = (int)y.size();
    const Real span = std::abs(xb - xa);
    if (span <= 4e-15 * (std::abs(xa) + std::abs(xb) + 1e-30)) return;  // same point
    const Real dir = (xb >= xa) ? 1.0 : -1.0;
    Real x = xa;
    Real h = dir * std::min(opt.h_init, span);
    OdeState k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), ynew(n);
    f(x, y, k1);
    for (int step = 0; step < opt.max_steps; ++step) {
        if (dir * (x - xb) >= 0) return;
        if (std::abs(x - xb) <= 4e-15 * (std::abs(x) + std::abs(xb))) return;
        if (dir * (x + h - xb) > 0) h = xb - x;
        for (int i = 0; i < n; ++i) yt[i] = y[i] + h * a21 * k1[i];
        f(x + c2 * h, yt, k2);
        for (int i = 0; i < n; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f(x + c3 * h, yt, k3);
        for (int i = 0; i < n; ++i)
            yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(x + c4 * h, yt, k4);
        for (int i = 0; i < n; ++i)
            yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(x + c5 * h, yt, k5);
        for (int i = 0; i < n; ++i)
            yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                a65 * k5[i]);
        f(x + h, yt, k6);
        for (int i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                  b6 * k6[i]);
        f(x + h, ynew, k7);
        Real err = 0;
        for (int i = 0; i < n; ++i) {
            Cplx e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                          e7 * k7[i]);
            Real sc = opt.abs_tol +
                      opt.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(e) / sc);
        }
        if (err <= 1.0) {
            x += h;
            y = ynew;
            k1 = k7;
            if (observer) observer(x, y);
        }
        Real fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        fac = std::clamp(fac, 0.2, 5.0);
        h *= fac;
        if (std::abs(h) < std::max(opt.h_min, 1e-15 * (std::abs(x) + 1e-6)))
            throw NumericsError("ode_integrate: step size underflow");
    }
    throw NumericsError("ode_integrate: max steps exceeded");
}

// Integrate and record the solution at prescribed sample points (sorted in
// the direction of integration).
inline std::vector<OdeState> ode_solve_at(const OdeRhs& f, Real xa,
                                          const std::vector<Real>& xs, OdeState y,
                                          const OdeOptions& opt = {}) {
    std::vector<OdeState> out;
    out.reserve(xs.size());
    Real x = xa;
    for (Real xq : xs) {
        if (xq != x) ode_integrate(f, x, xq, y, opt);
        x = xq;
        out.push_back(y);
    }
    return out;
}

// Checkpointed ODE solution: stores (x, u, u') checkpoints from a single
// construction sweep; queries re-integrate from the nearest checkpoint with
// the integrator's own tolerance, so evaluations carry solver accuracy
// instead of interpolation error. A small memo exploits query locality.
class CheckpointedSolution {
public:
    CheckpointedSolution() = default;
    CheckpointedSolution(OdeRhs rhs, Real x0, Cplx u0, Cplx du0, Real x1, int n_checkpoints,
                         bool geometric, OdeOptions opt = {})
        : rhs_(std::move(rhs)), opt_(opt) {
        std::vector<Real> nodes =
            geometric ? geomspace(x0, x1, n_checkpoints) : linspace(x0, x1, n_checkpoints);
        OdeState y{u0, du0};
        xs_.push_back(x0);
        us_.push_back(u0);
        dus_.push_back(du0);
        Real x = x0;
        for (size_t i = 1; i < nodes.size(); ++i) {
            ode_integrate(rhs_, x, nodes[i], y, opt_);
            x = nodes[i];
            xs_.push_back(x);
            us_.push_back(y[0]);
            dus_.push_back(y[1]);
        }
        descending_ = xs_.front() > xs_.back();
    }

    bool covers(Real x) const {
        if (xs_.empty()) return false;
        Real lo = std::min(xs_.front(), xs_.back());
        Real hi = std::max(xs_.front(), xs_.back());
        return x >= lo - 1e-12 && x <= hi + 1e-12;
    }

    // value (deriv = 0) or derivative (deriv = 1)
    Cplx eval(Real x, int deriv) const {
        if (xs_.empty()) throw NumericsError("CheckpointedSolution: empty");
        // exact hit on memo
        if (memo_valid_ && x == memo_x_) return deriv == 0 ? memo_u_ : memo_du_;
        // nearest checkpoint index
        size_t best = 0;
        Real bd = std::numeric_limits<Real>::max();
        // binary search over sorted direction
        if (!descending_) {
            auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
            size_t i = std::min<size_t>(it - xs_.begin(), xs_.size() - 1);
            for (size_t j : {i > 0 ? i - 1 : i, i}) {
                Real d = std::abs(xs_[j] - x);
                if (d < bd) { bd = d; best = j; }
            }
        } else {
            auto it = std::lower_bound(xs_.begin(), xs_.end(), x, std::greater<Real>());
            size_t i = std::min<size_t>(it - xs_.begin(), xs_.size() - 1);
            for (size_t j : {i > 0 ? i - 1 : i, i}) {
                Real d = std::abs(xs_[j] - x);
                if (d < bd) { bd = d; best = j; }
            }
        }
        // prefer the memo if it is closer (query locality)
        Real xs = xs_[best];
        Cplx u = us_[best], du = dus_[best];
        if (memo_valid_ && std::abs(memo_x_ - x) < bd) {
            xs = memo_x_;
            u = memo_u_;
            du = memo_du_;
        }
        OdeState y{u, du};
        if (xs != x) ode_integrate(rhs_, xs, x, y, opt_);
        memo_valid_ = true;
        memo_x_ = x;
        memo_u_ = y[0];
        memo_du_ = y[1];
        return deriv == 0 ? y[0] : y[1];
    }

private:
    OdeRhs rhs_;
    OdeOptions opt_;
    std::vector<Real> xs_;
    std::vector<Cplx> us_, dus_;
    bool descending_ = false;
    mutable bool memo_valid_ = false;
    mutable Real memo_x_ = 0;
    mutable Cplx memo_u_{0}, memo_du_{0};
};

// Dense sampled solution with cubic Hermite interpolation between nodes
// (value + derivative at each node come from the integration itself).
class SampledSolution {
public:
    SampledSolution() = default;
    // states[i] = (u, u') at node x[i]
    SampledSolution(std::vector<Real> xs, std::vector<Cplx> u, std::vector<Cplx> du)
        : x_(std::move(xs)), u_(std::move(u)), du_(std::move(du)) {}

    bool covers(Real x) const {
        return !x_.empty() && x >= x_.front() - 1e-12 && x <= x_.back() + 1e-12;
    }
    Real xmin() const { return x_.front(); }
    Real xmax() const { return x_.back(); }

    Cplx value(Real x) const { return interp(x, false); }
    Cplx deriv(Real x) const { return interp(x, true); }

private:
    Cplx interp(Real x, bool want_deriv) const {
        if (x_.empty()) throw NumericsError("SampledSolution: empty");
        x = std::clamp(x, x_.front(), x_.back());
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        size_t i = (it == x_.begin()) ? 0 : size_t(it - x_.begin()) - 1;
        if (i + 1 >= x_.size()) i = x_.size() - 2;
        const Real h = x_[i + 1] - x_[i];
        const Real s = (x - x_[i]) / h;
        const Cplx p0 = u_[i], p1 = u_[i + 1], m0 = du_[i] * h, m1 = du_[i + 1] * h;
        const Real s2 = s * s, s3 = s2 * s;
        if (!want_deriv) {
            return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * m0 +
                   (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * m1;
        }
        return ((6 * s2 - 6 * s) * p0 + (3 * s2 - 4 * s + 1) * m0 +
                (-6 * s2 + 6 * s) * p1 + (3 * s2 - 2 * s) * m1) /
               h;
    }

    std::vector<Real> x_;
    std::vector<Cplx> u_, du_;
};

}  // namespace za
