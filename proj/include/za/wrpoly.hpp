#pragma once

// Exact closed-form radial functions: finite sums  sum c_{j,k} R^j W(R)^k
// with W = (1+R^2/8)^{-1}, optionally times log(R). Closed under d/dR to any
// order via W' = -(R/4) W^2, which is what the inner-region ledger algebra
// needs. Also hosts the fundamental systems of the linearized operators
// L_- = -Delta - W^2 and L_+ = -Delta - 3W^2 in exact form.

#include <map>

#include "za/common.hpp"

namespace za {

// sum over (j,k) of c * R^j * W^k; j in Z (negative powers appear through the
// elliptic kernels), k in Z_{>=0}.
class PolyWR {
public:
    PolyWR() = default;
    static PolyWR mono(Real c, int j, int k) {
        PolyWR p;
        if (c != 0.0) p.c_[{j, k}] = c;
        return p;
    }
    static PolyWR constant(Real c) { return mono(c, 0, 0); }
    static PolyWR W(int k = 1) { return mono(1.0, 0, k); }

    bool empty() const { return c_.empty(); }

    PolyWR& operator+=(const PolyWR& o) {
        for (auto& [jk, v] : o.c_) add(jk.first, jk.second, v);
        return *this;
    }
    friend PolyWR operator+(PolyWR a, const PolyWR& b) { a += b; return a; }
    friend PolyWR operator-(PolyWR a, const PolyWR& b) {
        for (auto& [jk, v] : b.c_) a.add(jk.first, jk.second, -v);
        return a;
    }
    friend PolyWR operator*(const PolyWR& a, const PolyWR& b) {
        PolyWR r;
        for (auto& [jk1, v1] : a.c_)
            for (auto& [jk2, v2] : b.c_)
                r.add(jk1.first + jk2.first, jk1.second + jk2.second, v1 * v2);
        return r;
    }
    PolyWR scaled(Real f) const {
        PolyWR r;
        for (auto& [jk, v] : c_) r.add(jk.first, jk.second, v * f);
        return r;
    }

    // d/dR: R^j W^k -> j R^{j-1} W^k - (k/4) R^{j+1} W^{k+1}
    PolyWR deriv() const {
        PolyWR r;
        for (auto& [jk, v] : c_) {
            auto [j, k] = jk;
            if (j != 0) r.add(j - 1, k, v * j);
            if (k != 0) r.add(j + 1, k + 1, -v * k / 4.0);
        }
        return r;
    }

    Real eval(Real R) const {
        const Real W = 1.0 / (1.0 + R * R / 8.0);
        Real s = 0;
        for (auto& [jk, v] : c_) s += v * std::pow(R, jk.first) * std::pow(W, jk.second);
        return s;
    }

    // leading behavior as R -> infinity: largest effective power j - 2k
    // (W ~ 8/R^2). Returns (power, coefficient-sum) for tail decay tests.
    std::pair<int, Real> lead_inf() const {
        int best = INT32_MIN;
        Real coef = 0;
        for (auto& [jk, v] : c_) {
            int p = jk.first - 2 * jk.second;
            if (p > best) { best = p; coef = 0; }
            if (p == best) coef += v * std::pow(8.0, jk.second);
        }
        return {best, coef};
    }

    const std::map<std::pair<int, int>, Real>& terms() const { return c_; }

private:
    void add(int j, int k, Real v) {
        if (v == 0.0) return;
        auto key = std::make_pair(j, k);
        auto it = c_.find(key);
        if (it == c_.end()) c_[key] = v;
        else {
            it->second += v;
            if (it->second == 0.0) c_.erase(it);
        }
    }
    std::map<std::pair<int, int>, Real> c_;
};

// A + B log R with PolyWR parts; closed under d/dR.
struct WRLog {
    PolyWR a, b;

    WRLog() = default;
    WRLog(PolyWR a_, PolyWR b_ = {}) : a(std::move(a_)), b(std::move(b_)) {}

    WRLog deriv() const {
        // (A + B log R)' = A' + B/R + B' log R
        WRLog r;
        r.a = a.deriv() + b * PolyWR::mono(1.0, -1, 0);
        r.b = b.deriv();
        return r;
    }
    Real eval(Real R) const {
        Real v = a.eval(R);
        if (!b.empty()) v += b.eval(R) * std::log(R);
        return v;
    }
    friend WRLog operator+(const WRLog& x, const WRLog& y) { return {x.a + y.a, x.b + y.b}; }
    friend WRLog operator-(const WRLog& x, const WRLog& y) { return {x.a - y.a, x.b - y.b}; }
    friend WRLog operator*(const PolyWR& p, const WRLog& y) { return {p * y.a, p * y.b}; }
    WRLog scaled(Real f) const { return {a.scaled(f), b.scaled(f)}; }
};

// Fundamental systems for the linearized operators, normalized so that the
// Wronskian  Phi Theta' - Phi' Theta = R^{-3}  exactly.
//
//   L_-:  Phi_- = W,
//         Theta_- = W ( -R^{-2}/2 + log(R)/4 + R^2/128 )
//                 = (1/4) W ( log R + Q_-(R) ),  Q_- = (R^4-64)/(32 R^2).
//   L_+:  Phi_+ = LamW = W^2 (1 - R^2/8),
//         Theta_+ = (1/128)(R^2 - 64 R^{-2}) LamW + W^2 + (96/128) log(R) LamW,
// obtained by integrating gamma' = R^{-3} Phi_+^{-2} in partial fractions;
// the apparent pole at R^2 = 8 cancels against the zero of LamW.
struct PMSystem {
    bool plus;               // true: L_+, false: L_-
    WRLog phi, theta;        // exact solutions
    std::vector<WRLog> phi_d, theta_d;  // precomputed derivatives

    explicit PMSystem(bool plus_, int max_deriv = 10) : plus(plus_) {
        PolyWR W = PolyWR::W(1);
        PolyWR W2 = PolyWR::W(2);
        PolyWR LamW = PolyWR::mono(1.0, 0, 2) + PolyWR::mono(-1.0 / 8.0, 2, 2);
        if (!plus) {
            phi = WRLog(W);
            PolyWR A = PolyWR::mono(-0.5, -2, 0) + PolyWR::mono(1.0 / 128.0, 2, 0);
            theta = WRLog(A * W, W.scaled(0.25));
        } else {
            phi = WRLog(LamW);
            PolyWR A = PolyWR::mono(1.0 / 128.0, 2, 0) + PolyWR::mono(-0.5, -2, 0);
            theta = WRLog(A * LamW + W2, LamW.scaled(96.0 / 128.0));
        }
        phi_d.push_back(phi);
        theta_d.push_back(theta);
        for (int i = 0; i < max_deriv; ++i) {
            phi_d.push_back(phi_d.back().deriv());
            theta_d.push_back(theta_d.back().deriv());
        }
    }

    Real phi_eval(Real R, int k = 0) const { return phi_d.at(k).eval(R); }
    Real theta_eval(Real R, int k = 0) const { return theta_d.at(k).eval(R); }

    // L_{pm} u with exact derivatives supplied by the caller
    static Real apply(bool plus, Real R, Real u, Real du, Real d2u) {
        const Real W = 1.0 / (1.0 + R * R / 8.0);
        const Real c = plus ? 3.0 : 1.0;
        return -d2u - 3.0 * du / R - c * W * W * u;
    }
};

}  // namespace za
