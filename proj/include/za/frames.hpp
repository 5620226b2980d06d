#pragma once

// Coordinate frames, the ground-state family and the gluing cutoffs.
//
// Conventions (4D radial): W(R) = (1 + R^2/8)^{-1}, Delta = d_RR + (3/R) d_R,
// lambda(t) = t^{-1/2-nu}, alpha(t) = alpha0 log t,
// R = lambda r, a = r/t, y = r t^{-1/2}.

#include <cmath>

#include "za/common.hpp"
#include "za/params.hpp"

namespace za {

struct Scaling {
    Real lambda;
    Real alpha;
    Real dlog_lambda;  // (d/dt) log lambda = (-1/2-nu)/t
};

inline Scaling scaling(const Params& p, Real t) {
    if (!(t > 0)) throw NumericsError("scaling: t must be positive");
    Scaling s;
    s.lambda = std::pow(t, -0.5 - p.nu);
    s.alpha = p.alpha0 * std::log(t);
    s.dlog_lambda = (-0.5 - p.nu) / t;
    return s;
}

struct FramePoint {
    Real t, r;
    Real R, a, y;
};

inline FramePoint to_frames(const Params& p, Real t, Real r) {
    if (!(t > 0) || !(r >= 0)) throw NumericsError("to_frames: domain");
    FramePoint f;
    f.t = t;
    f.r = r;
    f.R = std::pow(t, -0.5 - p.nu) * r;
    f.a = r / t;
    f.y = r / std::sqrt(t);
    return f;
}

struct GroundStateEval {
    Real R;
    Real W, dW, d2W;
    Real LamW;   // (1 + R d_R) W
    Real Wsq;
};

// Closed forms: W' = -(R/4) W^2, W'' = W^2 (-1/4 + (R^2/8) W),
// LamW = W^2 (1 - R^2/8). These satisfy Delta W + W^3 = 0 identically.
inline GroundStateEval ground_state(Real R) {
    GroundStateEval g;
    g.R = R;
    const Real u = 1.0 + R * R / 8.0;
    g.W = 1.0 / u;
    g.Wsq = g.W * g.W;
    g.dW = -(R / 4.0) * g.Wsq;
    g.d2W = g.Wsq * (-0.25 + (R * R / 8.0) * g.W);
    g.LamW = g.Wsq * (1.0 - R * R / 8.0);
    return g;
}

// Delta W at R (with the analytic even-extension value 4 W''(0) at R = 0,
// which equals -1 for this W; note W''(0) = -1/4).
inline Real laplace_W(Real R) {
    GroundStateEval g = ground_state(R);
    if (R == 0.0) return 4.0 * (-0.25);
    return g.d2W + 3.0 * g.dW / R;
}

// ------------------------------------------------------------ cutoffs ------

// Quintic smoothstep transition on [1,2]: theta = 1 on [0,1], 0 on [2,inf),
// C^2 across the knots. Two derivatives provided.
struct CutoffFamily {
    static Real smooth01(Real s) {  // 1 -> 0 as s: 0 -> 1
        Real q = 1.0 - s;
        return 10.0 * q * q * q - 15.0 * q * q * q * q + 6.0 * q * q * q * q * q;
    }
    Real theta(Real x) const {
        if (x <= 1.0) return 1.0;
        if (x >= 2.0) return 0.0;
        return smooth01(x - 1.0);
    }
    Real dtheta(Real x) const {
        if (x <= 1.0 || x >= 2.0) return 0.0;
        Real q = 2.0 - x;
        return -(30.0 * q * q - 60.0 * q * q * q + 30.0 * q * q * q * q);
    }
    Real d2theta(Real x) const {
        if (x <= 1.0 || x >= 2.0) return 0.0;
        Real q = 2.0 - x;
        return (60.0 * q - 180.0 * q * q + 120.0 * q * q * q);
    }
};

// C^7 smoothstep (degree-15 polynomial) transition for the remote radiation
// truncation, which gets differentiated repeatedly by the G/N recursion.
// chi = 1 on [0,1], 0 on [2,inf).
struct SmoothCutoffC7 {
    // S(q) = sum c_k q^k on q in [0,1], S(0)=0, S(1)=1, S^(j)(0)=S^(j)(1)=0, j<=7
    static Real S(Real q, int deriv = 0) {
        static const Real c[] = {6435.0, -40040.0, 108108.0, -163800.0, 150150.0,
                                 -83160.0, 25740.0, -3432.0};  // q^8 ... q^15
        Real v = 0;
        for (int k = 0; k < 8; ++k) {
            int pw = 8 + k;
            Real term = c[k];
            for (int d = 0; d < deriv; ++d) term *= (pw - d);
            if (pw - deriv >= 0) v += term * std::pow(q, pw - deriv);
        }
        return v;
    }
    Real chi(Real x, int deriv = 0) const {
        if (x <= 1.0) return deriv == 0 ? 1.0 : 0.0;
        if (x >= 2.0) return 0.0;
        Real q = x - 1.0;
        Real v = S(q, deriv);
        return deriv == 0 ? 1.0 - v : -v;
    }
};

// Three-region partition-of-unity weights in (t, R):
//   w_I = theta(A), w_S = (1 - theta(A)) theta(B), w_R = 1 - theta(B),
// A = t^{nu - eps1} R (band at r ~ t^{1/2+eps1}),
// B = t^{nu + eps2} R (band at r ~ t^{1/2-eps2}).
struct RegionWeights {
    Real wI, wS, wR;
};

inline RegionWeights region_weights(const Params& p, const CutoffFamily& cf, Real t, Real R) {
    const Real A = std::pow(t, p.nu - p.eps1) * R;
    const Real B = std::pow(t, p.nu + p.eps2) * R;
    RegionWeights w;
    const Real thA = cf.theta(A), thB = cf.theta(B);
    w.wI = thA;
    w.wS = (1.0 - thA) * thB;
    w.wR = 1.0 - thB;
    return w;
}

}  // namespace za
