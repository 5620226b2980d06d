#pragma once

// The inner-region ledger algebra. Corrections, sources and residuals are
// finite sums of terms
//
//   T = coef * t^{sigma} * R^m * (1+R^2)^q * F^{(d)}(t,R) * L(R)^b * g-part(a),
//
// with L = (1/2) log(1+R^2), a = R t^{nu - 1/2}, F a profile node and the
// g-part a short combination sum c a^j g^{(k)}(a) over one hyperbolic
// coefficient. The class is closed under t d/dt at fixed r, total d/dR at
// fixed t, and hence under the d'Alembertian, so every residual is evaluated
// analytically through the ledger (never by time differences of grids).

#include <memory>
#include <optional>

#include "za/aprofile.hpp"
#include "za/common.hpp"
#include "za/wrpoly.hpp"

namespace za {

struct InnerCfg {
    Real nu = 4.5 + 1.0 / PI;
    Real Rmax = 3e15;     // cache extent for the radial cumulative integrals
    int cache_nodes = 700;
};

// ----------------------------------------------------------- a-factor ------

struct AFactorTerm {
    int j = 0;  // power of a
    int k = 0;  // derivative order of g
    Cplx c{1};
};

struct AFactor {
    HypCoefficientPtr base;  // null => the factor is the constant 1
    std::vector<AFactorTerm> parts;

    bool trivial() const { return base == nullptr; }
    static AFactor one() { return {}; }
    static AFactor of(HypCoefficientPtr b) { return {std::move(b), {AFactorTerm{}}}; }

    Cplx eval(Real a) const {
        if (trivial()) return Cplx(1);
        Cplx s(0);
        for (auto& p : parts) s += p.c * std::pow(a, p.j) * base->eval(a, p.k);
        return s;
    }
    // a d/da (applied to the whole factor)
    AFactor a_dda() const {
        if (trivial()) return {};  // derivative of 1: caller must drop the term
        AFactor out;
        out.base = base;
        for (auto& p : parts) {
            if (p.j != 0) out.push({p.j, p.k, p.c * Real(p.j)});
            out.push({p.j + 1, p.k + 1, p.c});
        }
        return out;
    }
    AFactor mul_a(int power) const {
        AFactor out = *this;
        for (auto& p : out.parts) p.j += power;
        return out;
    }
    void push(AFactorTerm t) {
        for (auto& p : parts)
            if (p.j == t.j && p.k == t.k) {
                p.c += t.c;
                return;
            }
        parts.push_back(t);
    }
};

// ------------------------------------------------------------- nodes -------

struct RNode;
using RNodePtr = std::shared_ptr<const RNode>;

struct InnerTerm;
using TermSum = std::vector<InnerTerm>;

struct RNode {
    virtual ~RNode() = default;
    virtual Cplx ev(Real t, Real R, int k) const = 0;
    virtual bool t_dependent() const { return false; }
    // t d/dt at fixed R; list of (coef, node)
    virtual std::vector<std::pair<Cplx, RNodePtr>> dt() const { return {}; }
    // leading (power, log-power) behavior as R -> infinity
    virtual std::pair<Real, int> lead_inf() const = 0;
    // exact t-power when the node factorizes as t^{sigma} * shape(R):
    // zero Exponent for t-free atoms, nullopt when entangled
    virtual std::optional<Exponent> t_power() const { return Exponent{}; }
};

struct InnerTerm {
    Cplx coef{1};
    Exponent tpow{};
    int rpow = 0;
    int qpow = 0;
    RNodePtr rf;  // null = 1
    int rd = 0;   // derivative order on rf
    int logb = 0;
    AFactor af;
};

// ---- L(R)^b = (1/2 log(1+R^2))^b derivative table (orders 0..4) -----------

// d^n/dR^n of L as rational expressions; then Faa di Bruno for powers.
inline Real logL(Real R, int n) {
    const Real u = 1.0 + R * R;
    switch (n) {
        case 0: return 0.5 * std::log(u);
        case 1: return R / u;
        case 2: return (1.0 - R * R) / (u * u);
        case 3: return 2.0 * R * (R * R - 3.0) / (u * u * u);
        case 4: return (-6.0 * R * R * R * R + 36.0 * R * R - 6.0) / (u * u * u * u);
        default: throw NumericsError("logL: order > 4");
    }
}

inline Real logLpow(Real R, int b, int n) {
    if (b == 0) return n == 0 ? 1.0 : 0.0;
    if (n == 0) return std::pow(logL(R, 0), b);
    // derivatives of L^b via Leibniz on L^{b-1} * L'
    // n <= 4 is enough; use the recursive formula d(L^b) = b L^{b-1} L'
    // and differentiate symbolically once per order.
    auto Lp = [&](int m) { return logLpow(R, m, 0); };
    Real L1 = logL(R, 1), L2 = logL(R, 2), L3 = logL(R, 3), L4 = logL(R, 4);
    switch (n) {
        case 1: return b * Lp(b - 1) * L1;
        case 2:
            return b * (b - 1) * Lp(b - 2) * L1 * L1 + b * Lp(b - 1) * L2;
        case 3:
            return b * (b - 1) * (b - 2) * Lp(b - 3) * L1 * L1 * L1 +
                   3.0 * b * (b - 1) * Lp(b - 2) * L1 * L2 + b * Lp(b - 1) * L3;
        case 4:
            return b * (b - 1) * (b - 2) * (b - 3) * Lp(b - 4) * L1 * L1 * L1 * L1 +
                   6.0 * b * (b - 1) * (b - 2) * Lp(b - 3) * L1 * L1 * L2 +
                   b * (b - 1) * Lp(b - 2) * (3.0 * L2 * L2 + 4.0 * L1 * L3) +
                   b * Lp(b - 1) * L4;
        default: throw NumericsError("logLpow: order > 4");
    }
}

// --------------------------------------------------------- evaluation ------

inline Cplx term_eval(const InnerCfg& cfg, const InnerTerm& T, Real t, Real R);
inline Cplx sum_eval(const InnerCfg& cfg, const TermSum& ts, Real t, Real R) {
    Cplx s(0);
    for (auto& T : ts) s += term_eval(cfg, T, t, R);
    return s;
}

// total d/dR at fixed t (a = R t^{nu-1/2} varies with R)
inline TermSum term_dR(const InnerTerm& T);
inline TermSum sum_dR(const TermSum& ts) {
    TermSum out;
    for (auto& T : ts) {
        auto d = term_dR(T);
        out.insert(out.end(), d.begin(), d.end());
    }
    return out;
}

inline Cplx term_eval(const InnerCfg& cfg, const InnerTerm& T, Real t, Real R) {
    Real a = R * std::pow(t, cfg.nu - 0.5);
    Cplx v = T.coef;
    Real sig = T.tpow.value(cfg.nu);
    if (sig != 0.0) v *= std::pow(t, sig);
    if (T.rpow != 0) v *= std::pow(R, T.rpow);
    if (T.qpow != 0) v *= std::pow(1.0 + R * R, T.qpow);
    if (T.rf) v *= T.rf->ev(t, R, T.rd);
    if (T.logb != 0) v *= logLpow(R, T.logb, 0);
    if (!T.af.trivial()) v *= T.af.eval(a);
    return v;
}

// profile scan: evaluate with the a-slot frozen independently of (t, R)
// (the S-space coefficient view of a term as a function of three slots)
inline Cplx term_eval_frozen_a(const InnerCfg& cfg, const InnerTerm& T, Real t, Real R,
                               Real a) {
    Cplx v = T.coef;
    Real sig = T.tpow.value(cfg.nu);
    if (sig != 0.0) v *= std::pow(t, sig);
    if (T.rpow != 0) v *= std::pow(R, T.rpow);
    if (T.qpow != 0) v *= std::pow(1.0 + R * R, T.qpow);
    if (T.rf) v *= T.rf->ev(t, R, T.rd);
    if (T.logb != 0) v *= logLpow(R, T.logb, 0);
    if (!T.af.trivial()) v *= T.af.eval(a);
    return v;
}
inline Cplx sum_eval_frozen_a(const InnerCfg& cfg, const TermSum& ts, Real t, Real R,
                              Real a) {
    Cplx s(0);
    for (auto& T : ts) s += term_eval_frozen_a(cfg, T, t, R, a);
    return s;
}

inline TermSum term_dR(const InnerTerm& T) {
    TermSum out;
    auto push = [&](InnerTerm nt) {
        if (nt.coef != Cplx(0)) out.push_back(std::move(nt));
    };
    if (T.rpow != 0) {
        InnerTerm nt = T;
        nt.coef *= Real(T.rpow);
        nt.rpow -= 1;
        push(nt);
    }
    if (T.qpow != 0) {
        InnerTerm nt = T;
        nt.coef *= 2.0 * T.qpow;
        nt.rpow += 1;
        nt.qpow -= 1;
        push(nt);
    }
    if (T.rf) {
        InnerTerm nt = T;
        nt.rd += 1;
        push(nt);
    }
    if (T.logb != 0) {
        InnerTerm nt = T;
        nt.coef *= Real(T.logb);
        nt.logb -= 1;
        nt.rpow += 1;
        nt.qpow -= 1;
        push(nt);
    }
    if (!T.af.trivial()) {
        // d/dR g-part(a) = (1/R) [a d/da g-part]
        InnerTerm nt = T;
        nt.af = T.af.a_dda();
        nt.rpow -= 1;
        push(nt);
    }
    return out;
}

// t d/dt at fixed r (the physical time derivative times t)
inline TermSum term_Dt(const InnerCfg& cfg, const InnerTerm& T) {
    TermSum out;
    // explicit t-power
    {
        InnerTerm nt = T;
        nt.coef *= T.tpow.value(cfg.nu);
        if (nt.coef != Cplx(0)) out.push_back(nt);
    }
    // a-factor explicit t-dependence at fixed R: + (nu - 1/2) a d/da
    if (!T.af.trivial()) {
        InnerTerm nt = T;
        nt.coef *= (cfg.nu - 0.5);
        nt.af = T.af.a_dda();
        out.push_back(nt);
    }
    // node t-dependence
    if (T.rf && T.rf->t_dependent()) {
        for (auto& [c, node] : T.rf->dt()) {
            InnerTerm nt = T;
            nt.coef *= c;
            nt.rf = node;
            out.push_back(nt);
        }
    }
    // transport: -(1/2 + nu) R dR_total
    for (auto& d : term_dR(T)) {
        InnerTerm nt = d;
        nt.coef *= -(0.5 + cfg.nu);
        nt.rpow += 1;
        out.push_back(nt);
    }
    return out;
}

// t d/dt at fixed R (used inside the radial integrals)
inline TermSum term_Dt_fixedR(const InnerCfg& cfg, const InnerTerm& T) {
    TermSum out;
    {
        InnerTerm nt = T;
        nt.coef *= T.tpow.value(cfg.nu);
        if (nt.coef != Cplx(0)) out.push_back(nt);
    }
    if (!T.af.trivial()) {
        InnerTerm nt = T;
        nt.coef *= (cfg.nu - 0.5);
        nt.af = T.af.a_dda();
        out.push_back(nt);
    }
    if (T.rf && T.rf->t_dependent()) {
        for (auto& [c, node] : T.rf->dt()) {
            InnerTerm nt = T;
            nt.coef *= c;
            nt.rf = node;
            out.push_back(nt);
        }
    }
    return out;
}

inline TermSum sum_Dt(const InnerCfg& cfg, const TermSum& ts) {
    TermSum out;
    for (auto& T : ts) {
        auto d = term_Dt(cfg, T);
        out.insert(out.end(), d.begin(), d.end());
    }
    return out;
}
inline TermSum sum_Dt_fixedR(const InnerCfg& cfg, const TermSum& ts) {
    TermSum out;
    for (auto& T : ts) {
        auto d = term_Dt_fixedR(cfg, T);
        out.insert(out.end(), d.begin(), d.end());
    }
    return out;
}

inline TermSum sum_scale(TermSum ts, Cplx f) {
    for (auto& T : ts) T.coef *= f;
    return ts;
}
inline TermSum sum_shift_tpow(TermSum ts, Exponent e) {
    for (auto& T : ts) T.tpow = T.tpow + e;
    return ts;
}
inline void sum_append(TermSum& dst, const TermSum& src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

// d_t^2 = t^{-2} (Dt o Dt - Dt)
inline TermSum sum_dtt(const InnerCfg& cfg, const TermSum& ts) {
    TermSum d1 = sum_Dt(cfg, ts);
    TermSum d2 = sum_Dt(cfg, d1);
    sum_append(d2, sum_scale(d1, Cplx(-1)));
    return sum_shift_tpow(std::move(d2), Exponent::integer(-2));
}

// box = -d_t^2 + d_r^2 + (3/r) d_r, with d_r = lambda * dR_total and
// 1/r = lambda / R; lambda^2 = t^{-1-2nu}.
inline TermSum sum_box(const InnerCfg& cfg, const TermSum& ts) {
    TermSum out = sum_scale(sum_dtt(cfg, ts), Cplx(-1));
    TermSum d1 = sum_dR(ts);
    TermSum d2 = sum_dR(d1);
    TermSum lap;
    sum_append(lap, d2);
    for (auto& T : d1) {
        InnerTerm nt = T;
        nt.coef *= 3.0;
        nt.rpow -= 1;
        lap.push_back(nt);
    }
    lap = sum_shift_tpow(std::move(lap), Exponent{-1, -2, 0, 0});  // * lambda^2
    sum_append(out, lap);
    return out;
}

// Laplacian in R at fixed t (total, i.e. through the a-dependence as well)
inline TermSum sum_lapR(const TermSum& ts) {
    TermSum d1 = sum_dR(ts);
    TermSum d2 = sum_dR(d1);
    TermSum out;
    sum_append(out, d2);
    for (auto& T : d1) {
        InnerTerm nt = T;
        nt.coef *= 3.0;
        nt.rpow -= 1;
        out.push_back(nt);
    }
    return out;
}

// term product (a-factors: at most one side may carry a base)
inline InnerTerm term_mul(const InnerTerm& A, const InnerTerm& B);
inline TermSum sum_mul(const TermSum& a, const TermSum& b) {
    TermSum out;
    for (auto& A : a)
        for (auto& B : b) out.push_back(term_mul(A, B));
    return out;
}

// ----------------------------------------------------- concrete nodes ------

class WRLogNode final : public RNode {
public:
    explicit WRLogNode(WRLog f, int max_d = 12) {
        d_.push_back(std::move(f));
        for (int i = 0; i < max_d; ++i) d_.push_back(d_.back().deriv());
    }
    static RNodePtr make(PolyWR p) { return std::make_shared<WRLogNode>(WRLog(std::move(p))); }
    static RNodePtr make(WRLog f) { return std::make_shared<WRLogNode>(std::move(f)); }

    Cplx ev(Real, Real R, int k) const override {
        if (k >= (int)d_.size()) throw NumericsError("WRLogNode: derivative order");
        return Cplx(d_[k].eval(R));
    }
    std::pair<Real, int> lead_inf() const override {
        auto [pa, ca] = d_[0].a.lead_inf();
        auto [pb, cb] = d_[0].b.lead_inf();
        if (d_[0].b.empty() || (!d_[0].a.empty() && pa > pb)) return {Real(pa), 0};
        return {Real(pb), 1};
    }

private:
    std::vector<WRLog> d_;
};

class ProductNode final : public RNode {
public:
    ProductNode(RNodePtr a, int da, RNodePtr b, int db)
        : a_(std::move(a)), da_(da), b_(std::move(b)), db_(db) {}
    Cplx ev(Real t, Real R, int k) const override {
        // Leibniz on the (already-shifted) factors
        Cplx s(0);
        Real binom = 1;
        for (int i = 0; i <= k; ++i) {
            s += binom * a_->ev(t, R, da_ + i) * b_->ev(t, R, db_ + k - i);
            binom = binom * Real(k - i) / Real(i + 1);
        }
        return s;
    }
    bool t_dependent() const override { return a_->t_dependent() || b_->t_dependent(); }
    std::vector<std::pair<Cplx, RNodePtr>> dt() const override {
        std::vector<std::pair<Cplx, RNodePtr>> out;
        for (auto& [c, n] : a_->dt())
            out.push_back({c, std::make_shared<ProductNode>(n, da_, b_, db_)});
        for (auto& [c, n] : b_->dt())
            out.push_back({c, std::make_shared<ProductNode>(a_, da_, n, db_)});
        return out;
    }
    std::pair<Real, int> lead_inf() const override {
        auto [p1, l1] = a_->lead_inf();
        auto [p2, l2] = b_->lead_inf();
        return {p1 + p2 - da_ - db_, l1 + l2};
    }
    std::optional<Exponent> t_power() const override {
        auto pa = a_->t_power(), pb = b_->t_power();
        if (pa && pb) return *pa + *pb;
        return std::nullopt;
    }

private:
    RNodePtr a_;
    int da_;
    RNodePtr b_;
    int db_;
};

inline InnerTerm term_mul(const InnerTerm& A, const InnerTerm& B) {
    InnerTerm T;
    T.coef = A.coef * B.coef;
    T.tpow = A.tpow + B.tpow;
    T.rpow = A.rpow + B.rpow;
    T.qpow = A.qpow + B.qpow;
    T.logb = A.logb + B.logb;
    if (A.rf && B.rf) {
        T.rf = std::make_shared<ProductNode>(A.rf, A.rd, B.rf, B.rd);
        T.rd = 0;
    } else if (A.rf) {
        T.rf = A.rf;
        T.rd = A.rd;
    } else {
        T.rf = B.rf;
        T.rd = B.rd;
    }
    if (!A.af.trivial() && !B.af.trivial())
        throw NumericsError("term_mul: two nontrivial a-factors");
    T.af = A.af.trivial() ? B.af : A.af;
    return T;
}

// leading R->infinity behavior of a term (power, log power); the a-factor
// contributes its beta growth
inline std::pair<Real, int> term_lead(const InnerTerm& T) {
    Real p = T.rpow + 2.0 * T.qpow;
    int lg = T.logb;
    if (T.rf) {
        auto [pn, ln] = T.rf->lead_inf();
        p += pn - T.rd;
        lg += ln;
    }
    if (!T.af.trivial()) {
        Real bb = T.af.base->beta();
        int jmax = 0;
        for (auto& q : T.af.parts) jmax = std::max(jmax, q.j);
        p += bb + jmax;  // g ~ a^beta up to logs
    }
    return {p, lg};
}

inline std::pair<Real, int> sum_lead(const TermSum& ts) {
    Real p = -1e30;
    int lg = 0;
    for (auto& T : ts) {
        auto [pp, ll] = term_lead(T);
        if (pp > p + 1e-9 || (std::abs(pp - p) <= 1e-9 && ll > lg)) {
            p = pp;
            lg = ll;
        }
    }
    return {p, lg};
}

// uniform t-power of a sum: t^{sigma} * shape(R) with no a-dependence;
// nullopt when the sum is genuinely t-entangled
inline std::optional<Exponent> sum_uniform_tpow(const TermSum& ts) {
    std::optional<Exponent> common;
    for (auto& T : ts) {
        if (!T.af.trivial()) return std::nullopt;
        Exponent eff = T.tpow;
        if (T.rf) {
            auto np = T.rf->t_power();
            if (!np) return std::nullopt;
            eff = eff + *np;
        }
        if (!common) common = eff;
        else if (!(*common == eff)) return std::nullopt;
    }
    return common ? common : std::optional<Exponent>(Exponent{});
}

// --------------------------------------------- integral-backed nodes -------

namespace detail_inner {
struct RadialCaches {
    CumulativeCache I3, I1;  // \int s^3 h, \int s h
    Cplx tail1{0};           // \int_0^inf s h (swap mode)
};
}  // namespace detail_inner

// Solution of Delta_R v = -h(t, .) at fixed t via the two radial integrals;
// `swap` replaces the second integral by its tail (valid for decaying h).
// When the integrand factorizes as t^{sigma} * shape(R), the caches are built
// once (at t = 1) and the factor is applied analytically; dt() then returns
// this very node scaled by sigma.
class EllipticTNode final : public RNode,
                            public std::enable_shared_from_this<EllipticTNode> {
public:
    EllipticTNode(InnerCfg cfg, TermSum integrand, bool swap)
        : cfg_(cfg), h_(std::move(integrand)), swap_(swap) {
        dh_ = sum_dR(h_);
        ddh_ = sum_dR(dh_);
        sigu_ = sum_uniform_tpow(h_);
    }

    Cplx ev(Real t, Real R, int k) const override {
        const Real teff = sigu_ ? 1.0 : t;
        const Cplx tfac = sigu_ ? Cplx(std::pow(t, sigu_->value(cfg_.nu))) : Cplx(1);
        auto& C = caches(teff);
        Real Rc = std::max(R, 1e-8);
        Cplx I3 = C.I3(Rc);
        Cplx v;
        switch (k) {
            case 0: {
                Cplx I1 = C.I1(Rc);
                Cplx J = swap_ ? 0.5 * (C.tail1 - I1) : -0.5 * I1;
                v = 0.5 * std::pow(Rc, -2.0) * I3 + J;
                break;
            }
            case 1: v = -std::pow(Rc, -3.0) * I3; break;
            case 2: v = 3.0 * std::pow(Rc, -4.0) * I3 - sum_eval(cfg_, h_, teff, Rc); break;
            case 3:
                v = -12.0 * std::pow(Rc, -5.0) * I3 +
                    3.0 / Rc * sum_eval(cfg_, h_, teff, Rc) - sum_eval(cfg_, dh_, teff, Rc);
                break;
            case 4:
                v = 60.0 * std::pow(Rc, -6.0) * I3 -
                    15.0 * std::pow(Rc, -2.0) * sum_eval(cfg_, h_, teff, Rc) +
                    3.0 / Rc * sum_eval(cfg_, dh_, teff, Rc) -
                    sum_eval(cfg_, ddh_, teff, Rc);
                break;
            default: throw NumericsError("EllipticTNode: deriv > 4");
        }
        return tfac * v;
    }
    bool t_dependent() const override { return true; }
    std::optional<Exponent> t_power() const override { return sigu_; }
    std::vector<std::pair<Cplx, RNodePtr>> dt() const override {
        if (sigu_) return {{Cplx(sigu_->value(cfg_.nu)), shared_from_this()}};
        return {{Cplx(1), std::make_shared<EllipticTNode>(
                              cfg_, sum_Dt_fixedR(cfg_, h_), swap_)}};
    }
    std::pair<Real, int> lead_inf() const override {
        auto [p, lg] = sum_lead(h_);
        Real pv = p + 2.0;
        int lv = lg;
        if (std::abs(p + 2.0) < 1e-9 || std::abs(p + 4.0) < 1e-9) lv += 1;
        if (swap_ && p < -2.0) pv = -2.0;
        if (!swap_ && p < -2.0) pv = 0.0;  // \int s h grows to a constant
        return {pv, lv};
    }

    const TermSum& integrand() const { return h_; }
    bool swapped() const { return swap_; }

private:
    detail_inner::RadialCaches& caches(Real t) const {
        auto it = cache_.find(t);
        if (it != cache_.end()) return it->second;
        auto nodes = radial_cache_nodes(cfg_.Rmax, cfg_.cache_nodes);
        detail_inner::RadialCaches rc;
        InnerCfg cfg = cfg_;
        TermSum h = h_;
        rc.I3 = CumulativeCache(
            [cfg, h, t](Real s) { return s * s * s * sum_eval(cfg, h, t, s); }, nodes);
        rc.I1 = CumulativeCache(
            [cfg, h, t](Real s) { return s * sum_eval(cfg, h, t, s); }, nodes);
        if (swap_) {
            Cplx head = rc.I1(cfg_.Rmax);
            Cplx tail = integrate_adaptive(
                [cfg, h, t](Real u) {
                    Real s = 1.0 / u;
                    return s * sum_eval(cfg, h, t, s) * s * s;  // ds = du/u^2
                },
                1e-18, 1.0 / cfg_.Rmax, 1e-12);
            rc.tail1 = head + tail;
        }
        return cache_.emplace(t, std::move(rc)).first->second;
    }

    InnerCfg cfg_;
    TermSum h_, dh_, ddh_;
    bool swap_;
    std::optional<Exponent> sigu_;
    mutable std::map<Real, detail_inner::RadialCaches> cache_;
};

// Solution of L_{pm} v = h(t, .) at fixed t, regular at R = 0:
//   v = Phi * I_theta - Theta * I_phi,  I_theta = \int_0^R s^3 Theta h ds.
class SchrodInvTNode final : public RNode,
                             public std::enable_shared_from_this<SchrodInvTNode> {
public:
    SchrodInvTNode(InnerCfg cfg, TermSum integrand, bool plus)
        : cfg_(cfg), h_(std::move(integrand)), plus_(plus),
          pm_(std::make_shared<PMSystem>(plus)) {
        dh_ = sum_dR(h_);
        ddh_ = sum_dR(dh_);
        sigu_ = sum_uniform_tpow(h_);
    }

    Cplx ev(Real t, Real R, int k) const override {
        const Real teff = sigu_ ? 1.0 : t;
        const Cplx tfac = sigu_ ? Cplx(std::pow(t, sigu_->value(cfg_.nu))) : Cplx(1);
        auto& C = caches(teff);
        Real Rc = std::max(R, 1e-8);
        Cplx It = C.I3(Rc);   // \int s^3 Theta h
        Cplx Ip = C.I1(Rc);   // \int s^3 Phi h
        auto A = [&](int kk) {
            return pm_->phi_eval(Rc, kk) * It - pm_->theta_eval(Rc, kk) * Ip;
        };
        Cplx v;
        switch (k) {
            case 0: v = A(0); break;
            case 1: v = A(1); break;
            case 2: v = A(2) - sum_eval(cfg_, h_, teff, Rc); break;
            case 3: {
                Real G2 = (pm_->phi_eval(Rc, 2) * pm_->theta_eval(Rc, 0) -
                           pm_->theta_eval(Rc, 2) * pm_->phi_eval(Rc, 0)) *
                          Rc * Rc * Rc;
                v = A(3) + G2 * sum_eval(cfg_, h_, teff, Rc) -
                    sum_eval(cfg_, dh_, teff, Rc);
                break;
            }
            case 4: {
                Real R3 = Rc * Rc * Rc;
                Real G2 = (pm_->phi_eval(Rc, 2) * pm_->theta_eval(Rc, 0) -
                           pm_->theta_eval(Rc, 2) * pm_->phi_eval(Rc, 0)) * R3;
                Real G3 = (pm_->phi_eval(Rc, 3) * pm_->theta_eval(Rc, 0) -
                           pm_->theta_eval(Rc, 3) * pm_->phi_eval(Rc, 0)) * R3;
                Real G2p = (pm_->phi_eval(Rc, 3) * pm_->theta_eval(Rc, 0) +
                            pm_->phi_eval(Rc, 2) * pm_->theta_eval(Rc, 1) -
                            pm_->theta_eval(Rc, 3) * pm_->phi_eval(Rc, 0) -
                            pm_->theta_eval(Rc, 2) * pm_->phi_eval(Rc, 1)) * R3 +
                           3.0 * G2 / Rc;
                v = A(4) + (G3 + G2p) * sum_eval(cfg_, h_, teff, Rc) +
                    G2 * sum_eval(cfg_, dh_, teff, Rc) - sum_eval(cfg_, ddh_, teff, Rc);
                break;
            }
            default: throw NumericsError("SchrodInvTNode: deriv > 4");
        }
        return tfac * v;
    }
    bool t_dependent() const override { return true; }
    std::optional<Exponent> t_power() const override { return sigu_; }
    std::vector<std::pair<Cplx, RNodePtr>> dt() const override {
        if (sigu_) return {{Cplx(sigu_->value(cfg_.nu)), shared_from_this()}};
        return {{Cplx(1), std::make_shared<SchrodInvTNode>(
                              cfg_, sum_Dt_fixedR(cfg_, h_), plus_)}};
    }
    std::pair<Real, int> lead_inf() const override {
        auto [p, lg] = sum_lead(h_);
        Real pv = p + 2.0;
        int lv = lg;
        if (std::abs(p + 2.0) < 1e-9 || std::abs(p + 4.0) < 1e-9) lv += 1;
        if (p < -2.0) pv = 0.0;
        return {pv, lv};
    }

private:
    detail_inner::RadialCaches& caches(Real t) const {
        auto it = cache_.find(t);
        if (it != cache_.end()) return it->second;
        auto nodes = radial_cache_nodes(cfg_.Rmax, cfg_.cache_nodes);
        detail_inner::RadialCaches rc;
        InnerCfg cfg = cfg_;
        TermSum h = h_;
        auto pm = pm_;
        rc.I3 = CumulativeCache(
            [cfg, h, t, pm](Real s) {
                return s * s * s * pm->theta_eval(s, 0) * sum_eval(cfg, h, t, s);
            },
            nodes);
        rc.I1 = CumulativeCache(
            [cfg, h, t, pm](Real s) {
                return s * s * s * pm->phi_eval(s, 0) * sum_eval(cfg, h, t, s);
            },
            nodes);
        return cache_.emplace(t, std::move(rc)).first->second;
    }

    InnerCfg cfg_;
    TermSum h_, dh_, ddh_;
    bool plus_;
    std::shared_ptr<PMSystem> pm_;
    std::optional<Exponent> sigu_;
    mutable std::map<Real, detail_inner::RadialCaches> cache_;
};

}  // namespace za
