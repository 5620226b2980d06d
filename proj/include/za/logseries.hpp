#pragma once

// Truncated series with exact exponents on the (Z, Z/2, Z*nu) lattice and
// logarithmic terms, plus a generic Frobenius recursion engine for ODEs with
// regular singular anchors. The computational stand-in for the Q^beta /
// S-space expansions: asymptotic membership is checked numerically, the
// lattice bookkeeping is exact.

#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "za/common.hpp"
#include "za/rational.hpp"

namespace za {

// ------------------------------------------------------------ exponent -----

// value = p + h/2 + q*nu + kappa/2. Equality is componentwise, never float.
struct Exponent {
    int p = 0;   // integer part
    int q = 0;   // coefficient of nu
    int h = 0;   // half-integer part (contributes h/2)
    int kappa = 0;  // extra 1/2 slot for Puiseux terms at a = 1

    friend bool operator==(const Exponent& a, const Exponent& b) {
        return a.p == b.p && a.q == b.q && a.h == b.h && a.kappa == b.kappa;
    }
    friend bool operator<(const Exponent& a, const Exponent& b) {
        if (a.p != b.p) return a.p < b.p;
        if (a.q != b.q) return a.q < b.q;
        if (a.h != b.h) return a.h < b.h;
        return a.kappa < b.kappa;
    }
    friend Exponent operator+(const Exponent& a, const Exponent& b) {
        return {a.p + b.p, a.q + b.q, a.h + b.h, a.kappa + b.kappa};
    }
    friend Exponent operator-(const Exponent& a, const Exponent& b) {
        return {a.p - b.p, a.q - b.q, a.h - b.h, a.kappa - b.kappa};
    }
    Real value(Real nu) const { return p + 0.5 * h + q * nu + 0.5 * kappa; }
    NuPoly poly() const {
        NuPoly out;
        Rat c0 = Rat(2 * p + h + kappa, 2);
        if (!c0.is_zero() || q != 0) {
            out.c.push_back(c0);
            if (q != 0) out.c.push_back(Rat(q));
        }
        out.trim();
        return out;
    }
    static Exponent integer(int p) { return {p, 0, 0, 0}; }
    static Exponent nu_units(int q, int p = 0) { return {p, q, 0, 0}; }
    static Exponent half(int h, int p = 0) { return {p, 0, h, 0}; }
};

// Certifies the paper's non-resonance assumption numerically: for the given
// nu and all |p|,|q|,|h| <= 200, kappa in {0,1}, distinct lattice points are
// separated by at least `gap`. Equivalent reduction: for 1 <= dq <= 2*200,
// dq*nu must stay `gap` away from every half-integer.
inline bool exponent_no_collision(Real nu, int range = 200, Real gap = 1e-9) {
    for (int dq = 1; dq <= 2 * range; ++dq) {
        Real v = dq * nu;
        Real nearest_half = std::round(2.0 * v) / 2.0;
        if (std::abs(v - nearest_half) < gap) return false;
    }
    return true;
}

enum class Anchor { Zero, OneLeft, OneRight, Infinity };

// ------------------------------------------------------------- series ------

// Term key: x^{mu} * B^{s} * (log t)^{st} where B = log(x) + logbase_c*log(t).
// The st-grading is the "t-power ledger" that rebase_log absorbs residual
// log(t) factors into.
struct TermKey {
    Exponent mu;
    int s = 0;
    int st = 0;
    friend bool operator<(const TermKey& a, const TermKey& b) {
        if (!(a.mu == b.mu)) return a.mu < b.mu;
        if (a.s != b.s) return a.s < b.s;
        return a.st < b.st;
    }
    friend bool operator==(const TermKey& a, const TermKey& b) {
        return a.mu == b.mu && a.s == b.s && a.st == b.st;
    }
};

template <typename C>
struct SeriesT {
    using Tr = CoeffTraits<C>;

    Anchor anchor = Anchor::Zero;
    char var = 'x';
    Real logbase_c = 0.0;  // log symbol is log(x) + logbase_c * log(t)
    int K = 16;            // lattice steps retained (truncation depth)
    int S = 8;             // max log power
    Real trust_radius = 0.5;
    std::map<TermKey, C> terms;

    void set(const TermKey& k, const C& c) {
        if (Tr::is_zero(c)) terms.erase(k);
        else terms[k] = c;
    }
    void add_term(const TermKey& k, const C& c) {
        auto it = terms.find(k);
        C v = (it == terms.end()) ? c : C(it->second + c);
        set(k, v);
    }
    bool empty() const { return terms.empty(); }

    SeriesT like_empty() const {
        SeriesT out = *this;
        out.terms.clear();
        return out;
    }

    // smallest exponent value present (needs nu for ordering)
    std::optional<Exponent> min_exponent(Real nu) const {
        std::optional<Exponent> best;
        for (auto& [k, c] : terms)
            if (!best || k.mu.value(nu) < best->value(nu) - 1e-15) best = k.mu;
        return best;
    }

    bool in_trust(Real x) const {
        switch (anchor) {
            case Anchor::Zero: return std::abs(x) <= trust_radius;
            case Anchor::Infinity: return std::abs(x) >= 1.0 / trust_radius;
            default: return std::abs(x) <= trust_radius;  // x is |1-a|
        }
    }

    // Evaluate at x (> 0) with logt = log(t) (0 if no t-dependence).
    Cplx eval(Real nu, Real x, Real logt = 0.0) const {
        const Real lx = std::log(x);
        const Real B = lx + logbase_c * logt;
        Cplx out(0);
        for (auto& [k, c] : terms) {
            Real mag = std::pow(x, k.mu.value(nu));
            Real logs = 1.0;
            for (int i = 0; i < k.s; ++i) logs *= B;
            for (int i = 0; i < k.st; ++i) logs *= logt;
            out += Tr::value(c, nu) * mag * logs;
        }
        return out;
    }

    // d/dx. x^mu B^s -> mu x^{mu-1} B^s + s x^{mu-1} B^{s-1} (log t untouched).
    SeriesT differentiate(Real nu) const {
        SeriesT out = like_empty();
        const Exponent one = Exponent::integer(1);
        for (auto& [k, c] : terms) {
            TermKey k1{k.mu - one, k.s, k.st};
            out.add_term(k1, Tr::mul_exponent(c, k.mu.value(nu), k.mu.poly()));
            if (k.s > 0) {
                TermKey k2{k.mu - one, k.s - 1, k.st};
                C sc = c;
                for (int i = 1; i < k.s; ++i) sc = sc + c;  // s * c without scalar ctor
                out.add_term(k2, sc);
            }
        }
        return out;
    }

    friend SeriesT add(const SeriesT& a, const SeriesT& b) {
        if (a.anchor != b.anchor || a.var != b.var)
            throw NumericsError("series add: anchor/var mismatch");
        if (a.logbase_c != b.logbase_c)
            throw NumericsError("series add: log-basis mismatch");
        SeriesT out = a;
        out.K = std::min(a.K, b.K);
        out.S = std::max(a.S, b.S);
        for (auto& [k, c] : b.terms) out.add_term(k, c);
        return out;
    }

    friend SeriesT mul(const SeriesT& a, const SeriesT& b) {
        if (a.anchor != b.anchor || a.var != b.var)
            throw NumericsError("series mul: anchor/var mismatch");
        if (a.logbase_c != b.logbase_c)
            throw NumericsError("series mul: log-basis mismatch");
        SeriesT out = a.like_empty();
        out.K = std::min(a.K, b.K);
        out.S = a.S + b.S;
        for (auto& [ka, ca] : a.terms)
            for (auto& [kb, cb] : b.terms)
                out.add_term({ka.mu + kb.mu, ka.s + kb.s, ka.st + kb.st}, C(ca * cb));
        return out;
    }

    template <typename Scalar>
    SeriesT scale(const Scalar& f) const {
        SeriesT out = like_empty();
        for (auto& [k, c] : terms) out.add_term(k, C(c * f));
        return out;
    }

    // -------- serialization: one line per term "p q h kappa s re im", with
    // an extra st column emitted only when nonzero (documented extension).
    std::string serialize() const {
        std::ostringstream os;
        for (auto& [k, c] : terms) {
            os << k.mu.p << ' ' << k.mu.q << ' ' << k.mu.h << ' ' << k.mu.kappa << ' ' << k.s;
            if (k.st != 0) os << " st" << k.st;
            os << ' ' << Tr::str(c) << '\n';
        }
        return os.str();
    }
};

using LogPowerSeries = SeriesT<Cplx>;
using RatSeries = SeriesT<CRat>;

inline LogPowerSeries parse_series(const std::string& text, Anchor anchor = Anchor::Zero,
                                   char var = 'x') {
    LogPowerSeries s;
    s.anchor = anchor;
    s.var = var;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        TermKey k;
        std::string tok;
        ls >> k.mu.p >> k.mu.q >> k.mu.h >> k.mu.kappa >> k.s >> tok;
        Real re, im;
        if (tok.size() > 2 && tok[0] == 's' && tok[1] == 't') {
            k.st = std::stoi(tok.substr(2));
            ls >> re >> im;
        } else {
            re = std::stod(tok);
            ls >> im;
        }
        s.add_term(k, Cplx(re, im));
    }
    return s;
}

inline RatSeries parse_series_rational(const std::string& text, Anchor anchor = Anchor::Zero,
                                       char var = 'x') {
    RatSeries s;
    s.anchor = anchor;
    s.var = var;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        TermKey k;
        std::string tok, re, im;
        ls >> k.mu.p >> k.mu.q >> k.mu.h >> k.mu.kappa >> k.s >> tok;
        if (tok.size() > 2 && tok[0] == 's' && tok[1] == 't') {
            k.st = std::stoi(tok.substr(2));
            ls >> re >> im;
        } else {
            re = tok;
            ls >> im;
        }
        s.add_term(k, CRat(NuPoly::parse(re), NuPoly::parse(im)));
    }
    return s;
}

// ------------------------------------------------------------ rebase -------

// Change the log symbol from B1 = log x + c1 log t to B2 = log x + c2 log t.
// B1 = B2 + (c1 - c2) log t, so B1^s expands binomially; residual log t powers
// land in the st ledger.
inline LogPowerSeries rebase_log(const LogPowerSeries& in, Real c2) {
    LogPowerSeries out = in.like_empty();
    out.logbase_c = c2;
    const Real d = in.logbase_c - c2;
    for (auto& [k, c] : in.terms) {
        // B1^s = (B2 + d log t)^s: C(s,j) d^{s-j} on B2^j (log t)^{s-j}
        for (int j = 0; j <= k.s; ++j) {
            Real dd = 1.0;
            for (int i = 0; i < k.s - j; ++i) dd *= d;
            Real cb = 1.0;
            for (int i = 0; i < j; ++i) cb = cb * Real(k.s - i) / Real(i + 1);
            Real coef = cb * dd;
            if (coef != 0.0) out.add_term({k.mu, j, k.st + (k.s - j)}, c * coef);
        }
    }
    if (out.S < in.S) out.S = in.S;
    return out;
}

// ----------------------------------------------------------- frobenius -----

// a2 f'' + a1 f' + a0 f, coefficients as log-free series at a common anchor.
struct SeriesODE {
    LogPowerSeries a2, a1, a0;

    void check() const {
        for (auto* a : {&a2, &a1, &a0})
            for (auto& [k, c] : a->terms)
                if (k.s != 0 || k.st != 0)
                    throw NumericsError("SeriesODE: coefficient series must be log-free");
    }
};

// Exact application of the operator to a series (all terms retained).
inline LogPowerSeries ode_apply(const SeriesODE& ode, const LogPowerSeries& f, Real nu) {
    LogPowerSeries f1 = f.differentiate(nu);
    LogPowerSeries f2 = f1.differentiate(nu);
    return add(add(mul(ode.a2, f2), mul(ode.a1, f1)), mul(ode.a0, f));
}

// Indicial data: L(x^gamma) = P(gamma) x^{gamma+offset} + higher terms.
// P and the log-shift companions q1 = dP/dgamma-like, q2 come from the terms
// of a2, a1, a0 realizing the minimal offset.
struct IndicialData {
    Exponent offset;
    // P(gamma) = sum c2 gamma(gamma-1) + sum c1 gamma + sum c0
    Cplx c2{0}, c1{0}, c0{0};
    Cplx P(Real g) const { return c2 * (g * (g - 1.0)) + c1 * g + c0; }
    Cplx Pp(Real g) const { return c2 * (2.0 * g - 1.0) + c1; }  // log-lowering by 1
    Cplx Ppp() const { return c2 * 2.0; }                        // log-lowering by 2
};

inline IndicialData indicial_data(const SeriesODE& ode, Real nu) {
    bool have = false;
    Exponent off{};
    Real offv = 0;
    auto consider = [&](const LogPowerSeries& a, int shift) {
        for (auto& [k, c] : a.terms) {
            Exponent e = k.mu - Exponent::integer(shift);
            Real v = e.value(nu);
            if (!have || v < offv - 1e-13) { have = true; off = e; offv = v; }
        }
    };
    consider(ode.a2, 2);
    consider(ode.a1, 1);
    consider(ode.a0, 0);
    if (!have) throw NumericsError("indicial_data: empty operator");
    IndicialData d;
    d.offset = off;
    for (auto& [k, c] : ode.a2.terms)
        if (k.mu - Exponent::integer(2) == off) d.c2 += c;
    for (auto& [k, c] : ode.a1.terms)
        if (k.mu - Exponent::integer(1) == off) d.c1 += c;
    for (auto& [k, c] : ode.a0.terms)
        if (k.mu == off) d.c0 += c;
    return d;
}

// Solve L f = rhs through K lattice steps above `root`. For rhs = 0, seeds
// f = x^root. When a recursion denominator P(gamma) vanishes (resonance), a
// log power is inserted, mirroring the corrected branch of the fundamental
// systems. Throws if the log budget S is exceeded.
inline LogPowerSeries frobenius_solve(const SeriesODE& ode, Exponent root,
                                      const LogPowerSeries& rhs, int K, Real nu,
                                      int Sbudget = 8) {
    ode.check();
    IndicialData ind = indicial_data(ode, nu);

    LogPowerSeries f = ode.a2.like_empty();
    f.K = K;
    f.S = Sbudget;

    LogPowerSeries resid = rhs.like_empty();
    const bool homogeneous = rhs.empty();
    if (homogeneous) {
        TermKey seed{root, 0, 0};
        f.add_term(seed, Cplx(1));
        LogPowerSeries img = ode_apply(ode, f, nu);
        for (auto& [k, c] : img.terms) resid.add_term(k, Cplx(0) - c);
    } else {
        for (auto& [k, c] : rhs.terms) resid.add_term(k, c);
    }

    Real root_img_v = root.value(nu) + ind.offset.value(nu);
    for (auto& [k, c] : rhs.terms) root_img_v = std::min(root_img_v, k.mu.value(nu));
    const Real cutoff = root_img_v + K + 0.5;

    for (int guard = 0; guard < 4 * K * (Sbudget + 2) + 64; ++guard) {
        // smallest residual exponent below cutoff
        std::optional<Exponent> tgt;
        Real tv = 0;
        for (auto& [k, c] : resid.terms) {
            Real v = k.mu.value(nu);
            if (v > cutoff) continue;
            if (homogeneous && v <= root_img_v + 1e-13 && k.mu == root + ind.offset)
                continue;  // the seed's own resonant level
            if (!tgt || v < tv - 1e-15) { tgt = k.mu; tv = v; }
        }
        if (!tgt) break;

        // collect residual coefficients at this exponent, by log power
        std::map<int, Cplx> rc;  // (s) -> coeff   (st must be 0 here)
        for (auto& [k, c] : resid.terms)
            if (k.mu == *tgt) {
                if (k.st != 0) throw NumericsError("frobenius_solve: log t in residual");
                rc[k.s] += c;
            }

        Exponent g = *tgt - ind.offset;
        const Real gv = g.value(nu);
        const Cplx P = ind.P(gv);
        const bool resonant = std::abs(P) < 1e-9 * (std::abs(ind.c2) * gv * gv +
                                                    std::abs(ind.c1) * std::abs(gv) +
                                                    std::abs(ind.c0) + 1.0);
        LogPowerSeries delta = f.like_empty();
        if (!resonant) {
            for (auto it = rc.rbegin(); it != rc.rend(); ++it) {
                int s = it->first;
                // account for already-chosen delta coefficients at s+1, s+2
                Cplx known(0);
                for (auto& [dk, dc] : delta.terms) {
                    if (!(dk.mu == g)) continue;
                    if (dk.s == s + 1) known += ind.Pp(gv) * Real(s + 1) * dc;
                    if (dk.s == s + 2) known += ind.Ppp() * Real((s + 2) * (s + 1)) * dc;
                }
                Cplx u = (it->second - known) / P;
                if (s > Sbudget) throw NumericsError("frobenius_solve: S budget exceeded");
                delta.add_term({g, s, 0}, u);
            }
        } else {
            // resonance: lift every log power by one; requires P'(g) != 0
            Cplx Pp = ind.Pp(gv);
            if (std::abs(Pp) < 1e-12)
                throw NumericsError("frobenius_solve: doubly degenerate resonance");
            for (auto it = rc.rbegin(); it != rc.rend(); ++it) {
                int s = it->first;
                // placed lifts live at log levels >= s+2 here; only the
                // Ppp-coupling from level s+2 reaches log^s
                Cplx known(0);
                for (auto& [dk, dc] : delta.terms) {
                    if (!(dk.mu == g)) continue;
                    if (dk.s == s + 2) known += ind.Ppp() * Real((s + 2) * (s + 1)) * dc;
                }
                Cplx u = (it->second - known) / (Pp * Real(s + 1));
                if (s + 1 > Sbudget) throw NumericsError("frobenius_solve: S budget exceeded");
                delta.add_term({g, s + 1, 0}, u);
            }
        }

        // f += delta ; resid -= L(delta); the targeted exponent cancels by
        // construction, so clear its round-off remnants explicitly
        for (auto& [k, c] : delta.terms) f.add_term(k, c);
        LogPowerSeries img = ode_apply(ode, delta, nu);
        for (auto& [k, c] : img.terms) resid.add_term(k, Cplx(0) - c);
        for (auto it = resid.terms.begin(); it != resid.terms.end();) {
            if (it->first.mu == *tgt || std::abs(it->second) < 1e-300)
                it = resid.terms.erase(it);
            else
                ++it;
        }
    }
    return f;
}

}  // namespace za
