#pragma once

// Shared numeric utilities: grids, least-squares fits, quadrature and a
// small dense linear solver. Everything here is deliberately dependency-free.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace za {

using Real = double;
using Cplx = std::complex<double>;

inline constexpr Real PI = 3.14159265358979323846264338327950288;

struct NumericsError : std::runtime_error {
    explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------- grids ----

inline std::vector<Real> linspace(Real a, Real b, int n) {
    std::vector<Real> x(n);
    if (n == 1) { x[0] = a; return x; }
    for (int i = 0; i < n; ++i) x[i] = a + (b - a) * Real(i) / Real(n - 1);
    return x;
}

inline std::vector<Real> geomspace(Real a, Real b, int n) {
    assert(a > 0 && b > 0);
    std::vector<Real> x(n);
    if (n == 1) { x[0] = a; return x; }
    const Real la = std::log(a), lb = std::log(b);
    for (int i = 0; i < n; ++i) x[i] = std::exp(la + (lb - la) * Real(i) / Real(n - 1));
    return x;
}

// Graded radial grid: clustered at 0, geometric toward rmax. Used for norm
// quadrature and the ground-state scans.
inline std::vector<Real> graded_grid(Real rmax, int n, Real rmin = 1e-6) {
    std::vector<Real> x(n);
    for (int i = 0; i < n; ++i) {
        Real s = Real(i) / Real(n - 1);
        x[i] = rmax * (std::expm1(s * std::log1p(rmax / rmin)) ) * rmin / rmax;
    }
    x[0] = 0.0;
    x[n - 1] = rmax;
    return x;
}

// ------------------------------------------------------ small linalg -------

// Solves A x = b in place by partial-pivot Gaussian elimination. A is n*n
// row-major. Returns false on (numerical) singularity.
template <typename T>
bool solve_dense(std::vector<T>& A, std::vector<T>& b, int n) {
    std::vector<int> piv(n);
    std::iota(piv.begin(), piv.end(), 0);
    for (int k = 0; k < n; ++k) {
        int p = k;
        Real best = std::abs(A[k * n + k]);
        for (int i = k + 1; i < n; ++i) {
            Real v = std::abs(A[i * n + k]);
            if (v > best) { best = v; p = i; }
        }
        if (!(best > 0)) return false;
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(A[k * n + j], A[p * n + j]);
            std::swap(b[k], b[p]);
        }
        for (int i = k + 1; i < n; ++i) {
            T f = A[i * n + k] / A[k * n + k];
            A[i * n + k] = T(0);
            for (int j = k + 1; j < n; ++j) A[i * n + j] -= f * A[k * n + j];
            b[i] -= f * b[k];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        T s = b[i];
        for (int j = i + 1; j < n; ++j) s -= A[i * n + j] * b[j];
        b[i] = s / A[i * n + i];
    }
    return true;
}

// Least squares min ||A x - y|| via column-scaled normal equations: each
// basis column is normalized to unit l2 norm first, so the reported condition
// number measures genuine degeneracy (angles between columns) rather than
// scale disparity between branches.
template <typename T>
std::vector<T> lstsq(const std::vector<std::vector<T>>& cols, const std::vector<T>& y,
                     Real* cond_out = nullptr) {
    const int m = (int)cols.size();
    const int n = (int)y.size();
    std::vector<Real> nrm(m);
    for (int i = 0; i < m; ++i) {
        Real s = 0;
        for (int k = 0; k < n; ++k) s += std::norm(cols[i][k]);
        nrm[i] = std::sqrt(s);
        if (!(nrm[i] > 0)) throw NumericsError("lstsq: zero column");
    }
    std::vector<T> G(m * m), rhs(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            T s(0);
            for (int k = 0; k < n; ++k) s += std::conj(cols[i][k]) * cols[j][k];
            G[i * m + j] = s / (nrm[i] * nrm[j]);
        }
        T s(0);
        for (int k = 0; k < n; ++k) s += std::conj(cols[i][k]) * y[k];
        rhs[i] = s / nrm[i];
    }
    if (cond_out) {
        // crude symmetric-eigen bound via Gershgorin on the scaled normal matrix
        Real lo = std::numeric_limits<Real>::max(), hi = 0;
        for (int i = 0; i < m; ++i) {
            Real d = std::abs(G[i * m + i]), r = 0;
            for (int j = 0; j < m; ++j) if (j != i) r += std::abs(G[i * m + j]);
            lo = std::min(lo, std::max(d - r, Real(0)));
            hi = std::max(hi, d + r);
        }
        *cond_out = (lo > 0) ? std::sqrt(hi / lo) : std::numeric_limits<Real>::infinity();
    }
    std::vector<T> x = rhs;
    std::vector<T> Gc = G;
    if (!solve_dense(Gc, x, m)) throw NumericsError("lstsq: singular normal matrix");
    for (int i = 0; i < m; ++i) x[i] = x[i] / nrm[i];
    return x;
}

// real-overload convenience (std::conj on double returns complex)
inline std::vector<Real> lstsq_real(const std::vector<std::vector<Real>>& cols,
                                    const std::vector<Real>& y, Real* cond_out = nullptr) {
    const int m = (int)cols.size();
    const int n = (int)y.size();
    std::vector<Real> G(m * m), rhs(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            Real s = 0;
            for (int k = 0; k < n; ++k) s += cols[i][k] * cols[j][k];
            G[i * m + j] = s;
        }
        Real s = 0;
        for (int k = 0; k < n; ++k) s += cols[i][k] * y[k];
        rhs[i] = s;
    }
    if (cond_out) {
        Real lo = std::numeric_limits<Real>::max(), hi = 0;
        for (int i = 0; i < m; ++i) {
            Real d = std::abs(G[i * m + i]), r = 0;
            for (int j = 0; j < m; ++j) if (j != i) r += std::abs(G[i * m + j]);
            lo = std::min(lo, std::max(d - r, Real(0)));
            hi = std::max(hi, d + r);
        }
        *cond_out = (lo > 0) ? std::sqrt(hi / lo) : std::numeric_limits<Real>::infinity();
    }
    std::vector<Real> x = rhs;
    std::vector<Real> Gc = G;
    if (!solve_dense(Gc, x, m)) throw NumericsError("lstsq_real: singular normal matrix");
    return x;
}

// ------------------------------------------------------------- fits --------

struct SlopeFit {
    Real slope = 0;
    Real stderr_slope = 0;
    Real intercept = 0;
    Real nuisance = 0;   // coefficient of the log-log nuisance term, if used
};

// Fit log|v| = intercept + slope*log(x) (+ nuisance*log(log(x)) optionally).
// Log factors in power laws are treated as a nuisance regressor, matching
// how the t- and R-fit tolerances are quoted.
inline SlopeFit fit_loglog(const std::vector<Real>& x, const std::vector<Real>& v,
                           bool log_nuisance = false) {
    const int n = (int)x.size();
    std::vector<Real> lx(n), lv(n);
    for (int i = 0; i < n; ++i) {
        if (!(x[i] > 0) || !(v[i] > 0)) throw NumericsError("fit_loglog: nonpositive data");
        lx[i] = std::log(x[i]);
        lv[i] = std::log(v[i]);
    }
    std::vector<std::vector<Real>> cols;
    cols.push_back(std::vector<Real>(n, 1.0));
    cols.push_back(lx);
    if (log_nuisance) {
        std::vector<Real> ll(n);
        for (int i = 0; i < n; ++i) ll[i] = std::log(std::abs(lx[i]) + 1.0);
        cols.push_back(ll);
    }
    auto c = lstsq_real(cols, lv);
    SlopeFit out;
    out.intercept = c[0];
    out.slope = c[1];
    if (log_nuisance) out.nuisance = c[2];
    // residual-based standard error of the slope
    Real rss = 0;
    for (int i = 0; i < n; ++i) {
        Real pred = c[0] + c[1] * lx[i] + (log_nuisance ? c[2] * cols[2][i] : 0.0);
        rss += (lv[i] - pred) * (lv[i] - pred);
    }
    Real mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    Real sxx = 0;
    for (int i = 0; i < n; ++i) sxx += (lx[i] - mx) * (lx[i] - mx);
    int dof = n - (int)cols.size();
    out.stderr_slope = (dof > 0 && sxx > 0) ? std::sqrt(rss / dof / sxx) : 0.0;
    return out;
}

// -------------------------------------------------------- quadrature -------

namespace detail {
// 15-point Gauss–Kronrod nodes/weights on [-1,1] with embedded 7-pt Gauss.
inline const std::array<Real, 8> gk_xgk = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline const std::array<Real, 8> gk_wgk = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline const std::array<Real, 4> gk_wg = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};
}  // namespace detail

template <typename F>
auto gk15(const F& f, Real a, Real b, Real* err = nullptr) {
    using V = decltype(f((a + b) / 2));
    const Real c = 0.5 * (a + b), h = 0.5 * (b - a);
    V resk = detail::gk_wgk[7] * f(c);
    V resg = detail::gk_wg[3] * f(c);
    for (int j = 0; j < 7; ++j) {
        const Real dx = h * detail::gk_xgk[j];
        V fv = f(c - dx) + f(c + dx);
        resk += detail::gk_wgk[j] * fv;
        if (j % 2 == 1) resg += detail::gk_wg[j / 2] * fv;
    }
    if (err) *err = std::abs(resk - resg) * std::abs(h);
    return resk * h;
}

template <typename F>
auto integrate_adaptive(const F& f, Real a, Real b, Real rel_tol = 1e-12,
                        Real abs_tol = 1e-300, int max_depth = 28) {
    using V = decltype(f((a + b) / 2));
    struct Seg { Real a, b; int d; };
    std::vector<Seg> stack{{a, b, 0}};
    V total{};
    Real scale = 0;
    // first sweep to estimate scale
    {
        Real e;
        V v = gk15(f, a, b, &e);
        scale = std::abs(v) + e;
    }
    while (!stack.empty()) {
        Seg s = stack.back();
        stack.pop_back();
        Real e;
        V v = gk15(f, s.a, s.b, &e);
        if (e <= abs_tol || e <= rel_tol * std::max(scale, std::abs(v)) || s.d >= max_depth) {
            total += v;
        } else {
            Real m = 0.5 * (s.a + s.b);
            stack.push_back({s.a, m, s.d + 1});
            stack.push_back({m, s.b, s.d + 1});
        }
    }
    return total;
}

// Cumulative integral cache: I(x) = \int_{x0}^{x} g(s) ds on a fixed graded
// node set. Node spacing is fine enough (geometric ratio ~1.05) that a single
// 15-point Gauss-Kronrod rule per sub-interval is at machine precision for
// the smooth radial integrands used here.
class CumulativeCache {
public:
    CumulativeCache() = default;
    CumulativeCache(std::function<Cplx(Real)> g, std::vector<Real> nodes)
        : g_(std::move(g)), x_(std::move(nodes)) {
        cum_.resize(x_.size(), Cplx(0));
        for (size_t i = 1; i < x_.size(); ++i)
            cum_[i] = cum_[i - 1] + gk15(g_, x_[i - 1], x_[i]);
    }
    // integral from x_.front() to x
    Cplx operator()(Real x) const {
        if (x_.empty()) throw NumericsError("CumulativeCache: empty");
        if (x <= x_.front()) return Cplx(0);
        if (x >= x_.back()) return cum_.back() + gk15(g_, x_.back(), x);
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        size_t i = size_t(it - x_.begin()) - 1;
        return cum_[i] + gk15(g_, x_[i], x);
    }
    Real front() const { return x_.front(); }
    Real back() const { return x_.back(); }

private:
    std::function<Cplx(Real)> g_;
    std::vector<Real> x_;
    std::vector<Cplx> cum_;
};

// Node set for radial cumulative caches: dense near 0, geometric out to rmax.
inline std::vector<Real> radial_cache_nodes(Real rmax, int n_geo = 480) {
    std::vector<Real> nodes;
    nodes.push_back(0.0);
    for (Real r : geomspace(1e-5, rmax, n_geo)) nodes.push_back(r);
    return nodes;
}

// ----------------------------------------------------------- norms ---------

// L^2(R^3 dR) and sup norm over a sample grid by composite trapezoid in R^3 dR.
inline Real l2_r3(const std::vector<Real>& R, const std::vector<Real>& absv) {
    Real s = 0;
    for (size_t i = 1; i < R.size(); ++i) {
        Real f0 = absv[i - 1] * absv[i - 1] * R[i - 1] * R[i - 1] * R[i - 1];
        Real f1 = absv[i] * absv[i] * R[i] * R[i] * R[i];
        s += 0.5 * (f0 + f1) * (R[i] - R[i - 1]);
    }
    return std::sqrt(s);
}

inline Real sup_norm(const std::vector<Real>& absv) {
    Real s = 0;
    for (Real v : absv) s = std::max(s, v);
    return s;
}

}  // namespace za
