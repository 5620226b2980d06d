#pragma once

// Exact rational scalars and polynomials in nu over Q, the coefficient field
// for the series algebra's rational mode. differentiate multiplies a
// coefficient by the exponent value p + h/2 + q*nu + kappa/2, which lives in
// Q[nu]; keeping coefficients in Q[nu] keeps add/mul/differentiate exact.

#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "za/common.hpp"

namespace za {

struct Rat {
    long long n = 0, d = 1;

    Rat() = default;
    Rat(long long num) : n(num), d(1) {}
    Rat(long long num, long long den) : n(num), d(den) { reduce(); }

    void reduce() {
        if (d == 0) throw NumericsError("Rat: zero denominator");
        if (d < 0) { n = -n; d = -d; }
        long long g = std::gcd(n < 0 ? -n : n, d);
        if (g > 1) { n /= g; d /= g; }
    }
    static Rat make128(__int128 num, __int128 den) {
        if (den < 0) { num = -num; den = -den; }
        __int128 a = num < 0 ? -num : num, b = den;
        while (b) { __int128 t = a % b; a = b; b = t; }
        if (a > 1) { num /= a; den /= a; }
        if (num > INT64_MAX || num < INT64_MIN || den > INT64_MAX)
            throw NumericsError("Rat: overflow");
        Rat r; r.n = (long long)num; r.d = (long long)den;
        return r;
    }
    friend Rat operator+(const Rat& a, const Rat& b) {
        return make128((__int128)a.n * b.d + (__int128)b.n * a.d, (__int128)a.d * b.d);
    }
    friend Rat operator-(const Rat& a, const Rat& b) {
        return make128((__int128)a.n * b.d - (__int128)b.n * a.d, (__int128)a.d * b.d);
    }
    friend Rat operator*(const Rat& a, const Rat& b) {
        return make128((__int128)a.n * b.n, (__int128)a.d * b.d);
    }
    friend Rat operator/(const Rat& a, const Rat& b) {
        if (b.n == 0) throw NumericsError("Rat: division by zero");
        return make128((__int128)a.n * b.d, (__int128)a.d * b.n);
    }
    Rat operator-() const { Rat r; r.n = -n; r.d = d; return r; }
    friend bool operator==(const Rat& a, const Rat& b) { return a.n == b.n && a.d == b.d; }
    bool is_zero() const { return n == 0; }
    Real value() const { return Real(n) / Real(d); }
    std::string str() const {
        std::ostringstream os;
        os << n;
        if (d != 1) os << '/' << d;
        return os.str();
    }
    static Rat parse(const std::string& s) {
        auto slash = s.find('/');
        if (slash == std::string::npos) return Rat(std::stoll(s));
        return Rat(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
    }
};

// Polynomial in nu with rational coefficients: c[0] + c[1]*nu + ...
struct NuPoly {
    std::vector<Rat> c;

    NuPoly() = default;
    NuPoly(Rat r) { if (!r.is_zero()) c = {r}; }
    NuPoly(long long v) : NuPoly(Rat(v)) {}

    void trim() { while (!c.empty() && c.back().is_zero()) c.pop_back(); }
    bool is_zero() const { return c.empty(); }

    friend NuPoly operator+(const NuPoly& a, const NuPoly& b) {
        NuPoly r;
        r.c.resize(std::max(a.c.size(), b.c.size()));
        for (size_t i = 0; i < r.c.size(); ++i) {
            Rat v(0);
            if (i < a.c.size()) v = v + a.c[i];
            if (i < b.c.size()) v = v + b.c[i];
            r.c[i] = v;
        }
        r.trim();
        return r;
    }
    friend NuPoly operator-(const NuPoly& a, const NuPoly& b) {
        NuPoly nb = b;
        for (auto& v : nb.c) v = -v;
        return a + nb;
    }
    friend NuPoly operator*(const NuPoly& a, const NuPoly& b) {
        NuPoly r;
        if (a.is_zero() || b.is_zero()) return r;
        r.c.assign(a.c.size() + b.c.size() - 1, Rat(0));
        for (size_t i = 0; i < a.c.size(); ++i)
            for (size_t j = 0; j < b.c.size(); ++j)
                r.c[i + j] = r.c[i + j] + a.c[i] * b.c[j];
        r.trim();
        return r;
    }
    friend bool operator==(const NuPoly& a, const NuPoly& b) { return a.c == b.c; }
    Real value(Real nu) const {
        Real v = 0;
        for (size_t i = c.size(); i-- > 0;) v = v * nu + c[i].value();
        return v;
    }
    std::string str() const {
        if (c.empty()) return "0";
        std::string s;
        for (size_t i = 0; i < c.size(); ++i) {
            if (i) s += ';';
            s += c[i].str();
        }
        return s;
    }
    static NuPoly parse(const std::string& s) {
        NuPoly p;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ';')) p.c.push_back(Rat::parse(tok));
        p.trim();
        return p;
    }
};

// Complex element of Q[nu]: the rational-mode series coefficient.
struct CRat {
    NuPoly re, im;

    CRat() = default;
    CRat(long long v) : re(Rat(v)) {}
    CRat(Rat r) : re(r) {}
    CRat(NuPoly r, NuPoly i) : re(std::move(r)), im(std::move(i)) {}

    bool is_zero() const { return re.is_zero() && im.is_zero(); }
    friend CRat operator+(const CRat& a, const CRat& b) { return {a.re + b.re, a.im + b.im}; }
    friend CRat operator-(const CRat& a, const CRat& b) { return {a.re - b.re, a.im - b.im}; }
    friend CRat operator*(const CRat& a, const CRat& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend bool operator==(const CRat& a, const CRat& b) { return a.re == b.re && a.im == b.im; }
    Cplx value(Real nu) const { return {re.value(nu), im.value(nu)}; }
};

// Coefficient traits used by the templated series.
template <typename C>
struct CoeffTraits;

template <>
struct CoeffTraits<Cplx> {
    static bool is_zero(const Cplx& c) { return c == Cplx(0); }
    static Cplx zero() { return Cplx(0); }
    // multiply by the exact exponent value (numeric nu supplied)
    static Cplx mul_exponent(const Cplx& c, Real ev, const NuPoly&) { return c * ev; }
    static Cplx value(const Cplx& c, Real) { return c; }
    static std::string str(const Cplx& c) {
        std::ostringstream os;
        os.precision(17);
        os << c.real() << ' ' << c.imag();
        return os.str();
    }
};

template <>
struct CoeffTraits<CRat> {
    static bool is_zero(const CRat& c) { return c.is_zero(); }
    static CRat zero() { return CRat(); }
    static CRat mul_exponent(const CRat& c, Real, const NuPoly& ep) {
        return {c.re * ep, c.im * ep};
    }
    static Cplx value(const CRat& c, Real nu) { return c.value(nu); }
    static std::string str(const CRat& c) { return c.re.str() + ' ' + c.im.str(); }
};

}  // namespace za
