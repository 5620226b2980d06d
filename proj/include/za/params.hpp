#pragma once

// Global parameters of the construction and their invariants.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "za/common.hpp"

namespace za {

struct Orders {
    int N1 = 2;        // z-iteration length
    int calN = 4;      // wave-parametrix depth (box_inverse steps)
    int N2 = 2;        // self-similar iteration length (j-steps)
    int N2_schr = 2;   // k-tilde cap, Schrodinger blocks
    int N2_wave = 2;   // k-tilde cap / almost-free-wave order cap, wave blocks
    int N3 = 2;        // remote alpha2-induction cap
    int series_K = 12; // truncation depth of local series
    int series_S = 6;  // log-power budget
};

// Continued-fraction test: smallest denominator q <= qmax whose convergent
// p/q satisfies |q x - p| < gap (i.e. x is a small-denominator rational up to
// representation error). Returns 0 if none found, certifying the lattice
// non-resonance assumption. The gap matches the exponent-collision gap.
inline long long small_denominator(Real x, long long qmax, Real gap = 1e-9) {
    Real a = x;
    long long p0 = 1, q0 = 0, p1 = (long long)std::floor(a), q1 = 1;
    for (int it = 0; it < 64; ++it) {
        if (std::abs(Real(q1) * x - Real(p1)) < gap) return q1;
        Real frac = a - std::floor(a);
        if (frac < 1e-16) break;
        a = 1.0 / frac;
        long long ai = (long long)std::floor(a);
        long long p2 = ai * p1 + p0, q2 = ai * q1 + q0;
        if (q2 > qmax || q2 <= 0) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    }
    return 0;
}

struct Params {
    Real nu = 4.5 + 1.0 / PI;  // irrational surrogate, > 4
    Real alpha0 = 1.0;
    Real eps1 = 0.1;           // in (0, 1/10]
    Real eps2 = 0.25;          // in (0, 1/2)
    Real delta = 0.1;          // remote cutoff radius
    Real t0 = 0.01;            // max time of the scans
    Real c1 = 1.0;             // inner region constant
    Real c2 = 2.0;             // self-similar region constant
    Orders orders;

    void validate() const {
        if (!(nu > 4)) throw NumericsError("Params: nu must be > 4");
        if (small_denominator(nu, 1000000) != 0)
            throw NumericsError("Params: nu fails the irrationality certificate "
                                "(rational with denominator <= 1e6)");
        if (!(eps1 > 0 && eps1 <= 0.1)) throw NumericsError("Params: eps1 in (0, 1/10]");
        if (!(eps1 < nu)) throw NumericsError("Params: eps1 < nu");
        if (!(eps2 > 0 && eps2 < 0.5)) throw NumericsError("Params: eps2 in (0, 1/2)");
        if (!(delta > 0 && delta < 1)) throw NumericsError("Params: delta in (0,1)");
        if (!(t0 > 0 && t0 <= 1)) throw NumericsError("Params: t0 in (0,1]");
        if (!(c1 > 0 && c2 > 0)) throw NumericsError("Params: c1, c2 > 0");
        if (!(c2 > 1.0 / c1)) throw NumericsError("Params: need c2 > 1/c1");
    }

    static Params from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw NumericsError("config: cannot open " + path);
        Params p;
        std::string line;
        while (std::getline(in, line)) {
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                size_t a = s.find_first_not_of(" \t\r");
                size_t b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (key.empty()) continue;
            p.set(key, val);
        }
        p.validate();
        return p;
    }

    // nu accepts "A+B/pi" so configs can state irrational values exactly
    static Real parse_nu(const std::string& val) {
        auto plus = val.find('+');
        auto pi_pos = val.find("/pi");
        if (plus != std::string::npos && pi_pos != std::string::npos) {
            Real A = std::stod(val.substr(0, plus));
            Real B = std::stod(val.substr(plus + 1, pi_pos - plus - 1));
            return A + B / PI;
        }
        return std::stod(val);
    }

    void set(const std::string& key, const std::string& val) {
        auto d = [&] { return std::stod(val); };
        auto i = [&] { return std::stoi(val); };
        if (key == "nu") nu = parse_nu(val);
        else if (key == "alpha0") alpha0 = d();
        else if (key == "eps1") eps1 = d();
        else if (key == "eps2") eps2 = d();
        else if (key == "delta") delta = d();
        else if (key == "t0") t0 = d();
        else if (key == "c1") c1 = d();
        else if (key == "c2") c2 = d();
        else if (key == "N1") orders.N1 = i();
        else if (key == "calN") orders.calN = i();
        else if (key == "N2") orders.N2 = i();
        else if (key == "N2_schr") orders.N2_schr = i();
        else if (key == "N2_wave") orders.N2_wave = i();
        else if (key == "N3") orders.N3 = i();
        else if (key == "series_K") orders.series_K = i();
        else if (key == "series_S") orders.series_S = i();
        else throw NumericsError("config: unknown key '" + key + "'");
    }

    std::string dump() const {
        std::ostringstream os;
        os.precision(17);
        os << "nu = " << nu << "\n"
           << "alpha0 = " << alpha0 << "\n"
           << "eps1 = " << eps1 << "\n"
           << "eps2 = " << eps2 << "\n"
           << "delta = " << delta << "\n"
           << "t0 = " << t0 << "\n"
           << "c1 = " << c1 << "\n"
           << "c2 = " << c2 << "\n"
           << "N1 = " << orders.N1 << "\n"
           << "calN = " << orders.calN << "\n"
           << "N2 = " << orders.N2 << "\n"
           << "N2_schr = " << orders.N2_schr << "\n"
           << "N2_wave = " << orders.N2_wave << "\n"
           << "N3 = " << orders.N3 << "\n"
           << "series_K = " << orders.series_K << "\n"
           << "series_S = " << orders.series_S << "\n";
        return os.str();
    }

    // Parameter hash for workspace manifests.
    uint64_t hash() const {
        std::string s = dump();
        uint64_t h = 1469598103934665603ull;
        for (char c : s) { h ^= (unsigned char)c; h *= 1099511628211ull; }
        return h;
    }
};

}  // namespace za
