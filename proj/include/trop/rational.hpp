#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <vector>

namespace trop {

using Q = mpq_class;
using QVec = std::vector<Q>;
using QMat = std::vector<QVec>;

// Accepts "3", "-1/2", "−1/2" (unicode minus) and decimals like "0.125" or "1e-3".
Q parse_rational(const std::string& s);
std::string to_string(const Q& q);

// a/b in lowest terms.
inline Q qfrac(long a, long b) {
    Q q(a, b);
    q.canonicalize();
    return q;
}
inline Q qabs(const Q& q) { return q < 0 ? Q(-q) : q; }
inline int qsign(const Q& q) { return sgn(q); }

// Gaussian rationals a + b i.
struct QC {
    Q re, im;
    QC() : re(0), im(0) {}
    QC(const Q& r) : re(r), im(0) {}  // NOLINT
    QC(const Q& r, const Q& i) : re(r), im(i) {}
    QC(int r) : re(r), im(0) {}  // NOLINT

    bool is_zero() const { return re == 0 && im == 0; }
    QC conj() const { return {re, -im}; }
    Q norm2() const { return re * re + im * im; }

    QC& operator+=(const QC& o) { re += o.re; im += o.im; return *this; }
    QC& operator-=(const QC& o) { re -= o.re; im -= o.im; return *this; }
    QC& operator*=(const QC& o) {
        Q r = re * o.re - im * o.im;
        Q i = re * o.im + im * o.re;
        re = r; im = i;
        return *this;
    }
    QC& operator/=(const QC& o) {
        Q d = o.norm2();
        Q r = (re * o.re + im * o.im) / d;
        Q i = (im * o.re - re * o.im) / d;
        re = r; im = i;
        return *this;
    }
    friend QC operator+(QC a, const QC& b) { return a += b; }
    friend QC operator-(QC a, const QC& b) { return a -= b; }
    friend QC operator*(QC a, const QC& b) { return a *= b; }
    friend QC operator/(QC a, const QC& b) { return a /= b; }
    friend QC operator-(const QC& a) { return {-a.re, -a.im}; }
    friend bool operator==(const QC& a, const QC& b) { return a.re == b.re && a.im == b.im; }
    friend bool operator!=(const QC& a, const QC& b) { return !(a == b); }
};

// i^k for any integer k.
QC ipow(int k);
std::string to_string(const QC& z);

inline Q conj_of(const Q& q) { return q; }
inline QC conj_of(const QC& z) { return z.conj(); }
inline bool is_zero(const Q& q) { return q == 0; }
inline bool is_zero(const QC& z) { return z.is_zero(); }

// Deterministic splitmix64 stream; all seeded generators in the library draw from this.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : s_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (s_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    // Uniform integer in [lo, hi].
    long uniform_int(long lo, long hi) {
        return lo + static_cast<long>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(next() >> 11) * 0x1.0p-53);
    }
    // Small rational with numerator in [-num, num] and denominator in [1, den].
    Q small_rational(long num, long den) {
        Q q(uniform_int(-num, num), uniform_int(1, den));
        q.canonicalize();
        return q;
    }

private:
    std::uint64_t s_;
};

}  // namespace trop
