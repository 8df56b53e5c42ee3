#pragma once

// Bigraded exterior algebra on 2n anticommuting generators x_1..x_n, y_1..y_n.
// A basis monomial is stored as a 64-bit mask: bit i (i < n) is x_{i+1}, bit n+j is y_{j+1}.
// The canonical order of a monomial is all x's increasing, then all y's increasing.
// For Lagerberg forms x = d'u, y = d''u; for complex forms x = du, y = d(ubar).

#include <bit>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace trop {

using Mask = std::uint32_t;      // subset of {0..n-1}
using Mono = std::uint64_t;      // (I, J) pair packed as described above

inline int popcount(std::uint64_t m) { return std::popcount(m); }

inline Mono make_mono(Mask i, Mask j, int n) {
    return static_cast<Mono>(i) | (static_cast<Mono>(j) << n);
}
inline Mask mono_i(Mono m, int n) { return static_cast<Mask>(m & ((Mono(1) << n) - 1)); }
inline Mask mono_j(Mono m, int n) { return static_cast<Mask>(m >> n); }

inline std::vector<int> mask_elements(Mask m) {
    std::vector<int> out;
    for (int i = 0; m; ++i, m >>= 1)
        if (m & 1) out.push_back(i);
    return out;
}
inline Mask mask_from(const std::vector<int>& idx) {
    Mask m = 0;
    for (int i : idx) m |= Mask(1) << i;
    return m;
}

// Sign of a∧b for sorted monomials a, b (0 when they share a generator).
inline int wedge_sign(std::uint64_t a, std::uint64_t b) {
    if (a & b) return 0;
    int inv = 0;
    for (std::uint64_t bb = b; bb; bb &= bb - 1) {
        int k = std::countr_zero(bb);
        std::uint64_t above = (k >= 63) ? 0 : (a & ~((std::uint64_t(2) << k) - 1));
        inv += popcount(above);
    }
    return (inv & 1) ? -1 : 1;
}

// All subsets of {0..n-1} of size k, in increasing lexicographic order of element lists.
inline std::vector<Mask> subsets_of_size(int n, int k) {
    std::vector<Mask> out;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    if (k > n || k < 0) return out;
    while (true) {
        out.push_back(mask_from(idx));
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
}

template <class S>
struct Superform {
    int n = 0;
    std::map<Mono, S> c;

    Superform() = default;
    explicit Superform(int dim) : n(dim) {
        if (dim < 0 || dim > 31) throw std::invalid_argument("dimension out of range");
    }

    static Superform unit(int dim) {
        Superform f(dim);
        f.c[0] = S(1);
        return f;
    }
    static Superform mono(int dim, Mask i, Mask j, const S& coeff) {
        Superform f(dim);
        if (!is_zero_scalar(coeff)) f.c[make_mono(i, j, dim)] = coeff;
        return f;
    }

    static bool is_zero_scalar(const S& s) { return s == S(0); }

    S coeff(Mask i, Mask j) const {
        auto it = c.find(make_mono(i, j, n));
        return it == c.end() ? S(0) : it->second;
    }
    void add(Mono m, const S& v) {
        auto [it, fresh] = c.try_emplace(m, v);
        if (!fresh) it->second += v;
        if (is_zero_scalar(it->second)) c.erase(it);
    }
    bool is_zero() const { return c.empty(); }

    // Bidegree of a homogeneous form; (-1,-1) for the zero form, throws when inhomogeneous.
    std::pair<int, int> bidegree() const {
        if (c.empty()) return {-1, -1};
        int p = popcount(mono_i(c.begin()->first, n)), q = popcount(mono_j(c.begin()->first, n));
        for (auto& [m, v] : c)
            if (popcount(mono_i(m, n)) != p || popcount(mono_j(m, n)) != q)
                throw std::invalid_argument("form is not bihomogeneous");
        return {p, q};
    }

    Superform& operator+=(const Superform& o) {
        check(o);
        for (auto& [m, v] : o.c) add(m, v);
        return *this;
    }
    Superform& operator-=(const Superform& o) {
        check(o);
        for (auto& [m, v] : o.c) add(m, S(-v));
        return *this;
    }
    Superform& operator*=(const S& s) {
        if (is_zero_scalar(s)) { c.clear(); return *this; }
        for (auto& [m, v] : c) v *= s;
        return *this;
    }
    friend Superform operator+(Superform a, const Superform& b) { return a += b; }
    friend Superform operator-(Superform a, const Superform& b) { return a -= b; }
    friend Superform operator*(const S& s, Superform a) { return a *= s; }
    friend Superform operator-(Superform a) { return a *= S(-1); }
    friend bool operator==(const Superform& a, const Superform& b) { return a.n == b.n && a.c == b.c; }

    void check(const Superform& o) const {
        if (o.n != n) throw std::invalid_argument("DimensionMismatch: forms live in different dimensions");
    }
};

template <class S>
Superform<S> wedge(const Superform<S>& a, const Superform<S>& b) {
    a.check(b);
    Superform<S> out(a.n);
    for (auto& [ma, va] : a.c)
        for (auto& [mb, vb] : b.c) {
            int s = wedge_sign(ma, mb);
            if (s == 0) continue;
            S prod = va * vb;
            if (s < 0) prod = -prod;
            out.add(ma | mb, prod);
        }
    return out;
}

// Swap of the two generator families without coefficient change:
// x_I y_J -> (-1)^{|I||J|} x_J y_I.
template <class S>
Superform<S> swap_families(const Superform<S>& a) {
    Superform<S> out(a.n);
    for (auto& [m, v] : a.c) {
        Mask i = mono_i(m, a.n), j = mono_j(m, a.n);
        S w = v;
        if ((popcount(i) * popcount(j)) & 1) w = -w;
        out.add(make_mono(j, i, a.n), w);
    }
    return out;
}

// Top-degree monomial x_1..x_n y_1..y_n.
inline Mono top_mono(int n) { return (Mono(1) << (2 * n)) - 1; }

// Sign of x_1 y_1 x_2 y_2 ... x_n y_n relative to the canonical order.
inline int interleave_sign(int n) { return ((n * (n - 1) / 2) & 1) ? -1 : 1; }

template <class S>
std::string mono_to_string(Mono m, int n, const char* xs, const char* ys) {
    std::string s;
    for (int k : mask_elements(mono_i(m, n))) s += std::string(s.empty() ? "" : "^") + xs + std::to_string(k + 1);
    for (int k : mask_elements(mono_j(m, n))) s += std::string(s.empty() ? "" : "^") + ys + std::to_string(k + 1);
    return s.empty() ? "1" : s;
}

}  // namespace trop
