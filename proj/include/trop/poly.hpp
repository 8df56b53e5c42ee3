#pragma once

#include "trop/rational.hpp"

#include <map>
#include <string>
#include <vector>

namespace trop {

// Sparse multivariate polynomial over Q; used as a scalar ring for symbolic pairings.
struct Poly {
    std::map<std::vector<int>, Q> t;  // exponent vector -> coefficient

    Poly() = default;
    Poly(int v) { if (v != 0) t[{}] = Q(v); }          // NOLINT
    Poly(const Q& v) { if (v != 0) t[{}] = v; }         // NOLINT

    static Poly var(int k) {
        Poly p;
        std::vector<int> e(static_cast<std::size_t>(k) + 1, 0);
        e[static_cast<std::size_t>(k)] = 1;
        p.t[e] = 1;
        return p;
    }

    static std::vector<int> trim(std::vector<int> e) {
        while (!e.empty() && e.back() == 0) e.pop_back();
        return e;
    }
    void add_term(const std::vector<int>& e, const Q& v) {
        auto key = trim(e);
        auto [it, fresh] = t.try_emplace(key, v);
        if (!fresh) it->second += v;
        if (it->second == 0) t.erase(it);
    }

    Poly& operator+=(const Poly& o) { for (auto& [e, v] : o.t) add_term(e, v); return *this; }
    Poly& operator-=(const Poly& o) { for (auto& [e, v] : o.t) add_term(e, Q(-v)); return *this; }
    Poly& operator*=(const Poly& o) {
        Poly out;
        for (auto& [e1, v1] : t)
            for (auto& [e2, v2] : o.t) {
                std::vector<int> e(std::max(e1.size(), e2.size()), 0);
                for (std::size_t i = 0; i < e1.size(); ++i) e[i] += e1[i];
                for (std::size_t i = 0; i < e2.size(); ++i) e[i] += e2[i];
                out.add_term(e, v1 * v2);
            }
        *this = std::move(out);
        return *this;
    }
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend Poly operator*(Poly a, const Poly& b) { return a *= b; }
    friend Poly operator-(Poly a) { for (auto& [e, v] : a.t) v = -v; return a; }
    friend bool operator==(const Poly& a, const Poly& b) { return a.t == b.t; }
    friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }

    bool is_zero() const { return t.empty(); }
    Q eval(const std::vector<Q>& x) const {
        Q acc = 0;
        for (auto& [e, v] : t) {
            Q m = v;
            for (std::size_t i = 0; i < e.size(); ++i)
                for (int k = 0; k < e[i]; ++k) m *= x.at(i);
            acc += m;
        }
        return acc;
    }
    double eval_d(const std::vector<double>& x) const {
        double acc = 0;
        for (auto& [e, v] : t) {
            double m = v.get_d();
            for (std::size_t i = 0; i < e.size(); ++i)
                for (int k = 0; k < e[i]; ++k) m *= x.at(i);
            acc += m;
        }
        return acc;
    }
    bool is_constant() const { return t.empty() || (t.size() == 1 && t.begin()->first.empty()); }
    Q constant_term() const {
        auto it = t.find({});
        return it == t.end() ? Q(0) : it->second;
    }
    // Number of variables referenced.
    std::size_t nvars() const {
        std::size_t k = 0;
        for (auto& [e, v] : t) k = std::max(k, e.size());
        return k;
    }
};

inline bool is_zero(const Poly& p) { return p.is_zero(); }

}  // namespace trop
