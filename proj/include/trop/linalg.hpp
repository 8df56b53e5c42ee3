#pragma once

#include "trop/rational.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace trop {

template <class S>
using Mat = std::vector<std::vector<S>>;

template <class S>
Mat<S> zero_mat(std::size_t r, std::size_t c) {
    return Mat<S>(r, std::vector<S>(c, S(0)));
}

// Rank by fraction-free elimination over an exact field.
template <class S>
std::size_t exact_rank(Mat<S> a) {
    std::size_t rows = a.size(), cols = rows ? a[0].size() : 0, r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && is_zero(a[piv][c])) ++piv;
        if (piv == rows) continue;
        std::swap(a[piv], a[r]);
        for (std::size_t i = r + 1; i < rows; ++i) {
            if (is_zero(a[i][c])) continue;
            S f = a[i][c] / a[r][c];
            for (std::size_t j = c; j < cols; ++j) a[i][j] -= f * a[r][j];
        }
        ++r;
    }
    return r;
}

// Solves a x = b exactly; nullopt when inconsistent. Free variables are set to zero.
template <class S>
std::optional<std::vector<S>> exact_solve(Mat<S> a, std::vector<S> b) {
    std::size_t rows = a.size(), cols = rows ? a[0].size() : 0, r = 0;
    std::vector<std::size_t> pivcol;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && is_zero(a[piv][c])) ++piv;
        if (piv == rows) continue;
        std::swap(a[piv], a[r]);
        std::swap(b[piv], b[r]);
        S inv = S(1) / a[r][c];
        for (std::size_t j = c; j < cols; ++j) a[r][j] *= inv;
        b[r] *= inv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || is_zero(a[i][c])) continue;
            S f = a[i][c];
            for (std::size_t j = c; j < cols; ++j) a[i][j] -= f * a[r][j];
            b[i] -= f * b[r];
        }
        pivcol.push_back(c);
        ++r;
    }
    for (std::size_t i = r; i < rows; ++i)
        if (!is_zero(b[i])) return std::nullopt;
    std::vector<S> x(cols, S(0));
    for (std::size_t i = 0; i < r; ++i) x[pivcol[i]] = b[i];
    return x;
}

template <class S>
S exact_det(Mat<S> a) {
    std::size_t n = a.size();
    S det(1);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        while (piv < n && is_zero(a[piv][c])) ++piv;
        if (piv == n) return S(0);
        if (piv != c) { std::swap(a[piv], a[c]); det = -det; }
        det *= a[c][c];
        for (std::size_t i = c + 1; i < n; ++i) {
            if (is_zero(a[i][c])) continue;
            S f = a[i][c] / a[c][c];
            for (std::size_t j = c; j < n; ++j) a[i][j] -= f * a[c][j];
        }
    }
    return det;
}

// Basis of the null space of a (columns of the returned list).
template <class S>
std::vector<std::vector<S>> exact_nullspace(Mat<S> a, std::size_t cols) {
    std::size_t rows = a.size(), r = 0;
    std::vector<long> pivot_of_col(cols, -1);
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && is_zero(a[piv][c])) ++piv;
        if (piv == rows) continue;
        std::swap(a[piv], a[r]);
        S inv = S(1) / a[r][c];
        for (std::size_t j = c; j < cols; ++j) a[r][j] *= inv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || is_zero(a[i][c])) continue;
            S f = a[i][c];
            for (std::size_t j = c; j < cols; ++j) a[i][j] -= f * a[r][j];
        }
        pivot_of_col[c] = static_cast<long>(r);
        ++r;
    }
    std::vector<std::vector<S>> basis;
    for (std::size_t f = 0; f < cols; ++f) {
        if (pivot_of_col[f] >= 0) continue;
        std::vector<S> v(cols, S(0));
        v[f] = S(1);
        for (std::size_t c = 0; c < cols; ++c)
            if (pivot_of_col[c] >= 0) v[c] = -a[static_cast<std::size_t>(pivot_of_col[c])][f];
        basis.push_back(std::move(v));
    }
    return basis;
}

template <class S>
bool is_self_adjoint(const Mat<S>& m) {
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
            if (m[i][j] != conj_of(m[j][i])) return false;
    return true;
}

template <class S>
S quad_form(const Mat<S>& m, const std::vector<S>& x) {
    S acc(0);
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) acc += conj_of(x[i]) * m[i][j] * x[j];
    return acc;
}

template <class S>
struct LdlResult {
    bool self_adjoint = true;
    bool psd = true;
    std::size_t rank = 0;
    std::vector<S> diag;     // pivots of the congruence, in elimination order
    std::vector<S> witness;  // x with x* M x < 0 when !psd
    Mat<S> basis;            // P with P* M P = diag when psd (columns are basis vectors)
};

inline Q real_part(const Q& q) { return q; }
inline Q real_part(const QC& z) { return z.re; }

// Exact symmetric / Hermitian LDL* by congruence; produces a negative direction when not PSD.
template <class S>
LdlResult<S> exact_ldl(const Mat<S>& m) {
    LdlResult<S> res;
    std::size_t n = m.size();
    if (!is_self_adjoint(m)) {
        res.self_adjoint = false;
        res.psd = false;
        return res;
    }
    Mat<S> a = m;
    Mat<S> p = zero_mat<S>(n, n);  // columns are the current basis vectors
    for (std::size_t i = 0; i < n; ++i) p[i][i] = S(1);
    auto column = [&](std::size_t k) {
        std::vector<S> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = p[i][k];
        return v;
    };
    for (std::size_t k = 0; k < n; ++k) {
        Q akk = real_part(a[k][k]);
        if (akk < 0) {
            res.psd = false;
            res.witness = column(k);
            return res;
        }
        if (akk == 0) {
            for (std::size_t j = k + 1; j < n; ++j) {
                if (is_zero(a[k][j])) continue;
                S b = a[k][j];
                Q d = real_part(a[j][j]);
                Q nb = real_part(conj_of(b) * b);
                S s = b * S(Q(-(d + 1) / (2 * nb)));
                std::vector<S> x(n);
                for (std::size_t i = 0; i < n; ++i) x[i] = s * p[i][k] + p[i][j];
                res.psd = false;
                res.witness = std::move(x);
                return res;
            }
            res.diag.push_back(S(0));
            continue;
        }
        res.diag.push_back(a[k][k]);
        ++res.rank;
        for (std::size_t j = k + 1; j < n; ++j) {
            if (is_zero(a[k][j])) continue;
            S c = a[k][j] / a[k][k];
            for (std::size_t i = 0; i < n; ++i) p[i][j] -= c * p[i][k];
            for (std::size_t i = 0; i < n; ++i) a[i][j] -= c * a[i][k];
            S cc = conj_of(c);
            for (std::size_t i = 0; i < n; ++i) a[j][i] -= cc * a[k][i];
        }
    }
    res.basis = std::move(p);
    return res;
}

// ---------------------------------------------------------------------------
// Dense two-phase simplex with Bland's rule. Works over double (with eps) and Q (eps = 0).

enum class LpStatus { Optimal, Infeasible, Unbounded };

template <class T>
struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    std::vector<T> x;
    std::vector<std::size_t> basis;
    T objective = T(0);
};

template <class T>
bool lp_pos(const T& v, const T& eps) { return v > eps; }
template <class T>
bool lp_neg(const T& v, const T& eps) { return v < -eps; }

// maximize c.x  subject to  a x = b, x >= 0.
template <class T>
LpResult<T> lp_solve(const Mat<T>& a, std::vector<T> b, const std::vector<T>& c, T eps) {
    std::size_t m = a.size(), nv = c.size();
    std::size_t width = nv + m + 1;  // structural, artificial, rhs
    Mat<T> tab(m + 1, std::vector<T>(width, T(0)));
    for (std::size_t i = 0; i < m; ++i) {
        bool flip = b[i] < T(0);
        for (std::size_t j = 0; j < nv; ++j) tab[i][j] = flip ? T(-a[i][j]) : a[i][j];
        tab[i][nv + i] = T(1);
        tab[i][width - 1] = flip ? T(-b[i]) : b[i];
    }
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) basis[i] = nv + i;

    auto pivot = [&](std::size_t r, std::size_t col) {
        T inv = T(1) / tab[r][col];
        for (auto& v : tab[r]) v *= inv;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == r) continue;
            T f = tab[i][col];
            if (f == T(0)) continue;
            for (std::size_t j = 0; j < width; ++j) tab[i][j] -= f * tab[r][j];
        }
        basis[r] = col;
    };

    // Runs the simplex on the objective row (reduced costs stored as negatives); allowed columns < lim.
    auto run = [&](std::size_t lim) -> bool {
        for (std::size_t iter = 0; iter < 50000; ++iter) {
            std::size_t enter = width;
            for (std::size_t j = 0; j < lim; ++j)
                if (lp_neg(tab[m][j], eps)) { enter = j; break; }
            if (enter == width) return true;
            std::size_t leave = m;
            T best(0);
            for (std::size_t i = 0; i < m; ++i) {
                if (!lp_pos(tab[i][enter], eps)) continue;
                T ratio = tab[i][width - 1] / tab[i][enter];
                if (leave == m || ratio < best || (ratio == best && basis[i] < basis[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave == m) return false;
            pivot(leave, enter);
        }
        throw std::runtime_error("simplex iteration limit reached");
    };

    // Phase I: minimize the sum of artificials, i.e. maximize its negative.
    for (std::size_t j = 0; j < width; ++j) tab[m][j] = T(0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < width; ++j)
            if (j < nv || j == width - 1) tab[m][j] -= tab[i][j];
    run(nv + m);
    LpResult<T> res;
    if (lp_neg(tab[m][width - 1], eps)) {
        res.status = LpStatus::Infeasible;
        return res;
    }
    // Drive remaining artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
        if (basis[i] < nv) continue;
        for (std::size_t j = 0; j < nv; ++j) {
            if (lp_pos(tab[i][j], eps) || lp_neg(tab[i][j], eps)) {
                pivot(i, j);
                break;
            }
        }
    }
    // Phase II.
    for (std::size_t j = 0; j < width; ++j) tab[m][j] = T(0);
    for (std::size_t j = 0; j < nv; ++j) tab[m][j] = -c[j];
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t bj = basis[i];
        if (bj >= nv) continue;
        T f = tab[m][bj];
        if (f == T(0)) continue;
        for (std::size_t j = 0; j < width; ++j) tab[m][j] -= f * tab[i][j];
    }
    if (!run(nv)) {
        res.status = LpStatus::Unbounded;
        return res;
    }
    res.status = LpStatus::Optimal;
    res.x.assign(nv, T(0));
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] < nv) res.x[basis[i]] = tab[i][width - 1];
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] < nv) res.basis.push_back(basis[i]);
    res.objective = tab[m][width - 1];
    return res;
}

}  // namespace trop
