#include "trop/fiber_algebra.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace trop {

namespace {

int sign_pow(long k) { return (k & 1) ? -1 : 1; }

Mono generator_bit(int n, int k) {
    if (k == 0 || std::abs(k) > n) throw std::invalid_argument("generator index out of range");
    return k > 0 ? (Mono(1) << (k - 1)) : (Mono(1) << (n + (-k) - 1));
}

template <class S>
Superform<S> word_impl(int n, const std::vector<int>& seq) {
    Superform<S> acc = Superform<S>::unit(n);
    for (int k : seq) {
        Superform<S> g(n);
        g.c[generator_bit(n, k)] = S(1);
        acc = wedge(acc, g);
    }
    return acc;
}

template <class S>
Superform<S> mono_impl(int n, const std::vector<int>& I, const std::vector<int>& J, const S& c) {
    std::vector<int> seq;
    for (int i : I) seq.push_back(i);
    for (int j : J) seq.push_back(-j);
    Superform<S> w = word_impl<S>(n, seq);
    w *= c;
    return w;
}

Mask top_mask(int n) { return n == 32 ? ~Mask(0) : ((Mask(1) << n) - 1); }

// Sign s_K with d'u_K ∧ d'u_{K^c} = s_K d'u_{1..n}.
int complement_sign(Mask k, int n) { return wedge_sign(k, top_mask(n) & ~k); }

}  // namespace

LForm lmono(int n, const std::vector<int>& I, const std::vector<int>& J, const Q& c) {
    return mono_impl<Q>(n, I, J, c);
}
CForm cmono(int n, const std::vector<int>& I, const std::vector<int>& K, const QC& c) {
    return mono_impl<QC>(n, I, K, c);
}
LForm lword(int n, const std::vector<int>& seq) { return word_impl<Q>(n, seq); }
CForm cword(int n, const std::vector<int>& seq) { return word_impl<QC>(n, seq); }

LForm tau(int n) {
    std::vector<int> seq;
    for (int k = 1; k <= n; ++k) { seq.push_back(k); seq.push_back(-k); }
    return lword(n, seq);
}
CForm omega_n(int n) { return embed_complex(tau(n)); }

LForm d1(const QVec& a) {
    int n = static_cast<int>(a.size());
    LForm f(n);
    for (int k = 0; k < n; ++k)
        if (a[k] != 0) f.c[Mono(1) << k] = a[k];
    return f;
}

LForm decomposable(const std::vector<QVec>& vs) {
    if (vs.empty()) throw std::invalid_argument("decomposable needs at least one factor");
    int n = static_cast<int>(vs[0].size());
    LForm acc = LForm::unit(n);
    for (auto& v : vs) acc = wedge(acc, d1(v));
    return acc;
}

LForm apply_J(const LForm& a) { return swap_families(a); }

CForm conjugate(const CForm& a) {
    CForm out(a.n);
    for (auto& [m, v] : a.c) {
        Mask i = mono_i(m, a.n), k = mono_j(m, a.n);
        QC w = v.conj();
        if ((popcount(i) * popcount(k)) & 1) w = -w;
        out.add(make_mono(k, i, a.n), w);
    }
    return out;
}

CForm apply_F(const CForm& a) {
    CForm out(a.n);
    for (auto& [m, v] : a.c) {
        QC w = v.conj();
        if (popcount(mono_j(m, a.n)) & 1) w = -w;
        out.add(m, w);
    }
    return out;
}

LForm apply_involution(Involution k, const LForm& a) {
    if (k != Involution::J) throw std::invalid_argument("WrongAlgebra: conjugation and F act on complex forms");
    return apply_J(a);
}
CForm apply_involution(Involution k, const CForm& a) {
    if (k == Involution::J) throw std::invalid_argument("WrongAlgebra: J acts on Lagerberg forms");
    return k == Involution::F ? apply_F(a) : conjugate(a);
}

CForm embed_complex(const LForm& a) {
    CForm out(a.n);
    for (auto& [m, v] : a.c) out.add(m, QC(v) * ipow(popcount(mono_j(m, a.n))));
    return out;
}

std::optional<LForm> lagerberg_of(const CForm& a) {
    LForm out(a.n);
    for (auto& [m, v] : a.c) {
        QC w = v * ipow(-popcount(mono_j(m, a.n)));
        if (w.im != 0) return std::nullopt;
        out.add(m, w.re);
    }
    return out;
}

bool is_symmetric(const LForm& a) {
    if (a.is_zero()) return true;
    auto [p, q] = a.bidegree();
    if (p != q) return false;
    LForm ja = apply_J(a);
    if (p & 1) ja *= Q(-1);
    return ja == a;
}

bool is_real(const CForm& a) { return conjugate(a) == a; }

namespace {

template <class S>
int square_degree(const Superform<S>& a) {
    if (a.is_zero()) return -1;
    auto [p, q] = a.bidegree();
    if (p != q) throw std::invalid_argument("NotSquareBidegree: expected a (p,p)-form");
    return p;
}

}  // namespace

GramForm<Q> gram_form(const LForm& a) {
    int p = square_degree(a);
    if (p < 0) throw std::invalid_argument("NotSquareBidegree: zero form has no bidegree");
    GramForm<Q> g;
    g.p = p;
    g.index = subsets_of_size(a.n, p);
    std::size_t d = g.index.size();
    g.m = zero_mat<Q>(d, d);
    int s = sign_pow(p * (p - 1) / 2);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) g.m[r][c] = a.coeff(g.index[r], g.index[c]) * s;
    g.self_adjoint = is_self_adjoint(g.m);
    return g;
}

GramForm<QC> gram_form(const CForm& a) {
    int p = square_degree(a);
    if (p < 0) throw std::invalid_argument("NotSquareBidegree: zero form has no bidegree");
    GramForm<QC> g;
    g.p = p;
    g.index = subsets_of_size(a.n, p);
    std::size_t d = g.index.size();
    g.m = zero_mat<QC>(d, d);
    QC f = ipow(-p) * QC(sign_pow(p * (p - 1) / 2));
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) g.m[r][c] = a.coeff(g.index[r], g.index[c]) * f;
    g.self_adjoint = is_self_adjoint(g.m);
    return g;
}

Q dual_pairing(const LForm& a, const LForm& b) {
    a.check(b);
    if (!a.is_zero() && !b.is_zero()) {
        auto [p, q] = a.bidegree();
        auto [p2, q2] = b.bidegree();
        if (p + p2 != a.n || q + q2 != a.n) throw std::invalid_argument("BidegreeMismatch: degrees are not complementary");
    }
    LForm w = wedge(a, b);
    auto it = w.c.find(top_mono(a.n));
    Q v = it == w.c.end() ? Q(0) : it->second;
    return v * interleave_sign(a.n);
}

QC dual_pairing(const CForm& a, const CForm& b) {
    a.check(b);
    if (!a.is_zero() && !b.is_zero()) {
        auto [p, q] = a.bidegree();
        auto [p2, q2] = b.bidegree();
        if (p + p2 != a.n || q + q2 != a.n) throw std::invalid_argument("BidegreeMismatch: degrees are not complementary");
    }
    CForm w = wedge(a, b);
    auto it = w.c.find(top_mono(a.n));
    QC v = it == w.c.end() ? QC(0) : it->second;
    QC top = ipow(a.n) * QC(interleave_sign(a.n));
    return v / top;
}

LForm positive_square(const LForm& alpha) {
    if (alpha.is_zero()) return alpha;
    auto [p, q] = alpha.bidegree();
    if (q != 0) throw std::invalid_argument("positive_square expects a (p,0)-form");
    LForm w = wedge(alpha, apply_J(alpha));
    w *= Q(sign_pow(p * (p - 1) / 2));
    return w;
}

LForm strong_generator(const std::vector<QVec>& vs) {
    if (vs.empty()) throw std::invalid_argument("strong_generator needs at least one factor");
    int n = static_cast<int>(vs[0].size());
    LForm acc = LForm::unit(n);
    for (auto& v : vs) {
        LForm a = d1(v);
        acc = wedge(wedge(acc, a), apply_J(a));
    }
    return acc;
}

QVec plucker_vector(const LForm& alpha, int p) {
    auto idx = subsets_of_size(alpha.n, p);
    QVec v(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) v[k] = alpha.coeff(idx[k], 0);
    return v;
}

LForm form_from_plucker(int n, int p, const QVec& v) {
    auto idx = subsets_of_size(n, p);
    LForm f(n);
    for (std::size_t k = 0; k < idx.size(); ++k)
        if (v[k] != 0) f.c[make_mono(idx[k], 0, n)] = v[k];
    return f;
}

std::string to_string(Answer a) {
    switch (a) {
        case Answer::Yes: return "Yes";
        case Answer::No: return "No";
        default: return "Unknown";
    }
}
std::string to_string(Tier t) {
    switch (t) {
        case Tier::Strong: return "strong";
        case Tier::Positive: return "positive";
        default: return "weak";
    }
}

Answer decomposable_test(const LForm& alpha) {
    if (alpha.is_zero()) return Answer::Yes;
    auto [p, q] = alpha.bidegree();
    if (q != 0) throw std::invalid_argument("decomposable_test expects a (p,0)-form");
    int n = alpha.n;
    if (p <= 1 || p >= n - 1) return Answer::Yes;
    // v ↦ v ∧ α has kernel of dimension exactly p iff α is decomposable.
    auto targets = subsets_of_size(n, p + 1);
    Mat<Q> m = zero_mat<Q>(targets.size(), static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        LForm e(n);
        e.c[Mono(1) << k] = 1;
        LForm w = wedge(e, alpha);
        for (std::size_t r = 0; r < targets.size(); ++r) m[r][static_cast<std::size_t>(k)] = w.coeff(targets[r], 0);
    }
    std::size_t kernel = static_cast<std::size_t>(n) - exact_rank(m);
    return kernel == static_cast<std::size_t>(p) ? Answer::Yes : Answer::No;
}

namespace {

// Dual witness for a non-PSD Gram matrix: pairing with a equals x^T M x.
LForm gram_dual_witness(int n, int p, const std::vector<Mask>& index, const QVec& x) {
    int q = n - p;
    LForm beta(n);
    for (std::size_t k = 0; k < index.size(); ++k) {
        if (x[k] == 0) continue;
        Mask comp = top_mask(n) & ~index[k];
        beta.add(make_mono(comp, 0, n), x[k] * complement_sign(index[k], n));
    }
    LForm b = wedge(beta, apply_J(beta));
    b *= Q(sign_pow(q * (q - 1) / 2));
    return b;
}

std::optional<std::pair<Mono, Mono>> asymmetry_of(const LForm& a, int p) {
    LForm ja = apply_J(a);
    if (p & 1) ja *= Q(-1);
    LForm diff = ja - a;
    if (diff.is_zero()) return std::nullopt;
    Mono m = diff.c.begin()->first;
    Mask i = mono_i(m, a.n), j = mono_j(m, a.n);
    return std::make_pair(m, make_mono(j, i, a.n));
}

PositivityVerdict positive_tier(const LForm& a, int p, Tier tier) {
    PositivityVerdict v;
    v.tier = tier;
    if (auto asym = asymmetry_of(a, p)) {
        v.answer = Answer::No;
        v.asymmetry = asym;
        v.reason = "not symmetric: J(a) != (-1)^p a";
        return v;
    }
    auto g = gram_form(a);
    auto ldl = exact_ldl(g.m);
    if (ldl.psd) {
        v.answer = Answer::Yes;
        v.reason = "Gram form is positive semidefinite (exact LDL)";
        // M = P^{-T} D P^{-1}: rows of P^{-1} give the positive squares.
        std::size_t d = g.m.size();
        Mat<Q> ptr = zero_mat<Q>(d, d);
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c) ptr[r][c] = ldl.basis[c][r];
        for (std::size_t k = 0; k < d; ++k) {
            if (ldl.diag[k] == 0) continue;
            // Row k of P^{-1}: solve P^T w = e_k.
            QVec e(d, Q(0));
            e[k] = 1;
            auto w = exact_solve(ptr, e);
            v.certificate.push_back({ldl.diag[k], form_from_plucker(a.n, p, *w)});
        }
        return v;
    }
    v.answer = Answer::No;
    v.reason = "Gram form is indefinite (exact LDL)";
    LForm b = gram_dual_witness(a.n, p, g.index, ldl.witness);
    v.witness = b;
    v.witness_pairing = dual_pairing(a, b);
    return v;
}

QVec random_small_vec(Rng& rng, int n, long range) {
    QVec v(static_cast<std::size_t>(n));
    for (auto& x : v) x = rng.uniform_int(-range, range);
    return v;
}

// Pool of decomposable (p,0)-forms: coordinate ones, adjacent pairs, seeded random ones, hints.
std::vector<LForm> decomposable_pool(int n, int p, std::size_t size, std::uint64_t seed,
                                     const std::vector<LForm>& hints) {
    std::vector<LForm> pool;
    auto idx = subsets_of_size(n, p);
    for (Mask k : idx) pool.push_back(LForm::mono(n, k, 0, Q(1)));
    if (p >= 1) {
        for (Mask base : subsets_of_size(n, p - 1))
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    if ((base >> i) & 1 || (base >> j) & 1) continue;
                    for (int s : {1, -1}) {
                        QVec v(static_cast<std::size_t>(n), Q(0));
                        v[static_cast<std::size_t>(i)] = 1;
                        v[static_cast<std::size_t>(j)] = s;
                        pool.push_back(wedge(LForm::mono(n, base, 0, Q(1)), d1(v)));
                    }
                }
    }
    for (auto& h : hints) pool.push_back(h);
    Rng rng(seed);
    while (pool.size() < size) {
        std::vector<QVec> vs;
        for (int k = 0; k < p; ++k) vs.push_back(random_small_vec(rng, n, 2));
        LForm alpha = p == 0 ? LForm::unit(n) : decomposable(vs);
        if (!alpha.is_zero()) pool.push_back(alpha);
    }
    return pool;
}

std::optional<std::vector<DecompositionTerm>> strong_lp(const LForm& a, int p, const VerdictOptions& opt) {
    int n = a.n;
    auto g = gram_form(a);
    std::size_t d = g.m.size();
    std::vector<std::pair<std::size_t, std::size_t>> rows;
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = r; c < d; ++c) rows.emplace_back(r, c);
    auto pool = decomposable_pool(n, p, opt.pool_size, opt.seed, opt.hints);
    std::vector<QVec> vecs;
    for (auto& al : pool) vecs.push_back(plucker_vector(al, p));

    Mat<double> A(rows.size(), std::vector<double>(pool.size(), 0.0));
    std::vector<double> b(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto [i, j] = rows[r];
        b[r] = g.m[i][j].get_d();
        for (std::size_t k = 0; k < pool.size(); ++k) A[r][k] = Q(vecs[k][i] * vecs[k][j]).get_d();
    }
    std::vector<double> cost(pool.size(), 0.0);
    auto res = lp_solve<double>(A, b, cost, 1e-9);
    if (res.status != LpStatus::Optimal) return std::nullopt;

    // Exact re-solve on the support found by the float simplex.
    std::vector<std::size_t> support;
    for (std::size_t k = 0; k < pool.size(); ++k)
        if (res.x[k] > 1e-12) support.push_back(k);
    Mat<Q> Ae = zero_mat<Q>(rows.size(), support.size());
    QVec be(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto [i, j] = rows[r];
        be[r] = g.m[i][j];
        for (std::size_t k = 0; k < support.size(); ++k) Ae[r][k] = vecs[support[k]][i] * vecs[support[k]][j];
    }
    auto x = exact_solve(Ae, be);
    if (!x) return std::nullopt;
    std::vector<DecompositionTerm> cert;
    for (std::size_t k = 0; k < support.size(); ++k) {
        if ((*x)[k] < 0) return std::nullopt;
        if ((*x)[k] == 0) continue;
        cert.push_back({(*x)[k], pool[support[k]]});
    }
    return cert;
}

std::optional<PluckerWitness> plucker_witness(const LForm& a, int p) {
    if (p != 2 || a.n < 4) return std::nullopt;
    int n = a.n;
    auto g = gram_form(a);
    auto idx = g.index;
    std::size_t d = idx.size();
    // Column basis of M.
    std::vector<QVec> range;
    Mat<Q> acc;
    for (std::size_t c = 0; c < d; ++c) {
        QVec col(d);
        for (std::size_t r = 0; r < d; ++r) col[r] = g.m[r][c];
        Mat<Q> trial = acc;
        trial.push_back(col);
        if (exact_rank(trial) > acc.size()) {
            acc = trial;
            range.push_back(col);
        }
    }
    if (range.empty()) return std::nullopt;
    auto pos = [&](int i, int j) {
        Mask m = (Mask(1) << i) | (Mask(1) << j);
        return static_cast<std::size_t>(std::find(idx.begin(), idx.end(), m) - idx.begin());
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k)
                for (int l = k + 1; l < n; ++l) {
                    Mat<Q> qm = zero_mat<Q>(d, d);
                    auto put = [&](std::size_t r, std::size_t c, const Q& v) {
                        qm[r][c] += v / 2;
                        qm[c][r] += v / 2;
                    };
                    put(pos(i, j), pos(k, l), 1);
                    put(pos(i, k), pos(j, l), -1);
                    put(pos(i, l), pos(j, k), 1);
                    std::size_t r = range.size();
                    Mat<Q> rq = zero_mat<Q>(r, r);
                    for (std::size_t s = 0; s < r; ++s)
                        for (std::size_t t = 0; t < r; ++t) {
                            Q acc2 = 0;
                            for (std::size_t u = 0; u < d; ++u)
                                for (std::size_t w = 0; w < d; ++w)
                                    if (qm[u][w] != 0) acc2 += range[s][u] * qm[u][w] * range[t][w];
                            rq[s][t] = acc2;
                        }
                    Mat<Q> neg = rq;
                    for (auto& row : neg)
                        for (auto& e : row) e = -e;
                    auto l1 = exact_ldl(rq), l2 = exact_ldl(neg);
                    if ((l1.psd && l1.rank == r) || (l2.psd && l2.rank == r)) {
                        PluckerWitness w;
                        w.range_basis = range;
                        w.quadric = {i + 1, j + 1, k + 1, l + 1};
                        w.restricted = rq;
                        return w;
                    }
                }
    return std::nullopt;
}

}  // namespace

Poly strong_pairing_polynomial(const LForm& a) {
    int p = square_degree(a);
    int n = a.n;
    int q = n - p;
    using PForm = Superform<Poly>;
    PForm gen = PForm::unit(n);
    for (int k = 0; k < q; ++k) {
        PForm x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x.c[Mono(1) << i] = Poly::var(k * n + i);
            y.c[Mono(1) << (n + i)] = Poly::var(k * n + i);
        }
        gen = wedge(wedge(gen, x), y);
    }
    PForm ap(n);
    for (auto& [m, v] : a.c) ap.c[m] = Poly(v);
    PForm w = wedge(ap, gen);
    auto it = w.c.find(top_mono(n));
    Poly r = it == w.c.end() ? Poly() : it->second;
    return interleave_sign(n) < 0 ? -r : r;
}

PositivityVerdict positivity_verdict(const LForm& a, Tier tier, const VerdictOptions& opt) {
    PositivityVerdict v;
    v.tier = tier;
    int p = square_degree(a);
    if (p < 0) {
        v.answer = Answer::Yes;
        v.reason = "zero form";
        return v;
    }
    int n = a.n;
    bool extreme = p <= 1 || p >= n - 1;

    if (tier == Tier::Positive) return positive_tier(a, p, tier);

    if (tier == Tier::Strong) {
        PositivityVerdict pos = positive_tier(a, p, Tier::Strong);
        if (extreme || pos.answer == Answer::No) {
            if (extreme) pos.reason += "; strong and positive cones coincide in this degree";
            else pos.reason += "; not positive, hence not strongly positive";
            return pos;
        }
        if (auto cert = strong_lp(a, p, opt)) {
            v.answer = Answer::Yes;
            v.certificate = *cert;
            v.reason = "conic combination of decomposable squares found by LP";
            return v;
        }
        if (auto w = plucker_witness(a, p)) {
            v.answer = Answer::No;
            v.plucker = *w;
            v.reason = "range of the Gram form contains no nonzero real decomposable vector";
            return v;
        }
        v.answer = Answer::Unknown;
        v.reason = "no decomposition found in the generator pool and no separating witness";
        return v;
    }

    // Weak tier.
    if (auto asym = asymmetry_of(a, p)) {
        v.answer = Answer::No;
        v.asymmetry = asym;
        v.reason = "not symmetric: J(a) != (-1)^p a";
        return v;
    }
    PositivityVerdict pos = positive_tier(a, p, Tier::Weak);
    if (extreme) {
        pos.reason += "; weak and positive cones coincide in this degree";
        return pos;
    }
    if (pos.answer == Answer::Yes) {
        pos.reason += "; positive forms are weakly positive";
        return pos;
    }
    int q = n - p;
    Rng rng(opt.seed ^ 0x5bd1e995ULL);
    for (std::size_t s = 0; s < opt.pool_size; ++s) {
        std::vector<QVec> vs;
        for (int k = 0; k < q; ++k) vs.push_back(random_small_vec(rng, n, 3));
        LForm g = strong_generator(vs);
        Q val = dual_pairing(a, g);
        if (val < 0) {
            v.answer = Answer::No;
            v.witness = g;
            v.witness_pairing = val;
            v.reason = "negative pairing with a strongly positive generator";
            return v;
        }
    }
    if (opt.vanishing_pairing_certificate) {
        if (strong_pairing_polynomial(a).is_zero()) {
            v.answer = Answer::Yes;
            v.reason = "pairing with the general strongly positive generator vanishes identically";
            return v;
        }
    }
    v.answer = Answer::Unknown;
    v.reason = "no negative pairing found in the strong pool and no dual certificate";
    return v;
}

PositivityVerdict positivity_verdict(const CForm& a) {
    PositivityVerdict v;
    v.tier = Tier::Positive;
    int p = square_degree(a);
    if (p < 0) {
        v.answer = Answer::Yes;
        v.reason = "zero form";
        return v;
    }
    if (!is_real(a)) {
        v.answer = Answer::No;
        v.reason = "not a real form";
        return v;
    }
    auto g = gram_form(a);
    auto ldl = exact_ldl(g.m);
    v.answer = ldl.psd ? Answer::Yes : Answer::No;
    v.reason = ldl.psd ? "Hermitian Gram form is positive semidefinite" : "Hermitian Gram form is indefinite";
    return v;
}

bool verify_verdict(const LForm& a, const PositivityVerdict& v) {
    int p = a.is_zero() ? 0 : a.bidegree().first;
    if (v.answer == Answer::Unknown) return true;
    if (v.asymmetry) {
        auto [m1, m2] = *v.asymmetry;
        Q c1 = a.c.count(m1) ? a.c.at(m1) : Q(0);
        Q c2 = a.c.count(m2) ? a.c.at(m2) : Q(0);
        // J maps the monomial m2 onto m1 with sign (-1)^{p^2}; symmetry needs c1 = c2 (-1)^{p^2} (-1)^p.
        Q expect = c2 * ((p * p + p) & 1 ? -1 : 1);
        return c1 != expect && v.answer == Answer::No;
    }
    if (v.answer == Answer::Yes) {
        if (!v.certificate.empty() || v.tier != Tier::Weak) {
            LForm sum(a.n);
            for (auto& t : v.certificate) {
                if (t.weight < 0) return false;
                if (v.tier == Tier::Strong && decomposable_test(t.alpha) != Answer::Yes) return false;
                sum += t.weight * positive_square(t.alpha);
            }
            return sum == a;
        }
        return strong_pairing_polynomial(a).is_zero() ||
               (p <= 1 || p >= a.n - 1);
    }
    if (v.plucker) {
        auto g = gram_form(a);
        auto& w = *v.plucker;
        Mat<Q> cols;
        for (std::size_t c = 0; c < g.m.size(); ++c) {
            QVec col(g.m.size());
            for (std::size_t r = 0; r < g.m.size(); ++r) col[r] = g.m[r][c];
            cols.push_back(col);
        }
        std::size_t rk = exact_rank(cols);
        Mat<Q> both = cols;
        for (auto& b : w.range_basis) both.push_back(b);
        if (exact_rank(both) != rk || exact_rank(w.range_basis) != rk) return false;
        Mat<Q> neg = w.restricted;
        for (auto& row : neg)
            for (auto& e : row) e = -e;
        auto l1 = exact_ldl(w.restricted), l2 = exact_ldl(neg);
        return (l1.psd && l1.rank == rk) || (l2.psd && l2.rank == rk);
    }
    if (v.witness) {
        Q val = dual_pairing(a, *v.witness);
        if (val >= 0) return false;
        if (v.tier == Tier::Weak && !(p <= 1 || p >= a.n - 1)) return v.witness->bidegree().first == a.n - p;
        return positivity_verdict(*v.witness, Tier::Positive).answer == Answer::Yes;
    }
    return false;
}

QVec random_qvec(Rng& rng, int n, long num, long den) {
    QVec v(static_cast<std::size_t>(n));
    for (auto& x : v) x = rng.small_rational(num, den);
    return v;
}

LForm random_lform(Rng& rng, int n, int p, int q, long num, long den) {
    LForm f(n);
    for (Mask i : subsets_of_size(n, p))
        for (Mask j : subsets_of_size(n, q)) {
            Q c = rng.small_rational(num, den);
            if (c != 0) f.c[make_mono(i, j, n)] = c;
        }
    return f;
}

CForm random_cform(Rng& rng, int n, int p, int q, long num, long den) {
    CForm f(n);
    for (Mask i : subsets_of_size(n, p))
        for (Mask j : subsets_of_size(n, q)) {
            QC c(rng.small_rational(num, den), rng.small_rational(num, den));
            if (!c.is_zero()) f.c[make_mono(i, j, n)] = c;
        }
    return f;
}

LForm random_positive(Rng& rng, int n, int p, int k) {
    LForm acc(n);
    auto idx = subsets_of_size(n, p);
    for (int s = 0; s < k; ++s) {
        QVec v(idx.size());
        for (auto& x : v) x = rng.small_rational(4, 3);
        Q w(rng.uniform_int(1, 5), rng.uniform_int(1, 3));
        w.canonicalize();
        acc += w * positive_square(form_from_plucker(n, p, v));
    }
    return acc;
}

LForm omega_example() {
    const int n = 4;
    LForm w(n);
    w += lword(n, {3, -1, 4, -2});
    w -= lword(n, {2, -1, 4, -3});
    w += lword(n, {2, -1, 3, -4});
    w += lword(n, {1, -3, 2, -4});
    w -= lword(n, {1, -2, 3, -4});
    w += lword(n, {1, -2, 4, -3});
    return w;
}

CForm omega_explicit_complex() {
    const int n = 4;
    QC i(0, 1);
    auto dz = [&](int k) { return cmono(n, {k}, {}, 1); };
    auto dzb = [&](int k) { return cmono(n, {}, {k}, 1); };
    CForm a = dz(1) + i * dz(2);
    CForm b = i * (dzb(1) - i * dzb(2));
    CForm c = dz(3) + i * dz(4);
    CForm d = i * (dzb(3) - i * dzb(4));
    CForm eta = wedge(wedge(wedge(a, b), c), d);
    CForm avg = eta + apply_F(eta);
    avg *= QC(Q(1, 2));
    return avg;
}

LForm omega_explicit() { return *lagerberg_of(omega_explicit_complex()); }

std::string to_string(const LForm& a) {
    std::ostringstream os;
    bool first = true;
    for (auto& [m, v] : a.c) {
        os << (first ? "" : " + ") << v.get_str() << "*" << mono_to_string<Q>(m, a.n, "d'u", "d''u");
        first = false;
    }
    return first ? "0" : os.str();
}

std::string to_string(const CForm& a) {
    std::ostringstream os;
    bool first = true;
    for (auto& [m, v] : a.c) {
        os << (first ? "" : " + ") << "(" << to_string(v) << ")*" << mono_to_string<QC>(m, a.n, "du", "dub");
        first = false;
    }
    return first ? "0" : os.str();
}

}  // namespace trop
