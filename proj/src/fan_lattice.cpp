#include "trop/fan_lattice.hpp"

#include "trop/linalg.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace trop {

std::string to_string(FanErrorKind k) {
    switch (k) {
        case FanErrorKind::NotStrictlyConvex: return "NotStrictlyConvex";
        case FanErrorKind::NotSmooth: return "NotSmooth";
        case FanErrorKind::BadIntersection: return "BadIntersection";
        case FanErrorKind::OutsideSupport: return "OutsideSupport";
        case FanErrorKind::NotAFace: return "NotAFace";
        default: return "InvalidInput";
    }
}

QVec to_q(const IVec& v) {
    QVec out;
    for (long x : v) out.emplace_back(x);
    return out;
}

std::vector<long> to_long(const QVec& v) {
    std::vector<long> out;
    for (auto& x : v) {
        if (x.get_den() != 1) throw std::invalid_argument("non-integral vector");
        out.push_back(x.get_num().get_si());
    }
    return out;
}

namespace {

std::string vec_str(const IVec& v) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ")";
    return os.str();
}

std::string cone_str(const std::vector<IVec>& g) {
    std::string s = "cone{";
    for (std::size_t i = 0; i < g.size(); ++i) s += (i ? "," : "") + vec_str(g[i]);
    return s + "}";
}

IVec primitive(const IVec& v) {
    long g = 0;
    for (long x : v) g = std::gcd(g, std::labs(x));
    if (g == 0) throw FanError(FanErrorKind::InvalidInput, "zero generator");
    IVec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / g;
    return out;
}

// Unimodular row reduction of the n×k generator matrix; returns U with U G = H and H.
void hermite(const std::vector<IVec>& gens, int n, IMat& U, IMat& H) {
    std::size_t k = gens.size();
    H.assign(static_cast<std::size_t>(n), IVec(k, 0));
    for (std::size_t c = 0; c < k; ++c)
        for (int r = 0; r < n; ++r) H[static_cast<std::size_t>(r)][c] = gens[c][static_cast<std::size_t>(r)];
    U.assign(static_cast<std::size_t>(n), IVec(static_cast<std::size_t>(n), 0));
    for (int i = 0; i < n; ++i) U[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1;
    auto rowop = [&](std::size_t dst, std::size_t src, long f) {
        for (std::size_t j = 0; j < k; ++j) H[dst][j] -= f * H[src][j];
        for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) U[dst][j] -= f * U[src][j];
    };
    std::size_t row = 0;
    for (std::size_t c = 0; c < k && row < static_cast<std::size_t>(n); ++c) {
        while (true) {
            std::size_t best = H.size();
            for (std::size_t r = row; r < H.size(); ++r)
                if (H[r][c] != 0 && (best == H.size() || std::labs(H[r][c]) < std::labs(H[best][c]))) best = r;
            if (best == H.size()) break;
            std::swap(H[best], H[row]);
            std::swap(U[best], U[row]);
            bool done = true;
            for (std::size_t r = row + 1; r < H.size(); ++r) {
                if (H[r][c] == 0) continue;
                rowop(r, row, H[r][c] / H[row][c]);
                if (H[r][c] != 0) done = false;
            }
            if (done) break;
        }
        if (H[row][c] == 0) continue;
        if (H[row][c] < 0) {
            for (auto& x : H[row]) x = -x;
            for (auto& x : U[row]) x = -x;
        }
        for (std::size_t r = 0; r < row; ++r) {
            long f = H[r][c] / H[row][c];
            if (H[r][c] - f * H[row][c] < 0) --f;
            if (f != 0) rowop(r, row, f);
        }
        ++row;
    }
}

IMat inverse_unimodular(const IMat& U) {
    std::size_t n = U.size();
    Mat<Q> a = zero_mat<Q>(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i][j] = U[i][j];
    IMat inv(n, IVec(n, 0));
    for (std::size_t j = 0; j < n; ++j) {
        QVec e(n, Q(0));
        e[j] = 1;
        auto col = exact_solve(a, e);
        for (std::size_t i = 0; i < n; ++i) inv[i][j] = col->at(i).get_num().get_si();
    }
    return inv;
}

Cone make_cone(std::vector<IVec> gens, int n) {
    for (auto& g : gens) {
        if (static_cast<int>(g.size()) != n)
            throw FanError(FanErrorKind::InvalidInput, "generator " + vec_str(g) + " has wrong length");
        g = primitive(g);
    }
    std::sort(gens.begin(), gens.end());
    gens.erase(std::unique(gens.begin(), gens.end()), gens.end());

    Mat<Q> gm = zero_mat<Q>(static_cast<std::size_t>(n), gens.size());
    for (std::size_t c = 0; c < gens.size(); ++c)
        for (int r = 0; r < n; ++r) gm[static_cast<std::size_t>(r)][c] = gens[c][static_cast<std::size_t>(r)];
    if (exact_rank(gm) < gens.size()) {
        // Dependent generators: either the cone contains a line or it is not simplicial.
        Mat<Q> a = gm;
        a.push_back(QVec(gens.size(), Q(1)));
        QVec b(static_cast<std::size_t>(n), Q(0));
        b.push_back(1);
        auto lp = lp_solve<Q>(a, b, QVec(gens.size(), Q(0)), Q(0));
        if (lp.status == LpStatus::Optimal)
            throw FanError(FanErrorKind::NotStrictlyConvex, cone_str(gens) + " contains a line");
        throw FanError(FanErrorKind::NotSmooth, cone_str(gens) + " is not simplicial");
    }
    Cone cone;
    cone.generators = gens;
    cone.dim = static_cast<int>(gens.size());
    IMat U, H;
    hermite(gens, n, U, H);
    for (std::size_t r = 0; r < gens.size(); ++r)
        if (H[r][r] != 1)
            throw FanError(FanErrorKind::NotSmooth, cone_str(gens) + " does not extend to a lattice basis");
    cone.reduce = U;
    IMat inv = inverse_unimodular(U);
    cone.basis.assign(static_cast<std::size_t>(n), IVec(static_cast<std::size_t>(n)));
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) cone.basis[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)] = inv[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return cone;
}

// True when σ ∩ σ' is the cone on their common generators.
bool intersects_in_common_face(const Cone& a, const Cone& b, int n) {
    std::set<IVec> common;
    for (auto& g : a.generators)
        if (std::find(b.generators.begin(), b.generators.end(), g) != b.generators.end()) common.insert(g);
    std::size_t na = a.generators.size(), nb = b.generators.size();
    std::size_t nv = na + nb + 1;
    Mat<Q> m = zero_mat<Q>(static_cast<std::size_t>(n) + 1, nv);
    QVec rhs(static_cast<std::size_t>(n) + 1, Q(0));
    QVec cost(nv, Q(0));
    for (std::size_t j = 0; j < na; ++j) {
        for (int r = 0; r < n; ++r) m[static_cast<std::size_t>(r)][j] = a.generators[j][static_cast<std::size_t>(r)];
        if (!common.count(a.generators[j])) { m[static_cast<std::size_t>(n)][j] = 1; cost[j] = 1; }
    }
    for (std::size_t j = 0; j < nb; ++j) {
        for (int r = 0; r < n; ++r) m[static_cast<std::size_t>(r)][na + j] = -b.generators[j][static_cast<std::size_t>(r)];
        if (!common.count(b.generators[j])) { m[static_cast<std::size_t>(n)][na + j] = 1; cost[na + j] = 1; }
    }
    m[static_cast<std::size_t>(n)][nv - 1] = 1;
    rhs[static_cast<std::size_t>(n)] = 1;
    auto lp = lp_solve<Q>(m, rhs, cost, Q(0));
    return lp.status == LpStatus::Optimal && lp.objective == 0;
}

QVec apply_rows(const IMat& U, const QVec& x, std::size_t from) {
    QVec out;
    for (std::size_t r = from; r < U.size(); ++r) {
        Q acc = 0;
        for (std::size_t c = 0; c < x.size(); ++c) acc += Q(U[r][c]) * x[c];
        out.push_back(acc);
    }
    return out;
}

}  // namespace

bool Fan::is_face(int tau, int sigma) const {
    auto& f = faces.at(static_cast<std::size_t>(sigma));
    return std::find(f.begin(), f.end(), tau) != f.end();
}

int Fan::id_of(std::vector<IVec> gens) const {
    for (auto& g : gens) g = primitive(g);
    std::sort(gens.begin(), gens.end());
    for (std::size_t s = 0; s < cones.size(); ++s)
        if (cones[s].generators == gens) return static_cast<int>(s);
    return -1;
}

Fan validate_fan(int n, const std::vector<std::vector<IVec>>& input) {
    if (n <= 0) throw FanError(FanErrorKind::InvalidInput, "rank must be positive");
    std::vector<Cone> given;
    for (auto& gens : input) given.push_back(make_cone(gens, n));

    // Face closure: every subset of generators of a smooth cone spans a face.
    std::set<std::vector<IVec>> all;
    all.insert(std::vector<IVec>{});
    for (auto& c : given) {
        std::size_t k = c.generators.size();
        for (std::uint64_t m = 1; m < (std::uint64_t(1) << k); ++m) {
            std::vector<IVec> sub;
            for (std::size_t i = 0; i < k; ++i)
                if ((m >> i) & 1) sub.push_back(c.generators[i]);
            all.insert(sub);
        }
    }
    std::vector<std::vector<IVec>> ordered(all.begin(), all.end());
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
    Fan fan;
    fan.n = n;
    for (auto& g : ordered) fan.cones.push_back(make_cone(g, n));

    for (std::size_t i = 0; i < fan.cones.size(); ++i)
        for (std::size_t j = i + 1; j < fan.cones.size(); ++j)
            if (!intersects_in_common_face(fan.cones[i], fan.cones[j], n))
                throw FanError(FanErrorKind::BadIntersection,
                               cone_str(fan.cones[i].generators) + " and " + cone_str(fan.cones[j].generators) +
                                   " do not meet in a common face");

    fan.faces.resize(fan.cones.size());
    for (std::size_t s = 0; s < fan.cones.size(); ++s)
        for (std::size_t t = 0; t < fan.cones.size(); ++t) {
            auto& gs = fan.cones[s].generators;
            bool sub = std::all_of(fan.cones[t].generators.begin(), fan.cones[t].generators.end(),
                                   [&](const IVec& g) { return std::find(gs.begin(), gs.end(), g) != gs.end(); });
            if (sub) fan.faces[s].push_back(static_cast<int>(t));
        }
    return fan;
}

int locate_relint(const QVec& v, const Fan& fan) {
    if (static_cast<int>(v.size()) != fan.n) throw FanError(FanErrorKind::InvalidInput, "vector has wrong length");
    for (std::size_t s = 0; s < fan.cones.size(); ++s) {
        auto& c = fan.cones[s];
        if (c.dim == 0) {
            if (std::all_of(v.begin(), v.end(), [](const Q& x) { return x == 0; })) return static_cast<int>(s);
            continue;
        }
        Mat<Q> a = zero_mat<Q>(static_cast<std::size_t>(fan.n), static_cast<std::size_t>(c.dim));
        for (int j = 0; j < c.dim; ++j)
            for (int r = 0; r < fan.n; ++r) a[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] = c.generators[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
        auto lam = exact_solve(a, v);
        if (!lam) continue;
        if (std::all_of(lam->begin(), lam->end(), [](const Q& x) { return x > 0; })) return static_cast<int>(s);
    }
    throw FanError(FanErrorKind::OutsideSupport, "vector is outside the support of the fan");
}

CompactifiedPoint project_to_stratum(const Fan& fan, int sigma, const QVec& p) {
    auto& c = fan.cones.at(static_cast<std::size_t>(sigma));
    return {sigma, apply_rows(c.reduce, p, static_cast<std::size_t>(c.dim))};
}

CompactifiedPoint stratum_projection(const Fan& fan, int sigma, int tau, const CompactifiedPoint& x) {
    if (x.stratum != tau) throw FanError(FanErrorKind::InvalidInput, "point does not lie on the source stratum");
    if (!fan.is_face(tau, sigma)) throw FanError(FanErrorKind::NotAFace, "source cone is not a face of the target cone");
    if (sigma == tau) return x;
    auto& t = fan.cones.at(static_cast<std::size_t>(tau));
    QVec lift(static_cast<std::size_t>(fan.n), Q(0));
    for (std::size_t i = 0; i < x.coords.size(); ++i)
        for (int r = 0; r < fan.n; ++r)
            lift[static_cast<std::size_t>(r)] += x.coords[i] * Q(t.basis[static_cast<std::size_t>(t.dim) + i][static_cast<std::size_t>(r)]);
    return project_to_stratum(fan, sigma, lift);
}

CompactifiedPoint limit_point(const Fan& fan, const QVec& p, const QVec& v) {
    int s = locate_relint(v, fan);
    return project_to_stratum(fan, s, p);
}

ToricChart toric_chart(const Fan& fan, int rho) {
    if (rho < 0 || rho >= static_cast<int>(fan.cones.size())) throw FanError(FanErrorKind::InvalidInput, "invalid cone id");
    auto& c = fan.cones[static_cast<std::size_t>(rho)];
    ToricChart ch;
    ch.cone = rho;
    ch.basis = c.basis;
    for (int i = 1; i <= c.dim; ++i) ch.infinite_axes.push_back(i);
    return ch;
}

ChartPoint chart_coordinates(const Fan& fan, const ToricChart& chart, const CompactifiedPoint& x) {
    if (!fan.is_face(x.stratum, chart.cone)) throw FanError(FanErrorKind::NotAFace, "point is not in the chart");
    int n = fan.n;
    auto& face = fan.cones[static_cast<std::size_t>(x.stratum)];
    // Lift x to N_R, then express in the chart basis; axes spanning the face are infinite.
    QVec lift(static_cast<std::size_t>(n), Q(0));
    for (std::size_t i = 0; i < x.coords.size(); ++i)
        for (int r = 0; r < n; ++r)
            lift[static_cast<std::size_t>(r)] += x.coords[i] * Q(face.basis[static_cast<std::size_t>(face.dim) + i][static_cast<std::size_t>(r)]);
    Mat<Q> b = zero_mat<Q>(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) b[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = chart.basis[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
    auto u = exact_solve(b, lift);
    ChartPoint cp;
    cp.u = *u;
    auto& rho = fan.cones[static_cast<std::size_t>(chart.cone)];
    for (auto& g : face.generators) {
        auto it = std::find(rho.generators.begin(), rho.generators.end(), g);
        // Chart basis begins with the generators of ρ in sorted order.
        std::size_t axis = static_cast<std::size_t>(it - rho.generators.begin());
        cp.infinite |= Mask(1) << axis;
        cp.u[axis] = 0;
    }
    return cp;
}

Fan orthant_fan(int n) {
    std::vector<IVec> gens;
    for (int i = 0; i < n; ++i) {
        IVec e(static_cast<std::size_t>(n), 0);
        e[static_cast<std::size_t>(i)] = 1;
        gens.push_back(e);
    }
    return validate_fan(n, {gens});
}

Fan projective_plane_fan() {
    IVec a{1, 0}, b{0, 1}, c{-1, -1};
    return validate_fan(2, {{a, b}, {b, c}, {c, a}});
}

}  // namespace trop
