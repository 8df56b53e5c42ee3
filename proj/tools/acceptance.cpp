// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.
#include "trop/linalg.hpp"
#include "trop/scene.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

using namespace trop;

namespace {

// Pinned tolerances and budgets.
constexpr double kIntegrationTol = 1e-6;
constexpr double kClosedTol = 1e-8;
constexpr double kUnbalancedResidual = 1e-3;
constexpr double kConeBudgetSec = 30;
constexpr double kIntegrationBudgetSec = 60;
constexpr double kRoundTripBudgetSec = 30;
constexpr int kConePairings = 1000;
constexpr int kOracleAttempts = 1000;
constexpr int kOracleInstances = 60;
constexpr int kOmegaPairings = 10000;
constexpr int kInvolutionForms = 1000;
constexpr int kClosedForms = 100;

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

LagerbergCurrent random_family(Rng& rng) {
    int n = 1 + static_cast<int>(rng.uniform_int(0, 2));
    int q = static_cast<int>(rng.uniform_int(0, n));
    Mask inf = static_cast<Mask>(rng.uniform_int(0, (1L << n) - 1));
    return random_closed_positive(rng, n, q, inf);
}

bool has_boundary_piece(const LagerbergCurrent& t) {
    for (auto& [key, m] : t.co) {
        for (auto& a : m.atoms)
            if (a.pt.infinite != 0) return true;
        for (auto& d : m.densities)
            if (d.stratum != 0) return true;
    }
    return false;
}

// Brute-force positivity: positive (p,p) forms pair nonnegatively with every positive square of
// complementary degree, and an indefinite instance is caught by one of many sampled squares.
Answer sampled_oracle(Rng& rng, const LForm& a, int n, int p) {
    for (int t = 0; t < kOracleAttempts; ++t) {
        // A fine grid of coefficients: negative cones of nearly degenerate instances are narrow.
        LForm beta = random_lform(rng, n, n - p, 0, 40, 9);
        if (beta.is_zero()) continue;
        if (dual_pairing(a, positive_square(beta)) < 0) return Answer::No;
    }
    return Answer::Yes;
}

Outcome cone_structure() {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(1001);
    int negative = 0;
    for (int k = 0; k < kConePairings; ++k) {
        int n = static_cast<int>(rng.uniform_int(1, 4));
        int p = static_cast<int>(rng.uniform_int(0, n));
        LForm a = random_positive(rng, n, p, 2), b = random_positive(rng, n, n - p, 2);
        if (dual_pairing(a, b) < 0) ++negative;
    }
    int disagree = 0, yes = 0, no = 0;
    for (int k = 0; k < kOracleInstances; ++k) {
        int n = static_cast<int>(rng.uniform_int(2, 4));
        int p = static_cast<int>(rng.uniform_int(1, n - 1));
        LForm a1 = random_lform(rng, n, p, 0), a2 = random_lform(rng, n, p, 0);
        Q c2 = k % 2 == 0 ? Q(1) : Q(-1);
        LForm a = positive_square(a1) + c2 * positive_square(a2);
        if (a.is_zero()) continue;
        Answer v = positivity_verdict(a, Tier::Positive).answer;
        Answer o = sampled_oracle(rng, a, n, p);
        (v == Answer::Yes ? yes : no) += 1;
        if (v != o) ++disagree;
    }
    double sec = seconds_since(t0);
    Outcome out;
    out.pass = negative == 0 && disagree == 0 && yes > 0 && no > 0 && sec < kConeBudgetSec;
    out.detail = std::to_string(kConePairings) + " pairings, " + std::to_string(negative) + " negative; oracle disagreements " +
                 std::to_string(disagree) + " over " + std::to_string(yes + no) + " rank<=2 instances (" +
                 std::to_string(yes) + " Yes, " + std::to_string(no) + " No); " + fmt(sec) + " s";
    return out;
}

Outcome omega_example_checks() {
    LForm w = omega_example();
    Rng rng(1002);
    int nonzero = 0;
    for (int k = 0; k < kOmegaPairings; ++k) {
        LForm a = d1(random_qvec(rng, 4, 5, 3)), b = d1(random_qvec(rng, 4, 5, 3));
        LForm g = wedge(wedge(wedge(a, apply_J(a)), b), apply_J(b));
        if (dual_pairing(w, g) != 0) ++nonzero;
    }
    VerdictOptions opt;
    opt.pool_size = 2000;
    opt.vanishing_pairing_certificate = true;
    bool weak_ok = true;
    for (Q s : {Q(1), Q(-1)}) {
        auto v = positivity_verdict(s * w, Tier::Weak, opt);
        weak_ok = weak_ok && v.answer == Answer::Yes && verify_verdict(s * w, v);
    }
    auto vp = positivity_verdict(w, Tier::Positive);
    auto ldl = exact_ldl(gram_form(w).m);
    bool positive_fails = vp.answer == Answer::No && !ldl.psd && vp.witness_pairing && *vp.witness_pairing < 0 &&
                          verify_verdict(w, vp);
    Outcome out;
    out.pass = nonzero == 0 && weak_ok && positive_fails;
    out.detail = std::to_string(nonzero) + "/" + std::to_string(kOmegaPairings) + " nonzero pairings; +-weak " +
                 (weak_ok ? "Yes" : "not Yes") + "; positive " + to_string(vp.answer);
    return out;
}

Outcome omega_explicit_checks() {
    LForm ex = omega_explicit();
    auto vp = positivity_verdict(ex, Tier::Positive);
    auto ldl = exact_ldl(gram_form(ex).m);
    VerdictOptions opt;
    opt.pool_size = 2000;
    auto vs = positivity_verdict(ex, Tier::Strong, opt);
    Outcome out;
    out.pass = vp.answer == Answer::Yes && verify_verdict(ex, vp) && ldl.psd && ldl.rank == 2 && vs.answer == Answer::No &&
               vs.plucker.has_value() && verify_verdict(ex, vs);
    out.detail = "positive " + to_string(vp.answer) + ", rank " + std::to_string(ldl.rank) + ", strong " +
                 to_string(vs.answer) + (vs.plucker ? " with Plucker witness" : " without witness");
    return out;
}

Outcome involutions() {
    Rng rng(1004);
    int bad12 = 0, bad13 = 0, bad18 = 0;
    for (int k = 0; k < kInvolutionForms; ++k) {
        int n = static_cast<int>(rng.uniform_int(1, 4));
        // Degree-one forms: F and conjugation anticommute.
        CForm eta = random_cform(rng, n, 1, 0) + random_cform(rng, n, 0, 1);
        if (apply_F(conjugate(eta)) != -conjugate(apply_F(eta))) ++bad12;
        int p = static_cast<int>(rng.uniform_int(0, n)), q = static_cast<int>(rng.uniform_int(0, n));
        CForm e = random_cform(rng, n, p, q);
        CForm rhs = apply_F(conjugate(e));
        if ((p + q) & 1) rhs = -rhs;
        if (conjugate(apply_F(e)) != rhs) ++bad13;
        LForm a = random_lform(rng, n, p, q);
        if (embed_complex(apply_J(a)) != ipow(p + q) * conjugate(embed_complex(a))) ++bad18;
    }
    Outcome out;
    out.pass = bad12 == 0 && bad13 == 0 && bad18 == 0;
    out.detail = "failures on " + std::to_string(kInvolutionForms) + " forms each: " + std::to_string(bad12) + ", " +
                 std::to_string(bad13) + ", " + std::to_string(bad18);
    return out;
}

Outcome integration_comparison() {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(1005);
    double worst = 0;
    for (int k = 0; k < 4; ++k) {
        Q c0 = rng.small_rational(2, 2), c1 = rng.small_rational(2, 2);
        CoefficientFn f = CoefficientFn::bump(2, 0, c0 - 1, c0 + 1) * CoefficientFn::bump(2, 1, c1 - 1, c1 + Q(3, 2));
        CoefficientFn poly = CoefficientFn::constant(2, 1) + CoefficientFn::monomial(2, {1, 1}, rng.small_rational(3, 2)) +
                             CoefficientFn::monomial(2, {2, 0}, rng.small_rational(3, 2));
        auto a = LagerbergFormField::from_form(tau(2), f * poly);
        double tr = integrate_top(a, kIntegrationTol);
        double cx = integrate_top(trop_pullback_field(a), kIntegrationTol);
        worst = std::max(worst, std::abs(tr - cx));
    }
    double sec = seconds_since(t0);
    Outcome out;
    out.pass = worst <= 2 * kIntegrationTol && sec < kIntegrationBudgetSec;
    out.detail = "max |tropical - complex| = " + fmt(worst) + " (bound " + fmt(2 * kIntegrationTol) + "); " + fmt(sec) + " s";
    return out;
}

Outcome round_trip() {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(43);
    std::vector<LagerbergCurrent> suite;
    bool boundary = false;
    for (int k = 0; k < 20; ++k) {
        suite.push_back(random_family(rng));
        boundary = boundary || has_boundary_piece(suite.back());
    }
    auto rep = round_trip_verify(suite);
    int exact = 0;
    for (auto& e : rep.entries) exact += e.exact;
    double sec = seconds_since(t0);
    Outcome out;
    out.pass = rep.ok && boundary && exact == 20 && sec < kRoundTripBudgetSec;
    out.detail = std::to_string(exact) + "/20 exact, boundary pieces " + (boundary ? "present" : "absent") + "; " +
                 fmt(sec) + " s";
    return out;
}

Outcome decomposition() {
    Rng rng(1007);
    std::vector<LagerbergCurrent> inputs;
    for (int k = 0; k < 12; ++k) inputs.push_back(random_family(rng));
    inputs.push_back(integration_current(tropical_line()));
    inputs.push_back(integration_current(random_balanced_fan(rng, 4, {Q(1), Q(-1)})));
    int resum_bad = 0, not_positive = 0, not_closed = 0, pieces = 0;
    for (auto& t : inputs) {
        auto parts = canonical_decomposition(t);
        LagerbergCurrent sum(t.U, t.q);
        for (auto& [sigma, part] : parts) {
            sum = sum + part;
            ++pieces;
            if (positivity_check(part).answer != Answer::Yes) ++not_positive;
            if (closedness_test(part, 20, kClosedTol, 3).closed != Answer::Yes) ++not_closed;
        }
        if (!same_current(sum, t)) ++resum_bad;
    }
    Outcome out;
    out.pass = resum_bad == 0 && not_positive == 0 && not_closed == 0;
    out.detail = std::to_string(inputs.size()) + " closed positive currents, " + std::to_string(pieces) +
                 " stratum pieces; resum failures " + std::to_string(resum_bad) + ", non-positive " +
                 std::to_string(not_positive) + ", not closed " + std::to_string(not_closed);
    return out;
}

Outcome counterexamples() {
    auto rep = run_scene(load_scene(json::parse(R"({"tasks": [{"op": "counterexamples"}]})")));
    auto& cases = rep.tasks.at(0).record["result"]["cases"];
    int matched = 0;
    std::string missed;
    for (auto& c : cases) {
        if (c["matched"].get<bool>()) ++matched;
        else missed += " [" + c["name"].get<std::string>() + "]";
    }
    Outcome out;
    out.pass = matched == static_cast<int>(cases.size()) && cases.size() == 6;
    out.detail = std::to_string(matched) + "/" + std::to_string(cases.size()) + " cases as expected" + missed;
    return out;
}

Outcome tropical_cycles() {
    auto line = tropical_line();
    auto t = integration_current(line);
    auto bal = balancing_check(line);
    auto cl = closedness_test(t, kClosedForms, kClosedTol, 9);
    auto pos = positivity_check(t);
    auto s = lift(t);
    bool rt = same_current(push_forward(s), t) && round_trip_verify({t}).ok;

    auto heavy = tropical_line({Q(0), Q(0)}, 2, 1, 1);
    auto hb = balancing_check(heavy);
    auto hc = closedness_test(integration_current(heavy), kClosedForms, kClosedTol, 9);
    Outcome out;
    out.pass = bal.balanced && cl.closed == Answer::Yes && cl.max_residual <= kClosedTol && pos.answer == Answer::Yes && rt &&
               !hb.balanced && hb.vertex.has_value() && hc.closed == Answer::No && hc.max_residual > kUnbalancedResidual;
    out.detail = std::string("line: ") + (bal.balanced ? "balanced" : "unbalanced") + ", residual " + fmt(cl.max_residual) +
                 ", positive " + to_string(pos.answer) + ", round trip " + (rt ? "exact" : "inexact") +
                 "; weight 2: " + (hb.balanced ? "balanced" : "unbalanced") + (hb.vertex ? " at a face" : "") +
                 ", residual " + fmt(hc.max_residual);
    return out;
}

Outcome stratum_limits() {
    Fan f = projective_plane_fan();
    Rng rng(1010);
    int bad = 0;
    std::vector<QVec> pts = {{Q(7), Q(-2)}};
    for (int k = 0; k < 20; ++k) pts.push_back({rng.small_rational(9, 4), rng.small_rational(9, 4)});
    for (auto& p : pts) {
        auto pt = limit_point(f, p, {Q(0), Q(1)});
        bool ok = f.cones.at(static_cast<std::size_t>(pt.stratum)).generators == std::vector<IVec>{{0, 1}} &&
                  pt.coords == QVec{p[0]};
        if (!ok) ++bad;
    }
    Outcome out;
    out.pass = bad == 0;
    out.detail = std::to_string(pts.size() - static_cast<std::size_t>(bad)) + "/" + std::to_string(pts.size()) +
                 " limits on the ray stratum of (0,1) with coordinate p_1";
    return out;
}

Outcome closed_positive_c_finite() {
    Rng rng(1011);
    int passing = 0, c_finite = 0, attempts = 0;
    while (passing < 50 && attempts < 500) {
        ++attempts;
        auto t = random_family(rng);
        if (closedness_test(t, 10, kClosedTol, 11).closed != Answer::Yes) continue;
        if (positivity_check(t).answer != Answer::Yes) continue;
        ++passing;
        if (c_finite_test(t).answer == Answer::Yes) ++c_finite;
    }
    Outcome out;
    out.pass = passing == 50 && c_finite == 50;
    out.detail = std::to_string(c_finite) + "/" + std::to_string(passing) + " C-finite (" + std::to_string(attempts) +
                 " drawn)";
    return out;
}

}  // namespace

int main() {
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"cone structure", cone_structure},
        {"weakly positive example", omega_example_checks},
        {"explicit example", omega_explicit_checks},
        {"involution identities", involutions},
        {"tropical vs complex integration", integration_comparison},
        {"correspondence round trip", round_trip},
        {"canonical decomposition", decomposition},
        {"counterexample suite", counterexamples},
        {"tropical cycles", tropical_cycles},
        {"stratum limits", stratum_limits},
        {"closed positive implies C-finite", closed_positive_c_finite},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %zu %s: %s (%s)\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
