#include "doctest.h"

#include "trop/scene.hpp"

#include <cmath>

using namespace trop;

namespace {

std::string error_kind(const std::function<void()>& f) {
    try {
        f();
    } catch (const IoError& e) {
        return e.kind;
    }
    return "none";
}

json p2_scene() {
    return json::parse(R"({
      "fan": {"rank": 2, "cones": [[[1, 0], [0, 1]], [[0, 1], [-1, -1]], [[-1, -1], [1, 0]]]},
      "tasks": [{"op": "limit_point", "p": [7, -2], "v": [0, 1], "expect": {"cone": [[0, 1]], "coords": [7]}}]
    })");
}

}  // namespace

TEST_CASE("currents and shadows survive a JSON round trip") {
    Rng rng(61);
    for (int k = 0; k < 20; ++k) {
        int n = static_cast<int>(rng.uniform_int(1, 3));
        int q = static_cast<int>(rng.uniform_int(0, n));
        auto t = random_closed_positive(rng, n, q, static_cast<Mask>(rng.uniform_int(0, (1L << n) - 1)));
        auto back = current_from_json(json::parse(to_json(t).dump()));
        CHECK(same_current(back, t));
        auto s = lift(t);
        CHECK(same_shadows(shadow_from_json(json::parse(to_json(s).dump())), s));
    }
    auto line = integration_current(tropical_line());
    CHECK(same_current(current_from_json(to_json(line)), line));
    auto ker = origin_point_mass_p1();
    auto kback = shadow_from_json(to_json(ker));
    CHECK(kback.kernel.size() == 1);
    CHECK(push_forward(kback).is_zero());
}

TEST_CASE("forms and fields survive a JSON round trip") {
    Rng rng(62);
    for (int k = 0; k < 50; ++k) {
        int n = static_cast<int>(rng.uniform_int(1, 4));
        LForm a = random_lform(rng, n, static_cast<int>(rng.uniform_int(0, n)), static_cast<int>(rng.uniform_int(0, n)));
        CHECK(lform_from_json(json::parse(to_json(a).dump())) == a);
    }
    for (int k = 0; k < 10; ++k) {
        OpenSet U = OpenSet::whole(2, static_cast<Mask>(rng.uniform_int(0, 3)));
        auto f = random_test_field(rng, U, 1, 1, 2);
        auto g = field_from_json(json::parse(to_json(f).dump()));
        CHECK(g == f);
        CHECK(g.threshold == f.threshold);
    }
    CHECK(q_to_json(Q(3, 4)) == "3/4");
    CHECK(q_to_json(Q(-5)) == -5);
    CHECK(q_from_json("6/8") == Q(3, 4));
}

TEST_CASE("malformed and invalid input is rejected with its error kind") {
    CHECK(error_kind([] { q_from_json("x/2"); }) == "ParseError");
    CHECK(error_kind([] { q_from_json(0.5); }) == "ParseError");
    CHECK(error_kind([] { lform_from_json(json::parse(R"({"n": 2, "terms": [{"I": [3], "J": [1], "c": 1}]})")); }) ==
          "ParseError");
    CHECK(error_kind([] { current_from_json(json::parse(R"({"n": 2, "q": 1})")); }) == "ParseError");
    CHECK(error_kind([] { fan_from_json(json::parse(R"({"rank": 2, "cones": [[[1, 0], [-1, 0]]]})")); }) ==
          "ValidationError");
    // A density reaching the stratum where its own co-coefficient lives is rejected by the library.
    CHECK(error_kind([] {
              current_from_json(json::parse(R"({"n": 1, "q": 1, "U": {"infinite": [1]}, "cocoeffs": [
                {"I": [1], "J": [1], "measure": {"atoms": [{"at": {"infinite": [1], "u": [0]}, "w": 1}]}}]})"));
          }) == "ValidationError");

    CHECK(error_kind([] { load_scene(json::parse(R"({"tasks": [{"op": "no_such_op"}]})")); }) == "ParseError");
    CHECK(error_kind([] { load_scene(json::parse(R"({"tasks": [{"op": "c_finite", "current": "missing"}]})")); }) ==
          "ValidationError");
    CHECK(error_kind([] {
              load_scene(json::parse(R"({"objects": {"f": {"kind": "form", "builtin": "tau", "n": 2}},
                                          "tasks": [{"op": "c_finite", "current": "f"}]})"));
          }) == "ValidationError");
    // Chart of the ray (0,1) has one infinite axis; a current infinite along two axes does not fit.
    CHECK(error_kind([] {
              load_scene(json::parse(R"({"fan": {"builtin": "projective_plane"},
                "objects": {"c": {"kind": "current", "chart": [[0, 1]], "n": 2, "q": 0,
                                  "U": {"infinite": [1, 2]}, "cocoeffs": []}}})"));
          }) == "ValidationError");
    CHECK(error_kind([] {
              load_scene(json::parse(R"({"fan": {"builtin": "projective_plane"},
                "objects": {"c": {"kind": "current", "chart": [[0, 1]], "n": 2, "q": 0,
                                  "U": {"infinite": [1]}, "cocoeffs": []}}})"));
          }) == "none");
}

TEST_CASE("empty scene gives an empty report") {
    auto rep = run_scene(load_scene(json::parse(R"({"tasks": []})")));
    CHECK(rep.tasks.empty());
    CHECK(rep.all_matched());
    CHECK(rep.to_json()["tasks"].empty());
}

TEST_CASE("limit point task on the projective plane") {
    auto rep = run_scene(load_scene(p2_scene()));
    REQUIRE(rep.tasks.size() == 1);
    CHECK(rep.tasks[0].matched);
    auto& r = rep.tasks[0].record["result"];
    CHECK(r["cone"] == json::parse("[[0, 1]]"));
    CHECK(r["coords"] == json::parse("[7]"));

    auto wrong = p2_scene();
    wrong["tasks"][0]["expect"]["coords"] = json::parse("[-2]");
    auto bad = run_scene(load_scene(wrong));
    CHECK_FALSE(bad.all_matched());
    CHECK(bad.tasks[0].record["mismatches"].size() == 1);
}

TEST_CASE("counterexample suite flags the fast-growing density with a ray") {
    auto rep = run_scene(load_scene(json::parse(R"({"tasks": [{"op": "counterexamples"},
        {"op": "c_finite", "current": {"builtin": "gaussian_density"}, "expect": {"answer": "No"}}]})")));
    CHECK(rep.all_matched());
    auto& cases = rep.tasks[0].record["result"]["cases"];
    REQUIRE(cases.size() == 6);
    for (auto& c : cases) CHECK_MESSAGE(c["matched"].get<bool>(), c["name"].get<std::string>());
    CHECK(cases[0]["observed"]["c_finite"] == "No");
    CHECK(cases[0]["observed"].contains("ray"));
    CHECK(rep.tasks[1].record["result"].contains("ray"));
}

TEST_CASE("reports are byte-identical for fixed seed and tolerance") {
    json scene = json::parse(R"({
      "defaults": {"seed": 5, "samples": 10},
      "objects": {"line": {"kind": "current", "complex": {"builtin": "tropical_line"}},
                  "w": {"kind": "form", "builtin": "omega_example"}},
      "tasks": [{"op": "closedness", "current": "line"},
                {"op": "check_positivity", "current": "line"},
                {"op": "check_positivity", "form": "w"},
                {"op": "verify_correspondence", "random": {"size": 4}},
                {"op": "counterexamples"}]
    })");
    auto s = load_scene(scene);
    std::string a = run_scene(s).to_json().dump();
    std::string b = run_scene(s).to_json().dump();
    RunOptions par;
    par.jobs = 4;
    std::string c = run_scene(s, par).to_json().dump();
    CHECK(a == b);
    CHECK(a == c);
    CHECK(run_scene(s).to_csv() == run_scene(s).to_csv());
}

TEST_CASE("witnesses in reports re-verify through the library") {
    auto rep = run_scene(load_scene(json::parse(R"({"tasks": [
        {"op": "check_positivity", "form": {"builtin": "omega_example"}, "tier": "positive"},
        {"op": "check_positivity", "current": {"builtin": "double_exponential_evaluator"}},
        {"op": "c_finite", "current": {"builtin": "exponential_density", "rate": 2}}]})")));
    auto& f = rep.tasks[0].record["result"];
    REQUIRE(f.contains("witness"));
    LForm w = lform_from_json(f["witness"]);
    Q pairing = dual_pairing(omega_example(), w);
    CHECK(pairing < 0);
    CHECK(pairing == q_from_json(f["witness_pairing"]));

    auto& c = rep.tasks[1].record["result"];
    REQUIRE(c.contains("witness_form"));
    auto field = field_from_json(c["witness_form"]);
    double v = evaluate(double_exponential_evaluator_current(), field, 1e-10);
    CHECK(v < 0);
    CHECK(v == doctest::Approx(c["witness_value"].get<double>()).epsilon(1e-6));

    auto& r = rep.tasks[2].record["result"];
    REQUIRE(r.contains("ray"));
    // Along the witness ray the weighted density e^{2u} e^{-2u} stays at 1, so its mass is infinite.
    CHECK(q_from_json(r["ray"][0]) > 0);
}

TEST_CASE("task errors are recorded with their kind") {
    auto rep = run_scene(load_scene(json::parse(R"({"tasks": [
        {"op": "lift", "current": {"builtin": "gaussian_density"}, "expect": {"verdict": "NotCFinite"}},
        {"op": "limit_point", "p": [0, 0], "v": [1, 0]}]})")));
    CHECK(rep.tasks[0].matched);
    CHECK(rep.tasks[1].record["result"]["error"]["kind"] == "ValidationError");
}
