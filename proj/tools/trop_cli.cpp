#include "trop/scene.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

using namespace trop;

namespace {

struct Common {
    double tol = 1e-8;
    std::uint64_t seed = 1;
    int samples = 20;
    std::string format = "json";
    std::string output;
    std::string expect_verdict;
    bool timings = false;
    int jobs = 1;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--tol", c.tol, "numerical tolerance")->capture_default_str();
    app->add_option("--seed", c.seed, "seed for sampled checks")->capture_default_str();
    app->add_option("--samples", c.samples, "number of sampled test forms")->capture_default_str();
    app->add_option("--format", c.format, "report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    app->add_option("-o,--output", c.output, "write the report here instead of stdout");
    app->add_option("--expect-verdict", c.expect_verdict, "exit with 1 unless every task has this verdict");
    app->add_flag("--timings", c.timings, "record per-task wall time (reports are then run-dependent)");
    app->add_option("-j,--jobs", c.jobs, "independent tasks to run at once")->capture_default_str();
}

// Object kind of a standalone input file.
std::string infer_kind(const json& j) {
    if (j.contains("kind")) return j["kind"].get<std::string>();
    if (j.value("shadow", false)) return "shadow";
    if (j.contains("terms")) return "form";
    if (j.contains("builtin")) {
        std::string b = j["builtin"].get<std::string>();
        if (b == "omega_example" || b == "omega_explicit" || b == "tau") return "form";
        if (b == "origin_point_mass_p1") return "shadow";
    }
    return "current";
}

int emit(const Report& rep, const Common& c) {
    std::string text = c.format == "csv" ? rep.to_csv() : rep.to_json().dump(2) + "\n";
    if (c.output.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(c.output);
        if (!out) {
            std::cerr << "cannot write " << c.output << "\n";
            return 2;
        }
        out << text;
    }
    return rep.all_matched() ? 0 : 1;
}

int run_single(json task, const Common& c) {
    if (!c.expect_verdict.empty()) task["expect"] = json{{"verdict", c.expect_verdict}};
    json scene{{"defaults", {{"tol", c.tol}, {"seed", c.seed}, {"samples", c.samples}}}, {"tasks", json::array({task})}};
    Scene s = load_scene(scene);
    return emit(run_scene(s, {c.timings, c.jobs}), c);
}

QVec parse_vector(const std::string& s) {
    QVec v;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) v.push_back(parse_rational(part));
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tropical and complex currents: positivity, decomposition and correspondence checks"};
    app.require_subcommand(1);
    Common c;
    std::string path, direction, tier = "positive", fan_path, p_str, v_str;
    int size = 20;

    auto* run = app.add_subcommand("run", "execute a scene file");
    run->add_option("scene", path, "scene JSON")->required();
    add_common(run, c);

    auto* pos = app.add_subcommand("check-positivity", "positivity of a form, current or shadow current");
    pos->add_option("input", path, "object JSON")->required();
    pos->add_option("--tier", tier, "cone for forms")->check(CLI::IsMember({"strong", "positive", "weak"}));
    add_common(pos, c);

    auto* dec = app.add_subcommand("decompose", "canonical decomposition into stratum pieces");
    dec->add_option("input", path, "current JSON")->required();
    add_common(dec, c);

    auto* trop = app.add_subcommand("tropicalize", "push a shadow current forward or lift a current");
    trop->add_option("direction", direction, "push or lift")->required()->check(CLI::IsMember({"push", "lift"}));
    trop->add_option("input", path, "current JSON")->required();
    add_common(trop, c);

    auto* integ = app.add_subcommand("integrate", "evaluate a current on a field, or compare top-degree integrals");
    integ->add_option("input", path, "JSON with \"field\" and optionally \"current\"")->required();
    add_common(integ, c);

    auto* elmir = app.add_subcommand("el-mir", "extend a current by zero across strata");
    elmir->add_option("input", path, "JSON with \"current\" and \"strata\"")->required();
    add_common(elmir, c);

    auto* corr = app.add_subcommand("verify-correspondence", "push_forward(lift(T)) = T on a suite");
    corr->add_option("input", path, "JSON with a \"currents\" list; a random suite when omitted");
    corr->add_option("--size", size, "size of the random suite")->capture_default_str();
    add_common(corr, c);

    auto* cex = app.add_subcommand("counterexamples", "run the built-in counterexample suite");
    add_common(cex, c);

    auto* lim = app.add_subcommand("limit-point", "limit of p + t v in the toric partial compactification");
    lim->add_option("fan", fan_path, "fan JSON")->required();
    lim->add_option("--p", p_str, "comma-separated point")->required();
    lim->add_option("--v", v_str, "comma-separated direction")->required();
    add_common(lim, c);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            Scene s = load_scene(parse_json_file(path));
            if (!c.expect_verdict.empty())
                for (auto& t : s.tasks) t["expect"]["verdict"] = c.expect_verdict;
            return emit(run_scene(s, {c.timings, c.jobs}), c);
        }
        if (pos->parsed()) {
            json obj = parse_json_file(path);
            std::string kind = infer_kind(obj);
            json task{{"op", "check_positivity"}, {kind, obj}};
            if (kind == "form") task["tier"] = tier;
            return run_single(task, c);
        }
        if (dec->parsed()) return run_single({{"op", "decompose"}, {"current", parse_json_file(path)}}, c);
        if (trop->parsed()) {
            json obj = parse_json_file(path);
            if (direction == "push") return run_single({{"op", "push"}, {"shadow", obj}}, c);
            return run_single({{"op", "lift"}, {"current", obj}}, c);
        }
        if (integ->parsed()) {
            json in = parse_json_file(path);
            json task{{"op", "integrate"}};
            for (auto& [k, v] : in.items()) task[k] = v;
            return run_single(task, c);
        }
        if (elmir->parsed()) {
            json in = parse_json_file(path);
            json task{{"op", "el_mir"}};
            for (auto& [k, v] : in.items()) task[k] = v;
            return run_single(task, c);
        }
        if (corr->parsed()) {
            json task{{"op", "verify_correspondence"}};
            if (!path.empty()) task["currents"] = parse_json_file(path).at("currents");
            else task["random"] = {{"size", size}};
            return run_single(task, c);
        }
        if (cex->parsed()) return run_single({{"op", "counterexamples"}}, c);
        if (lim->parsed()) {
            json task{{"op", "limit_point"}, {"fan", parse_json_file(fan_path)}};
            task["p"] = qvec_to_json(parse_vector(p_str));
            task["v"] = qvec_to_json(parse_vector(v_str));
            return run_single(task, c);
        }
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "ParseError: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "ParseError: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
