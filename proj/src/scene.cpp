#include "trop/scene.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <set>
#include <sstream>

namespace trop {

namespace {

const std::set<std::string> kKinds = {"form", "current", "shadow", "complex", "field"};

// Keys that may hold either an object name or an inline definition, with the kind they expect.
const std::vector<std::pair<std::string, std::string>> kRefKeys = {
    {"form", "form"}, {"current", "current"}, {"shadow", "shadow"}, {"complex", "complex"}, {"field", "field"}};

[[noreturn]] void invalid(const std::string& msg) { throw IoError("ValidationError", msg); }

std::string kind_of(const json& obj) {
    if (!obj.is_object() || !obj.contains("kind") || !obj["kind"].is_string()) throw IoError("ParseError", "object without a kind");
    std::string k = obj["kind"].get<std::string>();
    if (!kKinds.count(k)) throw IoError("ParseError", "unknown object kind '" + k + "'");
    return k;
}

void parse_object(const std::string& kind, const json& j) {
    if (kind == "form") lform_from_json(j);
    else if (kind == "current") current_from_json(j);
    else if (kind == "shadow") shadow_from_json(j);
    else if (kind == "complex") complex_from_json(j);
    else field_from_json(j);
}

const json& resolve(const Scene& s, const json& task, const std::string& key) {
    const json& v = task.at(key);
    if (v.is_string()) return s.objects.at(v.get<std::string>());
    return v;
}

double tol_of(const Scene& s, const json& t) { return t.contains("tol") ? t["tol"].get<double>() : s.defaults.tol; }
std::uint64_t seed_of(const Scene& s, const json& t) {
    return t.contains("seed") ? t["seed"].get<std::uint64_t>() : s.defaults.seed;
}
int samples_of(const Scene& s, const json& t) { return t.contains("samples") ? t["samples"].get<int>() : s.defaults.samples; }

Tier tier_of(const json& t) {
    std::string k = t.contains("tier") ? t["tier"].get<std::string>() : "positive";
    if (k == "strong") return Tier::Strong;
    if (k == "weak") return Tier::Weak;
    if (k == "positive") return Tier::Positive;
    throw IoError("ParseError", "unknown tier '" + k + "'");
}

LagerbergCurrent random_suite_member(Rng& rng) {
    int n = 1 + static_cast<int>(rng.uniform_int(0, 2));
    int q = static_cast<int>(rng.uniform_int(0, n));
    Mask inf = static_cast<Mask>(rng.uniform_int(0, (1L << n) - 1));
    return random_closed_positive(rng, n, q, inf);
}

struct Outcome {
    json result;
    std::string verdict;
};

Outcome op_limit_point(const Scene& s, const json& t) {
    Fan fan = t.contains("fan") ? fan_from_json(t["fan"]) : s.fan ? *s.fan : throw IoError("ValidationError", "limit_point needs a fan");
    auto pt = limit_point(fan, qvec_from_json(t.at("p")), qvec_from_json(t.at("v")));
    return {to_json(pt, fan), "stratum " + std::to_string(pt.stratum)};
}

Outcome op_check_positivity(const Scene& s, const json& t) {
    if (t.contains("form")) {
        LForm a = lform_from_json(resolve(s, t, "form"));
        VerdictOptions vo;
        vo.seed = seed_of(s, t);
        if (t.contains("pool_size")) vo.pool_size = t["pool_size"].get<std::size_t>();
        if (t.contains("vanishing_pairing_certificate")) vo.vanishing_pairing_certificate = t["vanishing_pairing_certificate"].get<bool>();
        auto v = positivity_verdict(a, tier_of(t), vo);
        json r = to_json(v);
        r["verified"] = verify_verdict(a, v);
        return {r, to_string(v.answer)};
    }
    if (t.contains("shadow")) {
        auto sh = shadow_from_json(resolve(s, t, "shadow"));
        auto r = complex_positivity_check(sh, samples_of(s, t), seed_of(s, t), tol_of(s, t));
        return {to_json(r), to_string(r.answer)};
    }
    auto cur = current_from_json(resolve(s, t, "current"));
    auto r = positivity_check(cur, samples_of(s, t), seed_of(s, t), tol_of(s, t));
    return {to_json(r), to_string(r.answer)};
}

Outcome op_closedness(const Scene& s, const json& t) {
    auto cur = current_from_json(resolve(s, t, "current"));
    auto r = closedness_test(cur, samples_of(s, t), tol_of(s, t), seed_of(s, t));
    return {to_json(r), to_string(r.closed)};
}

Outcome op_c_finite(const Scene& s, const json& t) {
    auto r = c_finite_test(current_from_json(resolve(s, t, "current")));
    return {to_json(r), to_string(r.answer)};
}

Outcome op_balancing(const Scene& s, const json& t) {
    WeightedComplex c;
    if (t.contains("complex")) c = complex_from_json(resolve(s, t, "complex"));
    else {
        auto cur = current_from_json(resolve(s, t, "current"));
        if (!cur.complex) invalid("balancing needs a weighted complex");
        c = *cur.complex;
    }
    auto r = balancing_check(c);
    return {to_json(r), r.balanced ? "Balanced" : "Unbalanced"};
}

Outcome op_decompose(const Scene& s, const json& t) {
    auto cur = current_from_json(resolve(s, t, "current"));
    bool check_closed = !t.contains("check_closed") || t["check_closed"].get<bool>();
    auto parts = canonical_decomposition(cur);
    json strata = json::array();
    LagerbergCurrent sum(cur.U, cur.q);
    bool all_ok = true;
    for (auto& [sigma, part] : parts) {
        sum = sum + part;
        json e{{"stratum", mask_to_json(sigma)}, {"current", to_json(part)}};
        auto pos = positivity_check(part, samples_of(s, t), seed_of(s, t), tol_of(s, t));
        e["positive"] = to_string(pos.answer);
        all_ok = all_ok && pos.answer == Answer::Yes;
        if (check_closed) {
            auto cl = closedness_test(part, samples_of(s, t), tol_of(s, t), seed_of(s, t));
            e["closed"] = to_string(cl.closed);
            e["max_residual"] = cl.max_residual;
        }
        strata.push_back(e);
    }
    bool exact = same_current(sum, cur);
    return {json{{"resum_exact", exact}, {"all_positive", all_ok}, {"strata", strata}}, exact ? "exact" : "mismatch"};
}

Outcome op_push(const Scene& s, const json& t) {
    auto sh = shadow_from_json(resolve(s, t, "shadow"));
    auto cur = push_forward(sh);
    return {json{{"current", to_json(cur)}, {"zero", cur.is_zero()}, {"shadow_zero", sh.is_zero()}},
            cur.is_zero() ? "zero" : "nonzero"};
}

Outcome op_lift(const Scene& s, const json& t) {
    auto cur = current_from_json(resolve(s, t, "current"));
    auto sh = lift(cur);
    bool back = same_current(push_forward(sh), cur);
    return {json{{"shadow", to_json(sh)}, {"round_trip_exact", back}}, "lifted"};
}

Outcome op_integrate(const Scene& s, const json& t) {
    double tol = tol_of(s, t);
    auto field = field_from_json(resolve(s, t, "field"));
    if (t.contains("current")) {
        auto cur = current_from_json(resolve(s, t, "current"));
        double v = evaluate(cur, field, tol);
        return {json{{"value", v}}, "evaluated"};
    }
    double trop_side = integrate_top(field, tol);
    double cplx_side = integrate_top(trop_pullback_field(field), tol);
    double diff = std::abs(trop_side - cplx_side);
    bool agree = diff <= 2 * tol;
    return {json{{"tropical", trop_side}, {"complex", cplx_side}, {"difference", diff}, {"within", 2 * tol}},
            agree ? "agree" : "disagree"};
}

Outcome op_el_mir(const Scene& s, const json& t) {
    auto cur = current_from_json(resolve(s, t, "current"));
    std::vector<Mask> strata;
    for (auto& e : t.at("strata")) strata.push_back(mask_from_json(e, cur.n));
    auto ext = extend_by_zero(cur, strata, samples_of(s, t), tol_of(s, t), seed_of(s, t));
    return {json{{"current", to_json(ext.current)}, {"closed", to_json(ext.closed)}}, to_string(ext.closed.closed)};
}

Outcome op_verify_correspondence(const Scene& s, const json& t) {
    std::vector<LagerbergCurrent> suite;
    if (t.contains("currents"))
        for (auto& e : t["currents"]) suite.push_back(current_from_json(e.is_string() ? s.objects.at(e.get<std::string>()) : e));
    if (t.contains("random")) {
        Rng rng(seed_of(s, t));
        int size = t["random"].value("size", 20);
        for (int k = 0; k < size; ++k) suite.push_back(random_suite_member(rng));
    }
    auto rep = round_trip_verify(suite);
    json entries = json::array();
    for (auto& e : rep.entries)
        entries.push_back({{"label", e.label}, {"exact", e.exact}, {"injective", e.injective}, {"message", e.message}});
    return {json{{"ok", rep.ok}, {"size", suite.size()}, {"entries", entries}}, rep.ok ? "exact" : "failed"};
}

Outcome op_compat(const Scene& s, const json& t) {
    auto sh = shadow_from_json(resolve(s, t, "shadow"));
    json checks = json::array();
    bool ok = true;
    for (auto& c : compat_checks(sh)) {
        checks.push_back({{"name", c.name}, {"passed", to_string(c.passed)}, {"message", c.message}});
        ok = ok && c.passed == Answer::Yes;
    }
    return {json{{"checks", checks}}, ok ? "Yes" : "No"};
}

Outcome op_cocoefficients(const Scene& s, const json& t) {
    auto cur = current_from_json(resolve(s, t, "current"));
    json list = json::array();
    bool measures = true;
    for (auto& [key, m] : cur.co) {
        list.push_back({{"I", mask_to_json(key.first)}, {"J", mask_to_json(key.second)}, {"measure", m.is_measure()},
                        {"atoms", m.atoms.size()}, {"densities", m.densities.size()},
                        {"derivative_atoms", m.derivative_atoms.size()}});
        measures = measures && m.is_measure();
    }
    return {json{{"cocoeffs", list}}, measures ? "measure" : "non-measure"};
}

json check_case(const std::string& name, json observed, const json& expected) {
    bool ok = true;
    for (auto& [k, v] : expected.items()) ok = ok && observed.contains(k) && observed[k] == v;
    return json{{"name", name}, {"observed", std::move(observed)}, {"expected", expected}, {"matched", ok}};
}

std::string error_kind(const std::function<void()>& f) {
    try {
        f();
    } catch (const CurrentError& e) {
        return e.kind;
    } catch (const MeasureError& e) {
        return e.kind;
    }
    return "none";
}

Outcome op_counterexamples(const Scene& s, const json& t) {
    int samples = samples_of(s, t);
    std::uint64_t seed = seed_of(s, t);
    double tol = tol_of(s, t);
    json cases = json::array();

    {
        auto g = gaussian_density_current();
        auto cf = c_finite_test(g);
        json obs{{"positive", to_string(positivity_check(g, samples, seed, tol).answer)},
                 {"c_finite", to_string(cf.answer)},
                 {"ray_witness", cf.detail.ray.has_value()},
                 {"closed", to_string(closedness_test(g, samples, tol, seed).closed)}};
        if (cf.detail.ray) obs["ray"] = qvec_to_json(*cf.detail.ray);
        cases.push_back(check_case("gaussian density",
                                   obs, {{"positive", "Yes"}, {"c_finite", "No"}, {"ray_witness", true}, {"closed", "No"}}));
    }
    {
        auto e = exponential_density_current(Q(2));
        auto cf = c_finite_test(e);
        cases.push_back(check_case("exponential density of rate 2",
                                   {{"c_finite", to_string(cf.answer)}, {"ray_witness", cf.detail.ray.has_value()}},
                                   {{"c_finite", "No"}}));
    }
    {
        auto d = double_exponential_evaluator_current();
        auto pos = positivity_check(d, samples, seed, tol);
        json obs{{"closed", to_string(closedness_test(d, samples, tol, seed).closed)},
                 {"positive", to_string(pos.answer)},
                 {"negative_witness", pos.witness_form.has_value() && pos.witness_value < 0},
                 {"lift", error_kind([&] { lift(d); })}};
        if (pos.witness_form) {
            obs["witness_form"] = to_json(*pos.witness_form);
            obs["witness_value"] = pos.witness_value;
        }
        cases.push_back(check_case("double exponential evaluator", obs,
                                   {{"closed", "Yes"}, {"positive", "No"}, {"negative_witness", true}, {"lift", "NotPositive"}}));
    }
    {
        auto k = origin_point_mass_p1();
        cases.push_back(check_case("point mass at the origin of P^1",
                                   {{"push_forward_zero", push_forward(k).is_zero()}, {"current_zero", k.is_zero()}},
                                   {{"push_forward_zero", true}, {"current_zero", false}}));
    }
    {
        auto w = form_current(omega_example());
        auto pos = positivity_check(w, samples, seed, tol);
        json obs{{"positive", to_string(pos.answer)}, {"estimate_violated", pos.estimate.has_value()}};
        if (pos.estimate) obs["estimate"] = to_json(pos)["estimate"];
        cases.push_back(check_case("constant weakly positive form", obs, {{"positive", "No"}, {"estimate_violated", true}}));
    }
    {
        auto d = derivative_atom_current(4, QVec(4, Q(0)), {Q(1), Q(0), Q(0), Q(0)});
        auto w = wedge_with_form(LagerbergFormField::from_form(omega_example(), CoefficientFn::constant(4, 1)), d);
        bool flagged = false;
        json which = json::array();
        for (auto& [key, m] : w.co)
            if (!m.is_measure()) {
                flagged = true;
                which.push_back({{"I", mask_to_json(key.first)}, {"J", mask_to_json(key.second)}});
            }
        cases.push_back(check_case("weakly positive form times a derivative atom",
                                   {{"non_measure_flagged", flagged}, {"non_measure", which}}, {{"non_measure_flagged", true}}));
    }
    bool all = std::all_of(cases.begin(), cases.end(), [](const json& c) { return c["matched"].get<bool>(); });
    return {json{{"cases", cases}}, all ? "all-expected" : "unexpected"};
}

using OpFn = Outcome (*)(const Scene&, const json&);

const std::map<std::string, OpFn>& ops() {
    static const std::map<std::string, OpFn> table = {
        {"limit_point", op_limit_point},
        {"check_positivity", op_check_positivity},
        {"closedness", op_closedness},
        {"c_finite", op_c_finite},
        {"balancing", op_balancing},
        {"decompose", op_decompose},
        {"push", op_push},
        {"lift", op_lift},
        {"integrate", op_integrate},
        {"el_mir", op_el_mir},
        {"verify_correspondence", op_verify_correspondence},
        {"compat", op_compat},
        {"cocoefficients", op_cocoefficients},
        {"counterexamples", op_counterexamples},
    };
    return table;
}

const json* lookup(const json& root, const std::string& path) {
    const json* cur = &root;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (cur->is_array()) {
            if (part.empty() || !std::all_of(part.begin(), part.end(), ::isdigit)) return nullptr;
            std::size_t i = std::stoul(part);
            if (i >= cur->size()) return nullptr;
            cur = &(*cur)[i];
        } else if (cur->is_object() && cur->contains(part)) {
            cur = &(*cur)[part];
        } else {
            return nullptr;
        }
    }
    return cur;
}

// Expected values match by JSON equality; {"lt"|"le"|"gt"|"ge": x} compares numbers.
bool expectation_holds(const json* actual, const json& want) {
    if (!actual) return false;
    if (want.is_object() && actual->is_number()) {
        double a = actual->get<double>();
        for (auto& [op, v] : want.items()) {
            double x = v.get<double>();
            if ((op == "lt" && !(a < x)) || (op == "le" && !(a <= x)) || (op == "gt" && !(a > x)) || (op == "ge" && !(a >= x)))
                return false;
            if (op != "lt" && op != "le" && op != "gt" && op != "ge") return false;
        }
        return true;
    }
    return *actual == want;
}

}  // namespace

bool Report::all_matched() const {
    return std::all_of(tasks.begin(), tasks.end(), [](const TaskRecord& t) { return t.matched; });
}

json Report::to_json() const {
    json list = json::array();
    for (auto& t : tasks) list.push_back(t.record);
    return json{{"tasks", list}, {"all_matched", all_matched()}};
}

std::string Report::to_csv() const {
    auto quote = [](const std::string& s) {
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += '"';
            out += c;
        }
        return out + "\"";
    };
    std::string out = "index,op,name,seed,tol,verdict,matched,result\n";
    for (auto& t : tasks) {
        auto& r = t.record;
        std::ostringstream line;
        line << r["index"].get<std::size_t>() << ',' << r["op"].get<std::string>() << ',' << quote(r.value("name", ""))
             << ',' << r["seed"].get<std::uint64_t>() << ',' << r["tol"].dump() << ',' << quote(r["verdict"].get<std::string>())
             << ',' << (t.matched ? "true" : "false") << ',' << quote(r["result"].dump()) << '\n';
        out += line.str();
    }
    return out;
}

std::vector<std::string> task_ops() {
    std::vector<std::string> out;
    for (auto& [k, v] : ops()) out.push_back(k);
    return out;
}

Scene load_scene(const json& j) {
    if (!j.is_object()) throw IoError("ParseError", "scene must be an object");
    Scene s;
    try {
        if (j.contains("fan")) s.fan = fan_from_json(j["fan"]);
        if (j.contains("defaults")) {
            auto& d = j["defaults"];
            s.defaults.tol = d.value("tol", s.defaults.tol);
            s.defaults.seed = d.value("seed", s.defaults.seed);
            s.defaults.samples = d.value("samples", s.defaults.samples);
        }
        if (j.contains("objects")) {
            if (!j["objects"].is_object()) throw IoError("ParseError", "objects must be a map from names to definitions");
            for (auto& [name, obj] : j["objects"].items()) {
                std::string kind = kind_of(obj);
                parse_object(kind, obj);
                if (obj.contains("chart")) {
                    if (!s.fan) invalid("object '" + name + "' names a chart but the scene has no fan");
                    auto gens = obj["chart"].get<std::vector<IVec>>();
                    int id = s.fan->id_of(gens);
                    if (id < 0) invalid("chart of '" + name + "' is not a cone of the fan");
                    auto chart = toric_chart(*s.fan, id);
                    Mask allowed = 0;
                    for (int a : chart.infinite_axes) allowed |= Mask(1) << (a - 1);
                    Mask inf = 0;
                    if (kind == "current") inf = current_from_json(obj).U.infinite;
                    else if (kind == "shadow") inf = shadow_from_json(obj).U.infinite;
                    if (inf & ~allowed) invalid("object '" + name + "' has infinite axes outside its chart");
                    if (kind == "current" && current_from_json(obj).n != s.fan->n)
                        invalid("object '" + name + "' does not match the rank of the fan");
                }
                s.objects[name] = obj;
            }
        }
        if (j.contains("tasks")) {
            if (!j["tasks"].is_array()) throw IoError("ParseError", "tasks must be a list");
            for (auto& t : j["tasks"]) {
                if (!t.is_object() || !t.contains("op") || !t["op"].is_string()) throw IoError("ParseError", "task without an op");
                std::string op = t["op"].get<std::string>();
                if (!ops().count(op)) throw IoError("ParseError", "unknown op '" + op + "'");
                for (auto& [key, kind] : kRefKeys) {
                    if (!t.contains(key)) continue;
                    if (t[key].is_string()) {
                        auto it = s.objects.find(t[key].get<std::string>());
                        if (it == s.objects.end()) invalid("task references unknown object '" + t[key].get<std::string>() + "'");
                        if (it->second["kind"] != kind)
                            invalid("object '" + it->first + "' is a " + it->second["kind"].get<std::string>() + ", not a " + kind);
                    } else {
                        parse_object(kind, t[key]);
                    }
                }
                if (t.contains("currents"))
                    for (auto& e : t["currents"]) {
                        if (e.is_string() && !s.objects.count(e.get<std::string>()))
                            invalid("task references unknown object '" + e.get<std::string>() + "'");
                        if (!e.is_string()) current_from_json(e);
                    }
                if (t.contains("expect") && !t["expect"].is_object()) throw IoError("ParseError", "expect must be an object");
                s.tasks.push_back(t);
            }
        }
    } catch (const json::exception& e) {
        throw IoError("ParseError", e.what());
    }
    return s;
}

TaskRecord run_task(const Scene& scene, const json& task, std::size_t index, const RunOptions& opt) {
    TaskRecord out;
    json& r = out.record;
    std::string op = task.at("op").get<std::string>();
    r["index"] = index;
    r["op"] = op;
    if (task.contains("name")) r["name"] = task["name"];
    r["seed"] = seed_of(scene, task);
    r["tol"] = tol_of(scene, task);
    r["samples"] = samples_of(scene, task);
    auto t0 = std::chrono::steady_clock::now();
    try {
        Outcome o = ops().at(op)(scene, task);
        r["verdict"] = o.verdict;
        r["result"] = std::move(o.result);
    } catch (const IoError& e) {
        r["verdict"] = e.kind;
        r["result"] = json{{"error", {{"kind", e.kind}, {"message", e.what()}}}};
    } catch (const CurrentError& e) {
        r["verdict"] = e.kind;
        r["result"] = json{{"error", {{"kind", e.kind}, {"message", e.what()}}}};
    } catch (const MeasureError& e) {
        r["verdict"] = e.kind;
        r["result"] = json{{"error", {{"kind", e.kind}, {"message", e.what()}}}};
    } catch (const FanError& e) {
        r["verdict"] = to_string(e.kind);
        r["result"] = json{{"error", {{"kind", to_string(e.kind)}, {"message", e.what()}}}};
    } catch (const std::exception& e) {
        r["verdict"] = "Error";
        r["result"] = json{{"error", {{"kind", "Error"}, {"message", e.what()}}}};
    }
    if (opt.timings)
        r["elapsed_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (task.contains("expect")) {
        json mismatches = json::array();
        for (auto& [path, want] : task["expect"].items()) {
            const json* actual = path == "verdict" ? &r["verdict"] : lookup(r["result"], path);
            if (!expectation_holds(actual, want))
                mismatches.push_back({{"path", path}, {"expected", want}, {"actual", actual ? *actual : json(nullptr)}});
        }
        out.matched = mismatches.empty();
        r["expect"] = task["expect"];
        r["matched"] = out.matched;
        if (!out.matched) r["mismatches"] = mismatches;
    }
    return out;
}

Report run_scene(const Scene& scene, const RunOptions& opt) {
    Report rep;
    rep.tasks.resize(scene.tasks.size());
    std::size_t jobs = static_cast<std::size_t>(std::max(1, opt.jobs));
    for (std::size_t start = 0; start < scene.tasks.size(); start += jobs) {
        std::vector<std::future<TaskRecord>> batch;
        std::size_t end = std::min(scene.tasks.size(), start + jobs);
        for (std::size_t i = start; i < end; ++i)
            batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                       [&, i] { return run_task(scene, scene.tasks[i], i, opt); }));
        for (std::size_t i = start; i < end; ++i) rep.tasks[i] = batch[i - start].get();
    }
    return rep;
}

}  // namespace trop
