#pragma once

#include "trop/io.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace trop {

struct TaskDefaults {
    double tol = 1e-8;
    std::uint64_t seed = 1;
    int samples = 20;
};

// Parsed scene: named objects keep their raw JSON plus a kind tag; tasks reference them by name
// or carry inline definitions.
struct Scene {
    std::optional<Fan> fan;
    std::map<std::string, json> objects;
    std::vector<json> tasks;
    TaskDefaults defaults;
};

struct RunOptions {
    bool timings = false;  // timings make reports run-dependent, so they are opt-in
    int jobs = 1;
};

struct TaskRecord {
    json record;
    bool matched = true;  // every declared expectation held
};

struct Report {
    std::vector<TaskRecord> tasks;
    bool all_matched() const;
    json to_json() const;
    std::string to_csv() const;
};

// Throws IoError("ParseError") for malformed input and IoError("ValidationError") when references do
// not resolve, an object is rejected by the library, or a chart disagrees with the fan.
Scene load_scene(const json& j);

std::vector<std::string> task_ops();
TaskRecord run_task(const Scene& scene, const json& task, std::size_t index, const RunOptions& opt = {});
Report run_scene(const Scene& scene, const RunOptions& opt = {});

}  // namespace trop
