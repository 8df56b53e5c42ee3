#pragma once

#include "trop/correspondence.hpp"
#include "trop/fan_lattice.hpp"

#include "json.hpp"

#include <stdexcept>
#include <string>

namespace trop {

using json = nlohmann::ordered_json;

// kind is "ParseError" (malformed document) or "ValidationError" (well-formed but rejected by the library).
struct IoError : std::runtime_error {
    std::string kind;
    IoError(std::string k, const std::string& msg) : std::runtime_error(k + ": " + msg), kind(std::move(k)) {}
};

// Rationals are written as integers when possible and as "a/b" strings otherwise.
// Index sets and infinite axes are 1-based lists on the wire.
json q_to_json(const Q& q);
Q q_from_json(const json& j);
json qvec_to_json(const QVec& v);
QVec qvec_from_json(const json& j);
json mask_to_json(Mask m);
Mask mask_from_json(const json& j, int n);

json to_json(const LForm& a);
LForm lform_from_json(const json& j);
json to_json(const CForm& a);

// {"rank": n, "cones": [[generator, ...], ...]}; validates the fan.
Fan fan_from_json(const json& j);
json to_json(const Fan& f);
json to_json(const CompactifiedPoint& p, const Fan& f);

json to_json(const ChartPoint& p);
ChartPoint point_from_json(const json& j, int n);
json to_json(const Polyhedron& p);
Polyhedron polyhedron_from_json(const json& j, int dim);
json to_json(const PieceMeasure& m);
PieceMeasure measure_from_json(const json& j, int n);
json to_json(const OpenSet& U);
OpenSet open_set_from_json(const json& j, int n);

json to_json(const CoefficientFn& f);
CoefficientFn coefficient_from_json(const json& j, int n);
json to_json(const LagerbergFormField& a);
LagerbergFormField field_from_json(const json& j);
json to_json(const InvariantComplexFormField& a);

json to_json(const WeightedComplex& c);
WeightedComplex complex_from_json(const json& j);

// Piece currents, integration currents ({"complex": ...}) and named library currents ({"builtin": ...}).
json to_json(const LagerbergCurrent& t);
LagerbergCurrent current_from_json(const json& j);

// Shadow currents carry "shadow": true and an optional "kernel" list.
json to_json(const InvariantComplexCurrent& s);
InvariantComplexCurrent shadow_from_json(const json& j);

json to_json(const PositivityVerdict& v);
json to_json(const CurrentPositivity& r);
json to_json(const ComplexPositivity& r);
json to_json(const ClosednessResult& r);
json to_json(const CFiniteResult& r);
json to_json(const BalancingResult& r);

json parse_json_file(const std::string& path);

}  // namespace trop
