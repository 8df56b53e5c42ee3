#pragma once

#include "trop/exterior.hpp"
#include "trop/rational.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace trop {

using IVec = std::vector<long>;
using IMat = std::vector<IVec>;

enum class FanErrorKind { NotStrictlyConvex, NotSmooth, BadIntersection, OutsideSupport, NotAFace, InvalidInput };

struct FanError : std::runtime_error {
    FanErrorKind kind;
    FanError(FanErrorKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

std::string to_string(FanErrorKind k);

struct Cone {
    std::vector<IVec> generators;  // primitive, sorted
    int dim = 0;
    IMat basis;   // n columns stored as rows: generators first, then the completion
    IMat reduce;  // unimodular U with U * generators = [I; 0]
};

struct Fan {
    int n = 0;
    std::vector<Cone> cones;                 // id 0 is the zero cone
    std::vector<std::vector<int>> faces;     // faces[s] = ids of all faces of cone s (including s)

    bool is_face(int tau, int sigma) const;
    int id_of(std::vector<IVec> gens) const;  // -1 when absent
    int dim(int s) const { return cones.at(static_cast<std::size_t>(s)).dim; }
};

// Point of N_Σ: a stratum N(σ) and coordinates in its stored quotient basis.
struct CompactifiedPoint {
    int stratum = 0;
    QVec coords;
    friend bool operator==(const CompactifiedPoint& a, const CompactifiedPoint& b) {
        return a.stratum == b.stratum && a.coords == b.coords;
    }
};

struct ToricChart {
    int cone = 0;
    IMat basis;                     // b_1..b_n (each an n-vector); ρ is generated by the first dim(ρ)
    std::vector<int> infinite_axes; // 1-based
};

Fan validate_fan(int n, const std::vector<std::vector<IVec>>& cones);

int locate_relint(const QVec& v, const Fan& fan);

// π_σ : N_R -> N(σ).
CompactifiedPoint project_to_stratum(const Fan& fan, int sigma, const QVec& p);
// π_{σ,τ} : N(τ) -> N(σ) for τ ≺ σ.
CompactifiedPoint stratum_projection(const Fan& fan, int sigma, int tau, const CompactifiedPoint& x);
// lim_{μ→∞} p + μ v.
CompactifiedPoint limit_point(const Fan& fan, const QVec& p, const QVec& v);

ToricChart toric_chart(const Fan& fan, int rho);

// Coordinates of a point on a face of the chart cone, in the chart basis: finite entries for
// axes outside the face, and the mask of axes that are at infinity (0-based bits).
struct ChartPoint {
    Mask infinite = 0;
    QVec u;  // entries for infinite axes are zero placeholders
};
ChartPoint chart_coordinates(const Fan& fan, const ToricChart& chart, const CompactifiedPoint& x);

// Fan of R_∞^n: the positive orthant and its faces.
Fan orthant_fan(int n);
Fan projective_plane_fan();

std::vector<long> to_long(const QVec& v);
QVec to_q(const IVec& v);

}  // namespace trop
