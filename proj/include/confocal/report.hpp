#pragma once

#include <json.hpp>

#include <ostream>
#include <string>
#include <vector>

#include "confocal/billiard.hpp"
#include "confocal/cayley.hpp"
#include "confocal/geodesic.hpp"
#include "confocal/jacobian.hpp"
#include "confocal/perturb.hpp"

namespace confocal {

using json = nlohmann::ordered_json;

json to_json(const Vec& v);
json to_json(const CausticSet& c);
json to_json(const Trajectory& t);
json to_json(const SurfaceTrajectory& t);
json to_json(const ConditionReport& r);  // exact entries as "num/den" strings
json to_json(const LatticeVerdict& v);
json to_json(const ResidualReport& r);
json to_json(const JacobiReport& r);

// Top-level document with the schema version first.
json document(const std::string& command, json body);
std::string dump(const json& j);

void write_trajectory_csv(std::ostream& os, const std::vector<Trajectory>& ts);
void write_surface_csv(std::ostream& os, const std::vector<SurfaceTrajectory>& ts);

struct SvgScene {
    std::vector<double> axes;
    std::vector<double> walls;        // lambda of each wall quadric, drawn as sections
    std::vector<double> caustics;     // drawn dashed
    std::vector<std::vector<Vec>> paths;
    std::vector<std::vector<int>> wall_of_vertex;  // per path, wall index of each vertex
    int i = 0, j = 1;                 // projection plane
    bool closed = false;
};

// Orthographic projection onto coordinates (i, j); sections of the quadrics by the plane of the other
// coordinates at zero.
std::string render_svg(const SvgScene& scene, int size = 600);

}  // namespace confocal
