#pragma once
// Named surface documents used by tests, tools and the acceptance runs.

#include <string>
#include <vector>

#include "json.hpp"
#include "lapdet/errors.hpp"
#include "lapdet/surface.hpp"

namespace lapdet {

inline std::vector<std::string> builtin_surface_names() {
  return {"torus", "pillowcase", "dsquare", "nsquare", "msquare", "punctured_torus", "punctured_torus_pair",
          "drect2x1", "ttorus"};
}

inline nlohmann::json builtin_surface_json(const std::string& name) {
  using nlohmann::json;
  const json sx = json::array({0, 1, 1, 0});
  const json sz = json::array({1, 0, 0, -1});
  const json minus_id = json::array({-1, 0, 0, -1});
  if (name == "torus")
    return json{{"face_kind", "square"},
                {"faces", 1},
                {"gluings", {{{"a", {0, 0}}, {"b", {0, 2}}}, {{"a", {0, 1}}, {"b", {0, 3}}}}}};
  if (name == "pillowcase") {
    json g = json::array();
    for (int e = 0; e < 4; ++e) g.push_back({{"a", {0, e}}, {"b", {1, e}}, {"flip", true}});
    return json{{"face_kind", "square"}, {"faces", 2}, {"gluings", g}};
  }
  if (name == "dsquare") return json{{"face_kind", "square"}, {"faces", 1}, {"default_bc", "D"}};
  if (name == "nsquare") return json{{"face_kind", "square"}, {"faces", 1}, {"default_bc", "N"}};
  if (name == "msquare")
    return json{{"face_kind", "square"},
                {"faces", 1},
                {"boundary",
                 {{{"face", 0}, {"edge", 0}, {"bc", "D"}},
                  {{"face", 0}, {"edge", 1}, {"bc", "N"}},
                  {{"face", 0}, {"edge", 2}, {"bc", "D"}},
                  {{"face", 0}, {"edge", 3}, {"bc", "N"}}}}};
  if (name == "punctured_torus") {
    json j = builtin_surface_json("torus");
    j["punctures"] = {{{"face", 0}, {"pos", {1, 1, 2}}, {"M", {-1}}, {"cut", {0, -1}}}};
    return j;
  }
  // Rank 2: the commutator of the two gluings is -Id at the corner and is
  // cancelled by a cut ending there, so the puncture is the only singularity.
  // The cut misses every vertex of shifted_square; use N divisible by 4.
  if (name == "punctured_torus_pair")
    return json{{"face_kind", "square"},
                {"faces", 1},
                {"rank", 2},
                {"gluings", {{{"a", {0, 0}}, {"b", {0, 2}}, {"U", sz}}, {{"a", {0, 1}}, {"b", {0, 3}}, {"U", sx}}}},
                {"punctures", {{{"face", 0}, {"pos", {2, 1, 4}}, {"M", minus_id}, {"cut", {-2, -1}}}}}};
  if (name == "drect2x1")
    return json{{"face_kind", "square"},
                {"faces", 2},
                {"gluings", {{{"a", {0, 1}}, {"b", {1, 3}}}}},
                {"default_bc", "D"}};
  // Rhombic torus from two equilateral triangles.
  if (name == "ttorus")
    return json{{"face_kind", "triangle"},
                {"faces", 2},
                {"gluings",
                 {{{"a", {0, 1}}, {"b", {1, 1}}}, {{"a", {0, 0}}, {"b", {1, 0}}}, {{"a", {0, 2}}, {"b", {1, 2}}}}}};
  fail(ErrorKind::SchemaError, "unknown builtin surface '" + name + "'");
}

inline SurfaceSpec builtin_surface(const std::string& name) { return parse_surface_spec(builtin_surface_json(name)); }

}  // namespace lapdet
