#pragma once

#include "gluesym/tri.hpp"

#include <string>

namespace fixtures {

inline std::string path(const std::string& name) { return std::string(GLUESYM_FIXTURE_DIR) + "/" + name; }

inline gluesym::tri::Triangulation load(const std::string& name) { return gluesym::tri::load_triangulation(path(name)); }

inline gluesym::tri::Triangulation figure_eight() { return load("figure_eight.json"); }
inline gluesym::tri::Triangulation knot_5_2() { return load("knot_5_2.json"); }
inline gluesym::tri::Triangulation single_tet() { return load("single_tet.json"); }
inline gluesym::tri::Triangulation double_tet() { return load("double_tet.json"); }
inline gluesym::tri::Triangulation figure_eight_partial() { return load("figure_eight_partial.json"); }

}  // namespace fixtures
