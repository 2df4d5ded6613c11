#include "gluesym/tri.hpp"

#include "gluesym/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace gluesym::tri {

using nlohmann::json;

int perm_sign(const Perm& p) {
    int s = 1;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (p[i] > p[j]) s = -s;
    return s;
}

Perm perm_inverse(const Perm& p) {
    Perm q{};
    for (int i = 0; i < 4; ++i) q[p[i]] = i;
    return q;
}

int edge_slot(int a, int b) {
    if (a > b) std::swap(a, b);
    if ((a == 0 && b == 1) || (a == 2 && b == 3)) return 0;
    if ((a == 0 && b == 2) || (a == 1 && b == 3)) return 1;
    return 2;
}

int edge_index(int a, int b) {
    if (a > b) std::swap(a, b);
    static const int table[4][4] = {{-1, 0, 1, 2}, {0, -1, 3, 4}, {1, 3, -1, 5}, {2, 4, 5, -1}};
    return table[a][b];
}

std::pair<int, int> edge_vertices(int index) {
    static const std::pair<int, int> table[6] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    return table[index];
}

namespace {

bool is_permutation(const Perm& p) {
    std::array<bool, 4> seen{};
    for (int v : p) {
        if (v < 0 || v > 3 || seen[v]) return false;
        seen[v] = true;
    }
    return true;
}

// The two faces containing tetrahedron edge {a, b}, ordered so that
// (a, b, first, second) is an even permutation.
std::pair<int, int> faces_around(int a, int b) {
    int c = -1, d = -1;
    for (int v = 0; v < 4; ++v) {
        if (v == a || v == b) continue;
        (c < 0 ? c : d) = v;
    }
    if (perm_sign(Perm{a, b, c, d}) < 0) std::swap(c, d);
    return {c, d};
}

int get_int(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw SchemaError(fmt::format("{}: missing field '{}'", where, key));
    const json& v = j.at(key);
    if (!v.is_number_integer()) throw SchemaError(fmt::format("{}: field '{}' must be an integer", where, key));
    return v.get<int>();
}

}  // namespace

Triangulation Triangulation::make(std::string name, int n, std::vector<FacePairing> gluings,
                                  std::optional<std::vector<int>> glue_set) {
    if (n < 0) throw SchemaError("num_tetrahedra must be non-negative");
    Triangulation t;
    t.name = std::move(name);
    t.num_tetrahedra = n;
    t.gluings = std::move(gluings);
    t.partial_glue_set = std::move(glue_set);
    t.pairing_of_.assign(4 * n, -1);
    t.glued_.assign(4 * n, 0);

    for (std::size_t i = 0; i < t.gluings.size(); ++i) {
        const auto& g = t.gluings[i];
        const std::string where = fmt::format("gluing {}", i);
        if (g.tet < 0 || g.tet >= n || g.to_tet < 0 || g.to_tet >= n)
            throw SchemaError(where + ": tetrahedron index out of range");
        if (g.face < 0 || g.face > 3 || g.to_face < 0 || g.to_face > 3)
            throw SchemaError(where + ": face index out of range");
        if (!is_permutation(g.perm)) throw SchemaError(where + ": perm is not a permutation of {0,1,2,3}");
        if (g.perm[g.face] != g.to_face)
            throw PairingError(fmt::format("{}: perm[{}] = {} but to_face = {}", where, g.face, g.perm[g.face], g.to_face));
        if (g.tet == g.to_tet && g.face == g.to_face) throw PairingError(where + ": face glued to itself");
        int& slot = t.pairing_of_[4 * g.tet + g.face];
        if (slot >= 0) throw PairingError(fmt::format("{}: face ({}, {}) appears twice", where, g.tet, g.face));
        slot = static_cast<int>(i);
    }
    for (std::size_t i = 0; i < t.gluings.size(); ++i) {
        const auto& g = t.gluings[i];
        int back = t.pairing_of_[4 * g.to_tet + g.to_face];
        if (back < 0)
            throw PairingError(fmt::format("gluing ({}, {}) -> ({}, {}) has no inverse entry", g.tet, g.face, g.to_tet,
                                           g.to_face));
        const auto& h = t.gluings[back];
        if (h.to_tet != g.tet || h.to_face != g.face || h.perm != perm_inverse(g.perm))
            throw PairingError(fmt::format("gluing ({}, {}) -> ({}, {}) is not inverted by its partner", g.tet, g.face,
                                           g.to_tet, g.to_face));
        if (perm_sign(g.perm) > 0)
            throw OrientationError(fmt::format("gluing ({}, {}) -> ({}, {}) preserves orientation", g.tet, g.face,
                                               g.to_tet, g.to_face));
    }
    if (t.partial_glue_set) {
        for (int i : *t.partial_glue_set) {
            if (i < 0 || i >= static_cast<int>(t.gluings.size()))
                throw SchemaError(fmt::format("partial_glue_set index {} out of range", i));
            const auto& g = t.gluings[i];
            t.glued_[4 * g.tet + g.face] = 1;
            t.glued_[4 * g.to_tet + g.to_face] = 1;
        }
    } else {
        for (const auto& g : t.gluings) t.glued_[4 * g.tet + g.face] = 1;
    }
    return t;
}

const FacePairing* Triangulation::pairing(int tet, int face) const {
    int i = pairing_of_[4 * tet + face];
    return i < 0 ? nullptr : &gluings[i];
}

bool Triangulation::fully_glued() const {
    return std::all_of(glued_.begin(), glued_.end(), [](char c) { return c != 0; });
}

int Triangulation::num_glued_faces() const { return static_cast<int>(std::count(glued_.begin(), glued_.end(), 1)); }

Triangulation Triangulation::with_glue_set(const std::vector<int>& glue_set) const {
    Triangulation t = make(name, num_tetrahedra, gluings, glue_set);
    t.peripheral_curves = peripheral_curves;
    return t;
}

Triangulation parse_triangulation(const std::string& document) {
    json j;
    try {
        j = json::parse(document);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("document must be a JSON object");
    if (!j.contains("format") || j["format"] != "gluesym/tri-v1") throw SchemaError("format must be \"gluesym/tri-v1\"");
    if (!j.contains("name") || !j["name"].is_string()) throw SchemaError("missing string field 'name'");
    int n = get_int(j, "num_tetrahedra", "document");
    if (!j.contains("gluings") || !j["gluings"].is_array()) throw SchemaError("missing array field 'gluings'");

    std::vector<FacePairing> gluings;
    for (std::size_t i = 0; i < j["gluings"].size(); ++i) {
        const json& g = j["gluings"][i];
        const std::string where = fmt::format("gluing {}", i);
        FacePairing p;
        p.tet = get_int(g, "tet", where);
        p.face = get_int(g, "face", where);
        p.to_tet = get_int(g, "to_tet", where);
        p.to_face = get_int(g, "to_face", where);
        if (!g.contains("perm") || !g["perm"].is_array() || g["perm"].size() != 4)
            throw SchemaError(where + ": perm must be an array of 4 integers");
        for (int k = 0; k < 4; ++k) {
            if (!g["perm"][k].is_number_integer()) throw SchemaError(where + ": perm entries must be integers");
            p.perm[k] = g["perm"][k].get<int>();
        }
        gluings.push_back(p);
    }

    std::optional<std::vector<int>> glue_set;
    if (j.contains("partial_glue_set")) {
        const json& s = j["partial_glue_set"];
        if (!s.is_array()) throw SchemaError("partial_glue_set must be an array");
        glue_set.emplace();
        for (const auto& v : s) {
            if (!v.is_number_integer()) throw SchemaError("partial_glue_set entries must be integers");
            glue_set->push_back(v.get<int>());
        }
    }

    Triangulation t = Triangulation::make(j["name"].get<std::string>(), n, std::move(gluings), std::move(glue_set));

    if (j.contains("peripheral_curves")) {
        const json& pc = j["peripheral_curves"];
        if (!pc.is_array()) throw SchemaError("peripheral_curves must be an array (one entry per cusp)");
        for (const auto& cusp : pc) {
            if (!cusp.is_array()) throw SchemaError("peripheral_curves entries must be arrays of paths");
            std::vector<NormalPath> paths;
            for (const auto& path : cusp) {
                if (!path.is_array()) throw SchemaError("a peripheral curve must be an array of steps");
                NormalPath np;
                for (const auto& st : path) {
                    NormalStep s{get_int(st, "tet", "normal step"), get_int(st, "vertex", "normal step"),
                                 get_int(st, "enter", "normal step"), get_int(st, "exit", "normal step")};
                    if (s.tet < 0 || s.tet >= n || s.vertex < 0 || s.vertex > 3 || s.enter < 0 || s.enter > 3 ||
                        s.exit < 0 || s.exit > 3 || s.enter == s.vertex || s.exit == s.vertex || s.enter == s.exit)
                        throw SchemaError("normal step out of range");
                    np.push_back(s);
                }
                paths.push_back(std::move(np));
            }
            t.peripheral_curves.push_back(std::move(paths));
        }
    }
    return t;
}

Triangulation load_triangulation(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_triangulation(ss.str());
}

std::string to_json(const Triangulation& t) {
    json j;
    j["format"] = "gluesym/tri-v1";
    j["name"] = t.name;
    j["num_tetrahedra"] = t.num_tetrahedra;
    j["gluings"] = json::array();
    for (const auto& g : t.gluings)
        j["gluings"].push_back(
            {{"tet", g.tet}, {"face", g.face}, {"to_tet", g.to_tet}, {"to_face", g.to_face}, {"perm", g.perm}});
    if (t.partial_glue_set) j["partial_glue_set"] = *t.partial_glue_set;
    if (!t.peripheral_curves.empty()) {
        json pc = json::array();
        for (const auto& cusp : t.peripheral_curves) {
            json c = json::array();
            for (const auto& path : cusp) {
                json p = json::array();
                for (const auto& s : path)
                    p.push_back({{"tet", s.tet}, {"vertex", s.vertex}, {"enter", s.enter}, {"exit", s.exit}});
                c.push_back(p);
            }
            pc.push_back(c);
        }
        j["peripheral_curves"] = pc;
    }
    return j.dump(2);
}

std::vector<EdgeClass> edge_classes(const Triangulation& t) {
    const int n = t.num_tetrahedra;
    std::vector<char> seen(6 * n, 0);
    std::vector<EdgeClass> out;

    auto step = [&](const EdgeCorner& c, bool forward, EdgeCorner& next) {
        auto [f, g] = faces_around(c.a, c.b);
        int face = forward ? f : g;
        if (!t.is_glued(c.tet, face)) return false;
        const FacePairing* p = t.pairing(c.tet, face);
        next = EdgeCorner{p->to_tet, p->perm[c.a], p->perm[c.b]};
        return true;
    };

    for (int tet = 0; tet < n; ++tet) {
        for (int e = 0; e < 6; ++e) {
            if (seen[6 * tet + e]) continue;
            auto [a, b] = edge_vertices(e);
            EdgeCorner start{tet, a, b};
            std::vector<EdgeCorner> chain{start};
            bool closed = false;
            EdgeCorner cur = start, next;
            while (step(cur, true, next)) {
                if (next == start) {
                    closed = true;
                    break;
                }
                chain.push_back(next);
                cur = next;
            }
            if (!closed) {
                std::vector<EdgeCorner> back;
                cur = start;
                while (step(cur, false, next)) {
                    back.push_back(next);
                    cur = next;
                }
                std::reverse(back.begin(), back.end());
                back.insert(back.end(), chain.begin(), chain.end());
                chain = std::move(back);
            } else {
                // Canonical rotation: start at the smallest (tet, edge index).
                auto key = [](const EdgeCorner& c) { return std::pair(c.tet, edge_index(c.a, c.b)); };
                auto it = std::min_element(chain.begin(), chain.end(),
                                           [&](const EdgeCorner& x, const EdgeCorner& y) { return key(x) < key(y); });
                std::rotate(chain.begin(), it, chain.end());
            }
            for (const auto& c : chain) {
                char& s = seen[6 * c.tet + edge_index(c.a, c.b)];
                if (s) throw InternalInconsistency("edge corner visited twice while walking edge classes");
                s = 1;
            }
            EdgeClass ec;
            ec.id = static_cast<int>(out.size());
            ec.incidences = std::move(chain);
            ec.closed = closed;
            out.push_back(std::move(ec));
        }
    }
    return out;
}

EdgeLookup edge_lookup(const Triangulation& t, const std::vector<EdgeClass>& classes) {
    EdgeLookup lk;
    lk.class_of.assign(6 * t.num_tetrahedra, -1);
    lk.position_of.assign(6 * t.num_tetrahedra, -1);
    lk.aligned.assign(6 * t.num_tetrahedra, 0);
    for (const auto& ec : classes)
        for (std::size_t i = 0; i < ec.incidences.size(); ++i) {
            const auto& c = ec.incidences[i];
            int k = 6 * c.tet + edge_index(c.a, c.b);
            lk.class_of[k] = ec.id;
            lk.position_of[k] = static_cast<int>(i);
            lk.aligned[k] = c.a < c.b;
        }
    return lk;
}

std::string to_string(CuspTopology t) {
    switch (t) {
        case CuspTopology::sphere: return "sphere";
        case CuspTopology::torus: return "torus";
        case CuspTopology::disc: return "disc";
        case CuspTopology::annulus: return "annulus";
        case CuspTopology::other: break;
    }
    return "other";
}

std::vector<CuspClass> cusp_classes(const Triangulation& t) {
    const int n = t.num_tetrahedra;
    std::vector<int> parent(4 * n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (int tet = 0; tet < n; ++tet)
        for (int f = 0; f < 4; ++f) {
            if (!t.is_glued(tet, f)) continue;
            const FacePairing* p = t.pairing(tet, f);
            for (int v = 0; v < 4; ++v)
                if (v != f) parent[find(4 * tet + v)] = find(4 * p->to_tet + p->perm[v]);
        }

    auto classes = edge_classes(t);
    auto lk = edge_lookup(t, classes);
    // Corner (tet, v, w) sits at one end of the edge class of {v, w}.
    auto corner_key = [&](int tet, int v, int w) {
        int k = 6 * tet + edge_index(v, w);
        const auto& c = classes[lk.class_of[k]].incidences[lk.position_of[k]];
        return std::pair(lk.class_of[k], c.a == v ? 0 : 1);
    };

    std::map<int, int> id_of_root;
    std::vector<CuspClass> out;
    for (int tet = 0; tet < n; ++tet)
        for (int v = 0; v < 4; ++v) {
            int r = find(4 * tet + v);
            auto [it, fresh] = id_of_root.emplace(r, static_cast<int>(out.size()));
            if (fresh) {
                out.emplace_back();
                out.back().id = it->second;
            }
            out[it->second].small_triangles.emplace_back(tet, v);
        }

    for (auto& cusp : out) {
        std::set<std::pair<int, int>> verts;
        int glued_sides = 0;
        std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> boundary_graph;
        for (auto [tet, v] : cusp.small_triangles) {
            for (int w = 0; w < 4; ++w)
                if (w != v) verts.insert(corner_key(tet, v, w));
            for (int f = 0; f < 4; ++f) {
                if (f == v) continue;
                if (t.is_glued(tet, f)) {
                    ++glued_sides;
                    continue;
                }
                int w1 = -1, w2 = -1;
                for (int w = 0; w < 4; ++w)
                    if (w != v && w != f) (w1 < 0 ? w1 : w2) = w;
                auto k1 = corner_key(tet, v, w1), k2 = corner_key(tet, v, w2);
                boundary_graph[k1].push_back(k2);
                boundary_graph[k2].push_back(k1);
            }
        }
        cusp.num_faces = static_cast<int>(cusp.small_triangles.size());
        cusp.num_vertices = static_cast<int>(verts.size());
        cusp.num_edges = 3 * cusp.num_faces - glued_sides / 2;

        std::set<std::pair<int, int>> visited;
        for (const auto& [start, nbrs] : boundary_graph) {
            if (visited.count(start)) continue;
            ++cusp.boundary_components;
            std::vector<std::pair<int, int>> stack{start};
            visited.insert(start);
            while (!stack.empty()) {
                auto x = stack.back();
                stack.pop_back();
                for (const auto& y : boundary_graph[x])
                    if (visited.insert(y).second) stack.push_back(y);
            }
        }

        const int chi = cusp.euler();
        const int b = cusp.boundary_components;
        if (b == 0) {
            if (chi == 2)
                cusp.topology = CuspTopology::sphere;
            else if (chi == 0)
                cusp.topology = CuspTopology::torus;
            else
                throw NonAbelianSmallBoundary(
                    fmt::format("cusp {} is a closed surface of genus {}", cusp.id, (2 - chi) / 2));
        } else if (b == 1 && chi == 1) {
            cusp.topology = CuspTopology::disc;
        } else if (b == 2 && chi == 0) {
            cusp.topology = CuspTopology::annulus;
        } else {
            cusp.topology = CuspTopology::other;
        }
    }
    return out;
}

std::vector<int> cusp_of_vertex(const std::vector<CuspClass>& cusps, int num_tetrahedra) {
    std::vector<int> out(4 * num_tetrahedra, -1);
    for (const auto& c : cusps)
        for (auto [tet, v] : c.small_triangles) out[4 * tet + v] = c.id;
    return out;
}

}  // namespace gluesym::tri
