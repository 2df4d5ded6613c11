#include "doctest.h"

#include "fixtures.hpp"
#include "gluesym/errors.hpp"
#include "gluesym/tri.hpp"

#include <algorithm>
#include <numeric>
#include <functional>
#include <map>
#include <set>

using namespace gluesym;
using namespace gluesym::tri;

namespace {

// Independent orbit count: union-find over the 6N tetrahedron edges.
std::vector<int> brute_edge_orbit_sizes(const Triangulation& t) {
    const int n = t.num_tetrahedra;
    std::vector<int> parent(6 * n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (int tet = 0; tet < n; ++tet)
        for (int f = 0; f < 4; ++f) {
            if (!t.is_glued(tet, f)) continue;
            const auto* p = t.pairing(tet, f);
            for (int a = 0; a < 4; ++a)
                for (int b = a + 1; b < 4; ++b) {
                    if (a == f || b == f) continue;
                    parent[find(6 * tet + edge_index(a, b))] = find(6 * p->to_tet + edge_index(p->perm[a], p->perm[b]));
                }
        }
    std::map<int, int> size;
    for (int i = 0; i < 6 * n; ++i) ++size[find(i)];
    std::vector<int> out;
    for (auto [r, s] : size) out.push_back(s);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> valences(const std::vector<EdgeClass>& ec) {
    std::vector<int> v;
    for (const auto& e : ec) v.push_back(e.valence());
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST_CASE("parse figure-eight") {
    auto t = fixtures::figure_eight();
    CHECK(t.num_tetrahedra == 2);
    CHECK(t.gluings.size() == 8);
    CHECK(t.fully_glued());
}

TEST_CASE("single tetrahedron has four free faces") {
    auto t = fixtures::single_tet();
    CHECK(t.num_tetrahedra == 1);
    for (int f = 0; f < 4; ++f) CHECK(t.pairing(0, f) == nullptr);
    auto ec = edge_classes(t);
    CHECK(ec.size() == 6);
    for (const auto& e : ec) CHECK(e.valence() == 1);
    auto cusps = cusp_classes(t);
    REQUIRE(cusps.size() == 4);
    for (const auto& c : cusps) {
        CHECK(c.small_triangles.size() == 1);
        CHECK(c.topology == CuspTopology::disc);
    }
}

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(parse_triangulation("{"), SchemaError);
    CHECK_THROWS_AS(parse_triangulation(R"({"format":"other","name":"x","num_tetrahedra":1,"gluings":[]})"), SchemaError);
    CHECK_THROWS_AS(load_triangulation(fixtures::path("missing_inverse.json")), PairingError);
    // (0,0) -> (1,2) without the inverse entry.
    CHECK_THROWS_AS(parse_triangulation(R"({"format":"gluesym/tri-v1","name":"x","num_tetrahedra":2,
        "gluings":[{"tet":0,"face":0,"to_tet":1,"to_face":2,"perm":[2,1,0,3]}]})"),
                    PairingError);
    // even permutation: orientation preserving
    CHECK_THROWS_AS(parse_triangulation(R"({"format":"gluesym/tri-v1","name":"x","num_tetrahedra":2,
        "gluings":[{"tet":0,"face":0,"to_tet":1,"to_face":0,"perm":[0,1,2,3]},
                   {"tet":1,"face":0,"to_tet":0,"to_face":0,"perm":[0,1,2,3]}]})"),
                    OrientationError);
    CHECK_THROWS_AS(parse_triangulation(R"({"format":"gluesym/tri-v1","name":"x","num_tetrahedra":1,
        "gluings":[{"tet":0,"face":0,"to_tet":0,"to_face":1,"perm":[0,0,2,3]}]})"),
                    SchemaError);
}

TEST_CASE("pairings are involutive") {
    for (const auto& t : {fixtures::figure_eight(), fixtures::knot_5_2(), fixtures::double_tet()}) {
        for (const auto& g : t.gluings) {
            const auto* back = t.pairing(g.to_tet, g.to_face);
            REQUIRE(back != nullptr);
            CHECK(back->to_tet == g.tet);
            CHECK(back->to_face == g.face);
            for (int v = 0; v < 4; ++v) CHECK(back->perm[g.perm[v]] == v);
        }
    }
}

TEST_CASE("edge classes match brute-force orbits") {
    for (const auto& t : {fixtures::figure_eight(), fixtures::knot_5_2(), fixtures::double_tet(),
                          fixtures::figure_eight_partial(), fixtures::single_tet()}) {
        auto ec = edge_classes(t);
        CHECK(valences(ec) == brute_edge_orbit_sizes(t));
        int total = 0;
        for (const auto& e : ec) total += e.valence();
        CHECK(total == 6 * t.num_tetrahedra);
    }
    auto fe = edge_classes(fixtures::figure_eight());
    CHECK(fe.size() == 2);
    CHECK(valences(fe) == std::vector<int>{6, 6});
    for (const auto& e : fe) CHECK(e.closed);
    CHECK(edge_classes(fixtures::knot_5_2()).size() == 3);
}

TEST_CASE("edge class walk is consistent with the pairings") {
    for (const auto& t : {fixtures::figure_eight(), fixtures::knot_5_2(), fixtures::figure_eight_partial()}) {
        for (const auto& e : edge_classes(t)) {
            const std::size_t n = e.incidences.size();
            const std::size_t steps = e.closed ? n : n - 1;
            for (std::size_t i = 0; i < steps; ++i) {
                const auto& c = e.incidences[i];
                const auto& d = e.incidences[(i + 1) % n];
                // Some glued face containing {a,b} carries c to d with a -> a.
                bool found = false;
                for (int f = 0; f < 4; ++f) {
                    if (f == c.a || f == c.b || !t.is_glued(c.tet, f)) continue;
                    const auto* p = t.pairing(c.tet, f);
                    if (p->to_tet == d.tet && p->perm[c.a] == d.a && p->perm[c.b] == d.b) found = true;
                }
                CHECK(found);
            }
        }
    }
}

TEST_CASE("cusp classes") {
    auto fe = cusp_classes(fixtures::figure_eight());
    REQUIRE(fe.size() == 1);
    CHECK(fe[0].small_triangles.size() == 8);
    CHECK(fe[0].euler() == 0);
    CHECK(fe[0].topology == CuspTopology::torus);

    auto k = cusp_classes(fixtures::knot_5_2());
    REQUIRE(k.size() == 1);
    CHECK(k[0].topology == CuspTopology::torus);
    CHECK(k[0].small_triangles.size() == 12);

    // The double of a tetrahedron: four sphere cusps, each two triangles.
    auto d = cusp_classes(fixtures::double_tet());
    REQUIRE(d.size() == 4);
    for (const auto& c : d) {
        CHECK(c.euler() == 2);
        CHECK(c.topology == CuspTopology::sphere);
        CHECK(c.small_triangles.size() == 2);
    }
}

TEST_CASE("partial gluing leaves open edge chains") {
    auto t = fixtures::figure_eight_partial();
    CHECK_FALSE(t.fully_glued());
    CHECK(t.num_glued_faces() == 4);
    auto ec = edge_classes(t);
    int open = 0;
    for (const auto& e : ec) open += !e.closed;
    CHECK(open > 0);
    auto full = t.with_glue_set({0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(full.fully_glued());
}

TEST_CASE("json round trip") {
    auto t = fixtures::figure_eight_partial();
    auto u = parse_triangulation(to_json(t));
    CHECK(u.num_tetrahedra == t.num_tetrahedra);
    CHECK(u.gluings.size() == t.gluings.size());
    CHECK(u.num_glued_faces() == t.num_glued_faces());
}
