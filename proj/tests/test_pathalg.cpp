#include "doctest.h"

#include "fixtures.hpp"
#include "gluesym/errors.hpp"
#include "gluesym/pathalg.hpp"

#include <random>

using namespace gluesym;
using namespace gluesym::pathalg;
using surface::Stage;

namespace {

PathGroupElement random_element(std::mt19937& rng, int n) {
    std::uniform_int_distribution<int> c(-3, 3), a(0, 12 * n - 1);
    PathGroupElement p;
    for (int k = 0; k < 4; ++k) p += PathGroupElement::arc(arc_at(a(rng)), c(rng));
    if (rng() % 2) p += PathGroupElement::fiber();
    return p;
}

}  // namespace

TEST_CASE("corner arcs lift to the slot edge cycles") {
    for (const auto& t : {fixtures::single_tet(), fixtures::figure_eight()}) {
        StageMHomology m(t);
        const int n = t.num_tetrahedra;
        CHECK(m.basis_form() == zlat::standard_J(n));
        for (int j = 0; j < 12 * n; ++j) {
            auto a = arc_at(j);
            CHECK(arc_index(a) == j);
            INFO("arc " << a.tet << " " << a.v << " " << a.w);
            CHECK(m.tet_coords(m.arc_cycle(a)) == slot_vector(n, a.tet, tri::edge_slot(a.v, a.w)));
        }
    }
}

TEST_CASE("both ends of a big edge give the same cycle") {
    StageMHomology m(fixtures::single_tet());
    for (int e = 0; e < 6; ++e) {
        auto [v, w] = tri::edge_vertices(e);
        auto x = m.h_tilde(PathGroupElement::arc({0, v, w}));
        auto y = m.h_tilde(PathGroupElement::arc({0, w, v}));
        CHECK(x == y);
        CHECK(m.h_tilde(PathGroupElement::arc({0, v, w}) - PathGroupElement::arc({0, w, v})) == Vec(2, Int(0)));
    }
}

TEST_CASE("h~ is a homomorphism") {
    std::mt19937 rng(11);
    const int n = 2;
    for (int k = 0; k < 500; ++k) {
        auto p = random_element(rng, n), q = random_element(rng, n);
        auto hp = h_tilde(p, n), hq = h_tilde(q, n), hpq = h_tilde(p + q, n);
        CHECK(hpq == hp + hq);
    }
    StageMHomology m(fixtures::figure_eight());
    for (int k = 0; k < 20; ++k) {
        auto p = random_element(rng, n);
        CHECK(m.h_tilde(p) == h_tilde(p, n).coeffs);
    }
}

TEST_CASE("kernel of h~ is generated by the edge paths") {
    for (int n : {1, 2, 3}) {
        IntMatrix H = h_tilde_matrix(n);
        IntMatrix K = zlat::kernel(H);
        IntMatrix S = zlat::hstack(triangle_relations(n), edge_path_generators(n));
        CHECK((H * S).is_zero());
        // P_E has full rank in the kernel; the index is one factor 2 per
        // tetrahedron (unsigned incidence matrix of K4).
        auto q = zlat::quotient(K, S);
        CHECK(q.free_rank == 0);
        CHECK(q.torsion == std::vector<Int>(n, Int(2)));
        // h~ is onto the 2N-dimensional odd homology.
        CHECK(zlat::rank(H) == static_cast<std::size_t>(2 * n));
    }
}

TEST_CASE("cutting paths") {
    auto t = fixtures::figure_eight();
    auto classes = tri::edge_classes(t);
    for (const auto& ec : classes) {
        auto p = edge_link_path(ec);
        CHECK_NOTHROW(validate_path(t, p, Stage::M0));
        auto c = cut_path(p);
        CHECK(static_cast<int>(c.segments.size()) == ec.valence());
        CHECK(c.cut_count == ec.valence() % 2);
        // Every segment runs along its arc: the loop turns the same way at
        // every corner.
        for (const auto& [a, s] : c.segments) CHECK(s == 1);
        auto g = g_tilde_P(p);
        CHECK(g.fiber_bit == ec.valence() % 2);
        CHECK(g_tilde_P(p, 1).fiber_bit == (ec.valence() + 1) % 2);
    }
    // A closed path crossing five glued edges is cut an odd number of times.
    SmallPath five{{}, true};
    for (int k = 0; k < 5; ++k) five.steps.push_back({0, 0, 1, 2});
    CHECK(cut_path(five).cut_count == 1);
    SmallPath open{{{0, 0, 1, 2}}, false};
    CHECK(cut_path(open).cut_count == 0);
    CHECK(g_tilde_P(open) == PathGroupElement::arc(arc_of(open.steps[0]), arc_sign(open.steps[0])));
    // The fibre class passes through unchanged.
    SmallPath two{{{0, 0, 1, 2}, {0, 1, 0, 2}}, false};
    CHECK(g_tilde_P(two, 1).fiber_bit == 0);
    CHECK(q_lift(five).steps == five.steps);
}

TEST_CASE("bad steps and paths are rejected") {
    CHECK_THROWS_AS(corner_of({0, 0, 0, 1}), SchemaError);
    CHECK_THROWS_AS(corner_of({0, 1, 2, 2}), SchemaError);
    auto t = fixtures::figure_eight();
    SmallPath p{{{0, 0, 1, 2}, {0, 0, 1, 2}}, true};
    CHECK_THROWS_AS(validate_path(t, p, Stage::Mprime), SchemaError);
    auto ec = tri::edge_classes(t)[0];
    CHECK_THROWS_AS(validate_path(t, edge_link_path(ec), Stage::M), SchemaError);
}

TEST_CASE("defect ends are isotropic on the glued surface") {
    for (const auto& t : {fixtures::figure_eight(), fixtures::knot_5_2()}) {
        auto b = surface::build_boundary(t, Stage::M0);
        auto cv = surface::build_cover(b);
        oddhom::SurfaceHomology h(cv.total);
        std::vector<Vec> mu;
        for (const auto& ec : b.edge_classes) {
            auto z = defect_end_cycle(b, ec);
            auto lift = oddhom::odd_lift(cv, z);
            CHECK(h.is_cycle(lift));
            mu.push_back(lift);
        }
        for (std::size_t i = 0; i < mu.size(); ++i)
            for (std::size_t j = 0; j < mu.size(); ++j) CHECK(oddhom::intersection(cv.total, mu[i], mu[j]) == 0);
    }
}
