#include "doctest.h"

#include "fixtures.hpp"
#include "gluesym/errors.hpp"
#include "gluesym/oddhom.hpp"

#include <random>

using namespace gluesym;
using namespace gluesym::oddhom;
using surface::CellKey;
using surface::Kind;
using surface::Stage;

namespace {

Vec random_cycle(const SurfaceHomology& h, std::mt19937& rng) {
    std::uniform_int_distribution<int> d(-3, 3);
    Vec c(h.rank());
    for (auto& x : c) x = d(rng);
    return h.basis() * c;
}

Vec face_boundary(const CellComplex& c, int f) {
    Vec v(c.num_edges(), 0);
    for (const auto& s : c.faces[f].boundary) v[s.edge] += s.dir;
    return v;
}

bool unimodular(const IntMatrix& m) {
    if (m.rows() != m.cols()) return false;
    auto d = zlat::determinant(m);
    return d == 1 || d == -1;
}

// Edge cycle of tetrahedron edge {v, w} seen from the hole at v.
Vec tet_edge_cycle(const surface::BoundarySurface& b, const surface::CoverComplex& cv, int v, int w) {
    int x = -1, y = -1;
    for (int f = 0; f < 4; ++f)
        if (f != v && f != w) (x < 0 ? x : y) = f;
    // f1 carries w -> v, f2 carries v -> w
    auto has_wv = [&](int f) {
        static const int cyc[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
        for (int i = 0; i < 3; ++i)
            if (cyc[f][i] == w && cyc[f][(i + 1) % 3] == v) return true;
        return false;
    };
    int f1 = has_wv(x) ? x : y, f2 = f1 == x ? y : x;
    int e = tri::edge_index(v, w);
    SectorRef from{CellKey{Kind::sector, 0, f1, v, 0}, CellKey{Kind::cut, 0, f1, e, 0}};
    SectorRef to{CellKey{Kind::sector, 0, f2, v, 0}, CellKey{Kind::cut, 0, f2, e, 0}};
    return hexagon_path_lift(b.complex, cv, from, to);
}

}  // namespace

TEST_CASE("intersection orientation on the square torus") {
    auto b = surface::build_abstract(surface::small_torus_surface());
    const auto& c = b.complex;
    Vec a(c.num_edges(), 0), bb(c.num_edges(), 0);
    auto [ea, sa] = c.edge(CellKey{Kind::loop_a, 0, 0, 0, 0});
    auto [eb, sb] = c.edge(CellKey{Kind::loop_b, 0, 0, 0, 0});
    a[ea] = sa;
    bb[eb] = sb;
    CHECK(intersection(c, a, bb) == 1);
    CHECK(intersection(c, bb, a) == -1);
    CHECK(intersection(c, a, a) == 0);
    SurfaceHomology h(c);
    CHECK(h.rank() == 2);
}

TEST_CASE("intersection form is skew and ignores boundaries") {
    std::mt19937 rng(7);
    for (Stage s : {Stage::M, Stage::M0})
        for (const auto& t : {fixtures::single_tet(), fixtures::figure_eight()}) {
            auto b = surface::build_boundary(t, s);
            auto cv = surface::build_cover(b);
            SurfaceHomology h(cv.total);
            for (int k = 0; k < 5; ++k) {
                Vec x = random_cycle(h, rng), y = random_cycle(h, rng);
                CHECK(intersection(cv.total, x, y) == -intersection(cv.total, y, x));
                CHECK(intersection(cv.total, x, x) == 0);
                Vec xb = x;
                Vec bd = face_boundary(cv.total, static_cast<int>(rng() % cv.total.num_faces()));
                for (std::size_t i = 0; i < xb.size(); ++i) xb[i] += 3 * bd[i];
                CHECK(intersection(cv.total, xb, y) == intersection(cv.total, x, y));
                CHECK(h.coords(xb) == h.coords(x));
            }
            // Form on the H1 basis is unimodular.
            auto eps = intersection_matrix(cv.total, h.basis());
            CHECK(unimodular(eps));
        }
}

TEST_CASE("tetrahedron odd homology") {
    auto b = surface::build_boundary(fixtures::single_tet(), surface::Stage::M);
    auto cv = surface::build_cover(b);
    SurfaceHomology h(cv.total);
    CHECK(h.rank() == 2);
    auto q = quasi_projections(cv, h);
    CHECK(q.P_plus.is_zero());
    CHECK(q.P_plus * q.P_plus == Int(2) * q.P_plus);
    CHECK(q.P_minus * q.P_minus == Int(2) * q.P_minus);
    CHECK((q.P_plus * q.P_minus).is_zero());
    CHECK(q.P_plus + q.P_minus == Int(2) * IntMatrix::identity(2));

    auto ob = odd_homology(cv, h);
    CHECK(ob.rank() == 2);
    auto cell = odd_homology_cellular(cv, h);
    CHECK(cell.rank() == 2);
    // The odd cellular group carries an extra Z/2, which dies in H1(Sigma).
    CHECK(cell.torsion == std::vector<Int>{2});

    Vec g = tet_edge_cycle(b, cv, 0, 1), gp = tet_edge_cycle(b, cv, 0, 2), gpp = tet_edge_cycle(b, cv, 0, 3);
    auto x = h.coords(g), y = h.coords(gp), z = h.coords(gpp);
    for (int i = 0; i < 2; ++i) CHECK(x[i] + y[i] + z[i] == 0);
    CHECK(intersection(cv.total, g, gp) == 1);
    CHECK(intersection(cv.total, gp, gpp) == 1);
    CHECK(intersection(cv.total, gpp, g) == 1);
    // Same cycle from the other end, and opposite edges agree.
    for (int v = 0; v < 4; ++v)
        for (int w = 0; w < 4; ++w) {
            if (v == w) continue;
            auto a = h.coords(tet_edge_cycle(b, cv, v, w));
            auto c = h.coords(tet_edge_cycle(b, cv, w, v));
            CHECK(a == c);
            int p = -1, r = -1;
            for (int u = 0; u < 4; ++u)
                if (u != v && u != w) (p < 0 ? p : r) = u;
            CHECK(a == h.coords(tet_edge_cycle(b, cv, p, r)));
        }
}

TEST_CASE("cellular, kernel and presentation bases agree on abstract fixtures") {
    surface::AbstractSurface sph;
    sph.num_small_spheres = 1;
    for (const auto& s : {surface::tetrahedron_surface(), surface::annulus_surface(), surface::small_torus_surface(), sph}) {
        auto b = surface::build_abstract(s);
        auto cv = surface::build_cover(b);
        SurfaceHomology h(cv.total);
        auto kern = odd_homology(cv, h);
        auto cell = odd_homology_cellular(cv, h);
        auto pres = odd_homology_presentation(b, cv, h);
        INFO("holes=" << s.num_holes << " annuli=" << s.annuli.size() << " tori=" << s.num_small_tori);
        CHECK(kern.rank() == cell.rank());
        CHECK(kern.rank() == pres.rank());
        CHECK(pres.torsion == cell.torsion);
        auto inv = surface::cover_invariants(b, cv);
        CHECK(kern.rank() == inv.rank_odd_difference);
        if (kern.rank() == 0) continue;
        // change of basis from presentation to kernel basis
        IntMatrix M(kern.rank(), pres.rank());
        for (int j = 0; j < pres.rank(); ++j) M.set_column(j, odd_coords(kern, h, pres.cycles.column(j)));
        CHECK(unimodular(M));
        CHECK(M.transpose() * kern.eps * M == pres.eps);
        CHECK(zlat::determinant(kern.eps) != 0);
        IntMatrix C(kern.rank(), cell.rank());
        for (int j = 0; j < cell.rank(); ++j) C.set_column(j, odd_coords(kern, h, cell.cycles.column(j)));
        CHECK(C.transpose() * kern.eps * C == cell.eps);
        CHECK(zlat::determinant(C) != 0);
    }
}

TEST_CASE("torus components double the form") {
    auto b = surface::build_abstract(surface::small_torus_surface());
    auto cv = surface::build_cover(b);
    SurfaceHomology h(cv.total);
    auto pres = odd_homology_presentation(b, cv, h);
    REQUIRE(pres.rank() == 2);
    CHECK(pres.eps(0, 1) == 2);
}

TEST_CASE("annulus presentation has lambda and tau with bracket 2") {
    auto b = surface::build_abstract(surface::annulus_surface());
    auto cv = surface::build_cover(b);
    SurfaceHomology h(cv.total);
    auto pres = odd_homology_presentation(b, cv, h);
    CHECK(pres.rank() == 4);
    // Evenness of the form on the image of P_plus.
    auto q = quasi_projections(cv, h);
    IntMatrix im = zlat::image(q.P_plus);
    IntMatrix cyc = h.basis() * im;
    auto e = intersection_matrix(cv.total, cyc);
    for (std::size_t i = 0; i < e.rows(); ++i)
        for (std::size_t j = 0; j < e.cols(); ++j) CHECK(e(i, j) % 2 == 0);
}

TEST_CASE("twisted cycles") {
    TwistedCycle a{"b", {1, 0}, 1}, c{"b", {0, 1}, 1};
    IntMatrix eps{{0, 1}, {-1, 0}};
    CHECK(intersection(a, c, eps) == 1);
    CHECK((a + c).fiber_bit == 0);
    CHECK(intersection(a, a, eps) == 0);
    TwistedCycle other{"x", {1, 0}, 0};
    CHECK_THROWS_AS(a + other, BasisMismatch);
    CHECK_THROWS_AS(intersection(a, other, eps), BasisMismatch);
}
