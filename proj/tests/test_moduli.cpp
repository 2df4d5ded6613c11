#include "doctest.h"

#include "fixtures.hpp"
#include "gluesym/errors.hpp"
#include "gluesym/hypgeo.hpp"
#include "gluesym/moduli.hpp"

#include <json.hpp>

#include <numbers>
#include <random>
#include <set>

using namespace gluesym;
using namespace gluesym::moduli;

namespace {

CoordinatePoint random_point(const CoordinateSystem& cs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> re(-0.7, 0.7), im(-3.1, 3.1);
    CoordinatePoint p;
    p.basis = cs.basis_labels;
    for (int i = 0; i < cs.dim(); ++i) p.values.push_back(std::exp(cd(re(rng), im(rng))));
    return p;
}

double relative_error(const CoordinatePoint& x, const CoordinatePoint& y) {
    double e = 0;
    for (std::size_t i = 0; i < x.values.size(); ++i) e = std::max(e, std::abs(x.values[i] / y.values[i] - 1.0));
    return e;
}

std::set<int> annulus_holes(const surface::AbstractSurface& s) {
    std::set<int> out;
    for (auto a : s.annuli) out.insert({a[0], a[1]});
    return out;
}

// Abelian connection with x_gamma = -z, x_gamma' = -z' for shapes z.
AbelianConnection from_shapes(const std::vector<cd>& z) {
    AbelianConnection a;
    const int n = static_cast<int>(z.size());
    for (int i = 0; i < n; ++i) a.basis.push_back("gamma_" + std::to_string(i));
    for (int i = 0; i < n; ++i) a.basis.push_back("gammap_" + std::to_string(i));
    for (cd x : z) a.holonomy.push_back(-x);
    for (cd x : z) a.holonomy.push_back(-hypgeo::shape_prime(x));
    return a;
}

}  // namespace

TEST_CASE("cross ratio of four lines") {
    Vec2 a(1, 0), b(0, 1), c(1, 1), d(1, 3);
    // -<ab><cd> / (<ac><bd>) = -(1 * 2) / (1 * (-1))
    CHECK(std::abs(cross_ratio_edge(a, b, c, d) - 2.0) < 1e-15);
    CHECK(std::abs(cross_ratio_edge(a, 7.0 * b, c, d) - 2.0) < 1e-15);
    CHECK(std::abs(cross_ratio_edge(cd(0, 2) * a, b, -3.0 * c, d) - 2.0) < 1e-15);
    CHECK_THROWS_AS(cross_ratio_edge(a, b, c, c), DegenerateConfiguration);
    CHECK_THROWS_AS(cross_ratio_edge(a, 2.0 * a, c, d), DegenerateConfiguration);
}

TEST_CASE("traffic rule matrix identities") {
    Mat2 ST = matrix_S() * matrix_T();
    Mat2 c = ST * ST * ST;
    // exactly the identity
    CHECK((c - Mat2::Identity()).norm() < 1e-15);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> r(-3, 3);
    for (int k = 0; k < 100; ++k) {
        cd x(r(rng), r(rng));
        Mat2 m = matrix_H(x) * matrix_S();
        CHECK(((m * m) + x * Mat2::Identity()).norm() < 1e-14 * (1 + std::abs(x)));
        CHECK(distance_to_identity(m * m) < 1e-14);
    }
}

TEST_CASE("three lines and eigenvalue ratios") {
    Vec2 p1(1, 2), p2(cd(0, 1), 1), p3(3, -1), q1(1, 0), q2(0, 1), q3(1, 1);
    Mat2 M = map_three_lines(p1, p2, p3, q1, q2, q3);
    for (auto [p, q] : {std::pair{p1, q1}, std::pair{p2, q2}, std::pair{p3, q3}}) CHECK(std::abs(wedge(M * p, q)) < 1e-14);
    Mat2 d;
    d << 3.0, 0.0, 0.0, 0.5;
    CHECK(std::abs(eigen_ratio(d, Vec2(1, 0)) - 6.0) < 1e-14);
    CHECK(std::abs(eigen_ratio(d, Vec2(0, 1)) - 1.0 / 6.0) < 1e-14);
    CHECK_THROWS_AS(eigen_ratio(d, Vec2(1, 1)), DegenerateConfiguration);
    Mat2 u;
    u << 1.0, 0.0, 5.0, 1.0;
    CHECK(unipotent_defect(u) < 1e-15);
    CHECK(unipotent_defect(d) > 1);
}

TEST_CASE("tetrahedron coordinate system") {
    auto cs = coordinate_system(surface::tetrahedron_surface());
    CHECK(cs.tetrahedra);
    CHECK(cs.basis_labels == std::vector<std::string>{"gamma_0", "gammap_0"});
    CHECK(cs.eps == IntMatrix{{0, 1}, {-1, 0}});
    CHECK(cs.num_generators() == 6);
    // Opposite edges carry the same coordinate and x x' x'' = 1.
    std::mt19937_64 rng(2);
    auto p = random_point(cs, rng);
    auto g = generator_values(cs, p);
    std::map<std::string, cd> by_label;
    for (int i = 0; i < cs.num_generators(); ++i) by_label[cs.generators[i].label] = g[i];
    CHECK(std::abs(by_label["x_0.01"] - by_label["x_0.23"]) < 1e-14);
    CHECK(std::abs(by_label["x_0.02"] - by_label["x_0.13"]) < 1e-14);
    CHECK(std::abs(by_label["x_0.03"] - by_label["x_0.12"]) < 1e-14);
    CHECK(std::abs(by_label["x_0.01"] * by_label["x_0.02"] * by_label["x_0.03"] - 1.0) < 1e-14);
    CHECK(std::abs(by_label["x_0.01"] - p.values[0]) < 1e-15);
}

TEST_CASE("reconstruction and non-abelianization round trips") {
    std::mt19937_64 rng(17);
    for (const auto& s : {surface::tetrahedron_surface(), surface::annulus_surface(), surface::small_torus_surface()}) {
        auto cs = coordinate_system(s);
        auto loops = contractible_test_loops(s);
        auto discs = annulus_holes(s);
        double rec = 0, phi = 0, loop = 0, unip = 0;
        for (int k = 0; k < 100; ++k) {
            auto p = random_point(cs, rng);
            auto A = reconstruct(cs, p);
            auto B = nonabelianize(cs, abelian_from_coordinates(p));
            rec = std::max(rec, relative_error(extract_coordinates(cs, A), p));
            phi = std::max(phi, relative_error(extract_coordinates(cs, B), p));
            for (const auto* C : {&A, &B}) {
                for (const auto& l : loops) loop = std::max(loop, loop_defect(*C, l));
                for (int h = 0; h < s.num_holes; ++h)
                    if (!discs.count(h)) unip = std::max(unip, unipotent_defect(holonomy(*C, hole_loop(s, h))));
            }
        }
        CHECK(rec < 1e-12);
        CHECK(phi < 1e-12);
        CHECK(loop < 1e-12);
        CHECK(unip < 1e-10);
    }
}

TEST_CASE("edge crossings and hexagon bases") {
    auto cs = coordinate_system(surface::tetrahedron_surface());
    std::mt19937_64 rng(5);
    auto A = reconstruct(cs, random_point(cs, rng));
    // One side of each face crossed there and back.
    for (int f = 0; f < 4; ++f) {
        auto [g, j] = A.surface.glue[f][0];
        CHECK(distance_to_identity(A.transport[g][j] * A.transport[f][0]) < 1e-12);
    }
    // In the hexagon bases the next side is reached by S T.
    for (int f = 0; f < 4; ++f) {
        auto B = hexagon_bases(A, f);
        for (int i = 0; i < 3; ++i) {
            Mat2 change = B[(i + 1) % 3].inverse() * B[i];
            CHECK(projective_distance(change, matrix_S() * matrix_T()) < 1e-12);
        }
    }
}

TEST_CASE("products around holes") {
    std::mt19937_64 rng(23);
    for (const auto& s : {surface::tetrahedron_surface(), surface::annulus_surface()}) {
        auto cs = coordinate_system(s);
        auto hc = s.hole_corners();
        for (int k = 0; k < 20; ++k) {
            auto p = random_point(cs, rng);
            auto g = generator_values(cs, p);
            auto A = reconstruct(cs, p);
            for (int h = 0; h < s.num_holes; ++h) {
                cd prod = 1.0;
                for (auto [f, i] : hc[h]) prod *= g[cs.side_generator[3 * f + (i + 2) % 3]];
                cd expect = 1.0;
                for (std::size_t a = 0; a < s.annuli.size(); ++a) {
                    cd l = g[cs.generator_index(Generator::Kind::lambda, static_cast<int>(a))];
                    if (s.annuli[a][0] == h) expect = 1.0 / l;
                    if (s.annuli[a][1] == h) expect = l;
                }
                CHECK(std::abs(prod - expect) < 1e-12);
                // The hole holonomy is [[1, 0], [*, prod^-1]] on its framing line.
                auto [f0, i0] = hc[h].front();
                CHECK(std::abs(eigen_ratio(holonomy(A, hole_loop(s, h)), A.lines[f0][i0]) - 1.0 / prod) < 1e-10);
            }
        }
    }
}

TEST_CASE("restriction flags") {
    auto ann = coordinate_system(surface::annulus_surface());
    std::mt19937_64 rng(3);
    auto p = random_point(ann, rng);
    int li = 0;
    while (ann.basis_labels[li] != "lambda_0") ++li;
    p.values[li] = 1.0;
    CHECK_THROWS_AS(reconstruct(ann, p), UnipotentAnnulus);
    CHECK_THROWS_AS(nonabelianize(ann, abelian_from_coordinates(p)), UnipotentAnnulus);

    auto tor = coordinate_system(surface::small_torus_surface());
    CoordinatePoint one{tor.basis_labels, {1.0, 1.0}};
    CHECK_THROWS_AS(reconstruct(tor, one), UnipotentTorus);
    CHECK_THROWS_AS(nonabelianize(tor, abelian_from_coordinates(one)), UnipotentTorus);

    CoordinatePoint four{tor.basis_labels, {4.0, 1.0}};
    auto A = reconstruct(tor, four);
    Mat2 expect;
    expect << 1.0, 0.0, 0.0, 0.25;
    CHECK(projective_distance(A.tori[0].alpha, expect) < 1e-15);
    CHECK(std::abs(eigen_ratio(A.tori[0].alpha, A.tori[0].framing) - 4.0) < 1e-15);
    CHECK(distance_to_identity(A.tori[0].beta) < 1e-15);

    auto sphere = surface::small_torus_surface();
    sphere.num_small_tori = 0;
    sphere.num_small_spheres = 1;
    CHECK_THROWS_AS(coordinate_system(sphere), NonAbelianSmallBoundary);

    CoordinatePoint wrong{{"a", "b"}, {2.0, 3.0}};
    CHECK_THROWS_AS(reconstruct(tor, wrong), BasisMismatch);
    CHECK_THROWS_AS(reconstruct(tor, CoordinatePoint{tor.basis_labels, {2.0}}), BasisMismatch);
}

TEST_CASE("coordinate JSON round trip") {
    auto cs = coordinate_system(surface::annulus_surface());
    std::mt19937_64 rng(8);
    auto p = random_point(cs, rng);
    auto q = coordinates_from_json(coordinates_to_json(p));
    CHECK(q.basis == p.basis);
    CHECK(relative_error(q, p) < 1e-15);
    CHECK_THROWS_AS(coordinates_from_json("{\"basis\": [\"a\"], \"values\": []}"), SchemaError);
    CHECK_THROWS_AS(coordinates_from_json("not json"), SchemaError);
    auto dump = nlohmann::json::parse(connection_to_json(reconstruct(cs, p)));
    CHECK(dump["transports"].size() == 12);
    CHECK(dump["annuli"].size() == 1);
    CHECK(dump["transports"]["0"][1][1].size() == 2);
}

TEST_CASE("brackets and K2 forms") {
    auto tet = coordinate_system(surface::tetrahedron_surface());
    oddhom::TwistedCycle g{"tet", {1, 0}, 0}, gp{"tet", {0, 1}, 0};
    CHECK(poisson_bracket(g, gp, tet.eps) == 1);
    // gamma'' = -gamma - gamma'
    auto gpp = -(g + gp);
    CHECK(poisson_bracket(gp, gpp, tet.eps) == 1);
    CHECK(poisson_bracket(gpp, g, tet.eps) == 1);
    auto tor = coordinate_system(surface::small_torus_surface());
    CHECK(poisson_bracket({"t", {1, 0}, 0}, {"t", {0, 1}, 1}, tor.eps) == 2);

    auto w = k2_form({"x_gamma", "x_gammap"}, tet.eps);
    CHECK(w.coeff[0][1] == 1);
    CHECK(w.str() == "x_gamma ^ x_gammap");
    auto wt = k2_form({"x_alpha", "x_beta"}, tor.eps);
    CHECK(wt.coeff[0][1] == mpq_class(1, 2));
    CHECK(wt.str() == "1/2 x_alpha ^ x_beta");
    CHECK_THROWS_AS(k2_form({"a", "b"}, IntMatrix(2, 2)), SingularForm);

    // eta(a ^ b) = log|a| d arg b - log|b| d arg a
    double e = eta(w, {cd(2, 0), cd(0, 3)}, {cd(0.1, 0.5), cd(0.2, -0.25)});
    CHECK(std::abs(e - (std::log(2.0) * -0.25 - std::log(3.0) * 0.5)) < 1e-15);
}

TEST_CASE("K2 reduction of the knot complements") {
    for (const auto& t : {fixtures::figure_eight(), fixtures::knot_5_2()}) {
        auto s = gluesys::build_gluing_system(t, false);
        auto w = reduce_k2(s);
        FormalWedge expect{{"x_alpha_0", "x_beta_0"}, {{0, mpq_class(1, 2)}, {mpq_class(-1, 2), 0}}};
        CHECK(w == expect);
        CHECK(w.str() == "1/2 x_alpha_0 ^ x_beta_0");
    }
}

TEST_CASE("fibre bits in path coordinates") {
    AbelianConnection a{{"g", "h"}, {cd(2, 1), cd(0.5, -3)}};
    Vec c1{1, 2}, c2{-3, 1};
    Vec sum{-2, 3};
    for (int b1 : {0, 1})
        for (int b2 : {0, 1}) {
            cd lhs = a.value(sum, b1 ^ b2), rhs = a.value(c1, b1) * a.value(c2, b2);
            CHECK(std::abs(lhs - rhs) < 1e-12 * std::abs(rhs));
        }
    CHECK(a.value({0, 0}, 1) == cd(-1, 0));
}

TEST_CASE("gluing on the moment-map slice") {
    for (const auto& t : {fixtures::figure_eight(), fixtures::knot_5_2()}) {
        auto s = gluesys::build_gluing_system(t, false);
        auto cs = coordinate_system(tetrahedra_surface(s.num_tetrahedra));
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            auto a = random_slice_point(s, seed);
            auto A = nonabelianize(cs, a);
            // Every row of the NZ system, sign included, is the eigenvalue
            // ratio of the holonomy along its path.
            for (std::size_t r = 0; r < s.num_rows(); ++r) {
                Vec2 l;
                Mat2 H = row_holonomy(t, s, A, r, &l).inverse();
                cd v = a.value(s.nz.row(r), s.sign_bits[r]);
                CHECK(std::abs(eigen_ratio(H, l, 1e-7) - v) < 1e-10 * std::max(1.0, std::abs(v)));
            }
            auto g1 = glue_connection(s, a);
            auto g2 = glue_connection(t, s, A);
            auto g3 = glue_connection(t, s, reconstruct(cs, {cs.basis_labels, a.holonomy}));
            REQUIRE(g1.cusps.size() == 1);
            for (const auto* g : {&g2, &g3}) {
                CHECK(std::abs(g->cusps[0].x_alpha - g1.cusps[0].x_alpha) < 1e-10);
                CHECK(std::abs(g->cusps[0].x_beta - g1.cusps[0].x_beta) < 1e-10);
                CHECK(projective_distance(g->cusps[0].torus.tori[0].alpha, g1.cusps[0].torus.tori[0].alpha) < 1e-10);
                CHECK(projective_distance(g->cusps[0].torus.tori[0].beta, g1.cusps[0].torus.tori[0].beta) < 1e-10);
                CHECK(g->cusps[0].removal_curve == "alpha");
            }
            for (cd e : g2.edge_values) CHECK(std::abs(e - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("gluing at and near the complete structure") {
    auto t = fixtures::figure_eight();
    auto s = gluesys::build_gluing_system(t, false);
    auto cs = coordinate_system(tetrahedra_surface(2));
    const cd w = std::polar(1.0, std::numbers::pi / 3);
    auto complete = from_shapes({w, w});
    CHECK_THROWS_AS(glue_connection(s, complete), UnipotentTorus);
    CHECK_THROWS_AS(glue_connection(t, s, nonabelianize(cs, complete)), UnipotentTorus);

    hypgeo::SolveOptions opts;
    opts.initial = std::vector<cd>{w, w};
    auto sol = hypgeo::solve_shapes(s, {{std::exp(cd(0.01, 0)), 1.0}}, opts);
    REQUIRE(sol.converged);
    auto a = from_shapes(sol.shapes);
    auto g1 = glue_connection(s, a);
    auto g2 = glue_connection(t, s, nonabelianize(cs, a));
    CHECK(std::abs(g1.cusps[0].x_alpha - std::exp(0.01)) < 1e-10);
    CHECK(std::abs(g1.cusps[0].x_beta - sol.completeness_targets[0].beta) < 1e-10);
    CHECK(std::abs(g1.cusps[0].x_beta - 1.0) > 1e-4);
    CHECK(std::abs(g2.cusps[0].x_alpha - g1.cusps[0].x_alpha) < 1e-10);
    CHECK(std::abs(g2.cusps[0].x_beta - g1.cusps[0].x_beta) < 1e-10);

    // Break one edge: x_{g(mu)} = 2.
    auto bad = random_slice_point(s, 4);
    Vec row = s.nz.row(2 * s.num_cusps);
    int i = 0;
    while (row[i] == 0) ++i;
    bad.holonomy[i] *= std::pow(cd(2.0, 0), 1.0 / row[i].get_d());
    CHECK_THROWS_AS(glue_connection(s, bad), MomentMapViolation);
    CHECK_THROWS_AS(glue_connection(t, s, nonabelianize(cs, bad)), MomentMapViolation);
    try {
        glue_connection(s, bad);
    } catch (const MomentMapViolation& e) {
        CHECK(std::string(e.what()).find("edge") != std::string::npos);
    }
}
