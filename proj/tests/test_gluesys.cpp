#include "doctest.h"

#include "fixtures.hpp"
#include "gluesym/errors.hpp"
#include "gluesym/gluesys.hpp"

#include <json.hpp>

using namespace gluesym;
using namespace gluesym::gluesys;

namespace {

IntMatrix expected_gram(int cusps, int edges) {
    return zlat::block_diag(Int(2) * zlat::standard_J(cusps), IntMatrix(edges, edges));
}

}  // namespace

TEST_CASE("figure-eight gluing system") {
    auto s = build_gluing_system(fixtures::figure_eight());
    REQUIRE(s.num_cusps == 1);
    REQUIRE(s.num_edges == 2);
    CHECK(s.nz.rows() == 4);
    CHECK(s.nz.cols() == 4);
    // Each edge row meets six tetrahedron corners.
    for (int j = 0; j < 2; ++j) {
        Int deg = 0;
        for (std::size_t k = 0; k < s.slot_counts.cols(); ++k) deg += s.slot_counts(2 + j, k);
        CHECK(deg == 6);
        CHECK(s.sign_bits[2 + j] == 0);
    }
    auto rep = verify_nz(s);
    CHECK(rep.ok());
    CHECK(rep.gram == expected_gram(1, 2));
    CHECK(rep.rank_nz == 3);
    CHECK(rep.rank_G == 1);
    CHECK(rep.reduced_form == Int(2) * zlat::standard_J(1));
    CHECK(s.q_surjective);
    CHECK(s.sigma0_form == rep.gram);
    CHECK(s.dropped_edges == std::vector<int>{1});
}

TEST_CASE("5_2 gluing system") {
    auto s = build_gluing_system(fixtures::knot_5_2());
    REQUIRE(s.num_cusps == 1);
    REQUIRE(s.num_edges == 3);
    auto rep = verify_nz(s);
    CHECK(rep.gram == expected_gram(1, 3));
    CHECK(rep.rank_G == 2);
    CHECK(rep.rank_nz == 4);
    CHECK(zlat::rank(s.G) == 2);
    for (const auto& x : s.torsion) CHECK((x == 2 || x == 4));
}

TEST_CASE("a corrupted entry is caught") {
    auto s = build_gluing_system(fixtures::figure_eight(), false);
    CHECK_NOTHROW(verify_nz(s));
    for (std::size_t k = 0; k < s.nz.cols(); ++k) {
        auto bad = s;
        bad.nz(2, k) += 1;
        CHECK_THROWS_AS(verify_nz(bad), VerificationFailure);
    }
}

TEST_CASE("unglued tetrahedron gives an empty system") {
    auto s = build_gluing_system(fixtures::single_tet());
    CHECK(s.nz.rows() == 0);
    CHECK(s.G.cols() == 0);
    CHECK(verify_nz(s).ok());
    auto nc = neumann_complex(s);
    REQUIRE(nc.spots.size() == 5);
    CHECK(nc.spots[2].rank == 2);
}

TEST_CASE("Neumann complex") {
    for (const auto& t : {fixtures::figure_eight(), fixtures::knot_5_2()}) {
        auto nc = neumann_complex(t);
        REQUIRE(nc.spots.size() == 5);
        for (int k = 0; k < 5; ++k) {
            CHECK(nc.spots[k].rank == (k == 2 ? 2u : 0u));
            for (const auto& x : nc.spots[k].torsion) CHECK(x == 2);
        }
        for (int k = 0; k + 1 < 4; ++k) CHECK((nc.maps[k + 1] * nc.maps[k]).is_zero());
    }
}

TEST_CASE("peripheral bases") {
    auto t = fixtures::figure_eight();
    auto cusps = tri::cusp_classes(t);
    REQUIRE(cusps.size() == 1);
    auto p = compute_peripheral_basis(t, cusps[0]);
    CHECK(p.base_intersection == 1);
    CHECK_FALSE(p.user_supplied);
    auto s = build_gluing_system(t);
    CHECK(s.sigma_prime_form == Int(2) * zlat::standard_J(1));

    // Supplied curves are used as given, swapped here.
    t.peripheral_curves = {{p.beta.steps, p.alpha.steps}};
    auto u = peripheral_bases(t);
    REQUIRE(u.size() == 1);
    CHECK(u[0].user_supplied);
    CHECK(u[0].alpha.steps == p.beta.steps);
    CHECK(u[0].base_intersection == -1);
    auto su = build_gluing_system(t);
    CHECK(verify_nz(su).gram(0, 1) == -2);

    auto d = fixtures::double_tet();
    auto dc = tri::cusp_classes(d);
    REQUIRE_FALSE(dc.empty());
    CHECK(dc[0].topology == tri::CuspTopology::sphere);
    CHECK_THROWS_AS(compute_peripheral_basis(d, dc[0]), NotATorus);
    CHECK_THROWS_AS(build_gluing_system(d), NotATorus);
    CHECK_THROWS_AS(compute_peripheral_basis(fixtures::single_tet(), tri::cusp_classes(fixtures::single_tet())[0]), NotATorus);
}

TEST_CASE("NZ export") {
    auto s = build_gluing_system(fixtures::figure_eight(), false);
    auto j = nlohmann::json::parse(nz_to_json(s));
    for (const char* k : {"A", "Aprime", "B", "Bprime", "C", "Cprime", "signs", "torsion"}) CHECK(j.contains(k));
    CHECK(j["A"].size() == 1);
    CHECK(j["C"].size() == 2);
    CHECK(j["C"][0].size() == 2);
    CHECK(j["signs"].size() == 4);
}
