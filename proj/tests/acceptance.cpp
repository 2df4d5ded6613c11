// Acceptance run: one PASS/FAIL line per criterion.

#include "fixtures.hpp"
#include "gluesym/errors.hpp"
#include "gluesym/gluesys.hpp"
#include "gluesym/hypgeo.hpp"
#include "gluesym/moduli.hpp"
#include "gluesym/oddhom.hpp"
#include "gluesym/surface.hpp"
#include "gluesym/zlat.hpp"
#include "oracles.hpp"

#include <fmt/format.h>

#include <functional>
#include <numbers>
#include <random>
#include <set>

using namespace gluesym;
using zlat::Int;
using zlat::IntMatrix;
using cd = std::complex<double>;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

const gluesys::Check* find_check(const gluesys::NZReport& r, const std::string& name) {
    for (const auto& c : r.checks)
        if (c.name == name) return &c;
    return nullptr;
}

bool check_passed(const gluesys::NZReport& r, const std::string& name) {
    const auto* c = find_check(r, name);
    return c && c->passed;
}

Outcome tetrahedron_homology() {
    auto cs = moduli::coordinate_system(surface::tetrahedron_surface());
    Outcome o;
    o.ok = cs.dim() == 2 && cs.eps == IntMatrix{{0, 1}, {-1, 0}};
    // gamma'' is the edge 03 cycle.
    zlat::Vec gpp;
    for (int g = 0; g < cs.num_generators(); ++g)
        if (cs.generators[g].label == "x_0.03") gpp = cs.generators_in_basis.column(g);
    o.ok = o.ok && gpp == zlat::Vec{-1, -1};
    oddhom::TwistedCycle g{"t", {1, 0}, 0}, gp{"t", {0, 1}, 0}, gq{"t", gpp, 0};
    Int a = oddhom::intersection(g, gp, cs.eps), b = oddhom::intersection(gp, gq, cs.eps), c = oddhom::intersection(gq, g, cs.eps);
    o.ok = o.ok && a == 1 && b == 1 && c == 1;
    // Independently from the cover of the stage-M boundary.
    auto bd = surface::build_boundary(fixtures::single_tet(), surface::Stage::M);
    auto cv = surface::build_cover(bd);
    oddhom::SurfaceHomology h(cv.total);
    auto odd = oddhom::odd_homology(cv, h);
    o.ok = o.ok && odd.rank() == 2;
    o.detail = fmt::format("rank {}, gamma'' = ({}, {}), brackets {} {} {}", cs.dim(), gpp.at(0).get_si(), gpp.at(1).get_si(),
                           a.get_si(), b.get_si(), c.get_si());
    return o;
}

Outcome rank_formulas() {
    Outcome o;
    int checked = 0, predicted = 0;
    auto test = [&](const surface::BoundarySurface& b) {
        auto cv = surface::build_cover(b);
        surface::CoverInvariants inv;
        try {
            inv = surface::cover_invariants(b, cv);
        } catch (const InternalInconsistency& e) {
            o.ok = false;
            o.detail = e.what();
            return;
        }
        ++checked;
        if (inv.rank_odd_difference != inv.rank_odd_euler || inv.rank_odd_difference != inv.rank_odd_chains) o.ok = false;
        if (inv.rank_predicted) {
            ++predicted;
            if (*inv.rank_predicted != inv.rank_odd_difference) o.ok = false;
        }
    };
    std::vector<tri::Triangulation> fx = {fixtures::single_tet(), fixtures::double_tet(), fixtures::figure_eight(),
                                          fixtures::knot_5_2(), fixtures::figure_eight_partial()};
    for (const auto& t : fx)
        for (auto st : {surface::Stage::M, surface::Stage::M0, surface::Stage::Mprime}) {
            try {
                test(surface::build_boundary(t, st));
            } catch (const NonAbelianSmallBoundary&) {
            }
        }
    for (const auto& s : {surface::tetrahedron_surface(), surface::annulus_surface(), surface::small_torus_surface()})
        test(surface::build_abstract(s));
    std::mt19937 rng(2026);
    int random = 0;
    for (int k = 0; random < 200 && k < 2000; ++k) {
        const auto& base = fx[2 + k % 2];
        std::vector<int> set;
        for (int i = 0; i < static_cast<int>(base.gluings.size()); ++i)
            if (rng() % 2) set.push_back(i);
        auto u = base.with_glue_set(set);
        try {
            test(surface::build_boundary(u, k % 4 < 2 ? surface::Stage::M0 : surface::Stage::Mprime));
            ++random;
        } catch (const NonAbelianSmallBoundary&) {
        }
    }
    if (random < 200) o.ok = false;
    if (o.detail.empty()) o.detail = fmt::format("{} surfaces ({} random partial gluings), closed form on {}", checked, random, predicted);
    return o;
}

Outcome nz_identity() {
    Outcome o;
    std::vector<std::string> parts;
    for (auto [t, zeros, rank] : {std::tuple{fixtures::figure_eight(), 2, 3}, std::tuple{fixtures::knot_5_2(), 3, 4}}) {
        auto s = gluesys::build_gluing_system(t, false);
        auto rep = gluesys::check_nz(s);
        IntMatrix expect = zlat::block_diag(2 * zlat::standard_J(1), IntMatrix(zeros, zeros));
        bool ok = rep.gram == expect && rep.rank_nz == static_cast<std::size_t>(rank);
        o.ok = o.ok && ok;
        parts.push_back(fmt::format("{}: rank {}", t.name, rep.rank_nz));
    }
    o.detail = fmt::format("{}", fmt::join(parts, "; "));
    return o;
}

Outcome isotropy_and_reduction() {
    Outcome o;
    for (const auto& t : {fixtures::figure_eight(), fixtures::knot_5_2()}) {
        auto s = gluesys::build_gluing_system(t, true);
        auto rep = gluesys::check_nz(s);
        for (const char* name : {"isotropy <G,G> = 0", "rank G = N - n_c", "form on K/G = 2J per cusp"})
            if (!check_passed(rep, name)) {
                o.ok = false;
                o.detail += fmt::format("{}: {} failed; ", t.name, name);
            }
    }
    if (o.ok) o.detail = "figure-eight and 5_2";
    return o;
}

Outcome neumann_complex() {
    Outcome o;
    for (const auto& t : {fixtures::figure_eight(), fixtures::knot_5_2()}) {
        auto s = gluesys::build_gluing_system(t, false);
        auto nc = gluesys::neumann_complex(s);
        for (int k = 0; k < 5; ++k) {
            std::size_t expect = k == 2 ? 2 * s.num_cusps : 0;
            if (nc.spots[k].rank != expect) o.ok = false;
            for (const auto& f : nc.spots[k].torsion)
                if (f != 2) o.ok = false;
        }
        o.detail += fmt::format("{}: middle rank {}; ", t.name, nc.spots[2].rank);
    }
    return o;
}

Outcome flip_invariance() {
    Outcome o;
    auto s = surface::tetrahedron_surface();
    auto base_b = surface::build_abstract(s);
    auto base = surface::cover_invariants(base_b, surface::build_cover(base_b));
    auto rank_of = [](const surface::BoundarySurface& b) {
        auto cv = surface::build_cover(b);
        oddhom::SurfaceHomology h(cv.total);
        return oddhom::odd_homology(cv, h).rank();
    };
    int r0 = rank_of(base_b);
    std::mt19937 rng(99);
    int flips = 0;
    while (flips < 20) {
        int f = rng() % s.faces.size(), i = rng() % 3;
        try {
            s = surface::flip(s, f, i);
        } catch (const NotAdjacent&) {
            continue;
        }
        ++flips;
        auto b = surface::build_abstract(s);
        auto inv = surface::cover_invariants(b, surface::build_cover(b));
        bool same = inv.chi_base == base.chi_base && inv.chi_cover == base.chi_cover &&
                    inv.num_branch_points == base.num_branch_points && inv.genus_cover == base.genus_cover &&
                    inv.rank_odd_difference == base.rank_odd_difference && rank_of(b) == r0;
        o.ok = o.ok && same;
    }
    o.detail = fmt::format("{} flips, odd rank {}", flips, r0);
    return o;
}

moduli::CoordinatePoint random_point(const moduli::CoordinateSystem& cs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> re(-0.7, 0.7), im(-3.1, 3.1);
    moduli::CoordinatePoint p;
    p.basis = cs.basis_labels;
    for (int i = 0; i < cs.dim(); ++i) p.values.push_back(std::exp(cd(re(rng), im(rng))));
    return p;
}

double rel_err(const std::vector<cd>& x, const std::vector<cd>& y) {
    double e = 0;
    for (std::size_t i = 0; i < x.size(); ++i) e = std::max(e, std::abs(x[i] / y[i] - 1.0));
    return e;
}

const std::vector<surface::AbstractSurface>& moduli_fixtures() {
    static const std::vector<surface::AbstractSurface> f = {surface::tetrahedron_surface(), surface::annulus_surface(),
                                                            surface::small_torus_surface()};
    return f;
}

Outcome reconstruction_round_trip() {
    std::mt19937_64 rng(7001);
    double rec = 0, loops = 0;
    for (const auto& s : moduli_fixtures()) {
        auto cs = moduli::coordinate_system(s);
        auto tl = moduli::contractible_test_loops(s);
        for (int k = 0; k < 100; ++k) {
            auto p = random_point(cs, rng);
            auto A = moduli::reconstruct(cs, p);
            rec = std::max(rec, rel_err(moduli::extract_coordinates(cs, A).values, p.values));
            for (const auto& l : tl) loops = std::max(loops, moduli::loop_defect(A, l));
        }
    }
    return {rec < 1e-12 && loops < 1e-12, fmt::format("round trip {:.2e}, loops {:.2e}", rec, loops)};
}

Outcome nonabelianization() {
    std::mt19937_64 rng(7002);
    double phi = 0, unip = 0;
    for (const auto& s : moduli_fixtures()) {
        auto cs = moduli::coordinate_system(s);
        std::set<int> annulus;
        for (auto a : s.annuli) annulus.insert({a[0], a[1]});
        for (int k = 0; k < 100; ++k) {
            auto a = moduli::abelian_from_coordinates(random_point(cs, rng));
            auto A = moduli::nonabelianize(cs, a);
            phi = std::max(phi, rel_err(moduli::extract_coordinates(cs, A).values, a.holonomy));
            for (int h = 0; h < s.num_holes; ++h)
                if (!annulus.count(h)) unip = std::max(unip, moduli::unipotent_defect(moduli::holonomy(A, moduli::hole_loop(s, h))));
        }
    }
    return {phi < 1e-12 && unip < 1e-10, fmt::format("Phi* error {:.2e}, disc unipotence {:.2e}", phi, unip)};
}

Outcome commuting_square() {
    auto t = fixtures::figure_eight();
    auto s = gluesys::build_gluing_system(t, false);
    auto cs = moduli::coordinate_system(moduli::tetrahedra_surface(s.num_tetrahedra));
    double worst = 0, moment = 0, off = 1e300;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto a = moduli::random_slice_point(s, seed);
        auto g1 = moduli::glue_connection(s, a);
        auto g2 = moduli::glue_connection(t, s, moduli::nonabelianize(cs, a));
        for (cd e : g2.edge_values) moment = std::max(moment, std::abs(e - 1.0));
        const auto &x = g1.cusps[0], &y = g2.cusps[0];
        off = std::min(off, std::abs(x.x_alpha - 1.0) + std::abs(x.x_beta - 1.0));
        worst = std::max({worst, std::abs(x.x_alpha - y.x_alpha), std::abs(x.x_beta - y.x_beta),
                          moduli::projective_distance(x.torus.tori[0].alpha, y.torus.tori[0].alpha),
                          moduli::projective_distance(x.torus.tori[0].beta, y.torus.tori[0].beta)});
    }
    return {worst < 1e-10 && moment < 1e-10 && off > 1e-6,
            fmt::format("max difference {:.2e}, edge rows within {:.2e} of 1", worst, moment)};
}

Outcome hyperbolic_solve() {
    Outcome o;
    const cd w = std::polar(1.0, std::numbers::pi / 3);
    auto s8 = gluesys::build_gluing_system(fixtures::figure_eight(), false);
    auto sol = hypgeo::solve_shapes(s8, {hypgeo::CuspTargets{}});
    double dz = 0;
    for (cd z : sol.shapes) dz = std::max(dz, std::abs(z - w));
    double vol = hypgeo::volume(sol);
    double oracle = 2 * oracle::clausen2(std::numbers::pi / 3);
    o.ok = sol.converged && dz < 1e-9 && std::abs(vol - 2.029883212819) < 1e-9 && std::abs(vol - oracle) < 1e-9;

    auto s52 = gluesys::build_gluing_system(fixtures::knot_5_2(), false);
    std::vector<std::vector<cd>> geometric;
    for (int k = 0; k < 50; ++k) {
        hypgeo::SolveOptions opts;
        opts.seed = 1000 + k;
        opts.retries = 1;
        try {
            auto r = hypgeo::solve_shapes(s52, {hypgeo::CuspTargets{}}, opts);
            if (r.geometric) geometric.push_back(r.shapes);
        } catch (const NumericFailure&) {
        } catch (const DegenerateShape&) {
        }
    }
    double spread = 0, vdev = 0;
    for (std::size_t i = 0; i < geometric.size(); ++i) {
        vdev = std::max(vdev, std::abs(hypgeo::volume(geometric[i]) - 2.828122088330783));
        for (std::size_t j = 0; j < i; ++j)
            for (std::size_t k = 0; k < geometric[i].size(); ++k) spread = std::max(spread, std::abs(geometric[i][k] - geometric[j][k]));
    }
    o.ok = o.ok && geometric.size() >= 2 && spread < 1e-10 && vdev < 1e-9;
    o.detail = fmt::format("4_1: |z - w| {:.1e}, vol {:.13f}; 5_2: {} of 50 starts geometric, spread {:.1e}, vol error {:.1e}", dz,
                           vol, geometric.size(), spread, vdev);
    return o;
}

Outcome volume_variation() {
    Outcome o;
    for (const auto& t : {fixtures::figure_eight(), fixtures::knot_5_2()}) {
        auto s = gluesys::build_gluing_system(t, false);
        auto complete = hypgeo::solve_shapes(s, {hypgeo::CuspTargets{}});
        hypgeo::CuspTargets tg;
        tg.alpha = std::exp(cd(0, 0.2));
        hypgeo::SolveOptions opts;
        opts.initial = complete.shapes;
        auto base = hypgeo::solve_shapes(s, {tg}, opts);
        std::vector<cd> dir{cd(0, 1)};
        auto r1 = hypgeo::dvol_check(s, base, dir, 1e-4);
        auto r0 = hypgeo::dvol_check(s, base, dir, 1e-3);
        double order = std::log10(std::abs(r0.finite_difference + r0.eta) / std::abs(r1.finite_difference + r1.eta));
        bool ok = r1.discrepancy < 1e-6 && order > 1.8 && order < 2.2;
        o.ok = o.ok && ok;
        o.detail += fmt::format("{}: discrepancy {:.1e}, order {:.2f}; ", t.name, r1.discrepancy, order);
    }
    o.detail += "against -eta";
    return o;
}

Outcome lattice_core() {
    Outcome o;
    std::mt19937_64 rng(424242);
    int snf = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        IntMatrix A = oracle::random_matrix(rng, 1 + rng() % 10, 1 + rng() % 10, 9);
        auto s = zlat::smith_normal_form(A);
        bool ok = s.U * A * s.V == s.D && abs(zlat::determinant(s.U)) == 1 && abs(zlat::determinant(s.V)) == 1 &&
                  oracle::is_smith_form(s.D);
        if (ok && A.rows() <= 4 && A.cols() <= 4) ok = s.diagonal() == oracle::invariant_factors(A);
        snf += ok;
    }
    int red = 0, total = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 2 + rng() % 5;
        IntMatrix eps = oracle::random_skew(rng, n, 3);
        IntMatrix G = oracle::random_isotropic(rng, eps, 1 + rng() % 3);
        auto r = zlat::symplectic_reduce(eps, G);
        auto b = oracle::brute_reduce(eps, G);
        ++total;
        red += r.K.cols() == b.kernel_rank && r.quotient.free_rank == b.free_rank && r.quotient.torsion == b.torsion &&
               oracle::invariant_factors(r.form) == b.form_invariants && oracle::same_lattice(r.K, b.kernel);
    }
    o.ok = snf == 1000 && red == total;
    o.detail = fmt::format("SNF {}/1000, symplectic_reduce {}/{}", snf, red, total);
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"tetrahedron homology", tetrahedron_homology},
        {"rank formulas", rank_formulas},
        {"NZ identity g J g^T", nz_identity},
        {"isotropy and reduction", isotropy_and_reduction},
        {"Neumann complex", neumann_complex},
        {"flip invariance", flip_invariance},
        {"reconstruction round trip", reconstruction_round_trip},
        {"non-abelianization", nonabelianization},
        {"commuting square", commuting_square},
        {"hyperbolic solve", hyperbolic_solve},
        {"volume variation", volume_variation},
        {"lattice core", lattice_core},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.ok;
        fmt::print("{:>2}. {} {}: {}\n", k + 1, o.ok ? "PASS" : "FAIL", criteria[k].first, o.detail);
    }
    return failed == 0 ? 0 : 1;
}
