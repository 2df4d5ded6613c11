#include "gluesym/cli.hpp"

#include "gluesym/errors.hpp"
#include "gluesym/gluesys.hpp"
#include "gluesym/hypgeo.hpp"
#include "gluesym/moduli.hpp"
#include "gluesym/oddhom.hpp"
#include "gluesym/surface.hpp"
#include "gluesym/tri.hpp"
#include "gluesym/zlat.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace gluesym::cli {

using nlohmann::json;
using cd = std::complex<double>;

double round15(double x) {
    if (!std::isfinite(x)) return x;
    return std::stod(fmt::format("{:.15g}", x));
}

namespace {

json num(double x) { return round15(x); }
json num(cd z) { return json::array({round15(z.real()), round15(z.imag())}); }
json nums(const std::vector<cd>& v) {
    json j = json::array();
    for (cd z : v) j.push_back(num(z));
    return j;
}

json to_json(const zlat::IntMatrix& m) {
    json j = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < m.cols(); ++k) row.push_back(m(i, k).get_si());
        j.push_back(row);
    }
    return j;
}

json to_json(const std::vector<zlat::Int>& v) {
    json j = json::array();
    for (const auto& x : v) j.push_back(x.get_si());
    return j;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError(fmt::format("cannot read {}", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return fmt::format("fnv1a64:{:016x}", h);
}

int exit_code_of(const Error& e) {
    static const std::map<std::string, int> codes = {
        {"SchemaError", kParseFailure},       {"PairingError", kParseFailure},
        {"OrientationError", kParseFailure},  {"BasisMismatch", kParseFailure},
        {"NumericFailure", kNumericFailure},  {"DegenerateShape", kNumericFailure},
        {"DomainError", kNumericFailure},
    };
    auto it = codes.find(e.kind());
    return it == codes.end() ? kVerificationFailure : it->second;
}

void verdict(Report& r, std::string identity, bool ok, std::string detail = {}) {
    r.verdicts.push_back({std::move(identity), ok, std::move(detail)});
    if (!ok && r.exit_code == kPass) r.exit_code = kVerificationFailure;
}

hypgeo::SolveOptions solve_options(const Options& o) {
    hypgeo::SolveOptions so;
    so.tol = o.tol;
    so.max_iter = o.max_iter;
    so.retries = o.retries;
    so.seed = o.seed;
    return so;
}

json stage_summary(const tri::Triangulation& t, surface::Stage st) {
    auto b = surface::build_boundary(t, st);
    json j;
    j["components"] = b.num_components;
    j["genus"] = b.component_genus;
    j["euler"] = b.component_euler;
    j["hexagons"] = b.num_hexagons;
    j["big_edges"] = b.num_big_edges;
    j["defects"] = b.num_defects;
    std::map<std::string, int> pieces;
    for (const auto& p : b.small_pieces) ++pieces[surface::to_string(p.type)];
    j["small_pieces"] = pieces;
    return j;
}

void cmd_info(Report& r, const tri::Triangulation& t) {
    auto edges = tri::edge_classes(t);
    auto cusps = tri::cusp_classes(t);
    int internal = 0;
    for (const auto& e : edges) internal += e.closed;
    r.results["name"] = t.name;
    r.results["tetrahedra"] = t.num_tetrahedra;
    r.results["edges"] = internal;
    r.results["edge_classes"] = edges.size();
    json ev = json::array();
    for (const auto& e : edges) ev.push_back(e.valence());
    r.results["edge_valences"] = ev;
    r.results["cusps"] = cusps.size();
    json cj = json::array();
    for (const auto& c : cusps)
        cj.push_back({{"id", c.id}, {"topology", tri::to_string(c.topology)}, {"triangles", c.small_triangles.size()}});
    r.results["cusp_list"] = cj;
    r.results["fully_glued"] = t.fully_glued();
    json stages;
    for (auto st : {surface::Stage::M, surface::Stage::M0, surface::Stage::Mprime})
        stages[surface::to_string(st)] = stage_summary(t, st);
    r.results["stages"] = stages;
}

void cmd_homology(Report& r, const tri::Triangulation& t, const Options& o) {
    auto st = surface::parse_stage(o.stage);
    auto b = surface::build_boundary(t, st);
    auto cv = surface::build_cover(b);
    auto inv = surface::cover_invariants(b, cv);
    oddhom::SurfaceHomology h(cv.total);
    auto odd = oddhom::odd_homology(cv, h);
    r.results["stage"] = surface::to_string(st);
    r.results["rank"] = odd.rank();
    r.results["torsion"] = to_json(odd.torsion);
    r.results["eps"] = to_json(odd.eps);
    r.results["eps_invariant_factors"] = to_json(zlat::smith_normal_form(odd.eps).diagonal());
    json ij;
    ij["chi_base"] = inv.chi_base;
    ij["chi_cover"] = inv.chi_cover;
    ij["branch_points"] = inv.num_branch_points;
    ij["rank_h1_base"] = inv.rank_h1_base;
    ij["rank_h1_cover"] = inv.rank_h1_cover;
    ij["rank_odd_difference"] = inv.rank_odd_difference;
    ij["rank_odd_euler"] = inv.rank_odd_euler;
    ij["rank_odd_chains"] = inv.rank_odd_chains;
    if (inv.rank_predicted) ij["rank_predicted"] = *inv.rank_predicted;
    r.results["cover"] = ij;
    verdict(r, "rank H1 - rank H1(C) = rank of odd chains", inv.rank_odd_difference == inv.rank_odd_chains);
    verdict(r, "rank H1 - rank H1(C) = -chi(C) + #b (+ component correction)", inv.rank_odd_difference == inv.rank_odd_euler);
    verdict(r, "rank ker(1 + sigma) = rank H1 - rank H1(C)", odd.rank() == inv.rank_odd_difference);
    if (inv.rank_predicted) verdict(r, "closed-form rank", *inv.rank_predicted == odd.rank());
    if (st == surface::Stage::Mprime && t.fully_glued()) {
        auto s = gluesys::build_gluing_system(t, true);
        r.results["peripheral_basis"] = s.row_labels.size() >= 2 ? json::array({s.row_labels[0], s.row_labels[s.num_cusps]}) : json::array();
        r.results["peripheral_form"] = to_json(s.sigma_prime_form);
    }
}

void cmd_nz(Report& r, const tri::Triangulation& t, const Options& o) {
    auto s = gluesys::build_gluing_system(t, false);
    auto doc = json::parse(gluesys::nz_to_json(s));
    r.results["nz"] = doc;
    r.results["row_labels"] = s.row_labels;
    r.results["matrix"] = to_json(s.nz);
    r.results["sign_bits"] = s.sign_bits;
    if (!o.out.empty()) {
        std::ofstream out(o.out);
        if (!out) throw SchemaError(fmt::format("cannot write {}", o.out));
        out << doc.dump(2) << "\n";
        r.results["written"] = o.out;
    }
}

void cmd_verify(Report& r, const tri::Triangulation& t) {
    auto s = gluesys::build_gluing_system(t, true);
    auto rep = gluesys::check_nz(s);
    for (const auto& c : rep.checks) verdict(r, c.name, c.passed, c.detail);
    auto nc = gluesys::neumann_complex(s);
    json spots = json::array();
    bool two_only = true;
    for (const auto& sp : nc.spots) {
        for (const auto& f : sp.torsion) two_only = two_only && (f == 2);
        spots.push_back({{"rank", sp.rank}, {"torsion", to_json(sp.torsion)}});
    }
    r.results["neumann_complex"] = spots;
    bool ends_zero = nc.spots[0].rank == 0 && nc.spots[1].rank == 0 && nc.spots[3].rank == 0 && nc.spots[4].rank == 0;
    verdict(r, "Neumann complex: middle rank = rank H1^-(Sigma')", nc.spots[2].rank == static_cast<std::size_t>(2 * s.num_cusps),
            fmt::format("middle rank {}", nc.spots[2].rank));
    verdict(r, "Neumann complex: other spots rank 0", ends_zero);
    verdict(r, "Neumann complex: torsion is 2-torsion", two_only);
    r.results["gram"] = to_json(rep.gram);
    r.results["rank_nz"] = rep.rank_nz;
    r.results["rank_G"] = rep.rank_G;
    r.results["torsion"] = to_json(s.torsion);
}

json solution_json(const gluesys::GluingSystem& s, const hypgeo::ShapeSolution& sol) {
    json j;
    j["shapes"] = nums(sol.shapes);
    j["residual"] = num(sol.residual_norm);
    j["edge_residual"] = num(hypgeo::edge_residual(s, sol.shapes));
    j["converged"] = sol.converged;
    j["geometric"] = sol.geometric;
    j["iterations"] = sol.iterations;
    j["starts"] = sol.starts;
    json ct = json::array();
    for (const auto& c : sol.completeness_targets) ct.push_back({{"alpha", num(c.alpha)}, {"beta", num(c.beta)}});
    j["cusp_values"] = ct;
    return j;
}

void cmd_solve(Report& r, const tri::Triangulation& t, const Options& o, bool with_volume) {
    auto s = gluesys::build_gluing_system(t, false);
    std::vector<hypgeo::CuspTargets> targets(s.num_cusps);
    auto so = solve_options(o);
    auto sol = hypgeo::solve_shapes(s, targets, so);
    r.results["solution"] = solution_json(s, sol);
    verdict(r, "edge rows equal 1", hypgeo::edge_residual(s, sol.shapes) < std::max(o.tol, 1e-12) * 10);
    r.results["volume"] = num(hypgeo::volume(sol));
    if (!with_volume) return;
    // Volume variation along an imaginary deformation of the imposed rows.
    hypgeo::SolveOptions so2 = so;
    so2.initial = sol.shapes;
    std::vector<hypgeo::CuspTargets> tg(s.num_cusps);
    for (auto& x : tg) x.alpha = std::exp(cd(0, 0.2));
    auto base = hypgeo::solve_shapes(s, tg, so2);
    std::vector<cd> dir(s.num_cusps, cd(0, 1));
    auto d1 = hypgeo::dvol_check(s, base, dir, 1e-4, so2);
    auto d0 = hypgeo::dvol_check(s, base, dir, 1e-3, so2);
    double order = std::log10(std::abs(d0.finite_difference + d0.eta) / std::abs(d1.finite_difference + d1.eta));
    r.results["dvol"] = {{"base_volume", num(d1.volume)},
                         {"finite_difference", num(d1.finite_difference)},
                         {"eta", num(d1.eta)},
                         {"discrepancy", num(d1.discrepancy)},
                         {"observed_order", num(order)},
                         {"compared_with", "-eta(1/2 x_alpha ^ x_beta)"}};
    verdict(r, "dVol = -eta(1/2 x_alpha ^ x_beta) to 1e-6", d1.discrepancy < 1e-6, fmt::format("{:.3g}", d1.discrepancy));
}

double rel_err(const std::vector<cd>& x, const std::vector<cd>& y) {
    double e = 0;
    for (std::size_t i = 0; i < x.size(); ++i) e = std::max(e, std::abs(x[i] / y[i] - 1.0));
    return e;
}

void cmd_nonab(Report& r, const tri::Triangulation& t, const Options& o) {
    using namespace moduli;
    auto s = gluesys::build_gluing_system(t, false);
    auto cs = coordinate_system(tetrahedra_surface(s.num_tetrahedra));
    std::vector<AbelianConnection> points;
    if (!o.coords.empty()) {
        auto p = coordinates_from_json(read_file(o.coords));
        if (p.basis != cs.basis_labels) throw BasisMismatch("coordinates must use the basis " + fmt::format("{}", fmt::join(cs.basis_labels, ", ")));
        points.push_back(abelian_from_coordinates(p));
    } else {
        for (int k = 0; k < o.points; ++k) points.push_back(random_slice_point(s, o.seed + k));
    }
    double phi = 0, rec = 0, loops = 0, unip = 0, square = 0;
    auto test_loops = contractible_test_loops(cs.surface);
    json first;
    for (const auto& a : points) {
        auto A = nonabelianize(cs, a);
        auto B = reconstruct(cs, {cs.basis_labels, a.holonomy});
        phi = std::max(phi, rel_err(extract_coordinates(cs, A).values, a.holonomy));
        rec = std::max(rec, rel_err(extract_coordinates(cs, B).values, a.holonomy));
        for (const auto* C : {&A, &B}) {
            for (const auto& l : test_loops) loops = std::max(loops, loop_defect(*C, l));
            for (int h = 0; h < cs.surface.num_holes; ++h)
                unip = std::max(unip, unipotent_defect(holonomy(*C, hole_loop(cs.surface, h))));
        }
        auto g1 = glue_connection(s, a);
        auto g2 = glue_connection(t, s, A);
        for (std::size_t c = 0; c < g1.cusps.size(); ++c) {
            const auto &x = g1.cusps[c], &y = g2.cusps[c];
            square = std::max({square, std::abs(x.x_alpha - y.x_alpha), std::abs(x.x_beta - y.x_beta),
                               projective_distance(x.torus.tori[0].alpha, y.torus.tori[0].alpha),
                               projective_distance(x.torus.tori[0].beta, y.torus.tori[0].beta)});
        }
        if (first.is_null()) {
            first["coordinates"] = nums(a.holonomy);
            json cj = json::array();
            for (const auto& c : g2.cusps)
                cj.push_back({{"cusp", c.cusp},
                              {"x_alpha", num(c.x_alpha)},
                              {"x_beta", num(c.x_beta)},
                              {"removal_curve", c.removal_curve}});
            first["glued_cusps"] = cj;
            first["edge_values"] = nums(g2.edge_values);
        }
    }
    r.results["points"] = points.size();
    r.results["basis"] = cs.basis_labels;
    r.results["first_point"] = first;
    r.results["residuals"] = {{"extract_after_nonabelianize", num(phi)},
                              {"extract_after_reconstruct", num(rec)},
                              {"contractible_loops", num(loops)},
                              {"disc_unipotence", num(unip)},
                              {"commuting_square", num(square)}};
    r.results["k2_reduced"] = reduce_k2(s).str();
    verdict(r, "extract(Phi(a)) = a", phi < 1e-12, fmt::format("{:.3g}", phi));
    verdict(r, "extract(reconstruct(x)) = x", rec < 1e-12, fmt::format("{:.3g}", rec));
    verdict(r, "contractible loops are trivial", loops < 1e-12, fmt::format("{:.3g}", loops));
    verdict(r, "disc holonomies are unipotent", unip < 1e-10, fmt::format("{:.3g}", unip));
    verdict(r, "glue(Phi(a)) = Phi(glue(a))", square < 1e-10, fmt::format("{:.3g}", square));
}

}  // namespace

nlohmann::json Report::to_json() const {
    json j;
    j["command"] = command;
    j["input_digest"] = input_digest;
    j["results"] = results;
    json v = json::array();
    for (const auto& x : verdicts) {
        json e = {{"identity", x.identity}, {"passed", x.passed}};
        if (!x.detail.empty()) e["detail"] = x.detail;
        v.push_back(e);
    }
    j["verdicts"] = v;
    if (error) j["error"] = *error;
    if (seconds) j["seconds"] = round15(*seconds);
    j["exit_code"] = exit_code;
    return j;
}

Options apply_environment(Options opts) {
    if (const char* env = std::getenv("GLUESYM_SEED")) {
        try {
            opts.seed = std::stoull(env, nullptr, 0);
        } catch (const std::exception&) {
            throw SchemaError(fmt::format("GLUESYM_SEED is not an integer: {}", env));
        }
    }
    return opts;
}

const std::vector<std::string>& commands() {
    static const std::vector<std::string> c = {"info", "homology", "nz", "verify", "solve", "volume", "nonab"};
    return c;
}

Report run(const std::string& command, const std::string& file, const Options& opts) {
    Report r;
    r.command = command;
    auto start = std::chrono::steady_clock::now();
    try {
        std::string bytes = read_file(file);
        r.input_digest = fnv1a(bytes);
        auto t = tri::parse_triangulation(bytes);
        if (command == "info") cmd_info(r, t);
        else if (command == "homology") cmd_homology(r, t, opts);
        else if (command == "nz") cmd_nz(r, t, opts);
        else if (command == "verify") cmd_verify(r, t);
        else if (command == "solve") cmd_solve(r, t, opts, false);
        else if (command == "volume") cmd_solve(r, t, opts, true);
        else if (command == "nonab") cmd_nonab(r, t, opts);
        else throw SchemaError("unknown command " + command);
    } catch (const Error& e) {
        r.error = json{{"kind", e.kind()}, {"message", e.what()}};
        r.exit_code = exit_code_of(e);
    } catch (const json::exception& e) {
        r.error = json{{"kind", "SchemaError"}, {"message", e.what()}};
        r.exit_code = kParseFailure;
    }
    if (opts.timings)
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace gluesym::cli
