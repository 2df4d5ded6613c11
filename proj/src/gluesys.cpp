#include "gluesym/gluesys.hpp"

#include "gluesym/errors.hpp"
#include "gluesym/oddhom.hpp"
#include "gluesym/surface.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>

namespace gluesym::gluesys {

using pathalg::SmallPath;
using surface::Stage;

namespace {

// Leaving the small triangle (tet, v) through its side on `face`.
struct Crossing {
    int tet = 0, v = 0, face = 0;
    auto operator<=>(const Crossing&) const = default;
};
using Word = std::vector<Crossing>;

Crossing reverse(const tri::Triangulation& t, const Crossing& c) {
    const auto* p = t.pairing(c.tet, c.face);
    return {p->to_tet, p->perm[c.v], p->to_face};
}

Word inverse(const tri::Triangulation& t, const Word& w) {
    Word out;
    for (auto it = w.rbegin(); it != w.rend(); ++it) out.push_back(reverse(t, *it));
    return out;
}

Word reduce(const tri::Triangulation& t, const Word& w) {
    Word s;
    for (const auto& c : w) {
        if (!s.empty() && reverse(t, s.back()) == c)
            s.pop_back();
        else
            s.push_back(c);
    }
    std::size_t lo = 0, hi = s.size();
    while (hi - lo >= 2 && reverse(t, s[hi - 1]) == s[lo]) {
        ++lo;
        --hi;
    }
    return Word(s.begin() + lo, s.begin() + hi);
}

SmallPath to_path(const tri::Triangulation& t, const Word& w) {
    SmallPath p;
    const std::size_t k = w.size();
    for (std::size_t i = 0; i < k; ++i) {
        auto in = reverse(t, w[(i + k - 1) % k]);
        p.steps.push_back({w[i].tet, w[i].v, in.face, w[i].face});
    }
    return p;
}

SmallPath reversed(const SmallPath& p) {
    SmallPath r;
    r.closed = p.closed;
    for (auto it = p.steps.rbegin(); it != p.steps.rend(); ++it) r.steps.push_back({it->tet, it->vertex, it->exit, it->enter});
    return r;
}

Word power(const tri::Triangulation& t, const Word& w, Int q) {
    Word base = q < 0 ? inverse(t, w) : w;
    if (q < 0) q = -q;
    Word out;
    for (Int k = 0; k < q; ++k) out.insert(out.end(), base.begin(), base.end());
    return out;
}

PeripheralBasis basis_for_cusp(const tri::Triangulation& t, const tri::CuspClass& cusp,
                               const surface::BoundarySurface& bp, const oddhom::SurfaceHomology& hp) {
    if (cusp.topology != tri::CuspTopology::torus)
        throw NotATorus(fmt::format("cusp {} is a {}, not a torus", cusp.id, tri::to_string(cusp.topology)));
    const auto& base = bp.complex;

    // Spanning tree of the dual graph; words are based at the root triangle.
    std::map<std::pair<int, int>, Word> word;
    std::set<Crossing> tree;
    auto root = cusp.small_triangles.front();
    word[root] = {};
    std::queue<std::pair<int, int>> todo;
    todo.push(root);
    while (!todo.empty()) {
        auto [tet, v] = todo.front();
        todo.pop();
        for (int f = 0; f < 4; ++f) {
            if (f == v) continue;
            if (!t.is_glued(tet, f)) throw NotATorus("cusp cross-section has a free side");
            Crossing c{tet, v, f};
            auto r = reverse(t, c);
            std::pair<int, int> nb{r.tet, r.v};
            if (word.count(nb)) continue;
            Word w = word[{tet, v}];
            w.push_back(c);
            word[nb] = std::move(w);
            tree.insert(c);
            tree.insert(r);
            todo.push(nb);
        }
    }

    struct Loop {
        Word based, reduced;
        Vec cycle;
    };
    std::vector<Loop> loops;
    for (const auto& [node, w] : word) {
        for (int f = 0; f < 4; ++f) {
            if (f == node.second) continue;
            Crossing c{node.first, node.second, f};
            auto r = reverse(t, c);
            if (tree.count(c) || r < c) continue;
            Word based = w;
            based.push_back(c);
            auto back = inverse(t, word[{r.tet, r.v}]);
            based.insert(based.end(), back.begin(), back.end());
            Word red = reduce(t, based);
            if (red.empty()) continue;
            loops.push_back({based, red, pathalg::small_cycle(bp, to_path(t, red))});
        }
    }
    std::stable_sort(loops.begin(), loops.end(), [](const Loop& a, const Loop& b) { return a.reduced.size() < b.reduced.size(); });

    std::optional<std::pair<Word, Word>> pick;
    std::size_t best = 0;
    for (std::size_t i = 0; i < loops.size(); ++i)
        for (std::size_t j = i + 1; j < loops.size(); ++j) {
            Int x = oddhom::intersection(base, loops[i].cycle, loops[j].cycle);
            std::size_t len = loops[i].reduced.size() + loops[j].reduced.size();
            if ((x == 1 || x == -1) && (!pick || len < best)) {
                pick = {loops[i].reduced, loops[j].reduced};
                best = len;
            }
        }

    if (!pick) {
        // Column reduction of the H1 coordinates, composing based loops.
        std::vector<Word> w;
        std::vector<Vec> v;
        for (const auto& l : loops) {
            w.push_back(l.based);
            v.push_back(hp.coords(l.cycle));
        }
        std::vector<std::size_t> pivots;
        const std::size_t r = v.empty() ? 0 : v[0].size();
        for (std::size_t row = 0; row < r && pivots.size() < 2; ++row) {
            while (true) {
                std::optional<std::size_t> p;
                for (std::size_t j = 0; j < v.size(); ++j) {
                    if (std::find(pivots.begin(), pivots.end(), j) != pivots.end() || v[j][row] == 0) continue;
                    if (!p || abs(v[j][row]) < abs(v[*p][row])) p = j;
                }
                if (!p) break;
                bool done = true;
                for (std::size_t j = 0; j < v.size(); ++j) {
                    if (j == *p || std::find(pivots.begin(), pivots.end(), j) != pivots.end() || v[j][row] == 0) continue;
                    Int q = v[j][row] / v[*p][row];
                    for (std::size_t i = 0; i < r; ++i) v[j][i] -= q * v[*p][i];
                    auto extra = power(t, w[*p], -q);
                    w[j].insert(w[j].end(), extra.begin(), extra.end());
                    if (v[j][row] != 0) done = false;
                }
                if (done) {
                    pivots.push_back(*p);
                    break;
                }
            }
        }
        if (pivots.size() < 2) throw InternalInconsistency(fmt::format("cusp {}: dual graph loops do not span H1", cusp.id));
        pick = {reduce(t, w[pivots[0]]), reduce(t, w[pivots[1]])};
    }

    PeripheralBasis out;
    out.cusp = cusp.id;
    out.alpha = to_path(t, pick->first);
    out.beta = to_path(t, pick->second);
    Int x = oddhom::intersection(base, pathalg::small_cycle(bp, out.alpha), pathalg::small_cycle(bp, out.beta));
    if (x == -1) {
        out.beta = reversed(out.beta);
        x = 1;
    }
    if (x != 1) throw InternalInconsistency(fmt::format("cusp {}: peripheral pair has intersection {}", cusp.id, x.get_str()));
    out.base_intersection = x;
    return out;
}

PeripheralBasis supplied_basis(const tri::Triangulation& t, const tri::CuspClass& cusp, const surface::BoundarySurface& bp) {
    const auto& curves = t.peripheral_curves[cusp.id];
    if (curves.size() < 2) throw SchemaError(fmt::format("cusp {}: need two peripheral curves", cusp.id));
    PeripheralBasis out;
    out.cusp = cusp.id;
    out.user_supplied = true;
    out.alpha = SmallPath{curves[0], true};
    out.beta = SmallPath{curves[1], true};
    auto cusp_of = tri::cusp_of_vertex(tri::cusp_classes(t), t.num_tetrahedra);
    for (const auto* p : {&out.alpha, &out.beta})
        for (const auto& s : p->steps)
            if (s.tet < 0 || s.tet >= t.num_tetrahedra || s.vertex < 0 || s.vertex > 3 || cusp_of[4 * s.tet + s.vertex] != cusp.id)
                throw SchemaError(fmt::format("peripheral curve of cusp {} leaves the cusp", cusp.id));
    out.base_intersection =
        oddhom::intersection(bp.complex, pathalg::small_cycle(bp, out.alpha), pathalg::small_cycle(bp, out.beta));
    if (out.base_intersection != 1 && out.base_intersection != -1)
        throw SchemaError(fmt::format("peripheral curves of cusp {} meet {} times", cusp.id, out.base_intersection.get_str()));
    return out;
}

std::vector<PeripheralBasis> bases_on(const tri::Triangulation& t, const std::vector<tri::CuspClass>& cusps,
                                      const surface::BoundarySurface& bp) {
    std::optional<oddhom::SurfaceHomology> hp;
    std::vector<PeripheralBasis> out;
    for (const auto& c : cusps) {
        if (c.topology == tri::CuspTopology::disc || c.topology == tri::CuspTopology::annulus) continue;
        if (c.topology != tri::CuspTopology::torus)
            throw NotATorus(fmt::format("cusp {} is a {}, not a torus", c.id, tri::to_string(c.topology)));
        if (static_cast<int>(t.peripheral_curves.size()) > c.id && !t.peripheral_curves[c.id].empty()) {
            out.push_back(supplied_basis(t, c, bp));
            continue;
        }
        if (!hp) hp.emplace(bp.complex);
        out.push_back(basis_for_cusp(t, c, bp, *hp));
    }
    return out;
}

Vec path_slot_counts(const SmallPath& p, int n) {
    Vec v(3 * n, Int(0));
    for (const auto& s : p.steps) v[tri::edge_slot(s.vertex, pathalg::corner_of(s)) * n + s.tet] += pathalg::arc_sign(s);
    return v;
}

IntMatrix rows_of(const std::vector<Vec>& rows, std::size_t cols) {
    IntMatrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    return m;
}

IntMatrix expected_cusp_form(const GluingSystem& s) {
    const std::size_t n = s.num_cusps;
    IntMatrix f(2 * n, 2 * n);
    for (std::size_t c = 0; c < n; ++c) {
        f(c, n + c) = 2 * s.peripheral[c].base_intersection;
        f(n + c, c) = -2 * s.peripheral[c].base_intersection;
    }
    return f;
}

IntMatrix sub(const IntMatrix& m, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    IntMatrix out(r1 - r0, c1 - c0);
    for (std::size_t i = r0; i < r1; ++i)
        for (std::size_t j = c0; j < c1; ++j) out(i - r0, j - c0) = m(i, j);
    return out;
}

bool unimodular(const IntMatrix& m) {
    if (m.rows() != m.cols()) return false;
    if (m.rows() == 0) return true;
    auto d = zlat::determinant(m);
    return d == 1 || d == -1;
}

std::string factors(const std::vector<Int>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i].get_str();
    return s + "]";
}

}  // namespace

PeripheralBasis compute_peripheral_basis(const tri::Triangulation& t, const tri::CuspClass& cusp) {
    if (cusp.topology != tri::CuspTopology::torus)
        throw NotATorus(fmt::format("cusp {} is a {}, not a torus", cusp.id, tri::to_string(cusp.topology)));
    auto bp = surface::build_boundary(t, Stage::Mprime);
    oddhom::SurfaceHomology hp(bp.complex);
    return basis_for_cusp(t, cusp, bp, hp);
}

std::vector<PeripheralBasis> peripheral_bases(const tri::Triangulation& t) {
    auto cusps = tri::cusp_classes(t);
    bool any = std::any_of(cusps.begin(), cusps.end(), [](const auto& c) {
        return c.topology != tri::CuspTopology::disc && c.topology != tri::CuspTopology::annulus;
    });
    if (!any) return {};
    auto bp = surface::build_boundary(t, Stage::Mprime);
    return bases_on(t, cusps, bp);
}

IntMatrix GluingSystem::A() const { return sub(nz, 0, num_cusps, 0, num_tetrahedra); }
IntMatrix GluingSystem::Aprime() const { return sub(nz, 0, num_cusps, num_tetrahedra, 2 * num_tetrahedra); }
IntMatrix GluingSystem::B() const { return sub(nz, num_cusps, 2 * num_cusps, 0, num_tetrahedra); }
IntMatrix GluingSystem::Bprime() const { return sub(nz, num_cusps, 2 * num_cusps, num_tetrahedra, 2 * num_tetrahedra); }
IntMatrix GluingSystem::C() const { return sub(nz, 2 * num_cusps, nz.rows(), 0, num_tetrahedra); }
IntMatrix GluingSystem::Cprime() const { return sub(nz, 2 * num_cusps, nz.rows(), num_tetrahedra, 2 * num_tetrahedra); }
IntMatrix GluingSystem::edge_block() const { return sub(nz, 2 * num_cusps, nz.rows(), 0, 2 * num_tetrahedra); }
IntMatrix GluingSystem::cusp_block() const { return sub(nz, 0, 2 * num_cusps, 0, 2 * num_tetrahedra); }

GluingSystem build_gluing_system(const tri::Triangulation& t, bool cellular) {
    GluingSystem s;
    const int n = t.num_tetrahedra;
    s.num_tetrahedra = n;
    auto classes = tri::edge_classes(t);
    auto cusps = tri::cusp_classes(t);
    auto cusp_of = tri::cusp_of_vertex(cusps, n);

    s.peripheral = peripheral_bases(t);
    s.num_cusps = static_cast<int>(s.peripheral.size());
    std::map<int, int> torus_index;
    for (int c = 0; c < s.num_cusps; ++c) {
        s.cusp_ids.push_back(s.peripheral[c].cusp);
        torus_index[s.peripheral[c].cusp] = c;
    }

    std::vector<Vec> rows, slots;
    auto add_row = [&](const SmallPath& p, std::string label) {
        auto g = pathalg::g_tilde_P(pathalg::q_lift(p));
        auto h = pathalg::h_tilde(g, n);
        rows.push_back(h.coeffs);
        slots.push_back(path_slot_counts(p, n));
        s.sign_bits.push_back(h.fiber_bit);
        s.row_labels.push_back(std::move(label));
        s.row_paths.push_back(p);
    };
    for (int c = 0; c < s.num_cusps; ++c) add_row(s.peripheral[c].alpha, fmt::format("alpha{}", c));
    for (int c = 0; c < s.num_cusps; ++c) add_row(s.peripheral[c].beta, fmt::format("beta{}", c));
    for (const auto& ec : classes) {
        if (!ec.closed) continue;
        s.edge_ids.push_back(ec.id);
        add_row(pathalg::edge_link_path(ec), fmt::format("edge{}", ec.id));
    }
    s.num_edges = static_cast<int>(s.edge_ids.size());
    s.nz = rows_of(rows, 2 * n);
    s.slot_counts = rows_of(slots, 3 * n);

    s.edge_cusp_ends = IntMatrix(s.num_edges, s.num_cusps);
    for (int j = 0; j < s.num_edges; ++j) {
        const auto& inc = classes[s.edge_ids[j]].incidences.front();
        for (int x : {inc.a, inc.b}) {
            auto it = torus_index.find(cusp_of[4 * inc.tet + x]);
            if (it != torus_index.end()) s.edge_cusp_ends(j, it->second) += 1;
        }
    }
    for (int c = 0; c < s.num_cusps; ++c)
        for (int j = s.num_edges - 1; j >= 0; --j)
            if (s.edge_cusp_ends(j, c) > 0 && std::find(s.dropped_edges.begin(), s.dropped_edges.end(), j) == s.dropped_edges.end()) {
                s.dropped_edges.push_back(j);
                break;
            }

    const std::size_t dim = 2 * n;
    s.K = s.nz.rows() ? zlat::image(s.nz.transpose()) : IntMatrix(dim, 0);
    s.G = s.num_edges ? zlat::image(s.edge_block().transpose()) : IntMatrix(dim, 0);
    if (s.num_edges && dim) {
        try {
            IntMatrix Kpp = zlat::kernel(s.edge_block() * zlat::standard_J(n));
            s.torsion = zlat::quotient(Kpp, s.K).torsion;
        } catch (const std::invalid_argument&) {
            throw InternalInconsistency("cusp rows do not pair trivially with the edge rows");
        }
    }

    if (!cellular || s.nz.rows() == 0) return s;

    auto b0 = surface::build_boundary(t, Stage::M0);
    auto cv0 = surface::build_cover(b0);
    IntMatrix L0(cv0.total.num_edges(), s.nz.rows());
    for (std::size_t r = 0; r < s.nz.rows(); ++r) L0.set_column(r, oddhom::odd_lift(cv0, pathalg::small_cycle(b0, s.row_paths[r])));
    s.sigma0_form = oddhom::intersection_matrix(cv0.total, L0);

    if (s.num_cusps == 0) return s;
    auto bp = surface::build_boundary(t, Stage::Mprime);
    auto cvp = surface::build_cover(bp);
    oddhom::SurfaceHomology hp(cvp.total);
    const std::size_t nb = 2 * s.num_cusps;
    IntMatrix basis_cycles(cvp.total.num_edges(), nb), basis_coords(hp.rank(), nb);
    for (std::size_t r = 0; r < nb; ++r) {
        Vec z = oddhom::odd_lift(cvp, pathalg::small_cycle(bp, s.row_paths[r]));
        basis_cycles.set_column(r, z);
        basis_coords.set_column(r, hp.coords(z));
    }
    s.sigma_prime_form = oddhom::intersection_matrix(cvp.total, basis_cycles);
    s.q_matrix = IntMatrix(nb, s.nz.rows());
    for (std::size_t r = 0; r < s.nz.rows(); ++r) {
        Vec z = oddhom::odd_lift(cvp, pathalg::small_cycle(bp, s.row_paths[r]));
        auto c = zlat::solve_in_basis(basis_coords, hp.coords(z));
        if (!c) throw InternalInconsistency(fmt::format("q~({}) is not in the span of the cusp basis", s.row_labels[r]));
        s.q_matrix.set_column(r, *c);
    }
    auto odd = oddhom::odd_homology(cvp, hp);
    if (odd.rank() == static_cast<int>(nb)) {
        IntMatrix M(nb, nb);
        for (std::size_t r = 0; r < nb; ++r) M.set_column(r, oddhom::odd_coords(odd, hp, basis_cycles.column(r)));
        s.q_surjective = unimodular(M);
    }
    return s;
}

bool NZReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

NZReport check_nz(const GluingSystem& s) {
    NZReport rep;
    const int n = s.num_tetrahedra, nc = s.num_cusps, ne = s.num_edges;
    auto add = [&](std::string name, bool ok, std::string detail = {}) { rep.checks.push_back({std::move(name), ok, std::move(detail)}); };
    if (s.nz.cols() != static_cast<std::size_t>(2 * n) || s.nz.rows() != static_cast<std::size_t>(2 * nc + ne)) {
        add("shape", false, fmt::format("nz is {}x{}", s.nz.rows(), s.nz.cols()));
        return rep;
    }
    IntMatrix J = zlat::standard_J(n);
    rep.gram = s.nz * J * s.nz.transpose();
    IntMatrix C = s.edge_block();
    rep.rank_G = ne ? zlat::rank(C) : 0;
    rep.rank_nz = s.nz.rows() ? zlat::rank(s.nz) : 0;

    IntMatrix gg = C * J * C.transpose();
    add("isotropy <G,G> = 0", gg.is_zero(), gg.is_zero() ? "" : gg.str());

    IntMatrix expected = zlat::block_diag(expected_cusp_form(s), IntMatrix(ne, ne));
    add("g J g^T = 2J (+) 0", rep.gram == expected, rep.gram == expected ? "" : rep.gram.str());

    // Ranks are only predicted when every cusp is a torus.
    bool closed = nc > 0 && ne == n;
    if (closed) {
        add("rank G = N - n_c", rep.rank_G == static_cast<std::size_t>(n - nc), fmt::format("rank G = {}", rep.rank_G));
        add("rank g = N + n_c", rep.rank_nz == static_cast<std::size_t>(n + nc), fmt::format("rank g = {}", rep.rank_nz));
    }

    bool dep = true;
    for (int c = 0; c < nc; ++c) {
        Vec sum(2 * n, Int(0));
        for (int j = 0; j < ne; ++j)
            for (int k = 0; k < 2 * n; ++k) sum[k] += s.edge_cusp_ends(j, c) * C(j, k);
        dep = dep && std::all_of(sum.begin(), sum.end(), [](const Int& x) { return x == 0; });
    }
    if (nc > 0) add("edge rows at each cusp sum to zero", dep);

    if (nc > 0) {
        bool ok = false;
        std::string detail;
        try {
            IntMatrix Kb = zlat::image(s.nz.transpose());
            IntMatrix Gc = ne ? C.transpose() : IntMatrix(2 * n, 0);
            auto q = zlat::quotient(Kb, Gc);
            rep.reduction_torsion = q.torsion;
            if (q.free_rank == static_cast<std::size_t>(2 * nc)) {
                IntMatrix M(2 * nc, 2 * nc);
                for (int r = 0; r < 2 * nc; ++r) M.set_column(r, q.coords(s.nz.row(r)));
                IntMatrix F = q.lift_basis.transpose() * J * q.lift_basis;
                rep.reduced_form = M.transpose() * F * M;
                ok = unimodular(M) && rep.reduced_form == expected_cusp_form(s);
                detail = rep.reduced_form.str();
            } else {
                detail = fmt::format("K/G has free rank {}", q.free_rank);
            }
        } catch (const std::invalid_argument& e) {
            detail = e.what();
        }
        add("form on K/G = 2J per cusp", ok, detail);
    }

    if (!s.sigma0_form.empty())
        add("g~ preserves the form of Sigma0", s.sigma0_form == rep.gram, s.sigma0_form == rep.gram ? "" : s.sigma0_form.str());

    if (!s.q_matrix.empty()) {
        bool ok = true;
        for (int r = 0; r < 2 * nc; ++r)
            for (int k = 0; k < 2 * nc; ++k) ok = ok && s.q_matrix(k, r) == (k == r ? 1 : 0);
        bool kills = true;
        for (int r = 2 * nc; r < 2 * nc + ne; ++r)
            for (int k = 0; k < 2 * nc; ++k) kills = kills && s.q_matrix(k, r) == 0;
        add("q~ kills the edge rows", kills);
        add("q~ maps the cusp rows to the Sigma' basis", ok);
        add("q~ is onto H1^-(Sigma')", s.q_surjective);
        add("Sigma' form = form on K/G", s.sigma_prime_form == expected_cusp_form(s), s.sigma_prime_form.str());
    }

    if (ne > 0) {
        bool ok = std::all_of(s.torsion.begin(), s.torsion.end(), [](const Int& x) { return x == 2 || x == 4; });
        add("ker<G,.>/K torsion is 2 and 4 only", ok, factors(s.torsion));
    }
    return rep;
}

NZReport verify_nz(const GluingSystem& s) {
    auto rep = check_nz(s);
    for (const auto& c : rep.checks)
        if (!c.passed) throw VerificationFailure(c.name + (c.detail.empty() ? "" : ": " + c.detail));
    return rep;
}

NeumannComplex neumann_complex(const GluingSystem& s) {
    NeumannComplex out;
    const std::size_t n = s.num_tetrahedra, nc = s.num_cusps, ne = s.num_edges;
    IntMatrix C = s.edge_block();
    IntMatrix delta = s.edge_cusp_ends;
    out.maps = {delta, C.transpose(), C * zlat::standard_J(n), delta.transpose()};
    const std::vector<std::size_t> dims{nc, ne, 2 * n, ne, nc};
    for (std::size_t k = 0; k < 5; ++k) {
        SpotHomology h;
        const std::size_t d = dims[k];
        if (d == 0) {
            out.spots.push_back(h);
            continue;
        }
        IntMatrix ker = IntMatrix::identity(d);
        if (k < 4 && dims[k + 1] > 0) ker = zlat::kernel(out.maps[k]);
        IntMatrix im = k > 0 && dims[k - 1] > 0 ? out.maps[k - 1] : IntMatrix(d, 0);
        if (ker.cols() == 0) {
            out.spots.push_back(h);
            continue;
        }
        auto q = zlat::quotient(ker, im);
        h.rank = q.free_rank;
        h.torsion = q.torsion;
        out.spots.push_back(h);
    }
    return out;
}

NeumannComplex neumann_complex(const tri::Triangulation& t) { return neumann_complex(build_gluing_system(t, false)); }

std::string nz_to_json(const GluingSystem& s) {
    using nlohmann::json;
    auto mat = [](const IntMatrix& m) {
        json a = json::array();
        for (const auto& r : m.to_long()) a.push_back(r);
        return a;
    };
    json j;
    j["A"] = mat(s.A());
    j["Aprime"] = mat(s.Aprime());
    j["B"] = mat(s.B());
    j["Bprime"] = mat(s.Bprime());
    j["C"] = mat(s.C());
    j["Cprime"] = mat(s.Cprime());
    j["signs"] = s.sign_bits;
    json tors = json::array();
    for (const auto& x : s.torsion) tors.push_back(x.get_si());
    j["torsion"] = tors;
    return j.dump(2);
}

}  // namespace gluesym::gluesys
