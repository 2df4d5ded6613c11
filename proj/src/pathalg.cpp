#include "gluesym/pathalg.hpp"

#include "gluesym/errors.hpp"

#include <fmt/format.h>

namespace gluesym::pathalg {

using surface::CellKey;
using surface::Kind;
using surface::Stage;

namespace {

CellKey key(Kind k, int a = 0, int b = 0, int c = 0, int d = 0) { return CellKey{k, a, b, c, d}; }

std::pair<int, int> faces_of_edge(int v, int w) {
    int x = -1, y = -1;
    for (int u = 0; u < 4; ++u)
        if (u != v && u != w) (x < 0 ? x : y) = u;
    return {x, y};
}

}  // namespace

int corner_of(const tri::NormalStep& s) {
    if (s.vertex < 0 || s.vertex > 3 || s.enter < 0 || s.enter > 3 || s.exit < 0 || s.exit > 3 ||
        s.enter == s.exit || s.enter == s.vertex || s.exit == s.vertex)
        throw SchemaError(fmt::format("normal step (tet {}, vertex {}, enter {}, exit {}) is not a corner crossing",
                                      s.tet, s.vertex, s.enter, s.exit));
    return 6 - s.vertex - s.enter - s.exit;
}

CornerArc arc_of(const tri::NormalStep& s) { return CornerArc{s.tet, s.vertex, corner_of(s)}; }

int arc_sign(const tri::NormalStep& s) {
    int w = corner_of(s);
    return tri::perm_sign(tri::Perm{s.vertex, w, s.exit, s.enter});
}

void validate_path(const tri::Triangulation& t, const SmallPath& p, Stage stage) {
    if (p.steps.empty()) throw SchemaError("empty small path");
    const std::size_t n = p.steps.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = p.steps[i];
        if (s.tet < 0 || s.tet >= t.num_tetrahedra) throw SchemaError(fmt::format("normal step {}: bad tetrahedron", i));
        corner_of(s);
        if (i + 1 == n && !p.closed) break;
        const auto& nx = p.steps[(i + 1) % n];
        if (stage == Stage::M || !t.is_glued(s.tet, s.exit))
            throw SchemaError(fmt::format("normal step {}: face {} of tetrahedron {} is not glued", i, s.exit, s.tet));
        const auto* g = t.pairing(s.tet, s.exit);
        if (g->to_tet != nx.tet || g->to_face != nx.enter || g->perm[s.vertex] != nx.vertex)
            throw SchemaError(fmt::format("normal steps {} and {} do not meet across a glued face", i, (i + 1) % n));
    }
}

// ---------------------------------------------------------------------------

PathGroupElement& PathGroupElement::operator+=(const PathGroupElement& o) {
    for (const auto& [a, c] : o.arcs) {
        auto& x = arcs[a];
        x += c;
        if (x == 0) arcs.erase(a);
    }
    fiber_bit = (fiber_bit + o.fiber_bit) & 1;
    return *this;
}

PathGroupElement PathGroupElement::operator+(const PathGroupElement& o) const {
    PathGroupElement r = *this;
    r += o;
    return r;
}

PathGroupElement PathGroupElement::operator-() const {
    PathGroupElement r = *this;
    for (auto& [a, c] : r.arcs) c = -c;
    return r;
}

bool PathGroupElement::operator==(const PathGroupElement& o) const {
    return arcs == o.arcs && fiber_bit == o.fiber_bit;
}

PathGroupElement PathGroupElement::arc(const CornerArc& a, Int coeff) {
    PathGroupElement p;
    if (coeff != 0) p.arcs[a] = coeff;
    return p;
}

PathGroupElement PathGroupElement::fiber() {
    PathGroupElement p;
    p.fiber_bit = 1;
    return p;
}

Vec slot_vector(int num_tetrahedra, int tet, int slot) {
    Vec v(2 * num_tetrahedra, Int(0));
    if (slot == 0 || slot == 2) v[tet] = slot == 0 ? 1 : -1;
    if (slot == 1 || slot == 2) v[num_tetrahedra + tet] = slot == 1 ? 1 : -1;
    return v;
}

oddhom::TwistedCycle h_tilde(const PathGroupElement& p, int num_tetrahedra) {
    oddhom::TwistedCycle out{"tet", Vec(2 * num_tetrahedra, Int(0)), p.fiber_bit};
    for (const auto& [a, c] : p.arcs) {
        if (a.tet < 0 || a.tet >= num_tetrahedra) throw SchemaError("corner arc on a missing tetrahedron");
        auto s = slot_vector(num_tetrahedra, a.tet, tri::edge_slot(a.v, a.w));
        for (std::size_t i = 0; i < s.size(); ++i) out.coeffs[i] += c * s[i];
    }
    return out;
}

int arc_index(const CornerArc& a) {
    int k = a.w < a.v ? a.w : a.w - 1;
    return 12 * a.tet + 3 * a.v + k;
}

CornerArc arc_at(int index) {
    int tet = index / 12, r = index % 12, v = r / 3, k = r % 3;
    return CornerArc{tet, v, k < v ? k : k + 1};
}

IntMatrix h_tilde_matrix(int n) {
    IntMatrix m(2 * n, 12 * n);
    for (int j = 0; j < 12 * n; ++j) {
        auto a = arc_at(j);
        m.set_column(j, slot_vector(n, a.tet, tri::edge_slot(a.v, a.w)));
    }
    return m;
}

IntMatrix triangle_relations(int n) {
    IntMatrix m(12 * n, 4 * n);
    for (int tet = 0; tet < n; ++tet)
        for (int v = 0; v < 4; ++v)
            for (int w = 0; w < 4; ++w)
                if (w != v) m(arc_index({tet, v, w}), 4 * tet + v) = 1;
    return m;
}

IntMatrix edge_path_generators(int n) {
    IntMatrix m(12 * n, 6 * n);
    for (int tet = 0; tet < n; ++tet)
        for (int e = 0; e < 6; ++e) {
            auto [v, w] = tri::edge_vertices(e);
            m(arc_index({tet, v, w}), 6 * tet + e) += 1;
            m(arc_index({tet, w, v}), 6 * tet + e) -= 1;
        }
    return m;
}

CutResult cut_path(const SmallPath& p) {
    CutResult r;
    for (const auto& s : p.steps) r.segments.emplace_back(arc_of(s), arc_sign(s));
    int crossings = static_cast<int>(p.steps.size()) - (p.closed ? 0 : 1);
    r.cut_count = crossings > 0 ? crossings % 2 : 0;
    return r;
}

PathGroupElement g_tilde_P(const SmallPath& p, int n) {
    auto c = cut_path(p);
    PathGroupElement out;
    for (const auto& [a, s] : c.segments) out += PathGroupElement::arc(a, s);
    out.fiber_bit = (c.cut_count + n) & 1;
    return out;
}

SmallPath q_lift(const SmallPath& p) { return p; }

// ---------------------------------------------------------------------------

Vec small_cycle(const surface::BoundarySurface& b, const SmallPath& p) {
    if (!b.source || b.stage == Stage::M) throw SchemaError("small cycles need a glued stage of a triangulation");
    if (!p.closed) throw SchemaError("small_cycle needs a closed path");
    const auto& t = *b.source;
    validate_path(t, p, b.stage);
    const auto& c = b.complex;
    auto lk = tri::edge_lookup(t, b.edge_classes);
    auto truncated = [&](int tet, int v, int w) {
        return b.stage == Stage::M0 && b.edge_classes[lk.class_of[6 * tet + tri::edge_index(v, w)]].closed;
    };
    Vec z(c.num_edges(), Int(0));
    auto add = [&](const CellKey& k, int dir) {
        auto [e, s] = c.edge(k);
        if (e < 0) throw InternalInconsistency("small cycle: missing edge in the boundary complex");
        z[e] += dir * s;
    };
    const std::size_t n = p.steps.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = p.steps[i];
        const int w = corner_of(s);
        if (truncated(s.tet, s.vertex, w)) add(key(Kind::truncation, s.tet, s.vertex, w), s.enter < s.exit ? 1 : -1);
        const auto& nx = p.steps[(i + 1) % n];
        const auto& perm = t.pairing(s.tet, s.exit)->perm;
        const int w2 = corner_of(nx);
        if (w2 == perm[w]) continue;
        if (w2 != perm[s.enter]) throw InternalInconsistency("small cycle: consecutive corners do not share a side");
        add(key(Kind::small_side, s.tet, s.vertex, s.exit), w < s.enter ? 1 : -1);
    }
    // The pushed path must still be closed.
    Vec bd(c.num_vertices, Int(0));
    for (int e = 0; e < c.num_edges(); ++e) {
        bd[c.edges[e].head] += z[e];
        bd[c.edges[e].tail] -= z[e];
    }
    for (const auto& x : bd)
        if (x != 0) throw InternalInconsistency("small cycle: pushed path is not closed");
    return z;
}

SmallPath edge_link_path(const tri::EdgeClass& ec) {
    if (!ec.closed) throw SchemaError("edge link path needs an internal edge");
    SmallPath p;
    for (const auto& inc : ec.incidences) {
        auto [x, y] = faces_of_edge(inc.a, inc.b);
        // (a, b, exit, enter) even
        int exit = x, enter = y;
        if (tri::perm_sign(tri::Perm{inc.a, inc.b, exit, enter}) < 0) std::swap(exit, enter);
        p.steps.push_back({inc.tet, inc.a, enter, exit});
    }
    return p;
}

Vec defect_end_cycle(const surface::BoundarySurface& b, const tri::EdgeClass& ec) {
    return small_cycle(b, edge_link_path(ec));
}

// ---------------------------------------------------------------------------

StageMHomology::StageMHomology(const tri::Triangulation& t) : n_(t.num_tetrahedra) {
    b_ = surface::build_boundary(t, Stage::M);
    cv_ = surface::build_cover(b_);
    h_.emplace(cv_.total);
    basis_cycles_ = IntMatrix(cv_.total.num_edges(), 2 * n_);
    for (int tet = 0; tet < n_; ++tet) {
        basis_cycles_.set_column(tet, arc_cycle({tet, 0, 1}));
        basis_cycles_.set_column(n_ + tet, arc_cycle({tet, 0, 2}));
    }
    basis_h1_ = IntMatrix(h_->rank(), 2 * n_);
    for (int j = 0; j < 2 * n_; ++j) basis_h1_.set_column(j, h_->coords(basis_cycles_.column(j)));
    if (h_->rank() != 2 * n_ || zlat::determinant(basis_h1_) * zlat::determinant(basis_h1_) != 1)
        throw InternalInconsistency("edge cycles gamma, gamma' do not form a basis of H1 at stage M");
}

Vec StageMHomology::arc_cycle(const CornerArc& a) const {
    const auto& base = b_.complex;
    auto [f1, f2] = faces_of_edge(a.v, a.w);
    // f1 must carry w -> v in its outward cycle: (f1, w, v, .) even.
    int other_f1 = 6 - f1 - a.v - a.w;
    if (tri::perm_sign(tri::Perm{f1, a.w, a.v, other_f1}) < 0) std::swap(f1, f2);
    int e = tri::edge_index(a.v, a.w);
    oddhom::SectorRef from{key(Kind::sector, a.tet, f1, a.v), key(Kind::cut, a.tet, f1, e)};
    oddhom::SectorRef to{key(Kind::sector, a.tet, f2, a.v), key(Kind::cut, a.tet, f2, e)};
    return oddhom::hexagon_path_lift(base, cv_, from, to);
}

Vec StageMHomology::tet_coords(const Vec& cycle) const {
    auto c = zlat::solve_in_basis(basis_h1_, h_->coords(cycle));
    if (!c) throw InternalInconsistency("cycle is not in the span of the tetrahedron basis");
    return *c;
}

Vec StageMHomology::h_tilde(const PathGroupElement& p) const {
    Vec z(cv_.total.num_edges(), Int(0));
    for (const auto& [a, c] : p.arcs) {
        auto y = arc_cycle(a);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += c * y[i];
    }
    return tet_coords(z);
}

IntMatrix StageMHomology::basis_form() const { return oddhom::intersection_matrix(cv_.total, basis_cycles_); }

}  // namespace gluesym::pathalg
