#include "gluesym/oddhom.hpp"

#include "gluesym/errors.hpp"

#include <fmt/format.h>

#include <deque>
#include <map>

namespace gluesym::oddhom {

using surface::CellKey;
using surface::Kind;

namespace {

Vec zero_vec(std::size_t n) { return Vec(n, Int(0)); }

Vec boundary1(const CellComplex& c, const Vec& chain) {
    Vec out = zero_vec(c.num_vertices);
    for (int e = 0; e < c.num_edges(); ++e) {
        if (chain[e] == 0) continue;
        out[c.edges[e].head] += chain[e];
        out[c.edges[e].tail] -= chain[e];
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

SurfaceHomology::SurfaceHomology(const CellComplex& c) : c_(&c) {
    const int V = c.num_vertices, E = c.num_edges(), F = c.num_faces();
    // Spanning forest of the 1-skeleton.
    std::vector<std::vector<int>> inc(V);
    for (int e = 0; e < E; ++e) {
        inc[c.edges[e].tail].push_back(e);
        inc[c.edges[e].head].push_back(e);
    }
    std::vector<int> parent_edge(V, -2);
    std::vector<char> in_tree(E, 0);
    for (int r = 0; r < V; ++r) {
        if (parent_edge[r] != -2) continue;
        parent_edge[r] = -1;
        std::deque<int> q{r};
        while (!q.empty()) {
            int x = q.front();
            q.pop_front();
            for (int e : inc[x]) {
                int y = c.edges[e].tail == x ? c.edges[e].head : c.edges[e].tail;
                if (parent_edge[y] != -2) continue;
                parent_edge[y] = e;
                in_tree[e] = 1;
                q.push_back(y);
            }
        }
    }
    // Dual spanning forest through non-tree edges.
    std::vector<std::vector<int>> faces_of(E);
    for (int f = 0; f < F; ++f)
        for (const auto& s : c.faces[f].boundary) faces_of[s.edge].push_back(f);
    face_parent_edge_.assign(F, -2);
    std::vector<char> in_cotree(E, 0);
    for (int r = 0; r < F; ++r) {
        if (face_parent_edge_[r] != -2) continue;
        face_parent_edge_[r] = -1;
        std::deque<int> q{r};
        while (!q.empty()) {
            int f = q.front();
            q.pop_front();
            face_order_.push_back(f);
            for (const auto& s : c.faces[f].boundary) {
                if (in_tree[s.edge] || in_cotree[s.edge]) continue;
                const auto& fs = faces_of[s.edge];
                int g = fs[0] == f ? fs[1] : fs[0];
                if (face_parent_edge_[g] != -2) continue;
                face_parent_edge_[g] = s.edge;
                in_cotree[s.edge] = 1;
                q.push_back(g);
            }
        }
    }
    for (int e = 0; e < E; ++e)
        if (!in_tree[e] && !in_cotree[e]) generators_.push_back(e);

    // Fundamental cycles: e + path(head -> root) - path(tail -> root).
    auto up = [&](int x, Vec& out, int sign) {
        while (parent_edge[x] >= 0) {
            int e = parent_edge[x];
            bool forward = c.edges[e].tail == x;
            out[e] += forward ? sign : -sign;
            x = forward ? c.edges[e].head : c.edges[e].tail;
        }
    };
    basis_ = IntMatrix(E, generators_.size());
    for (std::size_t k = 0; k < generators_.size(); ++k) {
        int e = generators_[k];
        Vec z = zero_vec(E);
        z[e] += 1;
        up(c.edges[e].head, z, 1);
        up(c.edges[e].tail, z, -1);
        basis_.set_column(k, z);
    }
}

bool SurfaceHomology::is_cycle(const Vec& chain) const {
    if (static_cast<int>(chain.size()) != c_->num_edges()) return false;
    for (const auto& x : boundary1(*c_, chain))
        if (x != 0) return false;
    return true;
}

Vec SurfaceHomology::coords(const Vec& cycle) const {
    if (!is_cycle(cycle)) throw InternalInconsistency("homology coordinates requested for a chain that is not a cycle");
    Vec z = cycle;
    for (int f : face_order_) {
        int e = face_parent_edge_[f];
        if (e < 0 || z[e] == 0) continue;
        int d = 0;
        for (const auto& s : c_->faces[f].boundary)
            if (s.edge == e) d += s.dir;
        Int k = z[e] * d;
        for (const auto& s : c_->faces[f].boundary) z[s.edge] -= k * s.dir;
    }
    Vec out(generators_.size());
    for (std::size_t k = 0; k < generators_.size(); ++k) out[k] = z[generators_[k]];
    // What is left must be exactly the combination of fundamental cycles.
    Vec rest = basis_ * out;
    for (std::size_t e = 0; e < z.size(); ++e)
        if (rest[e] != z[e]) throw InternalInconsistency("cycle reduction left a residue off the generators");
    return out;
}

// ---------------------------------------------------------------------------
// Intersection form
//
// Half-edge h = 2e + end (end 0 at the tail).  Around each vertex the
// half-edges are ordered counterclockwise by the face corners: a face whose
// boundary arrives along s_j and leaves along s_{j+1} has the out-half of
// s_{j+1} followed by the in-half of s_j.  The second cycle is pushed off to
// the left of every edge; the local count at a vertex is then a sum over
// ordered pairs of half-edges.

namespace {

std::vector<int> ccw_rotation(const CellComplex& c) {
    std::vector<int> next(2 * c.num_edges(), -1);
    for (const auto& face : c.faces) {
        const auto& bd = face.boundary;
        for (std::size_t j = 0; j < bd.size(); ++j) {
            const auto& in = bd[j];
            const auto& out = bd[(j + 1) % bd.size()];
            int in_half = 2 * in.edge + (in.dir > 0 ? 1 : 0);
            int out_half = 2 * out.edge + (out.dir > 0 ? 0 : 1);
            if (next[out_half] >= 0) throw InternalInconsistency("half-edge rotation is not a permutation");
            next[out_half] = in_half;
        }
    }
    return next;
}

// Face boundaries are listed clockwise for the orientation used here: the
// outward tetrahedron face cycles then give <gamma, gamma'> = +1 with z on the
// edges 01 and 23.
constexpr int kOrientation = -1;

Int raw_intersection(const std::vector<std::vector<int>>& orbits, const Vec& a, const Vec& b) {
    auto eps = [](const Vec& v, int h) -> Int { return (h & 1) ? Int(-v[h / 2]) : v[h / 2]; };
    Int total = 0;
    for (const auto& orb : orbits) {
        const std::size_t m = orb.size();
        Int suffix = 0;  // sum of eps_b over positions > i
        std::vector<Int> ea(m), eb(m);
        bool any_a = false, any_b = false;
        for (std::size_t i = 0; i < m; ++i) {
            ea[i] = eps(a, orb[i]);
            eb[i] = eps(b, orb[i]);
            any_a |= ea[i] != 0;
            any_b |= eb[i] != 0;
        }
        if (!any_a || !any_b) continue;
        for (std::size_t k = m; k-- > 0;) {
            Int local = suffix;
            if ((orb[k] & 1) == 0) local += eb[k];
            total += ea[k] * local;
            suffix += eb[k];
        }
    }
    return total * kOrientation;
}

std::vector<std::vector<int>> rotation_orbits(const CellComplex& c) {
    auto next = ccw_rotation(c);
    std::vector<char> seen(next.size(), 0);
    std::vector<std::vector<int>> orbits;
    for (std::size_t h = 0; h < next.size(); ++h) {
        if (seen[h]) continue;
        std::vector<int> orb;
        int x = static_cast<int>(h);
        while (!seen[x]) {
            seen[x] = 1;
            orb.push_back(x);
            x = next[x];
        }
        orbits.push_back(std::move(orb));
    }
    return orbits;
}

}  // namespace

Int intersection(const CellComplex& c, const Vec& a, const Vec& b) {
    return raw_intersection(rotation_orbits(c), a, b);
}

IntMatrix intersection_matrix(const CellComplex& c, const IntMatrix& cycles) {
    auto orbits = rotation_orbits(c);
    const std::size_t k = cycles.cols();
    std::vector<Vec> cols(k);
    for (std::size_t i = 0; i < k; ++i) cols[i] = cycles.column(i);
    IntMatrix out(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            out(i, j) = raw_intersection(orbits, cols[i], cols[j]);
            out(j, i) = -out(i, j);
        }
    return out;
}

// ---------------------------------------------------------------------------

Vec deck(const CoverComplex& cv, const Vec& chain) {
    Vec out = zero_vec(chain.size());
    for (std::size_t e = 0; e < chain.size(); ++e)
        if (chain[e] != 0) out[cv.edge_deck[e]] += chain[e];
    return out;
}

Vec odd_lift(const CoverComplex& cv, const Vec& base_chain) {
    Vec out = zero_vec(2 * base_chain.size());
    for (std::size_t e = 0; e < base_chain.size(); ++e) {
        out[CoverComplex::edge_copy(static_cast<int>(e), 0)] += base_chain[e];
        out[CoverComplex::edge_copy(static_cast<int>(e), 1)] -= base_chain[e];
    }
    (void)cv;
    return out;
}

Vec push_forward(const CoverComplex& cv, const Vec& chain) {
    Vec out = zero_vec(cv.base_edges);
    for (std::size_t e = 0; e < chain.size(); ++e) out[e / 2] += chain[e];
    return out;
}

QuasiProjections quasi_projections(const CoverComplex& cv, const SurfaceHomology& h) {
    const std::size_t r = h.rank();
    QuasiProjections q;
    q.sigma = IntMatrix(r, r);
    for (std::size_t j = 0; j < r; ++j) q.sigma.set_column(j, h.coords(deck(cv, h.basis().column(j))));
    q.P_plus = IntMatrix::identity(r) + q.sigma;
    q.P_minus = IntMatrix::identity(r) - q.sigma;
    return q;
}

namespace {

void finish_basis(OddBasis& ob, const CoverComplex& cv, const SurfaceHomology& h) {
    const std::size_t k = ob.cycles.cols();
    ob.h1_coords = IntMatrix(h.rank(), k);
    for (std::size_t j = 0; j < k; ++j) ob.h1_coords.set_column(j, h.coords(ob.cycles.column(j)));
    ob.eps = intersection_matrix(cv.total, ob.cycles);
}

}  // namespace

OddBasis odd_homology(const CoverComplex& cv, const SurfaceHomology& h) {
    auto q = quasi_projections(cv, h);
    OddBasis ob;
    IntMatrix K = zlat::kernel(q.P_plus);
    ob.cycles = h.basis() * K;
    for (std::size_t j = 0; j < K.cols(); ++j) ob.labels.push_back(fmt::format("o{}", j));
    finish_basis(ob, cv, h);
    return ob;
}

OddBasis odd_homology_cellular(const CoverComplex& cv, const SurfaceHomology& h) {
    const auto& base_edges = cv.base_edges;
    const int V = cv.base_vertices, F = cv.base_faces;
    std::vector<int> vrow(V, -1);
    int nv = 0;
    for (int v = 0; v < V; ++v)
        if (!cv.is_branch[v]) vrow[v] = nv++;
    IntMatrix d1(nv, base_edges);
    for (int e = 0; e < base_edges; ++e) {
        const auto& ed = cv.total.edges[CoverComplex::edge_copy(e, 0)];
        for (auto [x, s] : {std::pair(ed.head, 1), std::pair(ed.tail, -1)}) {
            int bv = cv.vertex_base[x];
            if (cv.is_branch[bv]) continue;
            d1(vrow[bv], e) += cv.vertex_copies[bv][0] == x ? s : -s;
        }
    }
    IntMatrix Z = zlat::kernel(d1);
    // Rows of the base complex boundary, sign-twisted by the cut bits.
    std::vector<Vec> rel;
    for (int f = 0; f < F; ++f) {
        Vec col = zero_vec(base_edges);
        // faces of the total complex come in pairs; read the base boundary
        // back through copy 0
        const auto& bd = cv.total.faces[CoverComplex::face_copy(f, 0)].boundary;
        for (std::size_t i = 0; i < bd.size(); ++i) {
            int e = bd[i].edge / 2;
            col[e] += bd[i].dir * (cv.occurrence_bit[f][i] ? -1 : 1);
        }
        auto z = zlat::solve_in_basis(Z, col);
        if (!z) throw InternalInconsistency("odd face boundary is not an odd cycle");
        rel.push_back(*z);
    }
    IntMatrix S(Z.cols(), rel.size());
    for (std::size_t j = 0; j < rel.size(); ++j) S.set_column(j, rel[j]);
    auto quo = zlat::quotient(S);
    OddBasis ob;
    ob.torsion = quo.torsion;
    ob.relations = S;
    IntMatrix chains = Z * quo.lift_basis;
    ob.cycles = IntMatrix(cv.total.num_edges(), chains.cols());
    for (std::size_t j = 0; j < chains.cols(); ++j) {
        ob.cycles.set_column(j, odd_lift(cv, chains.column(j)));
        ob.labels.push_back(fmt::format("c{}", j));
    }
    finish_basis(ob, cv, h);
    return ob;
}

Vec hexagon_path_lift(const CellComplex& base, const CoverComplex& cv, const SectorRef& from, const SectorRef& to) {
    Vec c0 = zero_vec(cv.total.num_edges());
    int heads[2] = {-1, -1};
    int k = 0;
    for (const auto* ref : {&from, &to}) {
        int f = base.face(ref->sector);
        auto [e, sign] = base.edge(ref->cut);
        if (f < 0 || e < 0) throw InternalInconsistency("hexagon path: missing sector or cut");
        const auto& bd = base.faces[f].boundary;
        int pos = -1;
        for (std::size_t i = 0; i < bd.size(); ++i)
            if (bd[i].edge == e) pos = static_cast<int>(i);
        if (pos < 0) throw InternalInconsistency("hexagon path: cut not on sector");
        int copy = CoverComplex::edge_copy(e, cv.occurrence_bit[f][pos]);
        // the labelled cut runs from the center to the midpoint
        int s = k == 0 ? sign : -sign;
        c0[copy] += s;
        const auto& ed = cv.total.edges[copy];
        heads[k] = sign > 0 ? ed.head : ed.tail;
        ++k;
    }
    if (heads[0] != heads[1]) throw InternalInconsistency("hexagon path: sheet-0 sectors meet different midpoint lifts");
    Vec out = c0;
    Vec d = deck(cv, c0);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= d[i];
    return out;
}

PresentationGenerators presentation_generators(const surface::BoundarySurface& b, const CoverComplex& cv) {
    if (!b.abstract || b.source) throw SchemaError("presentation needs a surface built from abstract data");
    const auto& s = *b.abstract;
    const auto& base = b.complex;
    const int nf = static_cast<int>(s.faces.size());
    auto key = [](Kind k, int a = 0, int bb = 0, int c = 0) { return CellKey{k, a, bb, c, 0}; };

    std::vector<std::string> labels;
    std::vector<Vec> gens;
    std::map<std::pair<int, int>, int> edge_gen;  // canonical side -> generator index
    for (int f = 0; f < nf; ++f)
        for (int i = 0; i < 3; ++i) {
            auto [g, j] = s.glue[f][i];
            if (std::pair(g, j) < std::pair(f, i)) continue;
            SectorRef from{key(Kind::sector, f, i), key(Kind::cut, f, i)};
            SectorRef to{key(Kind::sector, g, (j + 1) % 3), key(Kind::cut, g, j)};
            edge_gen[{f, i}] = static_cast<int>(gens.size());
            edge_gen[{g, j}] = static_cast<int>(gens.size());
            gens.push_back(hexagon_path_lift(base, cv, from, to));
            labels.push_back(fmt::format("gamma_{}.{}", f, i));
        }
    auto hc = s.hole_corners();
    auto cap_chain = [&](int hole) {
        Vec c = zero_vec(base.num_edges());
        for (auto [f, i] : hc[hole]) {
            auto [e, sign] = base.edge(key(Kind::small_side, f, i));
            c[e] -= sign;
        }
        return c;
    };
    std::vector<int> annulus_of(s.num_holes, -1);
    std::vector<int> lambda_gen;
    for (std::size_t a = 0; a < s.annuli.size(); ++a) {
        for (int hole : s.annuli[a]) annulus_of[hole] = static_cast<int>(a);
        lambda_gen.push_back(static_cast<int>(gens.size()));
        gens.push_back(odd_lift(cv, cap_chain(s.annuli[a][0])));
        labels.push_back(fmt::format("lambda_{}", a));
        // tau: center of fa -> corner -> traversal -> corner -> center of fb,
        // each piece on the sheet-0 copy of the face it bounds.
        auto [fa, ia] = hc[s.annuli[a][0]].front();
        auto [fb, ib] = hc[s.annuli[a][1]].front();
        Vec c0 = zero_vec(cv.total.num_edges());
        auto add = [&](const CellKey& face_key, const CellKey& edge_key, int dir) {
            int f = base.face(face_key);
            auto [e, sign] = base.edge(edge_key);
            const auto& bd = base.faces[f].boundary;
            for (std::size_t p = 0; p < bd.size(); ++p)
                if (bd[p].edge == e) {
                    c0[CoverComplex::edge_copy(e, cv.occurrence_bit[f][p])] += dir * sign;
                    return;
                }
            throw InternalInconsistency("annulus path: edge not on face");
        };
        add(key(Kind::sector, fa, ia), key(Kind::cut, fa, ia), 1);
        add(key(Kind::sector, fa, ia), key(Kind::half_edge, fa, ia, 0), -1);
        add(key(Kind::annulus, static_cast<int>(a)), key(Kind::traversal, static_cast<int>(a)), 1);
        add(key(Kind::sector, fb, ib), key(Kind::half_edge, fb, ib, 0), 1);
        add(key(Kind::sector, fb, ib), key(Kind::cut, fb, ib), -1);
        Vec tau = c0;
        Vec d = deck(cv, c0);
        for (std::size_t i = 0; i < tau.size(); ++i) tau[i] -= d[i];
        gens.push_back(tau);
        labels.push_back(fmt::format("tau_{}", a));
    }
    for (int k = 0; k < s.num_small_tori; ++k) {
        for (Kind kind : {Kind::loop_a, Kind::loop_b}) {
            Vec c = zero_vec(base.num_edges());
            auto [e, sign] = base.edge(key(kind, k));
            c[e] += sign;
            gens.push_back(odd_lift(cv, c));
            labels.push_back(fmt::format("{}_{}", kind == Kind::loop_a ? "alpha" : "beta", k));
        }
    }

    // Relations: edge cycles around each hole sum to zero (disc) or to the
    // annulus girth (with opposite signs at the two ends).
    const std::size_t G = gens.size();
    std::vector<Vec> rels;
    for (int hole = 0; hole < s.num_holes; ++hole) {
        Vec r = zero_vec(G);
        for (auto [f, i] : hc[hole]) r[edge_gen.at({f, (i + 2) % 3})] += 1;
        int a = annulus_of[hole];
        if (a >= 0) r[lambda_gen[a]] += s.annuli[a][0] == hole ? 1 : -1;
        rels.push_back(r);
    }
    PresentationGenerators out;
    out.labels = std::move(labels);
    out.relations = IntMatrix(G, rels.size());
    for (std::size_t j = 0; j < rels.size(); ++j) out.relations.set_column(j, rels[j]);
    out.cycles = IntMatrix(cv.total.num_edges(), G);
    for (std::size_t j = 0; j < G; ++j) out.cycles.set_column(j, gens[j]);
    return out;
}

OddBasis odd_homology_presentation(const surface::BoundarySurface& b, const CoverComplex& cv,
                                   const SurfaceHomology& h) {
    auto pg = presentation_generators(b, cv);
    const auto& labels = pg.labels;
    const IntMatrix& R = pg.relations;
    const IntMatrix& Gm = pg.cycles;
    const std::size_t G = labels.size();
    std::vector<Vec> gens;
    for (std::size_t j = 0; j < G; ++j) gens.push_back(Gm.column(j));
    // Every relation must hold in H1(Sigma).
    IntMatrix Gh(h.rank(), G);
    for (std::size_t j = 0; j < G; ++j) Gh.set_column(j, h.coords(gens[j]));
    IntMatrix GR = Gh * R;
    for (std::size_t j = 0; j < GR.cols(); ++j)
        for (std::size_t i = 0; i < GR.rows(); ++i)
            if (GR(i, j) != 0) {
                throw InternalInconsistency(fmt::format("presentation relation at hole {} fails in H1 of the cover", j));
            }

    auto quo = zlat::quotient(R);
    OddBasis ob;
    ob.relations = R;
    ob.torsion = quo.torsion;
    ob.cycles = Gm * quo.lift_basis;
    for (std::size_t j = 0; j < quo.lift_basis.cols(); ++j) {
        std::string lab;
        for (std::size_t i = 0; i < G; ++i) {
            const Int& x = quo.lift_basis(i, j);
            if (x == 0) continue;
            if (!lab.empty()) lab += x > 0 ? "+" : "";
            if (x == -1)
                lab += "-";
            else if (x != 1)
                lab += x.get_str() + "*";
            lab += labels[i];
        }
        ob.labels.push_back(lab);
    }
    finish_basis(ob, cv, h);
    return ob;
}

Vec odd_coords(const OddBasis& basis, const SurfaceHomology& h, const Vec& cycle) {
    auto c = zlat::solve_in_basis(basis.h1_coords, h.coords(cycle));
    if (!c) throw InternalInconsistency("cycle is not in the span of the odd basis");
    return *c;
}

TwistedCycle TwistedCycle::operator+(const TwistedCycle& o) const {
    if (basis_id != o.basis_id || coeffs.size() != o.coeffs.size())
        throw BasisMismatch("twisted cycles over different bases: '" + basis_id + "' and '" + o.basis_id + "'");
    TwistedCycle r = *this;
    for (std::size_t i = 0; i < coeffs.size(); ++i) r.coeffs[i] += o.coeffs[i];
    r.fiber_bit = (fiber_bit + o.fiber_bit) & 1;
    return r;
}

TwistedCycle TwistedCycle::operator-() const {
    TwistedCycle r = *this;
    for (auto& x : r.coeffs) x = -x;
    return r;
}

Int intersection(const TwistedCycle& x, const TwistedCycle& y, const IntMatrix& eps) {
    if (x.basis_id != y.basis_id || x.coeffs.size() != eps.rows() || y.coeffs.size() != eps.rows())
        throw BasisMismatch("intersection of cycles over different bases");
    Int s = 0;
    for (std::size_t i = 0; i < eps.rows(); ++i)
        for (std::size_t j = 0; j < eps.cols(); ++j) s += x.coeffs[i] * eps(i, j) * y.coeffs[j];
    return s;
}

}  // namespace gluesym::oddhom
