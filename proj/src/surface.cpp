#include "gluesym/surface.hpp"

#include "gluesym/errors.hpp"
#include "gluesym/zlat.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <set>

namespace gluesym::surface {

std::string to_string(Stage s) {
    switch (s) {
        case Stage::M: return "M";
        case Stage::M0: return "M0";
        case Stage::Mprime: return "Mprime";
    }
    return "?";
}

Stage parse_stage(const std::string& s) {
    if (s == "M") return Stage::M;
    if (s == "M0") return Stage::M0;
    if (s == "Mprime" || s == "M'") return Stage::Mprime;
    throw SchemaError("unknown stage '" + s + "' (expected M, M0 or Mprime)");
}

std::string to_string(SmallType t) {
    switch (t) {
        case SmallType::disc: return "disc";
        case SmallType::annulus: return "annulus";
        case SmallType::torus: return "torus";
        case SmallType::sphere: return "sphere";
        case SmallType::other: break;
    }
    return "other";
}

// ---------------------------------------------------------------------------
// CellComplex

int CellComplex::vertex(const CellKey& k) const {
    auto it = vertex_index.find(k);
    return it == vertex_index.end() ? -1 : it->second;
}

std::pair<int, int> CellComplex::edge(const CellKey& k) const {
    auto it = edge_index.find(k);
    return it == edge_index.end() ? std::pair(-1, 0) : it->second;
}

int CellComplex::face(const CellKey& k) const {
    auto it = face_index.find(k);
    return it == face_index.end() ? -1 : it->second;
}

void CellComplex::check_closed_surface() const {
    std::vector<int> plus(edges.size(), 0), minus(edges.size(), 0);
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const auto& bd = faces[f].boundary;
        if (bd.empty()) throw InternalInconsistency(fmt::format("face {} has empty boundary", f));
        for (std::size_t i = 0; i < bd.size(); ++i) {
            const Step& s = bd[i];
            const Step& t = bd[(i + 1) % bd.size()];
            if (head(s) != tail(t))
                throw InternalInconsistency(fmt::format("boundary of face {} is not closed at position {}", f, i));
            (s.dir > 0 ? plus : minus)[s.edge]++;
        }
    }
    for (std::size_t e = 0; e < edges.size(); ++e)
        if (plus[e] != 1 || minus[e] != 1)
            throw InternalInconsistency(fmt::format("edge {} occurs {}+/{}- times in face boundaries", e, plus[e],
                                                    minus[e]));
}

std::vector<int> CellComplex::face_components(int* count) const {
    std::vector<int> parent(faces.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<int> first(edges.size(), -1);
    for (std::size_t f = 0; f < faces.size(); ++f)
        for (const auto& s : faces[f].boundary) {
            if (first[s.edge] < 0)
                first[s.edge] = static_cast<int>(f);
            else
                parent[find(static_cast<int>(f))] = find(first[s.edge]);
        }
    std::map<int, int> id;
    std::vector<int> out(faces.size());
    for (std::size_t f = 0; f < faces.size(); ++f) {
        auto [it, fresh] = id.emplace(find(static_cast<int>(f)), static_cast<int>(id.size()));
        out[f] = it->second;
    }
    if (count) *count = static_cast<int>(id.size());
    return out;
}

// ---------------------------------------------------------------------------
// ComplexBuilder

void ComplexBuilder::add_vertex(const CellKey& k) {
    if (vertex_id_.count(k)) return;
    vertex_id_.emplace(k, static_cast<int>(vkeys_.size()));
    vkeys_.push_back(k);
    vparent_.push_back(static_cast<int>(vparent_.size()));
}

void ComplexBuilder::add_edge(const CellKey& k, const CellKey& tail, const CellKey& head, bool cut) {
    if (edge_id_.count(k)) throw InternalInconsistency("edge label added twice");
    add_vertex(tail);
    add_vertex(head);
    edge_id_.emplace(k, static_cast<int>(ekeys_.size()));
    ekeys_.push_back(k);
    eparent_.push_back(static_cast<int>(eparent_.size()));
    eparity_.push_back(0);
    etail_.push_back(vertex_id_.at(tail));
    ehead_.push_back(vertex_id_.at(head));
    ecut_.push_back(cut ? 1 : 0);
}

void ComplexBuilder::add_face(const CellKey& k, const std::vector<std::pair<CellKey, int>>& boundary) {
    if (face_id_.count(k)) throw InternalInconsistency("face label added twice");
    std::vector<std::pair<int, int>> bd;
    for (const auto& [ek, dir] : boundary) {
        auto it = edge_id_.find(ek);
        if (it == edge_id_.end())
            throw InternalInconsistency(fmt::format("face boundary uses a missing edge (kind {})", static_cast<int>(ek.kind)));
        bd.emplace_back(it->second, dir);
    }
    face_id_.emplace(k, static_cast<int>(fkeys_.size()));
    fkeys_.push_back(k);
    fbound_.push_back(std::move(bd));
}

int ComplexBuilder::vfind(int x) const {
    while (vparent_[x] != x) x = vparent_[x] = vparent_[vparent_[x]];
    return x;
}

std::pair<int, int> ComplexBuilder::efind(int x) const {
    int parity = 0;
    while (eparent_[x] != x) {
        parity ^= eparity_[x];
        x = eparent_[x];
    }
    return {x, parity};
}

void ComplexBuilder::identify_vertices(const CellKey& x, const CellKey& y) {
    add_vertex(x);
    add_vertex(y);
    int a = vfind(vertex_id_.at(x)), b = vfind(vertex_id_.at(y));
    if (a != b) vparent_[a] = b;
}

void ComplexBuilder::identify_edges(const CellKey& x, const CellKey& y, bool reversed) {
    int ix = edge_id_.at(x), iy = edge_id_.at(y);
    auto [rx, px] = efind(ix);
    auto [ry, py] = efind(iy);
    const int want = reversed ? 1 : 0;
    if (rx == ry) {
        if ((px ^ py) != want) throw InternalInconsistency("edge identified with itself reversed");
    } else {
        eparent_[rx] = ry;
        eparity_[rx] = px ^ py ^ want;
        ecut_[ry] = ecut_[ry] | ecut_[rx];
    }
    auto vx = [&](int e, bool head) { return head ? ehead_[e] : etail_[e]; };
    auto join = [&](int a, int b) {
        a = vfind(a);
        b = vfind(b);
        if (a != b) vparent_[a] = b;
    };
    join(vx(ix, false), vx(iy, reversed));
    join(vx(ix, true), vx(iy, !reversed));
}

CellComplex ComplexBuilder::build() const {
    CellComplex c;
    std::map<int, int> vid;
    auto vclass = [&](int raw) {
        int r = vfind(raw);
        auto [it, fresh] = vid.emplace(r, static_cast<int>(vid.size()));
        if (fresh) c.vertex_label.push_back(vkeys_[r]);
        return it->second;
    };
    std::map<int, int> eid;
    for (std::size_t e = 0; e < ekeys_.size(); ++e) {
        auto [r, p] = efind(static_cast<int>(e));
        auto it = eid.find(r);
        if (it == eid.end()) {
            it = eid.emplace(r, static_cast<int>(c.edges.size())).first;
            c.edges.push_back({vclass(etail_[r]), vclass(ehead_[r])});
            c.edge_is_cut.push_back(ecut_[r]);
            c.edge_label.push_back(ekeys_[r]);
        }
        const auto& E = c.edges[it->second];
        int t = vclass(etail_[e]), h = vclass(ehead_[e]);
        if ((p == 0 && (t != E.tail || h != E.head)) || (p == 1 && (t != E.head || h != E.tail)))
            throw InternalInconsistency("edge identification disagrees with endpoint identification");
        c.edge_index.emplace(ekeys_[e], std::pair(it->second, p ? -1 : 1));
    }
    for (const auto& [k, raw] : vertex_id_) c.vertex_index.emplace(k, vclass(raw));
    c.num_vertices = static_cast<int>(vid.size());
    for (std::size_t f = 0; f < fkeys_.size(); ++f) {
        CellComplex::Face face;
        for (auto [e, dir] : fbound_[f]) {
            auto [idx, sign] = c.edge_index.at(ekeys_[e]);
            face.boundary.push_back({idx, dir * sign});
        }
        c.faces.push_back(std::move(face));
        c.face_label.push_back(fkeys_[f]);
        c.face_index.emplace(fkeys_[f], static_cast<int>(f));
    }
    c.check_closed_surface();
    return c;
}

// ---------------------------------------------------------------------------
// Analysis shared by all builders

namespace {

bool is_small_kind(Kind k) {
    return k == Kind::small_triangle || k == Kind::cap || k == Kind::annulus || k == Kind::torus || k == Kind::sphere;
}

void analyse(BoundarySurface& b) {
    const CellComplex& c = b.complex;
    int ncomp = 0;
    auto comp = c.face_components(&ncomp);
    b.num_components = ncomp;
    b.component_euler.assign(ncomp, 0);
    b.component_genus.assign(ncomp, 0);
    b.component_discs.assign(ncomp, 0);
    b.component_small_closed.assign(ncomp, 1);
    b.component_has_defect.assign(ncomp, 0);

    std::vector<std::set<int>> verts(ncomp), edges(ncomp);
    for (int f = 0; f < c.num_faces(); ++f) {
        int k = comp[f];
        b.component_euler[k] += 1;
        for (const auto& s : c.faces[f].boundary) {
            edges[k].insert(s.edge);
            verts[k].insert(c.edges[s.edge].tail);
            verts[k].insert(c.edges[s.edge].head);
        }
        Kind kind = c.face_label[f].kind;
        if (!is_small_kind(kind)) b.component_small_closed[k] = 0;
        if (kind == Kind::strip) b.component_has_defect[k] = 1;
    }
    for (int k = 0; k < ncomp; ++k) {
        b.component_euler[k] += static_cast<int>(verts[k].size()) - static_cast<int>(edges[k].size());
        b.component_genus[k] = (2 - b.component_euler[k]) / 2;
    }

    // Small pieces: small faces joined through edges shared by two small faces.
    std::vector<int> small;
    std::vector<int> pos(c.num_faces(), -1);
    for (int f = 0; f < c.num_faces(); ++f)
        if (is_small_kind(c.face_label[f].kind)) {
            pos[f] = static_cast<int>(small.size());
            small.push_back(f);
        }
    std::vector<int> parent(small.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<std::vector<int>> faces_of_edge(c.num_edges());
    for (int f = 0; f < c.num_faces(); ++f)
        for (const auto& s : c.faces[f].boundary) faces_of_edge[s.edge].push_back(f);
    for (int e = 0; e < c.num_edges(); ++e) {
        const auto& fs = faces_of_edge[e];
        if (fs.size() == 2 && pos[fs[0]] >= 0 && pos[fs[1]] >= 0) parent[find(pos[fs[0]])] = find(pos[fs[1]]);
    }
    std::map<int, int> piece_id;
    for (std::size_t i = 0; i < small.size(); ++i) {
        auto [it, fresh] = piece_id.emplace(find(static_cast<int>(i)), static_cast<int>(b.small_pieces.size()));
        if (fresh) b.small_pieces.emplace_back();
        b.small_pieces[it->second].faces.push_back(small[i]);
    }
    for (auto& piece : b.small_pieces) {
        std::set<int> pv, pe;
        std::map<int, int> uses;
        for (int f : piece.faces)
            for (const auto& s : c.faces[f].boundary) {
                pe.insert(s.edge);
                pv.insert(c.edges[s.edge].tail);
                pv.insert(c.edges[s.edge].head);
                uses[s.edge]++;
            }
        piece.euler = static_cast<int>(pv.size()) - static_cast<int>(pe.size()) + static_cast<int>(piece.faces.size());
        piece.component = comp[piece.faces.front()];
        // Boundary circles: components of the graph of once-used edges.
        std::map<int, int> vparent;
        std::function<int(int)> vf = [&](int x) {
            auto it = vparent.find(x);
            if (it == vparent.end()) {
                vparent[x] = x;
                return x;
            }
            if (it->second == x) return x;
            int r = vf(it->second);
            vparent[x] = r;
            return r;
        };
        std::set<int> bverts;
        for (auto [e, n] : uses) {
            if (n != 1) continue;
            int a = vf(c.edges[e].tail), h = vf(c.edges[e].head);
            if (a != h) vparent[a] = h;
            bverts.insert(c.edges[e].tail);
        }
        std::set<int> roots;
        for (int v : bverts) roots.insert(vf(v));
        piece.boundary_circles = static_cast<int>(roots.size());
        if (piece.boundary_circles == 0)
            piece.type = piece.euler == 2 ? SmallType::sphere : piece.euler == 0 ? SmallType::torus : SmallType::other;
        else if (piece.boundary_circles == 1 && piece.euler == 1)
            piece.type = SmallType::disc;
        else if (piece.boundary_circles == 2 && piece.euler == 0)
            piece.type = SmallType::annulus;
        else
            piece.type = SmallType::other;
        if (piece.type == SmallType::disc) b.component_discs[piece.component]++;
    }

    for (int f = 0; f < c.num_faces(); ++f)
        if (c.face_label[f].kind == Kind::sector && c.face_label[f].c == 0) {
            // counted once per hexagon below
        }
    std::set<std::pair<int, int>> hex;
    for (int f = 0; f < c.num_faces(); ++f)
        if (c.face_label[f].kind == Kind::sector) hex.emplace(c.face_label[f].a, c.face_label[f].b);
    b.num_hexagons = static_cast<int>(hex.size());
    int mids = 0;
    for (int v = 0; v < c.num_vertices; ++v)
        if (c.vertex_label[v].kind == Kind::midpoint) ++mids;
    b.num_big_edges = mids;
}

// Outward vertex cycle of face f of a positively oriented tetrahedron:
// (f, a, b, c) is an even permutation.
std::array<int, 3> face_cycle(int f) {
    static const std::array<int, 3> cycles[4] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
    return cycles[f];
}

int succ_in(int f, int v) {
    auto c = face_cycle(f);
    for (int i = 0; i < 3; ++i)
        if (c[i] == v) return c[(i + 1) % 3];
    throw InternalInconsistency("vertex not on face");
}

int pred_in(int f, int v) {
    auto c = face_cycle(f);
    for (int i = 0; i < 3; ++i)
        if (c[i] == v) return c[(i + 2) % 3];
    throw InternalInconsistency("vertex not on face");
}

std::pair<int, int> other_two(int x, int y) {
    int p = -1, q = -1;
    for (int v = 0; v < 4; ++v)
        if (v != x && v != y) (p < 0 ? p : q) = v;
    return {p, q};
}

CellKey key(Kind k, int a = 0, int b = 0, int c = 0, int d = 0) { return CellKey{k, a, b, c, d}; }

}  // namespace

int BoundarySurface::genus() const {
    int chi = complex.euler();
    return (2 * num_components - chi) / 2;
}

// ---------------------------------------------------------------------------
// Boundary of a triangulation at a stage
//
// Labels (t = tetrahedron):
//   center(t,f)  midpoint(t,e)  corner(t,v,w,f)  girth_point(t,e,f)
//   half_edge(t,v,w): corner(v,w) -> midpoint(vw)
//   cut(t,f,e): center -> midpoint
//   small_side(t,v,f): corner(v,w1,f) -> corner(v,w2,f), w1 < w2
//   truncation(t,v,w): corner(v,w,x) -> corner(v,w,y), x < y
//   long_side(t,v,w,f): corner(v,w,f) -> girth_point(vw,f)
//   girth(t,e): girth_point(e,x) -> girth_point(e,y), x < y
//   sector(t,f,a)  small_triangle(t,v)  strip(t,v,w)

BoundarySurface build_boundary(const tri::Triangulation& t, Stage stage) {
    BoundarySurface out;
    out.stage = stage;
    out.source = t;
    const int n = t.num_tetrahedra;

    std::vector<tri::EdgeClass> classes;
    tri::EdgeLookup lk;
    if (stage != Stage::M) {
        classes = tri::edge_classes(t);
        lk = tri::edge_lookup(t, classes);
        out.edge_classes = classes;
        for (const auto& ec : classes) out.num_defects += (stage == Stage::M0 && ec.closed) ? 1 : 0;
    }
    auto glued = [&](int tet, int f) { return stage != Stage::M && t.is_glued(tet, f); };
    auto closed = [&](int tet, int v, int w) {
        return stage != Stage::M && classes[lk.class_of[6 * tet + tri::edge_index(v, w)]].closed;
    };
    auto truncated = [&](int tet, int v, int w) { return stage == Stage::M0 && closed(tet, v, w); };

    auto P = [](int tet, int v, int w, int f) { return key(Kind::corner, tet, v, w, f); };
    ComplexBuilder B;

    for (int tet = 0; tet < n; ++tet) {
        // Big edges still on the boundary.
        for (int e = 0; e < 6; ++e) {
            auto [v, w] = tri::edge_vertices(e);
            if (closed(tet, v, w)) continue;
            auto [x, y] = other_two(v, w);
            B.add_edge(key(Kind::half_edge, tet, v, w), P(tet, v, w, x), key(Kind::midpoint, tet, e));
            B.add_edge(key(Kind::half_edge, tet, w, v), P(tet, w, v, x), key(Kind::midpoint, tet, e));
            B.identify_vertices(P(tet, v, w, x), P(tet, v, w, y));
            B.identify_vertices(P(tet, w, v, x), P(tet, w, v, y));
        }
        // Small sides.
        for (int v = 0; v < 4; ++v)
            for (int f = 0; f < 4; ++f) {
                if (f == v) continue;
                auto [w1, w2] = other_two(v, f);
                B.add_edge(key(Kind::small_side, tet, v, f), P(tet, v, w1, f), P(tet, v, w2, f));
            }
        // Corners: truncated ones get a truncation side and a strip; filled
        // or open ones are single points.
        for (int v = 0; v < 4; ++v)
            for (int w = 0; w < 4; ++w) {
                if (w == v) continue;
                auto [x, y] = other_two(v, w);
                if (truncated(tet, v, w)) {
                    B.add_edge(key(Kind::truncation, tet, v, w), P(tet, v, w, x), P(tet, v, w, y));
                    for (int f : {x, y})
                        B.add_edge(key(Kind::long_side, tet, v, w, f), P(tet, v, w, f),
                                   key(Kind::girth_point, tet, tri::edge_index(v, w), f));
                } else {
                    B.add_vertex(P(tet, v, w, x));
                    B.add_vertex(P(tet, v, w, y));
                    B.identify_vertices(P(tet, v, w, x), P(tet, v, w, y));
                }
            }
        for (int e = 0; e < 6; ++e) {
            auto [v, w] = tri::edge_vertices(e);
            if (!truncated(tet, v, w)) continue;
            auto [x, y] = other_two(v, w);
            B.add_edge(key(Kind::girth, tet, e), key(Kind::girth_point, tet, e, x), key(Kind::girth_point, tet, e, y),
                       true);
        }
        // Hexagons of free faces.
        for (int f = 0; f < 4; ++f) {
            if (glued(tet, f)) continue;
            auto cyc = face_cycle(f);
            for (int i = 0; i < 3; ++i) {
                int e = tri::edge_index(cyc[i], cyc[(i + 1) % 3]);
                B.add_edge(key(Kind::cut, tet, f, e), key(Kind::center, tet, f), key(Kind::midpoint, tet, e), true);
            }
        }
    }

    // Face gluings.
    for (int tet = 0; tet < n; ++tet)
        for (int f = 0; f < 4; ++f) {
            if (!glued(tet, f)) continue;
            const auto* p = t.pairing(tet, f);
            const int u = p->to_tet, g = p->to_face;
            if (std::pair(u, g) < std::pair(tet, f)) continue;
            const auto& pi = p->perm;
            for (int v = 0; v < 4; ++v) {
                if (v == f) continue;
                auto [w1, w2] = other_two(v, f);
                B.identify_edges(key(Kind::small_side, tet, v, f), key(Kind::small_side, u, pi[v], g), pi[w1] > pi[w2]);
                for (int w = 0; w < 4; ++w) {
                    if (w == v || w == f) continue;
                    if (truncated(tet, v, w))
                        B.identify_edges(key(Kind::long_side, tet, v, w, f), key(Kind::long_side, u, pi[v], pi[w], g),
                                         false);
                    else if (!closed(tet, v, w))
                        B.identify_edges(key(Kind::half_edge, tet, v, w), key(Kind::half_edge, u, pi[v], pi[w]), false);
                    else
                        B.identify_vertices(P(tet, v, w, f), P(u, pi[v], pi[w], g));
                }
            }
        }

    // Faces of each tetrahedron.
    for (int tet = 0; tet < n; ++tet) {
        for (int v = 0; v < 4; ++v) {
            std::vector<std::pair<CellKey, int>> bd;
            int f = v == 0 ? 1 : 0;
            for (int k = 0; k < 3; ++k) {
                int b = succ_in(f, v), c = pred_in(f, v);
                auto [w1, w2] = other_two(v, f);
                bd.emplace_back(key(Kind::small_side, tet, v, f), b == w1 ? 1 : -1);
                int f2 = b;
                if (truncated(tet, v, c)) bd.emplace_back(key(Kind::truncation, tet, v, c), f < f2 ? 1 : -1);
                (void)w2;
                f = f2;
            }
            B.add_face(key(Kind::small_triangle, tet, v), bd);
        }
        for (int f = 0; f < 4; ++f) {
            if (glued(tet, f)) continue;
            for (int a : face_cycle(f)) {
                int b = succ_in(f, a), c = pred_in(f, a);
                B.add_face(key(Kind::sector, tet, f, a),
                           {{key(Kind::cut, tet, f, tri::edge_index(c, a)), 1},
                            {key(Kind::half_edge, tet, a, c), -1},
                            {key(Kind::small_side, tet, a, f), c < b ? 1 : -1},
                            {key(Kind::half_edge, tet, a, b), 1},
                            {key(Kind::cut, tet, f, tri::edge_index(a, b)), -1}});
            }
        }
        for (int v = 0; v < 4; ++v)
            for (int w = 0; w < 4; ++w) {
                if (w == v || !truncated(tet, v, w)) continue;
                // f carries w -> v, f2 carries v -> w.
                auto [x, y] = other_two(v, w);
                int f = pred_in(x, v) == w ? x : y;
                int f2 = f == x ? y : x;
                B.add_face(key(Kind::strip, tet, v, w),
                           {{key(Kind::truncation, tet, v, w), f < f2 ? -1 : 1},
                            {key(Kind::long_side, tet, v, w, f), 1},
                            {key(Kind::girth, tet, tri::edge_index(v, w)), f < f2 ? 1 : -1},
                            {key(Kind::long_side, tet, v, w, f2), -1}});
            }
    }

    out.complex = B.build();
    analyse(out);
    if (stage == Stage::M) out.abstract = to_abstract(out);
    return out;
}

// ---------------------------------------------------------------------------
// Abstract surfaces
//
// Labels (F = face, i = corner or side):
//   center(F)  midpoint(F,i)  corner(F,i,s): s = 0 on side i-1, s = 1 on side i
//   half_edge(F,i,end): end 0 from corner i, end 1 from corner i+1, to midpoint(F,i)
//   cut(F,i)  small_side(F,i): corner(F,i,0) -> corner(F,i,1)
//   traversal(a)  apex(k)  loop_a(k)  loop_b(k)

void AbstractSurface::validate() const {
    if (glue.size() != faces.size()) throw SchemaError("abstract surface: glue table size mismatch");
    for (std::size_t f = 0; f < faces.size(); ++f)
        for (int i = 0; i < 3; ++i) {
            auto [g, j] = glue[f][i];
            if (g < 0 || g >= static_cast<int>(faces.size()) || j < 0 || j > 2)
                throw SchemaError("abstract surface: glue target out of range");
            if (glue[g][j] != std::pair(static_cast<int>(f), i)) throw SchemaError("abstract surface: glue not involutive");
            if (g == static_cast<int>(f) && j == i) throw SchemaError("abstract surface: side glued to itself");
            // corner i of f is corner j+1 of g
            if (faces[f][i] != faces[g][(j + 1) % 3] || faces[f][(i + 1) % 3] != faces[g][j])
                throw SchemaError("abstract surface: hole labels disagree across a glued side");
            if (faces[f][i] < 0 || faces[f][i] >= num_holes) throw SchemaError("abstract surface: hole label out of range");
        }
    std::vector<int> seen(num_holes, 0);
    for (const auto& a : annuli)
        for (int h : a) {
            if (h < 0 || h >= num_holes || seen[h]++) throw SchemaError("abstract surface: bad annulus hole");
        }
    auto hc = hole_corners();
    for (int h = 0; h < num_holes; ++h)
        if (hc[h].empty()) throw SchemaError("abstract surface: hole with no corners");
}

std::vector<std::vector<std::pair<int, int>>> AbstractSurface::hole_corners() const {
    std::vector<std::vector<std::pair<int, int>>> out(num_holes);
    std::set<std::pair<int, int>> seen;
    for (std::size_t f = 0; f < faces.size(); ++f)
        for (int i = 0; i < 3; ++i) {
            std::pair<int, int> start(static_cast<int>(f), i);
            if (seen.count(start)) continue;
            int h = faces[f][i];
            if (!out[h].empty()) throw SchemaError("abstract surface: a hole label covers several corner cycles");
            auto cur = start;
            do {
                seen.insert(cur);
                out[h].push_back(cur);
                auto [g, j] = glue[cur.first][(cur.second + 2) % 3];
                cur = {g, j};
            } while (cur != start);
        }
    return out;
}

AbstractSurface tetrahedron_surface() {
    // Faces of a tetrahedron, holes = vertices, from the outward cycles.
    AbstractSurface s;
    s.num_holes = 4;
    for (int f = 0; f < 4; ++f) s.faces.push_back(face_cycle(f));
    s.glue.resize(4);
    for (int f = 0; f < 4; ++f)
        for (int i = 0; i < 3; ++i) {
            int a = s.faces[f][i], b = s.faces[f][(i + 1) % 3];
            for (int g = 0; g < 4; ++g) {
                if (g == f) continue;
                for (int j = 0; j < 3; ++j)
                    if (s.faces[g][j] == b && s.faces[g][(j + 1) % 3] == a) s.glue[f][i] = {g, j};
            }
        }
    s.validate();
    return s;
}

AbstractSurface annulus_surface() {
    AbstractSurface s = tetrahedron_surface();
    s.annuli.push_back({0, 1});
    s.validate();
    return s;
}

AbstractSurface small_torus_surface() {
    AbstractSurface s;
    s.num_small_tori = 1;
    return s;
}

BoundarySurface build_abstract(const AbstractSurface& s) {
    s.validate();
    BoundarySurface out;
    out.stage = Stage::M;
    out.abstract = s;
    ComplexBuilder B;
    const int nf = static_cast<int>(s.faces.size());
    auto P = [](int f, int i, int side) { return key(Kind::corner, f, i, side); };
    for (int f = 0; f < nf; ++f)
        for (int i = 0; i < 3; ++i) {
            int j = (i + 1) % 3;
            B.add_edge(key(Kind::half_edge, f, i, 0), P(f, i, 1), key(Kind::midpoint, f, i));
            B.add_edge(key(Kind::half_edge, f, i, 1), P(f, j, 0), key(Kind::midpoint, f, i));
            B.add_edge(key(Kind::cut, f, i), key(Kind::center, f), key(Kind::midpoint, f, i), true);
            B.add_edge(key(Kind::small_side, f, i), P(f, i, 0), P(f, i, 1));
        }
    for (int f = 0; f < nf; ++f)
        for (int i = 0; i < 3; ++i) {
            auto [g, j] = s.glue[f][i];
            if (std::pair(g, j) < std::pair(f, i)) continue;
            B.identify_edges(key(Kind::half_edge, f, i, 0), key(Kind::half_edge, g, j, 1), false);
            B.identify_edges(key(Kind::half_edge, f, i, 1), key(Kind::half_edge, g, j, 0), false);
        }
    for (int f = 0; f < nf; ++f)
        for (int i = 0; i < 3; ++i) {
            int prev = (i + 2) % 3;
            B.add_face(key(Kind::sector, f, i), {{key(Kind::cut, f, prev), 1},
                                                 {key(Kind::half_edge, f, prev, 1), -1},
                                                 {key(Kind::small_side, f, i), 1},
                                                 {key(Kind::half_edge, f, i, 0), 1},
                                                 {key(Kind::cut, f, i), -1}});
        }
    auto hc = s.hole_corners();
    std::vector<int> annulus_of(s.num_holes, -1);
    for (std::size_t a = 0; a < s.annuli.size(); ++a)
        for (int h : s.annuli[a]) annulus_of[h] = static_cast<int>(a);
    auto cap_chain = [&](int h) {
        std::vector<std::pair<CellKey, int>> bd;
        for (auto [f, i] : hc[h]) bd.emplace_back(key(Kind::small_side, f, i), -1);
        return bd;
    };
    for (int h = 0; h < s.num_holes; ++h)
        if (annulus_of[h] < 0) B.add_face(key(Kind::cap, h), cap_chain(h));
    for (std::size_t a = 0; a < s.annuli.size(); ++a) {
        int ha = s.annuli[a][0], hb = s.annuli[a][1];
        auto [fa, ia] = hc[ha].front();
        auto [fb, ib] = hc[hb].front();
        CellKey tau = key(Kind::traversal, static_cast<int>(a));
        B.add_edge(tau, P(fa, ia, 1), P(fb, ib, 1));
        auto bd = cap_chain(ha);
        bd.emplace_back(tau, 1);
        auto cb = cap_chain(hb);
        bd.insert(bd.end(), cb.begin(), cb.end());
        bd.emplace_back(tau, -1);
        B.add_face(key(Kind::annulus, static_cast<int>(a)), bd);
    }
    for (int k = 0; k < s.num_small_tori; ++k) {
        CellKey x = key(Kind::apex, k), a = key(Kind::loop_a, k), b = key(Kind::loop_b, k);
        B.add_edge(a, x, x);
        B.add_edge(b, x, x);
        B.add_face(key(Kind::torus, k), {{b, 1}, {a, 1}, {b, -1}, {a, -1}});
    }
    for (int k = 0; k < s.num_small_spheres; ++k) {
        CellKey x = key(Kind::apex, s.num_small_tori + k), a = key(Kind::loop_a, s.num_small_tori + k);
        B.add_edge(a, x, x);
        B.add_face(key(Kind::sphere, k, 0), {{a, 1}});
        B.add_face(key(Kind::sphere, k, 1), {{a, -1}});
    }
    out.complex = B.build();
    analyse(out);
    return out;
}

AbstractSurface to_abstract(const BoundarySurface& b) {
    if (b.abstract) return *b.abstract;
    if (!b.source || b.stage != Stage::M) throw SchemaError("only stage-M boundaries have an abstract big boundary");
    const auto& t = *b.source;
    AbstractSurface s;
    s.num_holes = 4 * t.num_tetrahedra;
    for (int tet = 0; tet < t.num_tetrahedra; ++tet)
        for (int f = 0; f < 4; ++f) {
            auto c = face_cycle(f);
            s.faces.push_back({4 * tet + c[0], 4 * tet + c[1], 4 * tet + c[2]});
        }
    s.glue.resize(s.faces.size());
    for (int tet = 0; tet < t.num_tetrahedra; ++tet)
        for (int f = 0; f < 4; ++f) {
            auto c = face_cycle(f);
            for (int i = 0; i < 3; ++i) {
                int a = c[i], bb = c[(i + 1) % 3], g = c[(i + 2) % 3];
                auto cg = face_cycle(g);
                for (int j = 0; j < 3; ++j)
                    if (cg[j] == bb && cg[(j + 1) % 3] == a) s.glue[4 * tet + f][i] = {4 * tet + g, j};
            }
        }
    s.validate();
    return s;
}

AbstractSurface flip(const AbstractSurface& s, int face, int side) {
    if (face < 0 || face >= static_cast<int>(s.faces.size()) || side < 0 || side > 2)
        throw NotAdjacent("flip: no such face side");
    auto [g, j] = s.glue[face][side];
    if (g == face) throw NotAdjacent("flip: the side is glued to its own face");
    // face = (A, B, C) with side A->B; g = (B, A, D) with side B->A.
    const int i = side;
    const int A = s.faces[face][i], Bh = s.faces[face][(i + 1) % 3], C = s.faces[face][(i + 2) % 3];
    const int D = s.faces[g][(j + 2) % 3];
    auto nb = [&](int f, int k) { return s.glue[f][k % 3]; };
    const auto bc = nb(face, i + 1), ca = nb(face, i + 2), ad = nb(g, j + 1), db = nb(g, j + 2);

    AbstractSurface r = s;
    // new face (C, A, D) at index `face`, new face (D, B, C) at index g.
    r.faces[face] = {C, A, D};
    r.faces[g] = {D, Bh, C};
    r.glue[face] = {ca, ad, std::pair(g, 2)};
    r.glue[g] = {db, bc, std::pair(face, 2)};
    auto relink = [&](std::pair<int, int> ext, std::pair<int, int> now) {
        // ext may point back into the quad; resolve through the new table.
        r.glue[ext.first][ext.second] = now;
    };
    // Externals: old sides ca, ad, db, bc now sit at (face,0), (face,1), (g,0), (g,1).
    std::map<std::pair<int, int>, std::pair<int, int>> moved = {{{face, (i + 2) % 3}, {face, 0}},
                                                                {{g, (j + 1) % 3}, {face, 1}},
                                                                {{g, (j + 2) % 3}, {g, 0}},
                                                                {{face, (i + 1) % 3}, {g, 1}}};
    auto remap = [&](std::pair<int, int> x) {
        auto it = moved.find(x);
        return it == moved.end() ? x : it->second;
    };
    r.glue[face][0] = remap(ca);
    r.glue[face][1] = remap(ad);
    r.glue[g][0] = remap(db);
    r.glue[g][1] = remap(bc);
    for (auto [old_pos, new_pos] : moved) {
        auto ext = r.glue[new_pos.first][new_pos.second];
        relink(ext, new_pos);
    }
    r.validate();
    return r;
}

BoundarySurface flip_t2d_side(const BoundarySurface& b, int face, int side) {
    return build_abstract(flip(to_abstract(b), face, side));
}

BoundarySurface flip_t2d(const BoundarySurface& b, std::pair<int, int> faces) {
    AbstractSurface s = to_abstract(b);
    auto [f, g] = faces;
    if (f < 0 || f >= static_cast<int>(s.faces.size()) || g < 0 || g >= static_cast<int>(s.faces.size()))
        throw NotAdjacent("flip: face index out of range");
    for (int i = 0; i < 3; ++i)
        if (s.glue[f][i].first == g && f != g) return build_abstract(flip(s, f, i));
    throw NotAdjacent(fmt::format("flip: faces {} and {} do not share a big edge", f, g));
}

// ---------------------------------------------------------------------------
// Covers

CoverComplex build_cover(const BoundarySurface& b) { return build_cover(b.complex); }

CoverComplex build_cover(const CellComplex& base) {
    CoverComplex cv;
    const int V = base.num_vertices, E = base.num_edges(), F = base.num_faces();
    cv.base_vertices = V;
    cv.base_edges = E;
    cv.base_faces = F;

    // Reference occurrence of each edge is the first one met.
    std::vector<int> seen(E, 0);
    cv.occurrence_bit.resize(F);
    for (int f = 0; f < F; ++f)
        for (const auto& s : base.faces[f].boundary) {
            int bit = (seen[s.edge]++ > 0 && base.edge_is_cut[s.edge]) ? 1 : 0;
            cv.occurrence_bit[f].push_back(bit);
        }

    // Endpoint slots (edge copy, end) joined around face copies.
    std::vector<int> parent(4 * E);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    auto slot = [](int ecopy, int end) { return 2 * ecopy + end; };
    for (int f = 0; f < F; ++f) {
        const auto& bd = base.faces[f].boundary;
        for (int s = 0; s < 2; ++s)
            for (std::size_t i = 0; i < bd.size(); ++i) {
                std::size_t k = (i + 1) % bd.size();
                int ci = CoverComplex::edge_copy(bd[i].edge, s ^ cv.occurrence_bit[f][i]);
                int ck = CoverComplex::edge_copy(bd[k].edge, s ^ cv.occurrence_bit[f][k]);
                int a = find(slot(ci, bd[i].dir > 0 ? 1 : 0));
                int c = find(slot(ck, bd[k].dir > 0 ? 0 : 1));
                if (a != c) parent[a] = c;
            }
    }
    std::map<int, int> vid;
    auto vclass = [&](int sl) {
        auto [it, fresh] = vid.emplace(find(sl), static_cast<int>(vid.size()));
        return it->second;
    };
    CellComplex& T = cv.total;
    for (int e = 0; e < E; ++e)
        for (int s = 0; s < 2; ++s) {
            int c = CoverComplex::edge_copy(e, s);
            T.edges.push_back({vclass(slot(c, 0)), vclass(slot(c, 1))});
            T.edge_is_cut.push_back(base.edge_is_cut[e]);
            CellKey k = base.edge_label[e];
            T.edge_label.push_back(k);
        }
    T.num_vertices = static_cast<int>(vid.size());
    cv.vertex_base.assign(T.num_vertices, -1);
    cv.vertex_copies.assign(V, {-1, -1});
    for (int e = 0; e < E; ++e)
        for (int s = 0; s < 2; ++s)
            for (int end = 0; end < 2; ++end) {
                int cvx = vclass(slot(CoverComplex::edge_copy(e, s), end));
                int bv = end ? base.edges[e].head : base.edges[e].tail;
                if (cv.vertex_base[cvx] >= 0 && cv.vertex_base[cvx] != bv)
                    throw InternalInconsistency("cover vertex over two base vertices");
                cv.vertex_base[cvx] = bv;
            }
    for (int x = 0; x < T.num_vertices; ++x) {
        auto& cp = cv.vertex_copies[cv.vertex_base[x]];
        if (cp[0] < 0)
            cp[0] = x;
        else if (cp[1] < 0 && cp[0] != x)
            cp[1] = x;
        else if (cp[0] != x && cp[1] != x)
            throw InternalInconsistency("base vertex with more than two lifts");
    }
    cv.is_branch.assign(V, 0);
    for (int v = 0; v < V; ++v) {
        auto& cp = cv.vertex_copies[v];
        if (cp[0] < 0) throw InternalInconsistency("base vertex with no lift");
        if (cp[1] < 0) {
            cp[1] = cp[0];
            cv.is_branch[v] = 1;
            ++cv.num_branch_points;
        }
    }
    cv.vertex_deck.assign(T.num_vertices, -1);
    for (int v = 0; v < V; ++v) {
        auto cp = cv.vertex_copies[v];
        cv.vertex_deck[cp[0]] = cp[1];
        cv.vertex_deck[cp[1]] = cp[0];
    }
    cv.edge_deck.resize(2 * E);
    for (int e = 0; e < 2 * E; ++e) cv.edge_deck[e] = e ^ 1;
    // Deck must commute with endpoints.
    for (int e = 0; e < 2 * E; ++e)
        if (T.edges[e ^ 1].tail != cv.vertex_deck[T.edges[e].tail] || T.edges[e ^ 1].head != cv.vertex_deck[T.edges[e].head])
            throw InternalInconsistency("deck involution does not preserve edge endpoints");

    for (int f = 0; f < F; ++f)
        for (int s = 0; s < 2; ++s) {
            CellComplex::Face face;
            const auto& bd = base.faces[f].boundary;
            for (std::size_t i = 0; i < bd.size(); ++i)
                face.boundary.push_back({CoverComplex::edge_copy(bd[i].edge, s ^ cv.occurrence_bit[f][i]), bd[i].dir});
            T.faces.push_back(std::move(face));
            CellKey k = base.face_label[f];
            T.face_label.push_back(k);
        }
    cv.face_deck.resize(2 * F);
    for (int f = 0; f < 2 * F; ++f) cv.face_deck[f] = f ^ 1;
    T.vertex_label.resize(T.num_vertices);
    for (int x = 0; x < T.num_vertices; ++x) T.vertex_label[x] = base.vertex_label[cv.vertex_base[x]];
    T.check_closed_surface();

    // Sheets of vertices whose surrounding face copies agree.
    cv.vertex_sheet.assign(T.num_vertices, -2);
    for (int f = 0; f < 2 * F; ++f)
        for (const auto& st : T.faces[f].boundary) {
            for (int x : {T.tail(st), T.head(st)}) {
                int s = f & 1;
                int& cur = cv.vertex_sheet[x];
                cur = cur == -2 ? s : (cur == s ? s : -1);
            }
        }
    for (auto& s : cv.vertex_sheet)
        if (s == -2) s = -1;
    return cv;
}

// ---------------------------------------------------------------------------
// Invariants

int betti1(const CellComplex& c) {
    // rank d1 = V - #graph components; ker d2 has one generator per face
    // component because every edge bounds two faces with opposite signs.
    std::vector<int> parent(c.num_vertices);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    int graph_comp = c.num_vertices;
    for (const auto& e : c.edges) {
        int a = find(e.tail), b = find(e.head);
        if (a != b) {
            parent[a] = b;
            --graph_comp;
        }
    }
    int face_comp = 0;
    c.face_components(&face_comp);
    int rank_d1 = c.num_vertices - graph_comp;
    int rank_d2 = c.num_faces() - face_comp;
    return c.num_edges() - rank_d1 - rank_d2;
}

namespace {

// Ranks of the odd cellular chain complex: odd chains are spanned by
// copy0 - copy1 of each base cell, except at branch points.
int odd_chain_rank(const CellComplex& base, const CoverComplex& cv) {
    const int V = base.num_vertices, E = base.num_edges(), F = base.num_faces();
    std::vector<int> vcol(V, -1);
    int nv = 0;
    for (int v = 0; v < V; ++v)
        if (!cv.is_branch[v]) vcol[v] = nv++;
    // Sign of cover vertex x in terms of l^-(v) = copies[0] - copies[1].
    auto vsign = [&](int x) {
        int v = cv.vertex_base[x];
        if (cv.is_branch[v]) return 0;
        return cv.vertex_copies[v][0] == x ? 1 : -1;
    };
    zlat::SparseRows d1(E), d2(F);
    for (int e = 0; e < E; ++e) {
        // d(l^-(e)) = (h0 - s h0) - (t0 - s t0), with the copy-0 endpoints.
        const auto& ed = cv.total.edges[CoverComplex::edge_copy(e, 0)];
        int bh = cv.vertex_base[ed.head], bt = cv.vertex_base[ed.tail];
        if (vsign(ed.head)) d1[e][vcol[bh]] += vsign(ed.head);
        if (vsign(ed.tail)) d1[e][vcol[bt]] -= vsign(ed.tail);
    }
    for (int f = 0; f < F; ++f) {
        const auto& bd = base.faces[f].boundary;
        for (std::size_t i = 0; i < bd.size(); ++i)
            d2[f][bd[i].edge] += bd[i].dir * (cv.occurrence_bit[f][i] ? -1 : 1);
    }
    for (auto* rows : {&d1, &d2})
        for (auto& r : *rows)
            for (auto it = r.begin(); it != r.end();)
                it = it->second == 0 ? r.erase(it) : std::next(it);
    const int r1 = static_cast<int>(zlat::rank_sparse(d1));
    const int r2 = static_cast<int>(zlat::rank_sparse(d2));
    return E - r1 - r2;
}

}  // namespace

CoverInvariants cover_invariants(const BoundarySurface& b, const CoverComplex& c) {
    CoverInvariants inv;
    inv.chi_base = b.complex.euler();
    inv.chi_cover = c.total.euler();
    inv.num_branch_points = c.num_branch_points;
    if (inv.chi_cover != 2 * inv.chi_base - inv.num_branch_points)
        throw InternalInconsistency(fmt::format("Riemann-Hurwitz fails: chi(Sigma) = {}, 2 chi(C) - #b = {}",
                                                inv.chi_cover, 2 * inv.chi_base - inv.num_branch_points));
    auto comp_genera = [](const CellComplex& cx, int& ncomp) {
        auto comp = cx.face_components(&ncomp);
        std::vector<std::set<int>> vs(ncomp), es(ncomp);
        std::vector<int> fs(ncomp, 0);
        for (int f = 0; f < cx.num_faces(); ++f) {
            fs[comp[f]]++;
            for (const auto& s : cx.faces[f].boundary) {
                es[comp[f]].insert(s.edge);
                vs[comp[f]].insert(cx.edges[s.edge].tail);
                vs[comp[f]].insert(cx.edges[s.edge].head);
            }
        }
        std::vector<int> g(ncomp);
        for (int k = 0; k < ncomp; ++k)
            g[k] = (2 - (static_cast<int>(vs[k].size()) - static_cast<int>(es[k].size()) + fs[k])) / 2;
        return g;
    };
    inv.genus_base = comp_genera(b.complex, inv.components_base);
    inv.genus_cover = comp_genera(c.total, inv.components_cover);
    inv.rank_h1_base = betti1(b.complex);
    inv.rank_h1_cover = betti1(c.total);
    inv.rank_odd_difference = inv.rank_h1_cover - inv.rank_h1_base;
    inv.rank_odd_euler =
        -inv.chi_base + inv.num_branch_points + 2 * (inv.components_cover - inv.components_base);
    inv.rank_odd_chains = odd_chain_rank(b.complex, c);

    if (inv.rank_odd_difference != inv.rank_odd_euler)
        throw InternalInconsistency(fmt::format("rank formulas disagree: rank H1(Sigma) - rank H1(C) = {}, "
                                                "-chi(C) + #b + 2(#comp) = {}",
                                                inv.rank_odd_difference, inv.rank_odd_euler));
    if (inv.rank_odd_chains != inv.rank_odd_difference)
        throw InternalInconsistency(fmt::format("odd chain complex has rank {} but the cover predicts {}",
                                                inv.rank_odd_chains, inv.rank_odd_difference));

    // Closed form per component: 0 small sphere, 2 small torus,
    // 6g - 6 + 2n otherwise; needs no defects and an abelian small boundary.
    bool applies = true;
    for (int k = 0; k < b.num_components; ++k)
        if (b.component_has_defect[k]) applies = false;
    for (const auto& p : b.small_pieces)
        if (p.type == SmallType::other) applies = false;
    if (applies) {
        int total = 0;
        for (int k = 0; k < b.num_components; ++k) {
            if (b.component_small_closed[k]) {
                int g = b.component_genus[k];
                total += g == 0 ? 0 : g == 1 ? 2 : 0;
                if (g > 1) applies = false;
            } else {
                total += 6 * b.component_genus[k] - 6 + 2 * b.component_discs[k];
            }
        }
        if (applies) {
            inv.rank_predicted = total;
            if (total != inv.rank_odd_difference)
                throw InternalInconsistency(
                    fmt::format("closed-form rank {} differs from the cover rank {}", total, inv.rank_odd_difference));
        }
    }
    return inv;
}

}  // namespace gluesym::surface
