#pragma once

// Boundary surfaces of framed 3-manifolds and their canonical branched
// double covers, as explicit oriented 2-dimensional cell complexes.
//
// Base cell model.  Each big face of the 2d triangulation is a hexagon with a
// branch point o at its center and branch cuts k running from o to the
// midpoints m of its three big edges; the cuts split the hexagon into three
// sectors, one per corner.  Small regions are tiled by small triangles (or,
// for abstract surfaces, by single cap polygons).  At stage M0 every internal
// edge leaves a defect annulus made of strips, one per edge corner, each
// split by a girth cut g into two halves.  Cut edges are exactly the k and g
// edges, so small regions never touch a cut and carry a canonical sheet.

#include "gluesym/tri.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace gluesym::surface {

enum class Stage { M, M0, Mprime };
std::string to_string(Stage s);
Stage parse_stage(const std::string& s);

// Label of a cell before identifications.  The meaning of a..d depends on
// the kind; see surface.cpp.
enum class Kind : std::uint8_t {
    // vertices
    center, midpoint, corner, girth_point, apex,
    // edges
    half_edge, cut, small_side, truncation, long_side, girth, traversal, loop_a, loop_b,
    // faces
    sector, small_triangle, strip, cap, annulus, torus, sphere
};

struct CellKey {
    Kind kind{};
    int a = 0, b = 0, c = 0, d = 0;
    bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
    std::size_t operator()(const CellKey& k) const {
        std::size_t h = static_cast<std::size_t>(k.kind);
        for (int x : {k.a, k.b, k.c, k.d}) h = h * 1000003u ^ static_cast<std::size_t>(x + 7);
        return h;
    }
};

// An oriented edge occurrence in a path or face boundary.
struct Step {
    int edge = 0;
    int dir = 1;  // +1 tail -> head, -1 head -> tail
    bool operator==(const Step&) const = default;
};

class CellComplex {
public:
    struct Edge {
        int tail = 0, head = 0;
    };
    struct Face {
        std::vector<Step> boundary;  // counterclockwise
    };

    int num_vertices = 0;
    std::vector<Edge> edges;
    std::vector<Face> faces;
    std::vector<char> edge_is_cut;  // branch cut flags
    std::vector<CellKey> vertex_label, edge_label, face_label;

    int num_edges() const { return static_cast<int>(edges.size()); }
    int num_faces() const { return static_cast<int>(faces.size()); }
    int euler() const { return num_vertices - num_edges() + num_faces(); }

    // Index of a cell by any of its labels; -1 when absent.  For edges the
    // sign tells whether the labelled edge runs along (+1) or against (-1)
    // the stored orientation.
    int vertex(const CellKey& k) const;
    std::pair<int, int> edge(const CellKey& k) const;
    int face(const CellKey& k) const;

    int tail(const Step& s) const { return s.dir > 0 ? edges[s.edge].tail : edges[s.edge].head; }
    int head(const Step& s) const { return s.dir > 0 ? edges[s.edge].head : edges[s.edge].tail; }

    // Throws InternalInconsistency unless every edge occurs exactly twice in
    // face boundaries with opposite directions and boundaries are closed.
    void check_closed_surface() const;

    // Connected components of faces, via shared edges.
    std::vector<int> face_components(int* count = nullptr) const;

    std::unordered_map<CellKey, int, CellKeyHash> vertex_index, face_index;
    std::unordered_map<CellKey, std::pair<int, int>, CellKeyHash> edge_index;
};

// Incremental construction with identifications resolved by union-find.
class ComplexBuilder {
public:
    void add_vertex(const CellKey& k);
    void add_edge(const CellKey& k, const CellKey& tail, const CellKey& head, bool cut = false);
    // Boundary given as labelled edges with directions.
    void add_face(const CellKey& k, const std::vector<std::pair<CellKey, int>>& boundary);
    void identify_vertices(const CellKey& x, const CellKey& y);
    // Identify edge x with edge y; reversed means x's tail goes to y's head.
    void identify_edges(const CellKey& x, const CellKey& y, bool reversed);
    bool has_edge(const CellKey& k) const { return edge_id_.count(k) != 0; }
    bool has_vertex(const CellKey& k) const { return vertex_id_.count(k) != 0; }
    CellComplex build() const;

private:
    int vfind(int x) const;
    std::pair<int, int> efind(int x) const;  // (root, parity)

    std::unordered_map<CellKey, int, CellKeyHash> vertex_id_, edge_id_, face_id_;
    std::vector<CellKey> vkeys_, ekeys_, fkeys_;
    mutable std::vector<int> vparent_;
    mutable std::vector<int> eparent_, eparity_;
    std::vector<int> etail_, ehead_;
    std::vector<char> ecut_;
    std::vector<std::vector<std::pair<int, int>>> fbound_;
};

enum class SmallType { disc, annulus, torus, sphere, other };
std::string to_string(SmallType t);

struct SmallPiece {
    SmallType type = SmallType::other;
    std::vector<int> faces;
    int boundary_circles = 0;
    int euler = 0;
    int component = 0;  // component of the whole surface
    bool closed() const { return boundary_circles == 0; }
};

// Abstract description of a big-boundary triangulation with small caps,
// used for flips and for fixtures not coming from a 3d triangulation.
struct AbstractSurface {
    // Hole label at each corner of each face, counterclockwise.
    std::vector<std::array<int, 3>> faces;
    // glue[f][i] = (f', i'): side i of f (corner i -> i+1) is glued to side
    // i' of f', reversing direction.
    std::vector<std::array<std::pair<int, int>, 3>> glue;
    int num_holes = 0;
    // Pairs of holes joined by a small annulus; all other holes get discs.
    std::vector<std::array<int, 2>> annuli;
    int num_small_tori = 0;
    int num_small_spheres = 0;

    void validate() const;  // throws SchemaError
    // Holes in terms of corners: for each hole, its (face, corner) list in
    // counterclockwise order around the hole (right-hand rule off the surface).
    std::vector<std::vector<std::pair<int, int>>> hole_corners() const;
};

// Four faces of a tetrahedron boundary: the 4-holed sphere.
AbstractSurface tetrahedron_surface();
// The tetrahedron surface with holes 0 and 1 joined by an annulus (a torus).
AbstractSurface annulus_surface();
// A single closed small torus (no big boundary).
AbstractSurface small_torus_surface();

struct BoundarySurface {
    Stage stage = Stage::M;
    CellComplex complex;
    int num_hexagons = 0;
    int num_big_edges = 0;
    int num_defects = 0;
    std::vector<SmallPiece> small_pieces;
    int num_components = 0;
    std::vector<int> component_euler;
    std::vector<int> component_genus;
    std::vector<int> component_discs;         // small discs per component
    std::vector<char> component_small_closed;  // component is a closed small surface
    std::vector<char> component_has_defect;
    // Source data, when the surface comes from a 3d triangulation.
    std::optional<tri::Triangulation> source;
    std::vector<tri::EdgeClass> edge_classes;
    // Abstract big-boundary data, when available (abstract fixtures, stage M).
    std::optional<AbstractSurface> abstract;

    int genus() const;  // total genus, for connected surfaces
};

BoundarySurface build_boundary(const tri::Triangulation& t, Stage stage);
BoundarySurface build_abstract(const AbstractSurface& s);

// Abstract form of a stage-M boundary, or of any abstract surface.
AbstractSurface to_abstract(const BoundarySurface& b);

// Flip the diagonal formed by side `side` of face `face`.  Throws
// NotAdjacent when the side is glued to the same face.
AbstractSurface flip(const AbstractSurface& s, int face, int side);
BoundarySurface flip_t2d(const BoundarySurface& b, std::pair<int, int> faces);
BoundarySurface flip_t2d_side(const BoundarySurface& b, int face, int side);

class CoverComplex {
public:
    CellComplex total;
    int base_vertices = 0, base_edges = 0, base_faces = 0;
    std::vector<int> vertex_base, vertex_deck, edge_deck, face_deck;
    std::vector<std::array<int, 2>> vertex_copies;  // per base vertex; equal entries for branch points
    std::vector<char> is_branch;                    // per base vertex
    // Sheet of a cover vertex when well defined (no incident cut), else -1.
    std::vector<int> vertex_sheet;
    // Per base face and boundary position: bit such that face copy s uses
    // edge copy s ^ bit.
    std::vector<std::vector<int>> occurrence_bit;
    int num_branch_points = 0;

    static int edge_copy(int e, int s) { return 2 * e + s; }
    static int face_copy(int f, int s) { return 2 * f + s; }
};

CoverComplex build_cover(const BoundarySurface& b);
CoverComplex build_cover(const CellComplex& base);

struct CoverInvariants {
    int chi_base = 0, chi_cover = 0;
    int num_branch_points = 0;
    int components_base = 0, components_cover = 0;
    std::vector<int> genus_base, genus_cover;
    int rank_h1_base = 0, rank_h1_cover = 0;
    int rank_odd_difference = 0;  // rank H1(Sigma) - rank H1(C)
    int rank_odd_euler = 0;       // -chi(C) + #b + 2 (#comp Sigma - #comp C)
    int rank_odd_chains = 0;      // rank of the odd cellular chain complex
    std::optional<int> rank_predicted;  // component-wise closed form, when it applies
};

// Throws InternalInconsistency if the rank formulas disagree or
// Riemann-Hurwitz fails.
CoverInvariants cover_invariants(const BoundarySurface& b, const CoverComplex& c);

// Betti number b1 of a closed surface complex and its component count.
int betti1(const CellComplex& c);

}  // namespace gluesym::surface
