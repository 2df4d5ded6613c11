#pragma once

// Paths on the small boundary, the map h~ to twisted odd homology and the
// cutting maps used when gluing.
//
// At stage M every small triangle (tet, v) has three corner arcs, one per
// corner {v, w}.  The arc is oriented from the side on the face carrying
// w -> v in its outward cycle to the side on the face carrying v -> w.  Its
// odd lift is the edge cycle of slot edge_slot(v, w) of that tetrahedron.
// Paths on the glued stages are sequences of normal steps; cutting them at
// the glued small edges gives sums of corner arcs.

#include "gluesym/oddhom.hpp"
#include "gluesym/surface.hpp"
#include "gluesym/tri.hpp"
#include "gluesym/zlat.hpp"

#include <compare>
#include <map>
#include <optional>
#include <vector>

namespace gluesym::pathalg {

using zlat::Int;
using zlat::IntMatrix;
using zlat::Vec;

struct CornerArc {
    int tet = 0, v = 0, w = 0;
    auto operator<=>(const CornerArc&) const = default;
};

// Corner passed by a normal step: the vertex w not in {vertex, enter, exit}.
// Throws SchemaError for a malformed step.
int corner_of(const tri::NormalStep& s);
CornerArc arc_of(const tri::NormalStep& s);
// +1 when the step runs along the orientation of its corner arc.
int arc_sign(const tri::NormalStep& s);

struct SmallPath {
    tri::NormalPath steps;
    bool closed = true;
};

// Checks that consecutive steps pass through a face glued at `stage` with
// matching vertices; throws SchemaError otherwise.
void validate_path(const tri::Triangulation& t, const SmallPath& p, surface::Stage stage);

// Element of the path group at stage M: integer combination of corner arcs
// plus the fibre class.
struct PathGroupElement {
    std::map<CornerArc, Int> arcs;
    int fiber_bit = 0;

    PathGroupElement& operator+=(const PathGroupElement& o);
    PathGroupElement operator+(const PathGroupElement& o) const;
    PathGroupElement operator-() const;
    PathGroupElement operator-(const PathGroupElement& o) const { return *this + (-o); }
    bool operator==(const PathGroupElement& o) const;
    static PathGroupElement arc(const CornerArc& a, Int coeff = 1);
    static PathGroupElement fiber();
};

// Coordinates of the edge cycle of `slot` on tetrahedron `tet` in the basis
// gamma_0..gamma_{N-1}, gamma'_0..gamma'_{N-1}; gamma'' = -gamma - gamma'.
Vec slot_vector(int num_tetrahedra, int tet, int slot);

// h~ on the stage-M path group, into the tetrahedron basis "tet".
oddhom::TwistedCycle h_tilde(const PathGroupElement& p, int num_tetrahedra);

// Integer matrices of the stage-M path group on Z^{12N} (arcs indexed by
// arc_index): h~ itself (2N x 12N), the small-triangle relations (12N x 4N)
// and the generators p_e - p_e' of P_E (12N x 6N).
int arc_index(const CornerArc& a);
CornerArc arc_at(int index);
IntMatrix h_tilde_matrix(int num_tetrahedra);
IntMatrix triangle_relations(int num_tetrahedra);
IntMatrix edge_path_generators(int num_tetrahedra);

struct CutResult {
    std::vector<std::pair<CornerArc, int>> segments;  // arc and sign
    int cut_count = 0;                                 // glued small edges crossed, mod 2
};
CutResult cut_path(const SmallPath& p);
// g~_P(p + n u) = g_P(p) + (cut(p) + n) u.
PathGroupElement g_tilde_P(const SmallPath& p, int n = 0);
// Lift of a stage-Mprime path to stage M0.  Normal paths already avoid the
// filled defect points, so the canonical lift is the path itself.
SmallPath q_lift(const SmallPath& p);

// Closed normal path pushed onto the 1-skeleton of the small region of a
// stage-M0 or stage-Mprime boundary; returns a base cycle.
Vec small_cycle(const surface::BoundarySurface& b, const SmallPath& p);
// Small loop around the end of a defect at stage M0, as a base cycle made of
// truncation sides: the end where the incidences have vertex `a`.
Vec defect_end_cycle(const surface::BoundarySurface& b, const tri::EdgeClass& ec);
// Closed normal path around one end of an edge class (for mu_j).
SmallPath edge_link_path(const tri::EdgeClass& ec);

// Cellular h~ on stage M: the boundary, its cover and H1, with the
// tetrahedron basis realised by edge cycles.
class StageMHomology {
public:
    explicit StageMHomology(const tri::Triangulation& t);
    StageMHomology(const StageMHomology&) = delete;
    StageMHomology& operator=(const StageMHomology&) = delete;
    int num_tetrahedra() const { return n_; }
    // Odd lift of a corner arc, as a cover cycle.
    Vec arc_cycle(const CornerArc& a) const;
    // Coordinates of an odd cover cycle in the tetrahedron basis.
    Vec tet_coords(const Vec& cycle) const;
    Vec h_tilde(const PathGroupElement& p) const;
    const surface::BoundarySurface& boundary() const { return b_; }
    const surface::CoverComplex& cover() const { return cv_; }
    const oddhom::SurfaceHomology& homology() const { return *h_; }
    // Intersection form on the tetrahedron basis, computed cellularly.
    IntMatrix basis_form() const;

private:
    int n_ = 0;
    surface::BoundarySurface b_;
    surface::CoverComplex cv_;
    std::optional<oddhom::SurfaceHomology> h_;
    IntMatrix basis_cycles_;  // cover edges x 2N
    IntMatrix basis_h1_;      // rank x 2N
};

}  // namespace gluesym::pathalg
