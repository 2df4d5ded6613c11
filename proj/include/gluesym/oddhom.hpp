#pragma once

// Integral first homology of surface cell complexes, the deck action on a
// double cover, odd homology and the intersection form.

#include "gluesym/surface.hpp"
#include "gluesym/zlat.hpp"

#include <string>
#include <vector>

namespace gluesym::oddhom {

using surface::CellComplex;
using surface::CoverComplex;
using zlat::Int;
using zlat::IntMatrix;
using zlat::Vec;

// H1 of a closed oriented surface complex.  A spanning tree and a dual
// spanning tree leave 2g generator edges whose fundamental cycles form a
// basis; coordinates of a cycle come from peeling faces off the dual tree.
class SurfaceHomology {
public:
    explicit SurfaceHomology(const CellComplex& c);

    int rank() const { return static_cast<int>(generators_.size()); }
    // Cellular cycles of the basis, one column per generator (edges x rank).
    const IntMatrix& basis() const { return basis_; }
    bool is_cycle(const Vec& chain) const;
    // Coordinates of a 1-cycle; throws InternalInconsistency otherwise.
    Vec coords(const Vec& cycle) const;
    const CellComplex& complex() const { return *c_; }

private:
    const CellComplex* c_;
    std::vector<int> generators_;        // generator edges
    std::vector<int> face_order_;        // dual tree faces, parents first
    std::vector<int> face_parent_edge_;  // per face, -1 for roots
    IntMatrix basis_;
};

// Algebraic intersection number of two cellular 1-cycles.  Face boundaries
// run clockwise, so the square torus with boundary b a b^-1 a^-1 has
// <a, b> = +1.
Int intersection(const CellComplex& c, const Vec& a, const Vec& b);
IntMatrix intersection_matrix(const CellComplex& c, const IntMatrix& cycles);

// Deck involution on cover 1-chains.
Vec deck(const CoverComplex& cv, const Vec& chain);
// Odd lift l^-(c) = (copy 0) - (copy 1) of a base 1-chain.
Vec odd_lift(const CoverComplex& cv, const Vec& base_chain);
// Push-forward of a cover 1-chain to the base.
Vec push_forward(const CoverComplex& cv, const Vec& chain);

struct QuasiProjections {
    IntMatrix sigma;            // deck action on H1(Sigma), in basis coordinates
    IntMatrix P_plus, P_minus;  // 1 + sigma, 1 - sigma
};
QuasiProjections quasi_projections(const CoverComplex& cv, const SurfaceHomology& h);

// A free basis of an odd homology group together with its intersection form.
struct OddBasis {
    std::vector<std::string> labels;
    IntMatrix cycles;     // cellular cycles on the cover, one column per basis element
    IntMatrix h1_coords;  // the same classes in SurfaceHomology coordinates
    IntMatrix eps;        // intersection form on the basis
    IntMatrix relations;  // presentation relations (generators x relations), if any
    std::vector<Int> torsion;
    int rank() const { return static_cast<int>(eps.rows()); }
};

// Kernel of P_plus on H1(Sigma).
OddBasis odd_homology(const CoverComplex& cv, const SurfaceHomology& h);
// Odd cellular chain complex: 1-chains l^-(e), relations l^-(faces).
OddBasis odd_homology_cellular(const CoverComplex& cv, const SurfaceHomology& h);
// Generators of the presentation below, in order: one edge cycle per glued
// side pair (first side in face order), then lambda_a, tau_a per annulus and
// alpha_k, beta_k per small torus.  Relations: one column per hole.
struct PresentationGenerators {
    std::vector<std::string> labels;
    IntMatrix cycles;     // cover edges x generators
    IntMatrix relations;  // generators x holes
};
PresentationGenerators presentation_generators(const surface::BoundarySurface& b, const CoverComplex& cv);
// Presentation by edge cycles gamma_e, annulus lambda/tau and torus alpha/beta
// for an abstract boundary surface without defects.
OddBasis odd_homology_presentation(const surface::BoundarySurface& b, const CoverComplex& cv,
                                   const SurfaceHomology& h);

// Coordinates of an odd cover cycle in an odd basis (exact; throws
// InternalInconsistency when the cycle is not in the span).
Vec odd_coords(const OddBasis& basis, const SurfaceHomology& h, const Vec& cycle);

// Lift of the path from the center of `from` to the center of `to` through
// the midpoint of their common big edge, using the sector copies on sheet 0
// at the given corners: (1 - sigma)(k_from - k_to).
struct SectorRef {
    surface::CellKey sector;  // base sector face
    surface::CellKey cut;     // cut edge of that sector on the shared big edge
};
Vec hexagon_path_lift(const CellComplex& base, const CoverComplex& cv, const SectorRef& from, const SectorRef& to);

// Element of the twisted odd homology: coordinates in a declared basis plus
// the coefficient of the fibre class modulo 2.
struct TwistedCycle {
    std::string basis_id;
    Vec coeffs;
    int fiber_bit = 0;

    TwistedCycle operator+(const TwistedCycle& o) const;
    TwistedCycle operator-() const;
    TwistedCycle operator-(const TwistedCycle& o) const { return *this + (-o); }
    bool operator==(const TwistedCycle& o) const = default;
};

// Skew pairing through eps; the fibre bits pair trivially.
Int intersection(const TwistedCycle& x, const TwistedCycle& y, const IntMatrix& eps);

}  // namespace gluesym::oddhom
