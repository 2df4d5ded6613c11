#pragma once

// Framed flat PGL(2, C) connections on boundary surfaces, their coordinates
// x_gamma labelled by odd homology, abelian GL(1) connections on the double
// cover, the non-abelianization map between the two, and gluing.
//
// Model.  Each big face f carries its own trivialization of the bundle, with
// the framing lines at its three corners stored as vectors.  Crossing side i
// of f to the glued side j of g is a matrix from the fibre of f to the fibre
// of g sending corner lines to corner lines.  Each small annulus carries the
// transport along its traversal, from the first corner of its first hole to
// the first corner of its second hole, and each small torus its two
// commuting holonomies with the framing eigenline.
//
// Edge coordinates.  For side i of f with corner lines p, q, r at corners
// i, i+1, i+2 and s the far corner line of the glued face,
//   x_e = cross_ratio_edge(p, s, r, q).
// In the basis (v1, v2) with v1 in p, v2 in q and v1 - v2 in r, crossing the
// side is H(x_e) S, and moving to the next side of the same face is S T.
//
// Closed paths.  The coordinate of a closed path is the eigenvalue of its
// holonomy on the framing line divided by the other eigenvalue.

#include "gluesym/gluesys.hpp"
#include "gluesym/oddhom.hpp"
#include "gluesym/surface.hpp"
#include "gluesym/zlat.hpp"

#include <Eigen/Dense>
#include <gmpxx.h>

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace gluesym::moduli {

using cd = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Vec2 = Eigen::Vector2cd;
using zlat::Int;
using zlat::IntMatrix;
using zlat::Vec;

// ---- projective 2x2 algebra

Mat2 matrix_S();
Mat2 matrix_T();
Mat2 matrix_H(cd x);  // diag(1, x)

cd wedge(const Vec2& a, const Vec2& b);
// Scaled to determinant 1 (the sign of the square root is arbitrary).
Mat2 normalize(const Mat2& m);
// max-entry distance after normalization, minimized over the sign.
double projective_distance(const Mat2& a, const Mat2& b);
double distance_to_identity(const Mat2& m);
// |tr^2 - 4 det| / |det|; zero exactly for unipotent elements.
double unipotent_defect(const Mat2& m);
// |det[v, m v]| / (|v| |m v|); zero when v spans an eigenline.
double eigenline_defect(const Mat2& m, const Vec2& v);

// -<a^b><c^d> / (<a^c><b^d>).  Throws DegenerateConfiguration when a
// compared pair is proportional.
cd cross_ratio_edge(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);
// <a^k><b^k>/<a^b> * <a'^b'>/(<a'^k><b'^k>) for lines in one fibre.
cd five_line_ratio(const Vec2& a, const Vec2& b, const Vec2& k, const Vec2& a2, const Vec2& b2);
// Eigenvalue on `line` over the other eigenvalue.  Throws
// DegenerateConfiguration unless `line` is an eigenline.
cd eigen_ratio(const Mat2& m, const Vec2& line, double tol = 1e-8);
// The element of PGL(2) sending the lines p_i to the lines q_i.
Mat2 map_three_lines(const Vec2& p1, const Vec2& p2, const Vec2& p3, const Vec2& q1, const Vec2& q2,
                     const Vec2& q3);

// ---- coordinate systems

// N disjoint tetrahedron boundaries; face 4t + f is face f of tetrahedron t,
// hole 4t + v is vertex v.
surface::AbstractSurface tetrahedra_surface(int num_tetrahedra);

struct Generator {
    enum class Kind { edge, lambda, tau, alpha, beta };
    Kind kind = Kind::edge;
    int index = 0;          // annulus or torus index
    int face = 0, side = 0;  // first side of an edge
    std::string label;
};

// The path coordinates of a surface (one generator per big edge, annulus
// and torus cycle) and a free basis of H1^-(Sigma) chosen among them.
struct CoordinateSystem {
    surface::AbstractSurface surface;
    std::vector<Generator> generators;
    std::vector<int> side_generator;  // per 3 f + i
    std::vector<std::string> basis_labels;
    IntMatrix basis_in_generators;  // generators x d
    IntMatrix generators_in_basis;  // d x generators
    IntMatrix eps;                  // intersection form on the basis
    // Tetrahedra naming: basis gamma_0.., gammap_0.. in the order of the
    // NZ columns.
    bool tetrahedra = false;

    int dim() const { return static_cast<int>(basis_labels.size()); }
    int num_generators() const { return static_cast<int>(generators.size()); }
    int generator_index(Generator::Kind kind, int index) const;
};

// Throws NonAbelianSmallBoundary for surfaces outside the traffic-rule
// reconstruction (small spheres).
CoordinateSystem coordinate_system(const surface::AbstractSurface& s);
CoordinateSystem coordinate_system(const surface::BoundarySurface& b);

struct CoordinatePoint {
    std::vector<std::string> basis;
    std::vector<cd> values;
};

// Generator values from basis values, and basis values from generator
// values (the latter ignores the relations).
std::vector<cd> generator_values(const CoordinateSystem& cs, const CoordinatePoint& x);
CoordinatePoint basis_values(const CoordinateSystem& cs, const std::vector<cd>& gen);
// Throws UnipotentAnnulus / UnipotentTorus when a restriction flag fails.
void check_restrictions(const CoordinateSystem& cs, const std::vector<cd>& gen, double tol = 1e-12);

// {"basis": [...], "values": [[re, im], ...]}
std::string coordinates_to_json(const CoordinatePoint& x);
CoordinatePoint coordinates_from_json(const std::string& doc);

// ---- framed connections

struct TorusHolonomy {
    Mat2 alpha = Mat2::Identity(), beta = Mat2::Identity();
    Vec2 framing{1.0, 0.0};
};

struct FramedConnection {
    surface::AbstractSurface surface;
    std::vector<std::array<Vec2, 3>> lines;      // per face and corner
    std::vector<std::array<Mat2, 3>> transport;  // per face and side, fibre f -> fibre g
    std::vector<Mat2> annulus_transport;         // per annulus
    std::vector<TorusHolonomy> tori;
};

// One step of a path in the dual graph: across a side, along an annulus
// traversal, or around a torus cycle.
struct DualStep {
    enum class Kind { side, traversal, torus_alpha, torus_beta };
    Kind kind = Kind::side;
    int a = 0, b = 0;  // (face, side), or (annulus or torus index, 0)
    int dir = 1;       // for traversals and torus cycles
};

// Product of the transports along the steps, acting on the fibre where the
// path starts.
Mat2 holonomy(const FramedConnection& A, const std::vector<DualStep>& path);
// Loop around a hole through its corners, starting at the first corner.
std::vector<DualStep> hole_loop(const surface::AbstractSurface& s, int hole);
// Loops whose holonomy is trivial for every connection: across each side and
// back, the boundary of each annulus (first hole, traversal, second hole,
// traversal back) and the commutator of each torus.
std::vector<std::vector<DualStep>> contractible_test_loops(const surface::AbstractSurface& s);
// Projective distance between the holonomies of the two halves of a loop
// (the first half and the reversed second half), relative to their size.
// Unlike distance_to_identity of the whole loop it does not grow with the
// square of the condition number of long transports.
double loop_defect(const FramedConnection& A, const std::vector<DualStep>& loop);

// Traffic-rule bases of face f: column i lists v1, v2 of the basis at side i
// in the fibre of f.  Moving from side i to i+1 is S T in these bases.
std::array<Mat2, 3> hexagon_bases(const FramedConnection& A, int face);

// Throws UnipotentAnnulus, UnipotentTorus or DegenerateConfiguration.
FramedConnection reconstruct(const CoordinateSystem& cs, const CoordinatePoint& x);
// Generator values of a connection (edge cross-ratios, annulus and torus
// eigenvalue ratios, annulus twists).
std::vector<cd> extract_generators(const CoordinateSystem& cs, const FramedConnection& A);
CoordinatePoint extract_coordinates(const CoordinateSystem& cs, const FramedConnection& A);

// Transports keyed by dual-graph edge id 3 f + i, annuli and tori.
std::string connection_to_json(const FramedConnection& A);

// ---- abelian connections and non-abelianization

struct AbelianConnection {
    std::vector<std::string> basis;
    std::vector<cd> holonomy;  // x_i on the basis of H1^-(Sigma)
    cd fiber{-1.0, 0.0};       // x_u

    // x of sum c_i gamma_i + bit u.
    cd value(const Vec& coeffs, int fiber_bit = 0) const;
};

AbelianConnection abelian_from_coordinates(const CoordinatePoint& x);

// Push-forward of the line bundle followed by the unipotent jumps across the
// spectral network, written out as the traffic rules: H(x_e) S across big
// edges, S T inside hexagons, the annulus jump at the tail of p_tau and the
// diagonal torus holonomies.  Throws UnipotentAnnulus / UnipotentTorus.
FramedConnection nonabelianize(const CoordinateSystem& cs, const AbelianConnection& a);

// ---- gluing along a triangulation

struct GluedTorus {
    int cusp = 0;
    cd x_alpha, x_beta;
    FramedConnection torus;      // on the small torus after puncture removal
    std::string removal_curve;  // curve used for the unipotent modification
    Mat2 raw_alpha = Mat2::Identity(), raw_beta = Mat2::Identity();  // before removal
};

struct GluedConnection {
    std::vector<cd> edge_values;  // x of each edge row
    std::vector<GluedTorus> cusps;
};

// Abelian gluing: x'_{q(gamma)} = x_{g(gamma)} through the NZ rows, then the
// torus connection by Phi.  a lives on tetrahedra_surface(N).
GluedConnection glue_connection(const gluesys::GluingSystem& s, const AbelianConnection& a, double tol = 1e-10);
// PGL(2) gluing: identify face fibres across glued faces, transport along
// the row paths and read off eigenvalue ratios, then remove the punctures
// of each cusp torus.  A lives on tetrahedra_surface(N).
GluedConnection glue_connection(const tri::Triangulation& t, const gluesys::GluingSystem& s, const FramedConnection& A,
                                double tol = 1e-10);
// Row path holonomy of a connection on tetrahedra_surface(N); its framing
// line is the corner line at the first step's vertex.
Mat2 row_holonomy(const tri::Triangulation& t, const gluesys::GluingSystem& s, const FramedConnection& A,
                  std::size_t row, Vec2* framing = nullptr);

// Random point of the moment-map slice: edge rows equal to 1, the values of
// the cusp rows free.  Values of the free coordinates are e^{w} with w
// uniform in [-spread, spread] + i[-pi, pi].
AbelianConnection random_slice_point(const gluesys::GluingSystem& s, std::uint64_t seed, double spread = 0.5);

// ---- Poisson brackets and K2 forms

Int poisson_bracket(const oddhom::TwistedCycle& x, const oddhom::TwistedCycle& y, const IntMatrix& eps);

// sum_{k < l} coeff(k, l) x_k ^ x_l over the symbols `labels`.
struct FormalWedge {
    std::vector<std::string> labels;
    std::vector<std::vector<mpq_class>> coeff;  // antisymmetric

    std::string str() const;
    bool operator==(const FormalWedge& o) const;
};

// (1/2) sum w_ij x_i ^ x_j with w = -eps^{-1}, so that <gamma, gamma'> = 1
// gives x_gamma ^ x_gamma'.  Throws SingularForm.
FormalWedge k2_form(const std::vector<std::string>& labels, const IntMatrix& eps);
// eta(a ^ b) = log|a| d arg b - log|b| d arg a summed over the wedge, at the
// point `values` along the tangent `dlog` (d log x_k).
double eta(const FormalWedge& w, const std::vector<cd>& values, const std::vector<cd>& dlog);

// The K2 form of the tetrahedra rewritten in the coordinates x_alpha,
// x_beta, x_{mu_j} and a complement, with every term containing some
// x_{mu_j} dropped.  Throws InternalInconsistency when a term outside the
// cusp symbols survives.
FormalWedge reduce_k2(const gluesys::GluingSystem& s);

}  // namespace gluesym::moduli
