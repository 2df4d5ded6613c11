#pragma once

// Gluing data of a triangulated 3-manifold: the Neumann-Zagier system, its
// exact verification and Neumann's chain complex.
//
// Rows of the NZ matrix are the cusp rows alpha_0..alpha_{n-1},
// beta_0..beta_{n-1} followed by one row per internal edge, all written in
// the tetrahedron basis gamma_0..gamma_{N-1}, gamma'_0..gamma'_{N-1} of
// the odd homology of the unglued boundary.  Only torus cusps carry cusp
// rows; boundary discs and annuli of partial gluings are ignored.

#include "gluesym/pathalg.hpp"
#include "gluesym/tri.hpp"
#include "gluesym/zlat.hpp"

#include <string>
#include <vector>

namespace gluesym::gluesys {

using zlat::Int;
using zlat::IntMatrix;
using zlat::Vec;

struct PeripheralBasis {
    int cusp = 0;
    pathalg::SmallPath alpha, beta;
    Int base_intersection = 0;  // <alpha, beta> on the cusp torus
    bool user_supplied = false;
};

// Basis of H1 of a torus cusp from loops in the dual graph of its small
// triangles, oriented so that <alpha, beta> = +1.  Throws NotATorus.
PeripheralBasis compute_peripheral_basis(const tri::Triangulation& t, const tri::CuspClass& cusp);
// One basis per torus cusp, using t.peripheral_curves when supplied.
// Throws NotATorus for a closed cusp that is not a torus.
std::vector<PeripheralBasis> peripheral_bases(const tri::Triangulation& t);

struct GluingSystem {
    int num_tetrahedra = 0;
    int num_cusps = 0;  // torus cusps
    int num_edges = 0;  // internal edges
    IntMatrix nz;           // (2 n_c + E) x 2N
    IntMatrix slot_counts;  // same rows over z_0..z_{N-1}, z'_.., z''_..
    std::vector<int> sign_bits;
    std::vector<std::string> row_labels;
    std::vector<int> cusp_ids;  // cusp class of each torus cusp
    std::vector<int> edge_ids;  // edge class of each edge row
    std::vector<PeripheralBasis> peripheral;
    std::vector<pathalg::SmallPath> row_paths;
    IntMatrix edge_cusp_ends;  // E x n_c: ends of edge j at cusp c
    // Edge rows (indices into the edge block) left out of the square system.
    std::vector<int> dropped_edges;

    // Images of K~ and G~ in H~1^-(Sigma), as column bases of the row span.
    IntMatrix K, G;
    // Coordinates of q~ of each row in the basis l^-(alpha_c), l^-(beta_c)
    // of H~1^-(Sigma'), computed on cells (2 n_c x rows).
    IntMatrix q_matrix;
    // Cellular forms: odd lifts of the row paths on Sigma0, and the basis of
    // H1^-(Sigma').
    IntMatrix sigma0_form, sigma_prime_form;
    bool q_surjective = false;
    // Invariant factors of ker<G~, .> / K~ inside H~1^-(Sigma).
    std::vector<Int> torsion;

    std::size_t num_rows() const { return nz.rows(); }
    IntMatrix A() const;
    IntMatrix Aprime() const;
    IntMatrix B() const;
    IntMatrix Bprime() const;
    IntMatrix C() const;
    IntMatrix Cprime() const;
    IntMatrix edge_block() const;  // E x 2N
    IntMatrix cusp_block() const;  // 2 n_c x 2N
};

// cellular = false skips the cover computations (q_matrix and the forms).
GluingSystem build_gluing_system(const tri::Triangulation& t, bool cellular = true);

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};
struct NZReport {
    std::vector<Check> checks;
    IntMatrix gram;          // nz J nz^T
    IntMatrix reduced_form;  // form on K~/G~ in the alpha, beta coordinates
    std::size_t rank_nz = 0, rank_G = 0;
    std::vector<Int> reduction_torsion;  // torsion of K~/G~
    bool ok() const;
};

// All checks, without throwing.
NZReport check_nz(const GluingSystem& s);
// Same, but throws VerificationFailure naming the first violated identity.
NZReport verify_nz(const GluingSystem& s);

struct SpotHomology {
    std::size_t rank = 0;
    std::vector<Int> torsion;
};
struct NeumannComplex {
    // Z^{n_c} -> Z^E -> Z^{2N} -> Z^E -> Z^{n_c}
    std::vector<IntMatrix> maps;  // four differentials, target x source
    std::vector<SpotHomology> spots;  // five
};
NeumannComplex neumann_complex(const GluingSystem& s);
NeumannComplex neumann_complex(const tri::Triangulation& t);

// {"A", "Aprime", "B", "Bprime", "C", "Cprime", "signs", "torsion"}
std::string nz_to_json(const GluingSystem& s);

}  // namespace gluesym::gluesys
