#pragma once

// Exact integer lattice algebra on arbitrary-precision integers.

#include <gmpxx.h>

#include <cstddef>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gluesym::zlat {

using Int = mpz_class;
using Vec = std::vector<Int>;

class IntMatrix {
public:
    IntMatrix() = default;
    IntMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
    IntMatrix(std::initializer_list<std::initializer_list<long>> rows);

    static IntMatrix identity(std::size_t n);
    static IntMatrix from_rows(const std::vector<std::vector<long>>& rows, std::size_t cols = 0);
    static IntMatrix from_columns(const std::vector<Vec>& cols, std::size_t rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    Int& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Int& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Vec column(std::size_t j) const;
    Vec row(std::size_t i) const;
    void set_column(std::size_t j, const Vec& v);
    IntMatrix columns(std::size_t first, std::size_t last) const;  // [first, last)
    IntMatrix rows_range(std::size_t first, std::size_t last) const;

    IntMatrix transpose() const;
    bool is_zero() const;
    bool operator==(const IntMatrix& o) const;
    bool operator!=(const IntMatrix& o) const { return !(*this == o); }

    std::vector<std::vector<long>> to_long() const;
    std::string str() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Int> data_;
};

IntMatrix operator*(const IntMatrix& a, const IntMatrix& b);
IntMatrix operator+(const IntMatrix& a, const IntMatrix& b);
IntMatrix operator-(const IntMatrix& a, const IntMatrix& b);
IntMatrix operator*(const Int& s, const IntMatrix& a);
Vec operator*(const IntMatrix& a, const Vec& v);
IntMatrix hstack(const IntMatrix& a, const IntMatrix& b);
IntMatrix vstack(const IntMatrix& a, const IntMatrix& b);
IntMatrix block_diag(const IntMatrix& a, const IntMatrix& b);
// Standard symplectic matrix [[0, I], [-I, 0]] of size 2n.
IntMatrix standard_J(std::size_t n);

struct SNF {
    IntMatrix U, D, V;        // U * A * V = D
    IntMatrix Uinv, Vinv;     // inverses of U and V
    std::size_t rank = 0;
    std::vector<Int> diagonal() const;  // first `rank` invariant factors
};

SNF smith_normal_form(const IntMatrix& A);

std::size_t rank(const IntMatrix& A);

// Sparse rows: column -> nonzero entry.  Rank by integer elimination with
// small pivots first; falls back to exact dense rank on overflow.
using SparseRows = std::vector<std::map<int, long>>;
std::size_t rank_sparse(const SparseRows& rows);
Int determinant(const IntMatrix& A);

// Saturated basis of the integer kernel of A, as columns.
IntMatrix kernel(const IntMatrix& A);
// Basis of the column span of A, as columns.
IntMatrix image(const IntMatrix& A);
// Exact solution c of L c = v when L has independent columns and v lies in
// their span; nullopt otherwise.
std::optional<Vec> solve_in_basis(const IntMatrix& L, const Vec& v);

class LatticeQuotient {
public:
    std::size_t free_rank = 0;
    std::vector<Int> torsion;  // invariant factors > 1, in divisibility order
    IntMatrix lift_basis;      // ambient coordinates, one column per free generator

    // Free coordinates of the class of v (v must lie in L).
    Vec coords(const Vec& v) const;
    // Torsion coordinates, reduced modulo the matching invariant factors.
    Vec torsion_coords(const Vec& v) const;
    bool contains(const Vec& v) const;  // v in L

private:
    friend LatticeQuotient quotient(const IntMatrix&, const IntMatrix&);
    friend LatticeQuotient quotient(const IntMatrix&);
    Vec to_L(const Vec& v) const;
    bool identity_L_ = true;
    IntMatrix L_;
    SNF L_snf_;
    IntMatrix free_map_;     // free_rank x dim L
    IntMatrix torsion_map_;  // torsion.size() x dim L
};

// Z^n / span(S) where S has n rows.
LatticeQuotient quotient(const IntMatrix& S);
// L / S where L (independent columns) and S are given in ambient coordinates
// and span(S) is contained in span(L).
LatticeQuotient quotient(const IntMatrix& L, const IntMatrix& S);

struct SymplecticReduction {
    IntMatrix K;        // basis of ker <G, .>, columns
    LatticeQuotient quotient;  // K / G
    IntMatrix form;     // induced form on the quotient lift basis
};

// eps: skew form on Z^n; G: generators (columns) of an isotropic sublattice.
SymplecticReduction symplectic_reduce(const IntMatrix& eps, const IntMatrix& G);

}  // namespace gluesym::zlat
