#pragma once

// Hyperbolic shapes from the gluing system, volumes and the volume
// variation formula.
//
// A row (a, a') of the NZ matrix with fibre bit b reads
//   (-1)^(b + sum a + sum a') * prod z_i^a_i z'_i^a'_i = target,
// with z' = 1/(1 - z).  Edge rows have target 1; per cusp one of the two
// cusp rows is imposed with its target, the other is reported.

#include "gluesym/gluesys.hpp"

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

namespace gluesym::hypgeo {

using cd = std::complex<double>;

cd dilog(cd z);
// Bloch-Wigner function; throws DomainError at 0 and 1.
double bloch_wigner(cd z);

cd shape_prime(cd z);         // 1 / (1 - z)
cd shape_double_prime(cd z);  // 1 - 1 / z

struct CuspTargets {
    cd alpha{1.0, 0.0}, beta{1.0, 0.0};
};

struct SolveOptions {
    double tol = 1e-12;
    int max_iter = 100;
    int retries = 30;
    std::uint64_t seed = 0x5eed;
    // Start here first; on success no random starts are made.
    std::optional<std::vector<cd>> initial;
    // Edge rows left out; defaults to the system's dropped_edges.
    std::optional<std::vector<int>> dropped;
    // Per cusp: 0 imposes the alpha row, 1 the beta row.  Default alpha.
    std::vector<int> impose;
    // Keep trying all random starts and collect every solution.
    bool collect_all = false;
};

struct ShapeSolution {
    std::vector<cd> shapes;
    double residual_norm = 0;
    std::vector<CuspTargets> completeness_targets;  // values reached by the cusp rows
    bool converged = false;
    bool geometric = false;  // all Im z > 1e-9 max(1, |z|)
    int iterations = 0;
    int starts = 0;
    std::vector<std::vector<cd>> all_solutions;
};

// Signed product of one NZ row.
cd row_value(const gluesys::GluingSystem& s, std::size_t row, const std::vector<cd>& z);
// Largest residual over all edge rows (target 1).
double edge_residual(const gluesys::GluingSystem& s, const std::vector<cd>& z);

// One damped Newton run from z0.  Throws DegenerateShape when an iterate
// reaches {0, 1, infinity}.
ShapeSolution newton(const gluesys::GluingSystem& s, const std::vector<CuspTargets>& targets,
                     const std::vector<cd>& z0, const SolveOptions& opts = {});
// Multi-start solve; throws NumericFailure when no start converges.
ShapeSolution solve_shapes(const gluesys::GluingSystem& s, const std::vector<CuspTargets>& targets,
                           const SolveOptions& opts = {});

double volume(const std::vector<cd>& shapes);
double volume(const ShapeSolution& sol);

// Family of targets: imposed row target of cusp c is base_c * exp(t dir_c).
// With Vol = sum D(z_i) and z' = 1/(1 - z), dD(z) = eta(z ^ (1 - z)) =
// -eta(z ^ z'), so the volume satisfies dVol = -eta(1/2 x_alpha ^ x_beta);
// the discrepancy is measured against -eta.
struct DVolResult {
    double finite_difference = 0;  // (Vol(t0 + h) - Vol(t0 - h)) / 2h
    double eta = 0;                // eta(1/2 x_alpha ^ x_beta)(d/dt) at t0
    double discrepancy = 0;        // |fd + eta| / max(|fd|, |eta|)
    double volume = 0;
};
DVolResult dvol_check(const gluesys::GluingSystem& s, const ShapeSolution& base, const std::vector<cd>& direction,
                      double h, const SolveOptions& opts = {});

}  // namespace gluesym::hypgeo
