#include "gluesym/hypgeo.hpp"

#include "gluesym/errors.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>
#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace gluesym::hypgeo {

namespace {

constexpr double kPi = std::numbers::pi;

// B_n / (n + 1)! for the series Li2(z) = sum_n B_n u^(n+1) / (n+1)!, with
// u = -log(1 - z).  Bernoulli numbers from the exact recurrence.
const std::vector<double>& dilog_coefficients() {
    static const std::vector<double> c = [] {
        const int n_max = 44;
        std::vector<mpq_class> B(n_max + 1);
        B[0] = 1;
        for (int m = 1; m <= n_max; ++m) {
            mpq_class s = 0;
            mpz_class binom = 1;  // C(m + 1, k)
            for (int k = 0; k < m; ++k) {
                s += binom * B[k];
                binom = binom * (m + 1 - k) / (k + 1);
            }
            B[m] = -s / (m + 1);
        }
        std::vector<double> out(n_max + 1);
        mpz_class fact = 1;
        for (int n = 0; n <= n_max; ++n) {
            fact *= n + 1;
            mpq_class q = B[n] / fact;
            out[n] = q.get_d();
        }
        return out;
    }();
    return c;
}

cd dilog_series(cd z) {
    const cd u = -std::log(1.0 - z);
    const auto& c = dilog_coefficients();
    cd sum = 0, p = u;
    for (std::size_t n = 0; n < c.size(); ++n) {
        if (c[n] != 0) sum += c[n] * p;
        p *= u;
        if (std::abs(p) < 1e-300) break;
    }
    return sum;
}

struct Equations {
    std::vector<std::size_t> rows;
    std::vector<cd> targets;
};

Equations equations(const gluesys::GluingSystem& s, const std::vector<CuspTargets>& targets, const SolveOptions& o) {
    const int nc = s.num_cusps;
    if (static_cast<int>(targets.size()) != nc)
        throw SchemaError(fmt::format("expected targets for {} cusps, got {}", nc, targets.size()));
    std::vector<int> dropped = o.dropped ? *o.dropped : s.dropped_edges;
    Equations e;
    for (int j = 0; j < s.num_edges; ++j) {
        if (std::find(dropped.begin(), dropped.end(), j) != dropped.end()) continue;
        e.rows.push_back(2 * nc + j);
        e.targets.push_back(1.0);
    }
    for (int c = 0; c < nc; ++c) {
        int which = c < static_cast<int>(o.impose.size()) ? o.impose[c] : 0;
        const cd t = which == 0 ? targets[c].alpha : targets[c].beta;
        if (t == 0.0) throw DomainError("cusp targets must be nonzero");
        e.rows.push_back(which == 0 ? c : nc + c);
        e.targets.push_back(t);
    }
    if (static_cast<int>(e.rows.size()) != s.num_tetrahedra)
        throw SchemaError(fmt::format("shape system has {} equations for {} shapes", e.rows.size(), s.num_tetrahedra));
    return e;
}

double residual(const gluesys::GluingSystem& s, const Equations& e, const std::vector<cd>& z) {
    double r = 0;
    for (std::size_t k = 0; k < e.rows.size(); ++k)
        r = std::max(r, std::abs(row_value(s, e.rows[k], z) - e.targets[k]) / std::max(1.0, std::abs(e.targets[k])));
    return r;
}

Eigen::MatrixXcd jacobian(const gluesys::GluingSystem& s, const Equations& e, const std::vector<cd>& z) {
    const int n = s.num_tetrahedra;
    Eigen::MatrixXcd J(e.rows.size(), n);
    for (std::size_t k = 0; k < e.rows.size(); ++k) {
        const cd p = row_value(s, e.rows[k], z);
        for (int i = 0; i < n; ++i) {
            double a = s.nz(e.rows[k], i).get_d(), ap = s.nz(e.rows[k], n + i).get_d();
            J(k, i) = p * (a / z[i] + ap / (1.0 - z[i]));
        }
    }
    return J;
}

// d log x_row / dz_i
std::vector<cd> log_gradient(const gluesys::GluingSystem& s, std::size_t row, const std::vector<cd>& z) {
    const int n = s.num_tetrahedra;
    std::vector<cd> g(n);
    for (int i = 0; i < n; ++i) g[i] = s.nz(row, i).get_d() / z[i] + s.nz(row, n + i).get_d() / (1.0 - z[i]);
    return g;
}

void check_shape(cd z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || std::abs(z) < 1e-10 || std::abs(1.0 - z) < 1e-10 ||
        std::abs(z) > 1e10)
        throw DegenerateShape(fmt::format("shape {}{:+}i is degenerate", z.real(), z.imag()));
}

void fill(const gluesys::GluingSystem& s, ShapeSolution& sol) {
    sol.completeness_targets.clear();
    for (int c = 0; c < s.num_cusps; ++c)
        sol.completeness_targets.push_back({row_value(s, c, sol.shapes), row_value(s, s.num_cusps + c, sol.shapes)});
    // Flat solutions come out with Im z of the order of rounding, either sign.
    sol.geometric = std::all_of(sol.shapes.begin(), sol.shapes.end(),
                                [](cd z) { return z.imag() > 1e-9 * std::max(1.0, std::abs(z)); });
}

}  // namespace

cd dilog(cd z) {
    if (z == 0.0) return 0;
    if (z == 1.0) return kPi * kPi / 6;
    if (std::abs(z) > 1) {
        cd l = std::log(-z);
        return -dilog(1.0 / z) - kPi * kPi / 6 - 0.5 * l * l;
    }
    if (z.real() > 0.5) return -dilog_series(1.0 - z) + kPi * kPi / 6 - std::log(z) * std::log(1.0 - z);
    return dilog_series(z);
}

double bloch_wigner(cd z) {
    if (std::abs(z) == 0 || z == 1.0) throw DomainError("Bloch-Wigner function is undefined at 0 and 1");
    if (z.imag() == 0) return 0;
    return dilog(z).imag() + std::arg(1.0 - z) * std::log(std::abs(z));
}

cd shape_prime(cd z) { return 1.0 / (1.0 - z); }
cd shape_double_prime(cd z) { return 1.0 - 1.0 / z; }

cd row_value(const gluesys::GluingSystem& s, std::size_t row, const std::vector<cd>& z) {
    const int n = s.num_tetrahedra;
    long parity = s.sign_bits.at(row);
    cd p = 1;
    for (int i = 0; i < n; ++i) {
        long a = s.nz(row, i).get_si(), ap = s.nz(row, n + i).get_si();
        parity += a + ap;
        if (a) p *= std::pow(z[i], static_cast<int>(a));
        if (ap) p *= std::pow(shape_prime(z[i]), static_cast<int>(ap));
    }
    return (parity % 2 == 0) ? p : -p;
}

double edge_residual(const gluesys::GluingSystem& s, const std::vector<cd>& z) {
    double r = 0;
    for (int j = 0; j < s.num_edges; ++j) r = std::max(r, std::abs(row_value(s, 2 * s.num_cusps + j, z) - 1.0));
    return r;
}

ShapeSolution newton(const gluesys::GluingSystem& s, const std::vector<CuspTargets>& targets, const std::vector<cd>& z0,
                     const SolveOptions& o) {
    const int n = s.num_tetrahedra;
    if (static_cast<int>(z0.size()) != n) throw SchemaError("initial guess has the wrong number of shapes");
    auto eq = equations(s, targets, o);
    ShapeSolution sol;
    sol.shapes = z0;
    sol.starts = 1;
    for (cd z : sol.shapes) check_shape(z);
    double r = residual(s, eq, sol.shapes);
    for (int it = 0; it < o.max_iter && r >= o.tol; ++it) {
        sol.iterations = it + 1;
        auto J = jacobian(s, eq, sol.shapes);
        Eigen::VectorXcd R(n);
        for (int k = 0; k < n; ++k) R(k) = row_value(s, eq.rows[k], sol.shapes) - eq.targets[k];
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(J);
        Eigen::VectorXcd d = lu.solve(-R);
        if (!d.allFinite()) break;
        // Backtracking on the residual.
        double lambda = 1;
        bool moved = false;
        while (lambda > 1e-6) {
            std::vector<cd> z = sol.shapes;
            for (int i = 0; i < n; ++i) z[i] += lambda * d(i);
            for (cd x : z) check_shape(x);
            double rn = residual(s, eq, z);
            if (rn < r || rn < o.tol) {
                sol.shapes = std::move(z);
                r = rn;
                moved = true;
                break;
            }
            lambda /= 2;
        }
        if (!moved) break;
    }
    sol.residual_norm = r;
    sol.converged = r < o.tol;
    fill(s, sol);
    return sol;
}

ShapeSolution solve_shapes(const gluesys::GluingSystem& s, const std::vector<CuspTargets>& targets, const SolveOptions& o) {
    const int n = s.num_tetrahedra;
    equations(s, targets, o);
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::optional<ShapeSolution> best;
    std::vector<std::vector<cd>> found;
    int starts = 0;
    auto record = [&](ShapeSolution sol) {
        bool seen = std::any_of(found.begin(), found.end(), [&](const auto& f) {
            for (int i = 0; i < n; ++i)
                if (std::abs(f[i] - sol.shapes[i]) > 1e-8) return false;
            return true;
        });
        if (!seen) found.push_back(sol.shapes);
        if (!best || (sol.geometric && !best->geometric)) best = std::move(sol);
    };
    auto attempt = [&](const std::vector<cd>& z0) {
        ++starts;
        try {
            auto sol = newton(s, targets, z0, o);
            if (sol.converged) record(std::move(sol));
        } catch (const DegenerateShape&) {
        }
    };
    if (o.initial) attempt(*o.initial);
    for (int k = 0; k < o.retries; ++k) {
        if (best && best->geometric && !o.collect_all) break;
        std::vector<cd> z0(n);
        for (auto& z : z0) {
            double r = 0.5 * std::sqrt(u(rng)), th = 2 * kPi * u(rng);
            z = cd(0.5, 0.5) + std::polar(r, th);
        }
        attempt(z0);
    }
    if (!best) throw NumericFailure(fmt::format("no Newton start converged after {} attempts", starts));
    best->starts = starts;
    best->all_solutions = std::move(found);
    return *best;
}

double volume(const std::vector<cd>& shapes) {
    double v = 0;
    for (cd z : shapes) v += bloch_wigner(z);
    return v;
}

double volume(const ShapeSolution& sol) { return volume(sol.shapes); }

DVolResult dvol_check(const gluesys::GluingSystem& s, const ShapeSolution& base, const std::vector<cd>& direction,
                      double h, const SolveOptions& opts) {
    const int n = s.num_tetrahedra, nc = s.num_cusps;
    if (static_cast<int>(direction.size()) != nc) throw SchemaError("need one deformation direction per cusp");
    auto imposed = [&](int c) { return c < static_cast<int>(opts.impose.size()) ? opts.impose[c] : 0; };
    auto family = [&](double t) {
        auto tg = base.completeness_targets;
        for (int c = 0; c < nc; ++c) {
            cd f = std::exp(t * direction[c]);
            (imposed(c) == 0 ? tg[c].alpha : tg[c].beta) *= f;
        }
        return tg;
    };
    auto solve_at = [&](double t) {
        SolveOptions o = opts;
        auto sol = newton(s, family(t), base.shapes, o);
        if (!sol.converged) {
            auto mid = newton(s, family(t / 2), base.shapes, o);
            if (mid.converged) sol = newton(s, family(t), mid.shapes, o);
        }
        if (!sol.converged) throw NumericFailure(fmt::format("continuation to t = {} failed", t));
        return sol;
    };
    DVolResult out;
    out.volume = volume(base);
    out.finite_difference = (volume(solve_at(h)) - volume(solve_at(-h))) / (2 * h);

    // dz/dt from the implicit function theorem on the imposed system.
    auto eq = equations(s, family(0), opts);
    auto J = jacobian(s, eq, base.shapes);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    for (int c = 0; c < nc; ++c) rhs(n - nc + c) = eq.targets[n - nc + c] * direction[c];
    Eigen::VectorXcd dz = Eigen::PartialPivLU<Eigen::MatrixXcd>(J).solve(rhs);
    auto dlog = [&](std::size_t row) {
        auto g = log_gradient(s, row, base.shapes);
        cd d = 0;
        for (int i = 0; i < n; ++i) d += g[i] * dz(i);
        return d;
    };
    double eta = 0;
    for (int c = 0; c < nc; ++c) {
        cd xa = row_value(s, c, base.shapes), xb = row_value(s, nc + c, base.shapes);
        cd da = dlog(c), db = dlog(nc + c);
        eta += 0.5 * (std::log(std::abs(xa)) * db.imag() - std::log(std::abs(xb)) * da.imag());
    }
    out.eta = eta;
    double scale = std::max({std::abs(out.finite_difference), std::abs(out.eta), 1e-300});
    out.discrepancy = (out.finite_difference == 0 && out.eta == 0) ? 0 : std::abs(out.finite_difference + out.eta) / scale;
    return out;
}

}  // namespace gluesym::hypgeo
