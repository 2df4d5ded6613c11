#include "gluesym/zlat.hpp"

#include "gluesym/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

namespace gluesym::zlat {

IntMatrix::IntMatrix(std::initializer_list<std::initializer_list<long>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw std::invalid_argument("ragged matrix literal");
        for (long x : r) data_.emplace_back(x);
    }
}

IntMatrix IntMatrix::identity(std::size_t n) {
    IntMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
}

IntMatrix IntMatrix::from_rows(const std::vector<std::vector<long>>& rows, std::size_t cols) {
    if (!rows.empty()) cols = rows.front().size();
    IntMatrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw std::invalid_argument("ragged matrix rows");
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

IntMatrix IntMatrix::from_columns(const std::vector<Vec>& cols, std::size_t rows) {
    IntMatrix m(rows, cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) m.set_column(j, cols[j]);
    return m;
}

Vec IntMatrix::column(std::size_t j) const {
    Vec v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
}

Vec IntMatrix::row(std::size_t i) const {
    return Vec(data_.begin() + static_cast<long>(i * cols_),
               data_.begin() + static_cast<long>((i + 1) * cols_));
}

void IntMatrix::set_column(std::size_t j, const Vec& v) {
    if (v.size() != rows_) throw std::invalid_argument("column length mismatch");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

IntMatrix IntMatrix::columns(std::size_t first, std::size_t last) const {
    IntMatrix m(rows_, last - first);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = first; j < last; ++j) m(i, j - first) = (*this)(i, j);
    return m;
}

IntMatrix IntMatrix::rows_range(std::size_t first, std::size_t last) const {
    IntMatrix m(last - first, cols_);
    for (std::size_t i = first; i < last; ++i)
        for (std::size_t j = 0; j < cols_; ++j) m(i - first, j) = (*this)(i, j);
    return m;
}

IntMatrix IntMatrix::transpose() const {
    IntMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

bool IntMatrix::is_zero() const {
    return std::all_of(data_.begin(), data_.end(), [](const Int& x) { return sgn(x) == 0; });
}

bool IntMatrix::operator==(const IntMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
}

std::vector<std::vector<long>> IntMatrix::to_long() const {
    std::vector<std::vector<long>> out(rows_, std::vector<long>(cols_));
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) {
            const Int& x = (*this)(i, j);
            if (!x.fits_slong_p()) throw std::overflow_error("matrix entry exceeds long");
            out[i][j] = x.get_si();
        }
    return out;
}

std::string IntMatrix::str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < rows_; ++i) {
        os << (i ? ", [" : "[");
        for (std::size_t j = 0; j < cols_; ++j) os << (j ? ", " : "") << (*this)(i, j).get_str();
        os << "]";
    }
    os << "]";
    return os.str();
}

IntMatrix operator*(const IntMatrix& a, const IntMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matrix product shape mismatch");
    IntMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const Int& x = a(i, k);
            if (sgn(x) == 0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j)
                if (sgn(b(k, j)) != 0) c(i, j) += x * b(k, j);
        }
    return c;
}

IntMatrix operator+(const IntMatrix& a, const IntMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("sum shape mismatch");
    IntMatrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) + b(i, j);
    return c;
}

IntMatrix operator-(const IntMatrix& a, const IntMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("difference shape mismatch");
    IntMatrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
    return c;
}

IntMatrix operator*(const Int& s, const IntMatrix& a) {
    IntMatrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = s * a(i, j);
    return c;
}

Vec operator*(const IntMatrix& a, const Vec& v) {
    if (a.cols() != v.size()) throw std::invalid_argument("matrix-vector shape mismatch");
    Vec out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (sgn(v[j]) != 0 && sgn(a(i, j)) != 0) out[i] += a(i, j) * v[j];
    return out;
}

IntMatrix hstack(const IntMatrix& a, const IntMatrix& b) {
    if (a.cols() == 0) return b;
    if (b.cols() == 0) return a;
    if (a.rows() != b.rows()) throw std::invalid_argument("hstack row mismatch");
    IntMatrix c(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
        for (std::size_t j = 0; j < b.cols(); ++j) c(i, a.cols() + j) = b(i, j);
    }
    return c;
}

IntMatrix vstack(const IntMatrix& a, const IntMatrix& b) {
    if (a.rows() == 0) return b;
    if (b.rows() == 0) return a;
    return hstack(a.transpose(), b.transpose()).transpose();
}

IntMatrix block_diag(const IntMatrix& a, const IntMatrix& b) {
    IntMatrix c(a.rows() + b.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) c(a.rows() + i, a.cols() + j) = b(i, j);
    return c;
}

IntMatrix standard_J(std::size_t n) {
    IntMatrix J(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        J(i, n + i) = 1;
        J(n + i, i) = -1;
    }
    return J;
}

std::vector<Int> SNF::diagonal() const {
    std::vector<Int> d;
    for (std::size_t i = 0; i < rank; ++i) d.push_back(D(i, i));
    return d;
}

namespace {

// Elimination state for the Smith normal form. Every elementary operation on
// M is mirrored on U, V and their inverses so that U * A * V = M throughout.
struct SnfState {
    IntMatrix M, U, Ui, V, Vi;
    std::size_t m, n;

    explicit SnfState(const IntMatrix& A)
        : M(A), U(IntMatrix::identity(A.rows())), Ui(IntMatrix::identity(A.rows())),
          V(IntMatrix::identity(A.cols())), Vi(IntMatrix::identity(A.cols())), m(A.rows()), n(A.cols()) {}

    // row_i += q * row_j
    void row_add(std::size_t i, std::size_t j, const Int& q) {
        if (sgn(q) == 0) return;
        for (std::size_t c = 0; c < n; ++c)
            if (sgn(M(j, c)) != 0) M(i, c) += q * M(j, c);
        for (std::size_t c = 0; c < m; ++c)
            if (sgn(U(j, c)) != 0) U(i, c) += q * U(j, c);
        for (std::size_t r = 0; r < m; ++r)
            if (sgn(Ui(r, i)) != 0) Ui(r, j) -= q * Ui(r, i);
    }
    void row_swap(std::size_t i, std::size_t j) {
        if (i == j) return;
        for (std::size_t c = 0; c < n; ++c) std::swap(M(i, c), M(j, c));
        for (std::size_t c = 0; c < m; ++c) std::swap(U(i, c), U(j, c));
        for (std::size_t r = 0; r < m; ++r) std::swap(Ui(r, i), Ui(r, j));
    }
    void row_negate(std::size_t i) {
        for (std::size_t c = 0; c < n; ++c) M(i, c) = -M(i, c);
        for (std::size_t c = 0; c < m; ++c) U(i, c) = -U(i, c);
        for (std::size_t r = 0; r < m; ++r) Ui(r, i) = -Ui(r, i);
    }
    // col_i += q * col_j
    void col_add(std::size_t i, std::size_t j, const Int& q) {
        if (sgn(q) == 0) return;
        for (std::size_t r = 0; r < m; ++r)
            if (sgn(M(r, j)) != 0) M(r, i) += q * M(r, j);
        for (std::size_t r = 0; r < n; ++r)
            if (sgn(V(r, j)) != 0) V(r, i) += q * V(r, j);
        for (std::size_t c = 0; c < n; ++c)
            if (sgn(Vi(i, c)) != 0) Vi(j, c) -= q * Vi(i, c);
    }
    void col_swap(std::size_t i, std::size_t j) {
        if (i == j) return;
        for (std::size_t r = 0; r < m; ++r) std::swap(M(r, i), M(r, j));
        for (std::size_t r = 0; r < n; ++r) std::swap(V(r, i), V(r, j));
        for (std::size_t c = 0; c < n; ++c) std::swap(Vi(i, c), Vi(j, c));
    }

    // Pivot choice: smallest absolute value, ties broken by the Markowitz
    // count so that sparse unit pivots are consumed first with little fill.
    bool choose_pivot(std::size_t t, std::size_t& pi, std::size_t& pj) {
        std::vector<std::size_t> rc(m, 0), cc(n, 0);
        bool any = false;
        for (std::size_t i = t; i < m; ++i)
            for (std::size_t j = t; j < n; ++j)
                if (sgn(M(i, j)) != 0) {
                    ++rc[i];
                    ++cc[j];
                    any = true;
                }
        if (!any) return false;
        Int best_abs;
        std::size_t best_cost = std::numeric_limits<std::size_t>::max();
        bool have = false;
        for (std::size_t i = t; i < m; ++i) {
            if (rc[i] == 0) continue;
            for (std::size_t j = t; j < n; ++j) {
                if (sgn(M(i, j)) == 0) continue;
                Int a = abs(M(i, j));
                std::size_t cost = (rc[i] - 1) * (cc[j] - 1);
                if (!have || a < best_abs || (a == best_abs && cost < best_cost)) {
                    best_abs = a;
                    best_cost = cost;
                    pi = i;
                    pj = j;
                    have = true;
                }
            }
        }
        return true;
    }

    // Quotient rounded to nearest, so remainders stay at most half the pivot.
    static Int near_quot(const Int& a, const Int& b) {
        Int q, r;
        mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
        Int r2 = 2 * abs(r);
        if (r2 > abs(b)) q += 1;
        return q;
    }

    void run() {
        std::size_t t = 0;
        const std::size_t lim = std::min(m, n);
        while (t < lim) {
            std::size_t pi = 0, pj = 0;
            if (!choose_pivot(t, pi, pj)) break;
            for (;;) {
                row_swap(t, pi);
                col_swap(t, pj);
                bool dirty = false;
                for (std::size_t i = t + 1; i < m; ++i) {
                    if (sgn(M(i, t)) == 0) continue;
                    row_add(i, t, -near_quot(M(i, t), M(t, t)));
                    if (sgn(M(i, t)) != 0) dirty = true;
                }
                for (std::size_t j = t + 1; j < n; ++j) {
                    if (sgn(M(t, j)) == 0) continue;
                    col_add(j, t, -near_quot(M(t, j), M(t, t)));
                    if (sgn(M(t, j)) != 0) dirty = true;
                }
                if (!dirty) {
                    // Divisibility: every remaining entry must be a multiple of the pivot.
                    bool fixed = false;
                    for (std::size_t i = t + 1; i < m && !fixed; ++i)
                        for (std::size_t j = t + 1; j < n; ++j)
                            if (sgn(M(i, j)) != 0 && !mpz_divisible_p(M(i, j).get_mpz_t(), M(t, t).get_mpz_t())) {
                                row_add(t, i, 1);
                                fixed = true;
                                break;
                            }
                    if (!fixed) break;
                }
                // Some remainder in row or column t is now smaller than the pivot.
                std::size_t bi = t, bj = t;
                auto consider = [&](std::size_t i, std::size_t j) {
                    if (sgn(M(i, j)) != 0 && abs(M(i, j)) < abs(M(bi, bj))) {
                        bi = i;
                        bj = j;
                    }
                };
                for (std::size_t i = t + 1; i < m; ++i) consider(i, t);
                for (std::size_t j = t + 1; j < n; ++j) consider(t, j);
                pi = bi;
                pj = bj;
            }
            if (sgn(M(t, t)) < 0) row_negate(t);
            ++t;
        }
    }
};

}  // namespace

SNF smith_normal_form(const IntMatrix& A) {
    SnfState s(A);
    s.run();
    SNF out;
    out.rank = 0;
    for (std::size_t i = 0; i < std::min(s.m, s.n); ++i)
        if (sgn(s.M(i, i)) != 0) ++out.rank;
    out.U = std::move(s.U);
    out.Uinv = std::move(s.Ui);
    out.V = std::move(s.V);
    out.Vinv = std::move(s.Vi);
    out.D = std::move(s.M);
    return out;
}

std::size_t rank(const IntMatrix& A) {
    // Fraction-free Gaussian elimination.
    IntMatrix M = A;
    std::size_t r = 0;
    for (std::size_t c = 0; c < M.cols() && r < M.rows(); ++c) {
        std::size_t p = r;
        while (p < M.rows() && sgn(M(p, c)) == 0) ++p;
        if (p == M.rows()) continue;
        for (std::size_t j = 0; j < M.cols(); ++j) std::swap(M(r, j), M(p, j));
        for (std::size_t i = r + 1; i < M.rows(); ++i) {
            if (sgn(M(i, c)) == 0) continue;
            Int a = M(r, c), b = M(i, c);
            for (std::size_t j = c; j < M.cols(); ++j) M(i, j) = a * M(i, j) - b * M(r, j);
            Int g = 0;
            for (std::size_t j = c; j < M.cols(); ++j) g = gcd(g, M(i, j));
            if (g > 1)
                for (std::size_t j = c; j < M.cols(); ++j) M(i, j) /= g;
        }
        ++r;
    }
    return r;
}

Int determinant(const IntMatrix& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("determinant of non-square matrix");
    const std::size_t n = A.rows();
    if (n == 0) return 1;
    // Bareiss algorithm.
    IntMatrix M = A;
    Int sign = 1, prev = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (sgn(M(k, k)) == 0) {
            std::size_t p = k + 1;
            while (p < n && sgn(M(p, k)) == 0) ++p;
            if (p == n) return 0;
            for (std::size_t j = 0; j < n; ++j) std::swap(M(k, j), M(p, j));
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = k + 1; j < n; ++j) {
                Int v = M(i, j) * M(k, k) - M(i, k) * M(k, j);
                mpz_divexact(v.get_mpz_t(), v.get_mpz_t(), prev.get_mpz_t());
                M(i, j) = v;
            }
        prev = M(k, k);
    }
    return sign * M(n - 1, n - 1);
}

IntMatrix kernel(const IntMatrix& A) {
    SNF s = smith_normal_form(A);
    return s.V.columns(s.rank, A.cols());
}

IntMatrix image(const IntMatrix& A) {
    SNF s = smith_normal_form(A);
    IntMatrix B(A.rows(), s.rank);
    for (std::size_t j = 0; j < s.rank; ++j)
        for (std::size_t i = 0; i < A.rows(); ++i) B(i, j) = s.Uinv(i, j) * s.D(j, j);
    return B;
}

namespace {

std::optional<Vec> solve_with(const SNF& s, std::size_t ncols, const Vec& v) {
    Vec y = s.U * v;
    Vec w(ncols);
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (i < s.rank) {
            if (!mpz_divisible_p(y[i].get_mpz_t(), s.D(i, i).get_mpz_t())) return std::nullopt;
            w[i] = y[i] / s.D(i, i);
        } else if (sgn(y[i]) != 0) {
            return std::nullopt;
        }
    }
    return s.V * w;
}

}  // namespace

std::optional<Vec> solve_in_basis(const IntMatrix& L, const Vec& v) {
    SNF s = smith_normal_form(L);
    if (s.rank != L.cols()) throw std::invalid_argument("solve_in_basis: dependent columns");
    return solve_with(s, L.cols(), v);
}

Vec LatticeQuotient::to_L(const Vec& v) const {
    if (identity_L_) return v;
    auto c = solve_with(L_snf_, L_.cols(), v);
    if (!c) throw std::invalid_argument("vector is not in the ambient lattice of the quotient");
    return *c;
}

bool LatticeQuotient::contains(const Vec& v) const {
    if (identity_L_) return true;
    return solve_with(L_snf_, L_.cols(), v).has_value();
}

Vec LatticeQuotient::coords(const Vec& v) const { return free_map_ * to_L(v); }

Vec LatticeQuotient::torsion_coords(const Vec& v) const {
    Vec t = torsion_map_ * to_L(v);
    for (std::size_t i = 0; i < t.size(); ++i) {
        Int r;
        mpz_fdiv_r(r.get_mpz_t(), t[i].get_mpz_t(), torsion[i].get_mpz_t());
        t[i] = r;
    }
    return t;
}

LatticeQuotient quotient(const IntMatrix& S) {
    const std::size_t n = S.rows();
    LatticeQuotient q;
    SNF s = smith_normal_form(S.cols() ? S : IntMatrix(n, 0));
    if (S.cols() == 0) {
        s.U = s.Uinv = IntMatrix::identity(n);
        s.rank = 0;
    }
    std::vector<std::size_t> tors_rows;
    for (std::size_t i = 0; i < s.rank; ++i)
        if (s.D(i, i) > 1) {
            q.torsion.push_back(s.D(i, i));
            tors_rows.push_back(i);
        }
    q.free_rank = n - s.rank;
    q.lift_basis = s.Uinv.columns(s.rank, n);
    q.free_map_ = s.U.rows_range(s.rank, n);
    q.torsion_map_ = IntMatrix(tors_rows.size(), n);
    for (std::size_t k = 0; k < tors_rows.size(); ++k)
        for (std::size_t j = 0; j < n; ++j) q.torsion_map_(k, j) = s.U(tors_rows[k], j);
    return q;
}

LatticeQuotient quotient(const IntMatrix& L, const IntMatrix& S) {
    SNF ls = smith_normal_form(L);
    if (ls.rank != L.cols()) throw std::invalid_argument("quotient: lattice basis has dependent columns");
    IntMatrix Sc(L.cols(), S.cols());
    for (std::size_t j = 0; j < S.cols(); ++j) {
        auto c = solve_with(ls, L.cols(), S.column(j));
        if (!c) throw std::invalid_argument("quotient: sublattice generator not in lattice");
        Sc.set_column(j, *c);
    }
    LatticeQuotient q = quotient(Sc);
    q.lift_basis = L * q.lift_basis;
    q.identity_L_ = false;
    q.L_ = L;
    q.L_snf_ = std::move(ls);
    return q;
}

SymplecticReduction symplectic_reduce(const IntMatrix& eps, const IntMatrix& G) {
    const std::size_t n = eps.rows();
    if (eps.cols() != n || (G.cols() && G.rows() != n)) throw std::invalid_argument("symplectic_reduce: shape mismatch");
    if (eps.transpose() != -1 * eps) throw std::invalid_argument("symplectic_reduce: form is not skew");
    SymplecticReduction out;
    if (G.cols() == 0) {
        out.K = IntMatrix::identity(n);
        out.quotient = quotient(out.K, IntMatrix(n, 0));
        out.form = eps;
        return out;
    }
    IntMatrix gg = G.transpose() * eps * G;
    if (!gg.is_zero()) throw NotIsotropic("sublattice is not isotropic: <G,G> = " + gg.str());
    IntMatrix pairing = G.transpose() * eps;  // g x n
    out.K = kernel(pairing);
    IntMatrix Kc = out.K;
    if (Kc.cols() == 0) Kc = IntMatrix(n, 0);
    out.quotient = quotient(Kc, G);
    out.form = out.quotient.lift_basis.transpose() * eps * out.quotient.lift_basis;
    return out;
}

}  // namespace gluesym::zlat

namespace gluesym::zlat {

namespace {

bool checked_combine(std::map<int, long>& r, long a, const std::map<int, long>& p, long b) {
    // r <- a * r - b * p, divided by the gcd of the result.
    std::map<int, long> out;
    auto it = r.begin();
    auto jt = p.begin();
    auto put = [&](int col, __int128 v) {
        if (v == 0) return true;
        if (v > INT64_MAX / 4 || v < -(INT64_MAX / 4)) return false;
        out.emplace(col, static_cast<long>(v));
        return true;
    };
    while (it != r.end() || jt != p.end()) {
        bool ok;
        if (jt == p.end() || (it != r.end() && it->first < jt->first)) {
            ok = put(it->first, static_cast<__int128>(a) * it->second);
            ++it;
        } else if (it == r.end() || jt->first < it->first) {
            ok = put(jt->first, -static_cast<__int128>(b) * jt->second);
            ++jt;
        } else {
            ok = put(it->first, static_cast<__int128>(a) * it->second - static_cast<__int128>(b) * jt->second);
            ++it;
            ++jt;
        }
        if (!ok) return false;
    }
    long g = 0;
    for (auto& [c, v] : out) g = std::gcd(g, v < 0 ? -v : v);
    if (g > 1)
        for (auto& [c, v] : out) v /= g;
    r = std::move(out);
    return true;
}

}  // namespace

std::size_t rank_sparse(const SparseRows& rows) {
    SparseRows work;
    int max_col = -1;
    for (const auto& r : rows) {
        std::map<int, long> c;
        for (auto [k, v] : r)
            if (v != 0) {
                c.emplace(k, v);
                max_col = std::max(max_col, k);
            }
        if (!c.empty()) work.push_back(std::move(c));
    }
    std::size_t rank = 0;
    std::vector<char> done(work.size(), 0);
    while (true) {
        // Pivot: the active row/entry with smallest |entry|, then fewest nonzeros.
        int best = -1, best_col = -1;
        long best_val = 0;
        std::size_t best_nnz = 0;
        for (std::size_t i = 0; i < work.size(); ++i) {
            if (done[i] || work[i].empty()) continue;
            for (auto [c, v] : work[i]) {
                long a = v < 0 ? -v : v;
                if (best < 0 || a < best_val || (a == best_val && work[i].size() < best_nnz)) {
                    best = static_cast<int>(i);
                    best_col = c;
                    best_val = a;
                    best_nnz = work[i].size();
                }
            }
        }
        if (best < 0) break;
        done[best] = 1;
        ++rank;
        const auto piv = work[best];
        const long pv = piv.at(best_col);
        for (std::size_t i = 0; i < work.size(); ++i) {
            if (done[i]) continue;
            auto it = work[i].find(best_col);
            if (it == work[i].end()) continue;
            long v = it->second;
            long g = std::gcd(pv < 0 ? -pv : pv, v < 0 ? -v : v);
            if (!checked_combine(work[i], pv / g, piv, v / g)) {
                IntMatrix dense(rows.size(), static_cast<std::size_t>(max_col + 1));
                for (std::size_t r = 0; r < rows.size(); ++r)
                    for (auto [c, x] : rows[r]) dense(r, c) = x;
                return zlat::rank(dense);
            }
        }
    }
    return rank;
}

}  // namespace gluesym::zlat
