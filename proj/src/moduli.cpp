#include "gluesym/moduli.hpp"

#include "gluesym/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>

namespace gluesym::moduli {

using surface::AbstractSurface;

namespace {

constexpr double kPi = std::numbers::pi;

// Outward vertex cycles of the faces of a tetrahedron, as in the boundary
// builder.
constexpr std::array<std::array<int, 3>, 4> kFaceCycle = {{{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}}};

double vnorm(const Vec2& v) { return v.norm(); }

void check_pair(const Vec2& a, const Vec2& b, const char* what) {
    if (std::abs(wedge(a, b)) <= 1e-14 * vnorm(a) * vnorm(b) || vnorm(a) == 0 || vnorm(b) == 0)
        throw DegenerateConfiguration(fmt::format("{}: two compared lines coincide", what));
}

cd ipow(cd x, const Int& e) {
    long n = e.get_si();
    if (n == 0) return 1.0;
    cd r = 1.0, b = n > 0 ? x : 1.0 / x;
    for (long k = std::labs(n); k > 0; k >>= 1) {
        if (k & 1) r *= b;
        b *= b;
    }
    return r;
}

// Matrix in the basis (m, l) whose second vector spans the framing line l,
// scaled so that entry (0, 0) is 1: [[1, 0], [p, q]].
Mat2 borel_form(const Mat2& hol, const Vec2& m, const Vec2& l) {
    Mat2 G;
    G.col(0) = m;
    G.col(1) = l;
    Mat2 H = G.inverse() * hol * G;
    if (std::abs(H(0, 0)) < 1e-300) throw DegenerateConfiguration("holonomy kills the framing quotient");
    H /= H(0, 0);
    if (std::abs(H(0, 1)) > 1e-8 * H.norm()) throw DegenerateConfiguration("framing line is not an eigenline");
    H(0, 1) = 0;
    return H;
}

}  // namespace

// ---- projective algebra

Mat2 matrix_S() {
    Mat2 m;
    m << 0.0, -1.0, 1.0, 0.0;
    return m;
}

Mat2 matrix_T() {
    Mat2 m;
    m << 1.0, 0.0, 1.0, 1.0;
    return m;
}

Mat2 matrix_H(cd x) {
    Mat2 m;
    m << 1.0, 0.0, 0.0, x;
    return m;
}

cd wedge(const Vec2& a, const Vec2& b) { return a(0) * b(1) - a(1) * b(0); }

Mat2 normalize(const Mat2& m) {
    cd d = m.determinant();
    if (std::abs(d) == 0) throw DegenerateConfiguration("singular matrix in PGL(2)");
    return m / std::sqrt(d);
}

double projective_distance(const Mat2& a, const Mat2& b) {
    Mat2 x = normalize(a), y = normalize(b);
    double plus = (x - y).cwiseAbs().maxCoeff();
    double minus = (x + y).cwiseAbs().maxCoeff();
    return std::min(plus, minus);
}

double distance_to_identity(const Mat2& m) { return projective_distance(m, Mat2::Identity()); }

double unipotent_defect(const Mat2& m) {
    cd d = m.determinant();
    cd t = m.trace();
    return std::abs(t * t - 4.0 * d) / std::abs(d);
}

double eigenline_defect(const Mat2& m, const Vec2& v) {
    Vec2 w = m * v;
    if (vnorm(w) == 0) return 0;
    return std::abs(wedge(v, w)) / (vnorm(v) * vnorm(w));
}

cd cross_ratio_edge(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    check_pair(a, b, "cross ratio");
    check_pair(c, d, "cross ratio");
    check_pair(a, c, "cross ratio");
    check_pair(b, d, "cross ratio");
    return -wedge(a, b) * wedge(c, d) / (wedge(a, c) * wedge(b, d));
}

cd five_line_ratio(const Vec2& a, const Vec2& b, const Vec2& k, const Vec2& a2, const Vec2& b2) {
    for (const Vec2* v : {&a, &b, &a2, &b2}) check_pair(*v, k, "generalized cross ratio");
    check_pair(a, b, "generalized cross ratio");
    check_pair(a2, b2, "generalized cross ratio");
    return wedge(a, k) * wedge(b, k) / wedge(a, b) * wedge(a2, b2) / (wedge(a2, k) * wedge(b2, k));
}

cd eigen_ratio(const Mat2& m, const Vec2& line, double tol) {
    if (eigenline_defect(m, line) > tol) throw DegenerateConfiguration("framing line is not an eigenline of the holonomy");
    Vec2 w = m * line;
    int k = std::abs(line(0)) >= std::abs(line(1)) ? 0 : 1;
    cd mu = w(k) / line(k);
    cd d = m.determinant();
    return mu * mu / d;
}

Mat2 map_three_lines(const Vec2& p1, const Vec2& p2, const Vec2& p3, const Vec2& q1, const Vec2& q2,
                     const Vec2& q3) {
    auto frame = [](const Vec2& x1, const Vec2& x2, const Vec2& x3) {
        check_pair(x1, x2, "three lines");
        check_pair(x1, x3, "three lines");
        check_pair(x2, x3, "three lines");
        // x3 = al x1 + be x2
        cd det = wedge(x1, x2);
        cd al = wedge(x3, x2) / det, be = wedge(x1, x3) / det;
        Mat2 F;
        F.col(0) = al * x1;
        F.col(1) = be * x2;
        return F;
    };
    return frame(q1, q2, q3) * frame(p1, p2, p3).inverse();
}

// ---- coordinate systems

AbstractSurface tetrahedra_surface(int n) {
    if (n <= 0) throw SchemaError("need at least one tetrahedron");
    AbstractSurface one = surface::tetrahedron_surface();
    AbstractSurface s;
    s.num_holes = 4 * n;
    for (int t = 0; t < n; ++t)
        for (int f = 0; f < 4; ++f) {
            std::array<int, 3> c = one.faces[f];
            std::array<std::pair<int, int>, 3> g = one.glue[f];
            for (int i = 0; i < 3; ++i) {
                c[i] += 4 * t;
                g[i].first += 4 * t;
            }
            s.faces.push_back(c);
            s.glue.push_back(g);
        }
    s.validate();
    return s;
}

int CoordinateSystem::generator_index(Generator::Kind kind, int index) const {
    for (int g = 0; g < num_generators(); ++g)
        if (generators[g].kind == kind && generators[g].index == index) return g;
    throw SchemaError("no such generator");
}

namespace {

bool looks_like_tetrahedra(const AbstractSurface& s) {
    if (s.faces.empty() || s.faces.size() % 4 != 0 || !s.annuli.empty() || s.num_small_tori != 0) return false;
    int n = static_cast<int>(s.faces.size()) / 4;
    if (s.num_holes != 4 * n) return false;
    AbstractSurface ref = tetrahedra_surface(n);
    return ref.faces == s.faces && ref.glue == s.glue;
}

}  // namespace

CoordinateSystem coordinate_system(const AbstractSurface& s) {
    s.validate();
    if (s.num_small_spheres > 0) throw NonAbelianSmallBoundary("small spheres carry no framed coordinates");
    CoordinateSystem cs;
    cs.surface = s;
    cs.tetrahedra = looks_like_tetrahedra(s);
    const int nf = static_cast<int>(s.faces.size());

    // Same generator order as oddhom::presentation_generators.
    cs.side_generator.assign(3 * nf, -1);
    for (int f = 0; f < nf; ++f)
        for (int i = 0; i < 3; ++i) {
            auto [g, j] = s.glue[f][i];
            if (std::pair(g, j) < std::pair(f, i)) continue;
            Generator gen;
            gen.kind = Generator::Kind::edge;
            gen.index = static_cast<int>(cs.generators.size());
            gen.face = f;
            gen.side = i;
            int a = s.faces[f][i], b = s.faces[f][(i + 1) % 3];
            if (cs.tetrahedra)
                gen.label = fmt::format("x_{}.{}{}", a / 4, std::min(a, b) % 4, std::max(a, b) % 4);
            else
                gen.label = fmt::format("x_e{}.{}", f, i);
            cs.side_generator[3 * f + i] = cs.side_generator[3 * g + j] = static_cast<int>(cs.generators.size());
            cs.generators.push_back(gen);
        }
    for (std::size_t a = 0; a < s.annuli.size(); ++a) {
        cs.generators.push_back({Generator::Kind::lambda, static_cast<int>(a), 0, 0, fmt::format("x_lambda_{}", a)});
        cs.generators.push_back({Generator::Kind::tau, static_cast<int>(a), 0, 0, fmt::format("x_tau_{}", a)});
    }
    for (int k = 0; k < s.num_small_tori; ++k) {
        cs.generators.push_back({Generator::Kind::alpha, k, 0, 0, fmt::format("x_alpha_{}", k)});
        cs.generators.push_back({Generator::Kind::beta, k, 0, 0, fmt::format("x_beta_{}", k)});
    }
    const int G = cs.num_generators();

    auto b = surface::build_abstract(s);
    auto cv = surface::build_cover(b);
    oddhom::SurfaceHomology h(cv.total);
    auto pg = oddhom::presentation_generators(b, cv);
    if (static_cast<int>(pg.labels.size()) != G) throw InternalInconsistency("generator count mismatch");
    IntMatrix Gh(h.rank(), G);
    for (int j = 0; j < G; ++j) Gh.set_column(j, h.coords(pg.cycles.column(j)));

    // Candidate order for the basis.
    std::vector<int> order;
    if (cs.tetrahedra) {
        const int n = nf / 4;
        std::vector<int> gam(n, -1), gamp(n, -1);
        for (int g = 0; g < G; ++g) {
            const auto& gen = cs.generators[g];
            int a = s.faces[gen.face][gen.side], bb = s.faces[gen.face][(gen.side + 1) % 3];
            int lo = std::min(a, bb) % 4, hi = std::max(a, bb) % 4;
            if (lo == 0 && hi == 1) gam[a / 4] = g;
            if (lo == 0 && hi == 2) gamp[a / 4] = g;
        }
        order = gam;
        order.insert(order.end(), gamp.begin(), gamp.end());
    } else {
        for (int g = 0; g < G; ++g)
            if (cs.generators[g].kind != Generator::Kind::edge) order.push_back(g);
        std::vector<std::pair<std::pair<int, int>, int>> edges;
        for (int g = 0; g < G; ++g) {
            const auto& gen = cs.generators[g];
            if (gen.kind != Generator::Kind::edge) continue;
            int a = s.faces[gen.face][gen.side], bb = s.faces[gen.face][(gen.side + 1) % 3];
            edges.push_back({{std::min(a, bb), std::max(a, bb)}, g});
        }
        std::stable_sort(edges.begin(), edges.end(),
                         [](const auto& x, const auto& y) { return x.first < y.first; });
        for (auto& e : edges) order.push_back(e.second);
    }

    std::vector<int> chosen;
    IntMatrix sel(Gh.rows(), 0);
    for (int g : order) {
        IntMatrix trial = zlat::hstack(sel, Gh.columns(g, g + 1));
        if (zlat::rank(trial) > chosen.size()) {
            chosen.push_back(g);
            sel = trial;
        }
    }
    bool unimodular = true;
    IntMatrix C(chosen.size(), G);
    for (int g = 0; g < G && unimodular; ++g) {
        auto c = zlat::solve_in_basis(sel, Gh.column(g));
        if (!c) {
            unimodular = false;
            break;
        }
        C.set_column(g, *c);
    }
    if (unimodular) {
        cs.basis_in_generators = IntMatrix(G, chosen.size());
        for (std::size_t k = 0; k < chosen.size(); ++k) cs.basis_in_generators(chosen[k], k) = 1;
        cs.generators_in_basis = C;
        for (std::size_t k = 0; k < chosen.size(); ++k) {
            const auto& gen = cs.generators[chosen[k]];
            std::string lab = gen.label.substr(2);
            if (cs.tetrahedra) {
                int n = nf / 4;
                lab = k < static_cast<std::size_t>(n) ? fmt::format("gamma_{}", k) : fmt::format("gammap_{}", k - n);
            }
            cs.basis_labels.push_back(lab);
        }
    } else {
        // A basis of the image lattice written in the generators.
        auto quo = zlat::quotient(zlat::kernel(Gh));
        cs.basis_in_generators = quo.lift_basis;
        cs.generators_in_basis = IntMatrix(quo.free_rank, G);
        for (int g = 0; g < G; ++g) {
            Vec e(G, 0);
            e[g] = 1;
            cs.generators_in_basis.set_column(g, quo.coords(e));
        }
        for (std::size_t k = 0; k < quo.free_rank; ++k) cs.basis_labels.push_back(fmt::format("c_{}", k));
    }
    IntMatrix cycles = pg.cycles * cs.basis_in_generators;
    cs.eps = oddhom::intersection_matrix(cv.total, cycles);
    return cs;
}

CoordinateSystem coordinate_system(const surface::BoundarySurface& b) {
    if (!b.abstract) throw SchemaError("coordinate system needs abstract big-boundary data");
    return coordinate_system(*b.abstract);
}

std::vector<cd> generator_values(const CoordinateSystem& cs, const CoordinatePoint& x) {
    if (static_cast<int>(x.values.size()) != cs.dim())
        throw BasisMismatch(fmt::format("expected {} coordinates, got {}", cs.dim(), x.values.size()));
    if (!x.basis.empty() && x.basis != cs.basis_labels) throw BasisMismatch("coordinate labels do not match the basis");
    std::vector<cd> gen(cs.num_generators());
    for (int g = 0; g < cs.num_generators(); ++g) {
        cd v = 1.0;
        for (int k = 0; k < cs.dim(); ++k) v *= ipow(x.values[k], cs.generators_in_basis(k, g));
        gen[g] = v;
    }
    return gen;
}

CoordinatePoint basis_values(const CoordinateSystem& cs, const std::vector<cd>& gen) {
    CoordinatePoint x;
    x.basis = cs.basis_labels;
    for (int k = 0; k < cs.dim(); ++k) {
        cd v = 1.0;
        for (int g = 0; g < cs.num_generators(); ++g) v *= ipow(gen[g], cs.basis_in_generators(g, k));
        x.values.push_back(v);
    }
    return x;
}

void check_restrictions(const CoordinateSystem& cs, const std::vector<cd>& gen, double tol) {
    for (std::size_t a = 0; a < cs.surface.annuli.size(); ++a) {
        cd l = gen[cs.generator_index(Generator::Kind::lambda, static_cast<int>(a))];
        if (std::abs(l - 1.0) <= tol) throw UnipotentAnnulus(fmt::format("annulus {}: x_lambda = 1", a));
    }
    for (int k = 0; k < cs.surface.num_small_tori; ++k) {
        cd xa = gen[cs.generator_index(Generator::Kind::alpha, k)];
        cd xb = gen[cs.generator_index(Generator::Kind::beta, k)];
        if (std::abs(xa - 1.0) <= tol && std::abs(xb - 1.0) <= tol)
            throw UnipotentTorus(fmt::format("torus {}: (x_alpha, x_beta) = (1, 1)", k));
    }
}

std::string coordinates_to_json(const CoordinatePoint& x) {
    nlohmann::json j;
    j["basis"] = x.basis;
    j["values"] = nlohmann::json::array();
    for (cd v : x.values) j["values"].push_back({v.real(), v.imag()});
    return j.dump();
}

CoordinatePoint coordinates_from_json(const std::string& doc) {
    CoordinatePoint x;
    try {
        auto j = nlohmann::json::parse(doc);
        x.basis = j.at("basis").get<std::vector<std::string>>();
        for (const auto& v : j.at("values")) {
            if (!v.is_array() || v.size() != 2) throw SchemaError("coordinate value must be [re, im]");
            x.values.emplace_back(v[0].get<double>(), v[1].get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("coordinates: ") + e.what());
    }
    if (x.basis.size() != x.values.size()) throw SchemaError("coordinates: basis and values differ in length");
    return x;
}

// ---- connections

Mat2 holonomy(const FramedConnection& A, const std::vector<DualStep>& path) {
    Mat2 M = Mat2::Identity();
    for (const auto& st : path) {
        Mat2 T;
        switch (st.kind) {
            case DualStep::Kind::side: T = A.transport.at(st.a).at(st.b); break;
            case DualStep::Kind::traversal: T = A.annulus_transport.at(st.a); break;
            case DualStep::Kind::torus_alpha: T = A.tori.at(st.a).alpha; break;
            case DualStep::Kind::torus_beta: T = A.tori.at(st.a).beta; break;
        }
        if (st.kind != DualStep::Kind::side && st.dir < 0) T = T.inverse().eval();
        M = T * M;
    }
    return M;
}

std::vector<DualStep> hole_loop(const AbstractSurface& s, int hole) {
    auto hc = s.hole_corners();
    std::vector<DualStep> out;
    for (auto [f, i] : hc.at(hole)) out.push_back({DualStep::Kind::side, f, (i + 2) % 3, 1});
    return out;
}

std::vector<std::vector<DualStep>> contractible_test_loops(const AbstractSurface& s) {
    std::vector<std::vector<DualStep>> out;
    const int nf = static_cast<int>(s.faces.size());
    for (int f = 0; f < nf; ++f)
        for (int i = 0; i < 3; ++i) {
            auto [g, j] = s.glue[f][i];
            out.push_back({{DualStep::Kind::side, f, i, 1}, {DualStep::Kind::side, g, j, 1}});
        }
    auto hc = s.hole_corners();
    for (std::size_t a = 0; a < s.annuli.size(); ++a) {
        auto loop = hole_loop(s, s.annuli[a][0]);
        loop.push_back({DualStep::Kind::traversal, static_cast<int>(a), 0, 1});
        auto lb = hole_loop(s, s.annuli[a][1]);
        loop.insert(loop.end(), lb.begin(), lb.end());
        loop.push_back({DualStep::Kind::traversal, static_cast<int>(a), 0, -1});
        out.push_back(loop);
    }
    for (int k = 0; k < s.num_small_tori; ++k)
        out.push_back({{DualStep::Kind::torus_alpha, k, 0, 1},
                       {DualStep::Kind::torus_beta, k, 0, 1},
                       {DualStep::Kind::torus_alpha, k, 0, -1},
                       {DualStep::Kind::torus_beta, k, 0, -1}});
    return out;
}

double loop_defect(const FramedConnection& A, const std::vector<DualStep>& loop) {
    std::size_t half = (loop.size() + 1) / 2;
    std::vector<DualStep> first(loop.begin(), loop.begin() + half), second(loop.begin() + half, loop.end());
    Mat2 X = holonomy(A, first);
    Mat2 Y = holonomy(A, second).inverse();
    double scale = std::max(1.0, normalize(X).cwiseAbs().maxCoeff());
    return projective_distance(X, Y) / scale;
}

std::array<Mat2, 3> hexagon_bases(const FramedConnection& A, int face) {
    std::array<Mat2, 3> out;
    const auto& l = A.lines.at(face);
    for (int i = 0; i < 3; ++i) {
        const Vec2 &p = l[i], &q = l[(i + 1) % 3], &r = l[(i + 2) % 3];
        check_pair(p, q, "hexagon basis");
        cd det = wedge(p, q);
        cd al = wedge(r, q) / det, be = wedge(p, r) / det;  // r = al p + be q
        out[i].col(0) = al * p;
        out[i].col(1) = -be * q;  // v1 - v2 = r
    }
    return out;
}

namespace {

struct AnnulusEnds {
    int fa, ia, fb, ib;
};

AnnulusEnds annulus_ends(const AbstractSurface& s, int a) {
    auto hc = s.hole_corners();
    auto [fa, ia] = hc[s.annuli[a][0]].front();
    auto [fb, ib] = hc[s.annuli[a][1]].front();
    return {fa, ia, fb, ib};
}

// Edge transports from x_e in the standard face gauge with corner lines
// (1, 0), (0, 1), (1, 1).
void fill_edges_by_lines(FramedConnection& A, const CoordinateSystem& cs, const std::vector<cd>& gen) {
    const auto& s = cs.surface;
    const int nf = static_cast<int>(s.faces.size());
    A.lines.assign(nf, {Vec2(1.0, 0.0), Vec2(0.0, 1.0), Vec2(1.0, 1.0)});
    A.transport.assign(nf, {Mat2::Identity(), Mat2::Identity(), Mat2::Identity()});
    for (int f = 0; f < nf; ++f)
        for (int i = 0; i < 3; ++i) {
            auto [g, j] = s.glue[f][i];
            cd x = gen[cs.side_generator[3 * f + i]];
            const Vec2 &p = A.lines[f][i], &q = A.lines[f][(i + 1) % 3], &r = A.lines[f][(i + 2) % 3];
            // far line s = p + c q with x = -<p s><q r> / (<s q><r p>)
            Vec2 sl = p + (-x * wedge(r, p) / wedge(q, r)) * q;
            A.transport[f][i] = map_three_lines(p, q, sl, A.lines[g][(j + 1) % 3], A.lines[g][j], A.lines[g][(j + 2) % 3]);
        }
}

// Annulus traversal from the Borel forms of the two end holonomies.  d is
// the lower-right entry of the traversal in the gauges (m_a, l_a) and
// (m_b, l_b).
Mat2 annulus_from_borel(const Mat2& Ma, const Mat2& Mb_inv, cd d, const Mat2& Ga, const Mat2& Gb, int a) {
    cd q = Ma(1, 1);
    if (std::abs(1.0 - q) <= 1e-12) throw UnipotentAnnulus(fmt::format("annulus {}: x_lambda = 1", a));
    if (std::abs(Mb_inv(1, 1) - q) > 1e-8 * std::max(1.0, std::abs(q)))
        throw DegenerateConfiguration(fmt::format("annulus {}: holonomies at the two ends do not match", a));
    cd t = (Mb_inv(1, 0) - d * Ma(1, 0)) / (1.0 - q);
    Mat2 L;
    L << 1.0, 0.0, t, d;
    return Gb * L * Ga.inverse();
}

void fill_annuli_generic(FramedConnection& A, const CoordinateSystem& cs, const std::vector<cd>& gen) {
    const auto& s = cs.surface;
    A.annulus_transport.clear();
    for (std::size_t a = 0; a < s.annuli.size(); ++a) {
        auto e = annulus_ends(s, static_cast<int>(a));
        Mat2 Ha = holonomy(A, hole_loop(s, s.annuli[a][0]));
        Mat2 Hb = holonomy(A, hole_loop(s, s.annuli[a][1]));
        const Vec2& la = A.lines[e.fa][e.ia];
        const Vec2& lb = A.lines[e.fb][e.ib];
        const Vec2& ma = A.lines[e.fa][(e.ia + 2) % 3];
        const Vec2& mb = A.lines[e.fb][(e.ib + 2) % 3];
        Mat2 Ga, Gb;
        Ga.col(0) = ma;
        Ga.col(1) = la;
        Gb.col(0) = mb;
        Gb.col(1) = lb;
        Mat2 Ma = borel_form(Ha, ma, la);
        Mat2 Mbi = borel_form(Hb.inverse(), mb, lb);
        // d from the twist: x_tau = a1 b1 <a'b'> / (d <ab> a'1 b'1) in gauge coordinates.
        Vec2 ah = Ga.inverse() * A.lines[e.fa][(e.ia + 1) % 3];
        Vec2 bh = Ga.inverse() * A.lines[e.fa][(e.ia + 2) % 3];
        Vec2 a2 = Gb.inverse() * A.lines[e.fb][(e.ib + 1) % 3];
        Vec2 b2 = Gb.inverse() * A.lines[e.fb][(e.ib + 2) % 3];
        cd xt = gen[cs.generator_index(Generator::Kind::tau, static_cast<int>(a))];
        cd d = ah(0) * bh(0) * wedge(a2, b2) / (xt * wedge(ah, bh) * a2(0) * b2(0));
        A.annulus_transport.push_back(annulus_from_borel(Ma, Mbi, d, Ga, Gb, static_cast<int>(a)));
    }
}

}  // namespace

FramedConnection reconstruct(const CoordinateSystem& cs, const CoordinatePoint& x) {
    auto gen = generator_values(cs, x);
    check_restrictions(cs, gen);
    FramedConnection A;
    A.surface = cs.surface;
    fill_edges_by_lines(A, cs, gen);
    fill_annuli_generic(A, cs, gen);
    for (int k = 0; k < cs.surface.num_small_tori; ++k) {
        TorusHolonomy th;
        th.alpha = matrix_H(1.0 / gen[cs.generator_index(Generator::Kind::alpha, k)]);
        th.beta = matrix_H(1.0 / gen[cs.generator_index(Generator::Kind::beta, k)]);
        th.framing = Vec2(1.0, 0.0);
        A.tori.push_back(th);
    }
    return A;
}

std::vector<cd> extract_generators(const CoordinateSystem& cs, const FramedConnection& A) {
    const auto& s = cs.surface;
    std::vector<cd> gen(cs.num_generators());
    for (int g = 0; g < cs.num_generators(); ++g) {
        const auto& G = cs.generators[g];
        switch (G.kind) {
            case Generator::Kind::edge: {
                int f = G.face, i = G.side;
                auto [h, j] = s.glue[f][i];
                const Vec2 &p = A.lines[f][i], &q = A.lines[f][(i + 1) % 3], &r = A.lines[f][(i + 2) % 3];
                Vec2 far = A.transport[h][j] * A.lines[h][(j + 2) % 3];
                gen[g] = cross_ratio_edge(p, far, r, q);
                break;
            }
            case Generator::Kind::lambda: {
                auto e = annulus_ends(s, G.index);
                Mat2 H = holonomy(A, hole_loop(s, s.annuli[G.index][0]));
                gen[g] = eigen_ratio(H, A.lines[e.fa][e.ia]);
                break;
            }
            case Generator::Kind::tau: {
                // Lines carried to the far end of the one-step path.
                auto e = annulus_ends(s, G.index);
                const Mat2& M = A.annulus_transport.at(G.index);
                Vec2 a = M * A.lines[e.fa][(e.ia + 1) % 3];
                Vec2 b = M * A.lines[e.fa][(e.ia + 2) % 3];
                const Vec2& k = A.lines[e.fb][e.ib];
                gen[g] = five_line_ratio(a, b, k, A.lines[e.fb][(e.ib + 1) % 3], A.lines[e.fb][(e.ib + 2) % 3]);
                break;
            }
            case Generator::Kind::alpha:
                gen[g] = eigen_ratio(A.tori.at(G.index).alpha, A.tori.at(G.index).framing);
                break;
            case Generator::Kind::beta:
                gen[g] = eigen_ratio(A.tori.at(G.index).beta, A.tori.at(G.index).framing);
                break;
        }
    }
    return gen;
}

CoordinatePoint extract_coordinates(const CoordinateSystem& cs, const FramedConnection& A) {
    return basis_values(cs, extract_generators(cs, A));
}

std::string connection_to_json(const FramedConnection& A) {
    auto mat = [](const Mat2& m) {
        nlohmann::json j = nlohmann::json::array();
        for (int r = 0; r < 2; ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (int c = 0; c < 2; ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
            j.push_back(row);
        }
        return j;
    };
    auto vec = [](const Vec2& v) {
        return nlohmann::json::array({{v(0).real(), v(0).imag()}, {v(1).real(), v(1).imag()}});
    };
    nlohmann::json j;
    j["transports"] = nlohmann::json::object();
    j["lines"] = nlohmann::json::array();
    for (std::size_t f = 0; f < A.transport.size(); ++f) {
        nlohmann::json lf = nlohmann::json::array();
        for (int i = 0; i < 3; ++i) {
            j["transports"][std::to_string(3 * f + i)] = mat(A.transport[f][i]);
            lf.push_back(vec(A.lines[f][i]));
        }
        j["lines"].push_back(lf);
    }
    j["annuli"] = nlohmann::json::array();
    for (const auto& m : A.annulus_transport) j["annuli"].push_back(mat(m));
    j["tori"] = nlohmann::json::array();
    for (const auto& t : A.tori)
        j["tori"].push_back({{"alpha", mat(t.alpha)}, {"beta", mat(t.beta)}, {"framing", vec(t.framing)}});
    return j.dump();
}

// ---- abelian connections

cd AbelianConnection::value(const Vec& coeffs, int fiber_bit) const {
    if (coeffs.size() != holonomy.size()) throw BasisMismatch("abelian connection: coefficient count");
    cd v = (fiber_bit & 1) ? fiber : cd(1.0);
    for (std::size_t i = 0; i < coeffs.size(); ++i) v *= ipow(holonomy[i], coeffs[i]);
    return v;
}

AbelianConnection abelian_from_coordinates(const CoordinatePoint& x) {
    AbelianConnection a;
    a.basis = x.basis;
    a.holonomy = x.values;
    return a;
}

FramedConnection nonabelianize(const CoordinateSystem& cs, const AbelianConnection& a) {
    if (a.holonomy.size() != static_cast<std::size_t>(cs.dim()))
        throw BasisMismatch("abelian connection does not match the coordinate system");
    if (!a.basis.empty() && a.basis != cs.basis_labels) throw BasisMismatch("abelian connection labels differ");
    const auto& s = cs.surface;
    std::vector<cd> gen(cs.num_generators());
    for (int g = 0; g < cs.num_generators(); ++g) gen[g] = a.value(cs.generators_in_basis.column(g), 0);
    check_restrictions(cs, gen);

    // Each face is trivialized by its basis at side 0; the basis at side i
    // is reached by (S T)^i.  Corner line i is v1 of the basis at side i.
    const Mat2 R = matrix_S() * matrix_T();
    const Mat2 S = matrix_S();
    std::array<Mat2, 3> Rp = {Mat2::Identity(), R, R * R};
    std::array<Mat2, 3> Rm = {Mat2::Identity(), Rp[1].inverse(), Rp[2].inverse()};
    const int nf = static_cast<int>(s.faces.size());
    FramedConnection A;
    A.surface = s;
    A.lines.resize(nf);
    A.transport.resize(nf);
    for (int f = 0; f < nf; ++f)
        for (int i = 0; i < 3; ++i) A.lines[f][i] = Rm[i] * Vec2(1.0, 0.0);
    for (int f = 0; f < nf; ++f)
        for (int i = 0; i < 3; ++i) {
            auto [g, j] = s.glue[f][i];
            cd x = gen[cs.side_generator[3 * f + i]];
            A.transport[f][i] = Rm[j] * matrix_H(x) * S * Rp[i];
        }

    // Annuli: bases at side i+2 of the end faces hold the framing line as
    // their second vector, so the end holonomies are [[1, 0], [*, q]] and
    // the traversal is [[1, 0], [t, 1/x_tau]], the unipotent jump t sitting
    // at the tail.
    for (std::size_t an = 0; an < s.annuli.size(); ++an) {
        auto e = annulus_ends(s, static_cast<int>(an));
        Mat2 Ba = Rm[(e.ia + 2) % 3], Bb = Rm[(e.ib + 2) % 3];  // basis vectors in face coordinates
        Mat2 Ha = holonomy(A, hole_loop(s, s.annuli[an][0]));
        Mat2 Hb = holonomy(A, hole_loop(s, s.annuli[an][1]));
        Mat2 Ma = Ba.inverse() * Ha * Ba;
        Mat2 Mbi = Bb.inverse() * Hb.inverse() * Bb;
        Ma /= Ma(0, 0);
        Mbi /= Mbi(0, 0);
        cd xt = gen[cs.generator_index(Generator::Kind::tau, static_cast<int>(an))];
        A.annulus_transport.push_back(annulus_from_borel(Ma, Mbi, 1.0 / xt, Ba, Bb, static_cast<int>(an)));
    }
    for (int k = 0; k < s.num_small_tori; ++k) {
        cd xa = gen[cs.generator_index(Generator::Kind::alpha, k)];
        cd xb = gen[cs.generator_index(Generator::Kind::beta, k)];
        cd ra = std::sqrt(xa), rb = std::sqrt(xb);
        TorusHolonomy th;
        th.alpha << ra, 0.0, 0.0, 1.0 / ra;
        th.beta << rb, 0.0, 0.0, 1.0 / rb;
        th.framing = Vec2(1.0, 0.0);
        A.tori.push_back(th);
    }
    return A;
}

// ---- gluing

namespace {

int side_between(const AbstractSurface& s, int face, int other) {
    for (int i = 0; i < 3; ++i)
        if (s.glue[face][i].first == other) return i;
    throw SchemaError("faces are not adjacent");
}

int corner_of_vertex(int face_local, int v) {
    for (int i = 0; i < 3; ++i)
        if (kFaceCycle[face_local][i] == v) return i;
    throw SchemaError(fmt::format("vertex {} is not on face {}", v, face_local));
}

void check_tetrahedra_connection(const gluesys::GluingSystem& s, const FramedConnection& A) {
    if (static_cast<int>(A.lines.size()) != 4 * s.num_tetrahedra || !looks_like_tetrahedra(A.surface))
        throw BasisMismatch("connection does not live on the tetrahedra of the gluing system");
}

GluedTorus torus_after_removal(int cusp, cd xa, cd xb, double tol) {
    if (std::abs(xa - 1.0) <= tol && std::abs(xb - 1.0) <= tol)
        throw UnipotentTorus(fmt::format("cusp {}: (x_alpha, x_beta) = (1, 1)", cusp));
    GluedTorus out;
    out.cusp = cusp;
    out.x_alpha = xa;
    out.x_beta = xb;
    out.removal_curve = std::abs(xa - 1.0) > tol ? "alpha" : "beta";
    auto cs = coordinate_system(surface::small_torus_surface());
    AbelianConnection ab;
    ab.basis = cs.basis_labels;
    ab.holonomy = basis_values(cs, {xa, xb}).values;
    out.torus = nonabelianize(cs, ab);
    return out;
}

}  // namespace

GluedConnection glue_connection(const gluesys::GluingSystem& s, const AbelianConnection& a, double tol) {
    const int N = s.num_tetrahedra;
    if (a.holonomy.size() != static_cast<std::size_t>(2 * N))
        throw BasisMismatch("abelian connection is not on the tetrahedron basis");
    GluedConnection out;
    auto row_value = [&](std::size_t r) { return a.value(s.nz.row(r), s.sign_bits[r]); };
    const int nc = s.num_cusps;
    std::vector<std::string> bad;
    for (int e = 0; e < s.num_edges; ++e) {
        cd v = row_value(2 * nc + e);
        out.edge_values.push_back(v);
        if (std::abs(v - 1.0) > tol) bad.push_back(fmt::format("edge {} (x = {:.6g}{:+.6g}i)", s.edge_ids[e], v.real(), v.imag()));
    }
    if (!bad.empty()) {
        std::string msg = "moment map violated at";
        for (auto& b : bad) msg += " " + b;
        throw MomentMapViolation(msg);
    }
    for (int c = 0; c < nc; ++c) {
        auto gt = torus_after_removal(s.cusp_ids[c], row_value(c), row_value(nc + c), tol);
        gt.raw_alpha = gt.torus.tori[0].alpha;
        gt.raw_beta = gt.torus.tori[0].beta;
        out.cusps.push_back(gt);
    }
    return out;
}

namespace {

Mat2 inside_step(const FramedConnection& A, int tet, int from_face, int to_face) {
    int F = 4 * tet + from_face;
    return A.transport[F][side_between(A.surface, F, 4 * tet + to_face)];
}

// Fibre of face `face` of `tet` to the fibre of the face glued to it.
Mat2 across_face(const tri::Triangulation& t, const FramedConnection& A, int tet, int face,
                 const tri::FacePairing** pairing = nullptr) {
    const auto* p = t.pairing(tet, face);
    if (!p) throw SchemaError("path leaves through a free face");
    if (pairing) *pairing = p;
    int F1 = 4 * tet + face, F2 = 4 * p->to_tet + p->to_face;
    std::array<Vec2, 3> dst;
    for (int c = 0; c < 3; ++c) dst[c] = A.lines[F2][corner_of_vertex(p->to_face, p->perm[kFaceCycle[face][c]])];
    return map_three_lines(A.lines[F1][0], A.lines[F1][1], A.lines[F1][2], dst[0], dst[1], dst[2]);
}

// Transport between two corners (tet, face, vertex) of the same cusp along
// the small triangles, found by breadth-first search.
Mat2 connect_corners(const tri::Triangulation& t, const FramedConnection& A, std::array<int, 3> from,
                     std::array<int, 3> to) {
    std::map<std::array<int, 3>, Mat2> seen;
    std::vector<std::array<int, 3>> queue = {from};
    seen[from] = Mat2::Identity();
    for (std::size_t k = 0; k < queue.size(); ++k) {
        auto cur = queue[k];
        if (cur == to) return seen[cur];
        auto [tet, face, v] = cur;
        std::vector<std::pair<std::array<int, 3>, Mat2>> next;
        for (int f2 = 0; f2 < 4; ++f2)
            if (f2 != face && f2 != v) next.push_back({{tet, f2, v}, inside_step(A, tet, face, f2)});
        if (t.pairing(tet, face)) {
            const tri::FacePairing* p = nullptr;
            Mat2 M = across_face(t, A, tet, face, &p);
            next.push_back({{p->to_tet, p->to_face, p->perm[v]}, M});
        }
        for (auto& [st, M] : next)
            if (!seen.count(st)) {
                seen[st] = M * seen[cur];
                queue.push_back(st);
            }
    }
    throw SchemaError("row paths start on different cusps");
}

}  // namespace

Mat2 row_holonomy(const tri::Triangulation& t, const gluesys::GluingSystem& s, const FramedConnection& A,
                  std::size_t row, Vec2* framing) {
    check_tetrahedra_connection(s, A);
    const auto& steps = s.row_paths.at(row).steps;
    if (steps.empty()) throw SchemaError("empty row path");
    Mat2 M = Mat2::Identity();
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const auto& st = steps[k];
        M = inside_step(A, st.tet, st.enter, st.exit) * M;
        const tri::FacePairing* p = nullptr;
        M = across_face(t, A, st.tet, st.exit, &p) * M;
        const auto& nx = steps[(k + 1) % steps.size()];
        if (nx.tet != p->to_tet || nx.enter != p->to_face) throw SchemaError("row path is not continuous");
    }
    if (framing) {
        const auto& st = steps.front();
        *framing = A.lines[4 * st.tet + st.enter][corner_of_vertex(st.enter, st.vertex)];
    }
    return M;
}

GluedConnection glue_connection(const tri::Triangulation& t, const gluesys::GluingSystem& s, const FramedConnection& A,
                                double tol) {
    check_tetrahedra_connection(s, A);
    GluedConnection out;
    const int nc = s.num_cusps;
    // Row paths wind the other way round the holes than hole_loop, so the
    // row value is read off the inverse holonomy.
    auto value = [&](std::size_t r, Mat2* hol, Vec2* line) {
        Vec2 l;
        Mat2 H = row_holonomy(t, s, A, r, &l).inverse();
        if (hol) *hol = H;
        if (line) *line = l;
        return eigen_ratio(H, l, 1e-7);
    };
    std::vector<std::string> bad;
    for (int e = 0; e < s.num_edges; ++e) {
        cd v = value(2 * nc + e, nullptr, nullptr);
        out.edge_values.push_back(v);
        if (std::abs(v - 1.0) > tol) bad.push_back(fmt::format("edge {} (x = {:.6g}{:+.6g}i)", s.edge_ids[e], v.real(), v.imag()));
    }
    if (!bad.empty()) {
        std::string msg = "moment map violated at";
        for (auto& b : bad) msg += " " + b;
        throw MomentMapViolation(msg);
    }
    for (int c = 0; c < nc; ++c) {
        Mat2 Ha, Hb;
        Vec2 la, lb;
        cd xa = value(c, &Ha, &la), xb = value(nc + c, &Hb, &lb);
        {
            const auto& sa = s.row_paths[c].steps.front();
            const auto& sb = s.row_paths[nc + c].steps.front();
            Mat2 P = connect_corners(t, A, {sb.tet, sb.enter, sb.vertex}, {sa.tet, sa.enter, sa.vertex});
            Hb = P * Hb * P.inverse();
        }
        if (std::abs(xa - 1.0) <= tol && std::abs(xb - 1.0) <= tol)
            throw UnipotentTorus(fmt::format("cusp {}: (x_alpha, x_beta) = (1, 1)", s.cusp_ids[c]));
        if (eigenline_defect(Hb, la) > 1e-7) throw DegenerateConfiguration("cusp holonomies have different framing lines");
        // Unipotent modification along the removal curve: in the eigenbasis
        // of its holonomy, with the framing line first, keep the diagonal
        // part of both holonomies.
        GluedTorus gt;
        gt.cusp = s.cusp_ids[c];
        gt.x_alpha = xa;
        gt.x_beta = xb;
        gt.raw_alpha = Ha;
        gt.raw_beta = Hb;
        bool use_alpha = std::abs(xa - 1.0) > tol;
        gt.removal_curve = use_alpha ? "alpha" : "beta";
        const Mat2& Hr = use_alpha ? Ha : Hb;
        Eigen::ComplexEigenSolver<Mat2> es(Hr);
        int other = std::abs(wedge(es.eigenvectors().col(0), la)) >= std::abs(wedge(es.eigenvectors().col(1), la)) ? 0 : 1;
        Mat2 G;
        G.col(0) = la;
        G.col(1) = es.eigenvectors().col(other);
        Mat2 Da = G.inverse() * Ha * G, Db = G.inverse() * Hb * G;
        TorusHolonomy th;
        th.alpha << Da(0, 0), 0.0, 0.0, Da(1, 1);
        th.beta << Db(0, 0), 0.0, 0.0, Db(1, 1);
        th.framing = Vec2(1.0, 0.0);
        gt.torus.surface = surface::small_torus_surface();
        gt.torus.tori.push_back(th);
        out.cusps.push_back(gt);
    }
    return out;
}

AbelianConnection random_slice_point(const gluesys::GluingSystem& s, std::uint64_t seed, double spread) {
    const int N = s.num_tetrahedra, nc = s.num_cusps;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> re(-spread, spread), im(-kPi, kPi);
    std::vector<cd> w(2 * N);
    for (auto& x : w) x = cd(re(rng), im(rng));
    // Independent edge rows and pivot columns.
    std::set<int> dropped(s.dropped_edges.begin(), s.dropped_edges.end());
    std::vector<int> rows;
    for (int e = 0; e < s.num_edges; ++e)
        if (!dropped.count(e)) rows.push_back(2 * nc + e);
    std::vector<int> pivots;
    IntMatrix acc(rows.size(), 0);
    for (int c = 0; c < 2 * N && pivots.size() < rows.size(); ++c) {
        IntMatrix col(rows.size(), 1);
        for (std::size_t r = 0; r < rows.size(); ++r) col(r, 0) = s.nz(rows[r], c);
        IntMatrix trial = zlat::hstack(acc, col);
        if (zlat::rank(trial) > pivots.size()) {
            pivots.push_back(c);
            acc = trial;
        }
    }
    if (pivots.size() < rows.size()) throw InternalInconsistency("edge rows are dependent");
    const std::size_t m = rows.size();
    Eigen::MatrixXcd P(m, m);
    Eigen::VectorXcd rhs(m);
    std::set<int> piv(pivots.begin(), pivots.end());
    for (std::size_t r = 0; r < m; ++r) {
        cd v = cd(0, kPi) * double(s.sign_bits[rows[r]]);
        for (int c = 0; c < 2 * N; ++c)
            if (!piv.count(c)) v += s.nz(rows[r], c).get_d() * w[c];
        rhs(r) = -v;
        for (std::size_t k = 0; k < m; ++k) P(r, k) = s.nz(rows[r], pivots[k]).get_d();
    }
    Eigen::VectorXcd sol = P.partialPivLu().solve(rhs);
    for (std::size_t k = 0; k < m; ++k) w[pivots[k]] = sol(k);
    AbelianConnection a;
    for (int i = 0; i < N; ++i) a.basis.push_back(fmt::format("gamma_{}", i));
    for (int i = 0; i < N; ++i) a.basis.push_back(fmt::format("gammap_{}", i));
    for (auto& x : w) a.holonomy.push_back(std::exp(x));
    return a;
}

// ---- brackets and K2

Int poisson_bracket(const oddhom::TwistedCycle& x, const oddhom::TwistedCycle& y, const IntMatrix& eps) {
    return oddhom::intersection(x, y, eps);
}

namespace {

using QMatrix = std::vector<std::vector<mpq_class>>;

QMatrix to_q(const IntMatrix& m) {
    QMatrix q(m.rows(), std::vector<mpq_class>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) q[i][j] = mpq_class(m(i, j));
    return q;
}

std::optional<QMatrix> q_inverse(QMatrix a) {
    const std::size_t n = a.size();
    QMatrix inv(n, std::vector<mpq_class>(n, 0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && a[p][c] == 0) ++p;
        if (p == n) return std::nullopt;
        std::swap(a[p], a[c]);
        std::swap(inv[p], inv[c]);
        mpq_class d = a[c][c];
        for (std::size_t j = 0; j < n; ++j) {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || a[r][c] == 0) continue;
            mpq_class f = a[r][c];
            for (std::size_t j = 0; j < n; ++j) {
                a[r][j] -= f * a[c][j];
                inv[r][j] -= f * inv[c][j];
            }
        }
    }
    return inv;
}

QMatrix q_mul(const QMatrix& a, const QMatrix& b) {
    QMatrix c(a.size(), std::vector<mpq_class>(b.empty() ? 0 : b[0].size(), 0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k) {
            if (a[i][k] == 0) continue;
            for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
        }
    return c;
}

QMatrix q_transpose(const QMatrix& a) {
    QMatrix t(a.empty() ? 0 : a[0].size(), std::vector<mpq_class>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) t[j][i] = a[i][j];
    return t;
}

}  // namespace

std::string FormalWedge::str() const {
    std::string out;
    for (std::size_t k = 0; k < labels.size(); ++k)
        for (std::size_t l = k + 1; l < labels.size(); ++l) {
            const mpq_class& c = coeff[k][l];
            if (c == 0) continue;
            if (!out.empty()) out += c > 0 ? " + " : " - ";
            else if (c < 0) out += "-";
            mpq_class a = abs(c);
            if (a != 1) out += a.get_str() + " ";
            out += labels[k] + " ^ " + labels[l];
        }
    return out.empty() ? "0" : out;
}

bool FormalWedge::operator==(const FormalWedge& o) const {
    if (labels != o.labels) return false;
    for (std::size_t k = 0; k < labels.size(); ++k)
        for (std::size_t l = k + 1; l < labels.size(); ++l)
            if (coeff[k][l] != o.coeff[k][l]) return false;
    return true;
}

FormalWedge k2_form(const std::vector<std::string>& labels, const IntMatrix& eps) {
    if (eps.rows() != labels.size() || eps.cols() != labels.size()) throw BasisMismatch("k2_form: label count");
    auto inv = q_inverse(to_q(eps));
    if (!inv) throw SingularForm("intersection form is not invertible over Q");
    FormalWedge w;
    w.labels = labels;
    w.coeff = *inv;
    for (auto& row : w.coeff)
        for (auto& x : row) x = -x;
    return w;
}

double eta(const FormalWedge& w, const std::vector<cd>& values, const std::vector<cd>& dlog) {
    const std::size_t n = w.labels.size();
    if (values.size() != n || dlog.size() != n) throw BasisMismatch("eta: value count");
    double total = 0;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = k + 1; l < n; ++l) {
            double c = w.coeff[k][l].get_d();
            if (c == 0) continue;
            total += c * (std::log(std::abs(values[k])) * dlog[l].imag() - std::log(std::abs(values[l])) * dlog[k].imag());
        }
    return total;
}

FormalWedge reduce_k2(const gluesys::GluingSystem& s) {
    const int N = s.num_tetrahedra, nc = s.num_cusps;
    const std::size_t n = 2 * N;
    // New basis: cusp rows, independent edge rows, then unit vectors.
    std::vector<Vec> basis;
    std::vector<int> kind;  // 0 cusp, 1 mu, 2 complement
    IntMatrix acc(n, 0);
    auto try_add = [&](const Vec& v, int k) {
        IntMatrix col(n, 1);
        col.set_column(0, v);
        IntMatrix trial = zlat::hstack(acc, col);
        if (zlat::rank(trial) > basis.size()) {
            acc = trial;
            basis.push_back(v);
            kind.push_back(k);
            return true;
        }
        return false;
    };
    for (int r = 0; r < 2 * nc; ++r)
        if (!try_add(s.nz.row(r), 0)) throw InternalInconsistency("cusp rows are dependent");
    for (int e = 0; e < s.num_edges; ++e) try_add(s.nz.row(2 * nc + e), 1);
    for (std::size_t i = 0; i < n && basis.size() < n; ++i) {
        Vec u(n, 0);
        u[i] = 1;
        try_add(u, 2);
    }
    QMatrix P(n, std::vector<mpq_class>(n));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) P[i][k] = mpq_class(basis[k][i]);
    auto Pinv = q_inverse(P);
    if (!Pinv) throw InternalInconsistency("reduction basis is singular");
    // Form of the tetrahedra: sum_i x_gamma_i ^ x_gamma'_i, i.e. w = J.
    QMatrix W(n, std::vector<mpq_class>(n, 0));
    for (int i = 0; i < N; ++i) {
        W[i][N + i] = 1;
        W[N + i][i] = -1;
    }
    QMatrix B = q_mul(q_mul(*Pinv, W), q_transpose(*Pinv));
    FormalWedge out;
    for (int c = 0; c < nc; ++c) out.labels.push_back(fmt::format("x_alpha_{}", c));
    for (int c = 0; c < nc; ++c) out.labels.push_back(fmt::format("x_beta_{}", c));
    out.coeff.assign(2 * nc, std::vector<mpq_class>(2 * nc, 0));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = k + 1; l < n; ++l) {
            if (B[k][l] == 0 || kind[k] == 1 || kind[l] == 1) continue;
            if (kind[k] != 0 || kind[l] != 0)
                throw InternalInconsistency(fmt::format("K2 reduction leaves a term outside the cusp coordinates ({}, {})", k, l));
            out.coeff[k][l] = B[k][l];
            out.coeff[l][k] = -B[k][l];
        }
    return out;
}

}  // namespace gluesym::moduli
