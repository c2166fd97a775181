#include "heatbesov/besov.hpp"
#include "heatbesov/functions.hpp"
#include "heatbesov/quadrature.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace heatbesov;

namespace {

constexpr double kPi = std::numbers::pi;

double arc(double a, double b) {
    const double d = std::abs(a - b);
    return std::min(d, 1.0 - d);
}

GridFn torus_fn(const SpacePtr& sp, double (*g)(double)) {
    std::vector<double> v(sp->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = g(sp->coords(i)[0]);
    return GridFn(sp, v);
}

double sin2pi(double x) { return std::sin(2 * kPi * x); }
double ident(double x) { return x; }
double half(double x) { return x < 0.5 ? 1.0 : 0.0; }

GridFn random_fn(const SpacePtr& sp, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(sp->size());
    for (double& x : v) x = n(gen);
    return GridFn(sp, v);
}

KernelSet kernels_for(const SpacePtr& sp, const BesovParams& prm, std::vector<double> extra = {}) {
    const KernelModel model = sp->kind() == SpaceKind::gasket ? KernelModel::lazy_walk_gasket : KernelModel::gaussian_torus;
    const double dw = sp->walk_dim();
    std::vector<double> times = heat_time_grid(dw, prm.resolved_m_max(*sp), prm.bands_per_decade, prm.t_max);
    times.insert(times.end(), extra.begin(), extra.end());
    std::sort(times.begin(), times.end());
    return KernelSet::make(sp, model, times);
}

// Brute-force i_m on torus1d with arc distances from coordinates.
double brute_i_m_torus(const GridFn& f, int m, double p) {
    const auto& sp = f.space();
    double s = 0.0;
    for (std::size_t i = 0; i < sp.size(); ++i)
        for (std::size_t j = 0; j < sp.size(); ++j)
            if (arc(sp.coords(i)[0], sp.coords(j)[0]) <= std::exp2(-m) + 1e-12)
                s += std::pow(std::abs(f[i] - f[j]), p) * sp.weight(i) * sp.weight(j);
    return s;
}

}  // namespace

TEST_CASE("parameter validation") {
    const auto sp = build_space(SpaceKind::torus1d, 6);
    BesovParams prm;
    CHECK_NOTHROW(prm.validate(*sp));
    CHECK(prm.resolved_m_max(*sp) == 4);
    prm.alpha = 0.0;
    CHECK_THROWS(prm.validate(*sp));
    prm = {};
    prm.p = 0.5;
    CHECK_THROWS(prm.validate(*sp));
    prm = {};
    prm.q = 0.5;
    CHECK_THROWS(prm.validate(*sp));
    prm = {};
    prm.m_max = 7;
    CHECK_THROWS(prm.validate(*sp));
    prm = {};
    prm.bands_per_decade = 0;
    CHECK_THROWS(prm.validate(*sp));
    CHECK(BesovParams{}.resolved_m_max(*build_space(SpaceKind::torus1d, 1)) == 0);
}

TEST_CASE("i_m matches a brute-force double sum for f = x") {
    const auto sp = build_space(SpaceKind::torus1d, 10);
    const GridFn f = torus_fn(sp, ident);
    CHECK(increment_i_m(f, 5, 2.0) == doctest::Approx(brute_i_m_torus(f, 5, 2.0)).epsilon(1e-12));
    CHECK_THROWS(increment_i_m(f, 11, 2.0));
    CHECK_THROWS(increment_i_m(f, -1, 2.0));
}

TEST_CASE("i_m monotone, zero on constants") {
    for (auto kind : {SpaceKind::torus2d, SpaceKind::gasket}) {
        const auto sp = build_space(kind, 4);
        const GridFn f = random_fn(sp, 3);
        const auto prof = increment_profile(f, 1.5);
        for (int m = 0; m < 4; ++m) CHECK(prof.i_m(m + 1) <= prof.i_m(m));
        CHECK(prof.i_m(5) == 0.0);
        const GridFn c(sp, std::vector<double>(sp->size(), 3.0));
        for (int m = 0; m <= 4; ++m) CHECK(increment_i_m(c, m, 2.0) == 0.0);
    }
}

TEST_CASE("shell decomposition adds up to the full double sum") {
    for (auto kind : {SpaceKind::torus1d, SpaceKind::gasket}) {
        const auto sp = build_space(kind, 5);
        const GridFn f = random_fn(sp, 11);
        const double p = 1.7;
        double full = 0.0;
        for (std::size_t i = 0; i < sp->size(); ++i)
            for (std::size_t j = 0; j < sp->size(); ++j)
                full += std::pow(std::abs(f[i] - f[j]), p) * sp->weight(i) * sp->weight(j);
        double shells = 0.0;
        const auto prof = increment_profile(f, p);
        for (int m = 0; m <= sp->level(); ++m) {
            double s = 0.0;
            for (auto [x, y] : shell_pairs(*sp, m)) s += 2.0 * std::pow(std::abs(f[x] - f[y]), p) * sp->weight(x) * sp->weight(y);
            CHECK(prof.shell[m] == doctest::Approx(s).epsilon(1e-12));
            shells += s;
        }
        CHECK(shells == doctest::Approx(full).epsilon(1e-12));
        CHECK(prof.i_m(0) == doctest::Approx(full).epsilon(1e-12));
    }
}

TEST_CASE("jonsson seminorm of sin against direct evaluation") {
    const auto sp = build_space(SpaceKind::torus1d, 10);
    const GridFn f = torus_fn(sp, sin2pi);
    BesovParams prm;  // alpha 0.5, p = q = 2, m_max 8
    const auto b = jonsson_seminorm(f, prm);
    REQUIRE(b.per_m.size() == 9);
    double sum = 0.0;
    for (int m = 0; m <= 8; ++m) {
        const double am = std::pow(2.0, 0.5 * m) * std::sqrt(std::pow(2.0, m) * brute_i_m_torus(f, m, 2.0));
        CHECK(b.per_m[m] == doctest::Approx(am).epsilon(1e-10));
        sum += am * am;
    }
    CHECK(b.total == doctest::Approx(std::sqrt(sum)).epsilon(1e-10));
    // shells at m = 8 hold only 4 lattice steps, so the continuum rate is checked on m = 4..7
    for (int m = 4; m < 7; ++m) CHECK(b.per_m[m + 1] / b.per_m[m] == doctest::Approx(std::pow(2.0, -0.5)).epsilon(0.03));
    CHECK(std::abs(b.recompute_total() - b.total) <= 1e-12 * b.total);
}

TEST_CASE("jonsson scaling and constants") {
    const auto sp = build_space(SpaceKind::gasket, 4);
    const GridFn f = random_fn(sp, 5);
    BesovParams prm;
    prm.p = 3.0;
    prm.q = 1.5;
    const double a = jonsson_seminorm(f, prm).total;
    CHECK(jonsson_seminorm(f.scaled(-2.5), prm).total == doctest::Approx(2.5 * a).epsilon(1e-12));
    const GridFn c(sp, std::vector<double>(sp->size(), -1.0));
    CHECK(jonsson_seminorm(c, prm).total == 0.0);
}

TEST_CASE("q-monotonicity of the sequence norms") {
    const auto sp = build_space(SpaceKind::torus1d, 8);
    const GridFn f = random_fn(sp, 9);
    BesovParams prm;
    prm.alpha = 0.3;
    double prev = HUGE_VAL;
    for (double q : {1.0, 1.5, 2.0, 4.0}) {
        prm.q = q;
        const double v = jonsson_seminorm(f, prm).total;
        CHECK(v <= prev * (1 + 1e-12));
        prev = v;
    }
    prm.q_infinite = true;
    const auto b = jonsson_seminorm(f, prm);
    CHECK(b.total <= prev * (1 + 1e-12));
    CHECK(b.total == *std::max_element(b.per_m.begin(), b.per_m.end()));
}

TEST_CASE("increment energy of sin follows the Fourier identity") {
    const auto sp = build_space(SpaceKind::torus1d, 10);
    const GridFn f = torus_fn(sp, sin2pi);
    BesovParams prm;
    const auto ks = kernels_for(sp, prm);
    const auto E = increment_energy(f, ks, 2.0);
    const double norm2 = 0.5;
    double prev = 0.0;
    for (std::size_t k = 0; k < ks.time_count(); ++k) {
        const double t = ks.times()[k];
        CHECK(E[k] == doctest::Approx(2.0 * (1.0 - std::exp(-2 * kPi * kPi * t)) * norm2).epsilon(1e-4));
        CHECK(E[k] >= prev * (1 - 1e-12));
        prev = E[k];
    }
    // the integrand of each band inherits the same accuracy
    const auto b = heat_functional(f, ks, prm, HeatMode::I_unit);
    for (std::size_t i = 0; i < b.per_m.size(); ++i) {
        double oracle = 0.0;
        for (const TimeNode& nd : band_nodes(2.0, b.index[i], prm.bands_per_decade))
            oracle += nd.weight * std::pow(nd.t, -0.5) * 2.0 * (1.0 - std::exp(-2 * kPi * kPi * nd.t)) * norm2;
        CHECK(b.per_m[i] == doctest::Approx(oracle).epsilon(1e-4));
    }
}

TEST_CASE("heat functionals vanish on constants and need the grid") {
    const auto sp = build_space(SpaceKind::gasket, 4);
    BesovParams prm;
    const auto ks = kernels_for(sp, prm);
    const GridFn c(sp, std::vector<double>(sp->size(), 2.0));
    for (HeatMode m : {HeatMode::I_unit, HeatMode::I_tilde, HeatMode::sup}) CHECK(heat_functional(c, ks, prm, m).total == 0.0);
    CHECK(dirichlet_s(c, ks).total == 0.0);
    const auto short_grid = KernelSet::make(sp, KernelModel::lazy_walk_gasket, {0.01, 0.1});
    CHECK_THROWS(heat_functional(c, short_grid, prm, HeatMode::I_unit));
    prm.q_infinite = true;
    CHECK_THROWS(heat_functional(c, ks, prm, HeatMode::I_unit));
    CHECK_NOTHROW(heat_functional(c, ks, prm, HeatMode::sup));
}

TEST_CASE("recomputed totals agree") {
    const auto sp = build_space(SpaceKind::gasket, 4);
    BesovParams prm;
    prm.q = 1.3;
    const auto ks = kernels_for(sp, prm);
    const GridFn f = random_fn(sp, 21);
    std::vector<SeminormBreakdown> all{jonsson_seminorm(f, prm), heat_functional(f, ks, prm, HeatMode::I_unit),
                                       heat_functional(f, ks, prm, HeatMode::I_tilde), heat_functional(f, ks, prm, HeatMode::sup),
                                       dirichlet_s(f, ks), strichartz_seminorm(f, prm)};
    for (const auto& b : all) CHECK(std::abs(b.recompute_total() - b.total) <= 1e-12 * std::max(1.0, b.total));
}

TEST_CASE("tail of the tilde functional is bounded by the Lp norm") {
    const auto sp = build_space(SpaceKind::torus1d, 7);
    BesovParams prm;
    prm.p = 1.5;
    prm.q = 3.0;
    prm.t_max = 16.0;
    const auto ks = kernels_for(sp, prm);
    for (unsigned seed : {1u, 2u, 3u}) {
        const GridFn f = random_fn(sp, seed);
        const auto b = heat_functional(f, ks, prm, HeatMode::I_tilde);
        double tail = 0.0;
        for (std::size_t i = 0; i < b.index.size(); ++i)
            if (b.index[i] < 0) tail += b.per_m[i];
        const double cap = std::pow(std::pow(2.0, prm.p) * std::pow(f.lp_norm(prm.p), prm.p), prm.q / prm.p);
        double quad = 0.0;
        for (const TimeNode& nd : tail_nodes(2.0, prm.t_max, prm.bands_per_decade))
            quad += nd.weight * std::pow(nd.t, -prm.alpha * prm.q / 2.0);
        CHECK(tail > 0.0);
        CHECK(tail <= cap * quad);
        const auto unit = heat_functional(f, ks, prm, HeatMode::I_unit);
        CHECK(b.total == doctest::Approx(unit.total + tail).epsilon(1e-12));
    }
}

TEST_CASE("sup mode is monotone in alpha up to the t_max factor") {
    const auto sp = build_space(SpaceKind::gasket, 4);
    BesovParams prm;
    prm.t_max = 8.0;
    const auto ks = kernels_for(sp, prm, {8.0});
    const double tmax = ks.times().back();
    const GridFn f = random_fn(sp, 4);
    const double dw = ks.walk_dim();
    for (double a : {0.2, 0.6, 1.0}) {
        BesovParams hi = prm, lo = prm;
        hi.alpha = a;
        lo.alpha = 0.5 * a;
        const double s_hi = heat_functional(f, ks, hi, HeatMode::sup).total;
        const double s_lo = heat_functional(f, ks, lo, HeatMode::sup).total;
        CHECK(s_lo <= std::pow(tmax, prm.p * (hi.alpha - lo.alpha) / dw) * s_hi * (1 + 1e-12));
    }
}

TEST_CASE("dirichlet form of sin") {
    const auto sp = build_space(SpaceKind::torus1d, 10);
    const GridFn f = torus_fn(sp, sin2pi);
    const auto ks = KernelSet::make(sp, KernelModel::gaussian_torus, {1e-4, 1e-3, 1e-2, 0.1});
    const auto s = dirichlet_s(f, ks);
    CHECK(s.total == doctest::Approx(2 * kPi * kPi * 0.5).epsilon(0.05));
    BesovParams prm;
    prm.alpha = 1.0;  // p alpha / dw = 1
    CHECK(s.total == doctest::Approx(0.5 * heat_functional(f, ks, prm, HeatMode::sup).total).epsilon(1e-12));
}

TEST_CASE("singular seminorm against brute force") {
    const auto sp = build_space(SpaceKind::torus1d, 8);
    const GridFn f = torus_fn(sp, half);
    double s = 0.0;
    for (std::size_t i = 0; i < sp->size(); ++i)
        for (std::size_t j = 0; j < sp->size(); ++j) {
            if (i == j) continue;
            const double d = arc(sp->coords(i)[0], sp->coords(j)[0]);
            s += std::pow(std::abs(f[i] - f[j]), 2.0) / std::pow(d, 1.0 + 2.0 * 0.25) * sp->weight(i) * sp->weight(j);
        }
    CHECK(singular_seminorm(f, 0.25, 2.0) == doctest::Approx(s).epsilon(1e-12));
    CHECK(singular_seminorm(GridFn(sp, std::vector<double>(sp->size(), 1.0)), 0.25, 2.0) == 0.0);
    CHECK_THROWS(singular_seminorm(f, 0.0, 2.0));
}

TEST_CASE("singular and jonsson seminorms are comparable") {
    std::vector<double> ratios;
    BesovParams prm;
    prm.alpha = 0.3;
    prm.p = prm.q = 2.0;
    for (int L : {6, 8}) {
        const auto sp = build_space(SpaceKind::torus1d, L);
        prm.m_max = L;
        for (const GridFn& f : {torus_fn(sp, sin2pi), torus_fn(sp, half), torus_fn(sp, ident)}) {
            const double j = std::pow(jonsson_seminorm(f, prm).total, 2.0);
            ratios.push_back(singular_seminorm(f, prm.alpha, prm.p) / j);
        }
    }
    CHECK(band_width(ratios) < 4.0);
}

TEST_CASE("strichartz seminorm") {
    const auto sp = build_space(SpaceKind::gasket, 5);
    const GridFn f = random_fn(sp, 8);
    BesovParams prm;
    prm.alpha = 0.4;
    prm.p = 3.0;
    prm.q = 2.0;
    prm.m_max = 5;
    const double d = sp->hausdorff_dim(), dw = sp->walk_dim();
    const auto b = strichartz_seminorm(f, prm);
    REQUIRE(b.per_m.size() == 6);
    double total = 0.0;
    for (int m = 0; m <= 5; ++m) {
        const auto& edges = sp->level_edges(m);
        CHECK(edges.size() == static_cast<std::size_t>(std::lround(std::pow(3.0, m + 1))));
        double s = 0.0;
        for (const Edge& e : edges) s += std::pow(std::abs(f[e.u] - f[e.v]), prm.p);
        const double delta = std::pow(std::pow(2.0, -m * d) * s, 1.0 / prm.p);
        const double term = std::pow(std::pow(2.0, dw - d), m * prm.alpha) * delta;
        CHECK(b.per_m[m] == doctest::Approx(term).epsilon(1e-12));
        total += term * term;
    }
    CHECK(b.total == doctest::Approx(std::sqrt(total)).epsilon(1e-12));
    CHECK(strichartz_seminorm(GridFn(sp, std::vector<double>(sp->size(), 4.0)), prm).total == 0.0);
    const auto t = build_space(SpaceKind::torus1d, 5);
    CHECK_THROWS(strichartz_seminorm(random_fn(t, 1), prm));
}

TEST_CASE("equivalence reports") {
    const auto sp = build_space(SpaceKind::torus1d, 7);
    BesovParams prm;
    const auto ks = kernels_for(sp, prm);
    const FunctionalSpec heat{Functional::heat_I, std::nullopt};
    const FunctionalSpec jon{Functional::jonsson, std::nullopt};
    const GridFn c(sp, std::vector<double>(sp->size(), 2.0));
    const auto rc = equivalence_report(c, &ks, prm, heat, jon);
    CHECK(rc.lhs == doctest::Approx(2.0));
    CHECK(rc.rhs == doctest::Approx(2.0));
    CHECK(rc.ratio == doctest::Approx(1.0));
    const GridFn f = torus_fn(sp, sin2pi);
    const auto r1 = equivalence_report(f, &ks, prm, heat, jon);
    const auto r2 = equivalence_report(f.scaled(7.0), &ks, prm, heat, jon);
    CHECK(r2.ratio == doctest::Approx(r1.ratio).epsilon(1e-12));
    CHECK(r1.ratio == doctest::Approx(r1.lhs / r1.rhs));
    REQUIRE(r1.per_level.size() == 1);
    CHECK(r1.per_level[0].level == 7);
    const GridFn zero(sp, std::vector<double>(sp->size(), 0.0));
    CHECK(equivalence_report(zero, &ks, prm, heat, jon).ratio == 1.0);
    CHECK_THROWS_AS(make_equivalence("a", "b", 1.0, 0.0, 3), degenerate_comparison);
    CHECK_THROWS(equivalence_report(f, nullptr, prm, heat, jon));
    CHECK(functional_norm(f, nullptr, prm, jon) ==
          doctest::Approx(f.lp_norm(2.0) + jonsson_seminorm(f, prm).total).epsilon(1e-12));
    CHECK(parse_functional("heat_I_tilde") == Functional::heat_I_tilde);
    CHECK_THROWS(parse_functional("besov"));
}

TEST_CASE("band width") {
    const std::vector<double> r{1.0, 2.0, 4.0};
    CHECK(band_width(r) == doctest::Approx(4.0));
    const std::vector<double> one{3.0};
    CHECK(band_width(one) == 1.0);
}

TEST_CASE("near-diagonal lower bound holds for random functions") {
    for (auto kind : {SpaceKind::torus1d, SpaceKind::gasket}) {
        const auto sp = build_space(kind, kind == SpaceKind::gasket ? 4 : 8);
        BesovParams prm;
        prm.q = 1.5;
        prm.p = 2.5;
        const auto ks = kernels_for(sp, prm);
        const int mm = prm.resolved_m_max(*sp);
        const double c = near_diagonal_constant(ks, mm, prm.bands_per_decade);
        REQUIRE(c > 0.0);
        const double d = sp->hausdorff_dim(), dw = sp->walk_dim();
        for (unsigned seed = 1; seed <= 5; ++seed) {
            const GridFn f = random_fn(sp, seed);
            BesovParams wide = prm;
            wide.m_max = std::min(mm + 1, sp->level());
            const auto a = jonsson_seminorm(f, wide);
            double sum = 0.0;
            for (int m = 1; m <= mm + 1 && m < static_cast<int>(a.per_m.size()); ++m) sum += std::pow(a.per_m[m], prm.q);
            const double bound = dw * std::log(2.0) * std::pow(c, prm.q / prm.p) *
                                 std::pow(2.0, -prm.q * (prm.alpha + d / prm.p)) * sum;
            CHECK(heat_functional(f, ks, prm, HeatMode::I_unit).total >= bound);
        }
    }
}

TEST_CASE("degeneracy scan") {
    BesovParams prm;
    const std::vector<double> alphas{0.3};
    const std::vector<int> tl{6, 7, 8, 9, 10};
    const auto smooth = degeneracy_scan("fourier", [](const SpacePtr& sp) { return torus_fn(sp, sin2pi); },
                                        SpaceKind::torus1d, tl, alphas, prm);
    REQUIRE(smooth.signals.size() == 1);
    CHECK(smooth.signals[0].growth_exponent <= 0.0);
    CHECK_FALSE(smooth.signals[0].degenerate_signal);

    const double dw = std::log(5.0) / std::log(2.0);
    const std::vector<double> ga{dw / 2 + 0.3};
    const std::vector<int> gl{4, 5, 6, 7};
    auto harmonic = [](const SpacePtr& sp) { return GridFn(sp, gasket_harmonic(*sp, {1.0, 0.0, 0.0})); };
    const auto g = degeneracy_scan("harmonic", harmonic, SpaceKind::gasket, gl, ga, prm);
    CHECK(g.signals[0].growth_exponent > 0.0);
    CHECK(g.signals[0].degenerate_signal);
    CHECK(g.rows.size() == gl.size());

    auto constant = [](const SpacePtr& sp) { return GridFn(sp, std::vector<double>(sp->size(), 1.0)); };
    const auto c = degeneracy_scan("constant", constant, SpaceKind::gasket, gl, ga, prm);
    for (const auto& r : c.rows) CHECK(r.seminorm == 0.0);
    CHECK_FALSE(c.signals[0].degenerate_signal);

    BesovParams p3 = prm;
    p3.p = 3.0;
    CHECK_THROWS(degeneracy_scan("constant", constant, SpaceKind::gasket, gl, ga, p3));
}

TEST_CASE("serializers") {
    const auto sp = build_space(SpaceKind::torus1d, 5);
    const auto b = jonsson_seminorm(torus_fn(sp, sin2pi), BesovParams{});
    CHECK(breakdown_json(b).find("\"jonsson\"") != std::string::npos);
    const std::string csv = breakdown_csv(b);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(b.per_m.size()) + 1);
    const auto r = make_equivalence("l", "r", 2.0, 1.0, 5);
    CHECK(r.ratio == 2.0);
    CHECK(equivalence_csv(r).find("level") != std::string::npos);
    CHECK(equivalence_json(r).find("\"ratio\"") != std::string::npos);
}
