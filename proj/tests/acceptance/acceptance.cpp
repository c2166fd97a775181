// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "heatbesov/besov.hpp"
#include "heatbesov/experiment.hpp"
#include "heatbesov/functions.hpp"
#include "heatbesov/hardy.hpp"
#include "heatbesov/io.hpp"
#include "heatbesov/kernel.hpp"
#include "heatbesov/quadrature.hpp"
#include "heatbesov/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace heatbesov;

namespace {

const double kD = std::log(3.0) / std::log(2.0);
const double kDw = std::log(5.0) / std::log(2.0);

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

FunctionSpec fam(std::string family) {
    FunctionSpec s;
    s.family = std::move(family);
    return s;
}

std::vector<FunctionSpec> torus_suite() {
    FunctionSpec fourier = fam("fourier-mode");
    FunctionSpec cell = fam("cell-indicator");
    FunctionSpec rh = fam("random-hoelder");
    rh.h = 0.6;
    rh.seed = 7;
    return {fourier, cell, rh, fam("linear")};
}

std::vector<FunctionSpec> gasket_suite() {
    FunctionSpec cell = fam("cell-indicator");
    FunctionSpec rh = fam("random-hoelder");
    rh.h = 0.6;
    rh.seed = 7;
    return {fam("gasket-harmonic"), cell, rh, fam("linear")};
}

BesovParams params(double alpha, double q, bool q_inf = false) {
    BesovParams P;
    P.alpha = alpha;
    P.p = 2.0;
    P.q = q;
    P.q_infinite = q_inf;
    return P;
}

KernelSet natural_kernel(const SpacePtr& sp, const BesovParams& P) {
    const KernelModel model = sp->kind() == SpaceKind::gasket ? KernelModel::lazy_walk_gasket : KernelModel::gaussian_torus;
    return KernelSet::make(sp, model, heat_time_grid(sp->walk_dim(), P.resolved_m_max(*sp), P.bands_per_decade, P.t_max));
}

// Heat-side functionals for one space family, evaluated once per level and reused
// by the finite-q, sup and lower-bound criteria.
struct LevelEval {
    int level = 0;
    std::string function;
    std::vector<double> energy;  // E(t) on the kernel grid, p = 2
    IncrementProfile profile;
    double lp = 0.0;
};

struct SpaceRun {
    SpaceKind kind;
    std::vector<int> levels;
    std::vector<LevelEval> evals;
    std::map<int, double> c_near;  // per level
    std::map<int, std::shared_ptr<KernelSet>> kernels;
};

SpaceRun evaluate(SpaceKind kind, std::vector<int> levels, const std::vector<FunctionSpec>& suite) {
    SpaceRun run{kind, levels, {}, {}, {}};
    const BesovParams base = params(0.5, 2.0);
    for (int L : levels) {
        const SpacePtr sp = build_space(kind, L);
        auto ks = std::make_shared<KernelSet>(natural_kernel(sp, base));
        run.kernels[L] = ks;
        run.c_near[L] = near_diagonal_constant(*ks, base.resolved_m_max(*sp), base.bands_per_decade);
        for (const FunctionSpec& fs : suite) {
            const GridFn f = load_function(sp, fs);
            run.evals.push_back({L, fs.label(), increment_energy(f, *ks, 2.0), increment_profile(f, 2.0), f.lp_norm(2.0)});
        }
    }
    return run;
}

// (||f||_2 + heat^(1/q or 1/p)) / (||f||_2 + jonsson) for every function and level.
std::vector<double> heat_ratios(const SpaceRun& run, const BesovParams& P, HeatMode mode) {
    std::vector<double> out;
    for (const LevelEval& e : run.evals) {
        const KernelSet& ks = *run.kernels.at(e.level);
        const SeminormBreakdown h = heat_from_energy(ks, e.energy, P, mode);
        const SeminormBreakdown j = jonsson_from_profile(e.profile, ks.space().hausdorff_dim(), P, P.resolved_m_max(ks.space()));
        out.push_back((e.lp + homogeneous_value(h, P)) / (e.lp + j.total));
    }
    return out;
}

std::string range_of(const std::vector<double>& r) {
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    return "[" + fmt(*lo) + ", " + fmt(*hi) + "] width " + fmt(*hi / *lo);
}

bool same_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    return slurp(a) == slurp(b);
}

}  // namespace

int main() {
    criterion(1, "kernel axioms on gasket L6 and torus1d L10", [] {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        for (auto [kind, level] : {std::pair{SpaceKind::gasket, 6}, std::pair{SpaceKind::torus1d, 10}}) {
            const SpacePtr sp = build_space(kind, level);
            const double unit = std::exp2(-level * sp->walk_dim());
            const KernelModel model = kind == SpaceKind::gasket ? KernelModel::lazy_walk_gasket : KernelModel::gaussian_torus;
            const KernelSet ks = KernelSet::make(sp, model, {16 * unit, 32 * unit, 48 * unit});
            const AxiomReport r = check_axioms(ks, 0, 1);
            ok = ok && r.symmetry_err <= 1e-12 && r.stochasticity_err <= 1e-10 && r.chapman_err <= 1e-8;
            detail += std::string(to_string(kind)) + " n=" + std::to_string(sp->size()) + " sym " + fmt(r.symmetry_err, 2) +
                      " sto " + fmt(r.stochasticity_err, 2) + " ck " + fmt(r.chapman_err, 2) + "; ";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return Outcome{ok && secs < 60.0, detail + "runtime " + fmt(secs, 3) + " s"};
    });

    criterion(2, "walk-dimension constants", [] {
        const SpacePtr sp = build_space(SpaceKind::gasket, 2);
        const double d = sp->hausdorff_dim(), dw = sp->walk_dim();
        const double a = d / 2.0 + 1.0 / (dw - d);
        const double b = (dw - d) * dw / 2.0;
        const bool ok = std::abs(dw - 2.3219281) < 5e-8 && std::abs(d - 1.5849625) < 5e-8 && std::abs(a - 2.14939665) < 5e-7;
        return Outcome{ok, "d_w=" + fmt(dw, 9) + " d=" + fmt(d, 9) + " d/2+1/(d_w-d)=" + fmt(a, 10) +
                               " (d_w-d)d_w/2=" + fmt(b, 6) + " vs reference value 0.920042, difference " + fmt(0.920042 - b, 4)};
    });

    const auto t_torus = std::chrono::steady_clock::now();
    const SpaceRun torus = evaluate(SpaceKind::torus1d, {7, 8, 9, 10}, torus_suite());
    const double torus_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_torus).count();
    const auto t_gasket = std::chrono::steady_clock::now();
    const SpaceRun gasket = evaluate(SpaceKind::gasket, {4, 5, 6}, gasket_suite());
    const double gasket_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_gasket).count();

    criterion(3, "heat-integral equivalence, finite q", [&] {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        for (const BesovParams& P : {params(0.5, 2.0), params(0.3, 1.0)}) {
            const auto r = heat_ratios(torus, P, HeatMode::I_unit);
            ok = ok && band_width(r) <= 4.0;
            detail += "torus (" + fmt(P.alpha) + ",2," + fmt(P.q) + ") " + range_of(r) + "; ";
        }
        for (const BesovParams& P : {params(0.5, 2.0), params(0.5, 1.0)}) {
            const auto r = heat_ratios(gasket, P, HeatMode::I_unit);
            ok = ok && band_width(r) <= 6.0;
            detail += "gasket (" + fmt(P.alpha) + ",2," + fmt(P.q) + ") " + range_of(r) + "; ";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() + torus_secs + gasket_secs;
        return Outcome{ok && secs < 600.0, detail + "runtime incl. kernels " + fmt(secs, 3) + " s"};
    });

    criterion(4, "heat sup functional, q = inf", [&] {
        std::string detail;
        bool ok = true;
        for (double alpha : {0.5, 0.3}) {
            const auto r = heat_ratios(torus, params(alpha, 2.0, true), HeatMode::sup);
            ok = ok && band_width(r) <= 4.0;
            detail += "torus alpha " + fmt(alpha) + " " + range_of(r) + "; ";
        }
        const auto r = heat_ratios(gasket, params(0.5, 2.0, true), HeatMode::sup);
        ok = ok && band_width(r) <= 6.0;
        detail += "gasket alpha 0.5 " + range_of(r);
        return Outcome{ok, detail};
    });

    criterion(5, "lower-bound direction", [&] {
        std::string detail;
        bool ok = true;
        for (const SpaceRun* run : {&torus, &gasket}) {
            for (const BesovParams& P : {params(0.5, 2.0), params(0.3, 1.0)}) {
                // a priori constant from the kernel alone, smallest over levels
                double c = HUGE_VAL;
                for (const auto& [L, cn] : run->c_near) {
                    c = std::min(c, run->kernels.at(L)->walk_dim() * std::numbers::ln2 * std::pow(cn, P.q / P.p) *
                                        std::pow(2.0, -P.q * (P.alpha + run->kernels.at(L)->space().hausdorff_dim() / P.p)));
                }
                int violations = 0;
                double literal_min = HUGE_VAL, literal_max = 0.0;
                for (const LevelEval& e : run->evals) {
                    const KernelSet& ks = *run->kernels.at(e.level);
                    const int m_max = P.resolved_m_max(ks.space());
                    const double I = heat_from_energy(ks, e.energy, P, HeatMode::I_unit).total;
                    const SeminormBreakdown a = jonsson_from_profile(e.profile, ks.space().hausdorff_dim(), P, m_max + 1);
                    double shifted = 0.0, literal = 0.0;
                    for (int m = 0; m <= m_max + 1; ++m) {
                        const double am = std::pow(a.per_m[static_cast<std::size_t>(m)], P.q);
                        if (m >= 1) shifted += am;
                        if (m <= m_max) literal += am;
                    }
                    if (c * shifted > I * (1.0 + 1e-12)) ++violations;
                    if (literal > 0.0) {
                        literal_min = std::min(literal_min, I / literal);
                        literal_max = std::max(literal_max, I / literal);
                    }
                }
                ok = ok && c > 0.0 && violations == 0;
                detail += std::string(to_string(run->kind)) + " (" + fmt(P.alpha) + "," + fmt(P.q) + ") c=" + fmt(c) +
                          " violations " + std::to_string(violations) + ", I/sum a_m^q in [" + fmt(literal_min) + ", " +
                          fmt(literal_max) + "]; ";
            }
        }
        return Outcome{ok, detail};
    });

    criterion(6, "discrete Hardy inequalities", [] {
        const auto t0 = std::chrono::steady_clock::now();
        const double kappa = std::pow(2.0, kDw / (kDw - 1.0));
        double worst_ratio = 0.0;
        bool finite = true;
        std::string worst;
        for (HardyForm form : {HardyForm::classical, HardyForm::modified}) {
            for (double r : {0.5, 1.0, 2.0}) {
                for (double t : {2.0, 4.0}) {
                    std::map<int, double> k;
                    for (int M : {500, 1000, 2000}) {
                        const HardyTrialSummary s = run_hardy_trials(form, HardyParams{r, t, kappa, 1.0, M}, 1000, 1);
                        k[M] = s.max_k;
                        finite = finite && std::isfinite(s.max_k);
                    }
                    const double ratio = k[2000] / k[500];
                    if (ratio > worst_ratio) {
                        worst_ratio = ratio;
                        worst = std::string(form == HardyForm::classical ? "classical" : "modified") + " r=" + fmt(r) +
                                " t=" + fmt(t) + " K500=" + fmt(k[500]) + " K2000=" + fmt(k[2000]);
                    }
                }
            }
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return Outcome{finite && worst_ratio < 1.2 && secs < 120.0,
                       "largest K(2000)/K(500) " + fmt(worst_ratio) + " at " + worst + ", runtime " + fmt(secs, 3) + " s"};
    });

    criterion(7, "exponential-sum bounds", [] {
        std::vector<double> grid(200);
        for (int i = 0; i < 200; ++i) grid[static_cast<std::size_t>(i)] = 1e-4 * std::pow(1e4, i / 199.0);
        grid.back() = 1.0;
        struct Tuple {
            double C, alpha, beta, gamma;
        };
        // the third tuple is the sub-Gaussian gasket case: t^(1/dw) scaling, exponent dw/(dw-1)
        const std::vector<Tuple> tuples{{1.0, 1.0, 0.5, 2.0}, {2.0, 0.5, 1.0, 1.0}, {1.0, kD, 1.0 / kDw, kDw / (kDw - 1.0)}};
        bool ok = true;
        std::string detail;
        for (const Tuple& tp : tuples) {
            const LemmaSumTable tab = lemma_sum_bounds(tp.C, tp.alpha, tp.beta, tp.gamma, grid);
            const double spread = tab.k2_hat / tab.k1_hat;
            ok = ok && spread < 10.0;
            detail += "(" + fmt(tp.C) + "," + fmt(tp.alpha) + "," + fmt(tp.beta) + "," + fmt(tp.gamma) + ") K2/K1=" + fmt(spread) + "; ";
        }
        return Outcome{ok, detail};
    });

    criterion(8, "C_beta closed form", [] {
        double worst = std::abs(c_beta(1.0) / (2.0 * std::sqrt(std::numbers::pi)) - 1.0);
        const double at_one = worst;
        for (int i = 0; i < 20; ++i) {
            const double beta = 0.05 + 0.1 * i;
            const double exact = std::tgamma(1.0 - beta / 2.0) / (beta / 2.0);
            worst = std::max(worst, std::abs(c_beta(beta) / exact - 1.0));
        }
        return Outcome{worst <= 1e-6, "rel err at beta=1 " + fmt(at_one, 2) + ", worst over grid " + fmt(worst, 2)};
    });

    criterion(9, "spectral identity on torus1d L9, beta = 1", [] {
        const SpacePtr sp = build_space(SpaceKind::torus1d, 9);
        BesovParams base = params(0.5, 2.0);
        base.m_max = 9;
        base.t_max = 1e4;
        const KernelSet ks = natural_kernel(sp, base);
        const Spectrum spec = compute_spectrum(ks);
        FunctionSpec k2 = fam("fourier-mode");
        k2.k = 2;
        FunctionSpec rh = fam("random-hoelder");
        rh.h = 0.6;
        rh.seed = 7;
        const std::vector<FunctionSpec> suite{fam("fourier-mode"), k2, fam("cell-indicator"), rh, fam("linear")};
        bool ok = true;
        std::string detail;
        double single = 0.0;
        for (const FunctionSpec& fs : suite) {
            const EquivalenceReport r = lip_vs_spectral_report(load_function(sp, fs), ks, spec, 1.0, base);
            ok = ok && r.ratio >= 0.9 && r.ratio <= 1.1;
            if (fs.family == "fourier-mode" && fs.k == 1) single = r.ratio;
            detail += fs.label() + " " + fmt(r.ratio, 5) + "; ";
        }
        ok = ok && std::abs(single - 1.0) <= 0.02;
        return Outcome{ok, detail + "single mode deviation " + fmt(std::abs(single - 1.0), 3)};
    });

    criterion(10, "degeneracy signal on gasket L4..7", [] {
        const std::vector<int> levels{4, 5, 6, 7};
        const double hi = kDw / 2.0 + 0.3;
        const std::vector<double> alphas{0.4, hi};
        bool ok = true;
        std::string detail;
        for (const FunctionSpec& fs : gasket_suite()) {
            const FunctionFactory make = [fs](const SpacePtr& sp) { return load_function(sp, fs); };
            const DegeneracyReport rep = degeneracy_scan(fs.label(), make, SpaceKind::gasket, levels, alphas, params(0.5, 2.0));
            const DegeneracySignal& low = rep.signals[0];
            const DegeneracySignal& high = rep.signals[1];
            ok = ok && high.growth_exponent > 0.0 && high.min_step_ratio >= 1.5;
            if (fs.family == "gasket-harmonic") ok = ok && low.growth_exponent <= 0.0;
            detail += fs.family + " g(hi)=" + fmt(high.growth_exponent, 3) + " step>=" + fmt(high.min_step_ratio, 3) +
                      " g(0.4)=" + fmt(low.growth_exponent, 3) + "; ";
        }
        FunctionSpec c = fam("constant");
        const FunctionFactory make = [c](const SpacePtr& sp) { return load_function(sp, c); };
        const DegeneracyReport rep = degeneracy_scan("constant", make, SpaceKind::gasket, levels, alphas, params(0.5, 2.0));
        ok = ok && !rep.signals[0].degenerate_signal && !rep.signals[1].degenerate_signal;
        return Outcome{ok, detail + "constant never flagged"};
    });

    criterion(11, "edge-difference seminorm vs increment seminorm", [] {
        const double gap = kDw - kD;
        std::vector<double> ratios;
        const BesovParams P = params(0.5, 2.0);
        for (int L : {4, 5, 6}) {
            const SpacePtr sp = build_space(SpaceKind::gasket, L);
            for (const FunctionSpec& fs : gasket_suite()) {
                const GridFn f = load_function(sp, fs);
                const EquivalenceReport r = equivalence_report(f, nullptr, P, FunctionalSpec{Functional::strichartz, 0.5 * gap},
                                                               FunctionalSpec{Functional::jonsson, std::nullopt});
                ratios.push_back(r.ratio);
            }
        }
        return Outcome{band_width(ratios) <= 6.0, "ratios " + range_of(ratios)};
    });

    criterion(12, "byte-identical CSV on re-run", [] {
        ExperimentConfig c = parse_config(R"({
          "space": {"kind": "torus1d", "level": 7},
          "levels": [6, 7],
          "functions": [{"family": "random-hoelder", "h": 0.6}, {"family": "fourier-mode", "k": 1},
                        {"family": "cell-indicator"}],
          "params": [{"alpha": 0.5, "p": 2, "q": 2}],
          "seed": 11,
          "hardy": {"r": [0.5, 2], "t": [2], "M": [100, 200], "trials": 20},
          "degeneracy": {"alphas": [0.4, 1.3]},
          "spectral": {"beta": 1}
        })");
        const auto root = std::filesystem::temp_directory_path() / "heatbesov_acceptance_determinism";
        std::filesystem::remove_all(root);
        std::size_t compared = 0;
        std::vector<std::string> differing;
        for (Command cmd : {Command::space_report, Command::kernel_check, Command::norm, Command::equiv, Command::hardy,
                            Command::lemma_sum, Command::degeneracy, Command::spectral}) {
            const auto a = root / "a" / std::string(to_string(cmd));
            const auto b = root / "b" / std::string(to_string(cmd));
            const RunResult ra = run(c, cmd, a);
            const RunResult rb = run(c, cmd, b);
            if (ra.status == 1 || rb.status == 1) differing.push_back(std::string(to_string(cmd)) + " failed: " + ra.message);
            for (const auto& f : ra.files) {
                if (f.extension() != ".csv") continue;
                ++compared;
                if (!same_bytes(f, b / f.filename())) differing.push_back(f.filename().string());
            }
        }
        std::filesystem::remove_all(root);
        std::string detail = std::to_string(compared) + " CSV files compared";
        for (const auto& d : differing) detail += "; differs: " + d;
        return Outcome{differing.empty() && compared > 0, detail};
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
