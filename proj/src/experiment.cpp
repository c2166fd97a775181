#include "heatbesov/experiment.hpp"

#include "heatbesov/hardy.hpp"
#include "heatbesov/io.hpp"
#include "heatbesov/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

namespace heatbesov {

using nlohmann::json;

namespace {

// ---- config reading -------------------------------------------------------

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at_index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw config_error(path + ": " + what); }

void check_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
            fail(join(path, it.key()), "unknown field");
        }
    }
}

double as_double(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
}

int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    const auto x = v.get<long long>();
    if (x < -1000000000LL || x > 1000000000LL) fail(path, "integer out of range");
    return static_cast<int>(x);
}

std::uint64_t as_u64(const json& v, const std::string& path) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        fail(path, "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
}

bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) fail(path, "expected true or false");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

template <class T, class F>
std::vector<T> as_list(const json& v, const std::string& path, F&& item, bool allow_empty = false) {
    if (!v.is_array()) fail(path, "expected an array");
    if (v.empty() && !allow_empty) fail(path, "must not be empty");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(item(v[i], at_index(path, i)));
    return out;
}

template <class F>
auto parse_enum(const json& v, const std::string& path, F&& parse) {
    const std::string s = as_string(v, path);
    try {
        return parse(s);
    } catch (const std::invalid_argument&) {
        fail(path, "unknown value '" + s + "'");
    }
}

KernelModel parse_model(const std::string& s) { return parse_kernel_model(s); }

std::string_view to_string(GeneratorForm f) { return f == GeneratorForm::difference ? "difference" : "logarithm"; }
GeneratorForm parse_form(const std::string& s) {
    if (s == "difference") return GeneratorForm::difference;
    if (s == "logarithm") return GeneratorForm::logarithm;
    throw std::invalid_argument(s);
}
std::string_view to_string(TauPolicy t) { return t == TauPolicy::smallest_resolved ? "smallest_resolved" : "smallest_grid"; }
TauPolicy parse_tau(const std::string& s) {
    if (s == "smallest_resolved") return TauPolicy::smallest_resolved;
    if (s == "smallest_grid") return TauPolicy::smallest_grid;
    throw std::invalid_argument(s);
}
std::string_view to_string(HardyForm f) { return f == HardyForm::classical ? "classical" : "modified"; }
HardyForm parse_hardy_form(const std::string& s) {
    if (s == "classical") return HardyForm::classical;
    if (s == "modified") return HardyForm::modified;
    throw std::invalid_argument(s);
}

const std::set<std::string>& known_families() {
    static const std::set<std::string> f{"constant",        "linear",         "fourier-mode", "cell-indicator",
                                         "gasket-harmonic", "random-hoelder", "csv"};
    return f;
}

FunctionEntry read_function(const json& j, const std::string& path) {
    check_object(j, path, {"family", "c", "k", "cell_level", "cell_index", "boundary", "h", "sigma", "seed", "path"});
    FunctionEntry e;
    if (!j.contains("family")) fail(join(path, "family"), "missing");
    e.spec.family = as_string(j["family"], join(path, "family"));
    if (!known_families().count(e.spec.family)) fail(join(path, "family"), "unknown family '" + e.spec.family + "'");
    if (j.contains("c")) e.spec.c = as_double(j["c"], join(path, "c"));
    if (j.contains("k")) e.spec.k = as_int(j["k"], join(path, "k"));
    if (j.contains("cell_level")) e.spec.cell_level = as_int(j["cell_level"], join(path, "cell_level"));
    if (j.contains("cell_index")) e.spec.cell_index = as_int(j["cell_index"], join(path, "cell_index"));
    if (j.contains("boundary")) {
        const auto b = as_list<double>(j["boundary"], join(path, "boundary"), as_double);
        if (b.size() != 3) fail(join(path, "boundary"), "expected three corner values");
        e.spec.boundary = {b[0], b[1], b[2]};
    }
    if (j.contains("h")) e.spec.h = as_double(j["h"], join(path, "h"));
    if (j.contains("sigma")) e.spec.sigma = as_double(j["sigma"], join(path, "sigma"));
    if (j.contains("seed")) {
        e.spec.seed = as_u64(j["seed"], join(path, "seed"));
        e.explicit_seed = true;
    }
    if (j.contains("path")) e.spec.path = as_string(j["path"], join(path, "path"));
    if (e.spec.family == "csv" && e.spec.path.empty()) fail(join(path, "path"), "required for the csv family");
    if (e.spec.family == "random-hoelder" && !(e.spec.h > 0.0)) fail(join(path, "h"), "must be positive");
    return e;
}

BesovParams read_params(const json& j, const std::string& path) {
    check_object(j, path, {"alpha", "p", "q", "m_max", "bands_per_decade", "t_max"});
    BesovParams P;
    if (j.contains("alpha")) P.alpha = as_double(j["alpha"], join(path, "alpha"));
    if (j.contains("p")) P.p = as_double(j["p"], join(path, "p"));
    if (j.contains("q")) {
        const json& q = j["q"];
        if (q.is_string()) {
            if (q.get<std::string>() != "inf") fail(join(path, "q"), "expected a number or \"inf\"");
            P.q_infinite = true;
        } else {
            P.q = as_double(q, join(path, "q"));
        }
    }
    if (j.contains("m_max")) P.m_max = as_int(j["m_max"], join(path, "m_max"));
    if (j.contains("bands_per_decade")) P.bands_per_decade = as_int(j["bands_per_decade"], join(path, "bands_per_decade"));
    if (j.contains("t_max")) P.t_max = as_double(j["t_max"], join(path, "t_max"));
    if (!(P.alpha > 0.0)) fail(join(path, "alpha"), "must be positive");
    if (!(P.p >= 1.0)) fail(join(path, "p"), "must be >= 1");
    if (!P.q_infinite && !(P.q >= 1.0)) fail(join(path, "q"), "must be >= 1 or \"inf\"");
    if (P.bands_per_decade < 1) fail(join(path, "bands_per_decade"), "must be >= 1");
    if (!(P.t_max > 0.0)) fail(join(path, "t_max"), "must be positive");
    return P;
}

FunctionalSpec read_functional(const json& j, const std::string& path) {
    FunctionalSpec f;
    if (j.is_string()) {
        f.id = parse_enum(j, path, [](const std::string& s) { return parse_functional(s); });
        return f;
    }
    check_object(j, path, {"functional", "alpha"});
    if (!j.contains("functional")) fail(join(path, "functional"), "missing");
    f.id = parse_enum(j["functional"], join(path, "functional"), [](const std::string& s) { return parse_functional(s); });
    if (j.contains("alpha")) f.alpha = as_double(j["alpha"], join(path, "alpha"));
    return f;
}

json functional_json(const FunctionalSpec& f) {
    json j;
    j["functional"] = std::string(to_string(f.id));
    if (f.alpha) j["alpha"] = *f.alpha;
    return j;
}

json params_json(const BesovParams& P) {
    json j;
    j["alpha"] = P.alpha;
    j["p"] = P.p;
    j["q"] = P.q_infinite ? json("inf") : json(P.q);
    j["m_max"] = P.m_max;
    j["bands_per_decade"] = P.bands_per_decade;
    j["t_max"] = P.t_max;
    return j;
}

json function_json(const FunctionEntry& e) {
    json j;
    const FunctionSpec& s = e.spec;
    j["family"] = s.family;
    j["c"] = s.c;
    j["k"] = s.k;
    j["cell_level"] = s.cell_level;
    j["cell_index"] = s.cell_index;
    j["boundary"] = {s.boundary[0], s.boundary[1], s.boundary[2]};
    j["h"] = s.h;
    j["sigma"] = s.sigma;
    if (e.explicit_seed) j["seed"] = s.seed;
    j["path"] = s.path;
    return j;
}

// ---- running ----------------------------------------------------------------

class usage_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Context {
    const ExperimentConfig& cfg;
    Command cmd;
    std::filesystem::path dir;
    std::vector<std::filesystem::path> files;
    json report;  // command payload
    bool violated = false;
    std::vector<std::string> violations;

    void write(const std::string& name, const std::string& content) {
        const auto path = dir / name;
        write_file_atomic(path, content);
        files.push_back(path);
    }
    void csv(const std::string& name, const CsvTable& t) {
        if (cfg.outputs.csv) write(name, t.str());
    }
    void violate(const std::string& what) {
        violated = true;
        violations.push_back(what);
    }
};

json to_json_value(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

KernelSet make_kernel(const ExperimentConfig& c, const SpacePtr& sp) {
    return KernelSet::make(sp, c.kernel_model(), kernel_times(c, *sp), c.kernel.laziness);
}

bool needs_kernel(Functional f) {
    return f == Functional::heat_I || f == Functional::heat_I_tilde || f == Functional::heat_sup ||
           f == Functional::dirichlet_s;
}

void require_functions(const ExperimentConfig& c) {
    if (c.functions.empty()) throw usage_error("functions: at least one function is required for this command");
}

void cmd_space_report(Context& ctx) {
    const SpacePtr sp = build_space(ctx.cfg.kind, ctx.cfg.level);
    const AhlforsReport ah = ahlfors_fit(*sp, 64, ctx.cfg.seed);
    ctx.report["space"] = json::parse(space_metadata_json(*sp));
    ctx.report["ahlfors"] = {{"fitted_d", ah.fitted_d},
                             {"c1_hat", ah.c1_hat},
                             {"c2_hat", ah.c2_hat},
                             {"worst_ratio", ah.worst_ratio},
                             {"sample_count", ah.sample_count}};
    if (ctx.cfg.outputs.csv) ctx.write("space.csv", space_csv(*sp));
}

void cmd_kernel_check(Context& ctx) {
    const ExperimentConfig& c = ctx.cfg;
    const SpacePtr sp = build_space(c.kind, c.level);
    const double unit = std::exp2(-sp->level() * sp->walk_dim());
    const double s = c.kernel_check.s > 0.0 ? c.kernel_check.s : 16.0 * unit;
    const double t = c.kernel_check.t > 0.0 ? c.kernel_check.t : 16.0 * unit;
    std::vector<double> times{s, t, s + t};
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    const KernelSet ks = KernelSet::make(sp, c.kernel_model(), times, c.kernel.laziness);
    const auto s_idx = *ks.find_time(s, 1e-15);
    const auto t_idx = *ks.find_time(t, 1e-15);
    const AxiomReport rep = check_axioms(ks, s_idx, t_idx);
    ctx.report["s"] = s;
    ctx.report["t"] = t;
    ctx.report["axioms"] = json::parse(axiom_report_json(rep));
    CsvTable tab({"quantity", "value", "threshold", "pass"});
    auto check = [&](const char* name, double v, double thr) {
        const bool ok = v <= thr;
        tab.add_row({name, format_double(v), format_double(thr), ok ? "1" : "0"});
        if (!ok) ctx.violate(std::string(name) + " " + format_double(v) + " exceeds " + format_double(thr));
    };
    check("symmetry_err", rep.symmetry_err, c.thresholds.symmetry);
    check("stochasticity_err", rep.stochasticity_err, c.thresholds.stochasticity);
    check("chapman_err", rep.chapman_err, c.thresholds.chapman);
    tab.add_row({"positivity_min", format_double(rep.positivity_min), "", ""});
    tab.add_row({"continuity_err", format_double(rep.continuity_err), "", ""});
    ctx.csv("kernel-check.csv", tab);
    if (c.kernel_check.write_matrices && c.outputs.csv) {
        for (std::size_t k = 0; k < ks.time_count(); ++k) ctx.write("kernel_t" + std::to_string(k) + ".csv", kernel_matrix_csv(ks, k));
    }
    if (c.kernel_check.fit_bounds) {
        const KernelSet grid = make_kernel(c, sp);
        const BoundFit fit = fit_subgaussian_bounds(grid);
        ctx.report["bound_fit"] = json::parse(bound_fit_json(fit));
    }
}

void cmd_norm(Context& ctx) {
    const ExperimentConfig& c = ctx.cfg;
    require_functions(c);
    const SpacePtr sp = build_space(c.kind, c.level);
    std::unique_ptr<KernelSet> ks;
    auto kernel = [&]() -> const KernelSet& {
        if (!ks) ks = std::make_unique<KernelSet>(make_kernel(c, sp));
        return *ks;
    };
    CsvTable summary({"function", "param", "mode", "total", "homogeneous"});
    CsvTable detail({"function", "param", "mode", "index", "abscissa", "value"});
    json rows = json::array();
    for (std::size_t fi = 0; fi < c.functions.size(); ++fi) {
        const FunctionSpec spec = c.function_spec(fi);
        const GridFn f = load_function(sp, spec);
        for (std::size_t pi = 0; pi < c.params.size(); ++pi) {
            const BesovParams& P = c.params[pi];
            P.validate(*sp);
            std::vector<SeminormBreakdown> parts;
            parts.push_back(jonsson_seminorm(f, P));
            if (!P.q_infinite) {
                parts.push_back(heat_functional(f, kernel(), P, HeatMode::I_unit));
                parts.push_back(heat_functional(f, kernel(), P, HeatMode::I_tilde));
            }
            parts.push_back(heat_functional(f, kernel(), P, HeatMode::sup));
            parts.push_back(dirichlet_s(f, kernel()));
            if (sp->kind() == SpaceKind::gasket) parts.push_back(strichartz_seminorm(f, P));
            SeminormBreakdown sing;
            sing.mode = SeminormMode::singular;
            sing.aggregation = Aggregation::sum;
            sing.total = singular_seminorm(f, P.alpha, P.p);
            parts.push_back(sing);
            for (const SeminormBreakdown& b : parts) {
                const std::string mode(to_string(b.mode));
                const double hom = homogeneous_value(b, P);
                summary.add_row({spec.label(), format_int(pi), mode, format_double(b.total), format_double(hom)});
                for (std::size_t i = 0; i < b.per_m.size(); ++i) {
                    detail.add_row({spec.label(), format_int(pi), mode, format_int(b.index[i]), format_double(b.abscissa[i]),
                                    format_double(b.per_m[i])});
                }
                rows.push_back({{"function", spec.label()},
                                {"param", pi},
                                {"mode", mode},
                                {"total", to_json_value(b.total)},
                                {"homogeneous", to_json_value(hom)},
                                {"lp_norm", f.lp_norm(P.p)}});
            }
        }
    }
    ctx.report["results"] = rows;
    ctx.csv("norm.csv", summary);
    ctx.csv("norm-breakdown.csv", detail);
}

// Shared by equiv and strichartz: rows of (function, param, level) comparisons.
void comparison_sweep(Context& ctx, const FunctionalSpec& lhs_base, const FunctionalSpec& rhs_base,
                      const std::function<std::pair<FunctionalSpec, FunctionalSpec>(const FunctionalSpec&,
                                                                                   const FunctionalSpec&,
                                                                                   const BesovParams&)>& adjust,
                      const std::string& csv_name) {
    const ExperimentConfig& c = ctx.cfg;
    require_functions(c);
    CsvTable tab({"function", "param", "alpha", "p", "q", "level", "lhs", "rhs", "ratio"});
    std::vector<std::vector<double>> ratios(c.params.size());
    for (int level : c.sweep_levels()) {
        const SpacePtr sp = build_space(c.kind, level);
        std::unique_ptr<KernelSet> ks;
        if (needs_kernel(lhs_base.id) || needs_kernel(rhs_base.id)) ks = std::make_unique<KernelSet>(make_kernel(c, sp));
        for (std::size_t fi = 0; fi < c.functions.size(); ++fi) {
            const FunctionSpec spec = c.function_spec(fi);
            const GridFn f = load_function(sp, spec);
            for (std::size_t pi = 0; pi < c.params.size(); ++pi) {
                const BesovParams& P = c.params[pi];
                const auto [lhs, rhs] = adjust(lhs_base, rhs_base, P);
                const EquivalenceReport r = equivalence_report(f, ks.get(), P, lhs, rhs);
                ratios[pi].push_back(r.ratio);
                tab.add_row({spec.label(), format_int(pi), format_double(P.alpha), format_double(P.p),
                             P.q_infinite ? "inf" : format_double(P.q), format_int(level), format_double(r.lhs),
                             format_double(r.rhs), format_double(r.ratio)});
            }
        }
    }
    json bands = json::array();
    for (std::size_t pi = 0; pi < c.params.size(); ++pi) {
        const auto [lo, hi] = std::minmax_element(ratios[pi].begin(), ratios[pi].end());
        const double width = band_width(ratios[pi]);
        bands.push_back({{"param", pi}, {"params", params_json(c.params[pi])}, {"ratio_min", *lo}, {"ratio_max", *hi}, {"band_width", width}});
        if (c.thresholds.band_width && width > *c.thresholds.band_width) {
            ctx.violate("param " + std::to_string(pi) + ": band width " + format_double(width) + " exceeds " +
                        format_double(*c.thresholds.band_width));
        }
    }
    const auto [l, r] = adjust(lhs_base, rhs_base, c.params.front());
    ctx.report["lhs"] = l.label();
    ctx.report["rhs"] = r.label();
    ctx.report["levels"] = c.sweep_levels();
    ctx.report["bands"] = bands;
    ctx.csv(csv_name, tab);
}

void cmd_equiv(Context& ctx) {
    comparison_sweep(
        ctx, ctx.cfg.equiv.lhs, ctx.cfg.equiv.rhs,
        [](const FunctionalSpec& l, const FunctionalSpec& r, const BesovParams&) { return std::make_pair(l, r); },
        "equiv.csv");
}

void cmd_strichartz(Context& ctx) {
    if (ctx.cfg.kind != SpaceKind::gasket) throw usage_error("space.kind: strichartz requires a gasket space");
    const double gap = std::log2(5.0) - std::log2(3.0);
    comparison_sweep(
        ctx, FunctionalSpec{Functional::strichartz, std::nullopt}, FunctionalSpec{Functional::jonsson, std::nullopt},
        [gap](const FunctionalSpec& l, const FunctionalSpec& r, const BesovParams& P) {
            FunctionalSpec L = l;
            L.alpha = P.alpha * gap;
            return std::make_pair(L, r);
        },
        "strichartz.csv");
}

void cmd_hardy(Context& ctx) {
    const ExperimentConfig& c = ctx.cfg;
    const HardyConfig& h = c.hardy;
    const double dw = build_space(c.kind, 1)->walk_dim();
    const double kappa = h.kappa ? *h.kappa : std::pow(2.0, dw / (dw - 1.0));
    CsvTable tab({"form", "r", "t", "kappa", "lambda", "M", "trials", "max_k"});
    CsvTable growth({"r", "t", "M_min", "M_max", "k_min_M", "k_max_M", "ratio"});
    std::string jsonl;
    const auto [m_lo, m_hi] = std::minmax_element(h.M.begin(), h.M.end());
    json points = json::array();
    for (double r : h.r) {
        for (double t : h.t) {
            double k_lo = 0.0, k_hi = 0.0;
            for (int M : h.M) {
                HardyParams prm{r, t, kappa, h.lambda, M};
                const HardyTrialSummary s = run_hardy_trials(h.form, prm, static_cast<std::size_t>(h.trials), c.seed);
                tab.add_row({std::string(to_string(h.form)), format_double(r), format_double(t), format_double(kappa),
                             format_double(h.lambda), format_int(M), format_int(h.trials), format_double(s.max_k)});
                if (c.outputs.json) jsonl += hardy_trials_jsonl(s);
                if (!std::isfinite(s.max_k)) ctx.violate("r=" + format_double(r) + " t=" + format_double(t) + " M=" + std::to_string(M) + ": k_required not finite");
                if (M == *m_lo) k_lo = s.max_k;
                if (M == *m_hi) k_hi = s.max_k;
            }
            const double ratio = k_hi / k_lo;
            growth.add_row({format_double(r), format_double(t), format_int(*m_lo), format_int(*m_hi), format_double(k_lo),
                            format_double(k_hi), format_double(ratio)});
            points.push_back({{"r", r}, {"t", t}, {"k_min_M", to_json_value(k_lo)}, {"k_max_M", to_json_value(k_hi)}, {"ratio", to_json_value(ratio)}});
            if (!(ratio < c.thresholds.hardy_growth)) {
                ctx.violate("r=" + format_double(r) + " t=" + format_double(t) + ": growth ratio " + format_double(ratio));
            }
        }
    }
    ctx.report["form"] = std::string(to_string(h.form));
    ctx.report["kappa"] = kappa;
    ctx.report["lambda"] = h.lambda;
    ctx.report["points"] = points;
    ctx.csv("hardy.csv", tab);
    ctx.csv("hardy-growth.csv", growth);
    if (c.outputs.json) ctx.write("hardy-trials.jsonl", jsonl);
}

void cmd_lemma_sum(Context& ctx) {
    const LemmaSumConfig& L = ctx.cfg.lemma_sum;
    std::vector<double> grid(static_cast<std::size_t>(L.points));
    for (int i = 0; i < L.points; ++i) {
        const double u = L.points == 1 ? 0.0 : static_cast<double>(i) / (L.points - 1);
        grid[static_cast<std::size_t>(i)] = L.t_min * std::pow(L.t_max / L.t_min, u);
    }
    grid.back() = L.t_max;
    CsvTable rows({"tuple", "t", "S", "ratio"});
    CsvTable summary({"tuple", "C", "alpha", "beta", "gamma", "k1_hat", "k2_hat", "spread"});
    json out = json::array();
    for (std::size_t i = 0; i < L.tuples.size(); ++i) {
        const LemmaTuple& tp = L.tuples[i];
        const LemmaSumTable tab = lemma_sum_bounds(tp.C, tp.alpha, tp.beta, tp.gamma, grid);
        for (const auto& r : tab.rows) rows.add_row({format_int(i), format_double(r.t), format_double(r.S), format_double(r.ratio)});
        const double spread = tab.k2_hat / tab.k1_hat;
        summary.add_row({format_int(i), format_double(tp.C), format_double(tp.alpha), format_double(tp.beta),
                         format_double(tp.gamma), format_double(tab.k1_hat), format_double(tab.k2_hat), format_double(spread)});
        out.push_back({{"tuple", i}, {"k1_hat", tab.k1_hat}, {"k2_hat", tab.k2_hat}, {"spread", spread}});
        if (!(spread < ctx.cfg.thresholds.lemma_ratio)) ctx.violate("tuple " + std::to_string(i) + ": K2/K1 = " + format_double(spread));
    }
    ctx.report["tuples"] = out;
    ctx.csv("lemma-sum.csv", rows);
    ctx.csv("lemma-sum-summary.csv", summary);
}

void cmd_degeneracy(Context& ctx) {
    const ExperimentConfig& c = ctx.cfg;
    require_functions(c);
    const BesovParams& P = c.params.front();
    if (P.p != 2.0) throw usage_error("params[0].p: degeneracy requires p = 2");
    const std::vector<int> levels = c.sweep_levels();
    if (levels.size() < 2) throw usage_error("levels: degeneracy needs at least two levels");
    CsvTable rows({"function", "alpha", "level", "seminorm", "top_term"});
    CsvTable sigs({"function", "alpha", "growth_exponent", "seminorm_slope", "min_step_ratio", "degenerate_signal"});
    json out = json::array();
    for (std::size_t fi = 0; fi < c.functions.size(); ++fi) {
        const FunctionSpec spec = c.function_spec(fi);
        const FunctionFactory make = [spec](const SpacePtr& sp) { return load_function(sp, spec); };
        const DegeneracyReport rep = degeneracy_scan(spec.label(), make, c.kind, levels, c.degeneracy.alphas, P);
        for (const auto& r : rep.rows) {
            rows.add_row({spec.label(), format_double(r.alpha), format_int(r.level), format_double(r.seminorm), format_double(r.top_term)});
        }
        for (const auto& s : rep.signals) {
            sigs.add_row({spec.label(), format_double(s.alpha), format_double(s.growth_exponent), format_double(s.seminorm_slope),
                          format_double(s.min_step_ratio), s.degenerate_signal ? "1" : "0"});
            out.push_back({{"function", spec.label()},
                           {"alpha", s.alpha},
                           {"growth_exponent", s.growth_exponent},
                           {"seminorm_slope", s.seminorm_slope},
                           {"min_step_ratio", to_json_value(s.min_step_ratio)},
                           {"degenerate_signal", s.degenerate_signal}});
        }
    }
    const double d = std::log2(3.0), dw = std::log2(5.0);
    ctx.report["thresholds"] = {{"dw_over_2", dw / 2.0},
                                {"d_over_2_plus_inverse_gap", d / 2.0 + 1.0 / (dw - d)},
                                {"gap_times_dw_over_2", (dw - d) * dw / 2.0}};
    ctx.report["signals"] = out;
    ctx.csv("degeneracy.csv", rows);
    ctx.csv("degeneracy-signals.csv", sigs);
}

void cmd_spectral(Context& ctx) {
    const ExperimentConfig& c = ctx.cfg;
    require_functions(c);
    const SpacePtr sp = build_space(c.kind, c.level);
    const KernelSet ks = make_kernel(c, sp);
    const Spectrum spec = compute_spectrum(ks, SpectrumOptions{c.spectral.form, c.spectral.tau});
    CsvTable tab({"function", "lhs", "rhs", "ratio", "hz", "h_2beta"});
    json out = json::array();
    for (std::size_t fi = 0; fi < c.functions.size(); ++fi) {
        const FunctionSpec fs = c.function_spec(fi);
        const GridFn f = load_function(sp, fs);
        const EquivalenceReport r = lip_vs_spectral_report(f, ks, spec, c.spectral.beta, c.params.front());
        double hz = 0.0;
        if (c.spectral.hz) {
            HzParams hp;
            hp.beta = c.spectral.beta;
            hp.k = static_cast<int>(std::floor(c.spectral.beta / 2.0)) + 1;
            hz = homogeneous_value(hz_seminorm(f, ks, &spec, hp), c.params.front());
        }
        const double h2 = spectral_seminorm_H(f, spec, 2.0 * c.spectral.beta);
        tab.add_row({fs.label(), format_double(r.lhs), format_double(r.rhs), format_double(r.ratio), format_double(hz),
                     format_double(h2)});
        out.push_back({{"function", fs.label()}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"ratio", r.ratio}, {"hz", hz}, {"h_2beta", h2}});
        if (r.ratio < c.thresholds.spectral_lo || r.ratio > c.thresholds.spectral_hi) {
            ctx.violate(fs.label() + ": ratio " + format_double(r.ratio));
        }
    }
    ctx.report["generator_scale"] = spec.generator_scale;
    ctx.report["form"] = std::string(to_string(spec.form));
    ctx.report["beta"] = c.spectral.beta;
    ctx.report["results"] = out;
    ctx.csv("spectral.csv", tab);
    if (c.outputs.csv) ctx.write("spectrum.csv", spectrum_csv(spec));
}

}  // namespace

// ---- config -----------------------------------------------------------------

std::vector<int> ExperimentConfig::sweep_levels() const {
    if (levels.empty()) return {level};
    return levels;
}

FunctionSpec ExperimentConfig::function_spec(std::size_t i) const {
    FunctionSpec s = functions.at(i).spec;
    if (!functions.at(i).explicit_seed) s.seed = seed;
    return s;
}

KernelModel ExperimentConfig::kernel_model() const {
    if (kernel.model) return *kernel.model;
    return kind == SpaceKind::gasket ? KernelModel::lazy_walk_gasket : KernelModel::gaussian_torus;
}

ExperimentConfig parse_config(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("<root>: invalid JSON (") + e.what() + ")");
    }
    check_object(root, "", {"space", "kernel", "functions", "params", "seed", "levels", "equiv", "kernel_check", "hardy",
                            "lemma_sum", "degeneracy", "spectral", "thresholds", "outputs"});
    ExperimentConfig c;

    if (!root.contains("space")) fail("space", "missing");
    const json& js = root["space"];
    check_object(js, "space", {"kind", "level"});
    if (!js.contains("kind")) fail("space.kind", "missing");
    c.kind = parse_enum(js["kind"], "space.kind", [](const std::string& s) { return parse_space_kind(s); });
    if (!js.contains("level")) fail("space.level", "missing");
    c.level = as_int(js["level"], "space.level");
    auto check_level = [&](int l, const std::string& path) {
        int cap = c.kind == SpaceKind::torus1d ? DiscreteSpace::kMaxLevelTorus1d
                  : c.kind == SpaceKind::torus2d ? DiscreteSpace::kMaxLevelTorus2d
                                                 : DiscreteSpace::kMaxLevelGasket;
        if (l < 1 || l > cap) fail(path, "level " + std::to_string(l) + " outside [1, " + std::to_string(cap) + "]");
    };
    check_level(c.level, "space.level");

    if (root.contains("levels")) {
        c.levels = as_list<int>(root["levels"], "levels", as_int, true);
        for (std::size_t i = 0; i < c.levels.size(); ++i) check_level(c.levels[i], at_index("levels", i));
    }

    if (root.contains("kernel")) {
        const json& jk = root["kernel"];
        check_object(jk, "kernel", {"model", "laziness", "time_grid"});
        if (jk.contains("model")) c.kernel.model = parse_enum(jk["model"], "kernel.model", parse_model);
        if (jk.contains("laziness")) c.kernel.laziness = as_double(jk["laziness"], "kernel.laziness");
        if (!(c.kernel.laziness >= 0.0 && c.kernel.laziness < 1.0)) fail("kernel.laziness", "must lie in [0, 1)");
        if (jk.contains("time_grid")) {
            const json& jt = jk["time_grid"];
            check_object(jt, "kernel.time_grid", {"kind", "times"});
            if (jt.contains("kind")) c.kernel.time_grid.kind = as_string(jt["kind"], "kernel.time_grid.kind");
            if (c.kernel.time_grid.kind != "bands" && c.kernel.time_grid.kind != "explicit") {
                fail("kernel.time_grid.kind", "expected \"bands\" or \"explicit\"");
            }
            if (jt.contains("times")) c.kernel.time_grid.times = as_list<double>(jt["times"], "kernel.time_grid.times", as_double, true);
            for (std::size_t i = 0; i < c.kernel.time_grid.times.size(); ++i) {
                if (!(c.kernel.time_grid.times[i] > 0.0)) fail(at_index("kernel.time_grid.times", i), "must be positive");
            }
            if (c.kernel.time_grid.kind == "explicit" && c.kernel.time_grid.times.empty()) {
                fail("kernel.time_grid.times", "required for an explicit grid");
            }
        }
    }
    const bool gasket_model = c.kernel_model() == KernelModel::lazy_walk_gasket;
    if (gasket_model != (c.kind == SpaceKind::gasket)) fail("kernel.model", "model does not match space.kind");

    if (root.contains("functions")) c.functions = as_list<FunctionEntry>(root["functions"], "functions", read_function, true);
    if (root.contains("params")) c.params = as_list<BesovParams>(root["params"], "params", read_params);
    if (root.contains("seed")) c.seed = as_u64(root["seed"], "seed");

    if (root.contains("equiv")) {
        const json& je = root["equiv"];
        check_object(je, "equiv", {"lhs", "rhs"});
        if (je.contains("lhs")) c.equiv.lhs = read_functional(je["lhs"], "equiv.lhs");
        if (je.contains("rhs")) c.equiv.rhs = read_functional(je["rhs"], "equiv.rhs");
    }
    if (root.contains("kernel_check")) {
        const json& j = root["kernel_check"];
        check_object(j, "kernel_check", {"s", "t", "fit_bounds", "write_matrices"});
        if (j.contains("s")) c.kernel_check.s = as_double(j["s"], "kernel_check.s");
        if (j.contains("t")) c.kernel_check.t = as_double(j["t"], "kernel_check.t");
        if (j.contains("fit_bounds")) c.kernel_check.fit_bounds = as_bool(j["fit_bounds"], "kernel_check.fit_bounds");
        if (j.contains("write_matrices")) c.kernel_check.write_matrices = as_bool(j["write_matrices"], "kernel_check.write_matrices");
    }
    if (root.contains("hardy")) {
        const json& j = root["hardy"];
        check_object(j, "hardy", {"form", "r", "t", "kappa", "lambda", "M", "trials"});
        if (j.contains("form")) c.hardy.form = parse_enum(j["form"], "hardy.form", parse_hardy_form);
        if (j.contains("r")) c.hardy.r = as_list<double>(j["r"], "hardy.r", as_double);
        if (j.contains("t")) c.hardy.t = as_list<double>(j["t"], "hardy.t", as_double);
        if (j.contains("kappa")) c.hardy.kappa = as_double(j["kappa"], "hardy.kappa");
        if (j.contains("lambda")) c.hardy.lambda = as_double(j["lambda"], "hardy.lambda");
        if (j.contains("M")) c.hardy.M = as_list<int>(j["M"], "hardy.M", as_int);
        if (j.contains("trials")) c.hardy.trials = as_int(j["trials"], "hardy.trials");
        for (std::size_t i = 0; i < c.hardy.r.size(); ++i) if (!(c.hardy.r[i] > 0.0)) fail(at_index("hardy.r", i), "must be positive");
        for (std::size_t i = 0; i < c.hardy.t.size(); ++i) if (!(c.hardy.t[i] > 1.0)) fail(at_index("hardy.t", i), "must exceed 1");
        for (std::size_t i = 0; i < c.hardy.M.size(); ++i) if (c.hardy.M[i] < 4) fail(at_index("hardy.M", i), "must be at least 4");
        if (c.hardy.kappa && !(*c.hardy.kappa > 1.0)) fail("hardy.kappa", "must exceed 1");
        if (!(c.hardy.lambda > 0.0)) fail("hardy.lambda", "must be positive");
        if (c.hardy.trials < 1) fail("hardy.trials", "must be positive");
    }
    if (root.contains("lemma_sum")) {
        const json& j = root["lemma_sum"];
        check_object(j, "lemma_sum", {"tuples", "t_min", "t_max", "points"});
        if (j.contains("tuples")) {
            c.lemma_sum.tuples = as_list<LemmaTuple>(j["tuples"], "lemma_sum.tuples", [](const json& v, const std::string& p) {
                check_object(v, p, {"C", "alpha", "beta", "gamma"});
                LemmaTuple t;
                if (v.contains("C")) t.C = as_double(v["C"], join(p, "C"));
                if (v.contains("alpha")) t.alpha = as_double(v["alpha"], join(p, "alpha"));
                if (v.contains("beta")) t.beta = as_double(v["beta"], join(p, "beta"));
                if (v.contains("gamma")) t.gamma = as_double(v["gamma"], join(p, "gamma"));
                for (auto [name, val] : {std::pair{"C", t.C}, {"alpha", t.alpha}, {"beta", t.beta}, {"gamma", t.gamma}}) {
                    if (!(val > 0.0)) fail(join(p, name), "must be positive");
                }
                return t;
            });
        }
        if (j.contains("t_min")) c.lemma_sum.t_min = as_double(j["t_min"], "lemma_sum.t_min");
        if (j.contains("t_max")) c.lemma_sum.t_max = as_double(j["t_max"], "lemma_sum.t_max");
        if (j.contains("points")) c.lemma_sum.points = as_int(j["points"], "lemma_sum.points");
        if (!(c.lemma_sum.t_min > 0.0 && c.lemma_sum.t_min <= c.lemma_sum.t_max)) fail("lemma_sum.t_min", "need 0 < t_min <= t_max");
        if (!(c.lemma_sum.t_max <= 1.0)) fail("lemma_sum.t_max", "must not exceed 1");
        if (c.lemma_sum.points < 1) fail("lemma_sum.points", "must be positive");
    }
    if (root.contains("degeneracy")) {
        const json& j = root["degeneracy"];
        check_object(j, "degeneracy", {"alphas"});
        if (j.contains("alphas")) c.degeneracy.alphas = as_list<double>(j["alphas"], "degeneracy.alphas", as_double);
        for (std::size_t i = 0; i < c.degeneracy.alphas.size(); ++i) {
            if (!(c.degeneracy.alphas[i] > 0.0)) fail(at_index("degeneracy.alphas", i), "must be positive");
        }
    }
    if (root.contains("spectral")) {
        const json& j = root["spectral"];
        check_object(j, "spectral", {"beta", "form", "tau", "hz"});
        if (j.contains("beta")) c.spectral.beta = as_double(j["beta"], "spectral.beta");
        if (j.contains("form")) c.spectral.form = parse_enum(j["form"], "spectral.form", parse_form);
        if (j.contains("tau")) c.spectral.tau = parse_enum(j["tau"], "spectral.tau", parse_tau);
        if (j.contains("hz")) c.spectral.hz = as_bool(j["hz"], "spectral.hz");
        if (!(c.spectral.beta > 0.0 && c.spectral.beta < 2.0)) fail("spectral.beta", "must lie in (0, 2)");
    }
    if (root.contains("thresholds")) {
        const json& j = root["thresholds"];
        check_object(j, "thresholds", {"symmetry", "stochasticity", "chapman", "band_width", "hardy_growth", "lemma_ratio",
                                       "spectral_lo", "spectral_hi"});
        Thresholds& t = c.thresholds;
        if (j.contains("symmetry")) t.symmetry = as_double(j["symmetry"], "thresholds.symmetry");
        if (j.contains("stochasticity")) t.stochasticity = as_double(j["stochasticity"], "thresholds.stochasticity");
        if (j.contains("chapman")) t.chapman = as_double(j["chapman"], "thresholds.chapman");
        if (j.contains("band_width")) t.band_width = as_double(j["band_width"], "thresholds.band_width");
        if (j.contains("hardy_growth")) t.hardy_growth = as_double(j["hardy_growth"], "thresholds.hardy_growth");
        if (j.contains("lemma_ratio")) t.lemma_ratio = as_double(j["lemma_ratio"], "thresholds.lemma_ratio");
        if (j.contains("spectral_lo")) t.spectral_lo = as_double(j["spectral_lo"], "thresholds.spectral_lo");
        if (j.contains("spectral_hi")) t.spectral_hi = as_double(j["spectral_hi"], "thresholds.spectral_hi");
    }
    if (root.contains("outputs")) {
        const json& j = root["outputs"];
        check_object(j, "outputs", {"dir", "json", "csv"});
        if (j.contains("dir")) c.outputs.dir = as_string(j["dir"], "outputs.dir");
        if (j.contains("json")) c.outputs.json = as_bool(j["json"], "outputs.json");
        if (j.contains("csv")) c.outputs.csv = as_bool(j["csv"], "outputs.csv");
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("<file>: cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_json(const ExperimentConfig& c) {
    json j;
    j["space"] = {{"kind", std::string(to_string(c.kind))}, {"level", c.level}};
    j["levels"] = c.levels;
    json k;
    if (c.kernel.model) k["model"] = std::string(to_string(*c.kernel.model));
    k["laziness"] = c.kernel.laziness;
    k["time_grid"] = {{"kind", c.kernel.time_grid.kind}, {"times", c.kernel.time_grid.times}};
    j["kernel"] = k;
    j["functions"] = json::array();
    for (const auto& f : c.functions) j["functions"].push_back(function_json(f));
    j["params"] = json::array();
    for (const auto& p : c.params) j["params"].push_back(params_json(p));
    j["seed"] = c.seed;
    j["equiv"] = {{"lhs", functional_json(c.equiv.lhs)}, {"rhs", functional_json(c.equiv.rhs)}};
    j["kernel_check"] = {{"s", c.kernel_check.s},
                         {"t", c.kernel_check.t},
                         {"fit_bounds", c.kernel_check.fit_bounds},
                         {"write_matrices", c.kernel_check.write_matrices}};
    json h = {{"form", std::string(to_string(c.hardy.form))}, {"r", c.hardy.r}, {"t", c.hardy.t},
              {"lambda", c.hardy.lambda}, {"M", c.hardy.M}, {"trials", c.hardy.trials}};
    if (c.hardy.kappa) h["kappa"] = *c.hardy.kappa;
    j["hardy"] = h;
    json tuples = json::array();
    for (const auto& t : c.lemma_sum.tuples) tuples.push_back({{"C", t.C}, {"alpha", t.alpha}, {"beta", t.beta}, {"gamma", t.gamma}});
    j["lemma_sum"] = {{"tuples", tuples}, {"t_min", c.lemma_sum.t_min}, {"t_max", c.lemma_sum.t_max}, {"points", c.lemma_sum.points}};
    j["degeneracy"] = {{"alphas", c.degeneracy.alphas}};
    j["spectral"] = {{"beta", c.spectral.beta},
                     {"form", std::string(to_string(c.spectral.form))},
                     {"tau", std::string(to_string(c.spectral.tau))},
                     {"hz", c.spectral.hz}};
    json th = {{"symmetry", c.thresholds.symmetry},       {"stochasticity", c.thresholds.stochasticity},
               {"chapman", c.thresholds.chapman},         {"hardy_growth", c.thresholds.hardy_growth},
               {"lemma_ratio", c.thresholds.lemma_ratio}, {"spectral_lo", c.thresholds.spectral_lo},
               {"spectral_hi", c.thresholds.spectral_hi}};
    if (c.thresholds.band_width) th["band_width"] = *c.thresholds.band_width;
    j["thresholds"] = th;
    j["outputs"] = {{"dir", c.outputs.dir}, {"json", c.outputs.json}, {"csv", c.outputs.csv}};
    return j.dump(2);
}

std::string config_digest(const ExperimentConfig& c) { return fnv1a_hex(to_json(c)); }

std::string_view to_string(Command c) {
    switch (c) {
        case Command::space_report: return "space-report";
        case Command::kernel_check: return "kernel-check";
        case Command::norm: return "norm";
        case Command::equiv: return "equiv";
        case Command::hardy: return "hardy";
        case Command::lemma_sum: return "lemma-sum";
        case Command::degeneracy: return "degeneracy";
        case Command::spectral: return "spectral";
        case Command::strichartz: return "strichartz";
    }
    return "unknown";
}

Command parse_command(std::string_view name) {
    for (Command c : {Command::space_report, Command::kernel_check, Command::norm, Command::equiv, Command::hardy,
                      Command::lemma_sum, Command::degeneracy, Command::spectral, Command::strichartz}) {
        if (to_string(c) == name) return c;
    }
    throw std::invalid_argument("unknown command '" + std::string(name) + "'");
}

std::vector<double> kernel_times(const ExperimentConfig& c, const DiscreteSpace& space) {
    std::vector<double> times = c.kernel.time_grid.times;
    if (c.kernel.time_grid.kind == "bands") {
        for (const BesovParams& P : c.params) {
            const auto g = heat_time_grid(space.walk_dim(), P.resolved_m_max(space), P.bands_per_decade, P.t_max);
            times.insert(times.end(), g.begin(), g.end());
        }
    }
    std::sort(times.begin(), times.end());
    std::vector<double> out;
    for (double t : times) {
        if (out.empty() || t > out.back() * (1.0 + 1e-12)) out.push_back(t);
    }
    return out;
}

RunResult run(const ExperimentConfig& c, Command cmd, const std::filesystem::path& out_dir) {
    RunResult res;
    Context ctx{c, cmd, out_dir.empty() ? std::filesystem::path(c.outputs.dir) : out_dir, {}, json::object(), false, {}};
    try {
        std::filesystem::create_directories(ctx.dir);
    } catch (const std::filesystem::filesystem_error& e) {
        res.status = 1;
        res.message = "outputs.dir: cannot create " + ctx.dir.string() + " (" + e.what() + ")";
        return res;
    }
    try {
        switch (cmd) {
            case Command::space_report: cmd_space_report(ctx); break;
            case Command::kernel_check: cmd_kernel_check(ctx); break;
            case Command::norm: cmd_norm(ctx); break;
            case Command::equiv: cmd_equiv(ctx); break;
            case Command::hardy: cmd_hardy(ctx); break;
            case Command::lemma_sum: cmd_lemma_sum(ctx); break;
            case Command::degeneracy: cmd_degeneracy(ctx); break;
            case Command::spectral: cmd_spectral(ctx); break;
            case Command::strichartz: cmd_strichartz(ctx); break;
        }
    } catch (const std::exception& e) {
        res.status = 1;
        res.message = std::string(to_string(cmd)) + ": " + e.what();
        res.files = ctx.files;
        return res;
    }
    res.status = ctx.violated ? 2 : 0;
    for (const auto& v : ctx.violations) res.message += (res.message.empty() ? "" : "; ") + v;
    if (c.outputs.json) {
        json j;
        j["command"] = std::string(to_string(cmd));
        j["version"] = std::string(kVersion);
        j["config_digest"] = config_digest(c);
        j["status"] = res.status;
        j["violations"] = ctx.violations;
        j["report"] = ctx.report;
        ctx.write(std::string(to_string(cmd)) + ".json", j.dump(2) + "\n");
    }
    res.files = ctx.files;
    return res;
}

}  // namespace heatbesov
