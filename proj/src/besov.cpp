#include "heatbesov/besov.hpp"

#include "heatbesov/io.hpp"
#include "heatbesov/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

namespace heatbesov {

namespace {

inline double abs_pow(double x, double p) {
    const double a = std::abs(x);
    if (p == 2.0) return a * a;
    if (p == 1.0) return a;
    return std::pow(a, p);
}

double slope(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

void require_same_space(const GridFn& f, const KernelSet& ks, const char* who) {
    if (&f.space() != &ks.space()) throw std::invalid_argument(std::string(who) + ": function and kernel live on different spaces");
}

}  // namespace

int BesovParams::resolved_m_max(const DiscreteSpace& space) const {
    if (m_max >= 0) return m_max;
    return std::max(0, space.level() - 2);
}

void BesovParams::validate(const DiscreteSpace& space) const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("BesovParams.alpha must be positive");
    if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("BesovParams.p must be finite and >= 1");
    if (!q_infinite && !(q >= 1.0)) throw std::invalid_argument("BesovParams.q must be >= 1 or infinite");
    if (m_max > space.level()) throw std::invalid_argument("BesovParams.m_max exceeds the space level");
    if (bands_per_decade < 1) throw std::invalid_argument("BesovParams.bands_per_decade must be >= 1");
    if (!(t_max > 0.0)) throw std::invalid_argument("BesovParams.t_max must be positive");
}

std::string_view to_string(SeminormMode mode) {
    switch (mode) {
        case SeminormMode::jonsson: return "jonsson";
        case SeminormMode::heat_I: return "heat_I";
        case SeminormMode::heat_I_tilde: return "heat_I_tilde";
        case SeminormMode::heat_sup: return "heat_sup";
        case SeminormMode::dirichlet_s: return "dirichlet_s";
        case SeminormMode::singular: return "singular";
        case SeminormMode::strichartz: return "strichartz";
        case SeminormMode::hu_zahle: return "hu_zahle";
    }
    return "unknown";
}

double SeminormBreakdown::recompute_total() const {
    switch (aggregation) {
        case Aggregation::sum: {
            double s = 0.0;
            for (double v : per_m) s += v;
            return s;
        }
        case Aggregation::max: {
            double m = 0.0;
            for (double v : per_m) m = std::max(m, v);
            return m;
        }
        case Aggregation::lq: {
            if (std::isinf(q)) {
                double m = 0.0;
                for (double v : per_m) m = std::max(m, v);
                return m;
            }
            double s = 0.0;
            for (double v : per_m) s += std::pow(v, q);
            return std::pow(s, 1.0 / q);
        }
    }
    return 0.0;
}

double IncrementProfile::i_m(int m) const {
    if (m < 0) throw std::out_of_range("i_m: m must be nonnegative");
    double s = 0.0;
    for (int k = std::max(m, 0); k <= level; ++k) s += shell[static_cast<std::size_t>(k)];
    return s;
}

IncrementProfile increment_profile(const GridFn& f, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("increment_profile: p must be >= 1");
    const DiscreteSpace& sp = f.space();
    IncrementProfile prof;
    prof.level = sp.level();
    prof.p = p;
    prof.shell.assign(static_cast<std::size_t>(sp.level()) + 1, 0.0);
    const auto w = sp.weights();
    const auto v = f.values();
    for (std::size_t i = 0; i < sp.size(); ++i) {
        for (std::size_t j = i + 1; j < sp.size(); ++j) {
            const double inc = abs_pow(v[i] - v[j], p);
            if (inc == 0.0) continue;
            prof.shell[static_cast<std::size_t>(sp.shell_index(i, j))] += 2.0 * inc * w[i] * w[j];
        }
    }
    return prof;
}

double increment_i_m(const GridFn& f, int m, double p) {
    if (m < 0 || m > f.space().level()) throw std::out_of_range("increment_i_m: m out of range");
    return increment_profile(f, p).i_m(m);
}

SeminormBreakdown jonsson_from_profile(const IncrementProfile& prof, double dim, const BesovParams& prm, int m_max) {
    SeminormBreakdown b;
    b.mode = SeminormMode::jonsson;
    b.aggregation = Aggregation::lq;
    b.q = prm.q_infinite ? HUGE_VAL : prm.q;
    for (int m = 0; m <= m_max; ++m) {
        const double a = std::exp2(m * prm.alpha) * std::pow(std::exp2(m * dim) * prof.i_m(m), 1.0 / prof.p);
        b.index.push_back(m);
        b.abscissa.push_back(std::exp2(-m));
        b.per_m.push_back(a);
    }
    b.total = b.recompute_total();
    return b;
}

SeminormBreakdown jonsson_seminorm(const GridFn& f, const BesovParams& prm) {
    prm.validate(f.space());
    return jonsson_from_profile(increment_profile(f, prm.p), f.space().hausdorff_dim(), prm,
                                prm.resolved_m_max(f.space()));
}

std::vector<double> increment_energy(const GridFn& f, const KernelSet& ks, double p) {
    require_same_space(f, ks, "increment_energy");
    const DiscreteSpace& sp = f.space();
    const std::size_t n = sp.size();
    const auto w = sp.weights();
    const auto v = f.values();
    std::vector<double> packed;
    packed.reserve(n * (n - 1) / 2);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < j; ++i) packed.push_back(abs_pow(v[i] - v[j], p) * w[i] * w[j]);
    }
    std::vector<double> energy(ks.time_count());
    for (std::size_t k = 0; k < ks.time_count(); ++k) {
        const Eigen::MatrixXd& K = ks.density(k);
        double s = 0.0;
        std::size_t idx = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double* col = K.data() + j * n;
            for (std::size_t i = 0; i < j; ++i) s += packed[idx++] * col[i];
        }
        energy[k] = 2.0 * s;
    }
    return energy;
}

SeminormBreakdown heat_from_energy(const KernelSet& ks, std::span<const double> energy, const BesovParams& prm,
                                   HeatMode mode) {
    if (energy.size() != ks.time_count()) throw std::invalid_argument("heat_functional: energy table does not match the grid");
    prm.validate(ks.space());
    const double dw = ks.walk_dim();
    SeminormBreakdown b;
    if (mode == HeatMode::sup) {
        b.mode = SeminormMode::heat_sup;
        b.aggregation = Aggregation::max;
        for (std::size_t k = 0; k < ks.time_count(); ++k) {
            const double t = ks.times()[k];
            b.index.push_back(static_cast<int>(k));
            b.abscissa.push_back(t);
            b.per_m.push_back(std::pow(t, -prm.p * prm.alpha / dw) * energy[k]);
        }
        b.total = b.recompute_total();
        return b;
    }
    if (prm.q_infinite) throw std::invalid_argument("heat_functional: integral modes need finite q");
    b.mode = mode == HeatMode::I_unit ? SeminormMode::heat_I : SeminormMode::heat_I_tilde;
    b.aggregation = Aggregation::sum;
    b.q = prm.q;
    const double e_t = -prm.alpha * prm.q / dw;
    const double e_E = prm.q / prm.p;

    auto add_band = [&](const std::vector<TimeNode>& nodes, int label) {
        double s = 0.0;
        for (const TimeNode& nd : nodes) {
            const auto k = ks.find_time(nd.t);
            if (!k) {
                throw std::invalid_argument("heat_functional: kernel grid does not cover band " + std::to_string(label) +
                                            " (missing t = " + format_double(nd.t) + ")");
            }
            s += nd.weight * std::pow(nd.t, e_t) * std::pow(energy[*k], e_E);
        }
        b.index.push_back(label);
        b.abscissa.push_back(std::sqrt(nodes.front().t * nodes.back().t));
        b.per_m.push_back(s);
    };

    const int m_max = prm.resolved_m_max(ks.space());
    for (int m = 0; m <= m_max; ++m) add_band(band_nodes(dw, m, prm.bands_per_decade), m);
    if (mode == HeatMode::I_tilde) {
        const auto tail = tail_nodes(dw, prm.t_max, prm.bands_per_decade);
        for (std::size_t s = 0; s < tail.size(); s += static_cast<std::size_t>(prm.bands_per_decade)) {
            std::vector<TimeNode> band(tail.begin() + static_cast<std::ptrdiff_t>(s),
                                       tail.begin() + static_cast<std::ptrdiff_t>(s + static_cast<std::size_t>(prm.bands_per_decade)));
            add_band(band, band.front().band);
        }
    }
    b.total = b.recompute_total();
    return b;
}

SeminormBreakdown heat_functional(const GridFn& f, const KernelSet& ks, const BesovParams& prm, HeatMode mode) {
    require_same_space(f, ks, "heat_functional");
    return heat_from_energy(ks, increment_energy(f, ks, prm.p), prm, mode);
}

SeminormBreakdown dirichlet_s(const GridFn& f, const KernelSet& ks) {
    require_same_space(f, ks, "dirichlet_s");
    const std::vector<double> energy = increment_energy(f, ks, 2.0);
    SeminormBreakdown b;
    b.mode = SeminormMode::dirichlet_s;
    b.aggregation = Aggregation::max;
    for (std::size_t k = 0; k < ks.time_count(); ++k) {
        const double t = ks.times()[k];
        b.index.push_back(static_cast<int>(k));
        b.abscissa.push_back(t);
        b.per_m.push_back(energy[k] / (2.0 * t));
    }
    b.total = b.recompute_total();
    return b;
}

double singular_seminorm(const GridFn& f, double alpha, double p) {
    if (!(p >= 1.0) || !(alpha > 0.0)) throw std::invalid_argument("singular_seminorm: need p >= 1 and alpha > 0");
    const DiscreteSpace& sp = f.space();
    const double expo = sp.hausdorff_dim() + p * alpha;
    const auto w = sp.weights();
    const auto v = f.values();
    double s = 0.0;
    for (std::size_t i = 0; i < sp.size(); ++i) {
        for (std::size_t j = i + 1; j < sp.size(); ++j) {
            const double inc = abs_pow(v[i] - v[j], p);
            if (inc == 0.0) continue;
            s += 2.0 * inc * w[i] * w[j] / std::pow(sp.dist(i, j), expo);
        }
    }
    return s;
}

SeminormBreakdown strichartz_seminorm(const GridFn& f, const BesovParams& prm) {
    const DiscreteSpace& sp = f.space();
    if (sp.kind() != SpaceKind::gasket) throw std::invalid_argument("strichartz_seminorm: requires a gasket space");
    prm.validate(sp);
    const double d = sp.hausdorff_dim();
    const double dw = sp.walk_dim();
    const auto v = f.values();
    SeminormBreakdown b;
    b.mode = SeminormMode::strichartz;
    b.aggregation = Aggregation::lq;
    b.q = prm.q_infinite ? HUGE_VAL : prm.q;
    const int m_max = prm.resolved_m_max(sp);
    for (int m = 0; m <= m_max; ++m) {
        double s = 0.0;
        for (const Edge& e : sp.level_edges(m)) s += abs_pow(v[e.u] - v[e.v], prm.p);
        const double delta = std::pow(std::exp2(-m * d) * s, 1.0 / prm.p);
        b.index.push_back(m);
        b.abscissa.push_back(std::exp2(-m));
        b.per_m.push_back(std::exp2((dw - d) * m * prm.alpha) * delta);
    }
    b.total = b.recompute_total();
    return b;
}

double homogeneous_value(const SeminormBreakdown& b, const BesovParams& prm) {
    switch (b.mode) {
        case SeminormMode::heat_I:
        case SeminormMode::heat_I_tilde: return std::pow(b.total, 1.0 / prm.q);
        case SeminormMode::heat_sup:
        case SeminormMode::singular: return std::pow(b.total, 1.0 / prm.p);
        case SeminormMode::dirichlet_s: return std::sqrt(b.total);
        case SeminormMode::hu_zahle: return std::pow(b.total, 1.0 / b.q);
        default: return b.total;
    }
}

std::string_view to_string(Functional f) {
    switch (f) {
        case Functional::jonsson: return "jonsson";
        case Functional::heat_I: return "heat_I";
        case Functional::heat_I_tilde: return "heat_I_tilde";
        case Functional::heat_sup: return "heat_sup";
        case Functional::dirichlet_s: return "dirichlet_s";
        case Functional::singular: return "singular";
        case Functional::strichartz: return "strichartz";
    }
    return "unknown";
}

Functional parse_functional(std::string_view name) {
    for (Functional f : {Functional::jonsson, Functional::heat_I, Functional::heat_I_tilde, Functional::heat_sup,
                         Functional::dirichlet_s, Functional::singular, Functional::strichartz}) {
        if (to_string(f) == name) return f;
    }
    throw std::invalid_argument("unknown functional '" + std::string(name) + "'");
}

std::string FunctionalSpec::label() const {
    std::string s(to_string(id));
    if (alpha) s += "(alpha=" + format_double(*alpha) + ")";
    return s;
}

double functional_norm(const GridFn& f, const KernelSet* ks, const BesovParams& prm, const FunctionalSpec& fn) {
    BesovParams P = prm;
    if (fn.alpha) P.alpha = *fn.alpha;
    P.validate(f.space());
    auto need_kernel = [&]() -> const KernelSet& {
        if (!ks) throw std::invalid_argument(std::string(to_string(fn.id)) + " needs a kernel set");
        return *ks;
    };
    double semi = 0.0;
    switch (fn.id) {
        case Functional::jonsson: semi = jonsson_seminorm(f, P).total; break;
        case Functional::heat_I: semi = homogeneous_value(heat_functional(f, need_kernel(), P, HeatMode::I_unit), P); break;
        case Functional::heat_I_tilde:
            semi = homogeneous_value(heat_functional(f, need_kernel(), P, HeatMode::I_tilde), P);
            break;
        case Functional::heat_sup: semi = homogeneous_value(heat_functional(f, need_kernel(), P, HeatMode::sup), P); break;
        case Functional::dirichlet_s: semi = std::sqrt(dirichlet_s(f, need_kernel()).total); break;
        case Functional::singular: semi = std::pow(singular_seminorm(f, P.alpha, P.p), 1.0 / P.p); break;
        case Functional::strichartz: semi = strichartz_seminorm(f, P).total; break;
    }
    return f.lp_norm(P.p) + semi;
}

EquivalenceReport make_equivalence(std::string lhs_name, std::string rhs_name, double lhs, double rhs, int level) {
    EquivalenceReport r;
    r.lhs_name = std::move(lhs_name);
    r.rhs_name = std::move(rhs_name);
    r.lhs = lhs;
    r.rhs = rhs;
    if (rhs == 0.0 && lhs == 0.0) {
        r.ratio = 1.0;
    } else if (rhs == 0.0) {
        throw degenerate_comparison("degenerate comparison: " + r.rhs_name + " vanishes while " + r.lhs_name + " does not");
    } else {
        r.ratio = lhs / rhs;
    }
    r.per_level.push_back({level, lhs, rhs, r.ratio});
    return r;
}

EquivalenceReport equivalence_report(const GridFn& f, const KernelSet* ks, const BesovParams& prm,
                                     const FunctionalSpec& lhs, const FunctionalSpec& rhs) {
    if (ks && &ks->space() != &f.space()) throw std::invalid_argument("equivalence_report: kernel on a different space");
    return make_equivalence(lhs.label(), rhs.label(), functional_norm(f, ks, prm, lhs), functional_norm(f, ks, prm, rhs),
                            f.space().level());
}

double band_width(std::span<const double> ratios) {
    if (ratios.empty()) return 1.0;
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    return *hi / *lo;
}

double near_diagonal_constant(const KernelSet& ks, int m_max, int per_band) {
    const DiscreteSpace& sp = ks.space();
    const double dw = ks.walk_dim();
    const double d = sp.hausdorff_dim();
    const std::size_t n = sp.size();
    double c = HUGE_VAL;
    for (int m = 0; m <= m_max; ++m) {
        for (const TimeNode& nd : band_nodes(dw, m, per_band)) {
            const auto k = ks.find_time(nd.t);
            if (!k) throw std::invalid_argument("near_diagonal_constant: kernel grid does not cover band " + std::to_string(m));
            const Eigen::MatrixXd& K = ks.density(*k);
            const double scale = std::pow(nd.t, d / dw);
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t i = 0; i <= j; ++i) {
                    if (!sp.within_dyadic(i, j, m + 1)) continue;
                    c = std::min(c, K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * scale);
                }
            }
        }
    }
    return c;
}

DegeneracyReport degeneracy_scan(const std::string& family, const FunctionFactory& make, SpaceKind kind,
                                 std::span<const int> levels, std::span<const double> alphas, const BesovParams& prm) {
    if (prm.p != 2.0) throw std::invalid_argument("degeneracy_scan: p must be 2");
    if (levels.size() < 2) throw std::invalid_argument("degeneracy_scan: need at least two levels");
    DegeneracyReport rep;
    rep.family = family;
    // rows grouped by alpha, levels in the given order
    std::vector<std::vector<DegeneracyRow>> by_alpha(alphas.size());
    for (int level : levels) {
        const SpacePtr sp = build_space(kind, level);
        const GridFn f = make(sp);
        const IncrementProfile prof = increment_profile(f, 2.0);
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            BesovParams P = prm;
            P.alpha = alphas[a];
            P.validate(*sp);
            const SeminormBreakdown b = jonsson_from_profile(prof, sp->hausdorff_dim(), P, P.resolved_m_max(*sp));
            by_alpha[a].push_back({alphas[a], level, b.total, std::pow(b.per_m.back(), 2.0)});
        }
    }
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        const auto& rows = by_alpha[a];
        rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
        DegeneracySignal sig;
        sig.alpha = alphas[a];
        const bool zero = std::any_of(rows.begin(), rows.end(), [](const DegeneracyRow& r) { return !(r.top_term > 0.0); });
        if (!zero) {
            std::vector<double> x, ytop, ysemi;
            for (const auto& r : rows) {
                x.push_back(r.level);
                ytop.push_back(std::log2(r.top_term));
                ysemi.push_back(std::log2(r.seminorm));
            }
            sig.growth_exponent = slope(x, ytop);
            sig.seminorm_slope = slope(x, ysemi);
            sig.min_step_ratio = HUGE_VAL;
            for (std::size_t i = 1; i < rows.size(); ++i) {
                sig.min_step_ratio = std::min(sig.min_step_ratio, rows[i].top_term / rows[i - 1].top_term);
            }
            sig.degenerate_signal = sig.growth_exponent > 0.0 && sig.min_step_ratio > 1.0;
        }
        rep.signals.push_back(sig);
    }
    return rep;
}

std::string breakdown_json(const SeminormBreakdown& b) {
    nlohmann::json j;
    j["mode"] = to_string(b.mode);
    j["aggregation"] = b.aggregation == Aggregation::lq ? "lq" : (b.aggregation == Aggregation::sum ? "sum" : "max");
    j["q"] = std::isinf(b.q) ? nlohmann::json("inf") : nlohmann::json(b.q);
    j["index"] = b.index;
    j["abscissa"] = b.abscissa;
    j["per_m"] = b.per_m;
    j["total"] = b.total;
    return j.dump(2);
}

std::string breakdown_csv(const SeminormBreakdown& b) {
    CsvTable t({"index", "abscissa", "value"});
    for (std::size_t i = 0; i < b.per_m.size(); ++i) {
        t.add_row({format_int(b.index[i]), format_double(b.abscissa[i]), format_double(b.per_m[i])});
    }
    return t.str();
}

std::string equivalence_json(const EquivalenceReport& r) {
    nlohmann::json j;
    j["lhs_name"] = r.lhs_name;
    j["rhs_name"] = r.rhs_name;
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["ratio"] = r.ratio;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.per_level) {
        rows.push_back({{"level", row.level}, {"lhs", row.lhs}, {"rhs", row.rhs}, {"ratio", row.ratio}});
    }
    j["per_level"] = rows;
    return j.dump(2);
}

std::string equivalence_csv(const EquivalenceReport& r) {
    CsvTable t({"level", "lhs", "rhs", "ratio"});
    for (const auto& row : r.per_level) {
        t.add_row({format_int(row.level), format_double(row.lhs), format_double(row.rhs), format_double(row.ratio)});
    }
    return t.str();
}

}  // namespace heatbesov
