#pragma once

#include "heatbesov/kernel.hpp"
#include "heatbesov/space.hpp"

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace heatbesov {

struct BesovParams {
    double alpha = 0.5;
    double p = 2.0;
    double q = 2.0;
    bool q_infinite = false;
    int m_max = -1;  // negative: level - 2
    int bands_per_decade = 4;
    double t_max = 4.0;  // upper end of the time integral in the tilde functional

    /// m_max after defaulting, clamped below at 0.
    int resolved_m_max(const DiscreteSpace& space) const;
    /// Throws std::invalid_argument naming the offending field.
    void validate(const DiscreteSpace& space) const;
};

enum class SeminormMode { jonsson, heat_I, heat_I_tilde, heat_sup, dirichlet_s, singular, strichartz, hu_zahle };
enum class HeatMode { I_unit, I_tilde, sup };
enum class Aggregation { lq, sum, max };

std::string_view to_string(SeminormMode mode);

/// Table behind a seminorm: per_m[i] is the contribution labelled index[i]
/// (dyadic scale m, or quadrature band; negative bands lie in t > 1), at time
/// abscissa[i] for node-wise tables. `total` aggregates per_m.
struct SeminormBreakdown {
    SeminormMode mode = SeminormMode::jonsson;
    Aggregation aggregation = Aggregation::lq;
    double q = 2.0;  // exponent of the lq aggregation, may be +inf
    std::vector<int> index;
    std::vector<double> abscissa;
    std::vector<double> per_m;
    double total = 0.0;

    double recompute_total() const;
};

/// Shell sums of |f(x) - f(y)|^p w(x) w(y) over ordered pairs: shell[s] collects
/// pairs with 2^-(s+1) < dist <= 2^-s, s = 0..level.
struct IncrementProfile {
    int level = 0;
    double p = 2.0;
    std::vector<double> shell;

    /// i_m: the sum over dist <= 2^-m. Zero for m > level.
    double i_m(int m) const;
};

IncrementProfile increment_profile(const GridFn& f, double p);
double increment_i_m(const GridFn& f, int m, double p);

/// a_m = 2^(m alpha) (2^(m d) i_m)^(1/p), m = 0..m_max; total is the lq norm.
SeminormBreakdown jonsson_seminorm(const GridFn& f, const BesovParams& prm);
SeminormBreakdown jonsson_from_profile(const IncrementProfile& prof, double dim, const BesovParams& prm, int m_max);

/// E(t) = sum over ordered pairs |f(x) - f(y)|^p p(t,x,y) w(x) w(y) at every grid time.
std::vector<double> increment_energy(const GridFn& f, const KernelSet& ks, double p);

/// I_unit: band quadrature over m = 0..m_max of t^(-alpha q/dw) E(t)^(q/p) dt/t.
/// I_tilde: I_unit plus the [1, t_max] tail bands. sup: max over grid times of
/// t^(-p alpha/dw) E(t). Throws if a quadrature node is missing from the grid.
SeminormBreakdown heat_functional(const GridFn& f, const KernelSet& ks, const BesovParams& prm, HeatMode mode);
SeminormBreakdown heat_from_energy(const KernelSet& ks, std::span<const double> energy, const BesovParams& prm,
                                   HeatMode mode);

/// sup over grid times of E(t) / (2t) with p = 2.
SeminormBreakdown dirichlet_s(const GridFn& f, const KernelSet& ks);

/// sum over ordered off-diagonal pairs of |f(x)-f(y)|^p / dist^(d + p alpha) w(x) w(y).
double singular_seminorm(const GridFn& f, double alpha, double p);

/// delta_m = (2^(-m d) sum over level-m edges |f(x)-f(y)|^p)^(1/p), each edge once;
/// total = || ((2^(dw-d))^(m alpha) delta_m)_m ||_q.
SeminormBreakdown strichartz_seminorm(const GridFn& f, const BesovParams& prm);

/// Seminorm rescaled to be 1-homogeneous in f: I^(1/q), sup^(1/p), s^(1/2).
double homogeneous_value(const SeminormBreakdown& b, const BesovParams& prm);

enum class Functional { jonsson, heat_I, heat_I_tilde, heat_sup, dirichlet_s, singular, strichartz };

std::string_view to_string(Functional f);
Functional parse_functional(std::string_view name);

struct FunctionalSpec {
    Functional id = Functional::jonsson;
    std::optional<double> alpha;  // overrides prm.alpha for this side
    std::string label() const;
};

/// ||f||_p + the 1-homogeneous seminorm; ks may be null for kernel-free functionals.
double functional_norm(const GridFn& f, const KernelSet* ks, const BesovParams& prm, const FunctionalSpec& fn);

struct LevelRow {
    int level = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

struct EquivalenceReport {
    std::string lhs_name;
    std::string rhs_name;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    std::vector<LevelRow> per_level;
};

class degenerate_comparison : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Norm comparison at one level; the per_level table gets that single row.
/// Zero on both sides gives ratio 1. Throws degenerate_comparison for rhs = 0 < lhs.
EquivalenceReport equivalence_report(const GridFn& f, const KernelSet* ks, const BesovParams& prm,
                                     const FunctionalSpec& lhs, const FunctionalSpec& rhs);
EquivalenceReport make_equivalence(std::string lhs_name, std::string rhs_name, double lhs, double rhs, int level);

/// Multiplicative spread max(ratio) / min(ratio) of a set of ratios.
double band_width(std::span<const double> ratios);

/// Lower-bound constant of the band quadrature: c_near = min of p(t,x,y) t^(d/dw)
/// over nodes t of band m and pairs with dist <= 2^-(m+1) (so dist <= t^(1/dw)),
/// m = 0..m_max. Then for every f
///   I_unit >= dw ln2 c_near^(q/p) 2^(-q(alpha + d/p)) sum_{m=1}^{m_max+1} a_m^q.
double near_diagonal_constant(const KernelSet& ks, int m_max, int per_band);

struct DegeneracyRow {
    double alpha = 0.0;
    int level = 0;
    double seminorm = 0.0;
    double top_term = 0.0;  // a_(m_max)^p, the finest resolved scale
};

struct DegeneracySignal {
    double alpha = 0.0;
    double growth_exponent = 0.0;  // slope of log2(top_term) against level
    double seminorm_slope = 0.0;   // slope of log2(seminorm) against level
    double min_step_ratio = 0.0;   // smallest top_term(L+1) / top_term(L)
    bool degenerate_signal = false;
};

struct DegeneracyReport {
    std::string family;
    std::vector<DegeneracyRow> rows;
    std::vector<DegeneracySignal> signals;
};

using FunctionFactory = std::function<GridFn(const SpacePtr&)>;

/// Jonsson seminorm (p = 2) of make(space) for every level and alpha. A signal
/// is flagged when the top-scale term grows at every refinement step.
DegeneracyReport degeneracy_scan(const std::string& family, const FunctionFactory& make, SpaceKind kind,
                                 std::span<const int> levels, std::span<const double> alphas, const BesovParams& prm);

std::string breakdown_json(const SeminormBreakdown& b);
std::string breakdown_csv(const SeminormBreakdown& b);
std::string equivalence_json(const EquivalenceReport& r);
std::string equivalence_csv(const EquivalenceReport& r);

}  // namespace heatbesov
