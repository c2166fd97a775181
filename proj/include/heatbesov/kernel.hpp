#pragma once

#include "heatbesov/space.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace heatbesov {

enum class KernelModel { gaussian_torus, lazy_walk_gasket };

std::string_view to_string(KernelModel model);
KernelModel parse_kernel_model(std::string_view name);

/// Symmetric Markov transition densities p(t, x, y) w.r.t. the space measure,
/// one dense matrix per grid time.
///
/// gaussian_torus: periodized Gaussian of variance t per axis sampled on the
/// lattice and divided by its lattice row integral, so rows integrate to 1
/// exactly while the matrix stays circulant and symmetric.
/// lazy_walk_gasket: P^n(x, y) / w(y) for the lazy simple random walk P with
/// n(t) = max(1, round(t 5^N)) steps.
class KernelSet {
public:
    static KernelSet make(SpacePtr space, KernelModel model, std::vector<double> times, double laziness = 0.5);

    const DiscreteSpace& space() const noexcept { return *space_; }
    const SpacePtr& space_ptr() const noexcept { return space_; }
    KernelModel model() const noexcept { return model_; }
    double laziness() const noexcept { return laziness_; }
    double walk_dim() const noexcept { return walk_dim_; }
    std::span<const double> times() const noexcept { return times_; }
    std::size_t time_count() const noexcept { return times_.size(); }
    const Eigen::MatrixXd& density(std::size_t t_idx) const { return densities_.at(t_idx); }

    /// Gasket: walk steps per grid time. Torus: empty.
    std::span<const long> steps() const noexcept { return steps_; }
    /// 2^(-N dw): one lattice step in time (one walk step on the gasket).
    double lattice_time() const noexcept;
    /// Time actually represented by grid time t (the step count in time units on the gasket).
    double effective_time(double t) const;
    /// Smallest grid time whose matrix is entrywise positive; +inf if none.
    double positive_from() const noexcept { return positive_from_; }

    /// Index of the grid time equal to t within relative tolerance rtol.
    std::optional<std::size_t> find_time(double t, double rtol = 1e-9) const;

    /// Density matrix at an arbitrary time (not cached).
    Eigen::MatrixXd density_at(double t) const;
    /// P_t f for each requested time, without forming matrices.
    std::vector<Eigen::VectorXd> semigroup_orbit(std::span<const double> f, std::span<const double> times) const;
    /// Gasket only: P^s f for each step count s >= 0.
    std::vector<Eigen::VectorXd> walk_orbit(std::span<const double> f, std::span<const long> steps) const;

private:
    KernelSet() = default;

    SpacePtr space_;
    KernelModel model_ = KernelModel::gaussian_torus;
    double laziness_ = 0.5;
    double walk_dim_ = 2.0;
    std::vector<double> times_;
    std::vector<long> steps_;
    std::vector<Eigen::MatrixXd> densities_;
    double positive_from_ = HUGE_VAL;
};

/// Periodized Gaussian of variance t on the circle of circumference 1 at the
/// lattice offsets k / n, k = 0..n-1, normalized so that sum_k g[k] / n = 1.
std::vector<double> torus_gaussian_row(int n, double t);

/// Walk steps used for time t on a gasket of the given level.
long gasket_steps(int level, double t);

struct AxiomReport {
    double symmetry_err = 0.0;
    double stochasticity_err = 0.0;
    double chapman_err = 0.0;
    double positivity_min = 0.0;
    double continuity_err = 0.0;
};

/// Residuals of symmetry, stochasticity, Chapman-Kolmogorov at (s, t, s+t),
/// positivity at the largest time and the smallest-time continuity defect for
/// f = cos(2 pi x).
AxiomReport check_axioms(const KernelSet& ks, std::size_t s_idx, std::size_t t_idx);

struct BoundFit {
    double c1_hat = 0.0;
    double c2_hat = 0.0;
    double c3_hat = 0.0;
    double c4_hat = 0.0;
    double residual = 0.0;  // RMS residual of the least-squares line through (u, v)
    std::size_t sample_count = 0;
};

struct BoundFitOptions {
    std::size_t max_sources = 24;  // source points x, evenly spaced over the index range
    double t_lo = 0.0;             // only grid times in [t_lo, t_hi] are used
    double t_hi = HUGE_VAL;
};

/// Envelope fit of v = log(p t^(d/dw)) against u = (rho / t^(1/dw))^(dw/(dw-1)):
/// lower envelope log c1 - c2 u, upper envelope log c3 - c4 u, each slope chosen
/// to minimize the mean squared gap to the samples while touching them.
BoundFit fit_subgaussian_bounds(const KernelSet& ks, const BoundFitOptions& opt = {});

/// Slope of the mean over x of log p(t, x, x) against log t over grid times in [t_lo, t_hi].
double on_diagonal_exponent(const KernelSet& ks, double t_lo, double t_hi);

/// Probability of leaving the closed ball of radius delta: sum over dist(x,y) > delta of p w(y).
double exit_tail(const KernelSet& ks, std::size_t t_idx, std::size_t x, double delta);

GridFn apply_semigroup(const KernelSet& ks, std::size_t t_idx, const GridFn& f);

std::string axiom_report_json(const AxiomReport& rep);
std::string bound_fit_json(const BoundFit& fit);
std::string kernel_matrix_csv(const KernelSet& ks, std::size_t t_idx);

}  // namespace heatbesov
