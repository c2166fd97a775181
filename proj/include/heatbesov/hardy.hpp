#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace heatbesov {

struct HardyParams {
    double r = 1.0;
    double t = 2.0;
    double kappa = 2.0;
    double lambda = 1.0;
    int M = 500;

    void validate() const;
};

/// Sides of a weighted inequality lhs <= K rhs_raw. The sums involve t^m and
/// overflow doubles for long sequences, so they are kept as logarithms;
/// lhs and rhs_raw are their exponentials and may be +inf.
struct InequalityCheck {
    double log_lhs = 0.0;
    double log_rhs_raw = 0.0;
    double lhs = 0.0;
    double rhs_raw = 0.0;
    double k_required = 0.0;
    std::string sequence_digest;
};

/// sum_m t^m (sum_{k>=m} x_k)^r against sum_m t^m x_m^r over m < x.size().
InequalityCheck classical_hardy(std::span<const double> x, double r, double t);

/// sum_m t^m (sum_{k=ceil(m/2)}^m x_k exp(-lambda kappa^(m-k)))^r against
/// sum_m t^m x_m^r over m < prm.M (x must hold at least M entries). Window terms
/// whose weight is below exp(-60) relative to the sequence's dynamic range are skipped.
InequalityCheck modified_hardy(std::span<const double> x, const HardyParams& prm);

/// log of sum_m t^m sum_{k=ceil(m/2)}^m x_k^r exp(-lambda r kappa^(m-k)): the
/// subadditive majorant of the modified left side when r <= 1.
double modified_hardy_split_log_lhs(std::span<const double> x, const HardyParams& prm);

/// sum_{j>=0} t^j exp(-lambda min(r,1) kappa^j).
double modified_hardy_majorant(const HardyParams& prm);

/// (sum A^p tau^m)^(1/p) (sum B^q tau^m)^(1/q) - sum A B tau^m, with 1/p + 1/q = 1.
double discrete_holder_check(std::span<const double> A, std::span<const double> B, double tau, double p);

struct LemmaSumRow {
    double t = 0.0;
    double S = 0.0;
    double ratio = 0.0;  // S / t^(alpha beta)
};

struct LemmaSumTable {
    std::vector<LemmaSumRow> rows;
    double k1_hat = 0.0;
    double k2_hat = 0.0;
};

/// S(t) = sum_m 2^(-m alpha) exp(-(C / (2^m t^beta))^gamma).
double lemma_sum(double C, double alpha, double beta, double gamma, double t);
LemmaSumTable lemma_sum_bounds(double C, double alpha, double beta, double gamma, std::span<const double> t_grid);

/// int_0^inf (1 - e^-s) / s^(1 + beta/2) ds by adaptive Gauss-Kronrod quadrature.
/// Throws std::domain_error outside 0 < beta < 2, where the integral diverges.
double c_beta(double beta);

/// Magnitudes 10^u with u uniform on [-6, 6].
std::vector<double> random_positive_sequence(std::size_t length, std::uint64_t seed);

enum class HardyForm { classical, modified };

struct HardyTrial {
    std::uint64_t seed = 0;
    InequalityCheck check;
};

struct HardyTrialSummary {
    HardyForm form = HardyForm::classical;
    HardyParams params;
    std::vector<HardyTrial> trials;
    double max_k = 0.0;
};

/// One random sequence per seed first_seed, first_seed + 1, ...
HardyTrialSummary run_hardy_trials(HardyForm form, const HardyParams& prm, std::size_t trials, std::uint64_t first_seed);

/// One JSON object per line: form, params, seed, digest, k_required.
std::string hardy_trials_jsonl(const HardyTrialSummary& s);

}  // namespace heatbesov
