#include "heatbesov/hardy.hpp"

#include "heatbesov/io.hpp"
#include "heatbesov/rng.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace heatbesov {

namespace {

double log_sum_exp(std::span<const double> v) {
    double m = -HUGE_VAL;
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

double log_add(double a, double b) {
    if (a < b) std::swap(a, b);
    if (!std::isfinite(b)) return a;
    return a + std::log1p(std::exp(b - a));
}

std::vector<double> checked_logs(std::span<const double> x) {
    std::vector<double> lx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !std::isfinite(x[i])) throw std::invalid_argument("hardy: sequence entries must be positive and finite");
        lx[i] = std::log(x[i]);
    }
    return lx;
}

InequalityCheck finish(double log_lhs, double log_rhs, std::span<const double> x) {
    InequalityCheck c;
    c.log_lhs = log_lhs;
    c.log_rhs_raw = log_rhs;
    c.lhs = std::exp(log_lhs);
    c.rhs_raw = std::exp(log_rhs);
    c.k_required = std::exp(log_lhs - log_rhs);
    c.sequence_digest = digest_doubles(x);
    return c;
}

double log_rhs_raw(std::span<const double> lx, std::size_t M, double r, double t) {
    std::vector<double> terms(M);
    const double lt = std::log(t);
    for (std::size_t m = 0; m < M; ++m) terms[m] = static_cast<double>(m) * lt + r * lx[m];
    return log_sum_exp(terms);
}

// Largest window offset j whose weight exp(-lambda scale kappa^j) can still matter
// against a sequence with the given log dynamic range.
std::size_t window_cutoff(const HardyParams& prm, double scale, double log_range) {
    std::size_t j = 0;
    double kj = 1.0;
    while (prm.lambda * scale * (kj - 1.0) <= log_range + 60.0 && j < 100000) {
        ++j;
        kj *= prm.kappa;
    }
    return j;
}

}  // namespace

void HardyParams::validate() const {
    if (!(r > 0.0)) throw std::invalid_argument("HardyParams.r must be positive");
    if (!(t > 1.0)) throw std::invalid_argument("HardyParams.t must exceed 1");
    if (!(kappa > 1.0)) throw std::invalid_argument("HardyParams.kappa must exceed 1");
    if (!(lambda > 0.0)) throw std::invalid_argument("HardyParams.lambda must be positive");
    if (M < 4) throw std::invalid_argument("HardyParams.M must be at least 4");
}

InequalityCheck classical_hardy(std::span<const double> x, double r, double t) {
    if (!(r > 0.0) || !(t > 1.0)) throw std::invalid_argument("classical_hardy: need r > 0 and t > 1");
    if (x.empty()) throw std::invalid_argument("classical_hardy: empty sequence");
    const std::vector<double> lx = checked_logs(x);
    const std::size_t M = x.size();
    const double lt = std::log(t);
    std::vector<double> terms(M);
    double tail = -HUGE_VAL;
    for (std::size_t m = M; m-- > 0;) {
        tail = log_add(lx[m], tail);
        terms[m] = static_cast<double>(m) * lt + r * tail;
    }
    return finish(log_sum_exp(terms), log_rhs_raw(lx, M, r, t), x);
}

InequalityCheck modified_hardy(std::span<const double> x, const HardyParams& prm) {
    prm.validate();
    const auto M = static_cast<std::size_t>(prm.M);
    if (x.size() < M) throw std::invalid_argument("modified_hardy: sequence shorter than M");
    const std::vector<double> lx = checked_logs(x.first(M));
    const auto [lo, hi] = std::minmax_element(lx.begin(), lx.end());
    const std::size_t J = window_cutoff(prm, 1.0, *hi - *lo);
    const double lt = std::log(prm.t);

    std::vector<double> terms(M), window;
    for (std::size_t m = 0; m < M; ++m) {
        const std::size_t k_lo = (m + 1) / 2;
        window.clear();
        double kj = 1.0;
        for (std::size_t j = 0; j <= m - k_lo && j <= J; ++j) {
            window.push_back(lx[m - j] - prm.lambda * kj);
            kj *= prm.kappa;
        }
        terms[m] = static_cast<double>(m) * lt + prm.r * log_sum_exp(window);
    }
    return finish(log_sum_exp(terms), log_rhs_raw(lx, M, prm.r, prm.t), x.first(M));
}

double modified_hardy_split_log_lhs(std::span<const double> x, const HardyParams& prm) {
    prm.validate();
    const auto M = static_cast<std::size_t>(prm.M);
    if (x.size() < M) throw std::invalid_argument("modified_hardy_split_log_lhs: sequence shorter than M");
    const std::vector<double> lx = checked_logs(x.first(M));
    const auto [lo, hi] = std::minmax_element(lx.begin(), lx.end());
    const std::size_t J = window_cutoff(prm, prm.r, prm.r * (*hi - *lo));
    const double lt = std::log(prm.t);
    std::vector<double> terms;
    for (std::size_t m = 0; m < M; ++m) {
        const std::size_t k_lo = (m + 1) / 2;
        double kj = 1.0;
        for (std::size_t j = 0; j <= m - k_lo && j <= J; ++j) {
            terms.push_back(static_cast<double>(m) * lt + prm.r * lx[m - j] - prm.lambda * prm.r * kj);
            kj *= prm.kappa;
        }
    }
    return log_sum_exp(terms);
}

double modified_hardy_majorant(const HardyParams& prm) {
    prm.validate();
    const double rr = std::min(prm.r, 1.0);
    const double lt = std::log(prm.t);
    double sum = 0.0;
    double kj = 1.0;
    for (int j = 0; j < 100000; ++j) {
        const double term = std::exp(j * lt - prm.lambda * rr * kj);
        sum += term;
        const bool decreasing = prm.lambda * rr * kj * std::log(prm.kappa) > lt;
        if (decreasing && term < 1e-18 * sum) break;
        kj *= prm.kappa;
    }
    return sum;
}

double discrete_holder_check(std::span<const double> A, std::span<const double> B, double tau, double p) {
    if (A.size() != B.size()) throw std::invalid_argument("discrete_holder_check: length mismatch");
    if (!(p > 1.0) || !(tau > 0.0)) throw std::invalid_argument("discrete_holder_check: need p > 1 and tau > 0");
    const double q = p / (p - 1.0);
    double lhs = 0.0, sa = 0.0, sb = 0.0, w = 1.0;
    for (std::size_t m = 0; m < A.size(); ++m) {
        if (A[m] < 0.0 || B[m] < 0.0) throw std::invalid_argument("discrete_holder_check: sequences must be nonnegative");
        lhs += A[m] * B[m] * w;
        sa += std::pow(A[m], p) * w;
        sb += std::pow(B[m], q) * w;
        w *= tau;
    }
    return std::pow(sa, 1.0 / p) * std::pow(sb, 1.0 / q) - lhs;
}

double lemma_sum(double C, double alpha, double beta, double gamma, double t) {
    if (!(C > 0.0 && alpha > 0.0 && beta > 0.0 && gamma > 0.0 && t > 0.0)) {
        throw std::invalid_argument("lemma_sum: parameters must be positive");
    }
    const double base = C / std::pow(t, beta);
    double sum = 0.0;
    for (int m = 0; m < 20000; ++m) {
        const double arg = std::pow(base * std::exp2(-m), gamma);
        const double term = std::exp(-m * alpha * std::numbers::ln2 - arg);
        sum += term;
        if (arg < 1.0 && term < 1e-18 * sum) break;
    }
    return sum;
}

LemmaSumTable lemma_sum_bounds(double C, double alpha, double beta, double gamma, std::span<const double> t_grid) {
    LemmaSumTable tab;
    tab.k1_hat = HUGE_VAL;
    for (double t : t_grid) {
        if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("lemma_sum_bounds: grid must lie in (0, 1]");
        const double S = lemma_sum(C, alpha, beta, gamma, t);
        const double ratio = S / std::pow(t, alpha * beta);
        tab.rows.push_back({t, S, ratio});
        tab.k1_hat = std::min(tab.k1_hat, ratio);
        tab.k2_hat = std::max(tab.k2_hat, ratio);
    }
    return tab;
}

double c_beta(double beta) {
    if (!(beta > 0.0 && beta < 2.0)) throw std::domain_error("c_beta: integral diverges unless 0 < beta < 2");
    using boost::math::quadrature::gauss_kronrod;
    const double a = 1.0 - beta / 2.0;
    // (0, 1]: substitute s = v^(1/a); the integrand becomes (1/a)(1 - e^-s)/s, smooth on [0, 1].
    auto head = [a](double v) {
        if (v == 0.0) return 1.0 / a;
        const double s = std::pow(v, 1.0 / a);
        return -std::expm1(-s) / (a * s);
    };
    // [1, inf): split off the exact part of s^-(1+beta/2).
    auto tail = [beta](double s) { return std::exp(-s) * std::pow(s, -1.0 - beta / 2.0); };
    const double i_head = gauss_kronrod<double, 31>::integrate(head, 0.0, 1.0, 15, 1e-13);
    const double i_tail = gauss_kronrod<double, 31>::integrate(tail, 1.0, std::numeric_limits<double>::infinity(), 15, 1e-13);
    return i_head + 2.0 / beta - i_tail;
}

std::vector<double> random_positive_sequence(std::size_t length, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(length);
    for (double& v : x) v = std::pow(10.0, rng.uniform(-6.0, 6.0));
    return x;
}

HardyTrialSummary run_hardy_trials(HardyForm form, const HardyParams& prm, std::size_t trials, std::uint64_t first_seed) {
    prm.validate();
    HardyTrialSummary s;
    s.form = form;
    s.params = prm;
    for (std::size_t i = 0; i < trials; ++i) {
        const std::uint64_t seed = first_seed + i;
        const auto x = random_positive_sequence(static_cast<std::size_t>(prm.M), seed);
        HardyTrial tr{seed, form == HardyForm::classical ? classical_hardy(x, prm.r, prm.t) : modified_hardy(x, prm)};
        s.max_k = std::max(s.max_k, tr.check.k_required);
        s.trials.push_back(std::move(tr));
    }
    return s;
}

std::string hardy_trials_jsonl(const HardyTrialSummary& s) {
    std::string out;
    for (const HardyTrial& tr : s.trials) {
        nlohmann::json j;
        j["form"] = s.form == HardyForm::classical ? "classical" : "modified";
        j["r"] = s.params.r;
        j["t"] = s.params.t;
        j["M"] = s.params.M;
        if (s.form == HardyForm::modified) {
            j["kappa"] = s.params.kappa;
            j["lambda"] = s.params.lambda;
        }
        j["seed"] = tr.seed;
        j["digest"] = tr.check.sequence_digest;
        j["k_required"] = tr.check.k_required;
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace heatbesov
