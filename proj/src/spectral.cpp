#include "heatbesov/spectral.hpp"

#include "heatbesov/hardy.hpp"
#include "heatbesov/io.hpp"
#include "heatbesov/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace heatbesov {

namespace {

double binomial(int n, int k) {
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

}  // namespace

Spectrum compute_spectrum(const KernelSet& ks, const SpectrumOptions& opt) {
    const DiscreteSpace& space = ks.space();
    const std::size_t n = space.size();
    if (n > opt.max_points) {
        throw std::invalid_argument("compute_spectrum: " + std::to_string(n) + " points exceed the eigensolver cap " +
                                    std::to_string(opt.max_points));
    }
    std::size_t idx = 0;
    if (opt.tau == TauPolicy::smallest_resolved) {
        const double step = ks.lattice_time();
        while (idx + 1 < ks.time_count() && ks.effective_time(ks.times()[idx]) < step * (1.0 - 1e-12)) ++idx;
    }
    const double tau = ks.effective_time(ks.times()[idx]);

    const auto N = static_cast<Eigen::Index>(n);
    const Eigen::Map<const Eigen::VectorXd> w(space.weights().data(), N);
    const Eigen::VectorXd sw = w.cwiseSqrt();
    Eigen::MatrixXd S = sw.asDiagonal() * ks.density(idx) * sw.asDiagonal();
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw std::runtime_error("compute_spectrum: eigensolver failed");

    Spectrum sp;
    sp.space = ks.space_ptr();
    sp.generator_scale = tau;
    sp.form = opt.form;
    sp.eigenvalues.resize(n);
    sp.modes.resize(N, N);
    const Eigen::VectorXd isw = sw.cwiseInverse();
    for (Eigen::Index k = 0; k < N; ++k) {
        const Eigen::Index src = N - 1 - k;  // eigenvalues of S ascend; generator eigenvalues descend with them
        const double mu = es.eigenvalues()[src];
        double lam = 0.0;
        if (opt.form == GeneratorForm::difference) {
            lam = (1.0 - mu) / tau;
        } else {
            lam = -std::log(std::max(mu, 1e-300)) / tau;
        }
        sp.eigenvalues[static_cast<std::size_t>(k)] = lam;
        Eigen::VectorXd mode = isw.cwiseProduct(es.eigenvectors().col(src));
        // sign convention: largest-magnitude entry positive
        Eigen::Index arg = 0;
        mode.cwiseAbs().maxCoeff(&arg);
        if (mode[arg] < 0.0) mode = -mode;
        sp.modes.col(k) = mode;
    }
    return sp;
}

SpectralCoeffs spectral_coefficients(const GridFn& f, const Spectrum& sp) {
    if (&f.space() != sp.space.get()) throw std::invalid_argument("spectral_coefficients: function lives on a different space");
    const auto N = static_cast<Eigen::Index>(f.size());
    const Eigen::Map<const Eigen::VectorXd> w(f.space().weights().data(), N);
    const Eigen::Map<const Eigen::VectorXd> fv(f.values().data(), N);
    const Eigen::VectorXd c = sp.modes.transpose() * w.cwiseProduct(fv);
    return {std::vector<double>(c.data(), c.data() + N)};
}

double orthonormality_residual(const Spectrum& sp) {
    const auto N = sp.modes.rows();
    const Eigen::Map<const Eigen::VectorXd> w(sp.space->weights().data(), N);
    const Eigen::MatrixXd G = sp.modes.transpose() * w.asDiagonal() * sp.modes;
    return (G - Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff();
}

double semigroup_residual(const GridFn& f, const KernelSet& ks, std::size_t t_idx, const Spectrum& sp) {
    const GridFn Pf = apply_semigroup(ks, t_idx, f);
    const SpectralCoeffs c = spectral_coefficients(f, sp);
    const double t = ks.effective_time(ks.times()[t_idx]);
    const auto N = static_cast<Eigen::Index>(f.size());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(N);
    for (Eigen::Index k = 0; k < N; ++k) g += std::exp(-t * sp.eigenvalues[static_cast<std::size_t>(k)]) * c.coeffs[static_cast<std::size_t>(k)] * sp.modes.col(k);
    double s = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) s += std::pow(Pf[static_cast<std::size_t>(i)] - g[i], 2) * f.space().weights()[static_cast<std::size_t>(i)];
    return std::sqrt(s);
}

double spectral_seminorm_H(const GridFn& f, const Spectrum& sp, double beta) {
    if (!(beta >= 0.0)) throw std::invalid_argument("spectral_seminorm_H: beta must be nonnegative");
    const SpectralCoeffs c = spectral_coefficients(f, sp);
    double s = 0.0;
    for (std::size_t k = 0; k < c.coeffs.size(); ++k) {
        s += std::pow(1.0 + std::max(sp.eigenvalues[k], 0.0), beta / 2.0) * c.coeffs[k] * c.coeffs[k];
    }
    return s;
}

double hz_single_mode_squared(double lambda, double fhat, double beta, int k) {
    return fhat * fhat * std::pow(lambda, beta) * std::tgamma(2.0 * k - beta) * std::exp2(beta - 2.0 * k);
}

SeminormBreakdown hz_seminorm(const GridFn& f, const KernelSet& ks, const Spectrum* sp, const HzParams& prm) {
    if (&f.space() != &ks.space()) throw std::invalid_argument("hz_seminorm: function and kernel live on different spaces");
    if (!(prm.beta > 0.0)) throw std::invalid_argument("hz_seminorm: beta must be positive");
    if (prm.k != static_cast<int>(std::floor(prm.beta / 2.0)) + 1) {
        throw std::invalid_argument("hz_seminorm: k must equal floor(beta/2) + 1");
    }
    if (!(prm.p >= 1.0) || !(prm.q >= 1.0)) throw std::invalid_argument("hz_seminorm: need p, q >= 1");
    if (!(prm.t_min > 0.0 && prm.t_max > prm.t_min) || prm.per_decade < 1) {
        throw std::invalid_argument("hz_seminorm: invalid time range");
    }

    const std::size_t n = f.size();
    const auto w = f.space().weights();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += f[i] * w[i];
    std::vector<double> g(f.values().begin(), f.values().end());
    for (double& v : g) v -= mean;

    const double decades = std::log10(prm.t_max / prm.t_min);
    const int count = std::max(1, static_cast<int>(std::ceil(decades * prm.per_decade - 1e-9)));
    const std::vector<double> nodes = log_midpoints(prm.t_min, prm.t_max, count);
    const double weight = std::log(prm.t_max / prm.t_min) / count;

    std::vector<double> norms(nodes.size());  // ||d^k P_t f||_p at each node
    const bool spectral = prm.p == 2.0 && !prm.finite_difference;
    if (spectral) {
        Spectrum local;
        if (!sp) {
            local = compute_spectrum(ks);
            sp = &local;
        }
        const GridFn gf(f.space_ptr(), g);
        const SpectralCoeffs c = spectral_coefficients(gf, *sp);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            double s = 0.0;
            for (std::size_t k = 1; k < c.coeffs.size(); ++k) {
                const double lam = std::max(sp->eigenvalues[k], 0.0);
                s += std::pow(lam, 2.0 * prm.k) * std::exp(-2.0 * nodes[i] * lam) * c.coeffs[k] * c.coeffs[k];
            }
            norms[i] = std::sqrt(s);
        }
    } else if (ks.model() == KernelModel::lazy_walk_gasket) {
        if (prm.k != 1) throw std::invalid_argument("hz_seminorm: finite differences on the gasket support k = 1 only");
        const int level = ks.space().level();
        const double step = ks.lattice_time();
        std::vector<long> steps;
        for (double t : nodes) {
            const long s = gasket_steps(level, t);
            const long h = std::max(1L, std::lround(static_cast<double>(s) / 32.0));
            steps.push_back(std::max(0L, s - h));
            steps.push_back(s + h);
        }
        const auto orbit = ks.walk_orbit(g, steps);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double span = static_cast<double>(steps[2 * i + 1] - steps[2 * i]) * step;
            const Eigen::VectorXd d = (orbit[2 * i + 1] - orbit[2 * i]) / span;
            double acc = 0.0;
            for (std::size_t x = 0; x < n; ++x) acc += std::pow(std::abs(d[static_cast<Eigen::Index>(x)]), prm.p) * w[x];
            norms[i] = std::pow(acc, 1.0 / prm.p);
        }
    } else {
        std::vector<double> times;
        for (double t : nodes) {
            const double delta = t / 16.0;
            for (int i = 0; i <= prm.k; ++i) times.push_back(t + (prm.k / 2.0 - i) * delta);
        }
        const auto orbit = ks.semigroup_orbit(g, times);
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const double delta = nodes[j] / 16.0;
            Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
            for (int i = 0; i <= prm.k; ++i) {
                d += ((i % 2) ? -1.0 : 1.0) * binomial(prm.k, i) * orbit[j * static_cast<std::size_t>(prm.k + 1) + static_cast<std::size_t>(i)];
            }
            d /= std::pow(delta, prm.k);
            double acc = 0.0;
            for (std::size_t x = 0; x < n; ++x) acc += std::pow(std::abs(d[static_cast<Eigen::Index>(x)]), prm.p) * w[x];
            norms[j] = std::pow(acc, 1.0 / prm.p);
        }
    }

    SeminormBreakdown b;
    b.mode = SeminormMode::hu_zahle;
    b.aggregation = Aggregation::sum;
    b.q = prm.q;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double v = weight * std::pow(std::pow(nodes[i], prm.k - prm.beta / 2.0) * norms[i], prm.q);
        const int decade = static_cast<int>(std::floor(std::log10(nodes[i])));
        if (b.index.empty() || b.index.back() != decade) {
            b.index.push_back(decade);
            b.abscissa.push_back(std::pow(10.0, decade + 0.5));
            b.per_m.push_back(0.0);
        }
        b.per_m.back() += v;
    }
    b.total = b.recompute_total();
    return b;
}

EquivalenceReport lip_vs_spectral_report(const GridFn& f, const KernelSet& ks, const Spectrum& sp, double beta,
                                         const BesovParams& base) {
    if (!(beta > 0.0 && beta < 2.0)) throw std::invalid_argument("lip_vs_spectral_report: beta must lie in (0, 2)");
    BesovParams prm = base;
    prm.alpha = beta * ks.walk_dim() / 4.0;
    prm.p = 2.0;
    prm.q = 2.0;
    prm.q_infinite = false;
    const double lhs = heat_functional(f, ks, prm, HeatMode::I_tilde).total;
    // shifting by f[0] leaves the k >= 1 coefficients unchanged and makes constants exactly zero
    std::vector<double> g(f.values().begin(), f.values().end());
    for (double& v : g) v -= f[0];
    const SpectralCoeffs c = spectral_coefficients(GridFn(f.space_ptr(), std::move(g)), sp);
    double s = 0.0;
    for (std::size_t k = 1; k < c.coeffs.size(); ++k) {
        s += std::pow(std::max(sp.eigenvalues[k], 0.0), beta / 2.0) * c.coeffs[k] * c.coeffs[k];
    }
    const double rhs = 2.0 * c_beta(beta) * s;
    return make_equivalence("heat_I_tilde(alpha=" + format_double(prm.alpha) + ")",
                            "2 C_beta sum lambda^(beta/2) fhat^2", lhs, rhs, f.space().level());
}

std::string spectrum_csv(const Spectrum& sp) {
    CsvTable t({"k", "lambda"});
    for (std::size_t k = 0; k < sp.eigenvalues.size(); ++k) t.add_row({format_int(k), format_double(sp.eigenvalues[k])});
    return t.str();
}

}  // namespace heatbesov
