#pragma once

#include "heatbesov/besov.hpp"
#include "heatbesov/kernel.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace heatbesov {

/// How eigenvalues mu of P_tau become generator eigenvalues.
/// difference: (1 - mu) / tau.  logarithm: -log(mu) / tau, exact for a true semigroup.
enum class GeneratorForm { difference, logarithm };

/// Which grid time defines the generator.
/// smallest_resolved: the smallest grid time of at least one lattice time step
/// 2^(-N dw); below it the sampled torus kernel is nearly the identity.
enum class TauPolicy { smallest_resolved, smallest_grid };

struct SpectrumOptions {
    GeneratorForm form = GeneratorForm::difference;
    TauPolicy tau = TauPolicy::smallest_resolved;
    std::size_t max_points = 4000;
};

/// Eigenpairs of the generator, nondecreasing eigenvalues, modes orthonormal
/// in the weighted inner product (columns of `modes`).
struct Spectrum {
    SpacePtr space;
    std::vector<double> eigenvalues;
    Eigen::MatrixXd modes;
    double generator_scale = 0.0;  // tau, in effective time
    GeneratorForm form = GeneratorForm::difference;
};

Spectrum compute_spectrum(const KernelSet& ks, const SpectrumOptions& opt = {});

struct SpectralCoeffs {
    std::vector<double> coeffs;  // <f, mode_k>
};

SpectralCoeffs spectral_coefficients(const GridFn& f, const Spectrum& sp);

/// max |<mode_i, mode_j> - delta_ij|.
double orthonormality_residual(const Spectrum& sp);

/// || P_t f - sum_k e^(-t lambda_k) fhat_k mode_k ||_2 at grid time index t_idx.
double semigroup_residual(const GridFn& f, const KernelSet& ks, std::size_t t_idx, const Spectrum& sp);

/// sum_k (1 + lambda_k)^(beta/2) fhat_k^2, k = 0 included.
double spectral_seminorm_H(const GridFn& f, const Spectrum& sp, double beta);

struct HzParams {
    double beta = 1.0;
    double p = 2.0;
    double q = 2.0;
    int k = 1;  // must equal floor(beta/2) + 1
    double t_min = 1e-4;
    double t_max = 1e2;
    int per_decade = 16;
    bool finite_difference = false;  // force the finite-difference route at p = 2
};

/// Quadrature of (t^(k - beta/2) ||d^k/dt^k P_t f||_p)^q dt/t over [t_min, t_max]
/// with the mean of f removed. The breakdown holds one entry per decade, total
/// is the sum and homogeneous_value gives its 1/q-th power. p = 2 uses the
/// spectrum (computed here when sp is null); otherwise, or when forced, central
/// differences of the semigroup orbit with step t/16.
SeminormBreakdown hz_seminorm(const GridFn& f, const KernelSet& ks, const Spectrum* sp, const HzParams& prm);

/// Exact value of the p = q = 2 integral over (0, inf) for one mode:
/// fhat^2 lambda^beta Gamma(2k - beta) 2^(beta - 2k).
double hz_single_mode_squared(double lambda, double fhat, double beta, int k);

/// lhs: I_tilde with alpha = beta dw / 4, p = q = 2, grid controls from base.
/// rhs: 2 C_beta sum_{k>=1} lambda_k^(beta/2) fhat_k^2 (the factor 2 is the
/// ordered-pair double integral 2<f - P_t f, f>).
EquivalenceReport lip_vs_spectral_report(const GridFn& f, const KernelSet& ks, const Spectrum& sp, double beta,
                                         const BesovParams& base);

std::string spectrum_csv(const Spectrum& sp);

}  // namespace heatbesov
