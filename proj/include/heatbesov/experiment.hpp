#pragma once

#include "heatbesov/besov.hpp"
#include "heatbesov/functions.hpp"
#include "heatbesov/hardy.hpp"
#include "heatbesov/kernel.hpp"
#include "heatbesov/space.hpp"
#include "heatbesov/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace heatbesov {

/// Raised for malformed configs; the message starts with the offending field path.
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct TimeGridConfig {
    std::string kind = "bands";  // "bands": cover every params entry; "explicit": exactly `times`
    std::vector<double> times;   // explicit grid, or extra times added to the band grid
};

struct KernelConfig {
    std::optional<KernelModel> model;  // default: the natural model of the space
    double laziness = 0.5;
    TimeGridConfig time_grid;
};

struct FunctionEntry {
    FunctionSpec spec;
    bool explicit_seed = false;  // otherwise the experiment seed is used
};

struct EquivConfig {
    FunctionalSpec lhs{Functional::heat_I, std::nullopt};
    FunctionalSpec rhs{Functional::jonsson, std::nullopt};
};

struct KernelCheckConfig {
    double s = 0.0;  // <= 0: 16 lattice times
    double t = 0.0;
    bool fit_bounds = false;
    bool write_matrices = false;
};

struct HardyConfig {
    HardyForm form = HardyForm::modified;
    std::vector<double> r{1.0};
    std::vector<double> t{2.0};
    std::optional<double> kappa;  // default 2^(dw/(dw-1)) of the configured space
    double lambda = 1.0;
    std::vector<int> M{500};
    int trials = 100;
};

struct LemmaTuple {
    double C = 1.0;
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
};

struct LemmaSumConfig {
    std::vector<LemmaTuple> tuples{LemmaTuple{}};
    double t_min = 1e-4;
    double t_max = 1.0;
    int points = 200;
};

struct DegeneracyConfig {
    std::vector<double> alphas{0.4, 1.0};
};

struct SpectralConfig {
    double beta = 1.0;
    GeneratorForm form = GeneratorForm::difference;
    TauPolicy tau = TauPolicy::smallest_resolved;
    bool hz = true;  // also report the Hu-Zaehle seminorm at p = q = 2
};

/// Limits for the check commands; a violated limit gives exit status 2.
struct Thresholds {
    double symmetry = 1e-12;
    double stochasticity = 1e-10;
    double chapman = 1e-8;
    std::optional<double> band_width;  // equiv, strichartz
    double hardy_growth = 1.2;         // k_required(max M) / k_required(min M)
    double lemma_ratio = 10.0;         // K2_hat / K1_hat
    double spectral_lo = 0.9;
    double spectral_hi = 1.1;
};

struct OutputConfig {
    std::string dir = "out";
    bool json = true;
    bool csv = true;
};

struct ExperimentConfig {
    SpaceKind kind = SpaceKind::torus1d;
    int level = 8;
    std::vector<int> levels;  // sweep for equiv, degeneracy, strichartz; empty: {level}
    KernelConfig kernel;
    std::vector<FunctionEntry> functions;
    std::vector<BesovParams> params{BesovParams{}};
    std::uint64_t seed = 1;
    EquivConfig equiv;
    KernelCheckConfig kernel_check;
    HardyConfig hardy;
    LemmaSumConfig lemma_sum;
    DegeneracyConfig degeneracy;
    SpectralConfig spectral;
    Thresholds thresholds;
    OutputConfig outputs;

    /// Levels to sweep, after defaulting.
    std::vector<int> sweep_levels() const;
    /// Spec of function i with the experiment seed filled in when not explicit.
    FunctionSpec function_spec(std::size_t i) const;
    /// Explicit kernel model, or the natural one for the space.
    KernelModel kernel_model() const;
};

/// Parse from JSON text; throws config_error naming the field.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON; parse_config(to_json(c)) reproduces c.
std::string to_json(const ExperimentConfig& c);
/// FNV-1a digest of the canonical JSON.
std::string config_digest(const ExperimentConfig& c);

enum class Command { space_report, kernel_check, norm, equiv, hardy, lemma_sum, degeneracy, spectral, strichartz };

std::string_view to_string(Command c);
/// Throws std::invalid_argument for unknown names.
Command parse_command(std::string_view name);

/// Kernel time grid for one space: the union of the heat quadrature grids of
/// every params entry plus the extra times, or the explicit times.
std::vector<double> kernel_times(const ExperimentConfig& c, const DiscreteSpace& space);

struct RunResult {
    int status = 0;  // 0 ok, 1 usage error, 2 threshold violation
    std::string message;
    std::vector<std::filesystem::path> files;
};

/// Runs one command, writing <command>.json and CSV tables into out_dir (the
/// config's outputs.dir when empty). Never throws for config or usage errors;
/// they come back as status 1 with the diagnostic in message.
RunResult run(const ExperimentConfig& c, Command cmd, const std::filesystem::path& out_dir = {});

}  // namespace heatbesov
