#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace heatbesov {

enum class SpaceKind { torus1d, torus2d, gasket };

std::string_view to_string(SpaceKind kind);
/// Throws std::invalid_argument for unknown names.
SpaceKind parse_space_kind(std::string_view name);

/// Integer coordinates in units of the lattice spacing 2^-level.
/// Gasket points use the basis e1 = (1, 0), e2 = (1/2, sqrt(3)/2).
struct LatticeCoord {
    std::int64_t a = 0;
    std::int64_t b = 0;
};

struct Edge {
    std::size_t u = 0;
    std::size_t v = 0;
};

/// Finite metric measure space at resolution `level`.
///
/// Distances are exact: dist(x, y) = sqrt(Q) * 2^-level where Q is an integer
/// quadratic form of the lattice offset, so dyadic ball and shell membership
/// is decided in integer arithmetic. The metric is never stored as a matrix.
class DiscreteSpace {
public:
    static constexpr int kMaxLevelTorus1d = 16;
    static constexpr int kMaxLevelTorus2d = 7;
    static constexpr int kMaxLevelGasket = 8;

    SpaceKind kind() const noexcept { return kind_; }
    int level() const noexcept { return level_; }
    std::size_t size() const noexcept { return weights_.size(); }
    double hausdorff_dim() const noexcept { return dim_; }
    double diameter() const noexcept { return diameter_; }
    double total_measure() const noexcept { return total_measure_; }

    std::span<const double> weights() const noexcept { return weights_; }
    double weight(std::size_t i) const { return weights_.at(i); }
    const std::vector<LatticeCoord>& lattice() const noexcept { return lattice_; }

    /// Planar (or circle) coordinates; the second entry is 0 on torus1d.
    std::array<double, 2> coords(std::size_t i) const;

    /// Squared distance in lattice units.
    std::int64_t lattice_dist2(std::size_t i, std::size_t j) const noexcept;
    double dist(std::size_t i, std::size_t j) const noexcept;

    /// True iff dist(i, j) <= 2^-m, decided exactly.
    bool within_dyadic(std::size_t i, std::size_t j, int m) const noexcept;
    /// Largest m with dist(i, j) <= 2^-m, for i != j. Lies in [0, level].
    int shell_index(std::size_t i, std::size_t j) const noexcept;

    /// Gasket only: |V_m| for m <= level. Vertices of V_m occupy indices [0, |V_m|).
    std::size_t level_vertex_count(int m) const;
    /// Gasket only: edges of the level-m graph approximation (3^(m+1) of them).
    const std::vector<Edge>& level_edges(int m) const;
    /// Gasket only: for a vertex created at level m >= 1, the endpoints of the
    /// level-(m-1) edge it bisects. Corners map to themselves.
    Edge midpoint_parents(std::size_t i) const;
    /// Level at which vertex i first appears.
    int birth_level(std::size_t i) const;
    /// Finest-level neighbour lists (gasket: graph edges; torus: lattice neighbours).
    const std::vector<std::vector<std::size_t>>& neighbors() const noexcept { return neighbors_; }

    /// Metric walk-dimension of the natural diffusion on this space.
    double walk_dim() const noexcept;

private:
    friend std::shared_ptr<const DiscreteSpace> build_space(SpaceKind kind, int level);
    DiscreteSpace() = default;

    SpaceKind kind_ = SpaceKind::torus1d;
    int level_ = 0;
    std::int64_t side_ = 1;  // 2^level
    double dim_ = 1.0;
    double diameter_ = 1.0;
    double total_measure_ = 1.0;
    std::vector<double> weights_;
    std::vector<LatticeCoord> lattice_;
    std::vector<std::vector<std::size_t>> neighbors_;
    std::vector<std::size_t> level_counts_;
    std::vector<std::vector<Edge>> level_edges_;
    std::vector<Edge> parents_;
    std::vector<int> birth_;
};

using SpacePtr = std::shared_ptr<const DiscreteSpace>;

/// Point counts: torus1d 2^N, torus2d 4^N, gasket 3(3^N+1)/2. Weights sum to 1
/// (uniform on the tori, degree measure on the gasket).
SpacePtr build_space(SpaceKind kind, int level);

/// Measure of the closed ball B(x, r).
double ball_measure(const DiscreteSpace& space, std::size_t x, double r);

/// Unordered pairs (x < y) with 2^-(m+1) < dist <= 2^-m. Empty for m > level.
std::vector<std::pair<std::size_t, std::size_t>> shell_pairs(const DiscreteSpace& space, int m);

struct AhlforsReport {
    double fitted_d = 0.0;
    double c1_hat = 0.0;
    double c2_hat = 0.0;
    std::size_t sample_count = 0;
    double worst_ratio = 0.0;  // c2_hat / c1_hat
};

inline constexpr std::size_t kAhlforsAllCenters = 4096;
inline constexpr std::size_t kAhlforsCenterSample = 1024;

/// Log-log regression of mu(B(x, r)) on r over `samples` radii log-spaced in
/// [2 * 2^-level, diam / 2], each paired with every point as center (spaces up
/// to kAhlforsAllCenters points) or with kAhlforsCenterSample seeded random
/// centers. c1_hat, c2_hat: min and max of mu(B) / r^fitted_d over those pairs.
AhlforsReport ahlfors_fit(const DiscreteSpace& space, std::size_t samples, std::uint64_t seed = 1);

/// Real-valued function on the points of a space.
class GridFn {
public:
    GridFn(SpacePtr space, std::vector<double> values);

    const DiscreteSpace& space() const noexcept { return *space_; }
    const SpacePtr& space_ptr() const noexcept { return space_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }

    GridFn scaled(double c) const;
    /// (sum |f|^p w)^(1/p)
    double lp_norm(double p) const;

private:
    SpacePtr space_;
    std::vector<double> values_;
};

/// CSV rows (index, coord..., weight) plus a JSON metadata sidecar.
std::string space_csv(const DiscreteSpace& space);
std::string space_metadata_json(const DiscreteSpace& space);

}  // namespace heatbesov
