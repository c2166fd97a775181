#include "heatbesov/space.hpp"

#include "heatbesov/io.hpp"
#include "heatbesov/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace heatbesov {

namespace {

std::int64_t circle_offset(std::int64_t a, std::int64_t b, std::int64_t n) {
    std::int64_t k = a > b ? a - b : b - a;
    return std::min(k, n - k);
}

struct Cell {
    std::int64_t a, b, s;
};

}  // namespace

std::string_view to_string(SpaceKind kind) {
    switch (kind) {
        case SpaceKind::torus1d: return "torus1d";
        case SpaceKind::torus2d: return "torus2d";
        case SpaceKind::gasket: return "gasket";
    }
    return "unknown";
}

SpaceKind parse_space_kind(std::string_view name) {
    if (name == "torus1d") return SpaceKind::torus1d;
    if (name == "torus2d") return SpaceKind::torus2d;
    if (name == "gasket") return SpaceKind::gasket;
    throw std::invalid_argument("unknown space kind '" + std::string(name) + "'");
}

SpacePtr build_space(SpaceKind kind, int level) {
    int cap = 0;
    switch (kind) {
        case SpaceKind::torus1d: cap = DiscreteSpace::kMaxLevelTorus1d; break;
        case SpaceKind::torus2d: cap = DiscreteSpace::kMaxLevelTorus2d; break;
        case SpaceKind::gasket: cap = DiscreteSpace::kMaxLevelGasket; break;
    }
    if (level < 1 || level > cap) {
        throw std::out_of_range("level " + std::to_string(level) + " outside [1, " + std::to_string(cap) +
                                "] for " + std::string(to_string(kind)));
    }

    std::shared_ptr<DiscreteSpace> sp(new DiscreteSpace());
    sp->kind_ = kind;
    sp->level_ = level;
    sp->side_ = std::int64_t{1} << level;
    const std::int64_t side = sp->side_;

    if (kind == SpaceKind::torus1d) {
        sp->dim_ = 1.0;
        sp->diameter_ = 0.5;
        const auto n = static_cast<std::size_t>(side);
        sp->lattice_.resize(n);
        sp->neighbors_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            sp->lattice_[i] = {static_cast<std::int64_t>(i), 0};
            sp->neighbors_[i] = {(i + n - 1) % n, (i + 1) % n};
        }
        sp->weights_.assign(n, 1.0 / static_cast<double>(n));
    } else if (kind == SpaceKind::torus2d) {
        sp->dim_ = 2.0;
        sp->diameter_ = std::sqrt(2.0) / 2.0;
        const auto m = static_cast<std::size_t>(side);
        const std::size_t n = m * m;
        sp->lattice_.resize(n);
        sp->neighbors_.resize(n);
        for (std::size_t iy = 0; iy < m; ++iy) {
            for (std::size_t ix = 0; ix < m; ++ix) {
                const std::size_t i = iy * m + ix;
                sp->lattice_[i] = {static_cast<std::int64_t>(ix), static_cast<std::int64_t>(iy)};
                sp->neighbors_[i] = {iy * m + (ix + m - 1) % m, iy * m + (ix + 1) % m,
                                     ((iy + m - 1) % m) * m + ix, ((iy + 1) % m) * m + ix};
            }
        }
        sp->weights_.assign(n, 1.0 / static_cast<double>(n));
    } else {
        sp->dim_ = std::log(3.0) / std::log(2.0);
        sp->diameter_ = 1.0;
        std::unordered_map<std::int64_t, std::size_t> index;
        auto key = [side](std::int64_t a, std::int64_t b) { return a * (side + 1) + b; };
        auto add_vertex = [&](std::int64_t a, std::int64_t b, Edge parents, int birth) {
            auto [it, inserted] = index.emplace(key(a, b), sp->lattice_.size());
            if (inserted) {
                sp->lattice_.push_back({a, b});
                sp->parents_.push_back(parents);
                sp->birth_.push_back(birth);
            }
            return it->second;
        };
        add_vertex(0, 0, {0, 0}, 0);
        add_vertex(side, 0, {1, 1}, 0);
        add_vertex(0, side, {2, 2}, 0);
        sp->level_counts_.push_back(3);
        sp->level_edges_.push_back({{0, 1}, {1, 2}, {0, 2}});

        std::vector<Cell> cells{{0, 0, side}};
        for (int m = 1; m <= level; ++m) {
            std::vector<Cell> next;
            next.reserve(cells.size() * 3);
            std::vector<Edge> edges;
            edges.reserve(cells.size() * 9);
            for (const Cell& c : cells) {
                const std::int64_t h = c.s / 2;
                const std::size_t A = index.at(key(c.a, c.b));
                const std::size_t B = index.at(key(c.a + c.s, c.b));
                const std::size_t C = index.at(key(c.a, c.b + c.s));
                const std::size_t ab = add_vertex(c.a + h, c.b, {A, B}, m);
                const std::size_t bc = add_vertex(c.a + h, c.b + h, {B, C}, m);
                const std::size_t ac = add_vertex(c.a, c.b + h, {A, C}, m);
                next.push_back({c.a, c.b, h});
                next.push_back({c.a + h, c.b, h});
                next.push_back({c.a, c.b + h, h});
                edges.insert(edges.end(), {{A, ab}, {ab, ac}, {A, ac}});
                edges.insert(edges.end(), {{ab, B}, {B, bc}, {ab, bc}});
                edges.insert(edges.end(), {{ac, bc}, {bc, C}, {ac, C}});
            }
            cells = std::move(next);
            sp->level_counts_.push_back(sp->lattice_.size());
            sp->level_edges_.push_back(std::move(edges));
        }

        const std::size_t n = sp->lattice_.size();
        sp->neighbors_.assign(n, {});
        for (const Edge& e : sp->level_edges_.back()) {
            sp->neighbors_[e.u].push_back(e.v);
            sp->neighbors_[e.v].push_back(e.u);
        }
        for (auto& nb : sp->neighbors_) std::sort(nb.begin(), nb.end());
        const double total_degree = 2.0 * static_cast<double>(sp->level_edges_.back().size());
        sp->weights_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            sp->weights_[i] = static_cast<double>(sp->neighbors_[i].size()) / total_degree;
        }
    }

    double total = 0.0;
    for (double w : sp->weights_) total += w;
    sp->total_measure_ = total;
    return sp;
}

std::array<double, 2> DiscreteSpace::coords(std::size_t i) const {
    const LatticeCoord& c = lattice_.at(i);
    const double h = 1.0 / static_cast<double>(side_);
    if (kind_ == SpaceKind::gasket) {
        return {(static_cast<double>(c.a) + 0.5 * static_cast<double>(c.b)) * h,
                static_cast<double>(c.b) * (std::sqrt(3.0) / 2.0) * h};
    }
    return {static_cast<double>(c.a) * h, static_cast<double>(c.b) * h};
}

std::int64_t DiscreteSpace::lattice_dist2(std::size_t i, std::size_t j) const noexcept {
    const LatticeCoord& p = lattice_[i];
    const LatticeCoord& q = lattice_[j];
    switch (kind_) {
        case SpaceKind::torus1d: {
            const std::int64_t k = circle_offset(p.a, q.a, side_);
            return k * k;
        }
        case SpaceKind::torus2d: {
            const std::int64_t kx = circle_offset(p.a, q.a, side_);
            const std::int64_t ky = circle_offset(p.b, q.b, side_);
            return kx * kx + ky * ky;
        }
        case SpaceKind::gasket: {
            const std::int64_t da = p.a - q.a;
            const std::int64_t db = p.b - q.b;
            return da * da + da * db + db * db;
        }
    }
    return 0;
}

double DiscreteSpace::dist(std::size_t i, std::size_t j) const noexcept {
    return std::sqrt(static_cast<double>(lattice_dist2(i, j))) / static_cast<double>(side_);
}

bool DiscreteSpace::within_dyadic(std::size_t i, std::size_t j, int m) const noexcept {
    const std::int64_t q = lattice_dist2(i, j);
    if (m > level_) return q == 0;
    if (m < 0) return true;
    return q <= (std::int64_t{1} << (2 * (level_ - m)));
}

int DiscreteSpace::shell_index(std::size_t i, std::size_t j) const noexcept {
    const auto q = static_cast<std::uint64_t>(lattice_dist2(i, j));
    // smallest c with 4^c >= q
    const int c = (static_cast<int>(std::bit_width(q - 1)) + 1) / 2;
    return level_ - c;
}

std::size_t DiscreteSpace::level_vertex_count(int m) const {
    if (kind_ != SpaceKind::gasket) throw std::invalid_argument("level_vertex_count: gasket only");
    if (m < 0 || m > level_) throw std::out_of_range("level_vertex_count: level out of range");
    return level_counts_[static_cast<std::size_t>(m)];
}

const std::vector<Edge>& DiscreteSpace::level_edges(int m) const {
    if (kind_ != SpaceKind::gasket) throw std::invalid_argument("level_edges: gasket only");
    if (m < 0 || m > level_) throw std::out_of_range("level_edges: level out of range");
    return level_edges_[static_cast<std::size_t>(m)];
}

Edge DiscreteSpace::midpoint_parents(std::size_t i) const {
    if (kind_ != SpaceKind::gasket) throw std::invalid_argument("midpoint_parents: gasket only");
    return parents_.at(i);
}

int DiscreteSpace::birth_level(std::size_t i) const {
    if (kind_ == SpaceKind::gasket) return birth_.at(i);
    // torus: the level at which the lattice point first appears in the dyadic refinement
    const LatticeCoord& c = lattice_.at(i);
    auto level_of = [this](std::int64_t a) {
        if (a == 0) return 0;
        return level_ - std::countr_zero(static_cast<std::uint64_t>(a));
    };
    return std::max(level_of(c.a), level_of(c.b));
}

double DiscreteSpace::walk_dim() const noexcept {
    if (kind_ == SpaceKind::gasket) return std::log(5.0) / std::log(2.0);
    return 2.0;
}

double ball_measure(const DiscreteSpace& space, std::size_t x, double r) {
    if (x >= space.size()) throw std::out_of_range("ball_measure: invalid point index");
    if (!(r >= 0.0)) throw std::invalid_argument("ball_measure: radius must be nonnegative");
    const double scaled = r * static_cast<double>(std::int64_t{1} << space.level());
    const double r2 = scaled * scaled;
    double mass = 0.0;
    for (std::size_t y = 0; y < space.size(); ++y) {
        if (static_cast<double>(space.lattice_dist2(x, y)) <= r2) mass += space.weights()[y];
    }
    return mass;
}

std::vector<std::pair<std::size_t, std::size_t>> shell_pairs(const DiscreteSpace& space, int m) {
    if (m < 0) throw std::out_of_range("shell_pairs: m must be nonnegative");
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (m > space.level()) return out;
    for (std::size_t i = 0; i < space.size(); ++i) {
        for (std::size_t j = i + 1; j < space.size(); ++j) {
            if (space.shell_index(i, j) == m) out.emplace_back(i, j);
        }
    }
    return out;
}

AhlforsReport ahlfors_fit(const DiscreteSpace& space, std::size_t samples, std::uint64_t seed) {
    if (samples < 10) throw std::invalid_argument("ahlfors_fit: at least 10 samples required");
    const double r_lo = 2.0 / static_cast<double>(std::int64_t{1} << space.level());
    const double r_hi = space.diameter() / 2.0;
    if (!(r_lo < r_hi)) throw std::invalid_argument("ahlfors_fit: space too small to sample the radius range");

    const std::size_t n = space.size();
    std::vector<std::size_t> centers;
    if (n <= kAhlforsAllCenters) {
        centers.resize(n);
        for (std::size_t i = 0; i < n; ++i) centers[i] = i;
    } else {
        Rng rng(seed);
        for (std::size_t i = 0; i < kAhlforsCenterSample; ++i) centers.push_back(rng.index(n));
    }
    std::vector<double> lr, lm;
    lr.reserve(samples * centers.size());
    lm.reserve(samples * centers.size());
    for (std::size_t k = 0; k < samples; ++k) {
        const double r = r_lo * std::pow(r_hi / r_lo, (static_cast<double>(k) + 0.5) / static_cast<double>(samples));
        for (std::size_t x : centers) {
            lr.push_back(std::log(r));
            lm.push_back(std::log(ball_measure(space, x, r)));
        }
    }
    const std::size_t count = lr.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        mx += lr[k];
        my += lm[k];
    }
    mx /= static_cast<double>(count);
    my /= static_cast<double>(count);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        sxy += (lr[k] - mx) * (lm[k] - my);
        sxx += (lr[k] - mx) * (lr[k] - mx);
    }
    AhlforsReport rep;
    rep.fitted_d = sxy / sxx;
    rep.sample_count = count;
    rep.c1_hat = HUGE_VAL;
    rep.c2_hat = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const double c = std::exp(lm[k] - rep.fitted_d * lr[k]);
        rep.c1_hat = std::min(rep.c1_hat, c);
        rep.c2_hat = std::max(rep.c2_hat, c);
    }
    rep.worst_ratio = rep.c2_hat / rep.c1_hat;
    return rep;
}

GridFn::GridFn(SpacePtr space, std::vector<double> values) : space_(std::move(space)), values_(std::move(values)) {
    if (!space_) throw std::invalid_argument("GridFn: null space");
    if (values_.size() != space_->size()) {
        throw std::invalid_argument("GridFn: " + std::to_string(values_.size()) + " values for a space of " +
                                    std::to_string(space_->size()) + " points");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw std::invalid_argument("GridFn: non-finite value");
    }
}

GridFn GridFn::scaled(double c) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= c;
    return GridFn(space_, std::move(v));
}

double GridFn::lp_norm(double p) const {
    const auto w = space_->weights();
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) s += std::pow(std::abs(values_[i]), p) * w[i];
    return std::pow(s, 1.0 / p);
}

std::string space_csv(const DiscreteSpace& space) {
    CsvTable t(space.kind() == SpaceKind::torus1d ? std::vector<std::string>{"index", "x", "weight"}
                                                   : std::vector<std::string>{"index", "x", "y", "weight"});
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto c = space.coords(i);
        if (space.kind() == SpaceKind::torus1d) {
            t.add_row({format_int(i), format_double(c[0]), format_double(space.weight(i))});
        } else {
            t.add_row({format_int(i), format_double(c[0]), format_double(c[1]), format_double(space.weight(i))});
        }
    }
    return t.str();
}

std::string space_metadata_json(const DiscreteSpace& space) {
    nlohmann::json j;
    j["kind"] = to_string(space.kind());
    j["level"] = space.level();
    j["points"] = space.size();
    j["hausdorff_dim"] = space.hausdorff_dim();
    j["walk_dim"] = space.walk_dim();
    j["diameter"] = space.diameter();
    j["total_measure"] = space.total_measure();
    return j.dump(2);
}

}  // namespace heatbesov
