#include "heatbesov/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace heatbesov {

std::vector<double> log_midpoints(double a, double b, int count) {
    if (!(a > 0.0 && b > a) || count < 1) throw std::invalid_argument("log_midpoints: need 0 < a < b and count >= 1");
    std::vector<double> t(static_cast<std::size_t>(count));
    const double la = std::log(a);
    const double width = std::log(b) - la;
    for (int j = 0; j < count; ++j) t[static_cast<std::size_t>(j)] = std::exp(la + width * (j + 0.5) / count);
    return t;
}

std::vector<TimeNode> band_nodes(double walk_dim, int m, int per_band) {
    if (per_band < 1) throw std::invalid_argument("band_nodes: per_band must be >= 1");
    const double lo = std::exp2(-(m + 1) * walk_dim);
    const double hi = std::exp2(-m * walk_dim);
    const double w = walk_dim * std::numbers::ln2 / per_band;
    std::vector<TimeNode> out;
    for (double t : log_midpoints(lo, hi, per_band)) out.push_back({t, w, m});
    return out;
}

std::vector<TimeNode> tail_nodes(double walk_dim, double t_max, int per_band) {
    std::vector<TimeNode> out;
    if (!(t_max > 1.0)) return out;
    if (per_band < 1) throw std::invalid_argument("tail_nodes: per_band must be >= 1");
    const double total = std::log(t_max);
    const int bands = static_cast<int>(std::ceil(total / (walk_dim * std::numbers::ln2) - 1e-12));
    const double width = total / bands;
    for (int b = 0; b < bands; ++b) {
        const double lo = std::exp(b * width);
        const double hi = std::exp((b + 1) * width);
        for (double t : log_midpoints(lo, hi, per_band)) out.push_back({t, width / per_band, -(b + 1)});
    }
    return out;
}

std::vector<double> heat_time_grid(double walk_dim, int m_max, int per_band, double t_max) {
    std::vector<double> t;
    for (int m = 0; m <= m_max; ++m) {
        for (const TimeNode& n : band_nodes(walk_dim, m, per_band)) t.push_back(n.t);
    }
    for (const TimeNode& n : tail_nodes(walk_dim, t_max, per_band)) t.push_back(n.t);
    std::sort(t.begin(), t.end());
    return t;
}

}  // namespace heatbesov
