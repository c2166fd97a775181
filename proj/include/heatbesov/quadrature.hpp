#pragma once

#include <vector>

namespace heatbesov {

/// Node of a log-scale quadrature for integrals of the form  int g(t) dt/t.
struct TimeNode {
    double t = 0.0;
    double weight = 0.0;
    int band = 0;  // m >= 0 for [2^-(m+1)dw, 2^-m dw]; negative for the t > 1 tail
};

/// `count` log-midpoints of [a, b]: a (b/a)^((j+1/2)/count).
std::vector<double> log_midpoints(double a, double b, int count);

/// Log-midpoint rule on the band [2^-(m+1)dw, 2^-m dw].
std::vector<TimeNode> band_nodes(double walk_dim, int m, int per_band);

/// Log-midpoint rule on [1, t_max], split into ceil(ln t_max / (dw ln 2))
/// equal log-width bands labelled -1, -2, ...  Empty when t_max <= 1.
std::vector<TimeNode> tail_nodes(double walk_dim, double t_max, int per_band);

/// Sorted union of the band nodes m = 0..m_max and the tail nodes: the kernel
/// time grid that covers every heat-functional quadrature for these settings.
std::vector<double> heat_time_grid(double walk_dim, int m_max, int per_band, double t_max);

}  // namespace heatbesov
