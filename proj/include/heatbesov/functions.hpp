#pragma once

#include "heatbesov/space.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace heatbesov {

/// A built-in test function, or a CSV file of (index, value) rows when
/// family == "csv". Fields not used by the family are ignored.
struct FunctionSpec {
    std::string family = "constant";
    double c = 1.0;                                // constant
    int k = 1;                                     // fourier-mode
    int cell_level = 1;                            // cell-indicator
    std::int64_t cell_index = 0;                   // cell-indicator
    std::array<double, 3> boundary{1.0, 0.0, 0.0};  // gasket-harmonic, values at the three corners
    double h = 0.5;                                // random-hoelder
    double sigma = 1.0;                            // random-hoelder
    std::uint64_t seed = 1;                        // random-hoelder
    std::string path;                              // csv

    /// Short identifier with the parameters that matter, e.g. "random-hoelder(h=0.6,seed=7)".
    std::string label() const;
};

/// Families: constant, linear (first coordinate), fourier-mode sin(2 pi k x)
/// (tori), cell-indicator, gasket-harmonic, random-hoelder, csv.
///
/// cell-indicator: on torus1d the interval [i 2^-l, (i+1) 2^-l); on torus2d the
/// square with row-major index i; on the gasket the closed level-l cell whose
/// address digits (base 3, most significant first) select the corner 0, 1, 2.
///
/// random-hoelder: midpoint displacement. Points of dyadic level m get the
/// average of their parents plus sigma 2^(-m h) N(0,1); coarse levels consume
/// the random stream first, so values on a coarse point do not depend on the
/// space level.
///
/// Throws std::invalid_argument for unknown families, unsupported space kinds
/// and CSV files whose rows do not cover every index exactly once.
GridFn load_function(const SpacePtr& space, const FunctionSpec& spec);

/// Harmonic extension of corner values on the finest gasket graph (unit conductances).
std::vector<double> gasket_harmonic(const DiscreteSpace& space, const std::array<double, 3>& boundary);

}  // namespace heatbesov
