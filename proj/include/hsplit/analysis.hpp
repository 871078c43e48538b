#pragma once

#include "hsplit/core.hpp"

#include <string>
#include <string_view>

namespace hsplit {

/// Sensitivities in the transformed frame: dU/dS~, d2U/dS~2, dU/dv.
struct Greeks {
    Surface delta;
    Surface gamma;
    Surface vega;
};

/// Central differences inside, second-order one-sided differences on the edges.
/// Requires I >= 3 and J >= 3.
Greeks greeks(const Surface& u, const GridSpec& grid);

enum class ErrorNodes { All, Interior };

std::string to_string(ErrorNodes nodes);
ErrorNodes parse_error_nodes(std::string_view name);

/// ||num - ref||_2 / ||ref||_2 over the selected node set (unweighted).
double relative_l2_error(const Surface& num, const Surface& ref, ErrorNodes nodes = ErrorNodes::All);

/// Bilinear interpolation of u at (s, v) inside the grid.
double interpolate(const Surface& u, const GridSpec& grid, double s, double v);

} // namespace hsplit
