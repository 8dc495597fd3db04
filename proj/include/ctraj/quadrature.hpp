#pragma once

#include "ctraj/common.hpp"

#include <vector>

namespace ctraj {

/// Running integral F_k = int_{t_0}^{t_k} f on a uniform grid with spacing h,
/// fourth-order accurate (local cubic through four neighbours).
std::vector<Complex> cumulative_integral(const std::vector<Complex>& f, double h);

/// Running integral from the right end: R_k = int_{t_k}^{t_last} f.
std::vector<Complex> cumulative_integral_from_end(const std::vector<Complex>& f, double h);

/// Composite Simpson rule (odd point count); falls back to the 3/8 rule on
/// the last panel when the point count is even.
Complex simpson(const std::vector<Complex>& f, double h);

/// Fourth-order centred first derivative on a uniform grid (one-sided at the ends).
std::vector<Complex> derivative(const std::vector<Complex>& f, double h);

}  // namespace ctraj
