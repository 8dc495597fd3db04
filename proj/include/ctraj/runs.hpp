#pragma once

#include "ctraj/config.hpp"
#include "ctraj/path_checks.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ctraj {

/// Semiclassical field over the configured target grid (cold or continued).
SemiclassicalField run_propagate(const RunConfig& config);

/// One row per (target, branch) and a "total" row per target; %.17g throughout.
std::string field_to_csv(const SemiclassicalField& field);

struct CompareOutput {
    SemiclassicalField field;
    GridWaveFunction oracle;
    Comparison comparison;
};
/// Semiclassical field, split-step oracle on the configured grid, comparison.
CompareOutput run_compare(const RunConfig& config);
std::string compare_to_json(const RunConfig& config, const CompareOutput& out);

enum class CheckSelector { Determinant, Ainv, Moments, Foc1, Stirling, Fsubst, All };
CheckSelector check_selector_from_string(std::string_view s);

/// Path-integral and f-representation checks on the configured model and
/// packet.  The 1D checks use the lowest-|Im| branch reaching x0 + p0 T/m.
/// With All, 1D-only checks are left out for d > 1; asking for one
/// explicitly is a ConfigError.
std::vector<CheckReport> run_checks(const RunConfig& config, CheckSelector selector);

struct PropagatorOutput {
    PropagatorQuery query;
    std::vector<TwoSidedBranch> branches;
    OverlapResult overlap;
    std::optional<Complex> closed_form;  // free particle, d = 1
    std::optional<Complex> exponent;     // its exponential factor alone
    std::optional<Complex> oracle;       // grid inner product when [oracle] enabled
};
PropagatorOutput run_propagator(const RunConfig& config);
std::string propagator_to_json(const PropagatorOutput& out);

/// Per-target branch search diagnostics as JSON.
std::string branches_to_json(const SemiclassicalField& field);

}  // namespace ctraj
