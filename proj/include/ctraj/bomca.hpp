#pragma once

#include "ctraj/complex_dynamics.hpp"
#include "ctraj/hierarchy.hpp"

#include <vector>

namespace ctraj {

bool bomca_supported(int n, int d);

struct BOMCAState {
    int order = 0;
    int dim = 0;
    double T = 0.0;
    CVector x;
    CVector v;
    Complex S{0.0, 0.0};  // includes S_init(x(0))
    /// derivs[r]: symmetric order-r tensor of S for r = 0..2n.
    std::vector<std::vector<Complex>> derivs;
    int scalar_count = 0;  // C(d+2n, d) + d
};

struct BOMCARun {
    BOMCAState state;
    FlowResult flow;
    Hierarchy hierarchy;
};

/// Truncated order-n BOMCA system; hbar is taken from the packet.
BOMCARun evolve_bomca(const CVector& x_start, const PotentialModel& model, const SInit& sinit, int n, double T,
                      const DynamicsOptions& options = {}, std::size_t intervals = 0);

/// Newton on the final position of the BOMCA trajectory with a
/// finite-difference Jacobian (step 1e-6 (1 + |x_start|)).
Branch bomca_shoot(const CVector& X, const CVector& guess, const PotentialModel& model, const SInit& sinit, int n,
                   double T, const ShootingOptions& shooting = {}, const DynamicsOptions& dynamics = {});

/// exp(i S(T) / hbar).
Complex bomca_wavefunction_branch(const BOMCAState& state, double hbar);

enum class QVariant { BomcaNative, ClassicalPathQ };

/// Sampled correction functions for the near-classical path representation
/// m X'' + V'(X) = m N,  m f'' + V''(X) f = -q f.
struct QCorrectionProfile {
    QVariant variant = QVariant::BomcaNative;
    std::vector<double> times;
    std::vector<Complex> N;
    std::vector<Complex> q;
    std::vector<Complex> f;
    Complex K{0.0, 0.0};
    Complex L{0.0, 0.0};
};

/// N = (i hbar / 2m^2) S''',  q = -(i hbar / 2m) S'''',  f = exp(int S''/m); 1D, n = 2.
QCorrectionProfile bomca_native_profile(const BOMCARun& run);

struct FRepresentationReport {
    double zzz4_residual = 0.0;       // f^3 S''' + int V''' f^3 - K
    double fourth_residual = 0.0;     // f^4 S'''' - L + int f^4 (V'''' + 3 S'''^2/m)
    double f_equation_residual = 0.0; // m f'' + V'' f - (i hbar / 2m f^3)(L - int ...)
    double q_consistency = 0.0;       // native q against the path-integral q with N != 0
    Complex K{0.0, 0.0};
    Complex L{0.0, 0.0};
    double max_residual() const;
};

/// Measures the f-representation residuals on a dense 1D n = 2 run
/// (relative to the magnitude of the terms involved).
FRepresentationReport measure_f_representation(const BOMCARun& run, const PotentialModel& model);

/// As measure_f_representation, throwing ToleranceExceeded above `tolerance`.
FRepresentationReport verify_f_representation(const BOMCARun& run, const PotentialModel& model,
                                              double tolerance = 1e-6);

struct ClassicalQResult {
    Complex psi{0.0, 0.0};
    Complex log_f{0.0, 0.0};
    QCorrectionProfile profile;
};

/// Classical path with the modified Jacobi equation m f'' + V'' f = -q f,
/// q chosen so the first-order path-integral correction vanishes with N = 0.
/// 1D, Gaussian initial data.
ClassicalQResult classical_path_q_variant(const Branch& branch, const PotentialModel& model, const SInit& sinit,
                                          double hbar, const DynamicsOptions& options = {});

}  // namespace ctraj
