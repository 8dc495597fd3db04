#pragma once

#include "ctraj/complex_dynamics.hpp"

#include <string>
#include <vector>

namespace ctraj {

/// Tridiagonal matrix of the discretized Gaussian path integral: diagonal
/// q, 2 - (T^2/m N^2) V''(x(iT/N)), off-diagonals -1.
struct DiscretePathMatrix {
    int N = 0;
    double T = 0.0;
    double mass = 1.0;
    std::vector<Complex> diag;

    CMatrix dense() const;
    /// Leading principal minors D_1..D_N by the three-term recursion.
    std::vector<Complex> minors() const;
};

/// Samples the classical path at t_k = kT/N (k < N) and builds A.  1D only.
DiscretePathMatrix path_matrix(const CVector& x_start, const PotentialModel& model, const SInit& sinit, double T,
                               int N, const DynamicsOptions& options = {});

struct DeterminantResult {
    int N = 0;
    Complex D_N{0.0, 0.0};
    Complex det_U{0.0, 0.0};
    double error = 0.0;  // |D_N - det U(T)|
};

DeterminantResult discrete_determinant(const CVector& x_start, const PotentialModel& model, const SInit& sinit,
                                       double T, int N, const DynamicsOptions& options = {});

/// Relative error of (T/N) (A^{-1})_{ij} against D(t_i) D(t_j) int_{max(t_i,t_j)}^T du / D(u)^2.
struct InverseLimitResult {
    Complex discrete{0.0, 0.0};
    Complex continuum{0.0, 0.0};
    double relative_error = 0.0;
};
InverseLimitResult inverse_limit_check(const CVector& x_start, const PotentialModel& model, const SInit& sinit,
                                       double T, int N, int i, int j, const DynamicsOptions& options = {});

/// Moments of the normalized oscillatory Gaussian
///   int d^N Delta exp(i N/2 Delta A Delta^T) (...) ,  int d^N Delta exp(...) = 1/sqrt(det A).
enum class MomentPattern { I4, I3J3, IJ, I3J };

/// 1/sqrt(det A) on the branch fixed by the rotated contour (Re A positive definite).
Complex inv_sqrt_det(const CMatrix& A);
Complex gaussian_moment(const CMatrix& A, MomentPattern pattern, int i, int j);
/// Brute-force oracle: tensor trapezoid along the contour Delta = e^{i pi/4} y; N <= 3.
Complex gaussian_moment_quadrature(const CMatrix& A, MomentPattern pattern, int i, int j, int points = 0);

struct FirstOrderFactor {
    Complex factor{1.0, 0.0};
    /// (factor - 1)/(i hbar), the iterated-integral S_2
    Complex S2_paths{0.0, 0.0};
    /// S_2 from the ODE hierarchy along the same branch.
    Complex S2_hierarchy{0.0, 0.0};
    /// Nested single-integral form of S_2 (four iterated integrals).
    Complex S2_nested{0.0, 0.0};
    double quadrature_error = 0.0;  // Richardson estimate, relative
    double relative_error = 0.0;    // |factor - (1 + i hbar S2)| / |i hbar S2|
};

/// Multiplicative first-order correction from the path integral, evaluated
/// by quadrature on a dense re-integration of the branch.  Gaussian data, 1D.
FirstOrderFactor first_order_factor(const CVector& x_start, const PotentialModel& model, const SInit& sinit,
                                    double T, double hbar, const DynamicsOptions& options = {},
                                    std::size_t intervals = 4000);

/// As first_order_factor, throwing ToleranceExceeded above `tolerance`.
FirstOrderFactor verify_first_order_factor(const CVector& x_start, const PotentialModel& model, const SInit& sinit,
                                           double T, double hbar, double tolerance = 1e-4,
                                           const DynamicsOptions& options = {});

/// Two-parameter Stirling approximant sqrt(2 pi S) N^n e^{-N} and its first correction.
struct StirlingResult {
    double n = 0.0, N = 0.0, S = 0.0;
    double correction = 0.0;  // bracket term
    double log_leading = 0.0;
    double log_corrected = 0.0;
    double log_reference = 0.0;  // log Gamma(n+1)
    double leading_error = 0.0;  // relative
    double corrected_error = 0.0;
};
StirlingResult stirling_modified(double n, double N, double S);
/// log n! by quadrature of int_0^inf exp(n log x - x) dx (secondary reference, moderate n).
double log_factorial_quadrature(double n);

struct CheckReport {
    std::string name;
    std::string parameters;  // JSON object text
    double measured = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};
std::string reports_to_json(const std::vector<CheckReport>& reports);

}  // namespace ctraj
