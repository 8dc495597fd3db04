#pragma once

#include "ctraj/common.hpp"
#include "ctraj/symmetric_tensor.hpp"

#include <map>
#include <string>
#include <vector>

namespace ctraj {

enum class PotentialKind { Free, Harmonic, QuarticPerturbedHarmonic, Polynomial, Morse1D };

std::string_view to_string(PotentialKind kind);
PotentialKind potential_kind_from_string(std::string_view name);

inline constexpr int kMaxPotentialOrder = 6;

/// All partial derivatives of V through `order` at one complex point.
/// tensors[r] uses the symmetric layout of order r.
struct DerivativeBundle {
    int order = 0;
    int dim = 0;
    std::vector<std::vector<Complex>> tensors;
    CVector query_point;

    Complex value() const { return tensors[0][0]; }
    Complex at(std::span<const int> indices) const;
    Complex at(std::initializer_list<int> indices) const {
        return at(std::span<const int>(indices.begin(), indices.size()));
    }
    CVector gradient() const;
    CMatrix hessian() const;
};

/// Analytic potential on complexified configuration space.
///
/// Parameters by kind (all real):
///   free                       -- none
///   harmonic                   -- k (all coordinates) or k1..kd: V = sum_i k_i x_i^2 / 2
///   quartic_perturbed_harmonic -- k / k1..kd, lambda (or lambda1..lambdad), coupling:
///                                 V = sum_i (k_i x_i^2/2 + lambda_i x_i^4) + coupling sum_{i<j} x_i^2 x_j^2
///   polynomial                 -- c<e1>[_<e2>[_<e3>]]: coefficient of prod_i x_i^{e_i}
///   morse_1d                   -- De, alpha, xe: V = De (1 - exp(-alpha (x - xe)))^2
class PotentialModel {
public:
    PotentialModel(PotentialKind kind, std::map<std::string, double> params, int dimension);

    static PotentialModel free(int dimension);
    static PotentialModel harmonic(double k, int dimension = 1);
    static PotentialModel quartic(double k, double lambda, int dimension = 1, double coupling = 0.0);

    PotentialKind kind() const { return kind_; }
    int dimension() const { return dim_; }
    const std::map<std::string, double>& params() const { return params_; }

    Complex value(const CVector& z) const;
    DerivativeBundle eval_derivs(const CVector& z, int max_order) const;

    /// eval_derivs for real coordinates (grid use).
    Complex value_real(std::span<const double> x) const;

private:
    struct Monomial {
        double coeff;
        MultiIndex exponents;
    };

    double param(const std::string& name, double fallback) const;
    double per_coordinate(const std::string& base, int i, double fallback) const;

    PotentialKind kind_;
    std::map<std::string, double> params_;
    int dim_;
    std::vector<Monomial> monomials_;
    double morse_de_ = 0.0, morse_alpha_ = 0.0, morse_xe_ = 0.0;
};

DerivativeBundle eval_derivs(const PotentialModel& model, const CVector& z, int max_order);

/// Worst relative discrepancy between the analytic order-`order` tensor and
/// central differences (step h along each real axis) of the order-(order-1) tensor.
double finite_diff_check(const PotentialModel& model, const CVector& z, int order, double h);

}  // namespace ctraj
