#pragma once

#include "ctraj/common.hpp"
#include "ctraj/potential.hpp"
#include "ctraj/symmetric_tensor.hpp"

#include <vector>

namespace ctraj {

enum class HierarchyKind { Wkb, Bomca };

/// Derivative hierarchy transported along a trajectory x(t) with
/// dx_j/dt = dS_j / m_j.
///
/// Storage is one flat array F of chains.  Chain k holds the symmetric
/// derivative tensors of S_k of orders 0..max_order(k).  For the complex WKB
/// series there are n+1 chains with max order 2(n-k); for BOMCA there is a
/// single chain (the full S) of max order 2n.  Orders 0 and 1 of chain 0 are
/// not independent ODE variables: they are S_init(x(0)) + action and m v.
///
/// rhs() returns the total time derivative d/dt along the trajectory of every
/// entry of F, obtained by differentiating the quantum Hamilton-Jacobi
/// equation (or its hbar expansion) with the Leibniz rule.  For chain 0 at
/// order 0 the result is the Lagrangian-type rate 1/2 m v^2 - V (+ the hbar
/// Laplacian term for BOMCA); at order 1 it is the force (+ correction).
class Hierarchy {
public:
    static Hierarchy wkb(int n, const RVector& masses);
    static Hierarchy bomca(int n, const RVector& masses, double hbar);

    HierarchyKind kind() const { return kind_; }
    int order() const { return n_; }
    double hbar() const { return hbar_; }
    int dim() const { return dim_; }
    int chains() const { return static_cast<int>(max_order_.size()); }
    int max_order(int chain) const { return max_order_[chain]; }
    /// Highest potential derivative the right-hand side consumes.
    int potential_order() const { return potential_order_; }

    int flat_size() const { return flat_size_; }
    int index(int chain, int order, int offset) const { return base_[chain][order] + offset; }
    int index(int chain, const MultiIndex& alpha) const;

    /// Number of scalar functions carried (all chains, all orders, including
    /// the derived chain-0 orders 0 and 1).
    int scalar_count() const { return flat_size_; }

    /// Writes chain-0 orders 0 and 1 from the trajectory quantities.
    void fill_classical(std::vector<Complex>& F, Complex s0, const CVector& momentum) const;

    /// dF = d/dt F along the trajectory.  F must have chain-0 orders 0/1 filled.
    void rhs(const std::vector<Complex>& F, const DerivativeBundle& V, std::vector<Complex>& dF) const;

    /// Initial data at x(0): chain 0 from S_init, all other chains zero.
    std::vector<Complex> initial(const std::vector<std::vector<Complex>>& sinit_tensors) const;

    /// Largest |entry| of the chain-0 second-derivative tensor.
    double max_s0_hessian(const std::vector<Complex>& F) const;
    CMatrix s0_hessian(const std::vector<Complex>& F) const;

private:
    struct Product {
        Complex coef;
        int out, a, b;
    };
    struct Linear {
        Complex coef;
        int out, a;
    };
    struct PotentialTerm {
        int out, order, offset;
    };

    Hierarchy(HierarchyKind kind, int n, const RVector& masses, double hbar);
    void build();

    HierarchyKind kind_;
    int n_;
    int dim_;
    RVector weights_;  // 1/m_j
    double hbar_;
    int potential_order_ = 0;
    std::vector<int> max_order_;
    std::vector<std::vector<int>> base_;
    int flat_size_ = 0;
    std::vector<Product> products_;
    std::vector<Linear> linears_;
    std::vector<PotentialTerm> potentials_;
};

}  // namespace ctraj
