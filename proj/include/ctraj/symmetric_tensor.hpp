#pragma once

#include "ctraj/common.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace ctraj {

inline constexpr int kMaxDim = 3;
inline constexpr int kMaxTensorOrder = 8;

/// Multi-index in "count" form: counts[i] is how many times coordinate i is
/// differentiated.  Unused trailing entries are zero.
using MultiIndex = std::array<int, kMaxDim>;

std::int64_t binomial(int n, int k);

/// Number of independent entries of a symmetric order-r tensor in d dimensions.
inline std::int64_t symmetric_size(int d, int r) { return binomial(d + r - 1, r); }

/// Storage layout of a fully symmetric rank-r tensor over d coordinates.
///
/// Entries are the nondecreasing index tuples (i1 <= i2 <= ... <= ir) in
/// lexicographic order; e.g. d=2, r=2 gives (0,0), (0,1), (1,1).
class SymmetricLayout {
public:
    SymmetricLayout(int dim, int order);

    int dim() const { return dim_; }
    int order() const { return order_; }
    int size() const { return static_cast<int>(counts_.size()); }

    /// Offset of the entry addressed by an arbitrary (unsorted) index tuple.
    int offset(std::span<const int> indices) const;
    int offset(const MultiIndex& counts) const;

    const MultiIndex& counts(int offset) const { return counts_[offset]; }
    /// The sorted index tuple for an offset.
    std::vector<int> indices(int offset) const;

private:
    int key(const MultiIndex& counts) const;

    int dim_;
    int order_;
    std::vector<MultiIndex> counts_;
    std::vector<int> lookup_;
};

/// Layouts for orders 0..max_order sharing a dimension.
class SymmetricLayouts {
public:
    SymmetricLayouts() = default;
    SymmetricLayouts(int dim, int max_order);

    const SymmetricLayout& operator[](int order) const { return layouts_.at(order); }
    int dim() const { return dim_; }
    int max_order() const { return static_cast<int>(layouts_.size()) - 1; }

private:
    int dim_ = 0;
    std::vector<SymmetricLayout> layouts_;
};

/// Shared (cached) layouts; valid for the lifetime of the program.
const SymmetricLayouts& layouts_for(int dim);

int total_order(const MultiIndex& counts);

/// Product of binomial coefficients C(alpha_i, beta_i).
double multi_binomial(const MultiIndex& alpha, const MultiIndex& beta);

}  // namespace ctraj
