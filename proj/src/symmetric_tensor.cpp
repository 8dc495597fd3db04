#include "ctraj/symmetric_tensor.hpp"

#include <algorithm>
#include <mutex>
#include <string>

namespace ctraj {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::IntegrationFailure: return "IntegrationFailure";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::SingularJacobian: return "SingularJacobian";
        case ErrorCode::RiccatiBlowup: return "RiccatiBlowup";
        case ErrorCode::ToleranceExceeded: return "ToleranceExceeded";
        case ErrorCode::QuadratureFailure: return "QuadratureFailure";
        case ErrorCode::SingularMatrix: return "SingularMatrix";
        case ErrorCode::CausticAtT: return "CausticAtT";
        case ErrorCode::GridTooCoarse: return "GridTooCoarse";
        case ErrorCode::PacketOutOfBounds: return "PacketOutOfBounds";
        case ErrorCode::BoundaryContamination: return "BoundaryContamination";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

std::int64_t binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

int total_order(const MultiIndex& counts) {
    int s = 0;
    for (int c : counts) s += c;
    return s;
}

double multi_binomial(const MultiIndex& alpha, const MultiIndex& beta) {
    double r = 1.0;
    for (int i = 0; i < kMaxDim; ++i) r *= static_cast<double>(binomial(alpha[i], beta[i]));
    return r;
}

namespace {

void enumerate(int dim, int order, int start, std::vector<int>& current,
               std::vector<MultiIndex>& out) {
    if (static_cast<int>(current.size()) == order) {
        MultiIndex c{};
        for (int i : current) ++c[i];
        out.push_back(c);
        return;
    }
    for (int i = start; i < dim; ++i) {
        current.push_back(i);
        enumerate(dim, order, i, current, out);
        current.pop_back();
    }
}

}  // namespace

SymmetricLayout::SymmetricLayout(int dim, int order) : dim_(dim), order_(order) {
    if (dim < 1 || dim > kMaxDim) throw Error(ErrorCode::DimensionMismatch, "dimension out of range");
    if (order < 0 || order > kMaxTensorOrder) throw Error(ErrorCode::UnsupportedOrder, "tensor order out of range");
    std::vector<int> current;
    enumerate(dim, order, 0, current, counts_);
    int span = 1;
    for (int i = 0; i < dim; ++i) span *= (order + 1);
    lookup_.assign(span, -1);
    for (int o = 0; o < size(); ++o) lookup_[key(counts_[o])] = o;
}

int SymmetricLayout::key(const MultiIndex& counts) const {
    int k = 0;
    for (int i = dim_ - 1; i >= 0; --i) k = k * (order_ + 1) + counts[i];
    return k;
}

int SymmetricLayout::offset(const MultiIndex& counts) const {
    if (total_order(counts) != order_) throw Error(ErrorCode::InvalidArgument, "multi-index order mismatch");
    for (int i = dim_; i < kMaxDim; ++i) {
        if (counts[i] != 0) throw Error(ErrorCode::DimensionMismatch, "multi-index exceeds dimension");
    }
    return lookup_[key(counts)];
}

int SymmetricLayout::offset(std::span<const int> indices) const {
    if (static_cast<int>(indices.size()) != order_) {
        throw Error(ErrorCode::InvalidArgument, "index tuple length differs from tensor order");
    }
    MultiIndex c{};
    for (int i : indices) {
        if (i < 0 || i >= dim_) throw Error(ErrorCode::DimensionMismatch, "index out of range");
        ++c[i];
    }
    return lookup_[key(c)];
}

std::vector<int> SymmetricLayout::indices(int offset) const {
    std::vector<int> out;
    const auto& c = counts_.at(offset);
    for (int i = 0; i < dim_; ++i) out.insert(out.end(), c[i], i);
    return out;
}

SymmetricLayouts::SymmetricLayouts(int dim, int max_order) : dim_(dim) {
    layouts_.reserve(max_order + 1);
    for (int r = 0; r <= max_order; ++r) layouts_.emplace_back(dim, r);
}

const SymmetricLayouts& layouts_for(int dim) {
    static std::once_flag once;
    static std::vector<SymmetricLayouts> cache;
    std::call_once(once, [] {
        for (int d = 1; d <= kMaxDim; ++d) cache.emplace_back(d, kMaxTensorOrder);
    });
    if (dim < 1 || dim > kMaxDim) throw Error(ErrorCode::DimensionMismatch, "dimension out of range");
    return cache[dim - 1];
}

}  // namespace ctraj
