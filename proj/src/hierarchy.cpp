#include "ctraj/hierarchy.hpp"

#include <string>

namespace ctraj {

namespace {

// All beta with 0 <= beta <= alpha componentwise.
std::vector<MultiIndex> sub_indices(const MultiIndex& alpha, int dim) {
    std::vector<MultiIndex> out;
    MultiIndex b{};
    while (true) {
        out.push_back(b);
        int i = 0;
        while (i < dim) {
            if (b[i] < alpha[i]) {
                ++b[i];
                break;
            }
            b[i] = 0;
            ++i;
        }
        if (i == dim) break;
    }
    return out;
}

MultiIndex plus(MultiIndex a, const MultiIndex& b) {
    for (int i = 0; i < kMaxDim; ++i) a[i] += b[i];
    return a;
}

MultiIndex minus(MultiIndex a, const MultiIndex& b) {
    for (int i = 0; i < kMaxDim; ++i) a[i] -= b[i];
    return a;
}

MultiIndex unit(int j, int count = 1) {
    MultiIndex e{};
    e[j] = count;
    return e;
}

}  // namespace

Hierarchy::Hierarchy(HierarchyKind kind, int n, const RVector& masses, double hbar)
    : kind_(kind), n_(n), dim_(static_cast<int>(masses.size())), weights_(masses.cwiseInverse()), hbar_(hbar) {
    if (dim_ < 1 || dim_ > kMaxDim) throw Error(ErrorCode::DimensionMismatch, "dimension must be 1..3");
    if (kind == HierarchyKind::Wkb) {
        const bool ok = n >= 1 && ((dim_ == 1 && n <= 3) || n <= 2);
        if (!ok) {
            throw Error(ErrorCode::UnsupportedOrder, "wkb order " + std::to_string(n) + " not available for d=" +
                                                         std::to_string(dim_));
        }
        for (int k = 0; k <= n; ++k) max_order_.push_back(2 * (n - k));
    } else {
        const bool ok = n == 1 || (n == 2 && dim_ <= 2);
        if (!ok) {
            throw Error(ErrorCode::UnsupportedOrder, "bomca order " + std::to_string(n) + " not available for d=" +
                                                         std::to_string(dim_));
        }
        max_order_.push_back(2 * n);
    }
    potential_order_ = 2 * n;
    base_.resize(max_order_.size());
    const auto& lay = layouts_for(dim_);
    for (std::size_t k = 0; k < max_order_.size(); ++k) {
        for (int r = 0; r <= max_order_[k]; ++r) {
            base_[k].push_back(flat_size_);
            flat_size_ += lay[r].size();
        }
    }
    build();
}

Hierarchy Hierarchy::wkb(int n, const RVector& masses) { return {HierarchyKind::Wkb, n, masses, 0.0}; }

Hierarchy Hierarchy::bomca(int n, const RVector& masses, double hbar) {
    if (!(hbar > 0.0)) throw Error(ErrorCode::InvalidArgument, "hbar must be positive");
    return {HierarchyKind::Bomca, n, masses, hbar};
}

int Hierarchy::index(int chain, const MultiIndex& alpha) const {
    const int r = total_order(alpha);
    return base_[chain][r] + layouts_for(dim_)[r].offset(alpha);
}

void Hierarchy::build() {
    const auto& lay = layouts_for(dim_);
    const bool bomca = kind_ == HierarchyKind::Bomca;
    const Complex lap_coef = bomca ? 0.5 * kI * hbar_ : 0.5 * kI;

    for (int k = 0; k < chains(); ++k) {
        for (int r = 0; r <= max_order_[k]; ++r) {
            for (int o = 0; o < lay[r].size(); ++o) {
                const MultiIndex alpha = lay[r].counts(o);
                const int out = index(k, alpha);
                if (k == 0) {
                    potentials_.push_back({out, r, o});
                    if (r == 0) {
                        for (int j = 0; j < dim_; ++j) {
                            const int a = index(0, unit(j));
                            products_.push_back({0.5 * weights_[j], out, a, a});
                        }
                    } else {
                        for (const auto& beta : sub_indices(alpha, dim_)) {
                            const int rb = total_order(beta);
                            if (rb == 0 || rb == r) continue;
                            const double c = multi_binomial(alpha, beta);
                            for (int j = 0; j < dim_; ++j) {
                                products_.push_back({-0.5 * weights_[j] * c, out, index(0, plus(beta, unit(j))),
                                                     index(0, plus(minus(alpha, beta), unit(j)))});
                            }
                        }
                    }
                    if (bomca && r + 2 <= max_order_[0]) {
                        for (int j = 0; j < dim_; ++j) {
                            linears_.push_back({lap_coef * weights_[j], out, index(0, plus(alpha, unit(j, 2)))});
                        }
                    }
                } else {
                    for (const auto& beta : sub_indices(alpha, dim_)) {
                        const double c = multi_binomial(alpha, beta);
                        const MultiIndex rest = minus(alpha, beta);
                        for (int j = 0; j < dim_; ++j) {
                            if (total_order(beta) > 0) {
                                products_.push_back(
                                    {-weights_[j] * c, out, index(0, plus(beta, unit(j))), index(k, plus(rest, unit(j)))});
                            }
                            for (int l = 1; l < k; ++l) {
                                products_.push_back({-0.5 * weights_[j] * c, out, index(l, plus(beta, unit(j))),
                                                     index(k - l, plus(rest, unit(j)))});
                            }
                        }
                    }
                    for (int j = 0; j < dim_; ++j) {
                        linears_.push_back({lap_coef * weights_[j], out, index(k - 1, plus(alpha, unit(j, 2)))});
                    }
                }
            }
        }
    }
}

void Hierarchy::fill_classical(std::vector<Complex>& F, Complex s0, const CVector& momentum) const {
    F[base_[0][0]] = s0;
    for (int j = 0; j < dim_; ++j) F[base_[0][1] + j] = momentum[j];
}

void Hierarchy::rhs(const std::vector<Complex>& F, const DerivativeBundle& V, std::vector<Complex>& dF) const {
    dF.assign(flat_size_, Complex(0.0));
    for (const auto& p : potentials_) dF[p.out] -= V.tensors[p.order][p.offset];
    for (const auto& p : products_) dF[p.out] += p.coef * F[p.a] * F[p.b];
    for (const auto& l : linears_) dF[l.out] += l.coef * F[l.a];
}

std::vector<Complex> Hierarchy::initial(const std::vector<std::vector<Complex>>& sinit_tensors) const {
    std::vector<Complex> F(flat_size_, Complex(0.0));
    for (int r = 0; r <= max_order_[0] && r < static_cast<int>(sinit_tensors.size()); ++r) {
        for (std::size_t o = 0; o < sinit_tensors[r].size(); ++o) F[base_[0][r] + o] = sinit_tensors[r][o];
    }
    return F;
}

double Hierarchy::max_s0_hessian(const std::vector<Complex>& F) const {
    double m = 0.0;
    const int sz = layouts_for(dim_)[2].size();
    for (int o = 0; o < sz; ++o) m = std::max(m, std::abs(F[base_[0][2] + o]));
    return m;
}

CMatrix Hierarchy::s0_hessian(const std::vector<Complex>& F) const {
    CMatrix h(dim_, dim_);
    const auto& lay = layouts_for(dim_)[2];
    for (int i = 0; i < dim_; ++i) {
        for (int j = 0; j < dim_; ++j) {
            const int idx[2] = {i, j};
            h(i, j) = F[base_[0][2] + lay.offset(idx)];
        }
    }
    return h;
}

}  // namespace ctraj
