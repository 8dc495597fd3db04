#include "ctraj/potential.hpp"

#include <algorithm>
#include <cmath>

namespace ctraj {

std::string_view to_string(PotentialKind kind) {
    switch (kind) {
        case PotentialKind::Free: return "free";
        case PotentialKind::Harmonic: return "harmonic";
        case PotentialKind::QuarticPerturbedHarmonic: return "quartic_perturbed_harmonic";
        case PotentialKind::Polynomial: return "polynomial";
        case PotentialKind::Morse1D: return "morse_1d";
    }
    return "unknown";
}

PotentialKind potential_kind_from_string(std::string_view name) {
    if (name == "free") return PotentialKind::Free;
    if (name == "harmonic") return PotentialKind::Harmonic;
    if (name == "quartic_perturbed_harmonic" || name == "quartic") return PotentialKind::QuarticPerturbedHarmonic;
    if (name == "polynomial") return PotentialKind::Polynomial;
    if (name == "morse_1d" || name == "morse") return PotentialKind::Morse1D;
    throw Error(ErrorCode::InvalidArgument, "unknown potential kind '" + std::string(name) + "'");
}

Complex DerivativeBundle::at(std::span<const int> indices) const {
    const int r = static_cast<int>(indices.size());
    if (r > order) throw Error(ErrorCode::UnsupportedOrder, "derivative order not evaluated");
    return tensors[r][layouts_for(dim)[r].offset(indices)];
}

CVector DerivativeBundle::gradient() const {
    CVector g(dim);
    for (int i = 0; i < dim; ++i) g[i] = tensors[1][i];
    return g;
}

CMatrix DerivativeBundle::hessian() const {
    CMatrix h(dim, dim);
    const auto& lay = layouts_for(dim)[2];
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            const int idx[2] = {i, j};
            h(i, j) = tensors[2][lay.offset(idx)];
        }
    }
    return h;
}

namespace {

bool parse_exponents(const std::string& key, int dim, MultiIndex& out) {
    if (key.size() < 2 || key[0] != 'c') return false;
    out = MultiIndex{};
    int coord = 0;
    std::size_t pos = 1;
    while (pos <= key.size()) {
        const std::size_t next = key.find('_', pos);
        const std::string part = key.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        if (part.empty() || coord >= dim) return false;
        for (char ch : part) {
            if (ch < '0' || ch > '9') return false;
        }
        out[coord++] = std::stoi(part);
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return coord == dim;
}

bool is_per_coordinate(const std::string& key, const std::string& base, int dim) {
    if (key == base) return true;
    for (int i = 1; i <= dim; ++i) {
        if (key == base + std::to_string(i)) return true;
    }
    return false;
}

}  // namespace

PotentialModel::PotentialModel(PotentialKind kind, std::map<std::string, double> params, int dimension)
    : kind_(kind), params_(std::move(params)), dim_(dimension) {
    if (dim_ < 1 || dim_ > kMaxDim) throw Error(ErrorCode::DimensionMismatch, "potential dimension must be 1..3");

    auto reject_unknown = [&](auto&& allowed) {
        for (const auto& [key, _] : params_) {
            if (!allowed(key)) {
                throw Error(ErrorCode::InvalidArgument,
                            "parameter '" + key + "' not recognised for potential " + std::string(to_string(kind_)));
            }
        }
    };

    switch (kind_) {
        case PotentialKind::Free:
            reject_unknown([](const std::string&) { return false; });
            break;
        case PotentialKind::Harmonic:
            reject_unknown([&](const std::string& k) { return is_per_coordinate(k, "k", dim_); });
            for (int i = 0; i < dim_; ++i) {
                MultiIndex e{};
                e[i] = 2;
                monomials_.push_back({0.5 * per_coordinate("k", i, 1.0), e});
            }
            break;
        case PotentialKind::QuarticPerturbedHarmonic: {
            reject_unknown([&](const std::string& k) {
                return is_per_coordinate(k, "k", dim_) || is_per_coordinate(k, "lambda", dim_) || k == "coupling";
            });
            for (int i = 0; i < dim_; ++i) {
                MultiIndex e2{}, e4{};
                e2[i] = 2;
                e4[i] = 4;
                monomials_.push_back({0.5 * per_coordinate("k", i, 1.0), e2});
                monomials_.push_back({per_coordinate("lambda", i, 0.0), e4});
            }
            const double g = param("coupling", 0.0);
            for (int i = 0; i < dim_; ++i) {
                for (int j = i + 1; j < dim_; ++j) {
                    MultiIndex e{};
                    e[i] = 2;
                    e[j] = 2;
                    monomials_.push_back({g, e});
                }
            }
            break;
        }
        case PotentialKind::Polynomial:
            for (const auto& [key, value] : params_) {
                MultiIndex e{};
                if (!parse_exponents(key, dim_, e)) {
                    throw Error(ErrorCode::InvalidArgument, "polynomial coefficient key '" + key + "' is malformed");
                }
                if (total_order(e) > kMaxTensorOrder) {
                    throw Error(ErrorCode::InvalidArgument, "polynomial degree exceeds 8");
                }
                monomials_.push_back({value, e});
            }
            break;
        case PotentialKind::Morse1D:
            if (dim_ != 1) throw Error(ErrorCode::DimensionMismatch, "morse_1d is one-dimensional");
            reject_unknown([](const std::string& k) { return k == "De" || k == "alpha" || k == "xe"; });
            morse_de_ = param("De", 1.0);
            morse_alpha_ = param("alpha", 1.0);
            morse_xe_ = param("xe", 0.0);
            break;
    }
    std::erase_if(monomials_, [](const Monomial& m) { return m.coeff == 0.0; });
}

PotentialModel PotentialModel::free(int dimension) { return {PotentialKind::Free, {}, dimension}; }

PotentialModel PotentialModel::harmonic(double k, int dimension) {
    return {PotentialKind::Harmonic, {{"k", k}}, dimension};
}

PotentialModel PotentialModel::quartic(double k, double lambda, int dimension, double coupling) {
    std::map<std::string, double> p{{"k", k}, {"lambda", lambda}};
    if (coupling != 0.0) p["coupling"] = coupling;
    return {PotentialKind::QuarticPerturbedHarmonic, std::move(p), dimension};
}

double PotentialModel::param(const std::string& name, double fallback) const {
    auto it = params_.find(name);
    return it == params_.end() ? fallback : it->second;
}

double PotentialModel::per_coordinate(const std::string& base, int i, double fallback) const {
    auto it = params_.find(base + std::to_string(i + 1));
    if (it != params_.end()) return it->second;
    return param(base, fallback);
}

DerivativeBundle PotentialModel::eval_derivs(const CVector& z, int max_order) const {
    if (z.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "query point dimension differs from potential");
    if (max_order < 0 || max_order > kMaxPotentialOrder) {
        throw Error(ErrorCode::UnsupportedOrder, "derivative order " + std::to_string(max_order) + " exceeds 6");
    }
    const auto& lay = layouts_for(dim_);
    DerivativeBundle out;
    out.order = max_order;
    out.dim = dim_;
    out.query_point = z;
    out.tensors.resize(max_order + 1);

    if (kind_ == PotentialKind::Morse1D) {
        const Complex y = z[0] - morse_xe_;
        const Complex e1 = std::exp(-morse_alpha_ * y);
        const Complex e2 = e1 * e1;
        out.tensors[0] = {morse_de_ * (1.0 - 2.0 * e1 + e2)};
        double p1 = 1.0, p2 = 1.0;
        for (int r = 1; r <= max_order; ++r) {
            p1 *= -morse_alpha_;
            p2 *= -2.0 * morse_alpha_;
            out.tensors[r] = {morse_de_ * (-2.0 * p1 * e1 + p2 * e2)};
        }
        return out;
    }

    // Powers z_i^p for p up to the maximal exponent.
    int max_exp = 0;
    for (const auto& m : monomials_) {
        for (int i = 0; i < dim_; ++i) max_exp = std::max(max_exp, m.exponents[i]);
    }
    std::vector<std::vector<Complex>> pw(dim_, std::vector<Complex>(max_exp + 1, Complex(1.0)));
    for (int i = 0; i < dim_; ++i) {
        for (int p = 1; p <= max_exp; ++p) pw[i][p] = pw[i][p - 1] * z[i];
    }

    for (int r = 0; r <= max_order; ++r) {
        const auto& l = lay[r];
        auto& t = out.tensors[r];
        t.assign(l.size(), Complex(0.0));
        for (int o = 0; o < l.size(); ++o) {
            const MultiIndex& a = l.counts(o);
            Complex acc(0.0);
            for (const auto& m : monomials_) {
                double c = m.coeff;
                bool zero = false;
                for (int i = 0; i < dim_ && !zero; ++i) {
                    if (a[i] > m.exponents[i]) {
                        zero = true;
                        break;
                    }
                    for (int q = 0; q < a[i]; ++q) c *= (m.exponents[i] - q);
                }
                if (zero) continue;
                Complex term(c);
                for (int i = 0; i < dim_; ++i) term *= pw[i][m.exponents[i] - a[i]];
                acc += term;
            }
            t[o] = acc;
        }
    }
    return out;
}

Complex PotentialModel::value(const CVector& z) const { return eval_derivs(z, 0).value(); }

Complex PotentialModel::value_real(std::span<const double> x) const {
    CVector z(dim_);
    for (int i = 0; i < dim_; ++i) z[i] = x[i];
    return value(z);
}

DerivativeBundle eval_derivs(const PotentialModel& model, const CVector& z, int max_order) {
    return model.eval_derivs(z, max_order);
}

double finite_diff_check(const PotentialModel& model, const CVector& z, int order, double h) {
    if (order < 1 || order > kMaxPotentialOrder) {
        throw Error(ErrorCode::UnsupportedOrder, "finite_diff_check order must be 1..6");
    }
    const int d = model.dimension();
    const auto analytic = model.eval_derivs(z, order);
    const auto& lay_r = layouts_for(d)[order];
    const auto& lay_lo = layouts_for(d)[order - 1];
    const auto& tr = analytic.tensors[order];

    double scale = 0.0;
    for (const auto& v : tr) scale = std::max(scale, std::abs(v));

    double worst = 0.0;
    for (int o = 0; o < lay_r.size(); ++o) {
        MultiIndex a = lay_r.counts(o);
        int j = 0;
        while (a[j] == 0) ++j;
        MultiIndex b = a;
        --b[j];
        CVector zp = z, zm = z;
        zp[j] += h;
        zm[j] -= h;
        const auto up = model.eval_derivs(zp, order - 1);
        const auto dn = model.eval_derivs(zm, order - 1);
        const int ob = lay_lo.offset(b);
        const Complex fd = (up.tensors[order - 1][ob] - dn.tensors[order - 1][ob]) / (2.0 * h);
        const double diff = std::abs(fd - tr[o]);
        worst = std::max(worst, scale > 0.0 ? diff / scale : diff);
    }
    return worst;
}

}  // namespace ctraj
