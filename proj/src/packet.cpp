#include "ctraj/packet.hpp"
#include "ctraj/symmetric_tensor.hpp"

#include <cmath>
#include <numbers>

namespace ctraj {

GaussianPacket::GaussianPacket(RVector x0_, RVector p0_, CMatrix width_, double hbar_, RVector masses_)
    : x0(std::move(x0_)), p0(std::move(p0_)), width(std::move(width_)), hbar(hbar_), masses(std::move(masses_)) {
    const auto d = x0.size();
    if (d < 1 || d > kMaxDim) throw Error(ErrorCode::DimensionMismatch, "packet dimension must be 1..3");
    if (p0.size() != d || width.rows() != d || width.cols() != d || masses.size() != d) {
        throw Error(ErrorCode::DimensionMismatch, "packet components disagree in dimension");
    }
    if (!(hbar > 0.0)) throw Error(ErrorCode::InvalidArgument, "hbar must be positive");
    for (Eigen::Index i = 0; i < d; ++i) {
        if (!(masses[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "masses must be positive");
    }
    if ((width - width.transpose()).cwiseAbs().maxCoeff() != 0.0) {
        throw Error(ErrorCode::InvalidArgument, "width matrix must be symmetric");
    }
    Eigen::LLT<RMatrix> llt(width.real());
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::InvalidArgument, "real part of the width matrix must be positive definite");
    }
}

GaussianPacket GaussianPacket::one_d(double x0, double p0, Complex a, double hbar, double mass) {
    CMatrix w(1, 1);
    w(0, 0) = 2.0 * a / mass;
    return {RVector::Constant(1, x0), RVector::Constant(1, p0), w, hbar, RVector::Constant(1, mass)};
}

GaussianPacket GaussianPacket::with_scalar_mass(RVector x0, RVector p0, CMatrix width, double hbar, double mass) {
    const auto d = x0.size();
    return {std::move(x0), std::move(p0), std::move(width), hbar, RVector::Constant(d, mass)};
}

bool GaussianPacket::scalar_mass() const {
    return (masses.array() == masses[0]).all();
}

CMatrix GaussianPacket::quadratic_form() const {
    const RVector s = masses.cwiseSqrt();
    return s.asDiagonal() * width * s.asDiagonal();
}

Complex GaussianPacket::psi(const CVector& z) const {
    const CVector dz = z - x0.cast<Complex>();
    const Complex quad = (dz.transpose() * quadratic_form() * dz)(0, 0);
    const Complex lin = (p0.cast<Complex>().transpose() * dz)(0, 0);
    return std::exp(-quad / (2.0 * hbar) + kI * lin / hbar);
}

Complex GaussianPacket::psi_real(std::span<const double> x) const {
    CVector z(dimension());
    for (int i = 0; i < dimension(); ++i) z[i] = x[i];
    return psi(z);
}

RVector GaussianPacket::sigma() const {
    // |psi|^2 = exp(-(x-x0)^T Re K (x-x0) / hbar): covariance (hbar/2) (Re K)^{-1}.
    const RMatrix cov = 0.5 * hbar * quadratic_form().real().inverse();
    return cov.diagonal().cwiseSqrt();
}

double GaussianPacket::norm() const {
    const RMatrix re = quadratic_form().real();
    const double d = dimension();
    return std::sqrt(std::pow(std::numbers::pi * hbar, d / 2.0) / std::sqrt(re.determinant()));
}

SInit::SInit(GaussianPacket packet) : packet_(std::move(packet)), hessian_(kI * packet_.quadratic_form()) {}

Complex SInit::value(const CVector& z) const {
    const CVector dz = z - packet_.x0.cast<Complex>();
    return 0.5 * (dz.transpose() * hessian_ * dz)(0, 0) + (packet_.p0.cast<Complex>().transpose() * dz)(0, 0);
}

CVector SInit::gradient(const CVector& z) const {
    return hessian_ * (z - packet_.x0.cast<Complex>()) + packet_.p0.cast<Complex>();
}

CVector SInit::velocity(const CVector& z) const {
    return gradient(z).cwiseQuotient(packet_.masses.cast<Complex>());
}

std::vector<Complex> SInit::tensor(const CVector& z, int order) const {
    const int d = dimension();
    const auto& lay = layouts_for(d)[order];
    std::vector<Complex> out(lay.size(), Complex(0.0));
    if (order == 0) {
        out[0] = value(z);
    } else if (order == 1) {
        const CVector g = gradient(z);
        for (int i = 0; i < d; ++i) out[i] = g[i];
    } else if (order == 2) {
        for (int o = 0; o < lay.size(); ++o) {
            const auto idx = lay.indices(o);
            out[o] = hessian_(idx[0], idx[1]);
        }
    }
    return out;
}

}  // namespace ctraj
