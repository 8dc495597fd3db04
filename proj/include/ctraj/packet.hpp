#pragma once

#include "ctraj/common.hpp"

#include <span>
#include <vector>

namespace ctraj {

/// Nonnormalized Gaussian wave packet
///   psi0(x) = exp(-(x-x0)^T K (x-x0) / (2 hbar) + i p0.(x-x0) / hbar),
/// with K_ij = sqrt(m_i m_j) Omega_ij.  For one coordinate and scalar mass
/// this is exp(-a (x-x0)^2/hbar + i p0 (x-x0)/hbar) with m Omega = 2a.
struct GaussianPacket {
    RVector x0;
    RVector p0;
    CMatrix width;  // Omega, complex symmetric with positive definite real part
    double hbar = 1.0;
    RVector masses;  // diagonal mass matrix

    GaussianPacket() = default;
    GaussianPacket(RVector x0, RVector p0, CMatrix width, double hbar, RVector masses);

    /// 1D packet in the (a0 + i a1) parameterization.
    static GaussianPacket one_d(double x0, double p0, Complex a, double hbar, double mass);
    /// Isotropic-mass packet in d dimensions.
    static GaussianPacket with_scalar_mass(RVector x0, RVector p0, CMatrix width, double hbar, double mass);

    int dimension() const { return static_cast<int>(x0.size()); }
    double mass() const { return masses[0]; }
    bool scalar_mass() const;

    /// K = M^{1/2} Omega M^{1/2}; the Hessian of S_init is i K.
    CMatrix quadratic_form() const;

    Complex psi(const CVector& z) const;
    Complex psi_real(std::span<const double> x) const;
    /// max over real x of |psi0| (always 1 for real x0, p0).
    double max_abs() const { return 1.0; }
    /// Standard deviation of |psi0|^2 along each coordinate.
    RVector sigma() const;
    /// Analytic L2 norm of the nonnormalized packet.
    double norm() const;
};

/// S_init(x) = -i hbar log psi0(x) for a Gaussian packet, with its derivative
/// tensors.  Third and higher derivatives vanish identically.
class SInit {
public:
    explicit SInit(GaussianPacket packet);

    const GaussianPacket& packet() const { return packet_; }
    int dimension() const { return packet_.dimension(); }

    Complex value(const CVector& z) const;
    CVector gradient(const CVector& z) const;
    const CMatrix& hessian() const { return hessian_; }
    /// Symmetric-layout tensor of order r at z (r = 0..8).
    std::vector<Complex> tensor(const CVector& z, int order) const;
    /// Initial velocity v(0) = M^{-1} grad S_init.
    CVector velocity(const CVector& z) const;

private:
    GaussianPacket packet_;
    CMatrix hessian_;
};

}  // namespace ctraj
