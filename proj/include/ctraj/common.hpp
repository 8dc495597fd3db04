#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ctraj {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr Complex kI{0.0, 1.0};

enum class ErrorCode {
    UnsupportedOrder,
    DimensionMismatch,
    InvalidArgument,
    IntegrationFailure,
    NoConvergence,
    SingularJacobian,
    RiccatiBlowup,
    ToleranceExceeded,
    QuadratureFailure,
    SingularMatrix,
    CausticAtT,
    GridTooCoarse,
    PacketOutOfBounds,
    BoundaryContamination,
    ConfigError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Principal-branch agnostic helpers for the continuously tracked logarithms.
inline Complex sqrt_from_log(Complex log_value) { return std::exp(0.5 * log_value); }

inline bool all_finite(const CVector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
    }
    return true;
}

}  // namespace ctraj
