#pragma once

#include "ctraj/assembly.hpp"
#include "ctraj/oracle.hpp"
#include "ctraj/propagator.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ctraj {

/// Gaussian packet as written in a config: centre, momentum and Omega
/// (real and imaginary parts, d or d*d entries).
struct PacketSpec {
    RVector x0;
    RVector p0;
    CMatrix omega;

    bool operator==(const PacketSpec&) const;
};

/// Everything a run needs.  Sections and keys mirror the INI layout:
///
///   [potential]     kind, dimension, remaining keys are potential parameters
///   [packet]        x0, p0, omega_re, omega_im
///   [final_packet]  same keys, propagator runs only
///   [run]           hbar, mass, T, method, order, targets_lo, targets_hi, targets_n,
///                   rtol, atol, samples, continuation
///   [search]        re_lo, re_hi, im_lo, im_hi, grid_n, jitter, seed, shoot_tol,
///                   max_iterations, dedup_tol, caustic_threshold, cutoff
///   [oracle]        enabled, lo, hi, n, steps, transition_threshold
///   [output]        dir, prefix
///
/// Vectors are whitespace separated; a single value is broadcast over the dimension.
struct RunConfig {
    std::string potential = "free";
    int dimension = 1;
    std::map<std::string, double> potential_params;

    PacketSpec packet;
    std::optional<PacketSpec> final_packet;

    double hbar = 1.0;
    double mass = 1.0;
    double T = 1.0;
    Method method = Method::Wkb;
    int order = 1;
    RVector targets_lo;
    RVector targets_hi;
    std::vector<int> targets_n;
    double rtol = 1e-10;
    double atol = 1e-12;
    int samples = 2000;
    bool continuation = false;

    SearchBox box;
    int grid_n = 5;
    double jitter = 0.0;
    std::uint64_t seed = 0;
    double shoot_tol = 1e-11;
    int max_iterations = 60;
    double dedup_tol = 1e-7;
    double caustic_threshold = 1e-6;
    double cutoff = 10.0;

    bool oracle_enabled = false;
    RVector oracle_lo;
    RVector oracle_hi;
    std::vector<int> oracle_n;
    int oracle_steps = 1000;
    double transition_threshold = 0.05;

    std::string output_dir = ".";
    std::string output_prefix = "run";

    bool operator==(const RunConfig&) const;

    PotentialModel model() const;
    GaussianPacket initial_packet() const;
    GaussianPacket final_packet_or_throw() const;
    std::vector<RVector> targets() const;
    AssemblyOptions assembly_options() const;
    DynamicsOptions dynamics_options() const;
    GridSpec oracle_grid() const;
};

/// ConfigError on malformed input, UnsupportedOrder (with the capability
/// matrix) for an unavailable (method, n, d).
RunConfig parse_config(std::istream& in);
RunConfig parse_config_string(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// Effective configuration in the same INI layout; reparses to an equal config.
std::string to_ini(const RunConfig& config);

/// Positivity of tolerances, dimension consistency and the capability matrix.
void validate(const RunConfig& config);

}  // namespace ctraj
