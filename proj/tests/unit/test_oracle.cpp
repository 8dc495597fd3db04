#include <doctest.h>

#include "ctraj/oracle.hpp"

#include <json.hpp>

#include <algorithm>
#include <functional>

#include <cmath>

using namespace ctraj;

namespace {

GridSpec line(double lo, double hi, int n) { return {RVector::Constant(1, lo), RVector::Constant(1, hi), {n}}; }

double rel_l2(const GridWaveFunction& psi, const std::function<Complex(double)>& exact) {
    const auto x = psi.grid.axis(0);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const Complex e = exact(x[k]);
        num += std::norm(psi.amp[k] - e);
        den += std::norm(e);
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("packet sampling") {
    const auto g = GaussianPacket::one_d(0.0, 0.0, 0.5, 1.0, 1.0);
    const auto psi = packet_on_grid(g, line(-10.0, 10.0, 1024));
    double peak = 0.0;
    for (const auto& a : psi.amp) peak = std::max(peak, std::abs(a));
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(psi.amp[512] - 1.0) < 1e-15);  // x = 0
    CHECK(psi.norm() == doctest::Approx(g.norm()).epsilon(1e-12));

    const auto moving = packet_on_grid(GaussianPacket::one_d(0.0, 1.7, 0.5, 1.0, 1.0), line(-10.0, 10.0, 1024));
    for (std::size_t k = 0; k < psi.amp.size(); ++k) CHECK(std::abs(moving.amp[k]) == doctest::Approx(std::abs(psi.amp[k])));

    CHECK_THROWS_AS(packet_on_grid(GaussianPacket::one_d(9.9, 0.0, 0.5, 1.0, 1.0), line(-10.0, 10.0, 1024)), Error);
    CHECK_THROWS_AS(packet_on_grid(g, line(-10.0, 10.0, 64)), Error);
}

TEST_CASE("free propagation vs closed form") {
    const auto g = GaussianPacket::one_d(-1.0, 1.0, 0.5, 1.0, 1.0);
    const auto psi = split_step_propagate(packet_on_grid(g, line(-20.0, 20.0, 1024)), PotentialModel::free(1), 1.0, 1000);
    CHECK(rel_l2(psi, [&](double x) { return free_particle_exact(x, g, 1.0); }) < 1e-8);
}

TEST_CASE("harmonic revival and second order in the step") {
    const double w = 1.3;
    const auto g = GaussianPacket::one_d(0.7, 0.4, {0.8, 0.2}, 0.5, 1.0);
    const auto model = PotentialModel::harmonic(w * w);
    const auto psi0 = packet_on_grid(g, line(-12.0, 12.0, 1024));
    const auto full = split_step_propagate(psi0, model, 2.0 * M_PI / w, 4000);
    const double fid = std::abs(inner_product(psi0, full)) / std::pow(psi0.norm(), 2);
    CHECK(fid > 1.0 - 1e-8);
    CHECK(std::abs(full.norm() - psi0.norm()) < 1e-10 * psi0.norm());

    auto err = [&](int steps) {
        const auto p = split_step_propagate(psi0, model, 1.5, steps);
        return rel_l2(p, [&](double x) { return harmonic_exact(x, w * w, g, 1.5); });
    };
    const double e1 = err(200), e2 = err(400);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("boundary contamination") {
    const auto g = GaussianPacket::one_d(0.0, 6.0, 0.5, 1.0, 1.0);
    CHECK_THROWS_AS(split_step_propagate(packet_on_grid(g, line(-8.0, 8.0, 512)), PotentialModel::free(1), 2.0, 200),
                    Error);
}

TEST_CASE("interpolation is spectral off the grid") {
    const auto g = GaussianPacket::one_d(0.3, 1.1, {0.6, 0.1}, 0.7, 1.0);
    const auto psi = packet_on_grid(g, line(-10.0, 10.0, 1024));
    for (double x : {-1.2345, 0.0017, 0.9}) {
        const double xs[1] = {x};
        CHECK(std::abs(interpolate(psi, RVector::Constant(1, x)) - g.psi_real(xs)) < 1e-10);
    }
}

TEST_CASE("2D oracle vs separable harmonic closed form") {
    const auto g = GaussianPacket::with_scalar_mass(RVector::Constant(2, 0.4), RVector::Constant(2, -0.3),
                                                     CMatrix::Identity(2, 2) * Complex(1.0, 0.2), 0.5, 1.0);
    GridSpec grid{RVector::Constant(2, -6.0), RVector::Constant(2, 6.0), {512, 512}};
    const auto psi = split_step_propagate(packet_on_grid(g, grid), PotentialModel::harmonic(1.0, 2), 0.9, 400);
    const RVector kk = RVector::Constant(2, 1.0);
    for (double x : {-0.5, 0.2}) {
        RVector X(2);
        X << x, 0.3;
        const Complex e = harmonic_exact_separable(X, kk, g, 0.9);
        CHECK(std::abs(interpolate(psi, X) - e) < 1e-5 * std::abs(e));
    }
}

TEST_CASE("compare exclusions") {
    const auto g = GaussianPacket::one_d(0.0, 0.0, 0.5, 1.0, 1.0);
    const auto psi = packet_on_grid(g, line(-10.0, 10.0, 512));
    SemiclassicalField f;
    for (double x : {-1.0, 0.0, 1.0}) {
        TargetResult t;
        t.X = RVector::Constant(1, x);
        const double xs[1] = {x};
        t.total = g.psi_real(xs);
        t.empty = false;
        f.targets.push_back(t);
    }
    auto cmp = compare(f, psi);
    CHECK(cmp.relative_L2 < 1e-12);
    CHECK(cmp.used == 3);
    f.targets[1].empty = true;
    f.targets[1].total = 0.0;
    cmp = compare(f, psi);
    CHECK(cmp.excluded == std::vector<std::size_t>{1});
    CHECK(cmp.used == 2);
    CHECK(cmp.relative_L2 < 1e-12);

    std::vector<Complex> ref;
    for (const auto& t : f.targets) ref.push_back(t.total);
    CHECK(compare(f, ref).relative_L2 == 0.0);
}

TEST_CASE("serialization") {
    const auto psi = packet_on_grid(GaussianPacket::one_d(0.0, 0.0, 0.5, 1.0, 1.0), line(-10.0, 10.0, 512));
    const auto meta = nlohmann::json::parse(grid_metadata_json(psi));
    CHECK(meta.dump().find("512") != std::string::npos);
    const auto csv = grid_to_csv(psi);
    CHECK(std::count(csv.begin(), csv.end(), '\n') >= 512);
}
