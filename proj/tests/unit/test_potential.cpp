#include <doctest.h>

#include "ctraj/potential.hpp"

#include <algorithm>

using namespace ctraj;

namespace {

CVector pt(std::initializer_list<Complex> v) {
    CVector z(v.size());
    int i = 0;
    for (auto c : v) z[i++] = c;
    return z;
}

}  // namespace

TEST_CASE("free potential has zero derivatives") {
    const auto V = PotentialModel::free(1).eval_derivs(pt({{0.7, -1.3}}), 2);
    CHECK(V.value() == Complex(0.0));
    CHECK(V.at({0}) == Complex(0.0));
    CHECK(V.at({0, 0}) == Complex(0.0));
    CHECK(finite_diff_check(PotentialModel::free(2), pt({1.0, {0, 1}}), 3, 0.1) == 0.0);
}

TEST_CASE("harmonic derivatives at a complex point") {
    const Complex z(2.0, 1.0);
    const auto V = PotentialModel::harmonic(1.0).eval_derivs(pt({z}), 4);
    CHECK(std::abs(V.value() - 0.5 * z * z) < 1e-15);
    CHECK(std::abs(V.at({0}) - z) < 1e-15);
    CHECK(V.at({0, 0}) == Complex(1.0));
    CHECK(V.at({0, 0, 0}) == Complex(0.0));
    CHECK(V.at({0, 0, 0, 0}) == Complex(0.0));
}

TEST_CASE("quartic fourth derivative is 24 lambda") {
    const auto V = PotentialModel::quartic(1.0, 0.1).eval_derivs(pt({1.0}), 4);
    CHECK(std::abs(V.at({0, 0, 0, 0}) - 2.4) < 1e-14);
    CHECK(std::abs(V.at({0, 0, 0}) - 2.4) < 1e-14);
}

TEST_CASE("finite difference consistency") {
    CHECK(finite_diff_check(PotentialModel::harmonic(1.0), pt({{0.3, -0.2}}), 2, 1e-4) < 1e-6);
    CHECK(finite_diff_check(PotentialModel::quartic(1.0, 0.1), pt({{1.0, 0.5}}), 4, 1e-3) < 1e-5);
    const PotentialModel morse(PotentialKind::Morse1D, {{"De", 2.0}, {"alpha", 0.7}, {"xe", 0.3}}, 1);
    for (int r = 1; r <= 6; ++r) CHECK(finite_diff_check(morse, pt({{0.4, 0.3}}), r, 1e-4) < 1e-6);
    const PotentialModel poly(PotentialKind::Polynomial, {{"c2_1", 0.3}, {"c0_4", -0.2}, {"c3_2", 0.05}}, 2);
    for (int r = 1; r <= 6; ++r) CHECK(finite_diff_check(poly, pt({{0.4, 0.3}, {-0.5, 0.2}}), r, 1e-4) < 1e-6);
    const auto q3 = PotentialModel::quartic(1.0, 0.1, 3, 0.05);
    for (int r = 1; r <= 6; ++r) CHECK(finite_diff_check(q3, pt({{0.4, 0.3}, {-0.5, 0.2}, {0.1, -0.1}}), r, 1e-4) < 1e-6);
}

TEST_CASE("tensors are symmetric under index permutation") {
    const PotentialModel poly(PotentialKind::Polynomial, {{"c2_1_1", 0.3}, {"c1_3_0", -0.2}, {"c0_2_2", 0.7}}, 3);
    const auto V = poly.eval_derivs(pt({{0.4, 0.3}, {-0.5, 0.2}, {0.9, 0.1}}), 4);
    std::vector<int> idx = {0, 0, 1, 2};
    const Complex ref = V.at(std::span<const int>(idx));
    CHECK(ref != Complex(0.0));
    do {
        CHECK(V.at(std::span<const int>(idx)) == ref);
    } while (std::next_permutation(idx.begin(), idx.end()));
    for (int r = 0; r <= 4; ++r) CHECK(static_cast<int>(V.tensors[r].size()) == symmetric_size(3, r));
}

TEST_CASE("Cauchy-Riemann proxy along real and imaginary steps") {
    const PotentialModel morse(PotentialKind::Morse1D, {{"De", 1.0}, {"alpha", 1.2}}, 1);
    const auto q = PotentialModel::quartic(1.0, 0.1);
    for (const auto* model : {&morse, &q}) {
        const Complex z(0.3, 0.4);
        const Complex d = model->eval_derivs(pt({z}), 1).at({0});
        for (Complex h : {Complex(1e-4, 0.0), Complex(0.0, 1e-4)}) {
            const Complex fd = (model->value(pt({z + h})) - model->value(pt({z - h}))) / (2.0 * h);
            CHECK(std::abs(fd - d) < 1e-7);
        }
    }
}

TEST_CASE("potential errors") {
    const auto q = PotentialModel::quartic(1.0, 0.1);
    CHECK_THROWS_AS(q.eval_derivs(pt({0.0}), 7), Error);
    try {
        q.eval_derivs(pt({0.0, 1.0}), 2);
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
    CHECK_THROWS_AS(PotentialModel(PotentialKind::Harmonic, {{"omega", 1.0}}, 1), Error);
    CHECK_THROWS_AS(PotentialModel(PotentialKind::Polynomial, {{"c1", 1.0}}, 2), Error);
    CHECK_THROWS_AS(PotentialModel(PotentialKind::Morse1D, {}, 2), Error);
    CHECK(potential_kind_from_string("quartic") == PotentialKind::QuarticPerturbedHarmonic);
    CHECK_THROWS_AS(potential_kind_from_string("coulomb"), Error);
}
