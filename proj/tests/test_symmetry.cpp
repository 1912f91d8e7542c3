#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vegbif/error.hpp"
#include "vegbif/symmetry.hpp"

using namespace vegbif;

namespace {

FieldState profile(const GridSpec& g, auto&& b) {
  FieldState U(g);
  for (int i = 0; i < g.nodes(); ++i) {
    U.B[i] = b(g.x(i));
    U.W[i] = 10.0 - U.B[i];
    U.T[i] = 0.01 * U.B[i];
  }
  return U;
}

}  // namespace

TEST_CASE("reflect is an exact involution") {
  const GridSpec g(8.0, 37);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FieldState U(g);
  for (auto* arr : {&U.B, &U.W, &U.T})
    for (double& v : *arr) v = u(rng);
  CHECK(reflect(reflect(U)) == U);
  CHECK(reflect(U).B.front() == U.B.back());
}

TEST_CASE("homogeneous states are fixed by reflection") {
  const auto U = FieldState::uniform(GridSpec(8.0, 40), {0.4, 12.0, 0.02});
  CHECK(reflect(U) == U);
  const auto rep = classify(U);
  CHECK(rep.defect == 0.0);
  CHECK(rep.classification == SymmetryClass::symmetric);
  CHECK(rep.shape == ProfileShape::flat);
}

TEST_CASE("shape heuristic") {
  const GridSpec g(8.0, 40);
  const double L = g.L;
  const auto bump = [&](double c) { return [=](double x) { return 0.3 + 0.2 * std::exp(-(x - c) * (x - c)); }; };
  CHECK(classify(profile(g, bump(L / 2))).shape == ProfileShape::bell);
  CHECK(classify(profile(g, [&](double x) { return 0.5 - 0.2 * std::exp(-(x - L / 2) * (x - L / 2)); })).shape ==
        ProfileShape::inverted_bell);
  const auto left = classify(profile(g, bump(2.0)));
  CHECK(left.shape == ProfileShape::skewed_left);
  CHECK(left.classification == SymmetryClass::asymmetric);
  CHECK(left.first_moment < 0.0);
  CHECK(classify(profile(g, bump(6.0))).shape == ProfileShape::skewed_right);
}

TEST_CASE("classification is reflection equivariant") {
  const GridSpec g(8.0, 40);
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> c(0.5, 7.5);
  for (int trial = 0; trial < 50; ++trial) {
    const double x0 = c(rng);
    const auto U = profile(g, [&](double x) { return 0.3 + 0.2 * std::exp(-(x - x0) * (x - x0)); });
    const auto a = classify(U), b = classify(reflect(U));
    CHECK(a.defect == b.defect);
    CHECK(a.first_moment == -b.first_moment);
    if (a.shape == ProfileShape::skewed_left) CHECK(b.shape == ProfileShape::skewed_right);
    if (a.shape == ProfileShape::skewed_right) CHECK(b.shape == ProfileShape::skewed_left);
    if (a.shape == ProfileShape::bell) CHECK(b.shape == ProfileShape::bell);
  }
}

TEST_CASE("defect is relative and bounded by two") {
  const GridSpec g(8.0, 40);
  const auto U = profile(g, [](double x) { return x < 1.0 ? 1.0 : 0.0; });
  const double d = symmetry_defect(U);
  CHECK(d > 0.0);
  CHECK(d <= 2.0);
  CHECK(symmetry_defect(FieldState(g)) == 0.0);
}

TEST_CASE("onset symmetry from the mode parity") {
  CHECK(near_onset_shape(2) == OnsetSymmetry::symmetric);
  CHECK(near_onset_shape(4) == OnsetSymmetry::symmetric);
  CHECK(near_onset_shape(1) == OnsetSymmetry::half_period);
  CHECK(near_onset_shape(3) == OnsetSymmetry::half_period);
  CHECK_THROWS_AS(near_onset_shape(0), InvalidArgument);
}
