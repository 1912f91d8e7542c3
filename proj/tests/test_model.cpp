#include <doctest.h>

#include <cmath>
#include <random>

#include "vegbif/cubic.hpp"
#include "vegbif/error.hpp"
#include "vegbif/model.hpp"
#include "vegbif/params.hpp"

using namespace vegbif;

// Reference values below were computed with 40-digit arithmetic from the
// model equations, independently of this library.
namespace ref {
constexpr double fold_p = 0.64046167296982205;
constexpr double fold_B = 0.15613736812118639;
constexpr double upper_B_p1 = 0.39639096919569637;
constexpr double upper_W_p1 = 15.386028494053516;
constexpr double upper_T_p1 = 0.021977654936609476;
}  // namespace ref

TEST_CASE("reaction rates at a hand-computed point") {
  const ModelParams m;
  const Triple u{0.5, 10.0, 0.02};
  const auto f = reaction(u, 1.0, m);
  // f = 0.002*0.25*10 - (0.01 + 0.1*0.02)*0.5 = 0.005 - 0.006
  CHECK(f[0] == doctest::Approx(-0.001).epsilon(1e-14));
  // g = 1 - 0.35*0.25*10 - 0.01*10 = 1 - 0.875 - 0.1
  CHECK(f[1] == doctest::Approx(0.025).epsilon(1e-14));
  // h = 0.05*0.012*0.5 - (0.01 + 0.001)*0.02 = 0.0003 - 0.00022
  CHECK(f[2] == doctest::Approx(0.00008).epsilon(1e-12));
}

TEST_CASE("reaction_jacobian matches central differences") {
  const ModelParams m;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uB(0.0, 1.0), uW(0.0, 50.0), uT(0.0, 0.1), up(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Triple u{uB(rng), uW(rng), uT(rng)};
    const double p = up(rng);
    const Mat3 J = reaction_jacobian(u, p, m);
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(u[j]));
      Triple a = u, b = u;
      a[j] += h;
      b[j] -= h;
      const auto fa = reaction(a, p, m), fb = reaction(b, p, m);
      for (int i = 0; i < 3; ++i) {
        CHECK(J[i][j] == doctest::Approx((fa[i] - fb[i]) / (2 * h)).epsilon(1e-6).scale(1e-9));
      }
    }
  }
}

TEST_CASE("reaction_dp is (0, 1, -wT)") {
  const ModelParams m;
  const auto d = reaction_dp({0.3, 4.0, 0.05}, m);
  CHECK(d[0] == 0.0);
  CHECK(d[1] == 1.0);
  CHECK(d[2] == doctest::Approx(-m.w * 0.05));
}

TEST_CASE("homogeneous fold and double root") {
  const ModelParams m;
  const double pc0 = fold_precipitation(m);
  CHECK(pc0 == doctest::Approx(ref::fold_p).epsilon(1e-12));
  const auto q = quadratic_coeffs(pc0, m);
  CHECK(-q.a1 / (2 * q.a2) == doctest::Approx(ref::fold_B).epsilon(1e-6));
  CHECK(std::abs(q.discriminant) <= 1e-10 * q.a1 * q.a1);
}

TEST_CASE("vegetated equilibria at p = 1") {
  const ModelParams m;
  const auto eq = homogeneous_equilibria(1.0, m);
  REQUIRE(eq.size() == 3);
  const auto up = upper_equilibrium(1.0, m);
  CHECK(up.tag == BranchTag::upper);
  CHECK(up.B == doctest::Approx(ref::upper_B_p1).epsilon(1e-12));
  CHECK(up.W == doctest::Approx(ref::upper_W_p1).epsilon(1e-12));
  CHECK(up.T == doctest::Approx(ref::upper_T_p1).epsilon(1e-12));
  for (const auto& u : eq) CHECK(reaction_residual(u.triple(), 1.0, m) < 1e-12);
}

TEST_CASE("below the fold only bare soil remains") {
  const ModelParams m;
  for (double p : {0.0, 0.1, 0.3, 0.6, 0.64}) {
    const auto eq = homogeneous_equilibria(p, m);
    REQUIRE(eq.size() == 1);
    CHECK(eq[0].tag == BranchTag::bare_soil);
    CHECK(eq[0].W == doctest::Approx(p / m.l));
  }
}

TEST_CASE("equilibria solve the kinetics over a sweep") {
  const ModelParams m;
  for (int i = 0; i <= 200; ++i) {
    const double p = 0.01 * i;
    for (const auto& u : homogeneous_equilibria(p, m)) {
      CHECK(reaction_residual(u.triple(), p, m) < 1e-10 * std::max(1.0, p));
      CHECK(u.B >= 0.0);
    }
  }
}

TEST_CASE("parameter validation and JSON") {
  ModelParams m;
  CHECK_NOTHROW(m.validate());
  m.d = 0.0;
  CHECK_THROWS_AS(m.validate(), InvalidArgument);
  m.d = std::nan("");
  CHECK_THROWS_AS(m.validate(), InvalidArgument);

  const auto j = params_to_json(ModelParams{});
  CHECK(params_from_json(j) == ModelParams{});
  CHECK(params_from_json(nlohmann::json{{"D_w", 0.5}}).D_W == 0.5);
  CHECK_THROWS_AS(params_from_json(nlohmann::json{{"zeta", 1.0}}), InvalidArgument);
  CHECK(ModelParams::high_sensitivity().s == 0.2);
}

TEST_CASE("cubic roots") {
  SUBCASE("three real roots") {
    // (x + 1)(x + 2)(x + 3)
    const auto r = cubic_roots(6.0, 11.0, 6.0);
    CHECK(r[0].real() == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(r[1].real() == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(r[2].real() == doctest::Approx(-3.0).epsilon(1e-14));
    for (const auto& z : r) CHECK(z.imag() == 0.0);
  }
  SUBCASE("complex pair") {
    // (x - 1)(x^2 + 2x + 5): roots 1, -1 +- 2i
    const auto r = cubic_roots(1.0, 3.0, -5.0);
    CHECK(r[0].real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r[1].real() == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(std::abs(r[1].imag()) == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("triple root") {
    const auto r = cubic_roots(-3.0, 3.0, -1.0);
    for (const auto& z : r) CHECK(std::abs(z - 1.0) < 1e-5);
  }
}
