#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "vegbif/discretization.hpp"
#include "vegbif/error.hpp"
#include "vegbif/integrator.hpp"
#include "vegbif/linear_stability.hpp"
#include "vegbif/symmetry.hpp"

using namespace vegbif;

namespace {

// du/dt = J u with J frozen.
class LinearSystem final : public OdeSystem {
 public:
  explicit LinearSystem(BandMatrix J) : J_(std::move(J)) {}
  std::size_t size() const override { return J_.size(); }
  std::size_t bandwidth() const override { return J_.lower(); }
  void rhs(std::span<const double> u, std::span<double> out) const override { J_.multiply(u, out); }
  void jacobian(std::span<const double>, BandMatrix& J) const override { J = J_; }

 private:
  BandMatrix J_;
};

double max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

FieldState upper_uniform(const GridSpec& g, double p, const ModelParams& m) {
  return FieldState::uniform(g, upper_equilibrium(p, m).triple());
}

double rightmost_eigenvalue(const FieldState& U, double p, const ModelParams& m) {
  const auto dense = semidiscrete_jacobian(U, p, m).to_dense();
  const auto n = static_cast<Eigen::Index>(U.grid.unknowns());
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> J(dense.data(), n, n);
  return Eigen::EigenSolver<Eigen::MatrixXd>(J, false).eigenvalues().real().maxCoeff();
}

}  // namespace

TEST_CASE("fixed-step order on the frozen linearization") {
  const ModelParams m;
  const GridSpec g(8.0, 20);
  const double p = 1.2;
  const FieldState U = upper_uniform(g, p, m);
  const LinearSystem sys(semidiscrete_jacobian(U, p, m));
  std::vector<double> u0(g.unknowns());
  for (int i = 0; i < g.nodes(); ++i) {
    const double c = std::cos(std::numbers::pi * g.x(i) / g.L) + 0.3 * std::cos(3 * std::numbers::pi * g.x(i) / g.L);
    u0[3 * i] = 0.01 * c;
    u0[3 * i + 1] = -0.2 * c;
    u0[3 * i + 2] = 0.001 * c;
  }
  const double t_end = 40.0;
  const auto ref = integrate_fixed_steps(sys, u0, t_end, 20480);
  std::vector<double> errs;
  for (int steps : {40, 80, 160, 320}) errs.push_back(max_diff(integrate_fixed_steps(sys, u0, t_end, steps), ref));
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double order = std::log2(errs[i - 1] / errs[i]);
    CHECK(order >= 1.7);
    CHECK(order <= 2.3);
  }
}

TEST_CASE("tightening the tolerance never increases the error") {
  const ModelParams m;
  const GridSpec g(8.0, 40);
  FieldState U0 = upper_uniform(g, 1.1, m);
  for (int i = 19; i < 21; ++i) U0.B[i] *= 1.1;
  IntegratorOptions o;
  o.t_end = 300.0;
  o.steady_state_threshold = 0.0;
  o.rel_tol = o.abs_tol = 1e-11;
  const auto ref = integrate(U0, 1.1, o, m).final_state().to_vector();
  double prev = std::numeric_limits<double>::infinity();
  for (double tol : {1e-3, 1e-4, 1e-5, 1e-6, 1e-7}) {
    o.rel_tol = o.abs_tol = tol;
    const auto tr = integrate(U0, 1.1, o, m);
    REQUIRE(tr.reason == Termination::t_end);
    const double err = max_diff(tr.final_state().to_vector(), ref);
    CHECK(err <= prev);
    prev = err;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("bare soil is a fixed point") {
  const ModelParams m;
  const GridSpec g(8.0, 40);
  const FieldState U0 = FieldState::uniform(g, {0.0, 1.0 / m.l, 0.0});
  IntegratorOptions o;
  o.t_end = 1000.0;
  const auto tr = integrate(U0, 1.0, o, m);
  CHECK(max_diff(tr.final_state().to_vector(), U0.to_vector()) <= o.abs_tol);
}

TEST_CASE("snapshots and termination bookkeeping") {
  const ModelParams m;
  const GridSpec g(8.0, 20);
  FieldState U0 = upper_uniform(g, 1.5, m);
  U0.B[5] *= 1.01;
  IntegratorOptions o;
  o.t_end = 100.0;
  o.snapshot_interval = 10.0;
  o.steady_state_threshold = 0.0;
  const auto tr = integrate(U0, 1.5, o, m);
  CHECK(tr.reason == Termination::t_end);
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == doctest::Approx(100.0));
  CHECK(tr.snapshots.size() == tr.times.size());
  // A long step can pass several multiples of the interval at once.
  CHECK(tr.snapshots.size() >= 3);
  CHECK(tr.snapshots.size() <= 12);
  for (std::size_t i = 1; i < tr.times.size(); ++i) CHECK(tr.times[i] > tr.times[i - 1]);
}

TEST_CASE("invalid options are rejected") {
  IntegratorOptions o;
  o.rel_tol = 0.0;
  CHECK_THROWS_AS(o.validate(), InvalidArgument);
  o = {};
  o.t_end = -1.0;
  CHECK_THROWS_AS(o.validate(), InvalidArgument);
}

TEST_CASE("settle reaches the expected attractors") {
  const ModelParams m;
  const GridSpec g(8.0, 40);
  const IntegratorOptions o;

  SUBCASE("inverted bell persists at p = 0.95") {
    FieldState U0 = upper_uniform(g, 0.95, m);
    for (int i = 19; i < 21; ++i) U0.B[i] *= 0.9;
    const auto U = settle(U0, 0.95, o, m);
    CHECK(max_abs(semidiscrete_rhs(U, 0.95, m).to_vector()) < 1e-10);
    CHECK(classify(U).shape == ProfileShape::inverted_bell);
    CHECK(rightmost_eigenvalue(U, 0.95, m) < 1e-6);
  }
  SUBCASE("vegetation collapses at p = 0.3") {
    const auto U = settle(upper_uniform(g, 1.0, m), 0.3, o, m);
    CHECK(max_abs(U.B) < 1e-8);
    CHECK(max_abs(semidiscrete_rhs(U, 0.3, m).to_vector()) < 1e-10);
  }
  SUBCASE("noisy homogeneous state returns at p = 1.5") {
    FieldState U0 = upper_uniform(g, 1.5, m);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    for (double& b : U0.B) b *= 1.0 + noise(rng);
    const auto U = settle(U0, 1.5, o, m);
    CHECK(classify(U).shape == ProfileShape::flat);
    CHECK(U.B[0] == doctest::Approx(upper_equilibrium(1.5, m).B).epsilon(1e-8));
    CHECK(rightmost_eigenvalue(U, 1.5, m) < 1e-6);
  }
}

TEST_CASE("settle gives up with the last state when time runs out") {
  const ModelParams m;
  const GridSpec g(8.0, 20);
  IntegratorOptions o;
  o.t_end = 1.0;
  FieldState U0 = upper_uniform(g, 1.1, m);
  U0.B[10] *= 1.1;
  try {
    (void)settle(U0, 1.1, o, m);
    FAIL("expected SettleTimeout");
  } catch (const SettleTimeout& e) {
    CHECK(e.last_state.grid == g);
    CHECK(e.last_residual > 1e-10);
  }
}

TEST_CASE("growth rate of a single cosine mode") {
  const ModelParams m;
  const GridSpec g(8.0, 200);
  const double p = 1.14;
  const auto u0 = upper_equilibrium(p, m);
  const auto mm = mode_matrix(u0, p, 2, m);
  Eigen::Matrix3d A;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) A(i, j) = mm.A[i][j];
  Eigen::EigenSolver<Eigen::Matrix3d> es(A);
  Eigen::Index lead = 0;
  es.eigenvalues().real().maxCoeff(&lead);
  const double lambda = es.eigenvalues()[lead].real();
  const Eigen::Vector3d v = es.eigenvectors().col(lead).real();
  Eigen::EigenSolver<Eigen::Matrix3d> est(A.transpose());
  Eigen::Index lead_t = 0;
  est.eigenvalues().real().maxCoeff(&lead_t);
  const Eigen::Vector3d w = est.eigenvectors().col(lead_t).real();

  const double eps = 1e-6;
  FieldState U0 = FieldState::uniform(g, u0.triple());
  std::vector<double> cosx(g.nodes());
  for (int i = 0; i < g.nodes(); ++i) {
    cosx[i] = std::cos(2.0 * std::numbers::pi * g.x(i) / g.L);
    U0.B[i] += eps * v[0] * cosx[i];
    U0.W[i] += eps * v[1] * cosx[i];
    U0.T[i] += eps * v[2] * cosx[i];
  }
  auto amplitude = [&](const FieldState& U) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < g.nodes(); ++i) {
      num += cosx[i] * (w[0] * (U.B[i] - u0.B) + w[1] * (U.W[i] - u0.W) + w[2] * (U.T[i] - u0.T));
      den += cosx[i] * cosx[i];
    }
    return num / den;
  };
  IntegratorOptions o;
  o.rel_tol = 1e-10;
  o.abs_tol = 1e-14;
  o.t_end = 200.0;
  o.steady_state_threshold = 0.0;
  const auto tr = integrate(U0, p, o, m);
  const double rate = std::log(amplitude(tr.final_state()) / amplitude(U0)) / o.t_end;
  CHECK(lambda > 0.0);
  CHECK(rate == doctest::Approx(lambda).epsilon(1e-3));
}
