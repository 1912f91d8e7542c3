#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vegbif/continuation.hpp"
#include "vegbif/error.hpp"
#include "vegbif/linear_stability.hpp"
#include "vegbif/model.hpp"

using namespace vegbif;

namespace ref {
// Onset of the n = 2 mode with the discrete Laplacian eigenvalue
// (4/h^2) sin^2(n pi h / 2L) in place of (n pi / L)^2, N = 40, L = 8;
// independent 40-digit computation.
constexpr double discrete_tb1_n40 = 1.1412977238123945;
constexpr double fold_p = 0.64046167296982205;
}  // namespace ref

namespace {

struct Fixture {
  ModelParams m;
  GridSpec g{8.0, 40};
  ContinuationProblem prob{g, m};
  ContinuationOptions opts;
};

BranchPoint vegetated_seed(const Fixture& f, double p) {
  return homogeneous_seed(f.prob, upper_equilibrium(p, f.m), p, f.opts);
}

const BifurcationEvent* find_event(const Branch& br, EventKind kind, double near, double tol) {
  for (const auto& e : br.events) {
    if (e.kind == kind && std::abs(e.p - near) < tol) return &e;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("options validation") {
  ContinuationOptions o;
  CHECK_NOTHROW(o.validate());
  o.p_min = 3.0;
  CHECK_THROWS_AS(o.validate(), InvalidArgument);
  o = {};
  o.h_min = 1.0;
  CHECK_THROWS_AS(o.validate(), InvalidArgument);
}

TEST_CASE("weighted metric") {
  Fixture f;
  std::vector<double> a(f.prob.size(), 1.0);
  CHECK(f.prob.dot(a, a) == doctest::Approx(2.0));
  const auto row = f.prob.metric_row(a);
  CHECK(row.front() == doctest::Approx(1.0 / static_cast<double>(f.prob.state_size())));
  CHECK(row.back() == 1.0);
}

TEST_CASE("corrector returns to the homogeneous branch") {
  Fixture f;
  const auto seed = vegetated_seed(f, 1.5);
  CHECK(seed.residual < 1e-10);
  CHECK(f.prob.norm(seed.v) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(seed.v.back() < 0.0);
  std::vector<double> pred = seed.x;
  for (std::size_t i = 0; i < pred.size(); ++i) pred[i] += 0.05 * seed.v[i];
  const auto cr = corrector(f.prob, pred, seed.v, f.opts);
  REQUIRE(cr.converged);
  CHECK(cr.residual < 1e-8);
  const auto U = f.prob.unpack(cr.x);
  const auto exact = upper_equilibrium(cr.x.back(), f.m);
  CHECK(U.B[7] == doctest::Approx(exact.B).epsilon(1e-8));
}

TEST_CASE("bare-soil branch carries no events") {
  Fixture f;
  const double p0 = 2.0;
  const auto seed = homogeneous_seed(f.prob, {0.0, p0 / f.m.l, 0.0, BranchTag::bare_soil}, p0, f.opts);
  const auto br = continue_branch(f.prob, seed, 1, f.opts);
  CHECK(br.events.empty());
  CHECK(br.termination == "parameter_bound");
  for (const auto& pt : br.points) {
    CHECK(pt.n_unstable == 0);
    CHECK(pt.residual < 1e-8);
  }
  CHECK(br.points.back().p < 0.05);
}

TEST_CASE("homogeneous vegetated branch: TB1, TB2 and the fold") {
  Fixture f;
  const auto br = continue_branch(f.prob, vegetated_seed(f, 2.0), 1, f.opts);
  const auto* tb1 = find_event(br, EventKind::turing_onset, 1.14, 0.01);
  const auto* tb2 = find_event(br, EventKind::turing_onset, 1.06, 0.01);
  const auto* lp1 = find_event(br, EventKind::fold, 0.64, 0.01);
  REQUIRE(tb1);
  REQUIRE(tb2);
  REQUIRE(lp1);
  CHECK(tb1->p == doctest::Approx(ref::discrete_tb1_n40).epsilon(1e-8));
  CHECK(lp1->p == doctest::Approx(ref::fold_p).epsilon(1e-8));
  CHECK(tb1->n_unstable_before == 0);
  CHECK(tb1->n_unstable_after == 1);
  CHECK(tb2->n_unstable_after == 2);
  CHECK(tb1->shape == ProfileShape::flat);
  for (const auto& pt : br.points) CHECK(pt.residual < 1e-8);
  // Arclength increases and tangents stay unit length.
  for (std::size_t k = 1; k < br.points.size(); ++k) {
    CHECK(br.points[k].arclength > br.points[k - 1].arclength);
    CHECK(f.prob.norm(br.points[k].v) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("branches emanating from TB1") {
  Fixture f;
  f.opts.p_min = 1.1;
  const auto parent = continue_branch(f.prob, vegetated_seed(f, 1.2), 1, f.opts);
  const auto* tb1 = find_event(parent, EventKind::turing_onset, 1.14, 0.01);
  REQUIRE(tb1);

  // The critical direction is the n = 2 cosine.
  const auto phi = critical_direction(f.prob, tb1->x);
  double c2 = 0.0, total = 0.0;
  for (int i = 0; i < f.g.nodes(); ++i) {
    const double c = std::cos(2 * std::numbers::pi * f.g.x(i) / f.g.L);
    c2 += phi[3 * i] * c;
    total += phi[3 * i] * phi[3 * i];
  }
  double cnorm = 0.0;
  for (int i = 0; i < f.g.nodes(); ++i) cnorm += std::pow(std::cos(2 * std::numbers::pi * f.g.x(i) / f.g.L), 2);
  CHECK(c2 * c2 / (total * cnorm) > 0.999);

  const auto sw = switch_branch(f.prob, *tb1, f.opts);
  REQUIRE(sw.plus);
  REQUIRE(sw.minus);
  const double target = tb1->p - 0.01;
  auto state_near = [&](const BranchPoint& seed) {
    auto o = f.opts;
    o.p_min = target - 0.02;
    const auto br = continue_branch(f.prob, seed, 1, o);
    const BranchPoint* best = nullptr;
    for (const auto& pt : br.points) {
      if (!best || std::abs(pt.p - target) < std::abs(best->p - target)) best = &pt;
      if (std::abs(pt.p - tb1->p) < 0.01) CHECK(symmetry_defect(f.prob.unpack(pt.x)) < 1e-6);
    }
    REQUIRE(best);
    return *best;
  };
  const auto a = state_near(*sw.plus);
  const auto b = state_near(*sw.minus);
  CHECK(std::abs(a.p - target) < 5e-3);
  CHECK(std::abs(b.p - target) < 5e-3);

  const auto Ua = f.prob.unpack(a.x), Ub = f.prob.unpack(b.x);
  const auto shapes = std::minmax(classify(Ua).shape, classify(Ub).shape);
  CHECK(shapes.first == ProfileShape::bell);
  CHECK(shapes.second == ProfileShape::inverted_bell);

  // Near onset the two states are mirror images about the homogeneous state.
  const auto u0 = upper_equilibrium(0.5 * (a.p + b.p), f.m);
  double sum = 0.0, da = 0.0;
  for (int i = 0; i < f.g.nodes(); ++i) {
    sum += std::pow((Ua.B[i] - u0.B) + (Ub.B[i] - u0.B), 2);
    da += std::pow(Ua.B[i] - u0.B, 2);
  }
  CHECK(std::sqrt(sum / da) < 0.1);
}

TEST_CASE("measures of a uniform state") {
  const auto U = FieldState::uniform(GridSpec(8.0, 20), {0.3, 10.0, 0.01});
  const auto ms = measures(U);
  CHECK(ms.mean_B == doctest::Approx(0.3));
  CHECK(ms.max_B == 0.3);
  CHECK(ms.l2_B == doctest::Approx(0.3));
}

TEST_CASE("reference table") {
  const auto refs = reference_events();
  CHECK(refs.size() == 9);
  CHECK(refs[0].label == "LP1");
}
