#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "vegbif/continuation.hpp"
#include "vegbif/symmetry.hpp"

using namespace vegbif;

namespace {

const Diagram& default_diagram() {
  static const Diagram d = full_diagram(ModelParams{}, 40, ContinuationOptions{});
  return d;
}

const BifurcationEvent* labeled(const Diagram& d, std::string_view label) {
  for (const auto& e : d.events) {
    if (e.label == label) return &e;
  }
  return nullptr;
}

std::multiset<std::string> stable_kinds(const Diagram& d, double p) {
  std::multiset<std::string> out;
  for (const auto& s : states_at(d, p)) {
    if (s.n_unstable == 0) out.insert(s.kind);
  }
  return out;
}

}  // namespace

TEST_CASE("default diagram completes with every label") {
  const auto& d = default_diagram();
  CHECK(d.complete);
  for (const auto& ref : reference_events()) {
    CAPTURE(ref.label);
    CHECK(labeled(d, ref.label) != nullptr);
  }
  for (std::size_t i = 1; i < d.events.size(); ++i) CHECK(d.events[i - 1].p >= d.events[i].p);
}

TEST_CASE("every accepted point satisfies the equations") {
  const auto& d = default_diagram();
  const ContinuationProblem prob(d.grid, d.params);
  std::size_t count = 0;
  for (const auto& br : d.branches) {
    for (const auto& pt : br.points) {
      CHECK(prob.residual_norm(pt.x) < 1e-8);
      ++count;
    }
  }
  CHECK(count > 1000);
}

TEST_CASE("conjugate branches are reflections") {
  const auto& d = default_diagram();
  const ContinuationProblem prob(d.grid, d.params);
  int pairs = 0;
  for (const auto& br : d.branches) {
    if (br.conjugate_of < 0) continue;
    ++pairs;
    for (const auto& pt : br.points) {
      const auto R = reflect(prob.unpack(pt.x));
      CHECK(prob.residual_norm(prob.pack(R, pt.p)) < 1e-8);
    }
  }
  CHECK(pairs >= 2);
}

TEST_CASE("skewed states at p = 0.95 mirror each other") {
  const auto& d = default_diagram();
  const ContinuationProblem prob(d.grid, d.params);
  const StateAtP* left = nullptr;
  const StateAtP* right = nullptr;
  const auto states = states_at(d, 0.95);
  for (const auto& s : states) {
    if (s.n_unstable != 0) continue;
    if (s.kind == "skewed_left") left = &s;
    if (s.kind == "skewed_right") right = &s;
  }
  REQUIRE(left);
  REQUIRE(right);
  CHECK(symmetry_defect(left->U) > 0.1);
  const auto mirrored = reflect(left->U);
  CHECK(prob.residual_norm(prob.pack(mirrored, left->p)) < 1e-8);
  CHECK(classify(mirrored).shape == ProfileShape::skewed_right);
}

TEST_CASE("stable sets in the multistability windows") {
  const auto& d = default_diagram();
  const auto s095 = stable_kinds(d, 0.95);
  CHECK(s095.count("bare") == 1);
  CHECK(s095.count("inverted_bell") >= 1);
  CHECK(s095.count("skewed_left") >= 1);
  CHECK(s095.count("skewed_right") >= 1);
  CHECK(s095.count("bell") == 0);

  const auto s105 = stable_kinds(d, 1.05);
  CHECK(std::set<std::string>(s105.begin(), s105.end()) == std::set<std::string>{"bare", "bell", "inverted_bell"});

  const auto s150 = stable_kinds(d, 1.5);
  CHECK(std::set<std::string>(s150.begin(), s150.end()) == std::set<std::string>{"bare", "homogeneous"});
}

TEST_CASE("branches from TB2 reach PF2") {
  const auto& d = default_diagram();
  const auto* tb2 = labeled(d, "TB2");
  const auto* pf2 = labeled(d, "PF2");
  REQUIRE(tb2);
  REQUIRE(pf2);
  bool connected = false;
  for (const auto& br : d.branches) {
    if (br.depth != 1 || br.points.empty()) continue;
    if (std::abs(br.points.front().p - tb2->p) > 1e-3) continue;
    for (const auto& e : br.events) connected |= std::abs(e.p - pf2->p) < 1e-6;
  }
  CHECK(connected);
}

TEST_CASE("short domain keeps only the homogeneous fold") {
  ModelParams m;
  m.L = 2.0;
  const auto d = full_diagram(m, 40, ContinuationOptions{});
  CHECK(d.complete);
  std::vector<std::string> labels;
  for (const auto& e : d.events) {
    if (!e.label.empty()) labels.push_back(e.label);
    CHECK(e.kind == EventKind::fold);
  }
  CHECK(labels == std::vector<std::string>{"LP1"});
}
