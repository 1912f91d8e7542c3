#include "vegbif/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vegbif/error.hpp"

namespace vegbif {

namespace {

// Accumulates ||v - reverse(v)||^2 and ||v||^2. Node i is paired with its
// mirror so the sums are bitwise identical for v and reverse(v).
void defect_terms(const std::vector<double>& v, double& diff2, double& norm2) {
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < j; ++i, --j) {
    const double d = v[i] - v[j];
    diff2 += 2.0 * (d * d);
    norm2 += v[i] * v[i] + v[j] * v[j];
  }
  if (n % 2 == 1) norm2 += v[n / 2] * v[n / 2];
}

double ratio(double diff2, double norm2) { return norm2 > 0.0 ? std::sqrt(diff2 / norm2) : 0.0; }

}  // namespace

std::string_view to_string(SymmetryClass c) {
  return c == SymmetryClass::symmetric ? "symmetric" : "asymmetric";
}

std::string_view to_string(ProfileShape s) {
  switch (s) {
    case ProfileShape::flat:
      return "flat";
    case ProfileShape::bell:
      return "bell";
    case ProfileShape::inverted_bell:
      return "inverted_bell";
    case ProfileShape::skewed_left:
      return "skewed_left";
    case ProfileShape::skewed_right:
      return "skewed_right";
    case ProfileShape::other:
      return "other";
  }
  return "other";
}

std::string_view to_string(OnsetSymmetry s) {
  return s == OnsetSymmetry::symmetric ? "symmetric" : "half_period";
}

FieldState reflect(const FieldState& U) {
  U.check_consistent();
  FieldState R = U;
  std::reverse(R.B.begin(), R.B.end());
  std::reverse(R.W.begin(), R.W.end());
  std::reverse(R.T.begin(), R.T.end());
  return R;
}

double symmetry_defect(const FieldState& U) {
  U.check_consistent();
  double diff2 = 0.0, norm2 = 0.0;
  defect_terms(U.B, diff2, norm2);
  defect_terms(U.W, diff2, norm2);
  defect_terms(U.T, diff2, norm2);
  return ratio(diff2, norm2);
}

SymmetryReport classify(const FieldState& U) {
  U.check_consistent();
  SymmetryReport rep;
  rep.defect = symmetry_defect(U);
  double diff2 = 0.0, norm2 = 0.0;
  defect_terms(U.B, diff2, norm2);
  rep.defect_B = ratio(diff2, norm2);
  rep.classification = rep.defect < kSymmetryTolerance ? SymmetryClass::symmetric : SymmetryClass::asymmetric;

  const GridSpec& g = U.grid;
  const auto [lo, hi] = std::minmax_element(U.B.begin(), U.B.end());
  const double mean = trapezoid_mean(g, U.B);
  double mass = 0.0, moment = 0.0;
  for (int i = 0, j = g.N; i <= j; ++i, --j) {
    const double wgt = i == 0 ? 0.5 : 1.0;
    if (i == j) {
      mass += wgt * U.B[i];
      continue;
    }
    mass += wgt * (U.B[i] + U.B[j]);
    moment += wgt * (i - 0.5 * g.N) * (U.B[i] - U.B[j]);
  }
  rep.first_moment = mass != 0.0 ? g.h() * moment / mass : 0.0;

  if (*hi - *lo <= 1e-8 * std::abs(mean)) {
    rep.shape = ProfileShape::flat;
  } else if (rep.defect_B < kSymmetryTolerance) {
    const int N = g.N;
    const double center = N % 2 == 0 ? U.B[N / 2] : 0.5 * (U.B[N / 2] + U.B[N / 2 + 1]);
    const double boundary = 0.5 * (U.B.front() + U.B.back());
    rep.shape = center > boundary ? ProfileShape::bell
                : center < boundary ? ProfileShape::inverted_bell
                                    : ProfileShape::other;
  } else if (std::abs(rep.first_moment) > 1e-12 * g.L) {
    rep.shape = rep.first_moment < 0.0 ? ProfileShape::skewed_left : ProfileShape::skewed_right;
  } else {
    rep.shape = ProfileShape::other;
  }
  return rep;
}

OnsetSymmetry near_onset_shape(int n) {
  if (n < 1) throw InvalidArgument("near_onset_shape: mode index must be >= 1, got " + std::to_string(n));
  return n % 2 == 0 ? OnsetSymmetry::symmetric : OnsetSymmetry::half_period;
}

}  // namespace vegbif
