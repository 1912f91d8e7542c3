#include "vegbif/linear_stability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vegbif/error.hpp"
#include "vegbif/kernels.hpp"

namespace vegbif {

namespace {

constexpr int kRootSamples = 2001;
constexpr double kRootOffset = 1e-6;

double det3(const Mat3& A) {
  return A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) -
         A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
         A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]);
}

// Bisection down to a 1e-12 bracket, then secant steps while they reduce |f|.
template <class F>
double refine_root(F&& f, double lo, double hi, double flo) {
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  double a = lo, b = hi;
  double fa = f(a), fb = f(b);
  double best = std::abs(fa) < std::abs(fb) ? a : b;
  double fbest = std::min(std::abs(fa), std::abs(fb));
  for (int it = 0; it < 4 && fb != fa; ++it) {
    const double c = b - fb * (b - a) / (fb - fa);
    if (!(c >= lo - 1e-9 && c <= hi + 1e-9)) break;
    const double fc = f(c);
    if (std::abs(fc) < fbest) {
      best = c;
      fbest = std::abs(fc);
    }
    a = b;
    fa = fb;
    b = c;
    fb = fc;
  }
  return best;
}

void check_mode_index(int n) {
  if (n < 0) throw InvalidArgument("mode index must be >= 0, got " + std::to_string(n));
}

}  // namespace

ModeMatrix mode_matrix(const HomogeneousState& u0, double p, int n, const ModelParams& m) {
  check_mode_index(n);
  const double res = reaction_residual(u0.triple(), p, m);
  if (!(res <= 1e-8)) {
    throw InvalidArgument("mode_matrix: state is not an equilibrium (residual " + std::to_string(res) + ")");
  }
  const double kn = n * std::numbers::pi / m.L;
  ModeMatrix mm;
  mm.n = n;
  mm.k2 = kn * kn;
  const double B = u0.B, W = u0.W;
  const double decay = m.k + m.w * p;
  if (u0.tag == BranchTag::bare_soil) {
    mm.A[0] = {-m.d - m.D_B * mm.k2, 0.0, 0.0};
    mm.A[1] = {0.0, -m.l - m.D_W * mm.k2, 0.0};
    mm.A[2] = {m.q * m.d, 0.0, -decay};
  } else {
    mm.A[0] = {m.c * B * W - m.D_B * mm.k2, m.c * B * B, -m.s * B};
    mm.A[1] = {-2.0 * m.r * B * W, -p / W - m.D_W * mm.k2, 0.0};
    mm.A[2] = {m.q * m.c * W * B, 0.0, m.q * m.s * B - decay};
  }
  return mm;
}

CharCoeffs char_coeffs(const Mat3& A) {
  const double tr = A[0][0] + A[1][1] + A[2][2];
  double tr2 = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) tr2 += A[i][j] * A[j][i];
  return {-tr, 0.5 * (tr * tr - tr2), -det3(A)};
}

bool routh_hurwitz(const CharCoeffs& cc) {
  return cc.c2 > 0.0 && cc.c0 > 0.0 && cc.c2 * cc.c1 > cc.c0;
}

StabilityReport homogeneous_stability(const HomogeneousState& u0, double p, const ModelParams& m, int n_max) {
  if (n_max < 1) throw InvalidArgument("homogeneous_stability: n_max must be >= 1");
  StabilityReport report;
  report.stable = true;
  for (int n = 0; n <= n_max; ++n) {
    const ModeMatrix mm = mode_matrix(u0, p, n, m);
    ModeVerdict v;
    v.n = n;
    v.coeffs = char_coeffs(mm.A);
    v.routh_hurwitz_pass = routh_hurwitz(v.coeffs);
    v.leading_real_part = eigenvalues3(mm.A)[0].real();
    const bool eig_stable = v.leading_real_part < 0.0;
    if (eig_stable != v.routh_hurwitz_pass && std::abs(v.leading_real_part) > 1e-9) {
      throw ConsistencyError("Routh-Hurwitz and eigenvalue verdicts disagree for mode " + std::to_string(n));
    }
    if (!v.routh_hurwitz_pass) {
      report.stable = false;
      if (!report.first_violating_mode) report.first_violating_mode = n;
    }
    report.modes.push_back(v);
  }
  return report;
}

double turing_objective(double p, int n, double L, const ModelParams& m) {
  check_mode_index(n);
  ModelParams local = m;
  local.L = L;
  const HomogeneousState u0 = upper_equilibrium(p, local);
  if (u0.tag == BranchTag::bare_soil) {
    throw InvalidArgument("turing_objective: no vegetated state at p=" + std::to_string(p));
  }
  return det3(mode_matrix(u0, p, n, local).A);
}

TuringRoots turing_roots(int n, double L, const ModelParams& m, double p_max) {
  check_mode_index(n);
  TuringRoots out;
  out.n = n;
  const double p_lo = fold_precipitation(m) + kRootOffset;
  if (p_max <= p_lo) return out;

  std::vector<double> ps(kRootSamples), fs(kRootSamples);
  for (int i = 0; i < kRootSamples; ++i) {
    ps[i] = p_lo + (p_max - p_lo) * static_cast<double>(i) / (kRootSamples - 1);
  }
  kernels::turing_objective_samples_parallel(n, L, m, ps, fs);

  auto f = [&](double p) { return turing_objective(p, n, L, m); };
  for (int i = 0; i + 1 < kRootSamples; ++i) {
    if (fs[i] == 0.0) {
      out.roots.push_back(ps[i]);
    } else if ((fs[i] < 0.0) != (fs[i + 1] < 0.0) && fs[i + 1] != 0.0) {
      out.roots.push_back(refine_root(f, ps[i], ps[i + 1], fs[i]));
    }
  }
  if (!out.roots.empty()) out.onset = out.roots.back();
  return out;
}

std::optional<double> turing_locus(int n, double L, const ModelParams& m, double p_max) {
  return turing_roots(n, L, m, p_max).onset;
}

std::optional<double> critical_domain_size(const ModelParams& m) {
  const double pc0 = fold_precipitation(m);
  auto f = [&](double L) { return turing_objective(pc0, 1, L, m); };
  constexpr int kSamples = 2000;
  constexpr double kLmin = 0.1, kLmax = 20.0;
  double prev_L = kLmin;
  double prev_f = f(prev_L);
  for (int i = 1; i < kSamples; ++i) {
    const double L = kLmin + (kLmax - kLmin) * i / (kSamples - 1);
    const double fl = f(L);
    if ((fl < 0.0) != (prev_f < 0.0)) return refine_root(f, prev_L, L, prev_f);
    prev_L = L;
    prev_f = fl;
  }
  return std::nullopt;
}

std::vector<TuringScanRow> turing_scan(double L, int n_max, const ModelParams& m, double p_max) {
  if (n_max < 1) throw InvalidArgument("turing_scan: n_max must be >= 1");
  std::vector<TuringScanRow> rows(static_cast<std::size_t>(n_max) + 1);
  kernels::for_each_mode_parallel(n_max, [&](int n) {
    const TuringRoots tr = turing_roots(n, L, m, p_max);
    rows[n] = {n, tr.roots, tr.onset};
  });
  return rows;
}

}  // namespace vegbif
