#include "vegbif/continuation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "vegbif/band_matrix.hpp"
#include "vegbif/discretization.hpp"
#include "vegbif/error.hpp"
#include "vegbif/kernels.hpp"

namespace vegbif {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using SparseSolver = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;

// Residual below which the corrector stops looking at the update size.
constexpr double kResidualFloor = 1e-11;
constexpr double kUnstableThreshold = 1e-10;

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

// Solves A y = rhs; returns false when the factorization fails.
bool sparse_solve(SparseSolver& lu, const SpMat& A, const Eigen::VectorXd& rhs, Eigen::VectorXd& y) {
  lu.compute(A);
  if (lu.info() != Eigen::Success) return false;
  y = lu.solve(rhs);
  return lu.info() == Eigen::Success && y.allFinite();
}

// Distance from z to the segment [a, b] in the weighted metric; `len`
// receives the segment length.
double segment_distance(const ContinuationProblem& prob, std::span<const double> z, std::span<const double> a,
                        std::span<const double> b, double& len) {
  std::vector<double> ab(z.size()), az(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    ab[i] = b[i] - a[i];
    az[i] = z[i] - a[i];
  }
  const double ab2 = prob.dot(ab, ab);
  len = std::sqrt(ab2);
  const double t = ab2 > 0.0 ? std::clamp(prob.dot(az, ab) / ab2, 0.0, 1.0) : 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) az[i] -= t * ab[i];
  return prob.norm(az);
}

// True when z lies on the branch: the nearest chord is projected back onto
// the curve with the corrector and the projection must match z to 1e-6.
bool lies_on(const ContinuationProblem& prob, const Branch& br, std::span<const double> z,
             const ContinuationOptions& opts) {
  const auto& pts = br.points;
  const double tol = 1e-6 * std::max(1.0, prob.norm(z));
  double len = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const auto& a = pts[k].x;
    const auto& b = pts[k + 1].x;
    if (segment_distance(prob, z, a, b, len) > 1e-6 + 0.25 * len) continue;
    if (!(len > 0.0)) continue;
    std::vector<double> dir(z.size()), foot(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) dir[i] = (b[i] - a[i]) / len;
    std::vector<double> az(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) az[i] = z[i] - a[i];
    const double t = std::clamp(prob.dot(az, dir), 0.0, len);
    for (std::size_t i = 0; i < z.size(); ++i) foot[i] = a[i] + t * dir[i];
    const auto cr = corrector(prob, foot, dir, opts);
    if (!cr.converged) continue;
    for (std::size_t i = 0; i < z.size(); ++i) az[i] = cr.x[i] - z[i];
    if (prob.norm(az) <= tol) return true;
  }
  return false;
}

std::vector<double> reflect_x(const ContinuationProblem& prob, std::span<const double> x) {
  auto R = reflect(prob.unpack(x));
  return prob.pack(R, x.back());
}

}  // namespace

void ContinuationOptions::validate() const {
  if (!(p_min < p_max)) throw InvalidArgument("continuation: p_min must be below p_max");
  if (!(h_min > 0.0 && h_min <= h_initial && h_initial <= h_max)) {
    throw InvalidArgument("continuation: need 0 < h_min <= h_initial <= h_max");
  }
  if (!(h_grow >= 1.0)) throw InvalidArgument("continuation: h_grow must be >= 1");
  if (max_points < 2 || max_corrector_iterations < 1) throw InvalidArgument("continuation: bad iteration limits");
  if (!(tol_residual > 0.0 && tol_step > 0.0 && event_tol > 0.0)) {
    throw InvalidArgument("continuation: tolerances must be positive");
  }
  if (!(switch_epsilon > 0.0)) throw InvalidArgument("continuation: switch_epsilon must be positive");
}

ContinuationProblem::ContinuationProblem(const GridSpec& grid, const ModelParams& params)
    : grid_(grid), params_(params) {
  params_.validate();
}

void ContinuationProblem::residual(std::span<const double> x, std::span<double> F) const {
  kernels::rhs(grid_, x.first(state_size()), x.back(), params_, F);
}

double ContinuationProblem::dot(std::span<const double> a, std::span<const double> b) const {
  const std::size_t n = state_size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return state_weight() * acc + a[n] * b[n];
}

double ContinuationProblem::norm(std::span<const double> a) const { return std::sqrt(dot(a, a)); }

std::vector<double> ContinuationProblem::metric_row(std::span<const double> a) const {
  const std::size_t n = state_size();
  std::vector<double> r(a.begin(), a.end());
  for (std::size_t i = 0; i < n; ++i) r[i] *= state_weight();
  return r;
}

double ContinuationProblem::residual_norm(std::span<const double> x) const {
  std::vector<double> F(state_size());
  residual(x, F);
  return max_abs(F);
}

SpMat ContinuationProblem::bordered(std::span<const double> x, std::span<const double> row) const {
  const std::size_t n = state_size();
  BandMatrix J(n, kJacobianBandwidth, kJacobianBandwidth);
  kernels::jacobian(grid_, x.first(n), x.back(), params_, J);
  const auto dp = semidiscrete_dp(grid_, x.first(n), params_);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * 9 + 2 * n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j0 = i > kJacobianBandwidth ? i - kJacobianBandwidth : 0;
    const std::size_t j1 = std::min(n - 1, i + kJacobianBandwidth);
    for (std::size_t j = j0; j <= j1; ++j) {
      const double a = J(i, j);
      if (a != 0.0) trip.emplace_back(static_cast<int>(i), static_cast<int>(j), a);
    }
    if (dp[i] != 0.0) trip.emplace_back(static_cast<int>(i), static_cast<int>(n), dp[i]);
  }
  for (std::size_t j = 0; j <= n; ++j) {
    if (row[j] != 0.0) trip.emplace_back(static_cast<int>(n), static_cast<int>(j), row[j]);
  }
  SpMat A(static_cast<int>(n + 1), static_cast<int>(n + 1));
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

std::vector<double> ContinuationProblem::pack(const FieldState& U, double p) const {
  if (!(U.grid == grid_)) throw InvalidArgument("continuation: state grid differs from the problem grid");
  std::vector<double> x(size());
  U.to_vector(std::span<double>(x).first(state_size()));
  x.back() = p;
  return x;
}

FieldState ContinuationProblem::unpack(std::span<const double> x) const {
  return FieldState::from_vector(grid_, x.first(state_size()));
}

Measures measures(const FieldState& U) {
  Measures m;
  const GridSpec& g = U.grid;
  m.mean_B = trapezoid_mean(g, U.B);
  m.max_B = *std::max_element(U.B.begin(), U.B.end());
  std::vector<double> sq(U.B.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = U.B[i] * U.B[i];
  m.l2_B = std::sqrt(trapezoid_mean(g, sq));
  return m;
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::fold:
      return "fold";
    case EventKind::branch_point:
      return "branch_point";
    case EventKind::turing_onset:
      return "turing_onset";
  }
  return "unknown";
}

CorrectorResult corrector(const ContinuationProblem& prob, std::span<const double> x_pred,
                          std::span<const double> v, const ContinuationOptions& opts) {
  const std::size_t n = prob.state_size();
  CorrectorResult out;
  out.x.assign(x_pred.begin(), x_pred.end());
  std::vector<double> F(n);
  prob.residual(out.x, F);
  out.residual = max_abs(F);
  if (!std::isfinite(out.residual)) return out;
  if (out.residual < kResidualFloor) {
    out.converged = true;
    return out;
  }
  SparseSolver lu;
  const auto row = prob.metric_row(v);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n + 1)), dx;
  for (int it = 1; it <= opts.max_corrector_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -F[i];
    double g = 0.0;
    for (std::size_t i = 0; i <= n; ++i) g += (out.x[i] - x_pred[i]) * row[i];
    rhs[n] = -g;
    if (!sparse_solve(lu, prob.bordered(out.x, row), rhs, dx)) return out;
    double step = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      out.x[i] += dx[i];
      step = std::max(step, std::abs(dx[i]));
    }
    prob.residual(out.x, F);
    out.residual = max_abs(F);
    out.iterations = it;
    if (!std::isfinite(out.residual)) return out;
    if (out.residual < opts.tol_residual && (step < opts.tol_step || out.residual < kResidualFloor)) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

std::vector<double> tangent(const ContinuationProblem& prob, std::span<const double> x,
                            std::span<const double> v_prev) {
  const std::size_t n = prob.state_size();
  SparseSolver lu;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + 1)), t;
  e[n] = 1.0;
  if (!sparse_solve(lu, prob.bordered(x, prob.metric_row(v_prev)), e, t)) {
    throw SingularPointError("tangent: bordered Jacobian is singular at p = " + fmt(x.back()));
  }
  std::vector<double> out(t.data(), t.data() + t.size());
  const double nrm = prob.norm(out);
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw SingularPointError("tangent: degenerate null vector");
  const double sign = prob.dot(out, v_prev) < 0.0 ? -1.0 : 1.0;
  for (double& c : out) c *= sign / nrm;
  return out;
}

namespace {

void fill_stability(const ContinuationProblem& prob, BranchPoint& bp, int keep) {
  const std::size_t n = prob.state_size();
  BandMatrix J(n, kJacobianBandwidth, kJacobianBandwidth);
  kernels::jacobian(prob.grid(), std::span<const double>(bp.x).first(n), bp.p, prob.params(), J);
  const auto dense = J.to_dense();
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd A = Eigen::Map<const RowMat>(dense.data(), N, N);
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  if (es.info() != Eigen::Success) throw ConsistencyError("eigenvalue solve failed at p = " + fmt(bp.p));
  std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + N);
  std::sort(ev.begin(), ev.end(), [](auto a, auto b) { return a.real() > b.real(); });
  bp.n_unstable = static_cast<int>(
      std::count_if(ev.begin(), ev.end(), [](auto z) { return z.real() > kUnstableThreshold; }));
  ev.resize(std::min<std::size_t>(ev.size(), static_cast<std::size_t>(keep)));
  bp.rightmost = std::move(ev);
}

// Sign and log |det| of [F_x; v^T].
std::pair<int, double> bordered_determinant(const ContinuationProblem& prob, std::span<const double> x,
                                            std::span<const double> v) {
  SparseSolver lu;
  lu.compute(prob.bordered(x, prob.metric_row(v)));
  if (lu.info() != Eigen::Success) return {0, -std::numeric_limits<double>::infinity()};
  return {static_cast<int>(lu.signDeterminant()), lu.logAbsDeterminant()};
}

}  // namespace

BranchPoint make_branch_point(const ContinuationProblem& prob, std::vector<double> x,
                              std::span<const double> v_prev, const ContinuationOptions& opts) {
  BranchPoint bp;
  bp.v = tangent(prob, x, v_prev);
  bp.x = std::move(x);
  bp.p = bp.x.back();
  const FieldState U = prob.unpack(bp.x);
  bp.m = measures(U);
  bp.residual = prob.residual_norm(bp.x);
  bp.tau_fold = bp.v.back();
  std::tie(bp.tau_branch, bp.log_abs_det) = bordered_determinant(prob, bp.x, bp.v);
  if (opts.monitor_stability) fill_stability(prob, bp, opts.eigenvalues_kept);
  return bp;
}

BranchPoint homogeneous_seed(const ContinuationProblem& prob, const HomogeneousState& u0, double p,
                             const ContinuationOptions& opts) {
  const auto x = prob.pack(FieldState::uniform(prob.grid(), u0.triple()), p);
  const double res = prob.residual_norm(x);
  if (res > 1e-10) throw InvalidArgument("homogeneous_seed: state is not an equilibrium (residual " + fmt(res) + ")");
  std::vector<double> down(prob.size(), 0.0);
  down.back() = -1.0;
  return make_branch_point(prob, x, down, opts);
}

BifurcationEvent detect_and_refine(const ContinuationProblem& prob, const BranchPoint& a, const BranchPoint& b,
                                   EventKind kind, const ContinuationOptions& opts) {
  const std::size_t n = prob.state_size();
  std::vector<double> diff(n + 1);
  for (std::size_t i = 0; i <= n; ++i) diff[i] = b.x[i] - a.x[i];
  const double sigma_b = prob.dot(diff, a.v);
  const bool fold = kind == EventKind::fold;

  struct Sample {
    double f = 0.0;
    std::vector<double> x, v;
  };
  double lo = 0.0, hi = sigma_b;
  std::vector<double> x_lo = a.x, x_hi = b.x;
  // Secant predictor between the current bracket ends, on the hyperplane
  // <x - a.x, a.v> = sigma; a long bracket on a curved branch defeats the
  // tangent predictor from a.
  auto evaluate = [&](double sigma) -> std::optional<Sample> {
    std::vector<double> pred(n + 1);
    const double w = (sigma - lo) / (hi - lo);
    for (std::size_t i = 0; i <= n; ++i) pred[i] = x_lo[i] + w * (x_hi[i] - x_lo[i]);
    std::vector<double> d(n + 1);
    for (std::size_t i = 0; i <= n; ++i) d[i] = pred[i] - a.x[i];
    const double off = sigma - prob.dot(d, a.v);
    for (std::size_t i = 0; i <= n; ++i) pred[i] += off * a.v[i];
    auto cr = corrector(prob, pred, a.v, opts);
    if (!cr.converged) return std::nullopt;
    Sample s;
    try {
      s.v = tangent(prob, cr.x, a.v);
    } catch (const SingularPointError&) {
      return std::nullopt;
    }
    if (fold) {
      s.f = s.v.back();
    } else {
      const auto [sign, logdet] = bordered_determinant(prob, cr.x, s.v);
      s.f = sign * std::exp(logdet - a.log_abs_det);
    }
    s.x = std::move(cr.x);
    return s;
  };

  double f_lo = fold ? a.tau_fold : static_cast<double>(a.tau_branch);
  double f_hi = fold ? b.tau_fold : b.tau_branch * std::exp(b.log_abs_det - a.log_abs_det);
  Sample best{std::abs(f_lo) < std::abs(f_hi) ? f_lo : f_hi, std::abs(f_lo) < std::abs(f_hi) ? a.x : b.x,
              std::abs(f_lo) < std::abs(f_hi) ? a.v : b.v};
  int stale_side = 0;
  for (int it = 0; it < 80 && std::abs(best.f) >= opts.event_tol; ++it) {
    if (std::abs(hi - lo) <= 1e-12 * std::abs(sigma_b)) break;
    double sigma = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    const double width = hi - lo;
    if (!std::isfinite(sigma) || (sigma - lo) / width <= 0.0 || (sigma - lo) / width >= 1.0) {
      sigma = 0.5 * (lo + hi);
    }
    auto s = evaluate(sigma);
    if (!s) {
      sigma = 0.5 * (lo + hi);
      s = evaluate(sigma);
      if (!s) throw SingularPointError("detect_and_refine: corrector failed inside the bracket near p = " +
                                       fmt(a.p));
    }
    if (std::abs(s->f) < std::abs(best.f)) best = *s;
    if ((s->f < 0.0) == (f_lo < 0.0)) {
      lo = sigma;
      x_lo = s->x;
      f_lo = s->f;
      if (stale_side == -1) f_hi *= 0.5;  // Illinois modification
      stale_side = -1;
    } else {
      hi = sigma;
      x_hi = s->x;
      f_hi = s->f;
      if (stale_side == 1) f_lo *= 0.5;
      stale_side = 1;
    }
  }

  BifurcationEvent ev;
  ev.kind = kind;
  ev.x = std::move(best.x);
  ev.v = std::move(best.v);
  ev.p = ev.x.back();
  // A branch point reports the real eigenvalue of F_u nearest zero; the
  // normalized determinant carries round-off from the near-singular corrector.
  ev.test_value = fold ? best.f : critical_mode(prob, ev.x).eigenvalue;
  ev.p_lo = std::min(a.p, b.p);
  ev.p_hi = std::max(a.p, b.p);
  ev.n_unstable_before = a.n_unstable;
  ev.n_unstable_after = b.n_unstable;
  ev.shape = classify(prob.unpack(ev.x)).shape;
  const bool flat_bracket = classify(prob.unpack(a.x)).shape == ProfileShape::flat &&
                            classify(prob.unpack(b.x)).shape == ProfileShape::flat;
  if (flat_bracket) ev.shape = ProfileShape::flat;
  if (kind == EventKind::branch_point && flat_bracket) ev.kind = EventKind::turing_onset;
  return ev;
}

Branch continue_branch(const ContinuationProblem& prob, const BranchPoint& seed, int direction,
                       const ContinuationOptions& opts) {
  opts.validate();
  const std::size_t n = prob.state_size();
  Branch br;
  BranchPoint cur = seed;
  if (direction < 0) {
    for (double& c : cur.v) c = -c;
    cur.tau_fold = -cur.tau_fold;
    cur.tau_branch = -cur.tau_branch;
  }
  cur.arclength = 0.0;
  br.points.push_back(cur);
  double h = opts.h_initial;
  br.termination = "max_points";
  std::vector<double> pred(n + 1);

  while (static_cast<int>(br.points.size()) < opts.max_points) {
    for (std::size_t i = 0; i <= n; ++i) pred[i] = cur.x[i] + h * cur.v[i];
    auto cr = corrector(prob, pred, cur.v, opts);
    std::optional<BranchPoint> next;
    if (cr.converged) {
      try {
        next = make_branch_point(prob, std::move(cr.x), cur.v, opts);
      } catch (const SingularPointError&) {
        next.reset();
      }
    }
    if (!next) {
      h *= 0.5;
      if (h < opts.h_min) {
        br.termination = "step_underflow";
        br.diagnostics.push_back("corrector failed at the minimum step near p = " + fmt(cur.p));
        break;
      }
      continue;
    }
    const bool fold = cur.tau_fold * next->tau_fold < 0.0;
    const bool bpoint = cur.tau_branch != 0 && next->tau_branch != 0 && cur.tau_branch != next->tau_branch;
    if (fold && bpoint && h > 2.0 * opts.h_min) {
      h *= 0.5;
      continue;
    }
    if (next->p < opts.p_min || next->p > opts.p_max) {
      br.termination = "parameter_bound";
      break;
    }
    const auto B_min = [&] {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; i += 3) m = std::min(m, next->x[i]);
      return m;
    }();
    if (B_min < opts.min_biomass) {
      br.termination = "negative_biomass";
      break;
    }
    next->arclength = cur.arclength + h;

    if (opts.detect_events) {
      const auto refine = [&](EventKind kind) {
        try {
          br.events.push_back(detect_and_refine(prob, cur, *next, kind, opts));
        } catch (const std::exception& e) {
          br.diagnostics.push_back(std::string("event refinement failed: ") + e.what());
        }
      };
      if (fold) refine(EventKind::fold);
      if (bpoint) refine(EventKind::branch_point);
      if (!fold && !bpoint && opts.monitor_stability && cur.n_unstable != next->n_unstable) {
        br.diagnostics.push_back("stability change without a test-function crossing between p = " + fmt(cur.p) +
                                 " and " + fmt(next->p));
      }
    }

    const int iterations = next->corrector_iterations = cr.iterations;
    br.points.push_back(std::move(*next));
    cur = br.points.back();
    if (iterations < opts.fast_iterations) h = std::min(h * opts.h_grow, opts.h_max);

    if (cur.arclength > 1.0) {
      std::vector<double> d(n + 1);
      for (std::size_t i = 0; i <= n; ++i) d[i] = cur.x[i] - br.points.front().x[i];
      if (prob.norm(d) < 1.5 * h) {
        br.closed_loop = true;
        br.termination = "closed_loop";
        break;
      }
    }
  }
  return br;
}

CriticalMode critical_mode(const ContinuationProblem& prob, std::span<const double> x) {
  const std::size_t n = prob.state_size();
  BandMatrix J(n, kJacobianBandwidth, kJacobianBandwidth);
  kernels::jacobian(prob.grid(), x.first(n), x.back(), prob.params(), J);
  BandLU lu(J);
  if (!lu.ok()) {
    J.scale_and_shift(1.0, 1e-13);
    if (!lu.factor(J)) throw SingularPointError("critical_direction: zero pivot");
  }
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> z(n);
  for (double& c : z) c = unif(rng);
  for (int it = 0; it < 8; ++it) {
    lu.solve(z);
    const double nrm = norm2(z);
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw SingularPointError("critical_direction: iteration broke down");
    for (double& c : z) c /= nrm;
  }
  const auto big = std::max_element(z.begin(), z.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (*big < 0.0) {
    for (double& c : z) c = -c;
  }
  // Rayleigh quotient with the Jacobian before any shift.
  kernels::jacobian(prob.grid(), x.first(n), x.back(), prob.params(), J);
  std::vector<double> Jz(n);
  J.multiply(z, Jz);
  CriticalMode mode;
  mode.eigenvalue = dot(z, Jz);
  mode.phi = std::move(z);
  return mode;
}

std::vector<double> critical_direction(const ContinuationProblem& prob, std::span<const double> x) {
  return critical_mode(prob, x).phi;
}

SwitchResult switch_branch(const ContinuationProblem& prob, const BifurcationEvent& event,
                           const ContinuationOptions& opts) {
  const std::size_t n = prob.state_size();
  const auto phi = critical_direction(prob, event.x);
  std::vector<double> t(n + 1, 0.0);
  std::copy(phi.begin(), phi.end(), t.begin());
  const double tn = prob.norm(t);
  for (double& c : t) c /= tn;
  // At a branch point the refined tangent is contaminated by the null
  // direction; strip that part to recover the parent branch direction, then
  // make t orthogonal to it.
  std::vector<double> v(event.v.begin(), event.v.end());
  const double vt = prob.dot(v, t);
  for (std::size_t i = 0; i <= n; ++i) v[i] -= vt * t[i];
  const double vn = prob.norm(v);
  if (vn > 1e-8) {
    for (double& c : v) c /= vn;
    const double proj = prob.dot(t, v);
    for (std::size_t i = 0; i <= n; ++i) t[i] -= proj * v[i];
    const double tn2 = prob.norm(t);
    for (double& c : t) c /= tn2;
  }

  SwitchResult out;
  const double eps0 = opts.switch_epsilon * prob.norm(event.x);
  for (int sign : {1, -1}) {
    std::vector<double> dir(t);
    for (double& c : dir) c *= sign;
    std::optional<BranchPoint> seed;
    for (int attempt = 0; attempt < 3 && !seed; ++attempt) {
      const double eps = eps0 * std::pow(0.1, attempt);
      std::vector<double> x0(n + 1);
      for (std::size_t i = 0; i <= n; ++i) x0[i] = event.x[i] + eps * dir[i];
      auto cr = corrector(prob, x0, dir, opts);
      if (!cr.converged || std::abs(cr.x.back() - event.p) > 0.1) {
        out.diagnostics.push_back("switch at p = " + fmt(event.p) + ": seed " + (sign > 0 ? "+" : "-") +
                                  " with eps = " + fmt(eps) + " did not converge");
        continue;
      }
      try {
        seed = make_branch_point(prob, std::move(cr.x), dir, opts);
        seed->corrector_iterations = cr.iterations;
      } catch (const SingularPointError& e) {
        out.diagnostics.push_back(e.what());
      }
    }
    (sign > 0 ? out.plus : out.minus) = std::move(seed);
  }
  if (!out.plus && !out.minus) {
    throw SingularPointError("switch_branch: both seeds failed at p = " + fmt(event.p));
  }
  return out;
}

std::string state_kind(const FieldState& U) {
  if (*std::max_element(U.B.begin(), U.B.end()) < 1e-8) return "bare";
  const auto rep = classify(U);
  if (rep.shape == ProfileShape::flat) return "homogeneous";
  return std::string(to_string(rep.shape));
}

std::span<const ReferenceEvent> reference_events() {
  static constexpr std::array<ReferenceEvent, 9> refs{{
      {"LP1", 0.64, 0.01},
      {"TB1", 1.14, 0.01},
      {"TB2", 1.06, 0.01},
      {"PF1", 0.99, 0.02},
      {"PF2", 0.91, 0.02},
      {"LP2", 0.54, 0.02},
      {"LP3", 0.54, 0.02},
      {"LP4", 0.44, 0.02},
      {"LP5", 0.44, 0.02},
  }};
  return refs;
}

void label_events(Diagram& d) {
  for (auto& e : d.events) e.label.clear();
  // Picks the event matching pred with the highest (or lowest) p.
  auto pick = [&](const std::string& label, bool highest, auto pred) {
    BifurcationEvent* chosen = nullptr;
    for (auto& e : d.events) {
      if (!e.label.empty() || !pred(e)) continue;
      if (!chosen || (highest ? e.p > chosen->p : e.p < chosen->p)) chosen = &e;
    }
    if (chosen) chosen->label = label;
  };
  const auto on_vegetated = [&](const BifurcationEvent& e) {
    return e.branch >= 0 && d.branches[e.branch].depth == 0 && d.branches[e.branch].provenance.rfind("vegetated", 0) == 0;
  };
  const ContinuationProblem prob(d.grid, d.params);
  double fold_B = 0.0;
  try {
    const double pc0 = fold_precipitation(d.params);
    const auto q = quadratic_coeffs(pc0, d.params);
    fold_B = -q.a1 / (2.0 * q.a2);
  } catch (const InvalidArgument&) {
    fold_B = 0.0;
  }
  const auto upper = [&](const BifurcationEvent& e) { return measures(prob.unpack(e.x)).mean_B > fold_B; };

  pick("LP1", true, [&](const auto& e) { return e.kind == EventKind::fold && e.shape == ProfileShape::flat; });
  pick("TB1", true, [&](const auto& e) { return e.kind == EventKind::turing_onset && on_vegetated(e) && upper(e); });
  pick("TB2", true, [&](const auto& e) { return e.kind == EventKind::turing_onset && on_vegetated(e) && upper(e); });
  // Symmetry-breaking points are labeled on the symmetric parent, not on the
  // asymmetric branches that pass through them.
  const auto on_symmetric = [&](const BifurcationEvent& e) {
    if (e.branch < 0) return false;
    const auto& pts = d.branches[e.branch].points;
    if (pts.empty()) return false;
    const auto& probe = pts[std::min<std::size_t>(1, pts.size() - 1)];
    return symmetry_defect(prob.unpack(probe.x)) < kSymmetryTolerance;
  };
  pick("PF1", true, [&](const auto& e) {
    return e.kind == EventKind::branch_point && e.shape == ProfileShape::bell && on_symmetric(e);
  });
  pick("PF2", true, [&](const auto& e) {
    return e.kind == EventKind::branch_point && e.shape == ProfileShape::inverted_bell && on_symmetric(e);
  });
  pick("LP2", false, [](const auto& e) { return e.kind == EventKind::fold && e.shape == ProfileShape::bell; });
  pick("LP3", false,
       [](const auto& e) { return e.kind == EventKind::fold && e.shape == ProfileShape::inverted_bell; });
  pick("LP4", false, [](const auto& e) { return e.kind == EventKind::fold && e.shape == ProfileShape::skewed_left; });
  pick("LP5", false,
       [](const auto& e) { return e.kind == EventKind::fold && e.shape == ProfileShape::skewed_right; });
}

Diagram full_diagram(const ModelParams& params, int N, const ContinuationOptions& opts) {
  opts.validate();
  Diagram d;
  d.params = params;
  d.grid = GridSpec(params.L, N);
  const ContinuationProblem prob(d.grid, params);

  auto run = [&](const BranchPoint& seed, const std::string& provenance, int depth) {
    try {
      Branch br = continue_branch(prob, seed, 1, opts);
      br.provenance = provenance;
      br.depth = depth;
      if (br.termination == "step_underflow") d.complete = false;
      d.branches.push_back(std::move(br));
    } catch (const std::exception& e) {
      d.complete = false;
      d.diagnostics.push_back(provenance + ": " + e.what());
    }
  };

  const double p0 = opts.p_max;
  run(homogeneous_seed(prob, HomogeneousState{0.0, p0 / params.l, 0.0, BranchTag::bare_soil}, p0, opts),
      "bare soil from p = " + fmt(p0), 0);
  const auto up = upper_equilibrium(p0, params);
  if (up.tag == BranchTag::upper) {
    run(homogeneous_seed(prob, up, p0, opts), "vegetated homogeneous from p = " + fmt(p0), 0);
  } else {
    d.diagnostics.push_back("no vegetated equilibrium at p = " + fmt(p0));
  }

  // Switch at the events of branches [first, last) whose kind passes `want`.
  auto switch_from = [&](std::size_t first, std::size_t last, int depth, auto want) {
    for (std::size_t b = first; b < last; ++b) {
      const auto events = d.branches[b].events;
      for (const auto& ev : events) {
        if (!want(ev)) continue;
        SwitchResult sw;
        try {
          sw = switch_branch(prob, ev, opts);
        } catch (const std::exception& e) {
          d.complete = false;
          d.diagnostics.push_back(e.what());
          continue;
        }
        for (auto& msg : sw.diagnostics) d.diagnostics.push_back(std::move(msg));
        for (auto* seed : {&sw.plus, &sw.minus}) {
          if (!*seed) continue;
          const bool known = std::any_of(d.branches.begin(), d.branches.end(),
                                         [&](const Branch& br) { return lies_on(prob, br, (*seed)->x, opts); });
          const std::string tag = std::string(to_string(ev.kind)) + " at p = " + fmt(ev.p, 8) +
                                  (seed == &sw.plus ? " (+phi)" : " (-phi)");
          if (known) {
            d.diagnostics.push_back("seed from " + tag + " lies on a computed branch; skipped");
            continue;
          }
          run(**seed, "switched from " + tag, depth);
        }
      }
    }
  };

  const std::size_t n_homogeneous = d.branches.size();
  if (opts.max_depth >= 1) {
    switch_from(0, n_homogeneous, 1, [](const BifurcationEvent& e) { return e.kind == EventKind::turing_onset; });
  }
  const std::size_t n_depth1 = d.branches.size();
  if (opts.max_depth >= 2) {
    switch_from(n_homogeneous, n_depth1, 2, [](const BifurcationEvent& e) {
      return e.kind == EventKind::branch_point && e.shape != ProfileShape::flat;
    });
  }

  // Conjugate pairs: the reflection of a mid-branch point lies on an earlier branch.
  for (std::size_t j = 0; j < d.branches.size(); ++j) {
    auto& bj = d.branches[j];
    if (bj.points.size() < 3) continue;
    const auto& mid = bj.points[bj.points.size() / 2];
    if (classify(prob.unpack(mid.x)).classification == SymmetryClass::symmetric) continue;
    const auto rx = reflect_x(prob, mid.x);
    for (std::size_t i = 0; i < j; ++i) {
      if (d.branches[i].points.size() >= 2 && lies_on(prob, d.branches[i], rx, opts)) {
        bj.conjugate_of = static_cast<int>(i);
        break;
      }
    }
  }

  for (std::size_t b = 0; b < d.branches.size(); ++b) {
    for (auto& msg : d.branches[b].diagnostics) d.diagnostics.push_back(d.branches[b].provenance + ": " + msg);
    for (auto ev : d.branches[b].events) {
      ev.branch = static_cast<int>(b);
      d.events.push_back(std::move(ev));
    }
  }
  std::stable_sort(d.events.begin(), d.events.end(), [](const auto& a, const auto& b) { return a.p > b.p; });
  label_events(d);
  return d;
}

std::vector<StateAtP> states_at(const Diagram& d, double p) {
  std::vector<StateAtP> out;
  const ContinuationProblem prob(d.grid, d.params);
  for (std::size_t b = 0; b < d.branches.size(); ++b) {
    const auto& pts = d.branches[b].points;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      const double a = pts[k].p - p, c = pts[k + 1].p - p;
      if (a * c > 0.0 || (a == 0.0 && k > 0)) continue;
      if (a == c) continue;
      const auto& near = std::abs(a) <= std::abs(c) ? pts[k] : pts[k + 1];
      StateAtP s;
      s.branch = static_cast<int>(b);
      s.p = near.p;
      s.n_unstable = near.n_unstable;
      s.U = prob.unpack(near.x);
      s.kind = state_kind(s.U);
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace vegbif
