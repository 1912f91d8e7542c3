#include "vegbif/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vegbif/discretization.hpp"
#include "vegbif/error.hpp"
#include "vegbif/kernels.hpp"

namespace vegbif {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kGamma = 2.0 - kSqrt2;
constexpr double kD = kGamma / 2.0;  // diagonal coefficient of both implicit stages
constexpr double kW = kSqrt2 / 4.0;
// Embedded third-order weights.
constexpr double kBhat1 = (1.0 - kW) / 3.0;
constexpr double kBhat2 = (3.0 * kW + 1.0) / 3.0;
constexpr double kBhat3 = kD / 3.0;

constexpr double kNewtonTol = 1e-2;  // relative to the local error tolerance
constexpr int kNewtonMaxIter = 8;
constexpr double kSafety = 0.9;
constexpr double kMaxGrowth = 5.0;
constexpr double kMinShrink = 0.2;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

class TrBdf2 {
 public:
  TrBdf2(const OdeSystem& sys, double rel_tol, double abs_tol)
      : sys_(sys),
        rtol_(rel_tol),
        atol_(abs_tol),
        n_(sys.size()),
        J_(n_, sys.bandwidth(), sys.bandwidth()),
        M_(n_, sys.bandwidth(), sys.bandwidth()),
        f2_(n_),
        f3_(n_),
        z2_(n_),
        base_(n_),
        work_(n_),
        err_(n_) {}

  enum class Outcome { accepted_candidate, newton_failed };

  // One step of size h from y with f1 = f(y). On success y_new and f_new hold
  // the candidate and err_norm its scaled local error (0 without control).
  Outcome step(std::span<const double> y, std::span<const double> f1, double h, std::span<double> y_new,
               std::span<double> f_new, double& err_norm, bool estimate_error) {
    for (int attempt = 0; attempt < 2; ++attempt) {
      if (!jacobian_valid_) refresh_jacobian(y);
      if (!prepare_matrix(h)) {
        if (jacobian_fresh_) return Outcome::newton_failed;
        jacobian_valid_ = false;
        continue;
      }
      int iters2 = 0, iters3 = 0;
      // Trapezoid stage to t + gamma h.
      for (std::size_t i = 0; i < n_; ++i) {
        base_[i] = y[i] + h * kD * f1[i];
        z2_[i] = y[i] + kGamma * h * f1[i];
      }
      if (!solve_stage(h, z2_, f2_, iters2)) {
        ++stats.newton_failures;
        if (jacobian_fresh_) return Outcome::newton_failed;
        jacobian_valid_ = false;
        continue;
      }
      // BDF2 stage to t + h.
      for (std::size_t i = 0; i < n_; ++i) {
        base_[i] = y[i] + h * kW * (f1[i] + f2_[i]);
        y_new[i] = y[i] + (z2_[i] - y[i]) / kGamma;
      }
      if (!solve_stage(h, y_new, f3_, iters3)) {
        ++stats.newton_failures;
        if (jacobian_fresh_) return Outcome::newton_failed;
        jacobian_valid_ = false;
        continue;
      }
      std::copy(f3_.begin(), f3_.end(), f_new.begin());
      // Slow convergence: refresh the Jacobian before the next step.
      if (iters2 + iters3 > 6) jacobian_valid_ = false;
      jacobian_fresh_ = false;
      err_norm = 0.0;
      if (estimate_error) {
        for (std::size_t i = 0; i < n_; ++i) {
          err_[i] = h * ((kW - kBhat1) * f1[i] + (kW - kBhat2) * f2_[i] + (kD - kBhat3) * f3_[i]);
        }
        lu_.solve(err_);
        for (std::size_t i = 0; i < n_; ++i) {
          const double scale = atol_ + rtol_ * std::max(std::abs(y[i]), std::abs(y_new[i]));
          err_norm = std::max(err_norm, std::abs(err_[i]) / scale);
        }
        if (!std::isfinite(err_norm)) err_norm = std::numeric_limits<double>::infinity();
      }
      return Outcome::accepted_candidate;
    }
    return Outcome::newton_failed;
  }

  StepStats stats;

 private:
  void refresh_jacobian(std::span<const double> y) {
    sys_.jacobian(y, J_);
    ++stats.jacobian_evaluations;
    jacobian_valid_ = true;
    jacobian_fresh_ = true;
    h_factored_ = -1.0;
  }

  bool prepare_matrix(double h) {
    if (h == h_factored_) return lu_ok_;
    M_ = J_;
    M_.scale_and_shift(-kD * h, 1.0);
    lu_ok_ = lu_.factor(M_);
    ++stats.factorizations;
    h_factored_ = h;
    return lu_ok_;
  }

  // Solves z = base + h d f(z) by modified Newton; fz receives f(z).
  bool solve_stage(double h, std::span<double> z, std::span<double> fz, int& iterations) {
    double prev = 0.0;
    for (int it = 0; it < kNewtonMaxIter; ++it) {
      sys_.rhs(z, fz);
      for (std::size_t i = 0; i < n_; ++i) work_[i] = base_[i] + h * kD * fz[i] - z[i];
      lu_.solve(work_);
      double dnorm = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        z[i] += work_[i];
        dnorm = std::max(dnorm, std::abs(work_[i]) / (atol_ + rtol_ * std::abs(z[i])));
      }
      iterations = it + 1;
      if (!std::isfinite(dnorm)) return false;
      bool done = dnorm <= kNewtonTol;
      if (!done && it > 0) {
        const double rate = dnorm / prev;
        if (rate >= 1.0) return false;
        done = rate / (1.0 - rate) * dnorm <= kNewtonTol;
      }
      prev = dnorm;
      if (done) {
        sys_.rhs(z, fz);
        return all_finite(fz);
      }
    }
    return false;
  }

  const OdeSystem& sys_;
  double rtol_, atol_;
  std::size_t n_;
  BandMatrix J_, M_;
  BandLU lu_;
  bool lu_ok_ = false;
  bool jacobian_valid_ = false;
  bool jacobian_fresh_ = false;
  double h_factored_ = -1.0;
  std::vector<double> f2_, f3_, z2_, base_, work_, err_;
};

}  // namespace

SemidiscreteSystem::SemidiscreteSystem(const GridSpec& grid, double p, const ModelParams& params)
    : grid_(grid), p_(p), params_(params) {}

std::size_t SemidiscreteSystem::bandwidth() const { return kJacobianBandwidth; }

void SemidiscreteSystem::rhs(std::span<const double> u, std::span<double> out) const {
  kernels::rhs(grid_, u, p_, params_, out);
}

void SemidiscreteSystem::jacobian(std::span<const double> u, BandMatrix& J) const {
  kernels::jacobian(grid_, u, p_, params_, J);
}

void IntegratorOptions::validate() const {
  if (!(rel_tol > 0.0 && abs_tol > 0.0)) throw InvalidArgument("integrator tolerances must be positive");
  if (!(t_end > 0.0 && std::isfinite(t_end))) throw InvalidArgument("t_end must be positive and finite");
  if (!(initial_step > 0.0 && max_step > 0.0)) throw InvalidArgument("step sizes must be positive");
  if (!(steady_state_threshold >= 0.0)) throw InvalidArgument("steady_state_threshold must be >= 0");
  if (!(snapshot_interval >= 0.0)) throw InvalidArgument("snapshot_interval must be >= 0");
  if (max_steps <= 0) throw InvalidArgument("max_steps must be positive");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::t_end:
      return "t_end";
    case Termination::steady_state:
      return "steady_state";
    case Termination::step_failure:
      return "step_failure";
  }
  return "unknown";
}

VectorTrajectory integrate_system(const OdeSystem& sys, std::span<const double> u0,
                                  const IntegratorOptions& opts) {
  opts.validate();
  if (u0.size() != sys.size()) throw InvalidArgument("initial state has the wrong size");
  if (!all_finite(u0)) throw InvalidArgument("initial state contains non-finite values");

  const std::size_t n = sys.size();
  VectorTrajectory out;
  std::vector<double> y(u0.begin(), u0.end()), f(n), y_new(n), f_new(n);
  sys.rhs(y, f);
  double t = 0.0;
  out.times.push_back(t);
  out.states.push_back(y);
  out.final_rhs_norm = max_abs(f);
  if (out.final_rhs_norm < opts.steady_state_threshold) {
    out.reason = Termination::steady_state;
    return out;
  }

  TrBdf2 stepper(sys, opts.rel_tol, opts.abs_tol);
  const double h_min = 1e-14 * opts.t_end;
  double h = std::min({opts.initial_step, opts.max_step, opts.t_end});
  double next_snapshot = opts.snapshot_interval;
  bool last_rejected = false;
  long steps = 0;
  out.reason = Termination::t_end;

  while (t < opts.t_end) {
    if (steps++ >= opts.max_steps) {
      out.reason = Termination::step_failure;
      break;
    }
    h = std::min(h, opts.max_step);
    const double remaining = opts.t_end - t;
    if (h >= remaining * (1.0 - 1e-12)) h = remaining;
    if (h < h_min) {
      out.reason = Termination::step_failure;
      break;
    }
    double err = 0.0;
    const auto outcome = stepper.step(y, f, h, y_new, f_new, err, true);
    if (outcome == TrBdf2::Outcome::newton_failed) {
      ++stepper.stats.rejected;
      h *= 0.25;
      last_rejected = true;
      continue;
    }
    if (err > 1.0) {
      ++stepper.stats.rejected;
      h *= std::max(kMinShrink, kSafety * std::pow(err, -1.0 / 3.0));
      last_rejected = true;
      continue;
    }
    ++stepper.stats.accepted;
    t = h == remaining ? opts.t_end : t + h;
    y.swap(y_new);
    f.swap(f_new);
    out.final_rhs_norm = max_abs(f);

    const bool steady = out.final_rhs_norm < opts.steady_state_threshold;
    const bool done = steady || t >= opts.t_end;
    if (done || (opts.snapshot_interval > 0.0 && t >= next_snapshot)) {
      out.times.push_back(t);
      out.states.push_back(y);
      if (opts.snapshot_interval > 0.0) {
        while (next_snapshot <= t) next_snapshot += opts.snapshot_interval;
      }
    }
    if (steady) {
      out.reason = Termination::steady_state;
      break;
    }
    double factor = err > 0.0 ? kSafety * std::pow(err, -1.0 / 3.0) : kMaxGrowth;
    factor = std::clamp(factor, kMinShrink, last_rejected ? 1.0 : kMaxGrowth);
    h *= factor;
    last_rejected = false;
  }
  if (out.times.back() != t) {
    out.times.push_back(t);
    out.states.push_back(y);
  }
  out.stats = stepper.stats;
  return out;
}

std::vector<double> integrate_fixed_steps(const OdeSystem& sys, std::span<const double> u0, double t_end,
                                          int n_steps) {
  if (n_steps <= 0 || !(t_end > 0.0)) throw InvalidArgument("integrate_fixed_steps: need t_end > 0, n_steps > 0");
  if (u0.size() != sys.size()) throw InvalidArgument("initial state has the wrong size");
  const std::size_t n = sys.size();
  const double h = t_end / n_steps;
  std::vector<double> y(u0.begin(), u0.end()), f(n), y_new(n), f_new(n);
  sys.rhs(y, f);
  // Tight tolerances so that the stage equations are solved to round-off.
  TrBdf2 stepper(sys, 1e-13, 1e-13);
  for (int k = 0; k < n_steps; ++k) {
    double err = 0.0;
    if (stepper.step(y, f, h, y_new, f_new, err, false) != TrBdf2::Outcome::accepted_candidate) {
      throw ConsistencyError("integrate_fixed_steps: stage equations did not converge");
    }
    y.swap(y_new);
    f.swap(f_new);
  }
  return y;
}

Trajectory integrate(const FieldState& U0, double p, const IntegratorOptions& opts, const ModelParams& params) {
  U0.check_consistent();
  if (!U0.all_finite()) throw InvalidArgument("initial field contains non-finite values");
  const SemidiscreteSystem sys(U0.grid, p, params);
  auto raw = integrate_system(sys, U0.to_vector(), opts);
  Trajectory traj;
  traj.times = std::move(raw.times);
  traj.reason = raw.reason;
  traj.final_rhs_norm = raw.final_rhs_norm;
  traj.stats = raw.stats;
  traj.snapshots.reserve(raw.states.size());
  for (const auto& s : raw.states) traj.snapshots.push_back(FieldState::from_vector(U0.grid, s));
  return traj;
}

NewtonResult newton_steady_state(const FieldState& U0, double p, const ModelParams& params, double tol,
                                 int max_iterations) {
  U0.check_consistent();
  const GridSpec& g = U0.grid;
  const std::size_t n = g.unknowns();
  std::vector<double> u = U0.to_vector(), F(n), trial(n), Ft(n);
  BandMatrix J(n, kJacobianBandwidth, kJacobianBandwidth);
  BandLU lu;
  kernels::rhs(g, u, p, params, F);
  double res = max_abs(F);
  NewtonResult out;
  int it = 0;
  for (; it < max_iterations && res >= tol; ++it) {
    kernels::jacobian(g, u, p, params, J);
    if (!lu.factor(J)) break;
    std::vector<double> delta(F);
    lu.solve(delta);
    // Backtrack while the residual grows.
    double lambda = 1.0, res_trial = 0.0;
    for (int k = 0; k < 12; ++k) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = u[i] - lambda * delta[i];
      kernels::rhs(g, trial, p, params, Ft);
      res_trial = max_abs(Ft);
      if (std::isfinite(res_trial) && res_trial < std::max(res, 1e-300) * (1.0 - 1e-4 * lambda)) break;
      lambda *= 0.5;
    }
    if (!std::isfinite(res_trial)) break;
    u.swap(trial);
    F.swap(Ft);
    res = res_trial;
  }
  out.state = FieldState::from_vector(g, u);
  out.residual = res;
  out.iterations = it;
  out.converged = res < tol;
  return out;
}

FieldState settle(const FieldState& U0, double p, const IntegratorOptions& opts, const ModelParams& params) {
  constexpr double kSettleResidual = 1e-10;
  constexpr double kPolishStart = 1e-7;
  const Trajectory traj = integrate(U0, p, opts, params);
  const FieldState& last = traj.final_state();
  if (traj.reason != Termination::steady_state && traj.final_rhs_norm >= kPolishStart) {
    throw SettleTimeout("settle: no steady state within t_end (||du/dt|| = " +
                            std::to_string(traj.final_rhs_norm) + ")",
                        last, traj.final_rhs_norm);
  }
  NewtonResult polished = newton_steady_state(last, p, params, 1e-13);
  if (polished.residual >= kSettleResidual) {
    throw SettleTimeout("settle: Newton polish did not reach the residual bound", last, traj.final_rhs_norm);
  }
  // The polish must stay next to the integrated state.
  const auto a = last.to_vector(), b = polished.state.to_vector();
  double jump = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) jump = std::max(jump, std::abs(a[i] - b[i]));
  if (jump > 1e-4 * (1.0 + max_abs(a))) {
    throw SettleTimeout("settle: Newton polish moved away from the integrated state", last, traj.final_rhs_norm);
  }
  return polished.state;
}

}  // namespace vegbif
