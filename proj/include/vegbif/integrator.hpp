#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "vegbif/band_matrix.hpp"
#include "vegbif/field.hpp"
#include "vegbif/params.hpp"

namespace vegbif {

/// Autonomous system du/dt = f(u) with a banded Jacobian.
class OdeSystem {
 public:
  virtual ~OdeSystem() = default;
  virtual std::size_t size() const = 0;
  virtual std::size_t bandwidth() const = 0;
  virtual void rhs(std::span<const double> u, std::span<double> out) const = 0;
  virtual void jacobian(std::span<const double> u, BandMatrix& J) const = 0;
};

/// The semidiscrete reaction-diffusion system at fixed precipitation.
class SemidiscreteSystem final : public OdeSystem {
 public:
  SemidiscreteSystem(const GridSpec& grid, double p, const ModelParams& params);
  std::size_t size() const override { return grid_.unknowns(); }
  std::size_t bandwidth() const override;
  void rhs(std::span<const double> u, std::span<double> out) const override;
  void jacobian(std::span<const double> u, BandMatrix& J) const override;

 private:
  GridSpec grid_;
  double p_;
  ModelParams params_;
};

struct IntegratorOptions {
  double rel_tol = 1e-6;
  double abs_tol = 1e-6;
  double initial_step = 1e-2;
  double max_step = std::numeric_limits<double>::infinity();
  double t_end = 1e5;
  /// Stop early once ||du/dt||_inf falls below this.
  double steady_state_threshold = 1e-10;
  /// Record a snapshot at the first accepted step at or past every multiple
  /// of this interval; 0 keeps only the initial and final states.
  double snapshot_interval = 0.0;
  long max_steps = 2'000'000;

  /// Throws InvalidArgument on non-positive tolerances, t_end or steps.
  void validate() const;
};

enum class Termination { t_end, steady_state, step_failure };

std::string_view to_string(Termination t);

struct StepStats {
  long accepted = 0;
  long rejected = 0;
  long newton_failures = 0;
  long jacobian_evaluations = 0;
  long factorizations = 0;
};

/// Raw output of the generic integrator.
struct VectorTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  Termination reason = Termination::t_end;
  double final_rhs_norm = 0.0;
  StepStats stats;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<FieldState> snapshots;
  Termination reason = Termination::t_end;
  double final_rhs_norm = 0.0;
  StepStats stats;

  const FieldState& final_state() const { return snapshots.back(); }
};

/// TR-BDF2 (trapezoid stage followed by a BDF2 stage, gamma = 2 - sqrt 2),
/// with the embedded third-order error estimate filtered through
/// (I - gamma/2 h J)^{-1}, mixed absolute/relative max norm, and modified
/// Newton reusing one banded factorization across steps.
VectorTrajectory integrate_system(const OdeSystem& sys, std::span<const double> u0, const IntegratorOptions& opts);

/// n_steps equal TR-BDF2 steps of size t_end / n_steps without error control.
std::vector<double> integrate_fixed_steps(const OdeSystem& sys, std::span<const double> u0, double t_end,
                                          int n_steps);

/// Adaptive integration of the semidiscrete system from U0 at fixed p.
Trajectory integrate(const FieldState& U0, double p, const IntegratorOptions& opts, const ModelParams& params);

struct NewtonResult {
  FieldState state;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Newton iteration on the steady-state equations at fixed p with the banded
/// Jacobian. Stops when ||F||_inf < tol or after max_iterations.
NewtonResult newton_steady_state(const FieldState& U0, double p, const ModelParams& params, double tol = 1e-12,
                                 int max_iterations = 30);

/// Raised by settle when no steady state was reached; carries the last state.
class SettleTimeout : public std::runtime_error {
 public:
  SettleTimeout(const std::string& what, FieldState last, double residual)
      : std::runtime_error(what), last_state(std::move(last)), last_residual(residual) {}
  FieldState last_state;
  double last_residual;
};

/// Integrates to a steady state and polishes it with Newton at fixed p. The
/// returned state has ||rhs||_inf < 1e-10.
FieldState settle(const FieldState& U0, double p, const IntegratorOptions& opts, const ModelParams& params);

}  // namespace vegbif
