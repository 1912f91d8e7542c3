#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/SparseCore>

#include "vegbif/field.hpp"
#include "vegbif/model.hpp"
#include "vegbif/params.hpp"
#include "vegbif/symmetry.hpp"

namespace vegbif {

struct ContinuationOptions {
  double p_min = 0.0;
  double p_max = 2.0;
  double h_initial = 0.02;
  double h_min = 1e-5;
  double h_max = 0.1;
  double h_grow = 1.3;
  int fast_iterations = 4;  ///< grow the step after convergence in fewer iterations
  int max_points = 3000;
  double tol_residual = 1e-8;
  double tol_step = 1e-8;
  int max_corrector_iterations = 12;
  double event_tol = 1e-8;
  int eigenvalues_kept = 12;
  bool monitor_stability = true;
  bool detect_events = true;
  double min_biomass = -1e-6;  ///< stop when any B drops below this
  double switch_epsilon = 1e-3;  ///< seed offset relative to ||x||
  int max_depth = 2;

  void validate() const;
};

/// Augmented system F(u, p) = 0 for the semidiscrete steady states, with
/// unknown x = (u, p) of size 3(N+1) + 1.
///
/// Arclength, tangents and hyperplanes use the weighted inner product
/// <a, b> = (1/n) sum_i a_i b_i + a_p b_p over the n state components, so the
/// state enters by its root-mean-square and step sizes do not depend on N.
class ContinuationProblem {
 public:
  ContinuationProblem(const GridSpec& grid, const ModelParams& params);

  const GridSpec& grid() const { return grid_; }
  const ModelParams& params() const { return params_; }
  std::size_t state_size() const { return grid_.unknowns(); }
  std::size_t size() const { return grid_.unknowns() + 1; }

  double state_weight() const { return 1.0 / static_cast<double>(state_size()); }
  double dot(std::span<const double> a, std::span<const double> b) const;
  double norm(std::span<const double> a) const;
  /// The row r with r . y = <a, y> for all y.
  std::vector<double> metric_row(std::span<const double> a) const;

  void residual(std::span<const double> x, std::span<double> F) const;
  double residual_norm(std::span<const double> x) const;

  /// [F_x; row^T] as a sparse (n+1) x (n+1) matrix.
  Eigen::SparseMatrix<double> bordered(std::span<const double> x, std::span<const double> row) const;

  std::vector<double> pack(const FieldState& U, double p) const;
  FieldState unpack(std::span<const double> x) const;

 private:
  GridSpec grid_;
  ModelParams params_;
};

struct Measures {
  double mean_B = 0.0;
  double max_B = 0.0;
  double l2_B = 0.0;  ///< sqrt(int B^2 dx / L)
};

Measures measures(const FieldState& U);

struct BranchPoint {
  std::vector<double> x;  ///< (u, p)
  std::vector<double> v;  ///< tangent, unit in the weighted norm
  double p = 0.0;
  Measures m;
  int n_unstable = -1;  ///< -1 when stability was not monitored
  std::vector<std::complex<double>> rightmost;  ///< eigenvalues of F_u, by descending real part
  double tau_fold = 0.0;  ///< p-component of the tangent
  int tau_branch = 0;     ///< sign of det [F_x; r^T], r the metric row of v
  double log_abs_det = 0.0;
  double residual = 0.0;
  int corrector_iterations = 0;
  double arclength = 0.0;
};

enum class EventKind { fold, branch_point, turing_onset };

std::string_view to_string(EventKind k);

struct BifurcationEvent {
  EventKind kind = EventKind::fold;
  double p = 0.0;
  std::vector<double> x;
  std::vector<double> v;
  std::string label;  ///< empty when unmatched
  double p_lo = 0.0, p_hi = 0.0;  ///< detection interval
  /// Tangent p-component for folds; the real eigenvalue of F_u nearest zero
  /// for branch points and Turing points.
  double test_value = 0.0;
  int n_unstable_before = -1, n_unstable_after = -1;
  ProfileShape shape = ProfileShape::other;
  int branch = -1;
};

struct Branch {
  std::string provenance;
  int depth = 0;
  std::vector<BranchPoint> points;
  std::vector<BifurcationEvent> events;
  std::string termination;
  std::vector<std::string> diagnostics;
  bool closed_loop = false;
  int conjugate_of = -1;  ///< index of the branch this one reflects, if any
};

struct CorrectorResult {
  std::vector<double> x;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Newton on (F(x), <x - x_pred, v>) = 0. Converged when ||F||_inf <
/// tol_residual and the last update is below tol_step; the update test is
/// waived once ||F||_inf < 1e-11, where it only measures round-off near a
/// singular augmented matrix.
CorrectorResult corrector(const ContinuationProblem& prob, std::span<const double> x_pred,
                          std::span<const double> v, const ContinuationOptions& opts);

/// Unit null vector of F_x, from [F_x; r^T] t = e_{n+1} with r the metric row
/// of v_prev, oriented so that <t, v_prev> > 0. Throws SingularPointError when the system is singular.
std::vector<double> tangent(const ContinuationProblem& prob, std::span<const double> x,
                            std::span<const double> v_prev);

/// Fills tangent, measures, stability and test functions for a converged x.
BranchPoint make_branch_point(const ContinuationProblem& prob, std::vector<double> x,
                              std::span<const double> v_prev, const ContinuationOptions& opts);

/// Converged point on the homogeneous branch of u0 at p. The tangent is
/// oriented towards decreasing p.
BranchPoint homogeneous_seed(const ContinuationProblem& prob, const HomogeneousState& u0, double p,
                             const ContinuationOptions& opts);

/// Follows the branch through seed in the direction of direction * seed.v.
Branch continue_branch(const ContinuationProblem& prob, const BranchPoint& seed, int direction,
                       const ContinuationOptions& opts);

/// Refines a fold (tau_fold crossing) or branch point (tau_branch crossing)
/// between consecutive points a and b by regula falsi on arclength.
BifurcationEvent detect_and_refine(const ContinuationProblem& prob, const BranchPoint& a, const BranchPoint& b,
                                   EventKind kind, const ContinuationOptions& opts);

/// Eigenpair of F_u with the eigenvalue nearest zero, by inverse iteration;
/// phi has unit 2-norm and its largest component positive.
struct CriticalMode {
  std::vector<double> phi;
  double eigenvalue = 0.0;
};
CriticalMode critical_mode(const ContinuationProblem& prob, std::span<const double> x);

/// phi of critical_mode: the null vector of F_u at a singular point.
std::vector<double> critical_direction(const ContinuationProblem& prob, std::span<const double> x);

struct SwitchResult {
  std::optional<BranchPoint> plus, minus;
  std::vector<std::string> diagnostics;
};

/// Seeds x +- eps (phi, 0), phi the critical direction made orthogonal to the
/// event tangent, each corrector-converged on the hyperplane through the seed
/// and oriented away from the event. Throws SingularPointError when both fail.
SwitchResult switch_branch(const ContinuationProblem& prob, const BifurcationEvent& event,
                           const ContinuationOptions& opts);

struct Diagram {
  GridSpec grid;
  ModelParams params;
  std::vector<Branch> branches;
  std::vector<BifurcationEvent> events;  ///< all refined events, sorted by descending p
  std::vector<std::string> diagnostics;
  bool complete = true;  ///< false when some branch or switch failed
};

/// Bare-soil branch, vegetated branch from p_max downwards, switching at the
/// Turing points (depth 1) and at branch points of non-flat states on depth-1
/// branches (depth 2). Seeds lying on an already computed branch are skipped.
Diagram full_diagram(const ModelParams& params, int N, const ContinuationOptions& opts);

/// Assigns LP1, TB1, TB2, PF1, PF2, LP2, LP3, LP4, LP5 from event kind, shape
/// and parameter ordering.
void label_events(Diagram& d);

/// Reference values of the labeled events.
struct ReferenceEvent {
  std::string_view label;
  double p;
  double tolerance;
};
std::span<const ReferenceEvent> reference_events();

/// Steady states of the diagram at parameter p: on every branch, each crossing
/// of p contributes the nearer bracketing point.
struct StateAtP {
  int branch = -1;
  double p = 0.0;
  int n_unstable = -1;
  std::string kind;  ///< bare, homogeneous or a profile shape
  FieldState U;
};
std::vector<StateAtP> states_at(const Diagram& d, double p);

/// kind of a state: "bare" when max B < 1e-8, "homogeneous" when flat,
/// otherwise the profile shape.
std::string state_kind(const FieldState& U);

}  // namespace vegbif
