#include "vegbif/discretization.hpp"

#include "vegbif/error.hpp"

namespace vegbif {

namespace {

void require_valid(const FieldState& U) {
  U.check_consistent();
  if (!U.all_finite()) throw InvalidArgument("field state contains non-finite values");
}

}  // namespace

FieldState semidiscrete_rhs(const FieldState& U, double p, const ModelParams& params, kernels::Terms terms) {
  require_valid(U);
  const auto u = U.to_vector();
  std::vector<double> du(u.size());
  kernels::rhs(U.grid, u, p, params, du, terms);
  return FieldState::from_vector(U.grid, du);
}

BandMatrix semidiscrete_jacobian(const FieldState& U, double p, const ModelParams& params, kernels::Terms terms) {
  require_valid(U);
  const auto u = U.to_vector();
  BandMatrix J(U.grid.unknowns(), kJacobianBandwidth, kJacobianBandwidth);
  kernels::jacobian(U.grid, u, p, params, J, terms);
  return J;
}

std::vector<double> semidiscrete_dp(const GridSpec& g, std::span<const double> u, const ModelParams& params) {
  std::vector<double> out(g.unknowns());
  for (int i = 0; i < g.nodes(); ++i) {
    out[3 * i] = 0.0;
    out[3 * i + 1] = 1.0;
    out[3 * i + 2] = -params.w * u[3 * i + 2];
  }
  return out;
}

std::vector<double> semidiscrete_dp(const FieldState& U, const ModelParams& params) {
  U.check_consistent();
  return semidiscrete_dp(U.grid, U.to_vector(), params);
}

std::vector<double> trapezoid_weights(const GridSpec& g) {
  std::vector<double> w(g.nodes(), g.h());
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

}  // namespace vegbif
