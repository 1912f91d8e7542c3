#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vegbif/model.hpp"

namespace vegbif {

/// Uniform grid on [0, L] with N intervals and N + 1 nodes x_i = i h.
struct GridSpec {
  double L = 8.0;
  int N = 40;

  GridSpec() = default;
  GridSpec(double length, int intervals);  ///< throws InvalidArgument if N < 8 or L <= 0

  double h() const { return L / N; }
  int nodes() const { return N + 1; }
  double x(int i) const { return i * h(); }
  /// Unknowns in the semidiscrete system: 3 (N + 1).
  std::size_t unknowns() const { return 3 * static_cast<std::size_t>(N + 1); }

  bool operator==(const GridSpec&) const = default;
};

/// Nodal profiles of biomass, water and toxin on a grid.
struct FieldState {
  GridSpec grid;
  std::vector<double> B, W, T;

  FieldState() = default;
  explicit FieldState(const GridSpec& g);

  /// Every node set to the same triple.
  static FieldState uniform(const GridSpec& g, const Triple& u);

  /// Node-major packing (B0, W0, T0, B1, W1, T1, ...).
  static FieldState from_vector(const GridSpec& g, std::span<const double> u);
  std::vector<double> to_vector() const;
  void to_vector(std::span<double> out) const;

  Triple at(int i) const { return {B[i], W[i], T[i]}; }

  /// Throws InvalidArgument when array lengths disagree with the grid.
  void check_consistent() const;
  bool all_finite() const;

  bool operator==(const FieldState&) const = default;
};

double max_abs(std::span<const double> v);

/// Trapezoid-rule mean over [0, L] of one nodal profile.
double trapezoid_mean(const GridSpec& g, std::span<const double> v);

// Serialization. Values are printed with 17 significant digits so both
// formats round-trip bit-exactly.
std::string field_to_csv(const FieldState& U);
FieldState field_from_csv(const std::string& text);
nlohmann::json field_to_json(const FieldState& U);
FieldState field_from_json(const nlohmann::json& j);

FieldState load_field(const std::string& path);  ///< .json or CSV by extension
void save_field_csv(const FieldState& U, const std::string& path, const std::string& header_comment = {});

}  // namespace vegbif
