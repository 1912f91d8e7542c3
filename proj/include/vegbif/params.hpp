#pragma once

#include <string>

#include <json.hpp>

namespace vegbif {

/**
 * Rate and diffusion constants of the biomass-water-toxicity model plus the
 * length of the 1-D domain.
 *
 * Units: c, r in m^4 kg^-2 t^-1; d, k, l in t^-1; s in m^2 kg^-1 t^-1;
 * w in m^2 kg^-1; D_B, D_W in m^2 t^-1; L in m; q dimensionless.
 *
 * The default toxicity sensitivity is s = 0.1; only the product s*q enters
 * the biomass and water dynamics. `high_sensitivity()` is the same set with
 * s = 0.2.
 */
struct ModelParams {
  double c = 0.002;
  double d = 0.01;
  double k = 0.01;
  double l = 0.01;
  double q = 0.05;
  double r = 0.35;
  double s = 0.1;
  double w = 0.001;
  double D_B = 0.01;
  double D_W = 0.8;
  double L = 8.0;

  /// Throws InvalidArgument unless every field is finite and strictly positive.
  void validate() const;

  /// Defaults with s = 0.2.
  static ModelParams high_sensitivity();

  bool operator==(const ModelParams&) const = default;
};

/// Keys: c d k l q r s w D_B D_W L ("D_w" accepted as an alias). Missing keys
/// keep their defaults; unknown keys are rejected.
ModelParams params_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const ModelParams& p);
ModelParams load_params(const std::string& path);

}  // namespace vegbif
