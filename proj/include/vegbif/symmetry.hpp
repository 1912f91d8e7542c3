#pragma once

#include <string_view>

#include "vegbif/field.hpp"

namespace vegbif {

enum class SymmetryClass { symmetric, asymmetric };
enum class ProfileShape { flat, bell, inverted_bell, skewed_left, skewed_right, other };

std::string_view to_string(SymmetryClass c);
std::string_view to_string(ProfileShape s);

/// Relative defects below this count as reflection-symmetric.
inline constexpr double kSymmetryTolerance = 1e-6;

struct SymmetryReport {
  double defect = 0.0;    ///< ||U - reflect U||_2 / ||U||_2 over B, W and T
  double defect_B = 0.0;  ///< the same for the biomass profile alone
  SymmetryClass classification = SymmetryClass::symmetric;
  ProfileShape shape = ProfileShape::flat;
  /// Biomass-weighted mean of x - L/2; negative when biomass leans left.
  double first_moment = 0.0;
};

/// x -> L - x: every array reversed.
FieldState reflect(const FieldState& U);

/// ||U - reflect U||_2 / ||U||_2 (0 for the zero state).
double symmetry_defect(const FieldState& U);

/// The classification follows the full-state defect; the shape heuristic
/// looks only at B: flat when max - min <= 1e-8 mean, bell or inverted bell
/// when B is symmetric, otherwise skewed by the sign of the first moment.
SymmetryReport classify(const FieldState& U);

enum class OnsetSymmetry { symmetric, half_period };

std::string_view to_string(OnsetSymmetry s);

/// Profile predicted near a Turing onset in mode n >= 1: cos(n pi x / L) is
/// symmetric about L/2 for even n and a skewed half-period for odd n.
OnsetSymmetry near_onset_shape(int n);

}  // namespace vegbif
