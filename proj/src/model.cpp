#include "vegbif/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vegbif/error.hpp"

namespace vegbif {

namespace {

void require_finite(const Triple& u, double p) {
  if (!std::isfinite(u[0]) || !std::isfinite(u[1]) || !std::isfinite(u[2]) || !std::isfinite(p)) {
    throw InvalidArgument("reaction: non-finite state or precipitation");
  }
}

HomogeneousState vegetated_state(double B, double p, const ModelParams& m, BranchTag tag) {
  HomogeneousState s;
  s.B = B;
  s.W = p / (m.r * B * B + m.l);
  s.T = (m.c * B * s.W - m.d) / m.s;
  s.tag = tag;
  return s;
}

}  // namespace

Triple reaction(const Triple& u, double p, const ModelParams& m) {
  require_finite(u, p);
  const double B = u[0], W = u[1], T = u[2];
  const double loss = m.d + m.s * T;
  return {m.c * B * B * W - loss * B,
          p - m.r * B * B * W - m.l * W,
          m.q * loss * B - (m.k + m.w * p) * T};
}

Mat3 reaction_jacobian(const Triple& u, double p, const ModelParams& m) {
  require_finite(u, p);
  const double B = u[0], W = u[1], T = u[2];
  const double loss = m.d + m.s * T;
  Mat3 J{};
  J[0] = {2.0 * m.c * B * W - loss, m.c * B * B, -m.s * B};
  J[1] = {-2.0 * m.r * B * W, -m.r * B * B - m.l, 0.0};
  J[2] = {m.q * loss, 0.0, m.q * m.s * B - (m.k + m.w * p)};
  return J;
}

Triple reaction_dp(const Triple& u, const ModelParams& m) { return {0.0, 1.0, -m.w * u[2]}; }

QuadraticCoeffs quadratic_coeffs(double p, const ModelParams& m) {
  if (!std::isfinite(p)) throw InvalidArgument("quadratic_coeffs: non-finite precipitation");
  const double decay = m.k + m.w * p;
  QuadraticCoeffs q;
  q.a2 = m.s * m.q * m.c * p + m.d * m.r * decay;
  q.a1 = -decay * m.c * p;
  q.a0 = decay * m.d * m.l;
  q.discriminant = q.a1 * q.a1 - 4.0 * q.a0 * q.a2;
  return q;
}

std::string_view to_string(BranchTag tag) {
  switch (tag) {
    case BranchTag::bare_soil: return "bare_soil";
    case BranchTag::upper: return "upper";
    case BranchTag::lower: return "lower";
  }
  return "unknown";
}

std::vector<HomogeneousState> homogeneous_equilibria(double p, const ModelParams& m,
                                                     std::vector<std::string>* diagnostics) {
  if (!std::isfinite(p) || p < 0.0) throw InvalidArgument("homogeneous_equilibria: p must be finite and >= 0");

  std::vector<HomogeneousState> out;
  out.push_back({0.0, p / m.l, 0.0, BranchTag::bare_soil});

  const QuadraticCoeffs q = quadratic_coeffs(p, m);
  const double scale = q.a1 * q.a1;
  std::vector<std::pair<double, BranchTag>> roots;
  if (scale > 0.0 && std::abs(q.discriminant) <= 1e-10 * scale) {
    roots.emplace_back(-q.a1 / (2.0 * q.a2), BranchTag::upper);
  } else if (q.discriminant > 0.0) {
    // Cancellation-free pair: the larger-magnitude root first, the other from
    // the product of roots a0/a2.
    const double sq = std::sqrt(q.discriminant);
    const double big = -0.5 * (q.a1 + std::copysign(sq, q.a1));
    double r1 = big / q.a2;
    double r2 = q.a0 / big;
    if (r1 < r2) std::swap(r1, r2);
    roots.emplace_back(r1, BranchTag::upper);
    roots.emplace_back(r2, BranchTag::lower);
  }

  for (const auto& [B, tag] : roots) {
    if (B < 0.0 || !std::isfinite(B)) {
      if (diagnostics != nullptr) {
        std::ostringstream os;
        os << "dropped non-physical " << to_string(tag) << " root B=" << B << " at p=" << p;
        diagnostics->push_back(os.str());
      }
      continue;
    }
    out.push_back(vegetated_state(B, p, m, tag));
  }
  return out;
}

HomogeneousState upper_equilibrium(double p, const ModelParams& m) {
  const auto states = homogeneous_equilibria(p, m);
  for (const auto& s : states) {
    if (s.tag == BranchTag::upper) return s;
  }
  return states.front();
}

double fold_precipitation(const ModelParams& m) {
  auto disc = [&](double p) { return quadratic_coeffs(p, m).discriminant; };
  double lo = 0.0;
  double hi = 0.0;
  bool found = false;
  // The discriminant is negative at p = 0; march until it changes sign.
  for (double p = 1e-3; p <= 1e3; p *= 1.01) {
    if (disc(p) > 0.0) {
      hi = p;
      found = true;
      break;
    }
    lo = p;
  }
  if (!found) throw InvalidArgument("fold_precipitation: discriminant never becomes positive");
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (disc(mid) > 0.0 ? hi : lo) = mid;
  }
  return hi;
}

double reaction_residual(const Triple& u, double p, const ModelParams& m) {
  const Triple r = reaction(u, p, m);
  return std::max({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])});
}

}  // namespace vegbif
