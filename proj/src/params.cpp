#include "vegbif/params.hpp"

#include <cmath>
#include <fstream>

#include "vegbif/error.hpp"

namespace vegbif {

namespace {

struct Field {
  const char* key;
  double ModelParams::*member;
};

constexpr Field kFields[] = {
    {"c", &ModelParams::c},     {"d", &ModelParams::d},     {"k", &ModelParams::k},
    {"l", &ModelParams::l},     {"q", &ModelParams::q},     {"r", &ModelParams::r},
    {"s", &ModelParams::s},     {"w", &ModelParams::w},     {"D_B", &ModelParams::D_B},
    {"D_W", &ModelParams::D_W}, {"L", &ModelParams::L},
};

}  // namespace

void ModelParams::validate() const {
  for (const auto& f : kFields) {
    const double v = this->*f.member;
    if (!std::isfinite(v) || v <= 0.0) {
      throw InvalidArgument(std::string("model parameter '") + f.key +
                            "' must be finite and strictly positive");
    }
  }
}

ModelParams ModelParams::high_sensitivity() {
  ModelParams p;
  p.s = 0.2;
  return p;
}

ModelParams params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("parameter document must be a JSON object");
  ModelParams p;
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::string key = it.key();
    if (key == "D_w") key = "D_W";
    const Field* match = nullptr;
    for (const auto& f : kFields) {
      if (key == f.key) match = &f;
    }
    if (match == nullptr) throw InvalidArgument("unknown parameter key '" + it.key() + "'");
    if (!it.value().is_number()) throw InvalidArgument("parameter '" + it.key() + "' is not a number");
    p.*(match->member) = it.value().get<double>();
  }
  p.validate();
  return p;
}

nlohmann::json params_to_json(const ModelParams& p) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : kFields) j[f.key] = p.*f.member;
  return j;
}

ModelParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open parameter file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("malformed parameter file " + path + ": " + e.what());
  }
  return params_from_json(j);
}

}  // namespace vegbif
