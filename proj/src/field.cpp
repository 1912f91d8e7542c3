#include "vegbif/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vegbif/error.hpp"

namespace vegbif {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw InvalidArgument("field CSV: cannot parse number '" + s + "'");
  }
  if (pos != s.size()) throw InvalidArgument("field CSV: trailing characters in '" + s + "'");
  return v;
}

}  // namespace

GridSpec::GridSpec(double length, int intervals) : L(length), N(intervals) {
  if (!(std::isfinite(L) && L > 0.0)) throw InvalidArgument("grid length must be finite and positive");
  if (N < 8) throw InvalidArgument("grid needs at least 8 intervals");
}

FieldState::FieldState(const GridSpec& g)
    : grid(g), B(g.nodes(), 0.0), W(g.nodes(), 0.0), T(g.nodes(), 0.0) {}

FieldState FieldState::uniform(const GridSpec& g, const Triple& u) {
  FieldState U(g);
  std::fill(U.B.begin(), U.B.end(), u[0]);
  std::fill(U.W.begin(), U.W.end(), u[1]);
  std::fill(U.T.begin(), U.T.end(), u[2]);
  return U;
}

FieldState FieldState::from_vector(const GridSpec& g, std::span<const double> u) {
  if (u.size() < g.unknowns()) throw InvalidArgument("from_vector: vector shorter than 3(N+1)");
  FieldState U(g);
  for (int i = 0; i < g.nodes(); ++i) {
    U.B[i] = u[3 * i];
    U.W[i] = u[3 * i + 1];
    U.T[i] = u[3 * i + 2];
  }
  return U;
}

std::vector<double> FieldState::to_vector() const {
  std::vector<double> u(grid.unknowns());
  to_vector(u);
  return u;
}

void FieldState::to_vector(std::span<double> u) const {
  for (int i = 0; i < grid.nodes(); ++i) {
    u[3 * i] = B[i];
    u[3 * i + 1] = W[i];
    u[3 * i + 2] = T[i];
  }
}

void FieldState::check_consistent() const {
  const auto n = static_cast<std::size_t>(grid.nodes());
  if (B.size() != n || W.size() != n || T.size() != n) {
    throw InvalidArgument("field arrays do not match the grid node count");
  }
}

bool FieldState::all_finite() const {
  auto fin = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return fin(B) && fin(W) && fin(T);
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double trapezoid_mean(const GridSpec& g, std::span<const double> v) {
  double acc = 0.5 * (v.front() + v.back());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) acc += v[i];
  return acc * g.h() / g.L;
}

std::string field_to_csv(const FieldState& U) {
  U.check_consistent();
  std::ostringstream os;
  os << "# L=" << fmt17(U.grid.L) << " N=" << U.grid.N << "\n";
  os << "x,B,W,T\n";
  for (int i = 0; i < U.grid.nodes(); ++i) {
    os << fmt17(U.grid.x(i)) << ',' << fmt17(U.B[i]) << ',' << fmt17(U.W[i]) << ',' << fmt17(U.T[i]) << '\n';
  }
  return os.str();
}

FieldState field_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<double> xs, B, W, T;
  double L = -1.0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# L=", 0) == 0) {
        std::istringstream ls(line.substr(4));
        std::string tok;
        ls >> tok;
        L = parse_double(tok);
      }
      continue;
    }
    if (!header_seen) {
      if (line != "x,B,W,T") throw InvalidArgument("field CSV: expected header x,B,W,T");
      header_seen = true;
      continue;
    }
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(parse_double(cell));
    if (row.size() != 4) throw InvalidArgument("field CSV: expected 4 columns");
    xs.push_back(row[0]);
    B.push_back(row[1]);
    W.push_back(row[2]);
    T.push_back(row[3]);
  }
  if (xs.size() < 9) throw InvalidArgument("field CSV: need at least 9 nodes");
  if (L < 0.0) L = xs.back();
  FieldState U(GridSpec(L, static_cast<int>(xs.size()) - 1));
  U.B = std::move(B);
  U.W = std::move(W);
  U.T = std::move(T);
  return U;
}

nlohmann::json field_to_json(const FieldState& U) {
  U.check_consistent();
  nlohmann::json j;
  j["L"] = U.grid.L;
  j["N"] = U.grid.N;
  j["B"] = U.B;
  j["W"] = U.W;
  j["T"] = U.T;
  return j;
}

FieldState field_from_json(const nlohmann::json& j) {
  try {
    FieldState U(GridSpec(j.at("L").get<double>(), j.at("N").get<int>()));
    U.B = j.at("B").get<std::vector<double>>();
    U.W = j.at("W").get<std::vector<double>>();
    U.T = j.at("T").get<std::vector<double>>();
    U.check_consistent();
    return U;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("field JSON: ") + e.what());
  }
}

FieldState load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open field file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    return field_from_json(nlohmann::json::parse(ss.str()));
  }
  return field_from_csv(ss.str());
}

void save_field_csv(const FieldState& U, const std::string& path, const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << field_to_csv(U);
}

}  // namespace vegbif
