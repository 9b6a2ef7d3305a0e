#include "uavfarm/world.hpp"

#include <type_traits>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "uavfarm/rng.hpp"

namespace uavfarm {

namespace {

constexpr const char* kScenarioMagic = "uavfarm-scenario";
constexpr int kScenarioVersion = 1;
constexpr int kPlacementAttempts = 20000;

void expect_token(std::istream& in, const std::string& token) {
  std::string got;
  if (!(in >> got) || got != token) {
    throw ScenarioError("scenario file: expected '" + token + "', got '" + got + "'");
  }
}

double read_double(std::istream& in) {
  std::string s;
  if (!(in >> s)) throw ScenarioError("scenario file: truncated");
  try {
    return parse_double(s);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("scenario file: ") + e.what());
  }
}

template <typename Int>
Int read_int(std::istream& in) {
  if constexpr (std::is_unsigned_v<Int>) {
    unsigned long long v = 0;
    if (!(in >> v)) throw ScenarioError("scenario file: truncated");
    return static_cast<Int>(v);
  } else {
    long long v = 0;
    if (!(in >> v)) throw ScenarioError("scenario file: truncated");
    return static_cast<Int>(v);
  }
}

}  // namespace

char role_tag(Role role) {
  switch (role) {
    case Role::communication: return 'c';
    case Role::monitoring: return 'm';
    case Role::collection: return 'd';
  }
  return '?';
}

const char* role_name(Role role) {
  switch (role) {
    case Role::communication: return "communication";
    case Role::monitoring: return "monitoring";
    case Role::collection: return "collection";
  }
  return "unknown";
}

double Scenario::diagonal() const { return std::hypot(width(), height()); }

double Scenario::altitude(Role role) const {
  switch (role) {
    case Role::communication: return h_c;
    case Role::monitoring: return h_m;
    case Role::collection: return h_d;
  }
  return 0.0;
}

Eigen::Vector2d Scenario::plot_center(int plot) const {
  const int px = plot % n_px;
  const int py = plot / n_px;
  const double pw = width() / n_px;
  const double ph = height() / n_py;
  return {x_min + (px + 0.5) * pw, y_min + (py + 0.5) * ph};
}

Eigen::Vector2d Scenario::grid_center(int plot, int gx, int gy) const {
  const int px = plot % n_px;
  const int py = plot / n_px;
  const double pw = width() / n_px;
  const double ph = height() / n_py;
  return {x_min + px * pw + (gx + 0.5) * pw / n_gx, y_min + py * ph + (gy + 0.5) * ph / n_gy};
}

std::pair<int, int> Scenario::plot_of(const Eigen::Vector2d& p) const {
  const int px = static_cast<int>(std::floor((p.x() - x_min) / width() * n_px));
  const int py = static_cast<int>(std::floor((p.y() - y_min) / height() * n_py));
  return {std::clamp(px, 0, n_px - 1), std::clamp(py, 0, n_py - 1)};
}

bool Scenario::contains(const Eigen::Vector2d& p) const {
  return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
}

void Scenario::validate() const {
  if (!(x_min < x_max) || !(y_min < y_max)) throw ScenarioError("scenario: empty bounds");
  if (n_px < 1 || n_py < 1 || n_gx < 1 || n_gy < 1) throw ScenarioError("scenario: plot/grid counts must be >= 1");
  if (aoi_max < 1 || vdf_max < 1) throw ScenarioError("scenario: freshness caps must be >= 1");
  if (!(t_step > 0) || !is_multiple(t_v, t_step) || t_v <= 0) {
    throw ScenarioError("scenario: t_step must divide t_v");
  }
  if (type_cycles.empty()) throw ScenarioError("scenario: no sensor types");
  for (double c : type_cycles) {
    if (!(c > 0)) throw ScenarioError("scenario: sensor cycles must be positive");
  }
  for (const auto& s : sensors) {
    if (!contains(s.position)) throw ScenarioError("scenario: sensor outside bounds");
    if (s.type < 0 || s.type >= static_cast<int>(type_cycles.size())) {
      throw ScenarioError("scenario: sensor type out of range");
    }
  }
}

bool Scenario::operator==(const Scenario& o) const {
  if (sensors.size() != o.sensors.size()) return false;
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    if (sensors[i].position != o.sensors[i].position || sensors[i].type != o.sensors[i].type) return false;
  }
  return x_min == o.x_min && x_max == o.x_max && y_min == o.y_min && y_max == o.y_max && h_c == o.h_c &&
         h_m == o.h_m && h_d == o.h_d && v_x_max == o.v_x_max && v_y_max == o.v_y_max &&
         type_cycles == o.type_cycles && n_px == o.n_px && n_py == o.n_py && n_gx == o.n_gx &&
         n_gy == o.n_gy && aoi_max == o.aoi_max && vdf_max == o.vdf_max && t_step == o.t_step &&
         t_v == o.t_v && seed == o.seed;
}

Scenario generate_scenario(const RunConfig& config, std::uint64_t seed) {
  const auto& w = config.world;
  if (!(w.x_min < w.x_max) || !(w.y_min < w.y_max)) throw ScenarioError("generate_scenario: empty bounds");
  if (w.n_ws < 1) throw ScenarioError("generate_scenario: n_ws must be >= 1");
  if (w.ws_min_spacing < 0) throw ScenarioError("generate_scenario: negative spacing");
  if (w.ws_types < 1 || static_cast<int>(w.ws_cycles.size()) != w.ws_types) {
    throw ScenarioError("generate_scenario: ws_cycles must list one cycle per type");
  }

  Scenario s;
  s.x_min = w.x_min;
  s.x_max = w.x_max;
  s.y_min = w.y_min;
  s.y_max = w.y_max;
  s.h_c = w.h_c;
  s.h_m = w.h_m;
  s.h_d = w.h_d;
  s.v_x_max = w.v_x_max;
  s.v_y_max = w.v_y_max;
  s.type_cycles = w.ws_cycles;
  s.n_px = w.n_px;
  s.n_py = w.n_py;
  s.n_gx = w.n_gx;
  s.n_gy = w.n_gy;
  s.aoi_max = w.aoi_max;
  s.vdf_max = w.vdf_max;
  s.t_step = w.t_step;
  s.t_v = w.t_v;
  s.seed = seed;

  Rng rng(derive_seed(seed, {0x5ce7a110ULL}));
  std::uniform_real_distribution<double> ux(w.x_min, w.x_max);
  std::uniform_real_distribution<double> uy(w.y_min, w.y_max);
  const double min_sq = w.ws_min_spacing * w.ws_min_spacing;
  s.sensors.reserve(static_cast<std::size_t>(w.n_ws));
  for (int i = 0; i < w.n_ws; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const Eigen::Vector2d p(ux(rng), uy(rng));
      placed = std::all_of(s.sensors.begin(), s.sensors.end(),
                           [&](const Sensor& o) { return (o.position - p).squaredNorm() >= min_sq; });
      if (placed) s.sensors.push_back({p, i % w.ws_types});
    }
    if (!placed) {
      throw ScenarioError("generate_scenario: could not place sensor " + std::to_string(i) + " with spacing " +
                          format_double(w.ws_min_spacing) + " m; spacing infeasible for this area");
    }
  }
  return s;
}

void write_scenario(std::ostream& out, const Scenario& s) {
  const auto d = [](double v) { return format_double(v); };
  out << kScenarioMagic << ' ' << kScenarioVersion << '\n';
  out << "bounds " << d(s.x_min) << ' ' << d(s.x_max) << ' ' << d(s.y_min) << ' ' << d(s.y_max) << '\n';
  out << "altitudes " << d(s.h_c) << ' ' << d(s.h_m) << ' ' << d(s.h_d) << '\n';
  out << "vmax " << d(s.v_x_max) << ' ' << d(s.v_y_max) << '\n';
  out << "plots " << s.n_px << ' ' << s.n_py << '\n';
  out << "grids " << s.n_gx << ' ' << s.n_gy << '\n';
  out << "caps " << s.aoi_max << ' ' << s.vdf_max << '\n';
  out << "timing " << d(s.t_step) << ' ' << d(s.t_v) << '\n';
  out << "seed " << s.seed << '\n';
  out << "cycles " << s.type_cycles.size();
  for (double c : s.type_cycles) out << ' ' << d(c);
  out << '\n';
  out << "sensors " << s.sensors.size() << '\n';
  for (const auto& ws : s.sensors) {
    out << d(ws.position.x()) << ' ' << d(ws.position.y()) << ' ' << ws.type << '\n';
  }
}

Scenario read_scenario(std::istream& in) {
  expect_token(in, kScenarioMagic);
  const int version = read_int<int>(in);
  if (version != kScenarioVersion) {
    throw ScenarioError("scenario file: unsupported version " + std::to_string(version));
  }
  Scenario s;
  expect_token(in, "bounds");
  s.x_min = read_double(in);
  s.x_max = read_double(in);
  s.y_min = read_double(in);
  s.y_max = read_double(in);
  expect_token(in, "altitudes");
  s.h_c = read_double(in);
  s.h_m = read_double(in);
  s.h_d = read_double(in);
  expect_token(in, "vmax");
  s.v_x_max = read_double(in);
  s.v_y_max = read_double(in);
  expect_token(in, "plots");
  s.n_px = read_int<int>(in);
  s.n_py = read_int<int>(in);
  expect_token(in, "grids");
  s.n_gx = read_int<int>(in);
  s.n_gy = read_int<int>(in);
  expect_token(in, "caps");
  s.aoi_max = read_int<int>(in);
  s.vdf_max = read_int<int>(in);
  expect_token(in, "timing");
  s.t_step = read_double(in);
  s.t_v = read_double(in);
  expect_token(in, "seed");
  s.seed = read_int<std::uint64_t>(in);
  expect_token(in, "cycles");
  const auto n_cycles = read_int<std::size_t>(in);
  for (std::size_t i = 0; i < n_cycles; ++i) s.type_cycles.push_back(read_double(in));
  expect_token(in, "sensors");
  const auto n = read_int<std::size_t>(in);
  s.sensors.resize(n);
  for (auto& ws : s.sensors) {
    ws.position.x() = read_double(in);
    ws.position.y() = read_double(in);
    ws.type = read_int<int>(in);
  }
  s.validate();
  return s;
}

void save_scenario(const std::string& path, const Scenario& scenario) {
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot write scenario file '" + path + "'");
  write_scenario(out, scenario);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  return read_scenario(in);
}

UavState step_kinematics(const UavState& state, const Eigen::Vector2d& action, const Scenario& scenario,
                         double dt) {
  if (!std::isfinite(action.x()) || !std::isfinite(action.y())) {
    throw std::domain_error("step_kinematics: non-finite action (diverged policy?)");
  }
  UavState next = state;
  next.velocity = {std::clamp(action.x(), -scenario.v_x_max, scenario.v_x_max),
                   std::clamp(action.y(), -scenario.v_y_max, scenario.v_y_max)};
  const Eigen::Vector2d moved = state.position.head<2>() + next.velocity * dt;
  next.out_of_bounds = !scenario.contains(moved);
  next.position.x() = std::clamp(moved.x(), scenario.x_min, scenario.x_max);
  next.position.y() = std::clamp(moved.y(), scenario.y_min, scenario.y_max);
  return next;
}

bool is_multiple(double t, double period) {
  const double ratio = t / period;
  return std::abs(ratio - std::round(ratio)) < 1e-9;
}

void update_aoi(FreshnessState& freshness, const Scenario& scenario, const std::vector<bool>& collected,
                double t) {
  auto& aoi = freshness.aoi;
  for (std::size_t j = 0; j < aoi.size(); ++j) {
    if (j < collected.size() && collected[j]) {
      aoi[j] = 0;
    } else if (is_multiple(t, scenario.type_cycles[static_cast<std::size_t>(scenario.sensors[j].type)])) {
      aoi[j] = std::min(aoi[j] + 1, scenario.aoi_max);
    }
  }
}

void update_vdf(FreshnessState& freshness, const Scenario& scenario, const std::vector<bool>& captured,
                double t) {
  const bool tick = is_multiple(t, scenario.t_v);
  auto& vdf = freshness.vdf;
  for (std::size_t p = 0; p < vdf.size(); ++p) {
    if (p < captured.size() && captured[p]) {
      vdf[p] = 0;
    } else if (tick) {
      vdf[p] = std::min(vdf[p] + 1, scenario.vdf_max);
    }
  }
}

int grid_quality(const Eigen::Vector2d& grid_center, std::span<const Eigen::Vector3d> monitors, double d_th) {
  if (monitors.empty()) throw std::invalid_argument("grid_quality: no monitoring UAV");
  const Eigen::Vector3d ground(grid_center.x(), grid_center.y(), 0.0);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : monitors) best = std::min(best, (m - ground).squaredNorm());
  return std::sqrt(best) < d_th ? 1 : 0;
}

double plot_quality(int plot, std::span<const Eigen::Vector3d> monitors, const Scenario& scenario, double d_th) {
  if (plot < 0 || plot >= scenario.plot_count()) throw std::out_of_range("plot_quality: bad plot index");
  int good = 0;
  for (int gy = 0; gy < scenario.n_gy; ++gy) {
    for (int gx = 0; gx < scenario.n_gx; ++gx) {
      good += grid_quality(scenario.grid_center(plot, gx, gy), monitors, d_th);
    }
  }
  return static_cast<double>(good) / (scenario.n_gx * scenario.n_gy);
}

int monitoring_success(double plot_quality, double q_th) { return plot_quality >= q_th ? 1 : 0; }

}  // namespace uavfarm
