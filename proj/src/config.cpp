#include "uavfarm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace uavfarm {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename Int>
Int parse_integer(std::string_view text) {
  text = trim(text);
  Int value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "off" || text == "no") return false;
  throw std::invalid_argument("not a boolean: '" + std::string(text) + "'");
}

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view text, Parse parse) {
  std::vector<T> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(parse(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

// Field factories. `Section` is a RunConfig member, `Member` a field of it.
template <typename Section, typename T>
ConfigField make_field(std::string key, Section RunConfig::*section, T Section::*member) {
  ConfigField f;
  f.key = std::move(key);
  f.get = [section, member](const RunConfig& c) -> std::string {
    const T& v = c.*section.*member;
    if constexpr (std::is_same_v<T, bool>) {
      return v ? "true" : "false";
    } else if constexpr (std::is_floating_point_v<T>) {
      return format_double(v);
    } else if constexpr (std::is_integral_v<T>) {
      return std::to_string(v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else {
      return join(v);
    }
  };
  f.set = [section, member](RunConfig& c, std::string_view text) {
    T& v = c.*section.*member;
    if constexpr (std::is_same_v<T, bool>) {
      v = parse_bool(text);
    } else if constexpr (std::is_floating_point_v<T>) {
      v = parse_double(text);
    } else if constexpr (std::is_integral_v<T>) {
      v = parse_integer<T>(text);
    } else if constexpr (std::is_same_v<T, std::string>) {
      v = std::string(trim(text));
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      v = parse_list<double>(text, [](std::string_view s) { return parse_double(s); });
    } else {
      v = parse_list<int>(text, [](std::string_view s) { return parse_integer<int>(s); });
    }
  };
  return f;
}

std::vector<ConfigField> build_fields() {
  std::vector<ConfigField> f;
  using C = RunConfig;
  const auto w = &C::world;
  f.push_back(make_field("world.x_min", w, &WorldParams::x_min));
  f.push_back(make_field("world.x_max", w, &WorldParams::x_max));
  f.push_back(make_field("world.y_min", w, &WorldParams::y_min));
  f.push_back(make_field("world.y_max", w, &WorldParams::y_max));
  f.push_back(make_field("world.h_c", w, &WorldParams::h_c));
  f.push_back(make_field("world.h_m", w, &WorldParams::h_m));
  f.push_back(make_field("world.h_d", w, &WorldParams::h_d));
  f.push_back(make_field("world.v_x_max", w, &WorldParams::v_x_max));
  f.push_back(make_field("world.v_y_max", w, &WorldParams::v_y_max));
  f.push_back(make_field("world.n_ws", w, &WorldParams::n_ws));
  f.push_back(make_field("world.ws_types", w, &WorldParams::ws_types));
  f.push_back(make_field("world.ws_cycles", w, &WorldParams::ws_cycles));
  f.push_back(make_field("world.ws_min_spacing", w, &WorldParams::ws_min_spacing));
  f.push_back(make_field("world.n_px", w, &WorldParams::n_px));
  f.push_back(make_field("world.n_py", w, &WorldParams::n_py));
  f.push_back(make_field("world.n_gx", w, &WorldParams::n_gx));
  f.push_back(make_field("world.n_gy", w, &WorldParams::n_gy));
  f.push_back(make_field("world.aoi_max", w, &WorldParams::aoi_max));
  f.push_back(make_field("world.vdf_max", w, &WorldParams::vdf_max));
  f.push_back(make_field("world.t_step", w, &WorldParams::t_step));
  f.push_back(make_field("world.t_v", w, &WorldParams::t_v));
  f.push_back(make_field("world.d_th", w, &WorldParams::d_th));
  f.push_back(make_field("world.q_th", w, &WorldParams::q_th));
  f.push_back(make_field("world.initial_freshness", w, &WorldParams::initial_freshness));

  const auto e = &C::energy;
  f.push_back(make_field("energy.m_uav", e, &PhysicalConstants::m_uav));
  f.push_back(make_field("energy.g", e, &PhysicalConstants::g));
  f.push_back(make_field("energy.rho_air", e, &PhysicalConstants::rho_air));
  f.push_back(make_field("energy.v_th", e, &PhysicalConstants::v_th));
  f.push_back(make_field("energy.c_d", e, &PhysicalConstants::c_d));
  f.push_back(make_field("energy.n_prp", e, &PhysicalConstants::n_prp));
  f.push_back(make_field("energy.r_prp", e, &PhysicalConstants::r_prp));
  f.push_back(make_field("energy.eta", e, &PhysicalConstants::eta));
  f.push_back(make_field("energy.a_surf", e, &PhysicalConstants::a_surf));
  f.push_back(make_field("energy.p_static", e, &PhysicalConstants::p_static));
  f.push_back(make_field("energy.voltage", e, &PhysicalConstants::voltage));
  f.push_back(make_field("energy.f_clock", e, &PhysicalConstants::f_clock));
  f.push_back(make_field("energy.alpha_act", e, &PhysicalConstants::alpha_act));
  f.push_back(make_field("energy.c_load", e, &PhysicalConstants::c_load));
  f.push_back(make_field("energy.p_ut_dbm", e, &PhysicalConstants::p_ut_dbm));
  f.push_back(make_field("energy.p_ur_dbm", e, &PhysicalConstants::p_ur_dbm));
  f.push_back(make_field("energy.p_cam", e, &PhysicalConstants::p_cam));
  f.push_back(make_field("energy.p_ec_dbm", e, &PhysicalConstants::p_ec_dbm));

  const auto l = &C::link;
  f.push_back(make_field("link.f_c_ghz", l, &LinkParams::f_c_ghz));
  f.push_back(make_field("link.bandwidth_hz", l, &LinkParams::bandwidth_hz));
  f.push_back(make_field("link.t_kelvin", l, &LinkParams::t_kelvin));
  f.push_back(make_field("link.k_boltzmann", l, &LinkParams::k_boltzmann));
  f.push_back(make_field("link.packet_bytes", l, &LinkParams::packet_bytes));
  f.push_back(make_field("link.p_wt_dbm", l, &LinkParams::p_wt_dbm));
  f.push_back(make_field("link.g_ws_dbi", l, &LinkParams::g_ws_dbi));
  f.push_back(make_field("link.a1", l, &LinkParams::a1));
  f.push_back(make_field("link.a2", l, &LinkParams::a2));
  f.push_back(make_field("link.a3", l, &LinkParams::a3));
  f.push_back(make_field("link.collect_radius", l, &LinkParams::collect_radius));

  const auto s = &C::service;
  f.push_back(make_field("service.eps1", s, &ServiceWeights::eps1));
  f.push_back(make_field("service.eps2", s, &ServiceWeights::eps2));
  f.push_back(make_field("service.eps3", s, &ServiceWeights::eps3));

  const auto r = &C::reward;
  f.push_back(make_field("reward.alpha1", r, &RewardWeights::alpha1));
  f.push_back(make_field("reward.alpha2", r, &RewardWeights::alpha2));
  f.push_back(make_field("reward.alpha3", r, &RewardWeights::alpha3));
  f.push_back(make_field("reward.alpha4", r, &RewardWeights::alpha4));
  f.push_back(make_field("reward.alpha5", r, &RewardWeights::alpha5));
  f.push_back(make_field("reward.alpha6", r, &RewardWeights::alpha6));
  f.push_back(make_field("reward.alpha7", r, &RewardWeights::alpha7));
  f.push_back(make_field("reward.alpha8", r, &RewardWeights::alpha8));
  f.push_back(make_field("reward.alpha9", r, &RewardWeights::alpha9));
  f.push_back(make_field("reward.alpha10", r, &RewardWeights::alpha10));
  f.push_back(make_field("reward.comm_reward_reduce", r, &RewardWeights::comm_reward_reduce));

  const auto fl = &C::fleet;
  f.push_back(make_field("fleet.n_c", fl, &FleetParams::n_c));
  f.push_back(make_field("fleet.n_m", fl, &FleetParams::n_m));
  f.push_back(make_field("fleet.n_d", fl, &FleetParams::n_d));
  f.push_back(make_field("fleet.obs_nearest_ws", fl, &FleetParams::obs_nearest_ws));

  const auto t = &C::train;
  f.push_back(make_field("train.gamma", t, &TrainParams::gamma));
  f.push_back(make_field("train.xi", t, &TrainParams::xi));
  f.push_back(make_field("train.lr_actor", t, &TrainParams::lr_actor));
  f.push_back(make_field("train.lr_critic", t, &TrainParams::lr_critic));
  f.push_back(make_field("train.buffer_size", t, &TrainParams::buffer_size));
  f.push_back(make_field("train.batch_size", t, &TrainParams::batch_size));
  f.push_back(make_field("train.episodes", t, &TrainParams::episodes));
  f.push_back(make_field("train.steps", t, &TrainParams::steps));
  f.push_back(make_field("train.theta0", t, &TrainParams::theta0));
  f.push_back(make_field("train.delta0", t, &TrainParams::delta0));
  f.push_back(make_field("train.tau", t, &TrainParams::tau));
  f.push_back(make_field("train.epsilon", t, &TrainParams::epsilon));
  f.push_back(make_field("train.k_s", t, &TrainParams::k_s));
  f.push_back(make_field("train.beta1", t, &TrainParams::beta1));
  f.push_back(make_field("train.beta2", t, &TrainParams::beta2));
  f.push_back(make_field("train.eia", t, &TrainParams::eia));
  f.push_back(make_field("train.sec", t, &TrainParams::sec));
  f.push_back(make_field("train.sec_mixed_target", t, &TrainParams::sec_mixed_target));
  f.push_back(make_field("train.sec_mixed_actor", t, &TrainParams::sec_mixed_actor));
  f.push_back(make_field("train.hidden", t, &TrainParams::hidden));
  f.push_back(make_field("train.noise_start", t, &TrainParams::noise_start));
  f.push_back(make_field("train.noise_end", t, &TrainParams::noise_end));
  f.push_back(make_field("train.noise_decay_fraction", t, &TrainParams::noise_decay_fraction));
  f.push_back(make_field("train.adam_beta1", t, &TrainParams::adam_beta1));
  f.push_back(make_field("train.adam_beta2", t, &TrainParams::adam_beta2));
  f.push_back(make_field("train.adam_eps", t, &TrainParams::adam_eps));

  const auto rn = &C::run;
  f.push_back(make_field("run.seed", rn, &RunParams::seed));
  f.push_back(make_field("run.scenario_pool", rn, &RunParams::scenario_pool));
  f.push_back(make_field("run.out", rn, &RunParams::out));
  return f;
}

void require(bool ok, const char* key, const std::string& what) {
  if (!ok) throw ConfigError(std::string(key) + ": " + what);
}

bool divides(double step, double period) {
  const double ratio = period / step;
  return std::abs(ratio - std::round(ratio)) < 1e-9 && std::round(ratio) >= 1.0;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = build_fields();
  return fields;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  for (const auto& field : config_fields()) {
    if (field.key == key) {
      try {
        field.set(config, value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
      } catch (const std::out_of_range&) {
        throw ConfigError(std::string(key) + ": value out of range");
      }
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  set_config_value(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(base, view.substr(0, eq), view.substr(eq + 1));
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, std::move(base));
}

void write_config(std::ostream& out, const RunConfig& config) {
  for (const auto& field : config_fields()) {
    out << field.key << " = " << field.get(config) << '\n';
  }
}

std::string config_to_string(const RunConfig& config) {
  std::ostringstream out;
  write_config(out, config);
  return out.str();
}

void RunConfig::validate() const {
  const auto& w = world;
  require(w.x_min < w.x_max, "world.x_max", "must exceed world.x_min");
  require(w.y_min < w.y_max, "world.y_max", "must exceed world.y_min");
  require(w.h_c > 0 && w.h_m > 0 && w.h_d > 0, "world.h_*", "altitudes must be positive");
  require(w.v_x_max > 0 && w.v_y_max > 0, "world.v_*_max", "speed limits must be positive");
  require(w.n_ws >= 1, "world.n_ws", "need at least one sensor");
  require(w.ws_types >= 1, "world.ws_types", "need at least one sensor type");
  require(static_cast<int>(w.ws_cycles.size()) == w.ws_types, "world.ws_cycles",
          "needs exactly world.ws_types entries");
  for (double c : w.ws_cycles) {
    require(c > 0 && divides(w.t_step, c), "world.ws_cycles", "cycles must be positive multiples of t_step");
  }
  require(w.ws_min_spacing >= 0, "world.ws_min_spacing", "must be non-negative");
  require(w.n_px >= 1 && w.n_py >= 1, "world.n_px", "plot counts must be >= 1");
  require(w.n_gx >= 1 && w.n_gy >= 1, "world.n_gx", "grid counts must be >= 1");
  require(w.aoi_max >= 1, "world.aoi_max", "must be >= 1");
  require(w.vdf_max >= 1, "world.vdf_max", "must be >= 1");
  require(w.t_step > 0, "world.t_step", "must be positive");
  require(divides(w.t_step, w.t_v), "world.t_v", "must be a positive multiple of t_step");
  require(w.d_th > 0, "world.d_th", "must be positive");
  require(w.q_th >= 0 && w.q_th <= 1, "world.q_th", "must lie in [0, 1]");
  require(w.initial_freshness == "random" || w.initial_freshness == "zero" || w.initial_freshness == "max",
          "world.initial_freshness", "must be random, zero or max");

  const auto& e = energy;
  require(e.m_uav > 0 && e.g > 0 && e.rho_air > 0 && e.v_th > 0 && e.c_d > 0, "energy.*",
          "physical constants must be positive");
  require(e.n_prp > 0 && e.r_prp > 0 && e.a_surf > 0, "energy.n_prp", "rotor geometry must be positive");
  require(e.eta > 0 && e.eta <= 1, "energy.eta", "must lie in (0, 1]");
  require(e.alpha_act >= 0 && e.alpha_act <= 1, "energy.alpha_act", "must lie in [0, 1]");
  require(e.p_static >= 0 && e.voltage > 0 && e.f_clock > 0 && e.c_load > 0 && e.p_cam >= 0, "energy.*",
          "compute/camera constants must be positive");

  require(link.f_c_ghz > 0, "link.f_c_ghz", "must be positive");
  require(link.bandwidth_hz > 0, "link.bandwidth_hz", "must be positive");
  require(link.t_kelvin > 0, "link.t_kelvin", "must be positive");
  require(link.k_boltzmann > 0, "link.k_boltzmann", "must be positive");
  require(link.packet_bytes > 0, "link.packet_bytes", "must be positive");
  require(link.collect_radius > 0, "link.collect_radius", "must be positive");

  require(fleet.n_c >= 0 && fleet.n_m >= 0 && fleet.n_d >= 0, "fleet.n_*", "must be non-negative");
  require(fleet.total() >= 1, "fleet.n_*", "fleet must contain at least one UAV");
  require(fleet.obs_nearest_ws >= 1, "fleet.obs_nearest_ws", "must be >= 1");

  const auto& t = train;
  require(t.gamma >= 0 && t.gamma <= 1, "train.gamma", "must lie in [0, 1]");
  require(t.xi >= 0 && t.xi <= 1, "train.xi", "must lie in [0, 1]");
  require(t.lr_actor > 0 && t.lr_critic > 0, "train.lr_*", "learning rates must be positive");
  require(t.buffer_size >= 1, "train.buffer_size", "must be >= 1");
  require(t.batch_size >= 1, "train.batch_size", "must be >= 1");
  require(t.episodes >= 0, "train.episodes", "must be >= 0");
  require(t.steps >= 1, "train.steps", "must be >= 1");
  require(t.theta0 > 0 && t.theta0 <= 1, "train.theta0", "must lie in (0, 1]");
  require(t.delta0 >= 1, "train.delta0", "must be >= 1");
  require(t.k_s >= 1, "train.k_s", "must be >= 1");
  require(t.tau >= 0 && t.tau <= 1, "train.tau", "tau * k / k_s must stay <= 1");
  require(t.epsilon >= 0 && t.epsilon <= 1, "train.epsilon", "must lie in [0, 1]");
  require(!t.hidden.empty(), "train.hidden", "need at least one hidden layer");
  for (int h : t.hidden) require(h >= 1, "train.hidden", "layer widths must be >= 1");
  require(t.noise_start >= 0 && t.noise_end >= 0, "train.noise_*", "must be non-negative");
  require(t.noise_decay_fraction > 0 && t.noise_decay_fraction <= 1, "train.noise_decay_fraction",
          "must lie in (0, 1]");

  require(run.scenario_pool >= 1, "run.scenario_pool", "must be >= 1");
}

}  // namespace uavfarm
