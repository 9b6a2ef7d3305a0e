#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace uavfarm {

/// Raised for malformed, unknown or out-of-range configuration entries.
/// The message always names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WorldParams {
  double x_min = 0.0;
  double x_max = 400.0;
  double y_min = 0.0;
  double y_max = 400.0;
  double h_c = 22.0;  // communication UAV altitude
  double h_m = 20.0;  // monitoring UAV altitude
  double h_d = 18.0;  // collection UAV altitude
  double v_x_max = 10.0;
  double v_y_max = 10.0;
  int n_ws = 400;
  int ws_types = 3;
  std::vector<double> ws_cycles{40.0, 50.0, 60.0};  // seconds, one per type
  double ws_min_spacing = 10.0;
  int n_px = 20;
  int n_py = 20;
  int n_gx = 4;
  int n_gy = 4;
  int aoi_max = 5;
  int vdf_max = 5;
  double t_step = 1.0;
  double t_v = 30.0;
  double d_th = 40.0;
  double q_th = 0.7;
  /// "random" draws initial AoI/VDF uniformly in [0, cap]; "zero" and "max"
  /// start every counter at that end.
  std::string initial_freshness = "random";
};

/// Airframe, compute and radio power constants of the energy model.
struct PhysicalConstants {
  double m_uav = 0.2;
  double g = 9.8;
  double rho_air = 1.225;
  double v_th = 0.1;
  double c_d = 0.5;
  int n_prp = 4;
  double r_prp = 0.1;
  double eta = 0.8;
  double a_surf = 0.01;
  double p_static = 4.0;
  double voltage = 5.0;
  double f_clock = 200e6;
  double alpha_act = 0.5;
  double c_load = 6.4e-9;
  double p_ut_dbm = 20.0;
  double p_ur_dbm = 20.0;
  double p_cam = 2.5;
  double p_ec_dbm = 40.0;
};

struct LinkParams {
  double f_c_ghz = 2.8;
  double bandwidth_hz = 20e6;
  double t_kelvin = 298.0;
  double k_boltzmann = 1.38e-23;
  int packet_bytes = 20;
  double p_wt_dbm = 20.0;
  double g_ws_dbi = 0.0;
  double a1 = 0.2;
  double a2 = 0.5;
  double a3 = 0.3;
  double collect_radius = 80.0;
};

struct ServiceWeights {
  double eps1 = 0.5;
  double eps2 = 0.2;
  double eps3 = 0.3;
};

struct RewardWeights {
  double alpha1 = 1.0;
  double alpha2 = 0.005;
  double alpha3 = 5.0;
  double alpha4 = 10.0;
  double alpha5 = 2.0;
  double alpha6 = 0.5;
  double alpha7 = 0.2;
  double alpha8 = 2.0;
  double alpha9 = 0.5;
  double alpha10 = 0.2;
  /// true: the comm reward pays for shrinking D_c (-alpha1 * dD_c).
  /// false: the literal +alpha1 * dD_c form.
  bool comm_reward_reduce = true;
};

struct FleetParams {
  int n_c = 4;
  int n_m = 4;
  int n_d = 4;
  int obs_nearest_ws = 5;  // K nearest sensors in the collection observation

  int total() const { return n_c + n_m + n_d; }
};

struct TrainParams {
  double gamma = 0.99;
  double xi = 0.005;
  double lr_actor = 1e-4;
  double lr_critic = 1e-5;
  int buffer_size = 1 << 16;
  int batch_size = 128;
  int episodes = 2000;
  int steps = 500;
  double theta0 = 0.1;  // initial soft-imitation coefficient
  int delta0 = 10;      // initial mimicry cycle, episodes
  double tau = 0.1;
  double epsilon = 0.1;
  int k_s = 2;
  double beta1 = 1.0;
  double beta2 = -0.5;
  bool eia = true;
  bool sec = true;
  /// Bootstrap on the mixed prediction instead of the local target critic alone.
  bool sec_mixed_target = true;
  /// Actor ascends the mixed prediction instead of the local critic alone.
  bool sec_mixed_actor = true;
  std::vector<int> hidden{64, 64};
  double noise_start = 0.3;  // fraction of the per-axis speed limit
  double noise_end = 0.05;
  double noise_decay_fraction = 0.5;  // share of training over which noise decays
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct RunParams {
  std::uint64_t seed = 1;
  int scenario_pool = 20;
  std::string out = "out";
};

struct RunConfig {
  WorldParams world;
  PhysicalConstants energy;
  LinkParams link;
  ServiceWeights service;
  RewardWeights reward;
  FleetParams fleet;
  TrainParams train;
  RunParams run;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;
};

/// One addressable configuration key.
struct ConfigField {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

/// All keys in their canonical (echo) order.
const std::vector<ConfigField>& config_fields();

/// Assigns `value` to `key`. Unknown keys and unparsable values throw.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Parses a "key=value" override as accepted by `--set`.
void apply_override(RunConfig& config, std::string_view assignment);

/// Reads `key = value` lines on top of `base`. `#` starts a comment.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Fully-resolved config, every key, canonical order; reparses to the same values.
void write_config(std::ostream& out, const RunConfig& config);
std::string config_to_string(const RunConfig& config);

/// Shortest text that parses back to exactly `value`.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace uavfarm
