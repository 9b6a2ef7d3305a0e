// uavfarm command-line driver: train, eval, scale, plotdata, gen-scenarios.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "uavfarm/config.hpp"
#include "uavfarm/harness.hpp"
#include "uavfarm/nn.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "config file (key = value lines)");
  cmd->add_option("--set", o.overrides, "override a key, e.g. --set train.episodes=10")->take_all();
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
}

uavfarm::RunConfig resolve(const CommonOptions& o) {
  uavfarm::RunConfig cfg;
  if (!o.config_path.empty()) cfg = uavfarm::load_config(o.config_path, cfg);
  for (const auto& kv : o.overrides) uavfarm::apply_override(cfg, kv);
  if (o.seed) cfg.run.seed = *o.seed;
  if (!o.out.empty()) cfg.run.out = o.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-UAV farm simulator and EIA-SEC trainer"};
  app.require_subcommand(1);

  CommonOptions train_o, eval_o, scale_o, gen_o;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "train all agents and write metrics, checkpoint and manifest");
  add_common(train, train_o);
  train->add_flag("--quiet", quiet, "no per-episode progress");

  std::string checkpoint, scenario;
  int eval_episodes = 1;
  auto* eval = app.add_subcommand("eval", "noise-free rollouts from a checkpoint");
  add_common(eval, eval_o);
  eval->add_option("--checkpoint", checkpoint, "checkpoint.bin from train")->required();
  eval->add_option("--scenario", scenario, "scenario file (default: pick from the pool)");
  eval->add_option("--episodes", eval_episodes, "number of episodes");

  std::vector<int> sizes{6, 12, 24};
  auto* scale = app.add_subcommand("scale", "per-step inference latency versus fleet size");
  add_common(scale, scale_o);
  scale->add_option("--sizes", sizes, "fleet sizes, multiples of 3")->delimiter(',');

  std::string metrics_csv, plot_out = "plotdata";
  int window = 10;
  auto* plot = app.add_subcommand("plotdata", "smoothed reward/AoI/VDF series from a metrics CSV");
  plot->add_option("metrics", metrics_csv, "metrics.csv")->required();
  plot->add_option("--out", plot_out, "output directory");
  plot->add_option("--window", window, "smoothing window");

  auto* gen = app.add_subcommand("gen-scenarios", "write the scenario pool to files");
  add_common(gen, gen_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) {
      const auto cfg = resolve(train_o);
      const auto s = uavfarm::harness::cmd_train(cfg, quiet ? nullptr : &std::cerr);
      std::cout << "trained " << s.log.size() << " episodes in " << s.seconds << " s -> " << cfg.run.out << '\n';
    } else if (*eval) {
      const auto cfg = resolve(eval_o);
      const auto s = uavfarm::harness::cmd_eval(cfg, checkpoint, scenario, eval_episodes);
      for (const auto& m : s.episodes) {
        std::cout << "episode " << m.episode << " reward " << m.reward_mean << " aoi " << m.aoi_mean << " vdf "
                  << m.vdf_mean << '\n';
      }
      std::cout << "inference " << s.inference_ms_per_step << " ms/step\n";
    } else if (*scale) {
      const auto cfg = resolve(scale_o);
      std::cout << "n_uav step_ms per_agent_ms\n";
      for (const auto& r : uavfarm::harness::cmd_scale(cfg, sizes)) {
        std::cout << r.n_uav << ' ' << r.step_ms << ' ' << r.per_agent_ms << '\n';
      }
    } else if (*plot) {
      uavfarm::harness::cmd_plotdata(metrics_csv, plot_out, window);
    } else if (*gen) {
      const auto cfg = resolve(gen_o);
      for (const auto& p : uavfarm::harness::cmd_gen_scenarios(cfg)) std::cout << p << '\n';
    }
  } catch (const uavfarm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const uavfarm::nn::DivergenceError& e) {
    std::cerr << "numeric divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
