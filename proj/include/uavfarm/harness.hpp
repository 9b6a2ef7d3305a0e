#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "uavfarm/config.hpp"
#include "uavfarm/marl.hpp"

namespace uavfarm::harness {

inline constexpr const char* kMetricsSchema = "uavfarm.metrics/1";

/// Schema comment line plus the column header.
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const marl::EpisodeMetrics& m);

struct MetricsTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Index of a column; throws std::runtime_error if absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> series(const std::string& name) const;
};

/// Parses a metrics CSV. Throws std::runtime_error on a missing schema line,
/// ragged rows or non-numeric fields.
MetricsTable read_metrics_csv(std::istream& in);
MetricsTable load_metrics_csv(const std::string& path);

/// Centered moving mean, window w: w/2 points to the left, w-1-w/2 to the
/// right, truncated at the edges.
std::vector<double> smooth(std::span<const double> values, int window);

/// FNV-1a 64 of a string, hex.
std::string fingerprint(const std::string& text);

struct TrainSummary {
  std::vector<marl::EpisodeMetrics> log;
  double seconds = 0;
};

/// Trains and writes effective_config.cfg, metrics.csv, timings.csv,
/// checkpoint.bin and manifest.json under config.run.out.
TrainSummary cmd_train(const RunConfig& config, std::ostream* progress = nullptr);

struct EvalSummary {
  std::vector<marl::EpisodeMetrics> episodes;
  double inference_ms_per_step = 0;
};

/// Noise-free rollouts from a checkpoint. `scenario_path` empty picks from
/// the configured pool. Writes trajectory.jsonl, eval_summary.csv and
/// eval_report.json under config.run.out.
EvalSummary cmd_eval(const RunConfig& config, const std::string& checkpoint_path, const std::string& scenario_path,
                     int episodes);

struct ScaleRow {
  int n_uav = 0;
  int timed_steps = 0;
  double step_ms = 0;
  double per_agent_ms = 0;
};

/// Times env + policy inference per step for each fleet size (split evenly
/// over the roles), dropping the first 10% of steps. Writes scale.csv.
std::vector<ScaleRow> cmd_scale(const RunConfig& config, const std::vector<int>& sizes);

/// Writes reward.dat, aoi.dat and vdf.dat (episode, smoothed value).
void cmd_plotdata(const std::string& metrics_csv, const std::string& out_dir, int window);

/// Saves the training pool as scenario_NNN.txt files; returns their paths.
std::vector<std::string> cmd_gen_scenarios(const RunConfig& config);

}  // namespace uavfarm::harness
