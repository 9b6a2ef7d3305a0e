#include "uavfarm/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#ifndef UAVFARM_VERSION
#define UAVFARM_VERSION "unknown"
#endif

namespace uavfarm::harness {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kEvalPickTag = 0xE7A1;
constexpr std::uint64_t kEvalSeedTag = 0xE7A2;

const char* const kColumns[] = {"episode",  "steps",    "reward_mean", "reward_c",  "reward_m",  "reward_d",
                                "aoi_mean", "vdf_mean", "energy_j",    "sr_events", "act_events", "eia_event"};

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void write_metrics_header(std::ostream& out) {
  out << "# schema=" << kMetricsSchema << '\n';
  bool first = true;
  for (const char* c : kColumns) {
    out << (first ? "" : ",") << c;
    first = false;
  }
  out << '\n';
}

void write_metrics_row(std::ostream& out, const marl::EpisodeMetrics& m) {
  out << m.episode << ',' << m.steps << ',' << format_double(m.reward_mean) << ','
      << format_double(m.reward_role[0]) << ',' << format_double(m.reward_role[1]) << ','
      << format_double(m.reward_role[2]) << ',' << format_double(m.aoi_mean) << ',' << format_double(m.vdf_mean)
      << ',' << format_double(m.energy_j) << ',' << m.sr_events << ',' << m.act_events << ','
      << (m.eia_event ? 1 : 0) << '\n';
}

std::size_t MetricsTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::runtime_error("metrics: no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> MetricsTable::series(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

MetricsTable read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# schema=uavfarm.metrics/", 0) != 0) {
    throw std::runtime_error("metrics: missing schema line");
  }
  MetricsTable t;
  if (!std::getline(in, line)) throw std::runtime_error("metrics: missing header row");
  t.columns = split_csv(line);
  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != t.columns.size()) {
      throw std::runtime_error("metrics: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                               " fields, expected " + std::to_string(t.columns.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        row.push_back(parse_double(c));
      } catch (const std::exception&) {
        throw std::runtime_error("metrics: line " + std::to_string(line_no) + ": bad number '" + c + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

MetricsTable load_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_metrics_csv(in);
}

std::vector<double> smooth(std::span<const double> values, int window) {
  if (window < 1) throw std::invalid_argument("smooth: window must be >= 1");
  const auto n = static_cast<long>(values.size());
  const long left = window / 2;
  const long right = window - 1 - left;
  std::vector<double> out(values.size());
  for (long i = 0; i < n; ++i) {
    const long lo = std::max(0L, i - left);
    const long hi = std::min(n - 1, i + right);
    double s = 0.0;
    for (long j = lo; j <= hi; ++j) s += values[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

std::string fingerprint(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TrainSummary cmd_train(const RunConfig& config, std::ostream* progress) {
  config.validate();
  const fs::path dir = prepare_dir(config.run.out);
  const std::string effective = config_to_string(config);
  open_out(dir / "effective_config.cfg") << effective;

  const auto started = std::chrono::steady_clock::now();
  marl::Trainer trainer(config);
  auto metrics = open_out(dir / "metrics.csv");
  auto timings = open_out(dir / "timings.csv");
  write_metrics_header(metrics);
  timings << "episode,wallclock_ms\n";

  TrainSummary summary;
  summary.log = trainer.train([&](const marl::EpisodeMetrics& m) {
    write_metrics_row(metrics, m);
    metrics.flush();
    timings << m.episode << ',' << format_double(m.wallclock_ms) << '\n';
    if (progress) {
      *progress << "episode " << m.episode << " reward " << m.reward_mean << " aoi " << m.aoi_mean << " vdf "
                << m.vdf_mean << (m.eia_event ? " [eia]" : "") << '\n';
    }
  });
  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  {
    auto ckpt = open_out(dir / "checkpoint.bin", std::ios::out | std::ios::binary);
    trainer.save_checkpoint(ckpt);
  }

  json manifest;
  manifest["tool"] = "uavfarm";
  manifest["version"] = UAVFARM_VERSION;
  manifest["command"] = "train";
  manifest["seed"] = config.run.seed;
  manifest["config_fingerprint"] = fingerprint(effective);
  manifest["episodes"] = config.train.episodes;
  manifest["steps_per_episode"] = config.train.steps;
  manifest["agents"] = config.fleet.total();
  manifest["metrics_schema"] = kMetricsSchema;
  manifest["wallclock_s"] = summary.seconds;
  manifest["files"] = {"effective_config.cfg", "metrics.csv", "timings.csv", "checkpoint.bin"};
  open_out(dir / "manifest.json") << manifest.dump(2) << '\n';
  return summary;
}

EvalSummary cmd_eval(const RunConfig& config, const std::string& checkpoint_path, const std::string& scenario_path,
                     int episodes) {
  if (episodes < 1) throw ConfigError("eval: --episodes must be >= 1");
  RunConfig cfg = config;
  cfg.train.buffer_size = std::max(1, cfg.train.batch_size);
  if (!scenario_path.empty()) cfg.run.scenario_pool = 1;
  const fs::path dir = prepare_dir(cfg.run.out);

  marl::Trainer trainer(cfg);
  {
    std::ifstream in(checkpoint_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + checkpoint_path + "'");
    trainer.load_checkpoint(in);
  }
  std::shared_ptr<const Scenario> fixed;
  if (!scenario_path.empty()) fixed = std::make_shared<const Scenario>(load_scenario(scenario_path));

  auto traj = open_out(dir / "trajectory.jsonl");
  auto summary_csv = open_out(dir / "eval_summary.csv");
  summary_csv << "episode,reward_mean,aoi_mean,vdf_mean,inference_ms_per_step\n";

  EvalSummary out;
  std::vector<double> all_latency;
  const auto& pool = trainer.scenario_pool();
  for (int ep = 1; ep <= episodes; ++ep) {
    const auto e = static_cast<std::uint64_t>(ep);
    auto scenario = fixed ? fixed : pool[derive_seed(cfg.run.seed, {kEvalPickTag, e}) % pool.size()];
    std::vector<marl::TrajectoryPoint> points;
    std::vector<double> latency;
    marl::RolloutOptions opts;
    opts.trajectory = &points;
    opts.step_latency_ms = &latency;
    marl::EpisodeMetrics m = trainer.rollout(scenario, derive_seed(cfg.run.seed, {kEvalSeedTag, e}), opts);
    m.episode = ep;
    for (const auto& p : points) {
      json rec;
      rec["episode"] = ep;
      rec["t"] = p.step * scenario->t_step;
      rec["uav"] = p.uav;
      rec["role"] = std::string(1, role_tag(p.role));
      rec["x"] = p.position.x();
      rec["y"] = p.position.y();
      rec["z"] = p.position.z();
      traj << rec.dump() << '\n';
    }
    const double ms = mean_of(latency);
    all_latency.insert(all_latency.end(), latency.begin(), latency.end());
    summary_csv << ep << ',' << format_double(m.reward_mean) << ',' << format_double(m.aoi_mean) << ','
                << format_double(m.vdf_mean) << ',' << format_double(ms) << '\n';
    out.episodes.push_back(m);
  }
  out.inference_ms_per_step = mean_of(all_latency);

  json report;
  report["command"] = "eval";
  report["checkpoint"] = checkpoint_path;
  report["scenario"] = scenario_path.empty() ? "pool" : scenario_path;
  report["episodes"] = episodes;
  report["agents"] = cfg.fleet.total();
  double r = 0, a = 0, v = 0;
  for (const auto& m : out.episodes) {
    r += m.reward_mean;
    a += m.aoi_mean;
    v += m.vdf_mean;
  }
  report["reward_mean"] = r / episodes;
  report["aoi_mean"] = a / episodes;
  report["vdf_mean"] = v / episodes;
  report["inference_ms_per_step"] = out.inference_ms_per_step;
  open_out(dir / "eval_report.json") << report.dump(2) << '\n';
  return out;
}

std::vector<ScaleRow> cmd_scale(const RunConfig& config, const std::vector<int>& sizes) {
  if (sizes.empty()) throw ConfigError("scale: no fleet sizes given");
  for (int n : sizes) {
    if (n < 3 || n % 3 != 0) throw ConfigError("scale: fleet size " + std::to_string(n) + " is not a multiple of 3");
  }
  const fs::path dir = prepare_dir(config.run.out);
  auto csv = open_out(dir / "scale.csv");
  csv << "n_uav,timed_steps,step_ms,per_agent_ms\n";
  std::vector<ScaleRow> rows;
  for (int n : sizes) {
    RunConfig cfg = config;
    cfg.fleet.n_c = cfg.fleet.n_m = cfg.fleet.n_d = n / 3;
    cfg.train.buffer_size = std::max(1, cfg.train.batch_size);
    cfg.run.scenario_pool = 1;
    marl::Trainer trainer(cfg);
    std::vector<double> latency;
    marl::RolloutOptions opts;
    opts.step_latency_ms = &latency;
    trainer.rollout(trainer.scenario_pool().front(), trainer.episode_seed(1), opts);
    const std::size_t skip = latency.size() / 10;
    const std::vector<double> kept(latency.begin() + static_cast<std::ptrdiff_t>(skip), latency.end());
    ScaleRow row;
    row.n_uav = n;
    row.timed_steps = static_cast<int>(kept.size());
    row.step_ms = mean_of(kept);
    row.per_agent_ms = row.step_ms / n;
    csv << n << ',' << row.timed_steps << ',' << format_double(row.step_ms) << ',' << format_double(row.per_agent_ms)
        << '\n';
    rows.push_back(row);
  }
  return rows;
}

void cmd_plotdata(const std::string& metrics_csv, const std::string& out_dir, int window) {
  const MetricsTable t = load_metrics_csv(metrics_csv);
  const fs::path dir = prepare_dir(out_dir);
  const auto episodes = t.series("episode");
  const std::pair<const char*, const char*> series[] = {
      {"reward_mean", "reward.dat"}, {"aoi_mean", "aoi.dat"}, {"vdf_mean", "vdf.dat"}};
  for (const auto& [column, file] : series) {
    const auto smoothed = smooth(t.series(column), window);
    auto out = open_out(dir / file);
    out << "# episode " << column << " (window " << window << ")\n";
    for (std::size_t i = 0; i < smoothed.size(); ++i) {
      out << format_double(episodes[i]) << ' ' << format_double(smoothed[i]) << '\n';
    }
  }
}

std::vector<std::string> cmd_gen_scenarios(const RunConfig& config) {
  config.validate();
  const fs::path dir = prepare_dir(config.run.out);
  std::vector<std::string> paths;
  const auto pool = marl::make_scenario_pool(config);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "scenario_%03zu.txt", i);
    const fs::path p = dir / name;
    save_scenario(p.string(), *pool[i]);
    paths.push_back(p.string());
  }
  return paths;
}

}  // namespace uavfarm::harness
