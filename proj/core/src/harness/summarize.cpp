#include "lcpo/harness/summarize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "lcpo/harness/config.hpp"
#include "lcpo/harness/metrics.hpp"
#include "lcpo/harness/runner.hpp"

namespace lcpo {

namespace {

namespace fs = std::filesystem;

double post_grace_mean(const CsvTable& t, const std::string& column, int64_t grace) {
  const auto epoch_col = t.column("epoch");
  const auto value_col = t.column(column);
  double sum = 0.0;
  int64_t n = 0;
  for (Eigen::Index r = 0; r < t.data.rows(); ++r) {
    if (t.data(r, epoch_col) < static_cast<double>(grace)) continue;
    sum += t.data(r, value_col);
    ++n;
  }
  if (n == 0) throw std::runtime_error("no post-grace rows in metrics file");
  return sum / static_cast<double>(n);
}

std::vector<std::string> config_echoes(const std::string& dir) {
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 12 &&
        name.substr(name.size() - 12) == "_config.json")
      out.push_back(entry.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<ExperimentSummary> summarize_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
  std::vector<ExperimentSummary> rows;
  for (const std::string& echo : config_echoes(dir)) {
    ExperimentConfig cfg = load_config(echo);
    cfg.out_dir = dir;  // summarize the scanned directory, wherever it moved
    ExperimentSummary ex;
    ex.name = cfg.name;
    ex.env = cfg.env;
    ex.agent_kind = cfg.agent.kind;
    ex.mode = cfg.mode;
    ex.grace_epochs = cfg.grace_epochs;

    for (const uint64_t seed : cfg.seeds) {
      const RunPaths paths = run_paths(cfg, seed);
      if (!fs::exists(paths.metrics)) continue;  // seed not run (yet)
      const CsvTable t = read_csv(paths.metrics);
      SeedSummary s;
      s.seed = seed;
      s.epochs = t.data.rows();
      s.post_grace_reward = post_grace_mean(t, "reward", cfg.grace_epochs);
      s.post_grace_p95 = post_grace_mean(t, "p95_ms", cfg.grace_epochs);
      if (fs::exists(paths.eval)) {
        const CsvTable e = read_csv(paths.eval);
        const auto col = e.columns.size() > 1 ? e.column(e.columns[1]) : 0;
        s.eval_mean = e.data.col(col).mean();
        s.has_eval = e.data.rows() > 0;
      }
      ex.seeds.push_back(s);
    }
    if (ex.seeds.empty()) continue;
    for (const SeedSummary& s : ex.seeds)
      if (s.epochs != ex.seeds.front().epochs)
        throw std::runtime_error("seeds of '" + ex.name + "' disagree on epoch count");
    double rsum = 0, psum = 0, esum = 0;
    int64_t en = 0;
    for (const SeedSummary& s : ex.seeds) {
      rsum += s.post_grace_reward;
      psum += s.post_grace_p95;
      if (s.has_eval) {
        esum += s.eval_mean;
        ++en;
      }
    }
    ex.reward_mean = rsum / static_cast<double>(ex.seeds.size());
    ex.p95_mean = psum / static_cast<double>(ex.seeds.size());
    ex.has_eval = en > 0;
    ex.eval_mean = en > 0 ? esum / static_cast<double>(en) : 0.0;
    rows.push_back(std::move(ex));
  }
  return rows;
}

std::string format_summary(const std::vector<ExperimentSummary>& rows) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-36s %-10s %-12s %-8s %5s %12s %12s %12s\n", "name", "env",
                "agent", "mode", "seeds", "reward", "p95_ms", "eval");
  out << buf;
  for (const auto& ex : rows) {
    std::snprintf(buf, sizeof(buf), "%-36s %-10s %-12s %-8s %5zu %12.3f %12.3f ", ex.name.c_str(),
                  ex.env.c_str(), ex.agent_kind.c_str(), ex.mode.c_str(), ex.seeds.size(),
                  ex.reward_mean, ex.p95_mean);
    out << buf;
    if (ex.has_eval) {
      std::snprintf(buf, sizeof(buf), "%12.3f\n", ex.eval_mean);
      out << buf;
    } else {
      out << "           -\n";
    }
  }
  return out.str();
}

void export_plots(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
  const std::string plot_dir = dir + "/plots";
  fs::create_directories(plot_dir);
  for (const std::string& echo : config_echoes(dir)) {
    ExperimentConfig cfg = load_config(echo);
    cfg.out_dir = dir;

    std::vector<CsvTable> tables;
    for (const uint64_t seed : cfg.seeds) {
      const RunPaths paths = run_paths(cfg, seed);
      if (fs::exists(paths.metrics)) tables.push_back(read_csv(paths.metrics));
    }
    if (tables.empty()) continue;
    const auto rows = tables.front().data.rows();
    for (const auto& t : tables)
      if (t.data.rows() != rows)
        throw std::runtime_error("seeds of '" + cfg.name + "' disagree on epoch count");

    const std::vector<std::string> wanted =
        cfg.env == "straggler" ? std::vector<std::string>{"reward", "p95_ms"}
                               : std::vector<std::string>{"reward"};
    for (const std::string& column : wanted) {
      CsvWriter out(plot_dir + "/" + cfg.name + "_" + column + ".csv",
                    {"epoch", "mean", "min", "max"});
      const auto epoch_col = tables.front().column("epoch");
      for (Eigen::Index r = 0; r < rows; ++r) {
        double lo = 0, hi = 0, sum = 0;
        for (size_t i = 0; i < tables.size(); ++i) {
          const double v = tables[i].data(r, tables[i].column(column));
          sum += v;
          lo = i == 0 ? v : std::min(lo, v);
          hi = i == 0 ? v : std::max(hi, v);
        }
        out.write_row({tables.front().data(r, epoch_col),
                       sum / static_cast<double>(tables.size()), lo, hi});
      }
    }

    // Probe curves (grid-world): aggregate every probe column across seeds.
    std::vector<CsvTable> probes;
    for (const uint64_t seed : cfg.seeds) {
      const RunPaths paths = run_paths(cfg, seed);
      if (fs::exists(paths.probe)) probes.push_back(read_csv(paths.probe));
    }
    if (!probes.empty()) {
      const auto prows = probes.front().data.rows();
      for (size_t c = 1; c < probes.front().columns.size(); ++c) {
        const std::string& column = probes.front().columns[c];
        CsvWriter out(plot_dir + "/" + cfg.name + "_" + column + ".csv",
                      {"epoch", "mean", "min", "max"});
        for (Eigen::Index r = 0; r < prows; ++r) {
          double lo = 0, hi = 0, sum = 0;
          for (size_t i = 0; i < probes.size(); ++i) {
            const double v = probes[i].data(r, probes[i].column(column));
            sum += v;
            lo = i == 0 ? v : std::min(lo, v);
            hi = i == 0 ? v : std::max(hi, v);
          }
          out.write_row({probes.front().data(r, 0), sum / static_cast<double>(probes.size()),
                         lo, hi});
        }
      }
    }
  }
}

}  // namespace lcpo
