#include "lcpo/harness/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace lcpo {

const std::vector<std::string>& MetricRow::columns() {
  static const std::vector<std::string> cols = {
      "epoch",          "samples",      "reward",        "p95_ms",         "entropy",
      "alpha",          "epsilon",      "actor_loss",    "critic_loss",    "anchor_count",
      "store_size",     "v_pg_norm",    "kl_anchor_pred", "kl_anchor_real", "kl_recent_real",
      "halvings",       "ppo_iters",    "lambda_a",      "lambda_b",       "fallback",
      "solver_step",    "accepted",     "updated"};
  return cols;
}

std::vector<double> MetricRow::values() const {
  return {static_cast<double>(epoch),
          static_cast<double>(samples),
          reward,
          p95_ms,
          entropy,
          alpha,
          epsilon,
          actor_loss,
          critic_loss,
          static_cast<double>(anchor_count),
          static_cast<double>(store_size),
          v_pg_norm,
          kl_anchor_pred,
          kl_anchor_real,
          kl_recent_real,
          static_cast<double>(halvings),
          static_cast<double>(ppo_iters),
          lambda_a,
          lambda_b,
          static_cast<double>(fallback),
          static_cast<double>(solver_step),
          static_cast<double>(accepted),
          static_cast<double>(updated)};
}

void MetricRow::apply(const UpdateStats& s) {
  entropy = s.entropy;
  alpha = s.alpha;
  epsilon = s.epsilon;
  actor_loss = s.actor_loss;
  critic_loss = s.critic_loss;
  anchor_count = s.anchor_count;
  store_size = s.store_size;
  v_pg_norm = s.v_pg_norm;
  kl_anchor_pred = s.kl_anchor_predicted;
  kl_anchor_real = s.kl_anchor_realized;
  kl_recent_real = s.kl_recent_realized;
  halvings = s.halvings;
  ppo_iters = s.ppo_iters;
  lambda_a = s.lambda_a;
  lambda_b = s.lambda_b;
  fallback = s.fallback ? 1 : 0;
  solver_step = s.solver_step ? 1 : 0;
  accepted = s.step_accepted ? 1 : 0;
  updated = s.updated ? 1 : 0;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns)
    : path_(path), out_(path, std::ios::trunc), n_columns_(columns.size()) {
  if (!out_) throw std::runtime_error("cannot open metrics file for writing: " + path);
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ',';
    out_ << columns[i];
  }
  out_ << '\n';
}

void CsvWriter::write_row(const std::vector<double>& values) {
  if (values.size() != n_columns_)
    throw std::logic_error("CsvWriter: row width does not match the header");
  char buf[40];
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out_.put(',');
    const double v = values[i];
    // Integers print without an exponent; everything else round-trips.
    if (v == static_cast<int64_t>(v) && std::abs(v) < 1e15)
      std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
    else
      std::snprintf(buf, sizeof(buf), "%.17g", v);
    out_ << buf;
  }
  out_.put('\n');
  if (!out_) throw std::runtime_error("metrics write failed: " + path_);
}

Eigen::Index CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<Eigen::Index>(i);
  throw std::runtime_error("CSV is missing column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV: " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
  }
  std::vector<double> flat;
  int64_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    size_t cols = 0;
    while (std::getline(ls, cell, ',')) {
      flat.push_back(std::stod(cell));
      ++cols;
    }
    if (cols != t.columns.size())
      throw std::runtime_error("ragged CSV row in " + path);
    ++rows;
  }
  t.data.resize(rows, static_cast<Eigen::Index>(t.columns.size()));
  for (int64_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < t.columns.size(); ++c)
      t.data(r, static_cast<Eigen::Index>(c)) =
          flat[static_cast<size_t>(r) * t.columns.size() + c];
  return t;
}

}  // namespace lcpo
