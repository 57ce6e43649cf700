#include "lcpo/ood/store.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace lcpo {
namespace {

constexpr char kMagic[4] = {'L', 'C', 'P', 'S'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  char buf[sizeof(T)];
  in.read(buf, sizeof(T));
  if (!in) throw std::runtime_error("store snapshot: truncated");
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

void write_block(std::ostream& out, const Eigen::Ref<const Matrix2D>& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    out.write(reinterpret_cast<const char*>(m.row(i).data()),
              static_cast<std::streamsize>(m.cols() * sizeof(double)));
}

}  // namespace

ExperienceStore::ExperienceStore(int obs_dim, int feat_dim, int n_actions)
    : obs_dim_(obs_dim), feat_dim_(feat_dim), n_actions_(n_actions) {
  if (obs_dim <= 0 || feat_dim <= 0 || n_actions <= 0)
    throw std::invalid_argument("ExperienceStore: dims must be positive");
  reserve(1024);
}

void ExperienceStore::reserve(int64_t rows) {
  if (rows <= obs_.rows()) return;
  const int64_t cap = std::max<int64_t>(rows, obs_.rows() * 2);
  obs_.conservativeResize(cap, obs_dim_);
  features_.conservativeResize(cap, feat_dim_);
  probs_.conservativeResize(cap, n_actions_);
}

void ExperienceStore::append(const Eigen::RowVectorXd& obs, const Eigen::RowVectorXd& features,
                             const Eigen::RowVectorXd& probs, int64_t epoch) {
  if (obs.size() != obs_dim_ || features.size() != feat_dim_ || probs.size() != n_actions_)
    throw std::invalid_argument("ExperienceStore: row dims mismatch");
  reserve(rows_ + 1);
  obs_.row(rows_) = obs;
  features_.row(rows_) = features;
  probs_.row(rows_) = probs;
  epochs_.push_back(epoch);
  ++rows_;
}

void ExperienceStore::append_batch(const Matrix2D& obs, const Matrix2D& features,
                                   const Matrix2D& probs, int64_t epoch) {
  if (obs.rows() != features.rows() || obs.rows() != probs.rows())
    throw std::invalid_argument("ExperienceStore: batch row counts differ");
  if (obs.cols() != obs_dim_ || features.cols() != feat_dim_ || probs.cols() != n_actions_)
    throw std::invalid_argument("ExperienceStore: batch dims mismatch");
  reserve(rows_ + obs.rows());
  obs_.middleRows(rows_, obs.rows()) = obs;
  features_.middleRows(rows_, obs.rows()) = features;
  probs_.middleRows(rows_, obs.rows()) = probs;
  epochs_.insert(epochs_.end(), static_cast<size_t>(obs.rows()), epoch);
  rows_ += obs.rows();
}

void ExperienceStore::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("store snapshot: cannot open " + path);
  out.write(kMagic, 4);
  put<uint32_t>(out, kVersion);
  put<uint32_t>(out, static_cast<uint32_t>(obs_dim_));
  put<uint32_t>(out, static_cast<uint32_t>(feat_dim_));
  put<uint32_t>(out, static_cast<uint32_t>(n_actions_));
  put<uint64_t>(out, static_cast<uint64_t>(rows_));
  out.write(reinterpret_cast<const char*>(epochs_.data()),
            static_cast<std::streamsize>(epochs_.size() * sizeof(int64_t)));
  write_block(out, obs());
  write_block(out, features());
  write_block(out, probs());
  if (!out) throw std::runtime_error("store snapshot: write failed");
}

ExperienceStore ExperienceStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("store snapshot: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("store snapshot: bad magic");
  if (get<uint32_t>(in) != kVersion) throw std::runtime_error("store snapshot: bad version");
  const int obs_dim = static_cast<int>(get<uint32_t>(in));
  const int feat_dim = static_cast<int>(get<uint32_t>(in));
  const int n_actions = static_cast<int>(get<uint32_t>(in));
  const auto rows = static_cast<int64_t>(get<uint64_t>(in));
  ExperienceStore store(obs_dim, feat_dim, n_actions);
  store.reserve(rows);
  store.epochs_.resize(static_cast<size_t>(rows));
  in.read(reinterpret_cast<char*>(store.epochs_.data()),
          static_cast<std::streamsize>(rows * static_cast<int64_t>(sizeof(int64_t))));
  const auto read_block = [&](Matrix2D& m, int cols) {
    for (int64_t i = 0; i < rows; ++i)
      in.read(reinterpret_cast<char*>(m.row(i).data()),
              static_cast<std::streamsize>(cols * sizeof(double)));
  };
  read_block(store.obs_, obs_dim);
  read_block(store.features_, feat_dim);
  read_block(store.probs_, n_actions);
  if (!in) throw std::runtime_error("store snapshot: truncated");
  store.rows_ = rows;
  return store;
}

}  // namespace lcpo
