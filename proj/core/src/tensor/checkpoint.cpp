#include "lcpo/tensor/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace lcpo {
namespace {

constexpr char kMagic[4] = {'L', 'C', 'P', 'N'};
constexpr uint32_t kVersion = 1;

// The sandbox targets are little-endian; serialize integral/float values by
// memcpy so the on-disk layout is the in-memory one.
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
  if (!in) throw std::runtime_error("checkpoint: truncated stream");
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace

void save_net(std::ostream& out, const MlpSpec& spec, const ParamVector& params) {
  if (params.size() != spec.param_count())
    throw std::invalid_argument("checkpoint: params do not match spec");
  out.write(kMagic, 4);
  put<uint32_t>(out, kVersion);
  put<uint32_t>(out, static_cast<uint32_t>(spec.input_dim));
  put<uint32_t>(out, static_cast<uint32_t>(spec.output_dim));
  put<uint32_t>(out, static_cast<uint32_t>(spec.output_activation));
  put<uint32_t>(out, static_cast<uint32_t>(spec.hidden.size()));
  for (int h : spec.hidden) put<uint32_t>(out, static_cast<uint32_t>(h));
  put<uint64_t>(out, static_cast<uint64_t>(params.size()));
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

void load_net(std::istream& in, MlpSpec& spec, ParamVector& params) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  const uint32_t version = get<uint32_t>(in);
  if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  spec.input_dim = static_cast<int>(get<uint32_t>(in));
  spec.output_dim = static_cast<int>(get<uint32_t>(in));
  const uint32_t activation = get<uint32_t>(in);
  if (activation > 1) throw std::runtime_error("checkpoint: bad activation tag");
  spec.output_activation = static_cast<OutputActivation>(activation);
  const uint32_t hidden_count = get<uint32_t>(in);
  if (hidden_count > 64) throw std::runtime_error("checkpoint: implausible hidden_count");
  spec.hidden.clear();
  for (uint32_t i = 0; i < hidden_count; ++i)
    spec.hidden.push_back(static_cast<int>(get<uint32_t>(in)));
  spec.validate();
  const uint64_t count = get<uint64_t>(in);
  if (count != static_cast<uint64_t>(spec.param_count()))
    throw std::runtime_error("checkpoint: param count does not match spec");
  params.resize(static_cast<Eigen::Index>(count));
  in.read(reinterpret_cast<char*>(params.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: truncated params");
}

void save_net_file(const std::string& path, const MlpSpec& spec, const ParamVector& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  save_net(out, spec, params);
}

void load_net_file(const std::string& path, MlpSpec& spec, ParamVector& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  load_net(in, spec, params);
}

}  // namespace lcpo
