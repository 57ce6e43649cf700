#pragma once

#include <iosfwd>
#include <string>

#include "lcpo/tensor/mlp.hpp"

namespace lcpo {

// Binary network snapshot, little-endian:
//   "LCPN" | u32 version | u32 input_dim | u32 output_dim | u32 activation
//   | u32 hidden_count | u32 hidden[] | u64 param_count | f64 params[]
// Multiple blocks may be concatenated on one stream; the loader validates
// magic, version, and that param_count matches the stored spec.
void save_net(std::ostream& out, const MlpSpec& spec, const ParamVector& params);
void load_net(std::istream& in, MlpSpec& spec, ParamVector& params);

void save_net_file(const std::string& path, const MlpSpec& spec, const ParamVector& params);
void load_net_file(const std::string& path, MlpSpec& spec, ParamVector& params);

}  // namespace lcpo
