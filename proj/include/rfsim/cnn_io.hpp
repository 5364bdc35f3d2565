#pragma once

#include <string>

#include "rfsim/cnn.hpp"

namespace rfsim {

// Checkpoint file (all little-endian):
//   "RFNN" | u16 version=1 | u32 tensor count |
//   per tensor: u16 type tag | u16 n_dims | n_dims x u32 dims |
//   f32 tensor data in manifest order (Eigen column-major storage) |
//   u32 CRC-32 of the f32 payload.
// Tags: 1 = conv weight [c_out, c_in, kh, kw], 2 = conv bias [c_out],
//       3 = dense weight [out, in], 4 = dense bias [out].
void save_model(const CnnModel<float>& model, const std::string& path);
CnnModel<float> load_model(const std::string& path);

}  // namespace rfsim
