#pragma once

#include <filesystem>
#include <iosfwd>

#include "camf/nn.hpp"

namespace camf {

/// Binary model container.
///
///   "CAMFCKPT" | u32 version | u32 input_dim | u32 stage_count | stages...
///
/// Each stage starts with a u32 type tag (1 encoding, 2 linear,
/// 3 activation, 4 cam). Tensors are written as u32 rank, u32 extents, then
/// IEEE-754 binary32 payload. All integers and floats are little-endian.
/// Encodings store their seed and scale next to the projection matrix.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_model(std::ostream& os, const FieldModel& model);
FieldModel load_model(std::istream& is);

void save_model(const std::filesystem::path& path, const FieldModel& model);
FieldModel load_model(const std::filesystem::path& path);

}  // namespace camf
