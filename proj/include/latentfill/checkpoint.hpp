#pragma once

#include <string>

#include "latentfill/train.hpp"

namespace latentfill::gan {

/// Checkpoint file layout (all integers and floats little-endian):
///   magic "LFCKPT01", u32 format version
///   config: i32 latent_dim, image_size, channels, base_feature_maps;
///           f64 lr, beta1, beta2; i32 batch_size, epochs; u64 seed; u8 flip
///   i32 epoch counter
///   u32 length + bytes of the serialized training RNG state
///   u32 block count, then per block:
///   u16 name length + name, u8 ndim, i32 dims..., f64 data...
/// Blocks cover every parameter, batchnorm running average, and Adam
/// accumulator, in a canonical order, so save -> load -> save is
/// byte-identical.
void save_checkpoint(const std::string& path, const Trainer& trainer);
Trainer load_checkpoint(const std::string& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace latentfill::gan
