#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "polsar/cxnn/autoencoder.hpp"

namespace polsar::nn {

using MetaMap = std::map<std::string, std::string>;

/// "CXAE" container: u16 version, a key=value string table, then named
/// tensors (u32 name length, name, u8 dtype, u32 rank, u64 extents, raw
/// little-endian payload) for parameters, AdamW moments and BN buffers.
/// dtype tags: 0 = c64, 1 = c128, 2 = f32, 3 = f64.
template <class T>
void save_checkpoint(const std::filesystem::path& path, AutoEncoder<T>& model, const MetaMap& meta);

/// Key=value table of a checkpoint without touching its tensors.
MetaMap read_checkpoint_meta(const std::filesystem::path& path);

/// Restores parameters, moments and buffers into `model`, which must have
/// been built with the same configuration. Returns the key=value table.
template <class T>
MetaMap load_checkpoint(const std::filesystem::path& path, AutoEncoder<T>& model);

}  // namespace polsar::nn
