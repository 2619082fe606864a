// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "pllab/numerics/tensor.hpp"

namespace pllab {

/// Named tensors; std::map keeps entries in a stable (byte-wise name) order.
using TensorMap = std::map<std::string, Tensor>;

// "PLCK v1" container, all integers and floats little-endian, no padding:
//
//   "PLCK"  u16 version = 1  u32 entry_count
//   entry*: u16 name_len  name[name_len]  u8 rank  u64 extent[rank]  f64 value[prod(extent)]
//
// Names are UTF-8, at most 65535 bytes. Values are row-major.
inline constexpr std::uint16_t kPlckVersion = 1;

std::string encode_plck(const TensorMap& entries);
/// Throws FormatError carrying the byte offset of the first malformed field.
TensorMap decode_plck(std::string_view bytes);

void save_tensors(const std::filesystem::path& path, const TensorMap& entries);
TensorMap load_tensors(const std::filesystem::path& path);

/// Fetches an entry or throws FormatError naming the missing key.
const Tensor& require_entry(const TensorMap& entries, const std::string& name);

}  // namespace pllab
