// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pllab {

// Byte-level vocabulary: ids 0..255 are raw bytes, followed by four specials.
inline constexpr int kVocabSize = 260;
inline constexpr int kBos = 256;
inline constexpr int kEos = 257;
inline constexpr int kPad = 258;
inline constexpr int kVid = 259;  // marks the start of the visual segment

using TokenSeq = std::vector<int>;

TokenSeq tokenize(std::string_view text);
/// Concatenates byte tokens; special ids are dropped.
std::string detokenize(const TokenSeq& ids);

}  // namespace pllab
