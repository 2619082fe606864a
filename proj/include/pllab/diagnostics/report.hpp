// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "pllab/diagnostics/diagnostics.hpp"

namespace pllab {

/// Shortest-exact decimal ("%.17g"); "nan" / "inf" / "-inf" for non-finite values.
std::string format_number(double v);

/// Writes text to a file in binary mode; throws Error on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Diagnostics JSON (see docs/formats.md for the schema). Statistics that were
// not computed, or are undefined for the input, are null.
nlohmann::json diagnostics_json(const NormStats* norms, const SimilarityStats* similarity,
                                const LengthStats* lengths);

}  // namespace pllab
