// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace pllab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// The `pllab` command line. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pllab
