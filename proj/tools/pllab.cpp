// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "pllab/harness/cli.hpp"

int main(int argc, char** argv) { return pllab::run_cli(argc, argv, std::cout, std::cerr); }
