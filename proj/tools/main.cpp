// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  return actvae::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
