// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace actvae::cli {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitAborted = 3;

/// Environment variable consulted for the default seed.
inline constexpr const char* kSeedEnv = "ACTVAE_SEED";
/// Environment variable naming the skeleton directory for `plot`.
inline constexpr const char* kSkeletonEnv = "ACTVAE_SKELETON_DIR";

/// Seed from ACTVAE_SEED, or 0 when unset. Throws on a malformed value.
std::uint64_t default_seed();

/// Entry point shared by the executable and the tests; args[0] is the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace actvae::cli
