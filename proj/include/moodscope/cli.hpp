#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace moodscope {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Exit codes: 0 success, 1 usage or runtime error, 2 input validation
/// errors, 3 a required upstream artifact is missing.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalidInput = 2;
inline constexpr int kExitMissingArtifact = 3;

/// Runs the command line `args` (without the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a, used for manifest hashes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace moodscope
