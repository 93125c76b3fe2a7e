#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "hpglm/sampler.hpp"

namespace hpglm {

inline constexpr const char* kVersion = "0.1.0";

// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

// Columns chain, draw, one per parameter, then log_posterior when present.
// Values carry 17 significant digits.
std::string draws_csv(const Draws& draws, bool primary_only = false);

// Seed for one cell of a batch run, derived from the run seed and a label.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

/// Parses the command line and runs one subcommand. Returns the exit status:
/// 0 success, 2 configuration error, 3 data error, 4 numeric error.
int run_cli(int argc, char** argv);

}  // namespace hpglm
