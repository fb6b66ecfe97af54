#pragma once

/// @file fuzz.hpp
/// @brief Mutation fuzzer for the value and frame decoders.
///
/// Every mutated input goes through decode_from_bytes and read_frame with a
/// random chunk size. A finding is an exception other than DecodeError, an
/// input slower than the hang limit, an allocation above the cap, or a
/// successful decode whose re-encoding differs from the bytes consumed.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace bridgewire::conformance {

using Bytes = std::vector<std::uint8_t>;

struct FuzzOptions {
  std::chrono::milliseconds budget{1000};
  std::chrono::milliseconds hang_limit{1000};
  std::uint64_t seed = 1;
  std::size_t max_input_size = 1 << 14;
  /// Largest single allocation tolerated while decoding one input. Only
  /// enforced when the probes below are set (the process must track
  /// allocations itself).
  std::size_t allocation_cap = std::size_t{64} << 20;
  std::function<void()> reset_allocation_peak;
  std::function<std::size_t()> allocation_peak;
};

struct FuzzFinding {
  std::string kind;  // "exception", "hang", "allocation", "noncanonical"
  std::string detail;
  Bytes input;
};

struct FuzzReport {
  std::uint64_t executions = 0;
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  std::map<std::string, std::uint64_t> rejection_kinds;
  std::vector<FuzzFinding> findings;
};

/// Reads every `*.hex` golden file in `dir`, sorted by name.
std::vector<Bytes> load_corpus(const std::filesystem::path& dir);

FuzzReport fuzz_decoder(const std::vector<Bytes>& corpus, const FuzzOptions& options);

struct TruncationReport {
  std::uint64_t cases = 0;
  std::uint64_t premature_end = 0;
  std::vector<FuzzFinding> findings;
};

/// Every strict prefix of every corpus entry, through both decoders; each
/// must fail with a premature-end error.
TruncationReport check_truncations(const std::vector<Bytes>& corpus);

}  // namespace bridgewire::conformance
