#pragma once

/// @file commands.hpp
/// @brief The `bridgewire` subcommands, callable without a process boundary.
///
/// Exit codes: 0 success, 1 operational failure, 2 usage error. Results go
/// to `out`, diagnostics to `err`.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bridgewire::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

enum class BenchFormat { Both, Binary, JsonBaseline };

struct CliConfig {
  std::string host = "127.0.0.1";
  /// Unset means $BRIDGEWIRE_PORT, else ephemeral (serve) or spawn (repl).
  std::optional<std::uint16_t> port;
  std::optional<std::string> server_bin;
  std::size_t bench_size = 1'000'000;
  int bench_runs = 5;
  BenchFormat bench_format = BenchFormat::Both;
  std::optional<std::filesystem::path> golden_dir;
};

/// Port from the config, else $BRIDGEWIRE_PORT, else nullopt.
std::optional<std::uint16_t> effective_port(const CliConfig& config);

int cmd_serve(const CliConfig& config, std::ostream& out, std::ostream& err);

/// `interrupt_flag` is set asynchronously (by a SIGINT handler); while an
/// evaluation is running it interrupts the session, at the prompt it is
/// ignored.
int cmd_repl(const CliConfig& config, std::istream& in, std::ostream& out, std::ostream& err,
             std::atomic<bool>* interrupt_flag = nullptr);

struct BenchResult {
  std::size_t elements = 0;
  std::vector<double> binary_ms;
  std::vector<double> text_ms;
  std::size_t binary_bytes = 0;
  std::size_t text_bytes = 0;

  double binary_median() const;
  double text_median() const;
  /// text median / binary median; 0 when either format was skipped.
  double ratio() const;
};

/// Encode-then-decode of a random F64 vector, `runs` times per format.
BenchResult run_bench(std::size_t elements, int runs, BenchFormat format, std::uint64_t seed = 1);
int cmd_bench(const CliConfig& config, std::ostream& out, std::ostream& err);

int cmd_selftest(const CliConfig& config, std::ostream& out, std::ostream& err);

}  // namespace bridgewire::cli
