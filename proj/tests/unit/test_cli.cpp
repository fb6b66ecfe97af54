#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include "bridgewire/cli/commands.hpp"
#include "bridgewire/runtime/builtins.hpp"
#include "bridgewire/runtime/server.hpp"

using namespace bridgewire;
using namespace bridgewire::cli;
namespace fs = std::filesystem;

namespace {

bool contains(const std::string& haystack, std::string_view needle) {
  return haystack.find(needle) != std::string::npos;
}

// Scratch copy of the golden vectors, removed on scope exit.
struct GoldenCopy {
  fs::path dir;
  GoldenCopy() {
    dir = fs::temp_directory_path() / ("bw-golden-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::copy(GOLDEN_DIR, dir);
  }
  ~GoldenCopy() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("bench reports both formats and their ratio") {
  CliConfig cfg;
  cfg.bench_size = 2000;
  cfg.bench_runs = 3;
  std::ostringstream out, err;
  CHECK(cmd_bench(cfg, out, err) == kExitOk);
  CHECK(contains(out.str(), "binary: median"));
  CHECK(contains(out.str(), "json-baseline: median"));
  CHECK(contains(out.str(), "ratio:"));

  auto r = run_bench(2000, 3, BenchFormat::Both);
  CHECK(r.binary_ms.size() == 3);
  CHECK(r.text_ms.size() == 3);
  CHECK(r.binary_bytes > 2000 * 8);
  CHECK(r.text_bytes > r.binary_bytes);
  CHECK(r.ratio() > 0);

  auto only = run_bench(100, 2, BenchFormat::Binary);
  CHECK(only.text_ms.empty());
  CHECK(only.ratio() == 0);
}

TEST_CASE("bench at size one still reports a ratio") {
  CliConfig cfg;
  cfg.bench_size = 1;
  cfg.bench_runs = 1;
  std::ostringstream out, err;
  CHECK(cmd_bench(cfg, out, err) == kExitOk);
  CHECK(contains(out.str(), "ratio:"));
}

TEST_CASE("bench rejects a run count of zero") {
  CliConfig cfg;
  cfg.bench_size = 10;
  cfg.bench_runs = 0;
  std::ostringstream out, err;
  CHECK(cmd_bench(cfg, out, err) == kExitUsage);
}

TEST_CASE("selftest names a corrupted golden vector") {
  GoldenCopy golden;
  {
    std::ofstream f(golden.dir / "f64_scalar.hex", std::ios::trunc);
    f << "# tampered\n01 0a 00 00 00 00 00 00 00 00 00\n";
  }
  CliConfig cfg;
  cfg.golden_dir = golden.dir;
  cfg.server_bin = "/nonexistent/bridgewire";
  std::ostringstream out, err;
  CHECK(cmd_selftest(cfg, out, err) == kExitFailure);
  CHECK(contains(out.str(), "FAIL golden f64_scalar"));
  CHECK(contains(out.str(), "PASS golden null"));
}

TEST_CASE("selftest skips the spawn scenario without a server") {
  CliConfig cfg;
  cfg.golden_dir = GOLDEN_DIR;
  cfg.server_bin = "/nonexistent/bridgewire";
  std::ostringstream out, err;
  CHECK(cmd_selftest(cfg, out, err) == kExitOk);
  CHECK(contains(out.str(), "SKIP spawn scenario"));
  CHECK_FALSE(contains(out.str(), "FAIL"));
}

TEST_CASE("repl evaluates lines and survives errors") {
  CliConfig cfg;
  cfg.server_bin = SERVER_BIN;
  std::istringstream in("Base.sqrt(4.0)\n1 +\nBase.cite(1)\nBase.println(\"hello\")\n:quit\nBase.sqrt(9.0)\n");
  std::ostringstream out, err;
  CHECK(cmd_repl(cfg, in, out, err) == kExitOk);
  const auto text = out.str() + err.str();
  CHECK(contains(text, "bw> "));
  CHECK(contains(text, "2"));
  CHECK(contains(text, "error: "));
  CHECK(contains(text, "hello"));
  // Nothing after :quit is evaluated.
  CHECK_FALSE(contains(text, "3.0"));
}

TEST_CASE("repl interrupts a running evaluation on the flag") {
  CliConfig cfg;
  cfg.server_bin = SERVER_BIN;
  std::istringstream in("Base.spin()\nBase.sqrt(16.0)\n");
  std::ostringstream out, err;
  std::atomic<bool> flag{false};
  std::thread sigint([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(500));
    flag = true;
  });
  CHECK(cmd_repl(cfg, in, out, err, &flag) == kExitOk);
  sigint.join();
  const auto text = out.str() + err.str();
  CHECK(contains(text, "interrupted"));
  CHECK(contains(text, "4"));
}

TEST_CASE("repl connects to a running server") {
  rt::Server server(std::make_shared<const rt::ModuleTable>(rt::default_modules()));
  CliConfig cfg;
  cfg.port = server.listen("127.0.0.1", 0);
  server.start();
  std::istringstream in("Base.sqrt(25.0)\n");
  std::ostringstream out, err;
  CHECK(cmd_repl(cfg, in, out, err) == kExitOk);
  CHECK(contains(out.str(), "5"));
  server.stop();
}

TEST_CASE("serve fails when the port is taken") {
  rt::Server holder(std::make_shared<const rt::ModuleTable>(rt::default_modules()));
  CliConfig cfg;
  cfg.port = holder.listen("127.0.0.1", 0);
  std::ostringstream out, err;
  CHECK(cmd_serve(cfg, out, err) == kExitFailure);
  CHECK_FALSE(err.str().empty());
}

TEST_CASE("effective port falls back to the environment") {
  CliConfig cfg;
  ::setenv("BRIDGEWIRE_PORT", "4321", 1);
  CHECK(effective_port(cfg) == 4321);
  cfg.port = 99;
  CHECK(effective_port(cfg) == 99);
  ::unsetenv("BRIDGEWIRE_PORT");
  cfg.port.reset();
  CHECK_FALSE(effective_port(cfg).has_value());
}
