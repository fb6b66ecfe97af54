#include <fmt/format.h>
#include <fmt/ostream.h>

#include <future>
#include <ostream>
#include <thread>

#include "bridgewire/cli/commands.hpp"
#include "bridgewire/client/session.hpp"
#include "bridgewire/conformance/generator.hpp"
#include "bridgewire/conformance/golden.hpp"
#include "bridgewire/wire.hpp"

#ifndef BRIDGEWIRE_GOLDEN_DIR
#define BRIDGEWIRE_GOLDEN_DIR "tests/golden"
#endif

namespace bridgewire::cli {

namespace {

constexpr int kRoundTrips = 1000;

struct Tally {
  std::ostream& out;
  int failures = 0;

  void report(bool ok, std::string_view name, std::string_view why = {}) {
    if (ok) {
      fmt::print(out, "PASS {}\n", name);
    } else {
      ++failures;
      fmt::print(out, "FAIL {}{}{}\n", name, why.empty() ? "" : ": ", why);
    }
  }
};

std::string roundtrip_failure() {
  conformance::ValueGenerator gen({.seed = 7});
  for (int i = 0; i < kRoundTrips; ++i) {
    const Value v = gen.next();
    const auto bytes = encode_to_bytes(v);
    for (std::size_t chunk : {std::size_t{1}, std::size_t{7}, std::size_t{4096}}) {
      SpanSource src(bytes, chunk);
      WireReader r(src);
      if (!(decode_value(r) == v) || !src.exhausted())
        return fmt::format("value #{} with chunk size {}: {}", i, chunk, debug_string(v));
    }
  }
  return {};
}

// Spawn, call, interrupt a spinning evaluation, then check recovery.
std::string spawn_failure(const std::string& bin) {
  using namespace std::chrono_literals;
  client::SpawnOptions opts;
  opts.server_bin = bin;
  auto s = client::Session::spawn(opts);
  if (s.call("Base.sqrt", {4.0}).as_double() != 2.0) return "sqrt(4.0) did not return 2.0";
  const auto proxy = s.put(HostValue(HostVector::of(std::vector<double>{1, 2, 3})));
  auto spinning = std::async(std::launch::async, [s]() mutable {
    try {
      s.eval("Base.spin()");
      return std::string("spin returned normally");
    } catch (const client::InterruptedError&) {
      return std::string();
    } catch (const std::exception& e) {
      return std::string("unexpected error: ") + e.what();
    }
  });
  std::this_thread::sleep_for(200ms);
  const auto t0 = std::chrono::steady_clock::now();
  s.interrupt();
  if (spinning.wait_for(2s) != std::future_status::ready) return "interrupt did not return control within 2 s";
  if (auto why = spinning.get(); !why.empty()) return why;
  if (std::chrono::steady_clock::now() - t0 > 2s) return "interrupt took longer than 2 s";
  if (s.call("Base.sqrt", {4.0}).as_double() != 2.0) return "sqrt(4.0) after interrupt did not return 2.0";
  try {
    s.fetch(proxy);
    return "pre-interrupt proxy was not stale";
  } catch (const client::StaleReferenceError&) {
  }
  s.close();
  return {};
}

}  // namespace

int cmd_selftest(const CliConfig& config, std::ostream& out, std::ostream& err) {
  Tally t{out};
  const auto dir = config.golden_dir.value_or(BRIDGEWIRE_GOLDEN_DIR);
  for (const auto& c : conformance::check_golden_dir(dir)) t.report(c.ok, "golden " + c.name, c.message);

  try {
    const auto why = roundtrip_failure();
    t.report(why.empty(), fmt::format("round trip of {} generated values", kRoundTrips), why);
  } catch (const std::exception& e) {
    t.report(false, "round trip", e.what());
  }

  std::optional<std::string> bin;
  try {
    bin = client::discover_server(config.server_bin);
  } catch (const client::DiscoveryError& e) {
    fmt::print(out, "SKIP spawn scenario: {}\n", e.what());
  }
  if (bin) {
    try {
      const auto why = spawn_failure(*bin);
      t.report(why.empty(), "spawn, call and interrupt", why);
    } catch (const std::exception& e) {
      t.report(false, "spawn, call and interrupt", e.what());
    }
  }

  if (t.failures) {
    fmt::print(err, "selftest: {} check(s) failed\n", t.failures);
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace bridgewire::cli
