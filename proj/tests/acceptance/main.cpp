// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Criteria that need a runtime use a spawned server process.

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bridgewire/cli/commands.hpp"
#include "bridgewire/client/session.hpp"
#include "bridgewire/conformance/fuzz.hpp"
#include "bridgewire/conformance/generator.hpp"
#include "bridgewire/io.hpp"
#include "bridgewire/translate.hpp"
#include "bridgewire/wire.hpp"
#include "support/alloc_tracker.hpp"
#include "support/type_rows.hpp"

using namespace bridgewire;
using namespace bridgewire::client;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

namespace {

// Thrown by a check to fail the current criterion with a reason.
struct Failed {
  std::string why;
};

void expect(bool ok, std::string why) {
  if (!ok) throw Failed{std::move(why)};
}

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Session spawn() {
  SpawnOptions o;
  o.server_bin = SERVER_BIN;
  return Session::spawn(o);
}

// Returns a short note for the PASS line.
using Criterion = std::function<std::string()>;

// --- 1 ----------------------------------------------------------------------

std::string snippets() {
  auto s = spawn();

  auto plus_one = HostFunction::positional([](const HostArgs& a) { return HostValue(a.at(0).as_int() + 1); });
  auto t0 = Clock::now();
  auto mapped = s.call("Base.map", {plus_one, HostVector::integers({1, 2, 3})});
  const double map_ms = ms_since(t0);
  expect(mapped == HostValue(HostVector::integers({2, 3, 4})), "a: map(+1, [1,2,3]) gave " + format_host(mapped));
  expect(map_ms < 1000, fmt::format("a: map took {:.0f} ms", map_ms));

  auto added = s.call("Base.add", {HostVector::doubles({1.0, NA, std::nan("")}), HostVector::doubles({1, 2, 3})});
  const auto& v = added.as<HostVector>();
  expect(v.type() == HostType::Double && v.size() == 3, "b: add returned " + format_host(added));
  expect(!v.is_na(0) && v.as_double(0) == 2.0, "b: element 1 is not 2");
  expect(v.is_na(1), "b: element 2 is not missing");
  expect(!v.is_na(2) && std::isnan(v.as_double(2)), "b: element 3 is not NaN");

  auto root = s.call("Base.sqrt", {HostVector::doubles({NA})});
  expect(root.is<HostVector>() && root.as<HostVector>().size() == 1 && root.as<HostVector>().is_na(0),
         "c: sqrt(missing) gave " + format_host(root));

  auto sq = s.eval("fn(x) -> x * x");
  auto four = s.call(sq, {2});
  expect(four == HostValue(4), "d: (x -> x * x)(2) gave " + format_host(four));

  auto lib = s.import_module("Library");
  auto book = lib["Book"]({"Shakespeare", "Romeo and Julia", 1597});
  expect(book.is<Proxy>(), "e: Book constructor did not return a reference");
  auto rec = s.fetch(book.as<Proxy>());
  expect(rec.is<HostRecord>() && rec.as<HostRecord>().type_attr == "Library.Book",
         "e: fetched Book is not an annotated record: " + format_host(rec));
  auto cite = lib.call("cite", {rec});
  expect(cite == HostValue("Shakespeare: Romeo and Julia (1597)"), "e: cite gave " + format_host(cite));
  s.close();
  return fmt::format("map in {:.1f} ms", map_ms);
}

// --- 2 ----------------------------------------------------------------------

std::string roundtrips() {
  constexpr int kValues = 10'000;
  conformance::ValueGenerator gen({.seed = 20261017});
  const auto t0 = Clock::now();
  for (int i = 0; i < kValues; ++i) {
    const Value v = gen.next();
    const auto bytes = encode_to_bytes(v);
    for (std::size_t chunk : {std::size_t{1}, std::size_t{7}, std::size_t{4096}}) {
      SpanSource src(bytes, chunk);
      WireReader r(src);
      const Value back = decode_value(r);
      expect(back == v && src.exhausted(), fmt::format("value #{} at chunk {}: {}", i, chunk, debug_string(v)));
    }
  }
  const double ms = ms_since(t0);
  expect(ms < 60'000, fmt::format("took {:.0f} ms", ms));
  return fmt::format("{} values x 3 chunk sizes in {:.0f} ms", kValues, ms);
}

// --- 3 ----------------------------------------------------------------------

std::string type_tables() {
  int rows = 0;
  for (const auto& row : testsupport::outbound_rows()) {
    const Value w = translate_outbound(row.host);
    expect(w.is<TypedArray>() && w.as<TypedArray>().type() == row.wire,
           fmt::format("outbound {}: got {}", row.name, debug_string(w)));
    ++rows;
  }
  for (const auto& row : testsupport::inbound_rows()) {
    const HostValue h = translate_inbound(row.wire);
    expect(h.is<HostVector>(), fmt::format("inbound {}: not a vector", row.name));
    const auto& hv = h.as<HostVector>();
    expect(hv.type() == row.host, fmt::format("inbound {}: host type {}", row.name, host_type_name(hv.type())));
    expect(hv.type_attr() == row.attr,
           fmt::format("inbound {}: annotation '{}'", row.name, hv.type_attr().value_or("<none>")));
    if (row.attr)
      expect(translate_outbound(h) == row.wire, fmt::format("inbound {}: annotated value does not return intact", row.name));
    ++rows;
  }
  return fmt::format("{} rows", rows);
}

// --- 4 ----------------------------------------------------------------------

std::string nesting() {
  constexpr int kDepth = 5;
  auto s = spawn();
  // Each level maps the next one over its argument and applies 3y - 1.
  std::function<double(int, double)> remote = [&](int depth, double x) -> double {
    if (depth == 0) return x * x + 0.25;
    auto inner = HostFunction::positional(
        [&, depth](const HostArgs& a) { return HostValue(remote(depth - 1, a.at(0).as_double())); });
    return 3.0 * s.call("Base.map", {inner, x}).as_double() - 1.0;
  };
  std::function<double(int, double)> local = [&](int depth, double x) -> double {
    return depth == 0 ? x * x + 0.25 : 3.0 * local(depth - 1, x) - 1.0;
  };
  for (double x : {0.1, 1.5, -7.25}) {
    const double r = remote(kDepth, x), l = local(kDepth, x);
    expect(r == l, fmt::format("x = {}: remote {} vs local {}", x, r, l));
  }
  s.close();
  return fmt::format("depth {}", kDepth);
}

// --- 5 ----------------------------------------------------------------------

std::string interrupt() {
  auto s = spawn();
  const auto proxy = s.put(HostVector::doubles({1, 2, 3}));
  auto spinning = std::async(std::launch::async, [s]() mutable -> std::string {
    try {
      s.eval("Base.spin()");
      return "spin returned normally";
    } catch (const InterruptedError&) {
      return {};
    } catch (const std::exception& e) {
      return std::string("unexpected error: ") + e.what();
    }
  });
  std::this_thread::sleep_for(300ms);
  const auto t0 = Clock::now();
  s.interrupt();
  expect(spinning.wait_for(2s) == std::future_status::ready, "control did not return within 2 s");
  const double ms = ms_since(t0);
  if (auto why = spinning.get(); !why.empty()) throw Failed{why};
  expect(ms < 2000, fmt::format("control returned after {:.0f} ms", ms));

  auto r = s.call("Base.sqrt", {4.0});
  expect(r == HostValue(2.0), "sqrt(4.0) after interrupt gave " + format_host(r));
  bool stale = false;
  try {
    s.fetch(proxy);
  } catch (const StaleReferenceError&) {
    stale = true;
  }
  expect(stale, "pre-interrupt proxy did not raise a stale-reference error");
  s.close();
  return fmt::format("control back in {:.0f} ms", ms);
}

// --- 6 ----------------------------------------------------------------------

std::string output_order() {
  constexpr int kChunks = 100;
  auto s = spawn();
  std::vector<std::string> chunks;
  std::string expected;
  for (int i = 0; i < kChunks; ++i) {
    chunks.push_back(fmt::format("chunk {} {}{}", i, std::string(static_cast<std::size_t>(i % 7), 'x'),
                                 i % 10 == 9 ? "\n" : (i % 3 == 0 ? "σ" : "")));
    expected += chunks.back();
  }
  std::string received;
  bool returned = false;
  int late = 0;
  s.set_output_sinks(
      [&](std::string_view c) {
        if (returned) ++late;
        received += c;
      },
      [&](std::string_view) { ++late; });

  auto printer = s.eval("fn(s) -> Base.print(s)");
  HostVector strings = HostVector::of(chunks);
  s.call("Base.map", {printer, strings});
  returned = true;
  expect(received == expected, fmt::format("host sink got {} bytes, expected {}", received.size(), expected.size()));
  expect(late == 0, "output arrived after the result or on the wrong channel");
  s.close();
  return fmt::format("{} chunks, {} bytes", kChunks, expected.size());
}

// --- 7 ----------------------------------------------------------------------

std::string hygiene() {
  constexpr int kProxies = 1000;
  auto s = spawn();
  const auto baseline = s.call("Base.registrysize").as_int();
  {
    std::vector<Proxy> minted;
    auto lib = s.import_module("Library");
    for (int i = 0; i < kProxies; ++i) {
      if (i % 2 == 0) {
        minted.push_back(s.put(HostValue(static_cast<double>(i))));
      } else {
        minted.push_back(lib["Book"]({"A", "T", i}).as<Proxy>());
      }
    }
    const auto peak = s.call("Base.registrysize").as_int();
    expect(peak == baseline + kProxies, fmt::format("registry held {} after minting, baseline {}", peak, baseline));
  }
  const auto flushed = s.release_flush();
  expect(flushed == kProxies, fmt::format("flushed {} releases", flushed));
  const auto after = s.call("Base.registrysize").as_int();
  expect(after == baseline, fmt::format("registry size {} after flush, baseline {}", after, baseline));
  s.close();
  return fmt::format("{} proxies, registry back to {}", kProxies, baseline);
}

// --- 8 ----------------------------------------------------------------------

std::string bench() {
  const auto t0 = Clock::now();
  const auto r = cli::run_bench(1'000'000, 5, cli::BenchFormat::Both);
  const double ms = ms_since(t0);
  expect(r.ratio() >= 2.0, fmt::format("ratio {:.2f} (binary {:.1f} ms, text {:.1f} ms)", r.ratio(),
                                       r.binary_median(), r.text_median()));
  expect(ms < 30'000, fmt::format("took {:.0f} ms", ms));
  return fmt::format("ratio {:.1f} (binary {:.1f} ms, text {:.1f} ms)", r.ratio(), r.binary_median(),
                     r.text_median());
}

// --- 9 ----------------------------------------------------------------------

std::string fuzz() {
  const auto corpus = conformance::load_corpus(GOLDEN_DIR);
  expect(!corpus.empty(), "empty corpus");
  conformance::FuzzOptions o;
  o.budget = 60s;
  o.seed = 20261017;
  o.reset_allocation_peak = testsupport::reset_allocation_peak;
  o.allocation_peak = testsupport::allocation_peak;
  const auto r = conformance::fuzz_decoder(corpus, o);
  if (!r.findings.empty()) {
    const auto& f = r.findings.front();
    throw Failed{fmt::format("{} findings, first: {} ({})", r.findings.size(), f.kind, f.detail)};
  }
  const auto t = conformance::check_truncations(corpus);
  expect(t.findings.empty() && t.premature_end == t.cases, fmt::format("{} truncation findings", t.findings.size()));
  return fmt::format("{} executions, {} accepted", r.executions, r.accepted);
}

// --- 10 ---------------------------------------------------------------------

std::string tables() {
  constexpr int kRows = 20'000;
  std::vector<double> z(kRows);
  std::vector<std::int32_t> k(kRows);
  std::vector<std::string> name(kRows);
  for (int i = 0; i < kRows; ++i) {
    z[i] = 1.0 / (i + 1);
    k[i] = kRows - i;
    name[i] = fmt::format("row{}", i);
  }
  HostTable t;
  t.columns.emplace_back("zeta", HostVector::of(z));
  t.columns.emplace_back("key", HostVector::of(k).set_na(3));
  t.columns.emplace_back("alpha", HostVector::of(name));

  HostNamedArgs cols;
  for (const auto& [n, v] : t.columns) cols.push_back({n, v});
  std::size_t data_bytes = 0;
  for (const auto& [n, v] : t.columns) data_bytes += encode_to_bytes(vector_outbound(v)).size();

  auto s = spawn();
  // Any frame at least half the data size counts as carrying the data.
  std::vector<std::string> bulky;
  std::size_t largest_other = 0, bulky_bytes = 0;
  s.set_frame_tap([&](Direction d, const Frame& f) {
    const auto n = frame_to_bytes(f).size();
    if (n >= data_bytes / 2) {
      bulky.push_back(fmt::format("{} {}", d == Direction::Sent ? "sent" : "received", frame_kind_name(frame_kind(f))));
      bulky_bytes += n;
    } else {
      largest_other = std::max(largest_other, n);
    }
  });
  const auto before = s.stats();
  auto proxy = s.call("Base.maketable", {}, cols);
  expect(proxy.is<Proxy>(), "maketable did not return a reference");
  auto same = s.call("Base.identity", {proxy});
  auto nrows = s.call("Base.length", {proxy});
  expect(same.is<Proxy>(), "identity on a table did not return a reference");
  expect(nrows == HostValue(kRows), "length of the table proxy gave " + format_host(nrows));
  const auto back = s.to_table(same.as<Proxy>());
  const auto after = s.stats();

  expect(back == t, "table changed in transit");
  expect(bulky == std::vector<std::string>{"sent CALL", "received RESULT"},
         fmt::format("data-carrying frames: [{}]", fmt::join(bulky, ", ")));
  expect(largest_other < 512, fmt::format("an intermediate frame carried {} bytes", largest_other));
  const auto sent = after.bytes_sent - before.bytes_sent;
  const auto received = after.bytes_received - before.bytes_received;
  // Integer columns come back widened, so the inbound copy is larger than data_bytes.
  expect(sent + received < bulky_bytes + 2048,
         fmt::format("{} bytes moved beyond the two data-carrying frames", sent + received - bulky_bytes));
  s.close();
  return fmt::format("{} data bytes; {} sent, {} received", data_bytes, sent, received);
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Criterion>> criteria = {
      {"1 example snippets", snippets},
      {"2 round-trip property suite", roundtrips},
      {"3 type-table conformance", type_tables},
      {"4 callback nesting", nesting},
      {"5 interrupt and recovery", interrupt},
      {"6 output ordering", output_order},
      {"7 reference hygiene", hygiene},
      {"8 binary vs text benchmark", bench},
      {"9 decoder fuzz", fuzz},
      {"10 table exchange", tables},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    try {
      const auto note = run();
      fmt::print("PASS {} ({})\n", name, note);
    } catch (const Failed& f) {
      ++failed;
      fmt::print("FAIL {}: {}\n", name, f.why);
    } catch (const std::exception& e) {
      ++failed;
      fmt::print("FAIL {}: unexpected error: {}\n", name, e.what());
    }
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed ? 1 : 0;
}
