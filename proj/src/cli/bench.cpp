#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <chrono>
#include <ostream>
#include <random>

#include "bridgewire/cli/commands.hpp"
#include "bridgewire/conformance/text_baseline.hpp"
#include "bridgewire/wire.hpp"

namespace bridgewire::cli {

namespace {

double median(std::vector<double> xs) {
  if (xs.empty()) return 0;
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : (xs[m - 1] + xs[m]) / 2;
}

template <class F>
double time_ms(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

double BenchResult::binary_median() const { return median(binary_ms); }
double BenchResult::text_median() const { return median(text_ms); }
double BenchResult::ratio() const {
  const double b = binary_median();
  const double t = text_median();
  return b > 0 && t > 0 ? t / b : 0;
}

BenchResult run_bench(std::size_t elements, int runs, BenchFormat format, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  std::vector<double> data(elements);
  for (auto& x : data) x = dist(rng);
  const Value v = TypedArray::vector(std::move(data));

  BenchResult r;
  r.elements = elements;
  for (int i = 0; i < runs; ++i) {
    if (format != BenchFormat::JsonBaseline) {
      Value back;
      r.binary_ms.push_back(time_ms([&] {
        const auto bytes = encode_to_bytes(v);
        r.binary_bytes = bytes.size();
        back = decode_from_bytes(bytes);
      }));
      if (!(back == v)) throw std::runtime_error("binary round trip changed the data");
    }
    if (format != BenchFormat::Binary) {
      Value back;
      r.text_ms.push_back(time_ms([&] {
        const auto text = conformance::to_text(v);
        r.text_bytes = text.size();
        back = conformance::from_text(text);
      }));
      if (!conformance::approx_equal(back, v)) throw std::runtime_error("text round trip changed the data");
    }
  }
  return r;
}

int cmd_bench(const CliConfig& config, std::ostream& out, std::ostream& err) {
  if (config.bench_size < 1 || config.bench_runs < 1) {
    err << "bench: --size and --runs must be at least 1\n";
    return kExitUsage;
  }
  BenchResult r;
  try {
    r = run_bench(config.bench_size, config.bench_runs, config.bench_format);
  } catch (const std::exception& e) {
    err << "bench: " << e.what() << '\n';
    return kExitFailure;
  }
  fmt::print(out, "elements: {}\nruns: {}\n", r.elements, config.bench_runs);
  if (!r.binary_ms.empty())
    fmt::print(out, "binary: median {:.3f} ms, {} bytes\n", r.binary_median(), r.binary_bytes);
  if (!r.text_ms.empty())
    fmt::print(out, "json-baseline: median {:.3f} ms, {} bytes\n", r.text_median(), r.text_bytes);
  if (r.ratio() > 0) fmt::print(out, "ratio: {:.2f}\n", r.ratio());
  return kExitOk;
}

}  // namespace bridgewire::cli
