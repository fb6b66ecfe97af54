#include "bridgewire/conformance/fuzz.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <random>

#include "bridgewire/conformance/golden.hpp"
#include "bridgewire/wire.hpp"

namespace bridgewire::conformance {

namespace {

using Clock = std::chrono::steady_clock;

enum class Outcome { Accepted, Rejected };

struct Probe {
  Outcome outcome = Outcome::Rejected;
  std::string rejection;
};

// Decodes as a value; a success must re-encode to the exact input.
Probe probe_value(const Bytes& input, std::size_t chunk) {
  SpanSource src(input, chunk);
  WireReader r(src);
  Value v;
  try {
    v = decode_value(r);
  } catch (const DecodeError& e) {
    return {Outcome::Rejected, std::string(decode_error_kind_name(e.kind()))};
  }
  const auto re = encode_to_bytes(v);
  if (!std::equal(re.begin(), re.end(), input.begin(), input.begin() + static_cast<std::ptrdiff_t>(src.position())) ||
      re.size() != src.position())
    throw std::logic_error("value re-encoding differs from the consumed bytes");
  validate(v);
  return {Outcome::Accepted, {}};
}

Probe probe_frame(const Bytes& input, std::size_t chunk) {
  SpanSource src(input, chunk);
  Frame f;
  try {
    f = read_frame(src);
  } catch (const DecodeError& e) {
    return {Outcome::Rejected, std::string(decode_error_kind_name(e.kind()))};
  }
  const auto re = frame_to_bytes(f);
  if (re.size() != src.position() ||
      !std::equal(re.begin(), re.end(), input.begin()))
    throw std::logic_error("frame re-encoding differs from the consumed bytes");
  return {Outcome::Accepted, {}};
}

class Mutator {
 public:
  Mutator(const std::vector<Bytes>& corpus, std::uint64_t seed, std::size_t max_size)
      : corpus_(corpus), rng_(seed), max_size_(max_size) {}

  Bytes next() {
    Bytes b = corpus_.empty() ? Bytes{} : corpus_[below(corpus_.size())];
    const std::size_t rounds = 1 + below(4);
    for (std::size_t i = 0; i < rounds; ++i) mutate(b);
    if (b.size() > max_size_) b.resize(max_size_);
    return b;
  }

  std::size_t chunk() {
    static constexpr std::size_t kChunks[] = {1, 2, 7, 64, 4096};
    return kChunks[below(std::size(kChunks))];
  }

 private:
  std::size_t below(std::size_t n) { return n == 0 ? 0 : std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  void mutate(Bytes& b) {
    static constexpr std::uint8_t kBytes[] = {0x00, 0x01, 0x07, 0x08, 0x0B, 0x0C, 0x0F, 0x7F, 0x80, 0xFE, 0xFF};
    static constexpr std::uint64_t kWords[] = {0, 1, 0xFF, 0x7FFFFFFF, 0x80000000, 0xFFFFFFFF,
                                               0x100000000ull, 0x7FFFFFFFFFFFFFFFull, 0xFFFFFFFFFFFFFFFFull};
    switch (below(b.empty() ? 1 : 8)) {
      case 0: {  // insert random bytes
        const std::size_t at = below(b.size() + 1);
        const std::size_t n = 1 + below(8);
        Bytes ins(n);
        for (auto& x : ins) x = static_cast<std::uint8_t>(rng_());
        b.insert(b.begin() + static_cast<std::ptrdiff_t>(at), ins.begin(), ins.end());
        break;
      }
      case 1: b[below(b.size())] ^= static_cast<std::uint8_t>(1u << below(8)); break;
      case 2: b[below(b.size())] = kBytes[below(std::size(kBytes))]; break;
      case 3: {  // overwrite with an interesting length or id
        const std::uint64_t w = kWords[below(std::size(kWords))];
        const std::size_t width = below(2) ? 4 : 8;
        const std::size_t at = below(b.size());
        for (std::size_t i = 0; i < width && at + i < b.size(); ++i) b[at + i] = static_cast<std::uint8_t>(w >> (8 * i));
        break;
      }
      case 4: {  // delete a range
        const std::size_t at = below(b.size());
        const std::size_t n = 1 + below(std::min<std::size_t>(16, b.size() - at));
        b.erase(b.begin() + static_cast<std::ptrdiff_t>(at), b.begin() + static_cast<std::ptrdiff_t>(at + n));
        break;
      }
      case 5: {  // duplicate a range
        const std::size_t at = below(b.size());
        const std::size_t n = 1 + below(std::min<std::size_t>(32, b.size() - at));
        Bytes dup(b.begin() + static_cast<std::ptrdiff_t>(at), b.begin() + static_cast<std::ptrdiff_t>(at + n));
        b.insert(b.begin() + static_cast<std::ptrdiff_t>(at), dup.begin(), dup.end());
        break;
      }
      case 6: b.resize(below(b.size())); break;
      default: {  // splice the tail of another entry
        const Bytes& other = corpus_[below(corpus_.size())];
        if (other.empty()) break;
        const std::size_t cut = below(b.size());
        const std::size_t from = below(other.size());
        b.resize(cut);
        b.insert(b.end(), other.begin() + static_cast<std::ptrdiff_t>(from), other.end());
      }
    }
  }

  const std::vector<Bytes>& corpus_;
  std::mt19937_64 rng_;
  std::size_t max_size_;
};

}  // namespace

std::vector<Bytes> load_corpus(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".hex") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<Bytes> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_golden_file(f).bytes);
  return out;
}

FuzzReport fuzz_decoder(const std::vector<Bytes>& corpus, const FuzzOptions& options) {
  FuzzReport report;
  Mutator mutator(corpus, options.seed, options.max_input_size);
  const bool track_alloc = options.reset_allocation_peak && options.allocation_peak;
  const auto deadline = Clock::now() + options.budget;
  // The unmutated corpus goes first.
  std::size_t seeded = 0;
  while (seeded < corpus.size() || Clock::now() < deadline) {
    Bytes input = seeded < corpus.size() ? corpus[seeded++] : mutator.next();
    const std::size_t chunk = mutator.chunk();
    for (int mode = 0; mode < 2; ++mode) {
      if (track_alloc) options.reset_allocation_peak();
      const auto t0 = Clock::now();
      try {
        const Probe p = mode == 0 ? probe_value(input, chunk) : probe_frame(input, chunk);
        if (p.outcome == Outcome::Accepted) {
          ++report.accepted;
        } else {
          ++report.rejected;
          ++report.rejection_kinds[p.rejection];
        }
      } catch (const std::logic_error& e) {
        report.findings.push_back({"noncanonical", e.what(), input});
      } catch (const std::exception& e) {
        report.findings.push_back({"exception", fmt::format("{} decoder: {}", mode ? "frame" : "value", e.what()), input});
      }
      const auto elapsed = Clock::now() - t0;
      ++report.executions;
      if (elapsed > options.hang_limit)
        report.findings.push_back(
            {"hang",
             fmt::format("{} ms", std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count()),
             input});
      if (track_alloc) {
        const std::size_t peak = options.allocation_peak();
        if (peak > options.allocation_cap)
          report.findings.push_back({"allocation", fmt::format("{} bytes in one allocation", peak), input});
      }
    }
  }
  return report;
}

TruncationReport check_truncations(const std::vector<Bytes>& corpus) {
  TruncationReport report;
  // Returns whether the whole input was consumed.
  auto run = [](int mode, const Bytes& bytes, std::size_t chunk) {
    SpanSource src(bytes, chunk);
    if (mode == 0) {
      WireReader r(src);
      decode_value(r);
    } else {
      read_frame(src);
    }
    return src.exhausted();
  };
  for (const auto& entry : corpus) {
    for (int mode = 0; mode < 2; ++mode) {
      // Only the grammar that accepts the whole entry is held to prefix-freedom.
      try {
        if (!run(mode, entry, SIZE_MAX)) continue;
      } catch (const DecodeError&) {
        continue;
      }
      for (std::size_t len = 0; len < entry.size(); ++len) {
        const Bytes prefix(entry.begin(), entry.begin() + static_cast<std::ptrdiff_t>(len));
        ++report.cases;
        try {
          run(mode, prefix, 3);
          report.findings.push_back({"accepted", fmt::format("prefix of {} bytes decoded", len), prefix});
        } catch (const DecodeError& e) {
          if (e.kind() == DecodeErrorKind::PrematureEnd) {
            ++report.premature_end;
          } else {
            report.findings.push_back(
                {"wrong-error", fmt::format("{} at {}", decode_error_kind_name(e.kind()), e.offset()), prefix});
          }
        } catch (const std::exception& e) {
          report.findings.push_back({"exception", e.what(), prefix});
        }
      }
    }
  }
  return report;
}

}  // namespace bridgewire::conformance
