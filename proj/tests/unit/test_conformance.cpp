#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "alloc_tracker.hpp"
#include "bridgewire/conformance/fuzz.hpp"
#include "bridgewire/conformance/generator.hpp"
#include "bridgewire/conformance/golden.hpp"
#include "bridgewire/conformance/text_baseline.hpp"
#include "bridgewire/wire.hpp"

using namespace bridgewire;
using namespace bridgewire::conformance;

namespace {

void collect(const Value& v, std::set<Tag>& tags, std::set<std::pair<Tag, ElemType>>& pairs, std::size_t depth,
             std::size_t& max_depth) {
  max_depth = std::max(max_depth, depth);
  tags.insert(v.tag());
  if (const auto* a = v.get_if<TypedArray>()) pairs.insert({Tag::Array, a->type()});
  if (const auto* l = v.get_if<List>())
    for (const auto& x : l->items) collect(x, tags, pairs, depth + 1, max_depth);
  if (const auto* n = v.get_if<NamedList>())
    for (const auto& f : n->entries) collect(f.value, tags, pairs, depth + 1, max_depth);
  if (const auto* s = v.get_if<Struct>())
    for (const auto& f : s->fields) collect(f.value, tags, pairs, depth + 1, max_depth);
  if (const auto* t = v.get_if<Table>())
    for (const auto& c : t->columns) pairs.insert({Tag::Table, c.data.type()});
}

}  // namespace

TEST_CASE("generator is deterministic per seed") {
  ValueGenerator a({.seed = 42});
  ValueGenerator b({.seed = 42});
  ValueGenerator c({.seed = 43});
  bool differs = false;
  for (int i = 0; i < 200; ++i) {
    const Value x = a.next();
    CHECK(x == b.next());
    if (!(x == c.next())) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("depth 0 yields only leaves") {
  ValueGenerator g({.max_depth = 0, .seed = 1});
  for (int i = 0; i < 500; ++i) {
    const Value v = g.next();
    CHECK(v.tag() != Tag::List);
    CHECK(v.tag() != Tag::NamedList);
    CHECK(v.tag() != Tag::Struct);
  }
}

TEST_CASE("generated values are well-formed and respect the depth bound") {
  ValueGenerator g({.max_depth = 3, .seed = 2});
  for (int i = 0; i < 2000; ++i) {
    const Value v = g.next();
    CHECK_NOTHROW(validate(v));
    std::set<Tag> tags;
    std::set<std::pair<Tag, ElemType>> pairs;
    std::size_t depth = 0;
    collect(v, tags, pairs, 0, depth);
    CHECK(depth <= 3);
  }
}

TEST_CASE("10^4 samples cover every tag and every legal (tag, element type) pair") {
  ValueGenerator g({.seed = 1});
  std::set<Tag> tags;
  std::set<std::pair<Tag, ElemType>> pairs;
  std::size_t depth = 0;
  for (int i = 0; i < 10000; ++i) collect(g.next(), tags, pairs, 0, depth);
  CHECK(tags.size() == 8);
  for (std::uint8_t code = 1; code <= 11; ++code) {
    CHECK(pairs.count({Tag::Array, static_cast<ElemType>(code)}) == 1);
    CHECK(pairs.count({Tag::Table, static_cast<ElemType>(code)}) == 1);
  }
}

TEST_CASE("text baseline keeps exact decimals") {
  const Value v = TypedArray::vector<double>({1.0, 2.0, 3.0});
  CHECK(to_text(v) == R"({"t":"array","type":"Float64","dims":[3],"data":[1,2,3]})");
  CHECK(text_roundtrip(v) == v);
}

TEST_CASE("text baseline distinguishes missing from NaN") {
  auto a = TypedArray::vector<double>({1.0, 0.0, std::numeric_limits<double>::quiet_NaN()});
  a.set_missing(1);
  const auto text = to_text(a);
  CHECK(text.find("[1,null,\"NaN\"]") != std::string::npos);
  const auto back = from_text(text).as<TypedArray>();
  CHECK(back.is_missing(1));
  CHECK_FALSE(back.is_missing(2));
  CHECK(std::isnan(back.as<double>()[2]));
}

TEST_CASE("text baseline round-trips generated data values within one ulp") {
  ValueGenerator g({.include_references = false, .seed = 9});
  for (int i = 0; i < 3000; ++i) {
    const Value v = g.next();
    const Value back = text_roundtrip(v);
    if (!approx_equal(v, back)) {
      CAPTURE(to_text(v));
      FAIL("text round trip differs");
    }
  }
}

TEST_CASE("text baseline rejects references and malformed text") {
  CHECK_THROWS_AS(to_text(Ref{2, "M.T"}), TextFormatError);
  CHECK_THROWS_AS(to_text(FnRef::named("Base.sqrt")), TextFormatError);
  CHECK_THROWS_AS(from_text(R"({"t":"array","type":"Float64","dims":[2],"data":[1]})"), TextFormatError);
  CHECK_THROWS_AS(from_text(R"({"t":"array","type":"Float64","dims":[1],"data":[null]})"), TextFormatError);
  CHECK_THROWS_AS(from_text(R"({"t":"null"} )"), TextFormatError);
}

TEST_CASE("approx_equal tolerates exactly one ulp") {
  const double x = 0.1;
  const Value a = TypedArray::scalar(x);
  CHECK(approx_equal(a, TypedArray::scalar(std::nextafter(x, 1.0))));
  CHECK_FALSE(approx_equal(a, TypedArray::scalar(std::nextafter(std::nextafter(x, 1.0), 1.0))));
}

TEST_CASE("unmutated golden corpus decodes without findings") {
  const auto corpus = load_corpus(GOLDEN_DIR);
  REQUIRE(corpus.size() == golden_cases().size());
  FuzzOptions o;
  o.budget = std::chrono::milliseconds(0);
  auto r = fuzz_decoder(corpus, o);
  CHECK(r.findings.empty());
  o.budget = std::chrono::milliseconds(300);
  o.reset_allocation_peak = testsupport::reset_allocation_peak;
  o.allocation_peak = testsupport::allocation_peak;
  r = fuzz_decoder(corpus, o);
  CHECK(r.executions > 2 * corpus.size());
  CHECK(r.accepted > 0);
  CHECK(r.rejected > 0);
  for (const auto& f : r.findings) {
    CAPTURE(f.kind);
    CAPTURE(f.detail);
    CHECK(false);
  }
}

TEST_CASE("every truncation is a premature-end error") {
  const auto r = check_truncations(load_corpus(GOLDEN_DIR));
  CHECK(r.cases > 500);
  CHECK(r.premature_end == r.cases);
  CHECK(r.findings.empty());
}

TEST_CASE("allocation probe flags a claimed-but-absent payload only above the cap") {
  // 2^31 - 1 F64 elements claimed, none present.
  const Bytes b = {0x01, 0x01, 0x00, 0x01, 0xFF, 0xFF, 0xFF, 0x7F, 0, 0, 0, 0};
  FuzzOptions o;
  o.budget = std::chrono::milliseconds(0);
  o.reset_allocation_peak = testsupport::reset_allocation_peak;
  o.allocation_peak = testsupport::allocation_peak;
  CHECK(fuzz_decoder({b}, o).findings.empty());
  o.allocation_cap = 1024;
  CHECK_FALSE(fuzz_decoder({b}, o).findings.empty());
}
