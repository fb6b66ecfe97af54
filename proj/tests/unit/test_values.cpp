#include <doctest.h>

#include <cmath>
#include <limits>

#include "bridgewire/alias.hpp"
#include "bridgewire/conformance/generator.hpp"
#include "bridgewire/object.hpp"
#include "bridgewire/runtime/builtins.hpp"
#include "bridgewire/runtime/server.hpp"
#include "bridgewire/translate.hpp"
#include "support/type_rows.hpp"

using namespace bridgewire;

namespace {

const TypedArray& arr(const Value& v) { return v.as<TypedArray>(); }

using testsupport::boxed;
using testsupport::inbound_rows;

}  // namespace

// Host to wire.

TEST_CASE("integer vectors travel as I32") {
  const Value v = translate_outbound(HostVector::of(std::vector<std::int32_t>{1, 2}));
  CHECK(arr(v).type() == ElemType::I32);
  CHECK(arr(v).dims() == std::vector<std::int64_t>{2});
}

TEST_CASE("double matrices keep their dims") {
  HostVector m = HostVector::of(std::vector<double>{1, 2, 3, 4});
  m.set_dim({2, 2});
  const Value v = translate_outbound(m);
  CHECK(arr(v).type() == ElemType::F64);
  CHECK(arr(v).dims() == std::vector<std::int64_t>{2, 2});
}

TEST_CASE("each outbound row yields its element type") {
  for (const auto& row : testsupport::outbound_rows()) {
    CAPTURE(row.name);
    CHECK(arr(translate_outbound(row.host)).type() == row.wire);
  }
}

TEST_CASE("basic host types map to their element types") {
  CHECK(arr(translate_outbound(HostValue(true))).type() == ElemType::Bool);
  CHECK(arr(translate_outbound(HostValue("s"))).type() == ElemType::String);
  CHECK(arr(translate_outbound(HostValue(std::complex<double>(1, 2)))).type() == ElemType::C128);
  CHECK(arr(translate_outbound(HostVector::raw({1, 2}))).type() == ElemType::U8);
  CHECK(arr(translate_outbound(HostValue(1.5))).type() == ElemType::F64);
}

TEST_CASE("length-one vectors without dims become scalars") {
  CHECK(arr(translate_outbound(HostValue(1.5))).is_scalar());
  HostVector one = HostVector::of(std::vector<double>{1.5});
  one.set_dim({1});
  CHECK(arr(translate_outbound(one)).dims() == std::vector<std::int64_t>{1});
}

TEST_CASE("NA sets the bitmap while NaN stays a payload") {
  const Value v = translate_outbound(HostVector::doubles({1.0, NA, std::numeric_limits<double>::quiet_NaN()}));
  CHECK_FALSE(arr(v).is_missing(0));
  CHECK(arr(v).is_missing(1));
  CHECK_FALSE(arr(v).is_missing(2));
  CHECK(std::isnan(arr(v).as<double>()[2]));
}

TEST_CASE("unsupported type attributes are rejected") {
  HostVector v = HostVector::of(std::vector<double>{1});
  v.set_type_attr("Main.Nope");
  CHECK_THROWS_AS(translate_outbound(v), TranslationError);
}

// Wire to host, one case per row.


TEST_CASE("each inbound row yields its host type and exactly its annotation") {
  for (const auto& row : inbound_rows()) {
    CAPTURE(row.name);
    REQUIRE_NOTHROW(validate(row.wire));
    const HostValue h = translate_inbound(row.wire);
    REQUIRE(h.is<HostVector>());
    CHECK(h.as<HostVector>().type() == row.host);
    CHECK(h.as<HostVector>().type_attr() == row.attr);
  }
}

TEST_CASE("annotated rows translate back to the identical wire value") {
  for (const auto& row : inbound_rows()) {
    if (!row.attr) continue;
    CAPTURE(row.name);
    CHECK(translate_outbound(translate_inbound(row.wire)) == row.wire);
  }
}

TEST_CASE("large Int64 values become doubles") {
  const HostValue h = translate_inbound(TypedArray::scalar(std::int64_t{1} << 40));
  CHECK(h.as_double() == 1099511627776.0);
}

TEST_CASE("structs become annotated records") {
  const Value book = Struct{"Main.MyLibrary.Book",
                            {{"author", TypedArray::scalar(std::string("Shakespeare"))},
                             {"title", TypedArray::scalar(std::string("Romeo and Julia"))},
                             {"year", TypedArray::scalar(std::int64_t{1597})}}};
  const HostValue h = translate_inbound(book);
  const auto& rec = h.as<HostRecord>();
  CHECK(rec.type_attr == "Main.MyLibrary.Book");
  REQUIRE(rec.fields.size() == 3);
  CHECK(rec.fields[0].name == "author");
  CHECK(rec.find("year")->as_int() == 1597);
  // Only the Int64 narrowing is lost on the way back.
  CHECK(translate_outbound(h).as<Struct>().type_name == "Main.MyLibrary.Book");
}

TEST_CASE("missing and NaN survive a host round trip") {
  auto a = TypedArray::vector<double>({1.0, 0.0, std::numeric_limits<double>::quiet_NaN()});
  a.set_missing(1);
  const HostValue h = translate_inbound(a);
  CHECK(h.as<HostVector>().is_na(1));
  CHECK_FALSE(h.as<HostVector>().is_na(2));
  CHECK(translate_outbound(h) == Value(a));
}

TEST_CASE("named lists and tables keep their order") {
  const Value nl = NamedList{{{"z", Null{}}, {"a", Null{}}, {"m", Null{}}}};
  CHECK(translate_outbound(translate_inbound(nl)) == nl);
  const Value t = Table{{{"z", TypedArray::vector<double>({1})}, {"a", TypedArray::vector<std::string>({"x"})}}};
  const HostValue h = translate_inbound(t);
  CHECK(h.as<HostTable>().columns[0].first == "z");
  CHECK(translate_outbound(h) == t);
}

// Result classification.

TEST_CASE("results are classified by shape") {
  using rt::make;
  CHECK(rt::classify_result(*make(TypedArray::vector<double>({1, 2, 3}))) == rt::ResultMode::Full);
  CHECK(rt::classify_result(*make(Null{})) == rt::ResultMode::Full);
  CHECK(rt::classify_result(*make(TypedArray::scalar(std::string("s")))) == rt::ResultMode::Full);
  const auto nested = make(rt::ListObj{{make(TypedArray::vector<std::int64_t>({1, 2})),
                                        make(TypedArray::vector<std::int64_t>({3, 4}))}});
  CHECK(rt::classify_result(*nested) == rt::ResultMode::Proxy);
  CHECK(rt::classify_result(*make(Table{})) == rt::ResultMode::Proxy);
  CHECK(rt::classify_result(*make(rt::StructObj{"Library.Book", {}})) == rt::ResultMode::Proxy);
  CHECK(rt::classify_result(*make(rt::ResourceObj{"file"})) == rt::ResultMode::Proxy);
}

// Deep translation.

TEST_CASE("deep translation of a plain vector is the vector") {
  const auto v = TypedArray::vector<double>({1, 2});
  CHECK(rt::deep_translate(rt::make(v)) == Value(v));
}

TEST_CASE("deep translation reports cycles and resources with a path") {
  using rt::make;
  auto box = make(rt::StructObj{"Base.Box", {{"contents", make(Null{})}}, true});
  box->as<rt::StructObj>().fields[0].value = make(rt::ListObj{{box}});
  try {
    rt::deep_translate(box);
    FAIL("cycle not detected");
  } catch (const rt::DeepTranslationError& e) {
    CHECK(e.path().find("contents") != std::string::npos);
  }
  box->as<rt::StructObj>().fields[0].value = make(rt::ResourceObj{"socket"});
  CHECK_THROWS_AS(rt::deep_translate(box), rt::DeepTranslationError);
}

TEST_CASE("reconstruct inverts deep translation for generated values") {
  const auto modules = rt::default_modules();
  rt::ObjectRegistry registry;
  conformance::ValueGenerator gen({.max_depth = 4,
                                   .include_references = false,
                                   .type_names = {"Main.Point", "M.T", "Flux.Dense"},
                                   .seed = 3});
  for (int i = 0; i < 1000; ++i) {
    const Value v = gen.next();
    const auto obj = rt::reconstruct(v, modules, registry);
    const auto again = rt::reconstruct(rt::deep_translate(obj), modules, registry);
    if (!rt::structurally_equal(obj, again)) {
      CAPTURE(debug_string(v));
      FAIL("reconstruct(deep_translate(x)) != x");
    }
  }
}

// Aliases.

TEST_CASE("ascii aliases") {
  CHECK(ascii_alias("logσ") == "log<sigma>");
  CHECK(ascii_alias("mean") == "mean");
  CHECK(ascii_alias("f♯") == "f<u266f>");
  CHECK(ascii_alias("∇f") == "<nabla>f");
}

TEST_CASE("qualified type names admit parameter lists") {
  CHECK(is_qualified_name("Main.MyLibrary.Book"));
  CHECK(is_qualified_name("Complex{Int64}"));
  CHECK(is_qualified_name("A.B{C.D, 3}"));
  CHECK_FALSE(is_qualified_name("Complex{"));
  CHECK_FALSE(is_qualified_name("a..b"));
  CHECK_FALSE(is_qualified_name(""));
  CHECK_FALSE(is_qualified_name("A{}"));
}
