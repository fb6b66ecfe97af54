#include <doctest.h>

#include <cmath>

#include "bridgewire/runtime/ast.hpp"
#include "bridgewire/runtime/builtins.hpp"
#include "bridgewire/runtime/server.hpp"

using namespace bridgewire;
using namespace bridgewire::rt;

namespace {

class TestContext final : public CallContext {
 public:
  TestContext() : modules_(default_modules()) {}
  const ModuleTable& modules() const override { return modules_; }
  ObjectPtr invoke_callback(std::uint64_t id, const std::vector<ObjectPtr>&,
                            const std::vector<NamedObject>&) override {
    throw EvalError("no client in this test (callback " + std::to_string(id) + ")");
  }
  void emit(Channel c, std::string chunk) override { (c == Channel::Out ? out : err) += chunk; }
  bool cancelled() override { return cancel; }
  std::size_t registry_size() const override { return 0; }

  std::string out, err;
  bool cancel = false;

 private:
  ModuleTable modules_;
};

ObjectPtr run(std::string_view src, TestContext& ctx, const std::vector<NamedObject>& bindings = {}) {
  return eval_expression(src, bindings, ctx);
}

std::string show(std::string_view src) {
  TestContext ctx;
  return display_string(*run(src, ctx));
}

std::string error_of(std::string_view src) {
  TestContext ctx;
  try {
    run(src, ctx);
  } catch (const std::exception& e) {
    return e.what();
  }
  return "no error";
}

}  // namespace

TEST_CASE("parser reports positions") {
  try {
    parse("Base.sqrt(");
    FAIL("parsed");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 11);
  }
  CHECK_THROWS_AS(parse("1 +"), ParseError);
  CHECK_THROWS_AS(parse("\"unterminated"), ParseError);
  CHECK_THROWS_AS(parse("f(;)"), ParseError);
}

TEST_CASE("arithmetic follows the usual precedence") {
  CHECK(show("1 + 2 * 3") == "7");
  CHECK(show("(1 + 2) * 3") == "9");
  CHECK(show("-2 - -3") == "1");
  CHECK(show("7 / 2") == "3.5");
  CHECK(show("2.0 * 3") == "6.0");
}

TEST_CASE("lambdas close over their scope") {
  CHECK(show("(fn(x) -> x * x)(2)") == "4");
  CHECK(show("(fn(a) -> fn(b) -> a - b)(10)(3)") == "7");
  CHECK(error_of("(fn(x) -> x)(1, 2)").find("takes 1 argument") != std::string::npos);
}

TEST_CASE("let bindings are local variables") {
  TestContext ctx;
  auto r = run("x * y", ctx, {{"x", make(TypedArray::scalar(std::int64_t{6}))}, {"y", make(TypedArray::scalar(7.0))}});
  CHECK(display_string(*r) == "42.0");
  CHECK(error_of("x").find("UndefVarError: x not defined") != std::string::npos);
}

TEST_CASE("builtins") {
  CHECK(show("Base.sqrt(4.0)") == "2.0");
  CHECK(show("Base.sqrt(missing)") == "missing");
  CHECK(show("Base.map(fn(x) -> x + 1, [1, 2, 3])") == "[2, 3, 4]");
  CHECK(show("Base.add([1.0, missing, NaN], [1, 2, 3])") == "[2.0, missing, NaN]");
  CHECK(show("Base.sum([1, 2, 3])") == "6");
  CHECK(show("Base.typeof([1, 2])") == "Array{Int64,1}");
  CHECK(show("Base.typeof(Base.Float32(1.5))") == "Float32");
  CHECK(show("Base.argmax([3, 9, 2])") == "2");
  CHECK(show("Library.cite(Library.Book(\"Shakespeare\", \"Romeo and Julia\", 1597))") ==
        "Shakespeare: Romeo and Julia (1597)");
  CHECK(show("Activations.relu(-1.0)") == "0.0");
  CHECK(std::abs(std::stod(show("Activations.σ(0.0)")) - 0.5) < 1e-15);
  CHECK(error_of("Base.sqrt(-1.0)").find("DomainError") != std::string::npos);
  CHECK(error_of("Base.add([1, 2], [1, 2, 3])").find("DimensionMismatch") != std::string::npos);
  CHECK(error_of("Base.error(\"boom\")").find("boom") != std::string::npos);
}

TEST_CASE("named arguments build tables in order") {
  CHECK(show("Base.length(Base.maketable(; b = [1, 2], a = [\"x\", \"y\"]))") == "2");
  CHECK(error_of("Base.maketable(; a = [1, 2], b = [1])").find("DimensionMismatch") != std::string::npos);
}

TEST_CASE("output goes through the context") {
  TestContext ctx;
  run("Base.println(\"hi\")", ctx);
  run("Base.warn(\"careful\")", ctx);
  CHECK(ctx.out == "hi\n");
  CHECK(ctx.err == "Warning: careful\n");
}

TEST_CASE("cancellation stops evaluation") {
  TestContext ctx;
  ctx.cancel = true;
  CHECK_THROWS_AS(run("Base.spin()", ctx), Cancelled);
}

TEST_CASE("scan lists entities in byte order with aliases") {
  const auto modules = default_modules();
  const auto lib = scan_module(modules, "Library", false);
  REQUIRE(lib.size() == 2);
  CHECK(lib[0].name == "Book");
  CHECK(lib[0].kind == EntityKind::Type);
  CHECK(lib[1].name == "cite");
  CHECK(scan_module(modules, "Library", true).size() == 3);
  const auto act = scan_module(modules, "Activations", false);
  bool found = false;
  for (const auto& s : act)
    if (s.name == "logσ") found = s.alias == "log<sigma>";
  CHECK(found);
  CHECK_THROWS_AS(scan_module(modules, "Nope", false), EvalError);
}

TEST_CASE("registry ids are even and refcounted") {
  ObjectRegistry r;
  const auto a = make(TypedArray::scalar(1.0));
  const auto b = make(TypedArray::scalar(2.0));
  const auto ra = r.add(a);
  const auto rb = r.add(b);
  CHECK(ra.id % 2 == 0);
  CHECK(rb.id % 2 == 0);
  CHECK(ra.id != rb.id);
  CHECK(r.add(a).id == ra.id);
  CHECK(r.size() == 2);
  CHECK(r.release(ra.id));
  CHECK(r.size() == 2);
  CHECK(r.release(ra.id));
  CHECK(r.size() == 1);
  CHECK_FALSE(r.release(ra.id));
  CHECK_THROWS_AS(r.get(ra.id), EvalError);
  // Released ids are not reissued.
  CHECK(r.add(a).id > rb.id);
}

TEST_CASE("reconstruct widens I32 and rebuilds known structs") {
  const auto modules = default_modules();
  ObjectRegistry reg;
  const auto o = reconstruct(TypedArray::vector<std::int32_t>({1, 2}), modules, reg);
  CHECK(o->as<TypedArray>().type() == ElemType::I64);
  const Value book = Struct{"Library.Book",
                            {{"year", TypedArray::scalar(std::int32_t{1597})},
                             {"title", TypedArray::scalar(std::string("T"))},
                             {"author", TypedArray::scalar(std::string("A"))}}};
  const auto b = reconstruct(book, modules, reg);
  CHECK(b->as<StructObj>().fields[0].name == "author");
  CHECK_THROWS_AS(reconstruct(Ref{2, "X.Y"}, modules, reg), EvalError);
}
