#include "bridgewire/conformance/golden.hpp"

#include <fmt/format.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <sstream>

namespace bridgewire::conformance {

namespace {

using Vec = std::vector<std::int64_t>;

TypedArray with_missing(TypedArray a, std::initializer_list<std::size_t> idx) {
  for (auto i : idx) a.set_missing(i);
  return a;
}

std::vector<GoldenCase> build_cases() {
  std::vector<GoldenCase> c;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  c.push_back({"null", "NULL value", Value(Null{})});
  c.push_back({"f64_scalar", "scalar F64 1.0", TypedArray::scalar(1.0)});
  c.push_back({"f64_vector_missing", "F64 vector [1.0, missing, 3.0]",
               with_missing(TypedArray::vector<double>({1.0, 0.0, 3.0}), {1})});
  c.push_back({"f64_missing_vs_nan", "F64 vector [1.0, missing, NaN]",
               with_missing(TypedArray::vector<double>({1.0, 0.0, nan}), {1})});
  c.push_back({"f64_empty", "empty F64 vector", TypedArray::vector<double>({})});
  c.push_back({"f32_vector", "F32 vector [1.5, -0.0, Inf]",
               TypedArray::vector<float>({1.5f, -0.0f, std::numeric_limits<float>::infinity()})});
  c.push_back({"i64_matrix", "I64 2x3 matrix, column-major 1..6",
               TypedArray(std::vector<std::int64_t>{1, 2, 3, 4, 5, 6}, Vec{2, 3})});
  c.push_back({"i32_vector_missing", "I32 vector [7, missing, -1]",
               with_missing(TypedArray::vector<std::int32_t>({7, 0, -1}), {1})});
  c.push_back({"i16_vector", "I16 vector [-32768, 32767]", TypedArray::vector<std::int16_t>({-32768, 32767})});
  c.push_back({"i8_vector", "I8 vector [-128, 0, 127]", TypedArray::vector<std::int8_t>({-128, 0, 127})});
  c.push_back({"u8_vector", "U8 vector [0, 255, 16]", TypedArray::vector<std::uint8_t>({0, 255, 16})});
  c.push_back({"bool_vector_missing", "BOOL vector over nine elements with missing 3rd and 9th",
               with_missing(TypedArray::vector<Bool>({Bool::True, Bool::False, Bool::False, Bool::True, Bool::True,
                                                      Bool::False, Bool::True, Bool::True, Bool::False}),
                            {2, 8})});
  c.push_back({"string_vector", "STRING vector [\"a\", missing, \"σ日\", \"\"]",
               with_missing(TypedArray::vector<std::string>({"a", "", "σ日", ""}), {1})});
  c.push_back({"c128_scalar", "C128 scalar 1.0 - 2.0im", TypedArray::scalar(std::complex<double>(1.0, -2.0))});
  c.push_back({"c64_vector", "C64 vector [0.5 + 0.25im, missing]",
               with_missing(TypedArray::vector<std::complex<float>>({{0.5f, 0.25f}, {0.0f, 0.0f}}), {1})});
  c.push_back({"list_mixed", "LIST [NULL, 1.0, [\"x\"]]",
               List{{Null{}, TypedArray::scalar(1.0), List{{TypedArray::vector<std::string>({"x"})}}}}});
  {
    // Four levels of NamedList with arrays of several types at each level.
    NamedList inner{{{"leaf", TypedArray::vector<std::int64_t>({1, 2})},
                     {"flag", TypedArray::scalar(Bool::True)}}};
    NamedList level3{{{"c", inner}, {"s", TypedArray::vector<std::string>({"deep"})}}};
    NamedList level2{{{"b", level3}, {"m", with_missing(TypedArray::vector<float>({1.0f, 0.0f}), {1})}}};
    NamedList level1{{{"a", level2}, {"x", TypedArray(std::vector<double>{1, 2, 3, 4}, Vec{2, 2})}, {"", Null{}}}};
    c.push_back({"namedlist_depth4", "NAMEDLIST nested four deep with mixed arrays", level1});
  }
  c.push_back({"struct_book", "STRUCT Library.Book(author, title, year)",
               Struct{"Library.Book",
                      {{"author", TypedArray::scalar(std::string("Shakespeare"))},
                       {"title", TypedArray::scalar(std::string("Romeo and Julia"))},
                       {"year", TypedArray::scalar(std::int64_t{1597})}}}});
  c.push_back({"ref", "REF id 2 of type Main.Model", Ref{2, "Main.Model"}});
  c.push_back({"fnref_named", "FNREF named Base.sqrt", FnRef::named("Base.sqrt")});
  c.push_back({"fnref_callback", "FNREF callback id 3", FnRef::callback(3)});
  c.push_back({"fnref_type", "FNREF type constructor Library.Book", FnRef::type_constructor("Library.Book")});
  c.push_back({"table", "TABLE x: I64 [1, 2, 3], name: STRING [\"a\", missing, \"c\"]",
               Table{{{"x", TypedArray::vector<std::int64_t>({1, 2, 3})},
                      {"name", with_missing(TypedArray::vector<std::string>({"a", "", "c"}), {1})}}}});

  c.push_back({"frame_call_sqrt", "CALL Base.sqrt(4.0)",
               Frame(CallFrame{Callee::named("Base.sqrt"), {TypedArray::scalar(4.0)}, {}})});
  c.push_back({"frame_call_named_args", "CALL Base.maketable(x = [1, 2]) with a named argument",
               Frame(CallFrame{Callee::named("Base.maketable"), {},
                               {{"x", TypedArray::vector<std::int64_t>({1, 2})}}})});
  c.push_back({"frame_call_reference", "CALL on reference 4 with one callback argument",
               Frame(CallFrame{Callee::reference(4), {FnRef::callback(1)}, {}})});
  c.push_back({"frame_call_callback", "CALL on callback 5 with no arguments",
               Frame(CallFrame{Callee::callback(5), {}, {}})});
  c.push_back({"frame_result", "RESULT scalar F64 2.0", Frame(ResultFrame{TypedArray::scalar(2.0)})});
  c.push_back({"frame_fail", "FAIL with message and detail",
               Frame(FailFrame{"DomainError: sqrt of negative number", "at Base.sqrt"})});
  c.push_back({"frame_release", "RELEASE id 7", Frame(ReleaseFrame{7})});
  c.push_back({"frame_eval", "EVAL fn(x) -> x * x", Frame(EvalFrame{"fn(x) -> x * x"})});
  c.push_back({"frame_let", "LET x * y with bindings x = 2, y = 3.5",
               Frame(LetFrame{"x * y", {{"x", TypedArray::scalar(std::int64_t{2})}, {"y", TypedArray::scalar(3.5)}}})});
  c.push_back({"frame_fetch", "FETCH id 2", Frame(FetchFrame{2})});
  c.push_back({"frame_put", "PUT U8 vector [1, 2]", Frame(PutFrame{TypedArray::vector<std::uint8_t>({1, 2})})});
  c.push_back({"frame_scan", "SCAN Library including unexported", Frame(ScanFrame{"Library", true})});
  c.push_back({"frame_out", "OUT chunk \"hello\\n\"", Frame(OutputFrame{Channel::Out, "hello\n"})});
  c.push_back({"frame_err", "ERR chunk \"warn\"", Frame(OutputFrame{Channel::Err, "warn"})});
  c.push_back({"frame_byebye", "BYEBYE", Frame(ByeByeFrame{})});
  return c;
}

}  // namespace

const std::vector<GoldenCase>& golden_cases() {
  static const std::vector<GoldenCase> cases = build_cases();
  return cases;
}

std::vector<std::uint8_t> encode_case(const GoldenCase& c) {
  if (const auto* v = std::get_if<Value>(&c.item)) return encode_to_bytes(*v);
  return frame_to_bytes(std::get<Frame>(c.item));
}

std::vector<std::uint8_t> parse_hex(std::string_view text) {
  std::vector<std::uint8_t> out;
  int hi = -1;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    int d;
    if (ch >= '0' && ch <= '9') d = ch - '0';
    else if (ch >= 'a' && ch <= 'f') d = ch - 'a' + 10;
    else if (ch >= 'A' && ch <= 'F') d = ch - 'A' + 10;
    else throw std::runtime_error(fmt::format("invalid hex character '{}'", ch));
    if (hi < 0) {
      hi = d;
    } else {
      out.push_back(static_cast<std::uint8_t>(hi << 4 | d));
      hi = -1;
    }
  }
  if (hi >= 0) throw std::runtime_error("odd number of hex digits");
  return out;
}

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (i) out += (i % 16 == 0) ? '\n' : ' ';
    fmt::format_to(std::back_inserter(out), "{:02x}", bytes[i]);
  }
  return out;
}

std::string format_golden_file(std::string_view description, const std::vector<std::uint8_t>& bytes) {
  return fmt::format("# {}\n{}\n", description, to_hex(bytes));
}

GoldenFile read_golden_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (!text.starts_with("# ")) throw std::runtime_error(fmt::format("{}: missing description line", path.string()));
  const auto nl = text.find('\n');
  GoldenFile f;
  f.description = text.substr(2, nl == std::string::npos ? std::string::npos : nl - 2);
  try {
    f.bytes = parse_hex(nl == std::string::npos ? std::string_view{} : std::string_view(text).substr(nl + 1));
  } catch (const std::exception& e) {
    throw std::runtime_error(fmt::format("{}: {}", path.string(), e.what()));
  }
  return f;
}

std::vector<GoldenCheck> check_golden_dir(const std::filesystem::path& dir) {
  std::vector<GoldenCheck> out;
  for (const auto& c : golden_cases()) {
    GoldenCheck r{c.name, false, {}};
    try {
      const auto file = read_golden_file(dir / (c.name + ".hex"));
      const auto encoded = encode_case(c);
      if (encoded != file.bytes) {
        std::size_t i = 0;
        while (i < encoded.size() && i < file.bytes.size() && encoded[i] == file.bytes[i]) ++i;
        r.message = fmt::format("encoding differs from golden bytes at offset {} ({} vs {} bytes)", i,
                                encoded.size(), file.bytes.size());
      } else {
        bool same;
        if (const auto* v = std::get_if<Value>(&c.item)) {
          same = decode_from_bytes(file.bytes) == *v;
        } else {
          SpanSource src(file.bytes);
          same = read_frame(src) == std::get<Frame>(c.item) && src.exhausted();
        }
        r.ok = same;
        if (!same) r.message = "decoding the golden bytes does not reproduce the value";
      }
    } catch (const std::exception& e) {
      r.message = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace bridgewire::conformance
