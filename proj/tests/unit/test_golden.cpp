#include <doctest.h>

#include <fstream>

#include "bridgewire/conformance/golden.hpp"
#include "oracle/reference_encoder.hpp"

using namespace bridgewire;
using namespace bridgewire::conformance;

TEST_CASE("reference encoder reproduces every checked-in vector") {
  for (const auto& c : golden_cases()) {
    CAPTURE(c.name);
    const auto file = read_golden_file(std::filesystem::path(GOLDEN_DIR) / (c.name + ".hex"));
    CHECK(file.description == c.description);
    const auto bytes = std::visit([](const auto& item) { return oracle::encode(item); }, c.item);
    CHECK(bytes == file.bytes);
  }
}

TEST_CASE("codec matches every golden vector in both directions") {
  for (const auto& r : check_golden_dir(GOLDEN_DIR)) {
    CAPTURE(r.name);
    CAPTURE(r.message);
    CHECK(r.ok);
  }
}

TEST_CASE("reference encoder agrees with the codec on the spec example") {
  CHECK(oracle::encode(Value(TypedArray::scalar(1.0))) ==
        std::vector<std::uint8_t>{0x01, 0x01, 0x00, 0x00, 0, 0, 0, 0, 0, 0, 0xF0, 0x3F});
}

TEST_CASE("a corrupted vector is reported by name") {
  const auto dir = std::filesystem::temp_directory_path() / "bw_golden_corrupt";
  std::filesystem::remove_all(dir);
  std::filesystem::copy(GOLDEN_DIR, dir);
  {
    std::ofstream f(dir / "f64_scalar.hex");
    f << "# scalar F64 1.0\n01 01 00 00 00 00 00 00 00 00 f0 40\n";
  }
  std::size_t failed = 0;
  for (const auto& r : check_golden_dir(dir)) {
    if (!r.ok) {
      ++failed;
      CHECK(r.name == "f64_scalar");
      CHECK(r.message.find("offset 11") != std::string::npos);
    }
  }
  CHECK(failed == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("hex parsing is whitespace-insensitive and strict about digits") {
  CHECK(parse_hex("0a 0B\n\t ff") == std::vector<std::uint8_t>{0x0A, 0x0B, 0xFF});
  CHECK_THROWS(parse_hex("0g"));
  CHECK_THROWS(parse_hex("abc"));
}
