// Regenerates tests/golden from the reference encoder. Run only when the
// format deliberately changes; the suite compares the codec against these.

#include <fstream>
#include <iostream>

#include "bridgewire/conformance/golden.hpp"
#include "oracle/reference_encoder.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_golden <dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);
  for (const auto& c : bridgewire::conformance::golden_cases()) {
    const auto bytes = std::visit([](const auto& item) { return oracle::encode(item); }, c.item);
    std::ofstream(dir / (c.name + ".hex")) << bridgewire::conformance::format_golden_file(c.description, bytes);
  }
  std::cout << bridgewire::conformance::golden_cases().size() << " vectors written to " << dir << '\n';
  return 0;
}
