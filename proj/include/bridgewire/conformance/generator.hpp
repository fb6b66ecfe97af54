#pragma once

/// @file generator.hpp
/// @brief Seeded random generator of well-formed wire values.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bridgewire/value.hpp"

namespace bridgewire::conformance {

struct GeneratorConfig {
  /// Container nesting allowed below the root; 0 yields leaves only.
  std::size_t max_depth = 3;
  std::size_t max_array_length = 8;
  /// Relative weight per element type, indexed by code - 1.
  std::array<double, 11> elem_weights{1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  /// Chance that an array carries a missing bitmap.
  double bitmap_probability = 0.3;
  /// Chance that an element of an array with a bitmap is missing.
  double missing_probability = 0.3;
  /// REF and FNREF leaves; off for the text baseline.
  bool include_references = true;
  /// Names drawn for STRUCT and REF types; must be qualified names.
  std::vector<std::string> type_names = {"Library.Book", "Main.Point", "M.T", "Flux.Dense", "Base.Box"};
  std::uint64_t seed = 1;
};

class ValueGenerator {
 public:
  explicit ValueGenerator(GeneratorConfig config = {});

  Value next();
  TypedArray array(ElemType type, std::vector<std::int64_t> dims);
  TypedArray random_array(bool one_dimensional);

 private:
  Value gen(std::size_t depth_left);
  std::string random_string();
  std::string random_name(bool allow_empty);
  ElemType random_elem_type();
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  GeneratorConfig config_;
  std::mt19937_64 rng_;
  std::discrete_distribution<int> elem_dist_;
};

}  // namespace bridgewire::conformance
