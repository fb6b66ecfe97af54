#pragma once

/// @file builtins.hpp
/// @brief Built-in modules and the primitive operations the evaluator uses.

#include <string>

#include "bridgewire/runtime/interpreter.hpp"

namespace bridgewire::rt {

/// Elementwise arithmetic with scalar broadcast. Integers wrap on overflow;
/// `/` always yields floats. Missing propagates per element.
ObjectPtr arith(char op, const ObjectPtr& lhs, const ObjectPtr& rhs);
ObjectPtr negate(const ObjectPtr& x);

/// Element-wise conversion; integer targets reject inexact values.
TypedArray convert_array(const TypedArray& a, ElemType to);

/// Concatenates scalars and vectors into one vector with a promoted element
/// type; falls back to a heterogeneous list when no common type exists.
ObjectPtr vcat(const std::vector<ObjectPtr>& parts);

/// Field of a struct or named tuple, or column of a table.
ObjectPtr get_field(const ObjectPtr& obj, const std::string& name);

/// Text as the runtime's print functions render it.
std::string display_string(const Object& o);

Module make_base_module();
Module make_library_module();
Module make_activations_module();

/// Base, Library and Activations.
ModuleTable default_modules();

}  // namespace bridgewire::rt
