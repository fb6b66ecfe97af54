#pragma once

// Naive reference encoder, written straight from the byte grammar and kept
// independent of the production codec: byte-at-a-time appends, explicit
// little-endian shifts, no shared helpers. It produces the golden vectors.

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "bridgewire/wire.hpp"

namespace oracle {

using bridgewire::Value;
using Bytes = std::vector<std::uint8_t>;

inline void le(Bytes& out, std::uint64_t x, int width) {
  for (int i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>((x >> (8 * i)) & 0xFF));
}

inline void str(Bytes& out, const std::string& s) {
  le(out, s.size(), 4);
  for (unsigned char c : s) out.push_back(c);
}

inline void f64(Bytes& out, double x) { le(out, std::bit_cast<std::uint64_t>(x), 8); }
inline void f32(Bytes& out, float x) { le(out, std::bit_cast<std::uint32_t>(x), 4); }

inline void array(Bytes& out, const bridgewire::TypedArray& a) {
  using namespace bridgewire;
  out.push_back(static_cast<std::uint8_t>(a.type()));
  out.push_back(a.has_missing_bitmap() ? 1 : 0);
  out.push_back(static_cast<std::uint8_t>(a.dims().size()));
  for (auto d : a.dims()) le(out, static_cast<std::uint64_t>(d), 8);
  const std::size_t n = a.size();
  if (a.has_missing_bitmap()) {
    // Recomputed from is_missing rather than copied from the stored bitmap.
    for (std::size_t byte = 0; byte < (n + 7) / 8; ++byte) {
      std::uint8_t b = 0;
      for (std::size_t bit = 0; bit < 8; ++bit) {
        const std::size_t i = byte * 8 + bit;
        if (i < n && a.is_missing(i)) b |= static_cast<std::uint8_t>(1u << bit);
      }
      out.push_back(b);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const bool miss = a.is_missing(i);
    switch (a.type()) {
      case ElemType::F64: f64(out, miss ? 0.0 : a.as<double>()[i]); break;
      case ElemType::F32: f32(out, miss ? 0.0f : a.as<float>()[i]); break;
      case ElemType::I64: le(out, miss ? 0 : static_cast<std::uint64_t>(a.as<std::int64_t>()[i]), 8); break;
      case ElemType::I32:
        le(out, miss ? 0 : static_cast<std::uint32_t>(a.as<std::int32_t>()[i]), 4);
        break;
      case ElemType::I16:
        le(out, miss ? 0 : static_cast<std::uint16_t>(a.as<std::int16_t>()[i]), 2);
        break;
      case ElemType::I8: out.push_back(miss ? 0 : static_cast<std::uint8_t>(a.as<std::int8_t>()[i])); break;
      case ElemType::U8: out.push_back(miss ? 0 : a.as<std::uint8_t>()[i]); break;
      case ElemType::Bool: out.push_back(miss ? 0 : (a.as<Bool>()[i] == Bool::True ? 1 : 0)); break;
      case ElemType::String: str(out, miss ? std::string() : a.as<std::string>()[i]); break;
      case ElemType::C128: {
        const auto z = miss ? std::complex<double>() : a.as<std::complex<double>>()[i];
        f64(out, z.real());
        f64(out, z.imag());
        break;
      }
      case ElemType::C64: {
        const auto z = miss ? std::complex<float>() : a.as<std::complex<float>>()[i];
        f32(out, z.real());
        f32(out, z.imag());
        break;
      }
    }
  }
}

inline void value(Bytes& out, const Value& v);

inline void fields(Bytes& out, const std::vector<bridgewire::Field>& fs) {
  le(out, fs.size(), 4);
  for (const auto& f : fs) {
    str(out, f.name);
    value(out, f.value);
  }
}

inline void value(Bytes& out, const Value& v) {
  using namespace bridgewire;
  if (v.is<Null>()) {
    out.push_back(0x00);
  } else if (v.is<TypedArray>()) {
    out.push_back(0x01);
    array(out, v.as<TypedArray>());
  } else if (v.is<List>()) {
    out.push_back(0x02);
    le(out, v.as<List>().items.size(), 4);
    for (const auto& item : v.as<List>().items) value(out, item);
  } else if (v.is<NamedList>()) {
    out.push_back(0x03);
    fields(out, v.as<NamedList>().entries);
  } else if (v.is<Struct>()) {
    out.push_back(0x04);
    str(out, v.as<Struct>().type_name);
    fields(out, v.as<Struct>().fields);
  } else if (v.is<Ref>()) {
    out.push_back(0x05);
    le(out, v.as<Ref>().id, 8);
    str(out, v.as<Ref>().type_name);
  } else if (v.is<FnRef>()) {
    out.push_back(0x06);
    const auto& f = v.as<FnRef>();
    if (f.kind == FnKind::Named) {
      out.push_back(0x00);
      str(out, f.name);
    } else if (f.kind == FnKind::Callback) {
      out.push_back(0x01);
      le(out, f.callback_id, 8);
    } else {
      out.push_back(0x02);
      str(out, f.name);
    }
  } else {
    out.push_back(0x07);
    const auto& t = v.as<Table>();
    le(out, t.columns.size(), 4);
    for (const auto& c : t.columns) {
      str(out, c.name);
      out.push_back(0x01);
      array(out, c.data);
    }
  }
}

inline Bytes encode(const Value& v) {
  Bytes out;
  value(out, v);
  return out;
}

inline Bytes encode(const bridgewire::Frame& f) {
  using namespace bridgewire;
  Bytes out;
  if (const auto* c = std::get_if<CallFrame>(&f)) {
    out.push_back(0x01);
    if (c->callee.kind == CalleeKind::Named) {
      out.push_back(0x00);
      str(out, c->callee.name);
    } else {
      out.push_back(c->callee.kind == CalleeKind::Reference ? 0x01 : 0x02);
      le(out, c->callee.id, 8);
    }
    le(out, c->positional.size(), 4);
    for (const auto& a : c->positional) value(out, a);
    fields(out, c->named);
  } else if (const auto* r = std::get_if<ResultFrame>(&f)) {
    out.push_back(0x02);
    value(out, r->value);
  } else if (const auto* x = std::get_if<FailFrame>(&f)) {
    out.push_back(0x03);
    str(out, x->message);
    str(out, x->detail);
  } else if (const auto* rel = std::get_if<ReleaseFrame>(&f)) {
    out.push_back(0x04);
    le(out, rel->id, 8);
  } else if (const auto* e = std::get_if<EvalFrame>(&f)) {
    out.push_back(0x05);
    str(out, e->expression);
  } else if (const auto* l = std::get_if<LetFrame>(&f)) {
    out.push_back(0x06);
    str(out, l->expression);
    fields(out, l->bindings);
  } else if (const auto* fe = std::get_if<FetchFrame>(&f)) {
    out.push_back(0x07);
    le(out, fe->id, 8);
  } else if (const auto* p = std::get_if<PutFrame>(&f)) {
    out.push_back(0x08);
    value(out, p->value);
  } else if (const auto* s = std::get_if<ScanFrame>(&f)) {
    out.push_back(0x09);
    str(out, s->module_path);
    out.push_back(s->include_unexported ? 1 : 0);
  } else if (const auto* o = std::get_if<OutputFrame>(&f)) {
    out.push_back(o->channel == Channel::Out ? 0x50 : 0x51);
    str(out, o->chunk);
  } else {
    out.push_back(0x0F);
  }
  return out;
}

}  // namespace oracle
