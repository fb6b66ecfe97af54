#include "bridgewire/host_value.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cstring>

namespace bridgewire {

std::string_view host_type_name(HostType t) {
  switch (t) {
    case HostType::Integer: return "integer";
    case HostType::Double: return "double";
    case HostType::Logical: return "logical";
    case HostType::Character: return "character";
    case HostType::Complex: return "complex";
    case HostType::Raw: return "raw";
  }
  return "?";
}

namespace {

template <class T, class U = T>
HostVector build(std::initializer_list<std::optional<U>> xs) {
  std::vector<T> data;
  std::vector<bool> na;
  data.reserve(xs.size());
  for (const auto& x : xs) {
    na.push_back(!x.has_value());
    if constexpr (std::is_same_v<T, Bool>)
      data.push_back(x ? to_bool(*x) : Bool::False);
    else
      data.push_back(x ? T(*x) : T{});
  }
  HostVector v(std::move(data));
  for (std::size_t i = 0; i < na.size(); ++i)
    if (na[i]) v.set_na(i);
  return v;
}

}  // namespace

HostVector HostVector::integers(std::initializer_list<std::optional<std::int32_t>> xs) {
  return build<std::int32_t>(xs);
}
HostVector HostVector::doubles(std::initializer_list<std::optional<double>> xs) {
  return build<double>(xs);
}
HostVector HostVector::logicals(std::initializer_list<std::optional<bool>> xs) {
  return build<Bool, bool>(xs);
}
HostVector HostVector::strings(std::initializer_list<std::optional<std::string>> xs) {
  return build<std::string>(xs);
}
HostVector HostVector::complexes(std::initializer_list<std::optional<std::complex<double>>> xs) {
  return build<std::complex<double>>(xs);
}

std::size_t HostVector::size() const {
  return std::visit([](const auto& v) { return v.size(); }, data_);
}

double HostVector::as_double(std::size_t i) const {
  return std::visit(
      [i](const auto& v) -> double {
        using T = typename std::decay_t<decltype(v)>::value_type;
        if constexpr (std::is_same_v<T, double> || std::is_same_v<T, std::int32_t> ||
                      std::is_same_v<T, std::uint8_t>)
          return static_cast<double>(v.at(i));
        else if constexpr (std::is_same_v<T, Bool>)
          return from_bool(v.at(i)) ? 1.0 : 0.0;
        else
          throw std::bad_variant_access();
      },
      data_);
}

std::int32_t HostVector::as_int(std::size_t i) const {
  if (type() == HostType::Integer) return as<std::int32_t>().at(i);
  return static_cast<std::int32_t>(as_double(i));
}

bool HostVector::any_na() const { return std::find(na_.begin(), na_.end(), true) != na_.end(); }

HostVector& HostVector::set_na(std::size_t i) {
  if (i >= size()) throw ValueError("NA index out of range");
  if (na_.size() < size()) na_.resize(size(), false);
  na_[i] = true;
  std::visit([i](auto& v) { v[i] = {}; }, data_);
  return *this;
}

HostVector& HostVector::set_dim(std::vector<std::int64_t> d) {
  std::int64_t n = 1;
  for (auto x : d) {
    if (x < 0) throw ValueError("negative dimension");
    n *= x;
  }
  if (static_cast<std::size_t>(n) != size()) throw ValueError("dim does not match length");
  dim_ = std::move(d);
  return *this;
}

bool operator==(const HostVector& a, const HostVector& b) {
  if (a.data_.index() != b.data_.index() || a.dim_ != b.dim_ || a.type_attr_ != b.type_attr_ ||
      a.size() != b.size())
    return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.is_na(i) != b.is_na(i)) return false;
  return std::visit(
      [&b](const auto& av) {
        using V = std::decay_t<decltype(av)>;
        const auto& bv = std::get<V>(b.data_);
        if constexpr (std::is_same_v<V, std::vector<std::string>>)
          return av == bv;
        else
          return av.empty() ||
                 std::memcmp(av.data(), bv.data(), av.size() * sizeof(typename V::value_type)) == 0;
      },
      a.data_);
}

Proxy::Proxy(std::uint64_t id, std::string type_name, std::uint64_t epoch,
             std::weak_ptr<ReleaseQueue> queue)
    : state_(std::make_shared<const State>(id, std::move(type_name), epoch, std::move(queue))) {}

Proxy::State::~State() {
  if (auto q = queue.lock()) q->enqueue(epoch, id);
}

const HostValue* HostRecord::find(std::string_view name) const {
  for (const auto& f : fields)
    if (f.name == name) return &f.value;
  return nullptr;
}

const HostVector* HostTable::column(std::string_view name) const {
  for (const auto& [n, c] : columns)
    if (n == name) return &c;
  return nullptr;
}

HostFunction HostFunction::positional(std::function<HostValue(const HostArgs&)> fn) {
  return HostFunction([fn = std::move(fn)](const HostArgs& args, const HostNamedArgs& named) {
    if (!named.empty()) throw std::invalid_argument("function takes no named arguments");
    return fn(args);
  });
}

HostValue HostFunction::operator()(const HostArgs& args, const HostNamedArgs& named) const {
  return (*fn_)(args, named);
}

bool operator==(const HostValue& a, const HostValue& b) { return a.v_ == b.v_; }

namespace {

std::string format_vector(const HostVector& v) {
  std::vector<std::string> parts;
  const auto n = v.size();
  std::visit(
      [&](const auto& data) {
        using T = typename std::decay_t<decltype(data)>::value_type;
        for (std::size_t i = 0; i < n; ++i) {
          if (v.is_na(i)) {
            parts.emplace_back("NA");
          } else if constexpr (std::is_same_v<T, std::string>) {
            parts.push_back(fmt::format("\"{}\"", data[i]));
          } else if constexpr (std::is_same_v<T, Bool>) {
            parts.emplace_back(from_bool(data[i]) ? "TRUE" : "FALSE");
          } else if constexpr (std::is_same_v<T, std::complex<double>>) {
            parts.push_back(fmt::format("{}{:+}i", data[i].real(), data[i].imag()));
          } else if constexpr (std::is_same_v<T, std::uint8_t>) {
            parts.push_back(fmt::format("{:02x}", data[i]));
          } else {
            parts.push_back(fmt::format("{}", data[i]));
          }
        }
      },
      v.data());
  std::string out = parts.size() == 1 && !v.dim() ? parts[0] : "[" + fmt::format("{}", fmt::join(parts, ", ")) + "]";
  if (v.dim() && v.dim()->size() > 1) out += fmt::format(" (dim {})", fmt::join(*v.dim(), "x"));
  if (v.type_attr()) out += fmt::format(" <{}>", *v.type_attr());
  return out;
}

}  // namespace

std::string format_host(const HostValue& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, HostNull>) {
          return "NULL";
        } else if constexpr (std::is_same_v<T, HostVector>) {
          return format_vector(x);
        } else if constexpr (std::is_same_v<T, HostList>) {
          std::vector<std::string> parts;
          for (const auto& item : x.items) parts.push_back(format_host(item));
          return fmt::format("list({})", fmt::join(parts, ", "));
        } else if constexpr (std::is_same_v<T, HostRecord>) {
          std::vector<std::string> parts;
          for (const auto& f : x.fields) parts.push_back(f.name + " = " + format_host(f.value));
          auto s = fmt::format("list({})", fmt::join(parts, ", "));
          if (x.type_attr) s += fmt::format(" <{}>", *x.type_attr);
          return s;
        } else if constexpr (std::is_same_v<T, HostTable>) {
          std::vector<std::string> parts;
          for (const auto& [name, col] : x.columns) parts.push_back(name + " = " + format_vector(col));
          return fmt::format("table({} rows: {})", x.rows(), fmt::join(parts, ", "));
        } else if constexpr (std::is_same_v<T, HostFunction>) {
          return "<host function>";
        } else if constexpr (std::is_same_v<T, RemoteFunction>) {
          return fmt::format("<remote function {}>", x.name);
        } else {
          return fmt::format("<remote object of type {} #{}>", x.type_name(), x.id());
        }
      },
      v.variant());
}

}  // namespace bridgewire
