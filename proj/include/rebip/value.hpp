#ifndef REBIP_VALUE_HPP
#define REBIP_VALUE_HPP

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>

namespace rebip {

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A runtime value: signed 64-bit integer, Boolean, or string.
/// Strings exist for location/port bookkeeping variables.
class Value {
public:
  Value() : rep_(int64_t{0}) {}
  explicit Value(int64_t v) : rep_(v) {}
  explicit Value(bool v) : rep_(v) {}
  explicit Value(std::string v) : rep_(std::move(v)) {}

  bool is_int() const { return std::holds_alternative<int64_t>(rep_); }
  bool is_bool() const { return std::holds_alternative<bool>(rep_); }
  bool is_str() const { return std::holds_alternative<std::string>(rep_); }

  int64_t as_int() const {
    if (!is_int()) throw EvalError("type mismatch: expected Int, got " + type_name());
    return std::get<int64_t>(rep_);
  }
  bool as_bool() const {
    if (!is_bool()) throw EvalError("type mismatch: expected Bool, got " + type_name());
    return std::get<bool>(rep_);
  }
  const std::string& as_str() const {
    if (!is_str()) throw EvalError("type mismatch: expected Str, got " + type_name());
    return std::get<std::string>(rep_);
  }

  std::string type_name() const {
    if (is_int()) return "Int";
    if (is_bool()) return "Bool";
    return "Str";
  }

  bool operator==(const Value& o) const { return rep_ == o.rep_; }
  bool operator!=(const Value& o) const { return rep_ != o.rep_; }
  bool operator<(const Value& o) const { return rep_ < o.rep_; }

  /// Type-homogeneous equality; comparing Int to Bool is an error, not false.
  bool equals_checked(const Value& o) const {
    if (rep_.index() != o.rep_.index())
      throw EvalError("type mismatch: = requires operands of the same type (" + type_name() +
                      " vs " + o.type_name() + ")");
    return rep_ == o.rep_;
  }

  std::string to_string() const {
    if (is_int()) return std::to_string(std::get<int64_t>(rep_));
    if (is_bool()) return std::get<bool>(rep_) ? "true" : "false";
    return "\"" + std::get<std::string>(rep_) + "\"";
  }

private:
  std::variant<int64_t, bool, std::string> rep_;
};

/// Partial map from variable names to values. Names may be dotted
/// qualified references ("comp.var") in connector and oracle scopes.
using Valuation = std::map<std::string, Value>;

/// The substitution v/v2: v2 wins on its own domain, v elsewhere.
inline Valuation substitute(const Valuation& v, const Valuation& v2) {
  Valuation out = v;
  for (const auto& [k, val] : v2) out[k] = val;
  return out;
}

inline int64_t checked_add(int64_t a, int64_t b) {
  int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw EvalError("Int overflow in +");
  return r;
}
inline int64_t checked_sub(int64_t a, int64_t b) {
  int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) throw EvalError("Int overflow in -");
  return r;
}
inline int64_t checked_mul(int64_t a, int64_t b) {
  int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw EvalError("Int overflow in *");
  return r;
}
inline int64_t checked_neg(int64_t a) {
  int64_t r;
  if (__builtin_sub_overflow(int64_t{0}, a, &r)) throw EvalError("Int overflow in unary -");
  return r;
}

} // namespace rebip

#endif
