#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "provq/element.hpp"

namespace provq {

struct SemimoduleValue;
using SemimodulePtr = std::shared_ptr<const SemimoduleValue>;
int semimodule_compare(const SemimoduleValue& a, const SemimoduleValue& b);
std::string semimodule_to_string(const SemimoduleValue& v);

// The five user-facing scalar tags of the data model, plus two engine tags:
// Annot carries an annotation element in the extra provenance column of
// rewritten queries, and Agg carries the semimodule result of a lifted
// aggregate. Neither engine tag may appear in predicates or arithmetic.
enum class ValueTag : std::uint8_t { Int, Real, Text, Bool, Date, Annot, Agg };

const char* value_tag_name(ValueTag tag);

// Dates are ISO-8601 "YYYY-MM-DD" text; lexicographic order is chronological.
struct DateString {
  std::string iso;
  bool operator==(const DateString&) const = default;
  bool operator<(const DateString& o) const { return iso < o.iso; }
};

class Value {
 public:
  using Rep = std::variant<std::int64_t, double, std::string, bool, DateString, Element,
                           SemimodulePtr>;

  Value() : rep_(std::int64_t{0}) {}

  static Value integer(std::int64_t v) { return Value(Rep(v)); }
  static Value real(double v);  // rejects NaN (no total order)
  static Value text(std::string v) { return Value(Rep(std::move(v))); }
  static Value boolean(bool v) { return Value(Rep(v)); }
  static Value date(std::string iso);  // validates the format
  static Value annotation(Element e) { return Value(Rep(std::move(e))); }
  static Value aggregate(SemimodulePtr v) { return Value(Rep(std::move(v))); }

  ValueTag tag() const { return static_cast<ValueTag>(rep_.index()); }

  std::int64_t as_int() const { return std::get<std::int64_t>(rep_); }
  double as_real() const { return std::get<double>(rep_); }
  const std::string& as_text() const { return std::get<std::string>(rep_); }
  bool as_bool() const { return std::get<bool>(rep_); }
  const std::string& as_date() const { return std::get<DateString>(rep_).iso; }
  const Element& as_annotation() const { return std::get<Element>(rep_); }
  const SemimodulePtr& as_aggregate() const { return std::get<SemimodulePtr>(rep_); }

  // Deterministic total order over all values (tag rank first). This is the
  // engine's canonical order for multisets and printing; user-visible
  // comparisons go through predicate evaluation, which rejects mixed tags.
  static int compare_total(const Value& a, const Value& b);

  std::size_t hash() const;
  std::string to_string() const;

  static bool is_valid_date(const std::string& iso);

 private:
  explicit Value(Rep rep) : rep_(std::move(rep)) {}

  Rep rep_;
};

inline bool operator==(const Value& a, const Value& b) { return Value::compare_total(a, b) == 0; }
inline bool operator!=(const Value& a, const Value& b) { return Value::compare_total(a, b) != 0; }
inline bool operator<(const Value& a, const Value& b) { return Value::compare_total(a, b) < 0; }

// Fixed-arity sequence of values.
struct Tuple {
  std::vector<Value> components;

  std::size_t arity() const { return components.size(); }
  const Value& at(std::size_t i) const { return components[i]; }
};

inline Tuple make_tuple(std::vector<Value> vs) { return Tuple{std::move(vs)}; }

int tuple_compare(const Tuple& a, const Tuple& b);
inline bool operator==(const Tuple& a, const Tuple& b) { return tuple_compare(a, b) == 0; }
inline bool operator!=(const Tuple& a, const Tuple& b) { return tuple_compare(a, b) != 0; }
inline bool operator<(const Tuple& a, const Tuple& b) { return tuple_compare(a, b) < 0; }

struct TupleHash {
  std::size_t operator()(const Tuple& t) const;
};

std::string tuple_to_string(const Tuple& t);

}  // namespace provq
