#include "provq/value.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>

#include "provq/errors.hpp"

namespace provq {

const char* value_tag_name(ValueTag tag) {
  switch (tag) {
    case ValueTag::Int: return "int";
    case ValueTag::Real: return "real";
    case ValueTag::Text: return "text";
    case ValueTag::Bool: return "bool";
    case ValueTag::Date: return "date";
    case ValueTag::Annot: return "annot";
    case ValueTag::Agg: return "agg";
  }
  return "?";
}

Value Value::real(double v) {
  if (std::isnan(v)) raise(Errc::Overflow, "real arithmetic produced NaN");
  if (v == 0.0) v = 0.0;  // collapse -0.0 so hashing matches equality
  return Value(Rep(v));
}

bool Value::is_valid_date(const std::string& iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (iso[i] < '0' || iso[i] > '9') return false;
  }
  int month = (iso[5] - '0') * 10 + (iso[6] - '0');
  int day = (iso[8] - '0') * 10 + (iso[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

Value Value::date(std::string iso) {
  if (!is_valid_date(iso)) {
    raise(Errc::TagMismatch, "not an ISO-8601 date: '" + iso + "'");
  }
  return Value(Rep(DateString{std::move(iso)}));
}

namespace {

template <typename T>
int three_way(const T& a, const T& b) {
  if (a < b) return -1;
  if (b < a) return 1;
  return 0;
}

}  // namespace

int Value::compare_total(const Value& a, const Value& b) {
  if (a.rep_.index() != b.rep_.index()) {
    return a.rep_.index() < b.rep_.index() ? -1 : 1;
  }
  switch (a.tag()) {
    case ValueTag::Int:
      return three_way(a.as_int(), b.as_int());
    case ValueTag::Real:
      return three_way(a.as_real(), b.as_real());
    case ValueTag::Text:
      return a.as_text().compare(b.as_text());
    case ValueTag::Bool:
      return three_way(a.as_bool(), b.as_bool());
    case ValueTag::Date:
      return a.as_date().compare(b.as_date());
    case ValueTag::Annot:
      return Element::compare(a.as_annotation(), b.as_annotation());
    case ValueTag::Agg:
      return semimodule_compare(*a.as_aggregate(), *b.as_aggregate());
  }
  return 0;
}

std::size_t Value::hash() const {
  std::size_t seed = std::size_t(tag()) * 0x9E3779B97F4A7C15ull;
  auto mix = [&seed](std::size_t h) {
    seed ^= h + 0x9E3779B97F4A7C15ull + (seed << 6) + (seed >> 2);
  };
  switch (tag()) {
    case ValueTag::Int:
      mix(std::hash<std::int64_t>()(as_int()));
      break;
    case ValueTag::Real:
      mix(std::hash<double>()(as_real()));
      break;
    case ValueTag::Text:
      mix(std::hash<std::string>()(as_text()));
      break;
    case ValueTag::Bool:
      mix(std::hash<bool>()(as_bool()));
      break;
    case ValueTag::Date:
      mix(std::hash<std::string>()(as_date()));
      break;
    case ValueTag::Annot:
      // Annotation values rarely key hash joins; a cheap discriminator that
      // respects equality is enough.
      if (as_annotation().is_count()) {
        mix(std::hash<std::uint64_t>()(as_annotation().as_count()));
      } else if (as_annotation().is_gate()) {
        mix(UuidHash()(as_annotation().as_gate().id));
      } else {
        mix(as_annotation().rep().index());
      }
      break;
    case ValueTag::Agg:
      mix(0x5151);
      break;
  }
  return seed;
}

std::string Value::to_string() const {
  switch (tag()) {
    case ValueTag::Int:
      return std::to_string(as_int());
    case ValueTag::Real: {
      char buf[32];
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), as_real());
      return std::string(buf, end);
    }
    case ValueTag::Text:
      return as_text();
    case ValueTag::Bool:
      return as_bool() ? "true" : "false";
    case ValueTag::Date:
      return as_date();
    case ValueTag::Annot:
      return as_annotation().to_string();
    case ValueTag::Agg:
      return semimodule_to_string(*as_aggregate());
  }
  return "?";
}

int tuple_compare(const Tuple& a, const Tuple& b) {
  if (a.arity() != b.arity()) return a.arity() < b.arity() ? -1 : 1;
  for (std::size_t i = 0; i < a.arity(); ++i) {
    int c = Value::compare_total(a.components[i], b.components[i]);
    if (c != 0) return c;
  }
  return 0;
}

std::size_t TupleHash::operator()(const Tuple& t) const {
  std::size_t seed = t.arity();
  for (const auto& v : t.components) {
    seed ^= v.hash() + 0x9E3779B97F4A7C15ull + (seed << 6) + (seed >> 2);
  }
  return seed;
}

std::string tuple_to_string(const Tuple& t) {
  std::string out = "(";
  for (std::size_t i = 0; i < t.arity(); ++i) {
    if (i > 0) out += ", ";
    out += t.components[i].to_string();
  }
  out += ")";
  return out;
}

}  // namespace provq
