#include "provq/semiring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "provq/bool_circuit.hpp"
#include "provq/errors.hpp"

namespace provq {

// ---------------------------------------------------------------------------
// Monoid aggregates
// ---------------------------------------------------------------------------

const char* agg_fn_name(AggFn fn) {
  switch (fn) {
    case AggFn::Count: return "count";
    case AggFn::Sum: return "sum";
    case AggFn::Min: return "min";
    case AggFn::Max: return "max";
  }
  return "?";
}

AggFn agg_fn_from_name(const std::string& name) {
  if (name == "count") return AggFn::Count;
  if (name == "sum") return AggFn::Sum;
  if (name == "min") return AggFn::Min;
  if (name == "max") return AggFn::Max;
  raise(Errc::DomainMismatch, "unknown aggregate function '" + name + "'");
}

namespace {

std::int64_t checked_int_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) raise(Errc::Overflow, "integer aggregate overflow");
  return r;
}

}  // namespace

Value MonoidAggregate::unit(const Value& v) const {
  switch (fn) {
    case AggFn::Count:
      return Value::integer(1);
    case AggFn::Sum:
      if (v.tag() != ValueTag::Int && v.tag() != ValueTag::Real) {
        raise(Errc::TagMismatch, "sum requires int or real values");
      }
      return v;
    case AggFn::Min:
    case AggFn::Max:
      if (v.tag() == ValueTag::Annot || v.tag() == ValueTag::Agg) {
        raise(Errc::TagMismatch, "min/max cannot aggregate annotation values");
      }
      return v;
  }
  raise(Errc::DomainMismatch, "bad aggregate");
}

Value MonoidAggregate::combine(const Value& a, const Value& b) const {
  if (a.tag() != b.tag()) raise(Errc::TagMismatch, "aggregate over mixed value tags");
  switch (fn) {
    case AggFn::Count:
    case AggFn::Sum:
      if (a.tag() == ValueTag::Int) return Value::integer(checked_int_add(a.as_int(), b.as_int()));
      if (a.tag() == ValueTag::Real) return Value::real(a.as_real() + b.as_real());
      raise(Errc::TagMismatch, "sum requires int or real values");
    case AggFn::Min:
      return Value::compare_total(a, b) <= 0 ? a : b;
    case AggFn::Max:
      return Value::compare_total(a, b) >= 0 ? a : b;
  }
  raise(Errc::DomainMismatch, "bad aggregate");
}

Value MonoidAggregate::identity_for(ValueTag tag) const {
  switch (fn) {
    case AggFn::Count:
      return Value::integer(0);
    case AggFn::Sum:
      if (tag == ValueTag::Real) return Value::real(0.0);
      return Value::integer(0);
    case AggFn::Min:
      if (tag == ValueTag::Int) return Value::integer(std::numeric_limits<std::int64_t>::max());
      if (tag == ValueTag::Real) return Value::real(std::numeric_limits<double>::infinity());
      raise(Errc::EmptyAggregate, "min over an empty multiset of non-numeric values");
    case AggFn::Max:
      if (tag == ValueTag::Int) return Value::integer(std::numeric_limits<std::int64_t>::min());
      if (tag == ValueTag::Real) return Value::real(-std::numeric_limits<double>::infinity());
      raise(Errc::EmptyAggregate, "max over an empty multiset of non-numeric values");
  }
  raise(Errc::DomainMismatch, "bad aggregate");
}

// ---------------------------------------------------------------------------
// Semimodule values
// ---------------------------------------------------------------------------

SemimodulePtr SemimoduleValue::resolved(Value v) {
  return std::make_shared<SemimoduleValue>(SemimoduleValue{std::move(v)});
}

SemimodulePtr SemimoduleValue::symbolic(Pairs pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    int c = Value::compare_total(a.first, b.first);
    if (c != 0) return c < 0;
    return Element::compare(a.second, b.second) < 0;
  });
  return std::make_shared<SemimoduleValue>(SemimoduleValue{std::move(pairs)});
}

SemimodulePtr SemimoduleValue::gate(Uuid id) {
  return std::make_shared<SemimoduleValue>(SemimoduleValue{id});
}

int semimodule_compare(const SemimoduleValue& a, const SemimoduleValue& b) {
  if (a.rep.index() != b.rep.index()) return a.rep.index() < b.rep.index() ? -1 : 1;
  switch (a.rep.index()) {
    case 0:
      return Value::compare_total(std::get<Value>(a.rep), std::get<Value>(b.rep));
    case 1: {
      const auto& pa = std::get<SemimoduleValue::Pairs>(a.rep);
      const auto& pb = std::get<SemimoduleValue::Pairs>(b.rep);
      if (pa.size() != pb.size()) return pa.size() < pb.size() ? -1 : 1;
      for (std::size_t i = 0; i < pa.size(); ++i) {
        int c = Value::compare_total(pa[i].first, pb[i].first);
        if (c != 0) return c;
        c = Element::compare(pa[i].second, pb[i].second);
        if (c != 0) return c;
      }
      return 0;
    }
    default: {
      const auto& ua = std::get<Uuid>(a.rep);
      const auto& ub = std::get<Uuid>(b.rep);
      if (ua < ub) return -1;
      if (ub < ua) return 1;
      return 0;
    }
  }
}

std::string semimodule_to_string(const SemimoduleValue& v) {
  switch (v.rep.index()) {
    case 0:
      return std::get<Value>(v.rep).to_string();
    case 1: {
      const auto& pairs = std::get<SemimoduleValue::Pairs>(v.rep);
      std::string out = "{";
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (i > 0) out += ", ";
        out += pairs[i].first.to_string() + "∗" + pairs[i].second.to_string();
      }
      return out + "}";
    }
    default:
      return std::get<Uuid>(v.rep).to_string();
  }
}

// ---------------------------------------------------------------------------
// AnnotationStructure defaults
// ---------------------------------------------------------------------------

Element AnnotationStructure::monus(const Element&, const Element&) const {
  raise(Errc::MonusUnsupported, "structure '" + name() + "' has no monus");
}

Element AnnotationStructure::delta(const Element&) const {
  raise(Errc::DeltaUnsupported, "structure '" + name() + "' has no delta");
}

Element AnnotationStructure::plus_fold(std::span<const Element> items) const {
  if (items.empty()) return zero();
  Element acc = items[0];
  for (std::size_t i = 1; i < items.size(); ++i) acc = plus(acc, items[i]);
  return acc;
}

Element AnnotationStructure::times_fold(std::span<const Element> items) const {
  if (items.empty()) return one();
  Element acc = items[0];
  for (std::size_t i = 1; i < items.size(); ++i) acc = times(acc, items[i]);
  return acc;
}

SemimodulePtr AnnotationStructure::lift_aggregate(
    const MonoidAggregate&, std::span<const std::pair<Value, Element>> items) const {
  SemimoduleValue::Pairs pairs(items.begin(), items.end());
  return SemimoduleValue::symbolic(std::move(pairs));
}

// ---------------------------------------------------------------------------
// Counting semiring (naturals, +, x, truncated monus, 0/1 delta)
// ---------------------------------------------------------------------------

namespace {

class CountingStructure final : public AnnotationStructure {
 public:
  CountingStructure() : AnnotationStructure("counting", true, true, true) {}

  Element zero() const override { return Element::count(0); }
  Element one() const override { return Element::count(1); }

  void check_domain(const Element& a) const override {
    if (!a.is_count()) raise(Errc::DomainMismatch, "expected a counting element");
  }

  Element plus(const Element& a, const Element& b) const override {
    check_domain(a);
    check_domain(b);
    std::uint64_t r;
    if (__builtin_add_overflow(a.as_count(), b.as_count(), &r)) {
      raise(Errc::Overflow, "counting annotation overflow");
    }
    return Element::count(r);
  }

  Element times(const Element& a, const Element& b) const override {
    check_domain(a);
    check_domain(b);
    std::uint64_t r;
    if (__builtin_mul_overflow(a.as_count(), b.as_count(), &r)) {
      raise(Errc::Overflow, "counting annotation overflow");
    }
    return Element::count(r);
  }

  Element monus(const Element& a, const Element& b) const override {
    check_domain(a);
    check_domain(b);
    std::uint64_t x = a.as_count(), y = b.as_count();
    return Element::count(x > y ? x - y : 0);
  }

  Element delta(const Element& a) const override {
    check_domain(a);
    return Element::count(a.as_count() == 0 ? 0 : 1);
  }

  bool is_zero(const Element& a) const override { return a.as_count() == 0; }

  SemimodulePtr lift_aggregate(const MonoidAggregate& f,
                               std::span<const std::pair<Value, Element>> items) const override {
    // Concrete multiplicities: f over the multiset where each value appears
    // as many times as its annotation says.
    bool any = false;
    ValueTag tag = ValueTag::Int;
    Value acc;
    for (const auto& [v, ann] : items) {
      check_domain(ann);
      std::uint64_t n = ann.as_count();
      if (n == 0) continue;
      Value contribution;
      switch (f.fn) {
        case AggFn::Count:
          if (n > std::uint64_t(std::numeric_limits<std::int64_t>::max())) {
            raise(Errc::Overflow, "count aggregate overflow");
          }
          contribution = Value::integer(std::int64_t(n));
          break;
        case AggFn::Sum:
          if (v.tag() == ValueTag::Int) {
            std::int64_t r;
            if (__builtin_mul_overflow(v.as_int(), std::int64_t(n), &r)) {
              raise(Errc::Overflow, "sum aggregate overflow");
            }
            contribution = Value::integer(r);
          } else if (v.tag() == ValueTag::Real) {
            contribution = Value::real(v.as_real() * double(n));
          } else {
            raise(Errc::TagMismatch, "sum requires int or real values");
          }
          break;
        case AggFn::Min:
        case AggFn::Max:
          contribution = f.unit(v);
          break;
      }
      if (!any) {
        acc = contribution;
        tag = v.tag();
        any = true;
      } else {
        if (v.tag() != tag) raise(Errc::TagMismatch, "aggregate over mixed value tags");
        acc = f.combine(acc, contribution);
      }
    }
    if (!any) {
      return SemimoduleValue::resolved(
          f.identity_for(items.empty() ? ValueTag::Int : items.front().first.tag()));
    }
    return SemimoduleValue::resolved(acc);
  }
};

// ---------------------------------------------------------------------------
// Why-provenance (sets of sets of tokens; union, pairwise union, difference)
// ---------------------------------------------------------------------------

class WhyStructure final : public AnnotationStructure {
 public:
  WhyStructure() : AnnotationStructure("why", true, true, true) {}

  Element zero() const override { return Element::why(WhySet::empty()); }
  Element one() const override { return Element::why(WhySet::of({{}})); }

  void check_domain(const Element& a) const override {
    if (!a.is_why()) raise(Errc::DomainMismatch, "expected a why-provenance element");
  }

  Element plus(const Element& a, const Element& b) const override {
    check_domain(a);
    check_domain(b);
    std::vector<std::vector<std::string>> merged = a.as_why().get();
    const auto& bs = b.as_why().get();
    merged.insert(merged.end(), bs.begin(), bs.end());
    return Element::why(WhySet::of(std::move(merged)));
  }

  Element times(const Element& a, const Element& b) const override {
    check_domain(a);
    check_domain(b);
    std::vector<std::vector<std::string>> out;
    for (const auto& x : a.as_why().get()) {
      for (const auto& y : b.as_why().get()) {
        std::vector<std::string> u = x;
        u.insert(u.end(), y.begin(), y.end());
        out.push_back(std::move(u));
      }
    }
    return Element::why(WhySet::of(std::move(out)));
  }

  Element monus(const Element& a, const Element& b) const override {
    check_domain(a);
    check_domain(b);
    const auto& bs = b.as_why().get();
    std::vector<std::vector<std::string>> out;
    for (const auto& x : a.as_why().get()) {
      if (!std::binary_search(bs.begin(), bs.end(), x)) out.push_back(x);
    }
    return Element::why(WhySet::of(std::move(out)));
  }

  Element delta(const Element& a) const override {
    check_domain(a);
    if (a.as_why().get().empty()) return zero();
    return one();
  }

  bool is_zero(const Element& a) const override { return a.as_why().get().empty(); }
};

// ---------------------------------------------------------------------------
// Boolean function structure over a shared circuit arena
// ---------------------------------------------------------------------------

class BoolStructure final : public AnnotationStructure {
 public:
  explicit BoolStructure(std::shared_ptr<BoolCircuit> arena)
      : AnnotationStructure("bool", true, true, true), arena_(std::move(arena)) {}

  Element zero() const override { return Element::boolean({arena_, arena_->const_false()}); }
  Element one() const override { return Element::boolean({arena_, arena_->const_true()}); }

  void check_domain(const Element& a) const override {
    if (!a.is_boolean()) raise(Errc::DomainMismatch, "expected a Boolean element");
    if (a.as_boolean().circuit.get() != arena_.get()) {
      raise(Errc::DomainMismatch, "Boolean element belongs to a different arena");
    }
  }

  Element plus(const Element& a, const Element& b) const override {
    check_domain(a);
    check_domain(b);
    int x = a.as_boolean().node, y = b.as_boolean().node;
    if (kind(x) == BoolCircuit::Kind::ConstFalse) return b;
    if (kind(y) == BoolCircuit::Kind::ConstFalse) return a;
    if (kind(x) == BoolCircuit::Kind::ConstTrue || kind(y) == BoolCircuit::Kind::ConstTrue) {
      return one();
    }
    return Element::boolean({arena_, arena_->add_or({x, y})});
  }

  Element times(const Element& a, const Element& b) const override {
    check_domain(a);
    check_domain(b);
    int x = a.as_boolean().node, y = b.as_boolean().node;
    if (kind(x) == BoolCircuit::Kind::ConstTrue) return b;
    if (kind(y) == BoolCircuit::Kind::ConstTrue) return a;
    if (kind(x) == BoolCircuit::Kind::ConstFalse || kind(y) == BoolCircuit::Kind::ConstFalse) {
      return zero();
    }
    return Element::boolean({arena_, arena_->add_and({x, y})});
  }

  Element monus(const Element& a, const Element& b) const override {
    check_domain(a);
    check_domain(b);
    int x = a.as_boolean().node, y = b.as_boolean().node;
    if (kind(y) == BoolCircuit::Kind::ConstFalse) return a;
    if (kind(y) == BoolCircuit::Kind::ConstTrue || kind(x) == BoolCircuit::Kind::ConstFalse) {
      return zero();
    }
    return Element::boolean({arena_, arena_->add_and({x, arena_->add_not(y)})});
  }

  // In B[X], 1 + ... + 1 is already top, so the identity satisfies both
  // delta axioms.
  Element delta(const Element& a) const override {
    check_domain(a);
    return a;
  }

  bool is_zero(const Element& a) const override {
    return kind(a.as_boolean().node) == BoolCircuit::Kind::ConstFalse;
  }

 private:
  BoolCircuit::Kind kind(int node) const { return arena_->node(node).kind; }

  std::shared_ptr<BoolCircuit> arena_;
};

// ---------------------------------------------------------------------------
// Formula pseudo-structure: records operations, folding only 0/1 cases
// ---------------------------------------------------------------------------

class FormulaStructure final : public AnnotationStructure {
 public:
  FormulaStructure() : AnnotationStructure("formula", true, true, true) {}

  Element zero() const override { return Element::formula(formula_zero()); }
  Element one() const override { return Element::formula(formula_one()); }

  void check_domain(const Element& a) const override {
    if (!a.is_formula()) raise(Errc::DomainMismatch, "expected a formula element");
  }

  Element plus(const Element& a, const Element& b) const override {
    check_domain(a);
    check_domain(b);
    const auto& x = a.as_formula();
    const auto& y = b.as_formula();
    if (x->kind == FormulaNode::Kind::Zero) return b;
    if (y->kind == FormulaNode::Kind::Zero) return a;
    return Element::formula(
        std::make_shared<FormulaNode>(FormulaNode{FormulaNode::Kind::Plus, "", x, y}));
  }

  Element times(const Element& a, const Element& b) const override {
    check_domain(a);
    check_domain(b);
    const auto& x = a.as_formula();
    const auto& y = b.as_formula();
    if (x->kind == FormulaNode::Kind::Zero || y->kind == FormulaNode::Kind::Zero) return zero();
    if (x->kind == FormulaNode::Kind::One) return b;
    if (y->kind == FormulaNode::Kind::One) return a;
    return Element::formula(
        std::make_shared<FormulaNode>(FormulaNode{FormulaNode::Kind::Times, "", x, y}));
  }

  Element monus(const Element& a, const Element& b) const override {
    check_domain(a);
    check_domain(b);
    const auto& x = a.as_formula();
    const auto& y = b.as_formula();
    if (x->kind == FormulaNode::Kind::Zero) return zero();
    if (y->kind == FormulaNode::Kind::Zero) return a;
    return Element::formula(
        std::make_shared<FormulaNode>(FormulaNode{FormulaNode::Kind::Monus, "", x, y}));
  }

  Element delta(const Element& a) const override {
    check_domain(a);
    const auto& x = a.as_formula();
    if (x->kind == FormulaNode::Kind::Zero) return zero();
    if (x->kind == FormulaNode::Kind::One) return one();
    return Element::formula(
        std::make_shared<FormulaNode>(FormulaNode{FormulaNode::Kind::Delta, "", x, nullptr}));
  }

  bool is_zero(const Element& a) const override {
    return a.as_formula()->kind == FormulaNode::Kind::Zero;
  }
};

}  // namespace

const AnnotationStructure& counting_structure() {
  static const CountingStructure s;
  return s;
}

const AnnotationStructure& why_structure() {
  static const WhyStructure s;
  return s;
}

const AnnotationStructure& formula_structure() {
  static const FormulaStructure s;
  return s;
}

std::shared_ptr<const AnnotationStructure> make_bool_structure(std::shared_ptr<BoolCircuit> arena) {
  return std::make_shared<BoolStructure>(std::move(arena));
}

// ---------------------------------------------------------------------------
// Free-function entry points
// ---------------------------------------------------------------------------

Element sr_apply(const AnnotationStructure& s, SrOp op, const Element& a, const Element& b) {
  switch (op) {
    case SrOp::Plus: return s.plus(a, b);
    case SrOp::Times: return s.times(a, b);
    case SrOp::Monus:
      if (!s.has_monus()) raise(Errc::MonusUnsupported, "structure '" + s.name() + "' has no monus");
      return s.monus(a, b);
  }
  raise(Errc::DomainMismatch, "bad operation");
}

Element sr_delta(const AnnotationStructure& s, const Element& a) {
  if (!s.has_delta()) raise(Errc::DeltaUnsupported, "structure '" + s.name() + "' has no delta");
  return s.delta(a);
}

SemimodulePtr sm_aggregate(const MonoidAggregate& f, std::vector<std::pair<Value, Element>> items,
                           const AnnotationStructure& s) {
  ValueTag tag = ValueTag::Int;
  bool first = true;
  for (const auto& [v, ann] : items) {
    s.check_domain(ann);
    if (first) {
      tag = v.tag();
      first = false;
    } else if (v.tag() != tag) {
      raise(Errc::TagMismatch, "aggregate over mixed value tags");
    }
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    int c = Value::compare_total(a.first, b.first);
    if (c != 0) return c < 0;
    return Element::compare(a.second, b.second) < 0;
  });
  return s.lift_aggregate(f, items);
}

}  // namespace provq
