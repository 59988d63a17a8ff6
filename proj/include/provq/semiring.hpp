#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "provq/element.hpp"
#include "provq/value.hpp"

namespace provq {

class BoolCircuit;

// The four monoid aggregate functions. Each is a monoid homomorphism from
// finite multisets under multiset union to a value monoid, which is exactly
// what lets aggregation distribute over grouped inputs.
enum class AggFn : std::uint8_t { Count, Sum, Min, Max };

const char* agg_fn_name(AggFn fn);
AggFn agg_fn_from_name(const std::string& name);

struct MonoidAggregate {
  AggFn fn;

  // Image of a single occurrence of v.
  Value unit(const Value& v) const;
  // Monoid operation of the target monoid.
  Value combine(const Value& a, const Value& b) const;
  // Identity element; throws EmptyAggregate where the carrier has none
  // (min/max over text-like tags).
  Value identity_for(ValueTag tag) const;
};

// Result of a lifted aggregate: either an actual scalar (structures where the
// annotations are concrete multiplicities), a symbolic multiset of
// value-with-annotation tensor pairs, or a gate of a circuit store encoding
// the same construction persistently.
struct SemimoduleValue {
  using Pairs = std::vector<std::pair<Value, Element>>;
  std::variant<Value, Pairs, Uuid> rep;

  static SemimodulePtr resolved(Value v);
  static SemimodulePtr symbolic(Pairs pairs);  // canonicalizes (sorts)
  static SemimodulePtr gate(Uuid id);

  bool is_resolved() const { return std::holds_alternative<Value>(rep); }
  const Value& value() const { return std::get<Value>(rep); }
};

// A named annotation structure: a semiring with optional monus and delta.
// Implementations are immutable and freely shareable; all operations are
// pure (the store-backed structure appends gates, but deterministically, so
// it behaves like hash-consing).
class AnnotationStructure {
 public:
  virtual ~AnnotationStructure() = default;

  const std::string& name() const { return name_; }
  bool has_monus() const { return has_monus_; }
  bool has_delta() const { return has_delta_; }
  // Plus is always commutative (semiring axiom); times commutativity is per
  // structure and controls child sorting in the circuit store.
  bool times_commutative() const { return times_commutative_; }

  virtual Element zero() const = 0;
  virtual Element one() const = 0;
  virtual Element plus(const Element& a, const Element& b) const = 0;
  virtual Element times(const Element& a, const Element& b) const = 0;
  virtual Element monus(const Element& a, const Element& b) const;
  virtual Element delta(const Element& a) const;

  virtual bool is_zero(const Element& a) const = 0;

  // n-ary folds; 0 items yield the unit, 1 item passes through untouched.
  // The store-backed structure overrides these to emit one n-ary gate.
  virtual Element plus_fold(std::span<const Element> items) const;
  virtual Element times_fold(std::span<const Element> items) const;

  // Lifted aggregate over a multiset of (value, annotation) tensor pairs.
  // Items arrive in canonical order. Default records symbolically.
  virtual SemimodulePtr lift_aggregate(const MonoidAggregate& f,
                                       std::span<const std::pair<Value, Element>> items) const;

  // DomainMismatch unless the element belongs to this structure's domain.
  virtual void check_domain(const Element& a) const = 0;

 protected:
  AnnotationStructure(std::string name, bool has_monus, bool has_delta, bool times_commutative)
      : name_(std::move(name)),
        has_monus_(has_monus),
        has_delta_(has_delta),
        times_commutative_(times_commutative) {}

 private:
  std::string name_;
  bool has_monus_;
  bool has_delta_;
  bool times_commutative_;
};

// Shipped structures. The counting, why-provenance, and Boolean structures
// are m- and delta-semirings; the formula structure records operations
// symbolically, folding only 0/1 identities and annihilators.
const AnnotationStructure& counting_structure();
const AnnotationStructure& why_structure();
const AnnotationStructure& formula_structure();
std::shared_ptr<const AnnotationStructure> make_bool_structure(std::shared_ptr<BoolCircuit> arena);

enum class SrOp : std::uint8_t { Plus, Times, Monus };

// Definition-level entry points used by tests and the specializer.
Element sr_apply(const AnnotationStructure& s, SrOp op, const Element& a, const Element& b);
Element sr_delta(const AnnotationStructure& s, const Element& a);

// Aggregates a multiset of (value, annotation) pairs. For counting
// annotations the result equals f over the expanded multiset in which each
// value appears as many times as its annotation; symbolic structures record
// the pair list. Values must share one tag.
SemimodulePtr sm_aggregate(const MonoidAggregate& f,
                           std::vector<std::pair<Value, Element>> items,
                           const AnnotationStructure& s);

}  // namespace provq
