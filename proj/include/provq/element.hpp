#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "provq/uuid.hpp"

namespace provq {

class BoolCircuit;

// Why-provenance element: a set of sets of token identifiers. Canonical form
// throughout: outer and inner vectors sorted, no duplicates. Immutable and
// cheaply copyable via shared ownership.
struct WhySet {
  std::shared_ptr<const std::vector<std::vector<std::string>>> sets;

  static WhySet empty();
  static WhySet of(std::vector<std::vector<std::string>> raw);  // canonicalizes
  const std::vector<std::vector<std::string>>& get() const { return *sets; }
};

// Node of a formula tree for the pseudo-semiring that records operations
// symbolically. Immutable.
struct FormulaNode;
using FormulaPtr = std::shared_ptr<const FormulaNode>;
struct FormulaNode {
  enum class Kind : std::uint8_t { Zero, One, Token, Plus, Times, Monus, Delta };
  Kind kind;
  std::string token;  // Token only
  FormulaPtr lhs;     // Plus/Times/Monus left, Delta child
  FormulaPtr rhs;     // Plus/Times/Monus right
};

FormulaPtr formula_zero();
FormulaPtr formula_one();
FormulaPtr formula_token(std::string token);

// Reference to a node of a shared Boolean circuit arena.
struct BoolRef {
  std::shared_ptr<BoolCircuit> circuit;
  int node = -1;
};

// Reference to a gate of a circuit store (the generic annotation domain of
// the persistent provenance circuit).
struct GateRef {
  Uuid id;
};

// An annotation element of one of the shipped structures. Which alternative
// is live must match the structure operating on it (DomainMismatch otherwise).
class Element {
 public:
  using Rep = std::variant<std::uint64_t, WhySet, BoolRef, FormulaPtr, GateRef>;

  Element() : rep_(std::uint64_t{0}) {}
  explicit Element(Rep rep) : rep_(std::move(rep)) {}

  static Element count(std::uint64_t n) { return Element(Rep(n)); }
  static Element why(WhySet w) { return Element(Rep(std::move(w))); }
  static Element boolean(BoolRef b) { return Element(Rep(std::move(b))); }
  static Element formula(FormulaPtr f) { return Element(Rep(std::move(f))); }
  static Element gate(Uuid id) { return Element(Rep(GateRef{id})); }

  bool is_count() const { return std::holds_alternative<std::uint64_t>(rep_); }
  bool is_why() const { return std::holds_alternative<WhySet>(rep_); }
  bool is_boolean() const { return std::holds_alternative<BoolRef>(rep_); }
  bool is_formula() const { return std::holds_alternative<FormulaPtr>(rep_); }
  bool is_gate() const { return std::holds_alternative<GateRef>(rep_); }

  std::uint64_t as_count() const;
  const WhySet& as_why() const;
  const BoolRef& as_boolean() const;
  const FormulaPtr& as_formula() const;
  const GateRef& as_gate() const;

  const Rep& rep() const { return rep_; }

  // Deterministic total order across all alternatives (variant index first,
  // then structural). Boolean nodes compare structurally, so ordering is
  // stable across runs regardless of arena layout.
  static int compare(const Element& a, const Element& b);

  std::string to_string() const;

 private:
  Rep rep_;
};

inline bool operator==(const Element& a, const Element& b) { return Element::compare(a, b) == 0; }
inline bool operator!=(const Element& a, const Element& b) { return Element::compare(a, b) != 0; }
inline bool operator<(const Element& a, const Element& b) { return Element::compare(a, b) < 0; }

std::string formula_to_string(const FormulaPtr& f);
std::string why_to_string(const WhySet& w);

}  // namespace provq
