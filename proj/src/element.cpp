#include "provq/element.hpp"

#include <algorithm>

#include "provq/bool_circuit.hpp"
#include "provq/errors.hpp"

namespace provq {

WhySet WhySet::empty() {
  static const auto kEmpty = std::make_shared<const std::vector<std::vector<std::string>>>();
  return WhySet{kEmpty};
}

WhySet WhySet::of(std::vector<std::vector<std::string>> raw) {
  for (auto& inner : raw) {
    std::sort(inner.begin(), inner.end());
    inner.erase(std::unique(inner.begin(), inner.end()), inner.end());
  }
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  return WhySet{std::make_shared<const std::vector<std::vector<std::string>>>(std::move(raw))};
}

FormulaPtr formula_zero() {
  static const FormulaPtr kZero = std::make_shared<FormulaNode>(
      FormulaNode{FormulaNode::Kind::Zero, "", nullptr, nullptr});
  return kZero;
}

FormulaPtr formula_one() {
  static const FormulaPtr kOne = std::make_shared<FormulaNode>(
      FormulaNode{FormulaNode::Kind::One, "", nullptr, nullptr});
  return kOne;
}

FormulaPtr formula_token(std::string token) {
  return std::make_shared<FormulaNode>(
      FormulaNode{FormulaNode::Kind::Token, std::move(token), nullptr, nullptr});
}

std::uint64_t Element::as_count() const {
  if (!is_count()) raise(Errc::DomainMismatch, "element is not a counting element");
  return std::get<std::uint64_t>(rep_);
}

const WhySet& Element::as_why() const {
  if (!is_why()) raise(Errc::DomainMismatch, "element is not a why-provenance element");
  return std::get<WhySet>(rep_);
}

const BoolRef& Element::as_boolean() const {
  if (!is_boolean()) raise(Errc::DomainMismatch, "element is not a Boolean element");
  return std::get<BoolRef>(rep_);
}

const FormulaPtr& Element::as_formula() const {
  if (!is_formula()) raise(Errc::DomainMismatch, "element is not a formula element");
  return std::get<FormulaPtr>(rep_);
}

const GateRef& Element::as_gate() const {
  if (!is_gate()) raise(Errc::DomainMismatch, "element is not a gate element");
  return std::get<GateRef>(rep_);
}

namespace {

int compare_formula(const FormulaPtr& a, const FormulaPtr& b) {
  if (a.get() == b.get()) return 0;
  if (a->kind != b->kind) return int(a->kind) < int(b->kind) ? -1 : 1;
  switch (a->kind) {
    case FormulaNode::Kind::Zero:
    case FormulaNode::Kind::One:
      return 0;
    case FormulaNode::Kind::Token:
      return a->token.compare(b->token);
    case FormulaNode::Kind::Delta:
      return compare_formula(a->lhs, b->lhs);
    default: {
      int c = compare_formula(a->lhs, b->lhs);
      if (c != 0) return c;
      return compare_formula(a->rhs, b->rhs);
    }
  }
}

template <typename T>
int three_way(const T& a, const T& b) {
  if (a < b) return -1;
  if (b < a) return 1;
  return 0;
}

}  // namespace

int Element::compare(const Element& a, const Element& b) {
  if (a.rep_.index() != b.rep_.index()) {
    return a.rep_.index() < b.rep_.index() ? -1 : 1;
  }
  switch (a.rep_.index()) {
    case 0:
      return three_way(std::get<std::uint64_t>(a.rep_), std::get<std::uint64_t>(b.rep_));
    case 1:
      return three_way(std::get<WhySet>(a.rep_).get(), std::get<WhySet>(b.rep_).get());
    case 2: {
      const auto& ra = std::get<BoolRef>(a.rep_);
      const auto& rb = std::get<BoolRef>(b.rep_);
      if (ra.circuit.get() == rb.circuit.get() && ra.node == rb.node) return 0;
      return BoolCircuit::compare_structural(*ra.circuit, ra.node, *rb.circuit, rb.node);
    }
    case 3:
      return compare_formula(std::get<FormulaPtr>(a.rep_), std::get<FormulaPtr>(b.rep_));
    default:
      return three_way(std::get<GateRef>(a.rep_).id, std::get<GateRef>(b.rep_).id);
  }
}

std::string why_to_string(const WhySet& w) {
  std::string out = "{";
  bool first_outer = true;
  for (const auto& inner : w.get()) {
    if (!first_outer) out += ",";
    first_outer = false;
    out += "{";
    bool first = true;
    for (const auto& t : inner) {
      if (!first) out += ",";
      first = false;
      out += t;
    }
    out += "}";
  }
  out += "}";
  return out;
}

std::string formula_to_string(const FormulaPtr& f) {
  switch (f->kind) {
    case FormulaNode::Kind::Zero:
      return "0";
    case FormulaNode::Kind::One:
      return "1";
    case FormulaNode::Kind::Token:
      return f->token;
    case FormulaNode::Kind::Delta:
      return "δ(" + formula_to_string(f->lhs) + ")";
    case FormulaNode::Kind::Plus:
      return "(" + formula_to_string(f->lhs) + " ⊕ " + formula_to_string(f->rhs) + ")";
    case FormulaNode::Kind::Times:
      return "(" + formula_to_string(f->lhs) + " ⊗ " + formula_to_string(f->rhs) + ")";
    case FormulaNode::Kind::Monus:
      return "(" + formula_to_string(f->lhs) + " ⊖ " + formula_to_string(f->rhs) + ")";
  }
  return "?";
}

std::string Element::to_string() const {
  switch (rep_.index()) {
    case 0:
      return std::to_string(std::get<std::uint64_t>(rep_));
    case 1:
      return why_to_string(std::get<WhySet>(rep_));
    case 2: {
      const auto& r = std::get<BoolRef>(rep_);
      return r.circuit->to_string(r.node);
    }
    case 3:
      return formula_to_string(std::get<FormulaPtr>(rep_));
    default:
      return std::get<GateRef>(rep_).id.to_string();
  }
}

}  // namespace provq
