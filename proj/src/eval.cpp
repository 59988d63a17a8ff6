#include "provq/eval.hpp"

#include <cmath>
#include <unordered_map>

#include "provq/errors.hpp"

namespace provq {

namespace {

std::int64_t checked_int(std::int64_t a, std::int64_t b, TermOp op) {
  std::int64_t r;
  bool overflow = false;
  switch (op) {
    case TermOp::Add: overflow = __builtin_add_overflow(a, b, &r); break;
    case TermOp::Sub: overflow = __builtin_sub_overflow(a, b, &r); break;
    case TermOp::Mul: overflow = __builtin_mul_overflow(a, b, &r); break;
    case TermOp::Div:
      if (b == 0) raise(Errc::DivideByZero, "integer division by zero");
      if (a == std::numeric_limits<std::int64_t>::min() && b == -1) {
        raise(Errc::Overflow, "integer division overflow");
      }
      r = a / b;
      break;
    default:
      raise(Errc::TagMismatch, "bad integer operator");
  }
  if (overflow) raise(Errc::Overflow, "integer term overflow");
  return r;
}

}  // namespace

Value eval_term(const Term& t, const Tuple& row, const AnnotationStructure* structure) {
  return std::visit(
      [&](const auto& rep) -> Value {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, Value>) {
          return rep;
        } else if constexpr (std::is_same_v<T, int>) {
          if (rep < 1 || std::size_t(rep) > row.arity()) {
            raise(Errc::IndexOutOfRange, "positional index #" + std::to_string(rep) +
                                             " exceeds tuple arity " + std::to_string(row.arity()));
          }
          return row.at(std::size_t(rep) - 1);
        } else {
          Value a = eval_term(rep.args[0], row, structure);
          Value b = eval_term(rep.args[1], row, structure);
          switch (rep.op) {
            case TermOp::Add:
            case TermOp::Sub:
            case TermOp::Mul:
            case TermOp::Div: {
              if (a.tag() != b.tag()) {
                raise(Errc::TagMismatch, "arithmetic over mixed tags");
              }
              if (a.tag() == ValueTag::Int) {
                return Value::integer(checked_int(a.as_int(), b.as_int(), rep.op));
              }
              if (a.tag() == ValueTag::Real) {
                double x = a.as_real(), y = b.as_real();
                switch (rep.op) {
                  case TermOp::Add: return Value::real(x + y);
                  case TermOp::Sub: return Value::real(x - y);
                  case TermOp::Mul: return Value::real(x * y);
                  default:
                    if (y == 0.0) raise(Errc::DivideByZero, "real division by zero");
                    return Value::real(x / y);
                }
              }
              raise(Errc::TagMismatch, "arithmetic requires numeric operands");
            }
            case TermOp::Concat:
              if (a.tag() != ValueTag::Text || b.tag() != ValueTag::Text) {
                raise(Errc::TagMismatch, "concat requires text operands");
              }
              return Value::text(a.as_text() + b.as_text());
            case TermOp::OTimes:
            case TermOp::OMinus: {
              if (a.tag() != ValueTag::Annot || b.tag() != ValueTag::Annot) {
                raise(Errc::TagMismatch, "annotation operator over non-annotation values");
              }
              if (!structure) {
                raise(Errc::AnnotationOpWithoutStructure,
                      "annotation operator evaluated without an active structure");
              }
              if (rep.op == TermOp::OTimes) {
                return Value::annotation(structure->times(a.as_annotation(), b.as_annotation()));
              }
              return Value::annotation(structure->monus(a.as_annotation(), b.as_annotation()));
            }
          }
          raise(Errc::TagMismatch, "bad term");
        }
      },
      t.rep());
}

bool eval_predicate(const Predicate& p, const Tuple& row) {
  return std::visit(
      [&](const auto& rep) -> bool {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, Predicate::Comparison>) {
          Value a = eval_term(rep.lhs, row);
          Value b = eval_term(rep.rhs, row);
          if (a.tag() != b.tag()) raise(Errc::TagMismatch, "comparison over mixed tags");
          if (a.tag() == ValueTag::Annot || a.tag() == ValueTag::Agg) {
            raise(Errc::TagMismatch, "comparison on annotation values");
          }
          int c = Value::compare_total(a, b);
          switch (rep.op) {
            case CmpOp::Eq: return c == 0;
            case CmpOp::Ne: return c != 0;
            case CmpOp::Lt: return c < 0;
            case CmpOp::Le: return c <= 0;
            case CmpOp::Gt: return c > 0;
            case CmpOp::Ge: return c >= 0;
          }
          return false;
        } else if constexpr (std::is_same_v<T, Predicate::And>) {
          for (const auto& part : rep.parts) {
            if (!eval_predicate(part, row)) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, Predicate::Or>) {
          for (const auto& part : rep.parts) {
            if (eval_predicate(part, row)) return true;
          }
          return false;
        } else {
          return !eval_predicate(rep.child[0], row);
        }
      },
      p.rep());
}

namespace {

Relation eval_node(const QueryPtr& q, const EvalContext& ctx);

Tuple concat_tuples(const Tuple& a, const Tuple& b) {
  Tuple out;
  out.components.reserve(a.arity() + b.arity());
  out.components.insert(out.components.end(), a.components.begin(), a.components.end());
  out.components.insert(out.components.end(), b.components.begin(), b.components.end());
  return out;
}

// ---------------------------------------------------------------------------
// Equijoin fast path for select over (project over) cross product. The
// provenance rewrite turns joins into exactly this shape, so without it a
// tracked query would degrade to a full nested loop.
// ---------------------------------------------------------------------------

struct JoinPlan {
  const CrossProduct* cross = nullptr;
  const Project* proj = nullptr;  // optional projection in between
  struct Key {
    int cross_a;  // 1-based columns of the cross product
    int cross_b;
    Predicate original;  // the conjunct, in output-row coordinates
  };
  std::vector<Key> keys;
  std::vector<Predicate> residual;  // evaluated on the output row
};

void flatten_conjuncts(const Predicate& p, std::vector<Predicate>& out) {
  if (const auto* a = std::get_if<Predicate::And>(&p.rep())) {
    for (const auto& part : a->parts) flatten_conjuncts(part, out);
  } else {
    out.push_back(p);
  }
}

std::optional<JoinPlan> plan_hash_join(const Select& sel, const Instance& instance,
                                       const Schema* /*unused*/) {
  JoinPlan plan;
  const QueryNode& child = *sel.child;
  if (const auto* cross = std::get_if<CrossProduct>(&child.rep)) {
    plan.cross = cross;
  } else if (const auto* proj = std::get_if<Project>(&child.rep)) {
    if (const auto* cross = std::get_if<CrossProduct>(&proj->child->rep)) {
      plan.cross = cross;
      plan.proj = proj;
    }
  }
  if (!plan.cross) return std::nullopt;

  // Map a post-projection position to a cross-product column (only pure
  // column terms are mappable).
  auto to_cross_col = [&](int pos) -> int {
    if (!plan.proj) return pos;
    if (pos < 1 || std::size_t(pos) > plan.proj->terms.size()) return 0;
    const Term& t = plan.proj->terms[std::size_t(pos) - 1];
    return t.is_column() ? t.column_index() : 0;
  };

  // Which side each key column lands on is only known once the subplan
  // arities are; record candidates in cross coordinates and resolve later.
  std::vector<Predicate> conjuncts;
  flatten_conjuncts(sel.pred, conjuncts);
  for (const auto& c : conjuncts) {
    const auto* cmp = std::get_if<Predicate::Comparison>(&c.rep());
    if (cmp && cmp->op == CmpOp::Eq && cmp->lhs.is_column() && cmp->rhs.is_column()) {
      int a = to_cross_col(cmp->lhs.column_index());
      int b = to_cross_col(cmp->rhs.column_index());
      if (a >= 1 && b >= 1) {
        plan.keys.push_back(JoinPlan::Key{a, b, c});
        continue;
      }
    }
    plan.residual.push_back(c);
  }
  (void)instance;
  return plan.keys.empty() ? std::nullopt : std::optional<JoinPlan>(std::move(plan));
}

Relation eval_hash_join(const Select& sel, JoinPlan plan, const EvalContext& ctx) {
  Relation left = eval_node(plan.cross->left, ctx);
  Relation right = eval_node(plan.cross->right, ctx);
  std::size_t k1 = left.arity(), k2 = right.arity();
  (void)k2;

  // Resolve key sides now that arities are known; keys that do not span the
  // two sides go back to being output-row residuals.
  std::vector<std::pair<std::size_t, std::size_t>> keys;  // 0-based (left, right-local)
  std::vector<Predicate> residual = plan.residual;
  for (const auto& key : plan.keys) {
    bool a_left = std::size_t(key.cross_a) <= k1;
    bool b_left = std::size_t(key.cross_b) <= k1;
    if (a_left != b_left) {
      std::size_t l = std::size_t(a_left ? key.cross_a : key.cross_b) - 1;
      std::size_t r = std::size_t(a_left ? key.cross_b : key.cross_a) - k1 - 1;
      keys.emplace_back(l, r);
    } else {
      residual.push_back(key.original);
    }
  }
  if (keys.empty()) {
    // Nothing actually spans the two sides; filter the child plainly.
    Relation child = eval_node(sel.child, ctx);
    Relation out(child.arity());
    for (const auto& [t, c] : child.counts()) {
      if (eval_predicate(sel.pred, t)) out.add(t, c);
    }
    return out;
  }

  std::unordered_map<Tuple, std::vector<std::pair<const Tuple*, std::uint64_t>>, TupleHash> index;
  for (const auto& [rt, rc] : right.counts()) {
    Tuple key;
    key.components.reserve(keys.size());
    for (auto [l, r] : keys) key.components.push_back(rt.at(r));
    index[key].emplace_back(&rt, rc);
  }

  std::size_t out_arity = plan.proj ? plan.proj->terms.size() : k1 + k2;
  Relation out(out_arity);
  for (const auto& [lt, lc] : left.counts()) {
    Tuple key;
    key.components.reserve(keys.size());
    for (auto [l, r] : keys) key.components.push_back(lt.at(l));
    auto it = index.find(key);
    if (it == index.end()) continue;
    for (const auto& [rt, rc] : it->second) {
      Tuple cross_row = concat_tuples(lt, *rt);
      Tuple out_row;
      if (plan.proj) {
        out_row.components.reserve(plan.proj->terms.size());
        for (const auto& t : plan.proj->terms) {
          out_row.components.push_back(eval_term(t, cross_row, ctx.structure));
        }
      } else {
        out_row = std::move(cross_row);
      }
      bool keep = true;
      for (const auto& rp : residual) {
        if (!eval_predicate(rp, out_row)) {
          keep = false;
          break;
        }
      }
      if (keep) out.add(std::move(out_row), checked_count_mul(lc, rc));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

Relation eval_aggregate(const Aggregate& agg, const EvalContext& ctx) {
  Relation child = eval_node(agg.child, ctx);
  std::size_t out_arity = agg.group_cols.size() + agg.aggs.size();
  Relation out(out_arity);
  if (child.empty()) return out;  // aggregation over nothing is nothing

  // Group rows by the group-column values; map iteration keeps both the
  // groups and the rows within each group in canonical order.
  std::map<Tuple, std::vector<std::pair<const Tuple*, std::uint64_t>>> groups;
  for (const auto& [t, c] : child.counts()) {
    Tuple key;
    key.components.reserve(agg.group_cols.size());
    for (int col : agg.group_cols) key.components.push_back(t.at(std::size_t(col) - 1));
    groups[std::move(key)].emplace_back(&t, c);
  }

  for (const auto& [key, rows] : groups) {
    Tuple out_row;
    out_row.components = key.components;
    for (const auto& spec : agg.aggs) {
      switch (spec.kind) {
        case AggKind::Count:
        case AggKind::Sum:
        case AggKind::Min:
        case AggKind::Max: {
          MonoidAggregate f{spec.kind == AggKind::Count ? AggFn::Count
                            : spec.kind == AggKind::Sum ? AggFn::Sum
                            : spec.kind == AggKind::Min ? AggFn::Min
                                                        : AggFn::Max};
          bool first = true;
          Value acc;
          for (const auto& [row, count] : rows) {
            Value v = eval_term(spec.term, *row, ctx.structure);
            Value contribution;
            switch (f.fn) {
              case AggFn::Count:
                if (count > std::uint64_t(std::numeric_limits<std::int64_t>::max())) {
                  raise(Errc::Overflow, "count aggregate overflow");
                }
                contribution = Value::integer(std::int64_t(count));
                break;
              case AggFn::Sum:
                if (v.tag() == ValueTag::Int) {
                  std::int64_t r;
                  if (__builtin_mul_overflow(v.as_int(), std::int64_t(count), &r)) {
                    raise(Errc::Overflow, "sum aggregate overflow");
                  }
                  contribution = Value::integer(r);
                } else if (v.tag() == ValueTag::Real) {
                  contribution = Value::real(v.as_real() * double(count));
                } else {
                  raise(Errc::TagMismatch, "sum requires numeric values");
                }
                break;
              case AggFn::Min:
              case AggFn::Max:
                contribution = f.unit(v);
                break;
            }
            if (first) {
              acc = contribution;
              first = false;
            } else {
              acc = f.combine(acc, contribution);
            }
          }
          out_row.components.push_back(acc);
          break;
        }
        case AggKind::PlusFold:
        case AggKind::DeltaPlusFold: {
          if (!ctx.structure) {
            raise(Errc::AnnotationOpWithoutStructure,
                  "annotation fold evaluated without an active structure");
          }
          std::vector<Element> elems;
          for (const auto& [row, count] : rows) {
            Value v = eval_term(spec.term, *row, ctx.structure);
            if (v.tag() != ValueTag::Annot) {
              raise(Errc::TagMismatch, "annotation fold over non-annotation value");
            }
            for (std::uint64_t i = 0; i < count; ++i) elems.push_back(v.as_annotation());
          }
          Element folded = ctx.structure->plus_fold(elems);
          if (spec.kind == AggKind::DeltaPlusFold) folded = ctx.structure->delta(folded);
          out_row.components.push_back(Value::annotation(std::move(folded)));
          break;
        }
        default: {
          // Lifted aggregate: collect (value, annotation) tensor pairs.
          if (!ctx.structure) {
            raise(Errc::AnnotationOpWithoutStructure,
                  "lifted aggregate evaluated without an active structure");
          }
          MonoidAggregate f{agg_fn_from_name(agg_kind_name(agg_unlift(spec.kind)))};
          std::vector<std::pair<Value, Element>> pairs;
          for (const auto& [row, count] : rows) {
            Value v = eval_term(spec.term, *row, ctx.structure);
            Value a = eval_term(*spec.annot, *row, ctx.structure);
            if (a.tag() != ValueTag::Annot) {
              raise(Errc::TagMismatch, "lifted aggregate annotation term must be annotation");
            }
            for (std::uint64_t i = 0; i < count; ++i) pairs.emplace_back(v, a.as_annotation());
          }
          out_row.components.push_back(
              Value::aggregate(sm_aggregate(f, std::move(pairs), *ctx.structure)));
          break;
        }
      }
    }
    out.add(std::move(out_row), 1);
  }
  return out;
}

Relation eval_node(const QueryPtr& q, const EvalContext& ctx) {
  return std::visit(
      [&](const auto& n) -> Relation {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, RelationRef>) {
          auto it = ctx.instance->find(n.label);
          if (it == ctx.instance->end()) {
            raise(Errc::UnknownRelation, "unknown relation '" + n.label + "'");
          }
          return it->second;
        } else if constexpr (std::is_same_v<T, Project>) {
          Relation child = eval_node(n.child, ctx);
          Relation out(n.terms.size());
          for (const auto& [t, c] : child.counts()) {
            Tuple row;
            row.components.reserve(n.terms.size());
            for (const auto& term : n.terms) {
              row.components.push_back(eval_term(term, t, ctx.structure));
            }
            out.add(std::move(row), c);
          }
          return out;
        } else if constexpr (std::is_same_v<T, Select>) {
          if (ctx.enable_hash_join) {
            if (auto plan = plan_hash_join(n, *ctx.instance, nullptr)) {
              return eval_hash_join(n, std::move(*plan), ctx);
            }
          }
          Relation child = eval_node(n.child, ctx);
          Relation out(child.arity());
          for (const auto& [t, c] : child.counts()) {
            if (eval_predicate(n.pred, t)) out.add(t, c);
          }
          return out;
        } else if constexpr (std::is_same_v<T, CrossProduct>) {
          Relation left = eval_node(n.left, ctx);
          Relation right = eval_node(n.right, ctx);
          Relation out(left.arity() + right.arity());
          for (const auto& [lt, lc] : left.counts()) {
            for (const auto& [rt, rc] : right.counts()) {
              out.add(concat_tuples(lt, rt), checked_count_mul(lc, rc));
            }
          }
          return out;
        } else if constexpr (std::is_same_v<T, MultisetSum>) {
          Relation left = eval_node(n.left, ctx);
          Relation right = eval_node(n.right, ctx);
          if (left.arity() != right.arity()) {
            raise(Errc::ArityMismatch, "multiset sum over different arities");
          }
          for (const auto& [t, c] : right.counts()) left.add(t, c);
          return left;
        } else if constexpr (std::is_same_v<T, DuplicateElim>) {
          Relation child = eval_node(n.child, ctx);
          Relation out(child.arity());
          for (const auto& [t, c] : child.counts()) out.add(t, 1);
          return out;
        } else if constexpr (std::is_same_v<T, MultisetDiff>) {
          Relation left = eval_node(n.left, ctx);
          Relation right = eval_node(n.right, ctx);
          if (left.arity() != right.arity()) {
            raise(Errc::ArityMismatch, "multiset difference over different arities");
          }
          Relation out(left.arity());
          for (const auto& [t, c] : left.counts()) {
            if (!right.contains(t)) out.add(t, c);
          }
          return out;
        } else {
          return eval_aggregate(n, ctx);
        }
      },
      q->rep);
}

}  // namespace

Relation eval_query(const QueryPtr& q, const EvalContext& ctx) {
  if (!ctx.instance) raise(Errc::UnknownRelation, "no instance bound");
  return eval_node(q, ctx);
}

}  // namespace provq
