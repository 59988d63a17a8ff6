#pragma once

#include "provq/ast.hpp"
#include "provq/relation.hpp"
#include "provq/semiring.hpp"

namespace provq {

// Evaluation environment. The structure is only consulted by annotation
// operator terms and annotation folds (present in rewritten queries); plain
// queries evaluate with structure == nullptr.
struct EvalContext {
  const Instance* instance = nullptr;
  const AnnotationStructure* structure = nullptr;
  // Equijoin detection for select-over-(project-over-)cross shapes. Disabled
  // in differential tests to compare against the naive nested-loop path.
  bool enable_hash_join = true;
};

Value eval_term(const Term& t, const Tuple& row, const AnnotationStructure* structure = nullptr);
bool eval_predicate(const Predicate& p, const Tuple& row);

Relation eval_query(const QueryPtr& q, const EvalContext& ctx);

inline Relation eval_query(const QueryPtr& q, const Instance& instance) {
  EvalContext ctx;
  ctx.instance = &instance;
  return eval_query(q, ctx);
}

}  // namespace provq
