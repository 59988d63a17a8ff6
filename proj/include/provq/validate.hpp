#pragma once

#include <vector>

#include "provq/ast.hpp"
#include "provq/relation.hpp"

namespace provq {

// Output column tags of a validated query.
struct Validated {
  std::vector<ValueTag> column_tags;
  std::size_t arity() const { return column_tags.size(); }
};

// Bottom-up typing of a query against a schema. Rejects out-of-range
// positional indices, mixed-tag terms and comparisons, arity/tag mismatches
// across msum/mdiff branches, unknown relations, and value aggregates that
// are not the root operator (the annotation folds emitted by the provenance
// rewrite may appear anywhere).
Validated validate(const QueryPtr& q, const Schema& schema);

// Tag of a term over an input row with the given column tags.
ValueTag type_term(const Term& t, const std::vector<ValueTag>& input);
void type_predicate(const Predicate& p, const std::vector<ValueTag>& input);

}  // namespace provq
