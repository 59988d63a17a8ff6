#pragma once

#include <string>

#include "provq/ast.hpp"

namespace provq {

// Parses the functional relational-algebra surface syntax:
//
//   R                          relation reference (also: relation R)
//   project[t, ...](q)         projection
//   select[pred](q)            selection
//   times(q, q)                cross product
//   msum(q, q)                 multiset sum
//   dedup(q)                   duplicate elimination
//   mdiff(q, q)                multiset difference (NOT IN semantics)
//   agg[group #i, ...; f(t) as name, ...](q)   aggregation
//   join[pred](q, q)           sugar for select[pred](times(q, q))
//   setunion(q, q)             sugar for dedup(msum(q, q))
//
// Terms: #i, integer/real/text/bool literals, date "...", infix + - * /,
// concat(a, b), and the annotation operators otimes(a, b) / ominus(a, b).
// Predicates: comparisons with = != < <= > >=, combined with and/or/not.
// Aggregate functions: count sum min max, the annotation folds oplus /
// deltaoplus, and the lifted forms lift_count(t, a) etc.
//
// print_query emits this same grammar; parse(print_query(q)) == q.
QueryPtr parse(const std::string& text);

}  // namespace provq
