#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "provq/value.hpp"

namespace provq {

// Finite multiset of same-arity tuples. Stored multiplicities are always
// positive; iteration order is the canonical tuple order, so every consumer
// (folds, printing, fixtures) is deterministic.
class Relation {
 public:
  using Counts = std::map<Tuple, std::uint64_t>;

  explicit Relation(std::size_t arity) : arity_(arity) {}

  std::size_t arity() const { return arity_; }

  // Adds `count` occurrences; checked against multiplicity overflow.
  void add(Tuple t, std::uint64_t count = 1);

  std::uint64_t count(const Tuple& t) const;
  bool contains(const Tuple& t) const { return count(t) > 0; }

  const Counts& counts() const { return counts_; }
  std::size_t distinct_size() const { return counts_.size(); }
  std::uint64_t total_size() const;  // with multiplicities
  bool empty() const { return counts_.empty(); }

  bool operator==(const Relation& o) const {
    return arity_ == o.arity_ && counts_ == o.counts_;
  }

 private:
  std::size_t arity_;
  Counts counts_;
};

// Column metadata for one relation label.
struct TableSchema {
  std::vector<std::string> column_names;
  std::vector<ValueTag> tags;

  std::size_t arity() const { return tags.size(); }
};

// Labels are unique by construction (map keys).
struct Schema {
  std::map<std::string, TableSchema> tables;

  const TableSchema* find(const std::string& label) const {
    auto it = tables.find(label);
    return it == tables.end() ? nullptr : &it->second;
  }
};

using Instance = std::map<std::string, Relation>;

// Overflow-checked multiplicity arithmetic.
std::uint64_t checked_count_add(std::uint64_t a, std::uint64_t b);
std::uint64_t checked_count_mul(std::uint64_t a, std::uint64_t b);

}  // namespace provq
