#include "provq/relation.hpp"

#include "provq/errors.hpp"

namespace provq {

std::uint64_t checked_count_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_add_overflow(a, b, &r)) {
    raise(Errc::Overflow, "tuple multiplicity overflow");
  }
  return r;
}

std::uint64_t checked_count_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) {
    raise(Errc::Overflow, "tuple multiplicity overflow in cross product");
  }
  return r;
}

void Relation::add(Tuple t, std::uint64_t count) {
  if (count == 0) return;
  if (t.arity() != arity_) {
    raise(Errc::ArityMismatch, "tuple arity " + std::to_string(t.arity()) +
                                   " differs from relation arity " + std::to_string(arity_));
  }
  auto [it, inserted] = counts_.try_emplace(std::move(t), count);
  if (!inserted) it->second = checked_count_add(it->second, count);
}

std::uint64_t Relation::count(const Tuple& t) const {
  auto it = counts_.find(t);
  return it == counts_.end() ? 0 : it->second;
}

std::uint64_t Relation::total_size() const {
  std::uint64_t total = 0;
  for (const auto& [t, c] : counts_) total = checked_count_add(total, c);
  return total;
}

}  // namespace provq
