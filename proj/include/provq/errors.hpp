#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace provq {

// Every failure the engine can report carries one of these codes so tests
// and the CLI can dispatch on identity rather than message text.
enum class Errc : std::uint8_t {
  // query validation
  IndexOutOfRange,
  TagMismatch,
  ArityMismatch,
  AggregationNotTopLevel,
  UnknownRelation,
  // evaluation
  DivideByZero,
  Overflow,
  AnnotationOpWithoutStructure,
  // annotation structures
  MonusUnsupported,
  DeltaUnsupported,
  DomainMismatch,
  EmptyAggregate,
  SemimoduleUnresolved,
  // rewriter
  TokenCountMismatch,
  AlreadyRewritten,
  NeedsMonus,
  NeedsDelta,
  // circuit store
  IoError,
  CorruptHeader,
  UnknownChild,
  NotFound,
  UnmappedLeaf,
  IdCollision,
  // probability
  AggregateInProbability,
  TooManyVariables,
  NotReadOnce,
  TooWide,
  InvalidDecomposition,
  // frontend
  ParseError,
  HeaderMismatch,
  BadCell,
  EmptyCell,
  AlreadyProvenanced,
  UnknownTable,
  UnknownToken,
  BadProbability,
  UsageError,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message);

  Errc code() const { return code_; }

 private:
  Errc code_;
};

// Parse failures additionally carry a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(std::string message, int line, int column);

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

[[noreturn]] inline void raise(Errc code, std::string message) {
  throw Error(code, std::move(message));
}

}  // namespace provq
