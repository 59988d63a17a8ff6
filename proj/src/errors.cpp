#include "provq/errors.hpp"

namespace provq {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::TagMismatch: return "TagMismatch";
    case Errc::ArityMismatch: return "ArityMismatch";
    case Errc::AggregationNotTopLevel: return "AggregationNotTopLevel";
    case Errc::UnknownRelation: return "UnknownRelation";
    case Errc::DivideByZero: return "DivideByZero";
    case Errc::Overflow: return "Overflow";
    case Errc::AnnotationOpWithoutStructure: return "AnnotationOpWithoutStructure";
    case Errc::MonusUnsupported: return "MonusUnsupported";
    case Errc::DeltaUnsupported: return "DeltaUnsupported";
    case Errc::DomainMismatch: return "DomainMismatch";
    case Errc::EmptyAggregate: return "EmptyAggregate";
    case Errc::SemimoduleUnresolved: return "SemimoduleUnresolved";
    case Errc::TokenCountMismatch: return "TokenCountMismatch";
    case Errc::AlreadyRewritten: return "AlreadyRewritten";
    case Errc::NeedsMonus: return "NeedsMonus";
    case Errc::NeedsDelta: return "NeedsDelta";
    case Errc::IoError: return "IoError";
    case Errc::CorruptHeader: return "CorruptHeader";
    case Errc::UnknownChild: return "UnknownChild";
    case Errc::NotFound: return "NotFound";
    case Errc::UnmappedLeaf: return "UnmappedLeaf";
    case Errc::IdCollision: return "IdCollision";
    case Errc::AggregateInProbability: return "AggregateInProbability";
    case Errc::TooManyVariables: return "TooManyVariables";
    case Errc::NotReadOnce: return "NotReadOnce";
    case Errc::TooWide: return "TooWide";
    case Errc::InvalidDecomposition: return "InvalidDecomposition";
    case Errc::ParseError: return "ParseError";
    case Errc::HeaderMismatch: return "HeaderMismatch";
    case Errc::BadCell: return "BadCell";
    case Errc::EmptyCell: return "EmptyCell";
    case Errc::AlreadyProvenanced: return "AlreadyProvenanced";
    case Errc::UnknownTable: return "UnknownTable";
    case Errc::UnknownToken: return "UnknownToken";
    case Errc::BadProbability: return "BadProbability";
    case Errc::UsageError: return "UsageError";
  }
  return "UnknownError";
}

Error::Error(Errc code, std::string message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

ParseError::ParseError(std::string message, int line, int column)
    : Error(Errc::ParseError,
            message + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
      line_(line),
      column_(column) {}

}  // namespace provq
