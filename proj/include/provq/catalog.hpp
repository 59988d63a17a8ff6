#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "provq/circuit_store.hpp"
#include "provq/relation.hpp"

namespace provq {

// One table: data columns, a backing CSV under the catalog directory, and,
// once provenance is enabled, a token column whose cells are input-gate
// UUIDs plus per-token probabilities.
struct CatalogTable {
  TableSchema schema;  // data columns only
  std::string csv_file;
  bool provenance = false;
  std::string token_column;
  std::map<std::string, double> token_probs;  // token uuid -> probability
};

// Directory-backed catalog: a versioned text manifest next to the circuit
// file and one normalized CSV per table.
class Catalog {
 public:
  static Catalog init(const std::filesystem::path& dir);
  static Catalog open(const std::filesystem::path& dir);

  void save() const;

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path circuit_path() const { return dir_ / circuit_file_; }

  const std::map<std::string, CatalogTable>& tables() const { return tables_; }
  const CatalogTable& table(const std::string& name) const;

  // Loads and normalizes a CSV into the catalog.
  void load_table(const std::string& name, const std::filesystem::path& csv_source,
                  const TableSchema& schema);

  // Assigns one fresh input gate per tuple occurrence and materializes the
  // token column. A second call on the same table is an error.
  void add_provenance(const std::string& name, CircuitStore& store,
                      const std::string& token_column = "token");

  void set_prob_token(const std::string& name, const std::string& token, double p);
  void set_prob_all(const std::string& name, double p);
  // Reads each row's probability from one of its data columns (int or real).
  void set_prob_from_column(const std::string& name, const std::string& column);

  Schema data_schema() const;
  Relation data_relation(const std::string& name) const;
  // Tuple occurrences paired with their token (provenance tables only).
  std::vector<std::pair<Tuple, Uuid>> annotated_rows(const std::string& name) const;

  // token uuid string -> display string taken from `column` (empty column
  // name keeps the uuid itself).
  std::map<std::string, std::string> display_mapping(const std::string& name,
                                                     const std::string& column) const;

 private:
  CatalogTable& table_mut(const std::string& name);
  std::filesystem::path csv_path(const CatalogTable& t) const { return dir_ / t.csv_file; }
  std::vector<std::vector<std::string>> raw_rows(const CatalogTable& t) const;

  std::filesystem::path dir_;
  std::string circuit_file_ = "circuit.pvc";
  std::map<std::string, CatalogTable> tables_;
};

ValueTag value_tag_from_name(const std::string& name);
// "id:int,name:text,..." -> schema
TableSchema parse_schema_decl(const std::string& decl);

}  // namespace provq
