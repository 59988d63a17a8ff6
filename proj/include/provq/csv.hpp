#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "provq/relation.hpp"

namespace provq {

// CSV dialect: comma separator, double-quote quoting with doubled-quote
// escapes, mandatory header row, UTF-8, no empty cells (there are no NULLs).

// Loads data rows against declared column names and tags. Duplicate rows
// accumulate multiplicity.
Relation load_csv(const std::string& path, const TableSchema& schema);
Relation load_csv_text(const std::string& text, const TableSchema& schema);

void save_csv(std::ostream& out, const Relation& rel,
              const std::vector<std::string>& column_names);
std::string csv_to_string(const Relation& rel, const std::vector<std::string>& column_names);

// Raw row-level access (used by the catalog to manage token columns).
std::vector<std::vector<std::string>> read_csv_rows(const std::string& text);
std::string write_csv_rows(const std::vector<std::vector<std::string>>& rows);

Value parse_cell(const std::string& cell, ValueTag tag, std::size_t row, std::size_t col);

}  // namespace provq
