#include "provq/csv.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "provq/errors.hpp"

namespace provq {

std::vector<std::vector<std::string>> read_csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool cell_started = false;
  std::size_t i = 0;
  auto end_cell = [&] {
    row.push_back(std::move(cell));
    cell.clear();
    cell_started = false;
  };
  auto end_row = [&] {
    end_cell();
    rows.push_back(std::move(row));
    row.clear();
  };
  while (i < text.size()) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          i += 2;
          continue;
        }
        quoted = false;
        ++i;
        continue;
      }
      cell.push_back(c);
      ++i;
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        cell_started = true;
        ++i;
        break;
      case ',':
        end_cell();
        ++i;
        break;
      case '\r':
        ++i;
        break;
      case '\n':
        end_row();
        ++i;
        break;
      default:
        cell.push_back(c);
        cell_started = true;
        ++i;
        break;
    }
  }
  if (quoted) raise(Errc::BadCell, "unterminated quoted cell");
  if (cell_started || !row.empty()) end_row();
  return rows;
}

namespace {

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n\r") != std::string::npos || s.empty();
}

std::string quote_cell(const std::string& s) {
  if (!needs_quoting(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

std::string write_csv_rows(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out.push_back(',');
      out += quote_cell(row[i]);
    }
    out.push_back('\n');
  }
  return out;
}

Value parse_cell(const std::string& cell, ValueTag tag, std::size_t row, std::size_t col) {
  auto bad = [&](const std::string& why) -> Value {
    raise(Errc::BadCell, "row " + std::to_string(row) + ", column " + std::to_string(col) + ": " +
                             why + " ('" + cell + "')");
  };
  switch (tag) {
    case ValueTag::Int: {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size()) return bad("not an integer");
      return Value::integer(v);
    }
    case ValueTag::Real: {
      if (cell.empty()) return bad("not a real");
      char* end = nullptr;
      double v = std::strtod(cell.c_str(), &end);
      if (end != cell.c_str() + cell.size()) return bad("not a real");
      if (v != v) return bad("NaN is not a value");
      return Value::real(v);
    }
    case ValueTag::Text:
      return Value::text(cell);
    case ValueTag::Bool:
      if (cell == "true") return Value::boolean(true);
      if (cell == "false") return Value::boolean(false);
      return bad("not a boolean");
    case ValueTag::Date:
      if (!Value::is_valid_date(cell)) return bad("not an ISO-8601 date");
      return Value::date(cell);
    default:
      return bad("annotation columns cannot be loaded from CSV");
  }
}

Relation load_csv_text(const std::string& text, const TableSchema& schema) {
  auto rows = read_csv_rows(text);
  if (rows.empty()) raise(Errc::HeaderMismatch, "missing header row");
  const auto& header = rows[0];
  if (header.size() != schema.column_names.size()) {
    raise(Errc::HeaderMismatch, "header has " + std::to_string(header.size()) +
                                    " columns, declaration has " +
                                    std::to_string(schema.column_names.size()));
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] != schema.column_names[i]) {
      raise(Errc::HeaderMismatch, "header column '" + header[i] + "' does not match declared '" +
                                      schema.column_names[i] + "'");
    }
  }

  Relation out(schema.arity());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != schema.arity()) {
      raise(Errc::BadCell, "row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                               " cells, expected " + std::to_string(schema.arity()));
    }
    Tuple t;
    t.components.reserve(schema.arity());
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c].empty()) {
        raise(Errc::EmptyCell,
              "row " + std::to_string(r) + ", column " + std::to_string(c + 1) + " is empty");
      }
      t.components.push_back(parse_cell(row[c], schema.tags[c], r, c + 1));
    }
    out.add(std::move(t), 1);
  }
  return out;
}

Relation load_csv(const std::string& path, const TableSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_csv_text(buf.str(), schema);
}

void save_csv(std::ostream& out, const Relation& rel,
              const std::vector<std::string>& column_names) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back(column_names);
  for (const auto& [t, c] : rel.counts()) {
    std::vector<std::string> row;
    row.reserve(t.arity());
    for (const auto& v : t.components) row.push_back(v.to_string());
    for (std::uint64_t i = 0; i < c; ++i) rows.push_back(row);
  }
  out << write_csv_rows(rows);
}

std::string csv_to_string(const Relation& rel, const std::vector<std::string>& column_names) {
  std::ostringstream out;
  save_csv(out, rel, column_names);
  return out.str();
}

}  // namespace provq
