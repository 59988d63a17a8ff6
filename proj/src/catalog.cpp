#include "provq/catalog.hpp"

#include <fstream>
#include <sstream>

#include "provq/csv.hpp"
#include "provq/errors.hpp"
#include "provq/probability.hpp"

namespace provq {

namespace {

constexpr const char* kManifestName = "catalog.txt";
constexpr const char* kManifestHeader = "provq-catalog 1";

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::IoError, "cannot write '" + path.string() + "'");
  out << content;
}

}  // namespace

ValueTag value_tag_from_name(const std::string& name) {
  if (name == "int") return ValueTag::Int;
  if (name == "real") return ValueTag::Real;
  if (name == "text") return ValueTag::Text;
  if (name == "bool") return ValueTag::Bool;
  if (name == "date") return ValueTag::Date;
  raise(Errc::UsageError, "unknown column tag '" + name + "'");
}

TableSchema parse_schema_decl(const std::string& decl) {
  TableSchema schema;
  std::stringstream ss(decl);
  std::string part;
  while (std::getline(ss, part, ',')) {
    auto colon = part.find(':');
    if (colon == std::string::npos) {
      raise(Errc::UsageError, "schema column must be name:tag, got '" + part + "'");
    }
    std::string name = part.substr(0, colon);
    std::string tag = part.substr(colon + 1);
    if (name.empty()) raise(Errc::UsageError, "empty column name in schema declaration");
    schema.column_names.push_back(name);
    schema.tags.push_back(value_tag_from_name(tag));
  }
  if (schema.column_names.empty()) raise(Errc::UsageError, "empty schema declaration");
  return schema;
}

Catalog Catalog::init(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Catalog c;
  c.dir_ = dir;
  if (std::filesystem::exists(dir / kManifestName)) {
    raise(Errc::UsageError, "'" + dir.string() + "' already holds a catalog");
  }
  CircuitStore store((dir / c.circuit_file_).string());  // creates the file
  c.save();
  return c;
}

Catalog Catalog::open(const std::filesystem::path& dir) {
  Catalog c;
  c.dir_ = dir;
  std::string text = read_file(dir / kManifestName);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) {
    raise(Errc::CorruptHeader, "'" + (dir / kManifestName).string() + "' is not a catalog");
  }
  CatalogTable* current = nullptr;
  std::string current_name;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "circuit") {
      ls >> c.circuit_file_;
    } else if (word == "table") {
      ls >> current_name;
      current = &c.tables_[current_name];
    } else if (word == "end") {
      current = nullptr;
    } else if (current) {
      if (word == "csv") {
        ls >> current->csv_file;
      } else if (word == "column") {
        std::string name, tag;
        ls >> name >> tag;
        current->schema.column_names.push_back(name);
        current->schema.tags.push_back(value_tag_from_name(tag));
      } else if (word == "provenance") {
        current->provenance = true;
        ls >> current->token_column;
      } else if (word == "prob") {
        std::string token;
        double p;
        ls >> token >> p;
        current->token_probs[token] = p;
      } else {
        raise(Errc::CorruptHeader, "unknown manifest entry '" + word + "'");
      }
    } else {
      raise(Errc::CorruptHeader, "manifest entry outside a table block: '" + line + "'");
    }
  }
  return c;
}

void Catalog::save() const {
  std::ostringstream out;
  out << kManifestHeader << "\n";
  out << "circuit " << circuit_file_ << "\n";
  for (const auto& [name, t] : tables_) {
    out << "table " << name << "\n";
    out << "csv " << t.csv_file << "\n";
    for (std::size_t i = 0; i < t.schema.column_names.size(); ++i) {
      out << "column " << t.schema.column_names[i] << " " << value_tag_name(t.schema.tags[i])
          << "\n";
    }
    if (t.provenance) out << "provenance " << t.token_column << "\n";
    for (const auto& [token, p] : t.token_probs) {
      std::ostringstream ps;
      ps.precision(17);
      ps << p;
      out << "prob " << token << " " << ps.str() << "\n";
    }
    out << "end\n";
  }
  write_file(dir_ / kManifestName, out.str());
}

const CatalogTable& Catalog::table(const std::string& name) const {
  auto it = tables_.find(name);
  if (it == tables_.end()) raise(Errc::UnknownTable, "no table named '" + name + "'");
  return it->second;
}

CatalogTable& Catalog::table_mut(const std::string& name) {
  auto it = tables_.find(name);
  if (it == tables_.end()) raise(Errc::UnknownTable, "no table named '" + name + "'");
  return it->second;
}

void Catalog::load_table(const std::string& name, const std::filesystem::path& csv_source,
                         const TableSchema& schema) {
  for (const auto& col : schema.column_names) {
    if (col.empty()) raise(Errc::UsageError, "empty column name");
  }
  Relation rel = load_csv(csv_source.string(), schema);  // validates cells
  CatalogTable t;
  t.schema = schema;
  t.csv_file = name + ".csv";
  // Normalize: canonical order, quoting per our dialect.
  write_file(dir_ / t.csv_file, csv_to_string(rel, schema.column_names));
  tables_[name] = std::move(t);
  save();
}

std::vector<std::vector<std::string>> Catalog::raw_rows(const CatalogTable& t) const {
  return read_csv_rows(read_file(csv_path(t)));
}

void Catalog::add_provenance(const std::string& name, CircuitStore& store,
                             const std::string& token_column) {
  CatalogTable& t = table_mut(name);
  if (t.provenance) {
    raise(Errc::AlreadyProvenanced, "table '" + name + "' already carries tokens");
  }
  auto rows = raw_rows(t);
  if (rows.empty()) raise(Errc::HeaderMismatch, "table CSV lost its header");
  rows[0].push_back(token_column);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    rows[r].push_back(store.create_input().to_string());
  }
  write_file(csv_path(t), write_csv_rows(rows));
  store.flush();
  t.provenance = true;
  t.token_column = token_column;
  save();
}

void Catalog::set_prob_token(const std::string& name, const std::string& token, double p) {
  validate_prob(p);
  CatalogTable& t = table_mut(name);
  if (!t.provenance) raise(Errc::UnknownToken, "table '" + name + "' has no tokens");
  bool found = false;
  for (const auto& [tuple, uuid] : annotated_rows(name)) {
    if (uuid.to_string() == token) {
      found = true;
      break;
    }
  }
  if (!found) raise(Errc::UnknownToken, "token '" + token + "' not in table '" + name + "'");
  t.token_probs[token] = p;
  save();
}

void Catalog::set_prob_all(const std::string& name, double p) {
  validate_prob(p);
  CatalogTable& t = table_mut(name);
  if (!t.provenance) raise(Errc::UnknownToken, "table '" + name + "' has no tokens");
  for (const auto& [tuple, uuid] : annotated_rows(name)) {
    t.token_probs[uuid.to_string()] = p;
  }
  save();
}

void Catalog::set_prob_from_column(const std::string& name, const std::string& column) {
  CatalogTable& t = table_mut(name);
  if (!t.provenance) raise(Errc::UnknownToken, "table '" + name + "' has no tokens");
  std::size_t col = t.schema.column_names.size();
  for (std::size_t i = 0; i < t.schema.column_names.size(); ++i) {
    if (t.schema.column_names[i] == column) {
      col = i;
      break;
    }
  }
  if (col == t.schema.column_names.size()) {
    raise(Errc::UsageError, "no column named '" + column + "' in table '" + name + "'");
  }
  if (t.schema.tags[col] != ValueTag::Real && t.schema.tags[col] != ValueTag::Int) {
    raise(Errc::UsageError, "probability column must be real or int");
  }
  for (const auto& [tuple, uuid] : annotated_rows(name)) {
    const Value& v = tuple.at(col);
    double p = v.tag() == ValueTag::Real ? v.as_real() : double(v.as_int());
    validate_prob(p);
    t.token_probs[uuid.to_string()] = p;
  }
  save();
}

Schema Catalog::data_schema() const {
  Schema s;
  for (const auto& [name, t] : tables_) s.tables[name] = t.schema;
  return s;
}

Relation Catalog::data_relation(const std::string& name) const {
  const CatalogTable& t = table(name);
  auto rows = raw_rows(t);
  std::size_t expected = t.schema.arity() + (t.provenance ? 1 : 0);
  Relation out(t.schema.arity());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != expected) {
      raise(Errc::BadCell, "row " + std::to_string(r) + " has the wrong number of cells");
    }
    Tuple tuple;
    tuple.components.reserve(t.schema.arity());
    for (std::size_t c = 0; c < t.schema.arity(); ++c) {
      tuple.components.push_back(parse_cell(rows[r][c], t.schema.tags[c], r, c + 1));
    }
    out.add(std::move(tuple), 1);
  }
  return out;
}

std::vector<std::pair<Tuple, Uuid>> Catalog::annotated_rows(const std::string& name) const {
  const CatalogTable& t = table(name);
  if (!t.provenance) {
    raise(Errc::UnknownToken, "table '" + name + "' is not provenance-aware");
  }
  auto rows = raw_rows(t);
  std::vector<std::pair<Tuple, Uuid>> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != t.schema.arity() + 1) {
      raise(Errc::BadCell, "row " + std::to_string(r) + " has the wrong number of cells");
    }
    Tuple tuple;
    tuple.components.reserve(t.schema.arity());
    for (std::size_t c = 0; c < t.schema.arity(); ++c) {
      tuple.components.push_back(parse_cell(rows[r][c], t.schema.tags[c], r, c + 1));
    }
    auto uuid = Uuid::parse(rows[r].back());
    if (!uuid) raise(Errc::BadCell, "row " + std::to_string(r) + ": bad token uuid");
    out.emplace_back(std::move(tuple), *uuid);
  }
  return out;
}

std::map<std::string, std::string> Catalog::display_mapping(const std::string& name,
                                                            const std::string& column) const {
  const CatalogTable& t = table(name);
  std::map<std::string, std::string> out;
  if (column.empty()) {
    for (const auto& [tuple, uuid] : annotated_rows(name)) {
      out[uuid.to_string()] = uuid.to_string();
    }
    return out;
  }
  std::size_t col = t.schema.column_names.size();
  for (std::size_t i = 0; i < t.schema.column_names.size(); ++i) {
    if (t.schema.column_names[i] == column) {
      col = i;
      break;
    }
  }
  if (col == t.schema.column_names.size()) {
    raise(Errc::UsageError, "no column named '" + column + "' in table '" + name + "'");
  }
  for (const auto& [tuple, uuid] : annotated_rows(name)) {
    out[uuid.to_string()] = tuple.at(col).to_string();
  }
  return out;
}

}  // namespace provq
