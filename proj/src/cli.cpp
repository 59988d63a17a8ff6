#include "provq/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "provq/annotated.hpp"
#include "provq/catalog.hpp"
#include "provq/csv.hpp"
#include "provq/errors.hpp"
#include "provq/eval.hpp"
#include "provq/parser.hpp"
#include "provq/probability.hpp"
#include "provq/rewrite.hpp"
#include "provq/validate.hpp"

namespace provq {

namespace {

// ---------------------------------------------------------------------------
// Output formatting
// ---------------------------------------------------------------------------

void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out << "  ";
      out << row[i];
      if (i + 1 < row.size()) out << std::string(width[i] - row[i].size(), ' ');
    }
    out << "\n";
  };
  emit(header);
  std::vector<std::string> rule;
  for (std::size_t w : width) rule.push_back(std::string(w, '-'));
  emit(rule);
  for (const auto& row : rows) emit(row);
}

void print_rows(std::ostream& out, const std::string& format,
                const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  if (format == "csv") {
    std::vector<std::vector<std::string>> all;
    all.push_back(header);
    all.insert(all.end(), rows.begin(), rows.end());
    out << write_csv_rows(all);
  } else {
    print_table(out, header, rows);
  }
}

std::string format_probability(double p) {
  std::ostringstream ss;
  ss.precision(10);
  ss << p;
  return ss.str();
}

// Relation labels referenced by a query.
void collect_labels(const QueryPtr& q, std::set<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, RelationRef>) {
          out.insert(n.label);
        } else if constexpr (std::is_same_v<T, Project> || std::is_same_v<T, Select> ||
                             std::is_same_v<T, DuplicateElim> || std::is_same_v<T, Aggregate>) {
          collect_labels(n.child, out);
        } else {
          collect_labels(n.left, out);
          collect_labels(n.right, out);
        }
      },
      q->rep);
}

bool query_has_aggregate(const QueryPtr& q) {
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, RelationRef>) {
          return false;
        } else if constexpr (std::is_same_v<T, Aggregate>) {
          return true;
        } else if constexpr (std::is_same_v<T, Project> || std::is_same_v<T, Select> ||
                             std::is_same_v<T, DuplicateElim>) {
          return query_has_aggregate(n.child);
        } else {
          return query_has_aggregate(n.left) || query_has_aggregate(n.right);
        }
      },
      q->rep);
}

// ---------------------------------------------------------------------------
// Provenance-aware query execution
// ---------------------------------------------------------------------------

struct QueryOpts {
  std::string db = ".";
  std::string source;  // file or "-"
  std::string semiring;
  std::string mapping;
  bool prob = false;
  std::string method = "auto";
  std::uint64_t samples = 100000;
  std::optional<std::uint64_t> seed;
  bool explain = false;
  std::string format = "table";
};

std::string read_query_text(const std::string& source) {
  if (source == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(source, std::ios::binary);
  if (!in) raise(Errc::IoError, "cannot open query file '" + source + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> output_header(std::size_t data_columns, const QueryPtr& q,
                                       const std::string& extra) {
  std::vector<std::string> header;
  // Aggregate display names take precedence for their columns.
  std::vector<std::string> names(data_columns);
  if (const auto* agg = std::get_if<Aggregate>(&q->rep)) {
    std::size_t g = agg->group_cols.size();
    for (std::size_t i = 0; i < agg->aggs.size() && g + i < data_columns; ++i) {
      names[g + i] = agg->aggs[i].name;
    }
  }
  for (std::size_t i = 0; i < data_columns; ++i) {
    header.push_back(names[i].empty() ? "c" + std::to_string(i + 1) : names[i]);
  }
  if (!extra.empty()) header.push_back(extra);
  return header;
}

int run_query(const QueryOpts& opts, std::ostream& out) {
  Catalog catalog = Catalog::open(opts.db);
  QueryPtr ast = parse(read_query_text(opts.source));
  Schema schema = catalog.data_schema();
  Validated validated = validate(ast, schema);

  bool provenance_mode = opts.prob || !opts.semiring.empty() || opts.explain;
  if (!provenance_mode) {
    Instance instance;
    std::set<std::string> labels;
    collect_labels(ast, labels);
    for (const auto& label : labels) instance.emplace(label, catalog.data_relation(label));
    Relation result = eval_query(ast, instance);
    std::vector<std::vector<std::string>> rows;
    for (const auto& [t, c] : result.counts()) {
      std::vector<std::string> row;
      for (const auto& v : t.components) row.push_back(v.to_string());
      for (std::uint64_t i = 0; i < c; ++i) rows.push_back(row);
    }
    print_rows(out, opts.format, output_header(result.arity(), ast, ""), rows);
    return 0;
  }

  QueryPtr rewritten = rewrite(ast, schema);
  if (opts.explain) {
    out << print_query(rewritten) << "\n";
    if (!opts.prob && opts.semiring.empty()) return 0;
  }

  std::set<std::string> labels;
  collect_labels(ast, labels);
  CircuitStore store(catalog.circuit_path().string(),
                     opts.seed ? std::optional<std::uint64_t>(*opts.seed) : std::nullopt);
  StoreStructure structure(store);

  Instance instance;
  std::map<std::string, std::string> display;  // token uuid -> display string
  ProbMap probs;
  for (const auto& label : labels) {
    const CatalogTable& t = catalog.table(label);
    if (!t.provenance) {
      raise(Errc::UnknownToken,
            "table '" + label + "' is not provenance-aware; run add-provenance first");
    }
    Relation annotated(t.schema.arity() + 1);
    for (const auto& [tuple, uuid] : catalog.annotated_rows(label)) {
      store.add_input(uuid);  // tolerate a circuit file rebuilt from tokens
      Tuple row = tuple;
      row.components.push_back(Value::annotation(Element::gate(uuid)));
      annotated.add(std::move(row), 1);
    }
    instance.emplace(label, std::move(annotated));
    auto m = catalog.display_mapping(label, opts.mapping);
    display.insert(m.begin(), m.end());
    for (const auto& [token, p] : t.token_probs) probs[token] = p;
  }

  EvalContext ctx;
  ctx.instance = &instance;
  ctx.structure = &structure;
  Relation result = eval_query(rewritten, ctx);
  store.flush();
  AnnotatedRelation annotated = relation_to_annotated(result);

  if (opts.prob) {
    if (query_has_aggregate(ast)) {
      raise(Errc::AggregateInProbability,
            "probability of aggregate query outputs is not defined");
    }
    auto method = prob_method_from_name(opts.method);
    if (!method) raise(Errc::UsageError, "unknown method '" + opts.method + "'");
    ProbOptions poptions;
    poptions.method = *method;
    poptions.samples = opts.samples;
    poptions.seed = opts.seed.value_or(1);

    // Variables are keyed by token uuid; display mappings are cosmetic and
    // may collide, which must not merge distinct tokens.
    std::map<Tuple, std::vector<Element>> by_tuple;
    for (const auto& [row, c] : annotated.rows()) {
      for (std::uint64_t i = 0; i < c; ++i) by_tuple[row.tuple].push_back(row.element);
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& [tuple, elements] : by_tuple) {
      Element combined = structure.plus_fold(elements);
      ProbResult r = probability_evaluate(store, combined.as_gate().id, probs, poptions);
      std::vector<std::string> row;
      for (const auto& v : tuple.components) row.push_back(v.to_string());
      row.push_back(format_probability(r.probability));
      rows.push_back(std::move(row));
    }
    store.flush();
    print_rows(out, opts.format, output_header(annotated.arity(), ast, "probability"), rows);
    return 0;
  }

  // Semiring specialization of the per-row annotation gates.
  const AnnotationStructure* target = nullptr;
  std::shared_ptr<BoolCircuit> arena;
  std::shared_ptr<const AnnotationStructure> bool_structure;
  if (opts.semiring == "why") target = &why_structure();
  else if (opts.semiring == "counting") target = &counting_structure();
  else if (opts.semiring == "formula") target = &formula_structure();
  else if (opts.semiring == "bool") {
    arena = std::make_shared<BoolCircuit>();
    bool_structure = make_bool_structure(arena);
    target = bool_structure.get();
  } else {
    raise(Errc::UsageError, "unknown semiring '" + opts.semiring + "'");
  }

  std::map<Uuid, Element> leaf_map;
  for (const auto& [token, name] : display) {
    auto id = Uuid::parse(token);
    if (!id) continue;
    if (opts.semiring == "why") {
      leaf_map[*id] = Element::why(WhySet::of({{name}}));
    } else if (opts.semiring == "counting") {
      leaf_map[*id] = Element::count(1);
    } else if (opts.semiring == "bool") {
      leaf_map[*id] = Element::boolean({arena, arena->add_var(name)});
    } else {
      leaf_map[*id] = Element::formula(formula_token(name));
    }
  }

  std::vector<std::vector<std::string>> rows;
  for (const auto& [row, c] : annotated.rows()) {
    std::vector<std::string> cells;
    for (const auto& v : row.tuple.components) {
      if (v.tag() == ValueTag::Agg && !v.as_aggregate()->is_resolved()) {
        const auto& rep = v.as_aggregate()->rep;
        if (const auto* gate = std::get_if<Uuid>(&rep)) {
          cells.push_back(semimodule_to_string(
              *store.specialize_value(*gate, *target, leaf_map)));
          continue;
        }
      }
      cells.push_back(v.to_string());
    }
    Element specialized = store.specialize(row.element.as_gate().id, *target, leaf_map);
    cells.push_back(specialized.to_string());
    for (std::uint64_t i = 0; i < c; ++i) rows.push_back(cells);
  }
  print_rows(out, opts.format, output_header(annotated.arity(), ast, opts.semiring), rows);
  return 0;
}

// ---------------------------------------------------------------------------
// Demo: the worked personnel example
// ---------------------------------------------------------------------------

constexpr const char* kPersonnelCsv =
    "id,name,position,city\n"
    "1,John,Director,New York\n"
    "2,Paul,Janitor,New York\n"
    "3,Dave,Analyst,Paris\n"
    "4,Ellen,Field agent,Berlin\n"
    "5,Magdalen,Double agent,Paris\n"
    "6,Nancy,HR,Paris\n"
    "7,Susan,Analyst,Berlin\n";

constexpr const char* kCityQuery =
    "dedup(project[#4](join[#4 = #8 and #1 < #5](Personnel, Personnel)))";

int run_demo(const std::string& which, std::uint64_t seed, std::ostream& out) {
  if (which != "personnel") raise(Errc::UsageError, "unknown demo '" + which + "'");

  std::filesystem::path dir =
      std::filesystem::temp_directory_path() /
      ("provq-demo-" + std::to_string(std::random_device()()));
  std::filesystem::create_directories(dir);
  struct Cleanup {
    std::filesystem::path dir;
    ~Cleanup() {
      std::error_code ec;
      std::filesystem::remove_all(dir, ec);
    }
  } cleanup{dir};

  Catalog catalog = Catalog::init(dir);
  std::filesystem::path csv = dir / "personnel-src.csv";
  {
    std::ofstream f(csv, std::ios::binary);
    f << kPersonnelCsv;
  }
  catalog.load_table("Personnel", csv,
                     parse_schema_decl("id:int,name:text,position:text,city:text"));
  {
    CircuitStore store(catalog.circuit_path().string(), seed);
    catalog.add_provenance("Personnel", store);
  }
  const double kProbs[] = {0.5, 0.7, 0.3, 0.2, 1.0, 0.8, 0.2};
  auto rows = catalog.annotated_rows("Personnel");
  for (const auto& [tuple, uuid] : rows) {
    std::size_t id = std::size_t(tuple.at(0).as_int());
    catalog.set_prob_token("Personnel", uuid.to_string(), kProbs[id - 1]);
  }

  std::filesystem::path query_file = dir / "q_city.ra";
  {
    std::ofstream f(query_file, std::ios::binary);
    f << kCityQuery << "\n";
  }

  out << "-- why-provenance of q_city --\n";
  QueryOpts why_opts;
  why_opts.db = dir.string();
  why_opts.source = query_file.string();
  why_opts.semiring = "why";
  why_opts.mapping = "name";
  why_opts.seed = seed;
  run_query(why_opts, out);

  out << "\n-- marginal probabilities of q_city --\n";
  QueryOpts prob_opts;
  prob_opts.db = dir.string();
  prob_opts.source = query_file.string();
  prob_opts.prob = true;
  prob_opts.mapping = "name";
  prob_opts.seed = seed;
  run_query(prob_opts, out);
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

int cli_run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"provenance-aware relational query engine"};
  app.require_subcommand(1);

  // init
  std::string init_dir;
  auto* init = app.add_subcommand("init", "create a new catalog directory");
  init->add_option("dir", init_dir, "catalog directory")->required();

  // load
  std::string load_db = ".", load_table_name, load_csv_path, load_schema;
  auto* load = app.add_subcommand("load", "load a CSV into the catalog");
  load->add_option("table", load_table_name)->required();
  load->add_option("csv", load_csv_path)->required();
  load->add_option("--schema", load_schema, "name:tag,... declaration")->required();
  load->add_option("--db", load_db, "catalog directory");

  // add-provenance
  std::string ap_db = ".", ap_table, ap_column = "token";
  std::optional<std::uint64_t> ap_seed;
  auto* ap = app.add_subcommand("add-provenance", "attach one token per tuple occurrence");
  ap->add_option("table", ap_table)->required();
  ap->add_option("--column", ap_column, "token column name");
  ap->add_option("--db", ap_db, "catalog directory");
  ap->add_option("--seed", ap_seed)->group("");  // hidden: reproducible token generation

  // set-prob
  std::string sp_db = ".", sp_table, sp_token, sp_column;
  std::optional<double> sp_value;
  bool sp_all = false;
  auto* sp = app.add_subcommand("set-prob", "attach probabilities to tokens");
  sp->add_option("table", sp_table)->required();
  sp->add_option("p", sp_value, "probability in [0,1]");
  sp->add_option("--token", sp_token, "a single token uuid");
  sp->add_flag("--all", sp_all, "every token of the table");
  sp->add_option("--column", sp_column, "read per-row probabilities from this column");
  sp->add_option("--db", sp_db, "catalog directory");

  // query
  QueryOpts qopts;
  auto* query = app.add_subcommand("query", "evaluate a query file ('-' reads stdin)");
  query->add_option("file", qopts.source)->required();
  query->add_option("--semiring", qopts.semiring, "why | counting | formula | bool");
  query->add_option("--mapping", qopts.mapping, "display column for tokens");
  query->add_flag("--prob", qopts.prob, "compute marginal probabilities");
  query->add_option("--method", qopts.method,
                    "auto | readonce | treedec | wmc | enumerate | montecarlo");
  query->add_option("--samples", qopts.samples, "Monte Carlo sample count");
  query->add_option("--seed", qopts.seed)->group("");
  query->add_flag("--explain", qopts.explain, "print the rewritten query");
  query->add_option("--format", qopts.format, "table | csv");
  query->add_option("--db", qopts.db, "catalog directory");

  // circuit
  std::string circ_db = ".", circ_action, circ_root;
  auto* circ = app.add_subcommand("circuit", "inspect the circuit store");
  circ->add_option("action", circ_action, "stats | export-dot")->required();
  circ->add_option("root", circ_root, "root gate uuid (export-dot)");
  circ->add_option("--db", circ_db, "catalog directory");

  // demo
  std::string demo_name;
  std::uint64_t demo_seed = 42;
  auto* demo = app.add_subcommand("demo", "run a built-in worked example");
  demo->add_option("name", demo_name, "personnel")->required();
  demo->add_option("--seed", demo_seed)->group("");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 2;
  }

  try {
    if (*init) {
      Catalog::init(init_dir);
      out << "initialized catalog in " << init_dir << "\n";
      return 0;
    }
    if (*load) {
      Catalog catalog = Catalog::open(load_db);
      catalog.load_table(load_table_name, load_csv_path, parse_schema_decl(load_schema));
      out << "loaded table " << load_table_name << "\n";
      return 0;
    }
    if (*ap) {
      Catalog catalog = Catalog::open(ap_db);
      CircuitStore store(catalog.circuit_path().string(), ap_seed);
      catalog.add_provenance(ap_table, store, ap_column);
      out << "added provenance tokens to " << ap_table << "\n";
      return 0;
    }
    if (*sp) {
      Catalog catalog = Catalog::open(sp_db);
      if (!sp_column.empty()) {
        catalog.set_prob_from_column(sp_table, sp_column);
      } else if (sp_all) {
        if (!sp_value) raise(Errc::UsageError, "--all needs a probability value");
        catalog.set_prob_all(sp_table, *sp_value);
      } else if (!sp_token.empty()) {
        if (!sp_value) raise(Errc::UsageError, "--token needs a probability value");
        catalog.set_prob_token(sp_table, sp_token, *sp_value);
      } else {
        raise(Errc::UsageError, "set-prob needs --token, --all, or --column");
      }
      out << "updated probabilities\n";
      return 0;
    }
    if (*query) {
      return run_query(qopts, out);
    }
    if (*circ) {
      Catalog catalog = Catalog::open(circ_db);
      CircuitStore store(catalog.circuit_path().string());
      if (circ_action == "stats") {
        out << "gates: " << store.gate_count() << "\n";
        for (const auto& [kind, n] : store.kind_counts()) {
          out << "  " << gate_kind_name(kind) << ": " << n << "\n";
        }
        return 0;
      }
      if (circ_action == "export-dot") {
        auto root = Uuid::parse(circ_root);
        if (!root) raise(Errc::UsageError, "export-dot needs a root gate uuid");
        out << store.export_dot(*root);
        return 0;
      }
      raise(Errc::UsageError, "unknown circuit action '" + circ_action + "'");
    }
    if (*demo) {
      return run_demo(demo_name, demo_seed, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::UsageError ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace provq
