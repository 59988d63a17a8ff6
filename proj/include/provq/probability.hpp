#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "provq/annotated.hpp"
#include "provq/ast.hpp"
#include "provq/bool_circuit.hpp"
#include "provq/circuit_store.hpp"

namespace provq {

// Token -> probability of presence, all in [0, 1].
using ProbMap = std::map<std::string, double>;

void validate_prob(double p);

// Boolean provenance extraction: specializes the gate DAG under `root` into
// a Boolean circuit (plus -> or, times -> and, monus(a,b) -> a and not b,
// delta -> identity). Gates reachable from an aggregate construction cannot
// be read probabilistically.
struct ExtractedCircuit {
  std::shared_ptr<BoolCircuit> circuit;
  int root = -1;
};
ExtractedCircuit to_bool_circuit(const CircuitStore& store, const Uuid& root,
                                 const std::map<Uuid, std::string>& leaf_names = {});

// Exact probability by summing over all variable valuations. Guarded.
double prob_enumerate(const BoolCircuit& circuit, int root, const ProbMap& probs);

// Linear-time probability for read-once circuits: after constant folding,
// the reachable subcircuit must be a tree whose variables are distinct.
// Returns nullopt when the shape test fails.
std::optional<double> prob_read_once(const BoolCircuit& circuit, int root, const ProbMap& probs);

// Tree decomposition of the circuit's wire graph (vertices are circuit
// nodes, edges connect gates to their children).
struct TreeDecomposition {
  std::vector<std::vector<int>> bags;            // sorted circuit node ids
  std::vector<std::pair<int, int>> tree_edges;   // between bag indices
  int width() const;
};

// Min-fill elimination; nullopt when the heuristic exceeds the cap.
std::optional<TreeDecomposition> tree_decompose(const BoolCircuit& circuit, int root,
                                                int width_cap = 10);

// Exact weighted counting by dynamic programming along the decomposition.
double prob_treedec(const BoolCircuit& circuit, int root, const TreeDecomposition& decomposition,
                    const ProbMap& probs);

// Tseitin CNF: one auxiliary variable per internal node, defining clauses in
// both directions, and a unit clause asserting the root.
struct CnfFormula {
  int num_vars = 0;                       // 1-based variable ids
  int num_original = 0;                   // vars 1..num_original are circuit variables
  std::vector<std::string> var_tokens;    // tokens of the original variables
  std::vector<std::vector<int>> clauses;  // signed literals
  int root_literal = 0;
};
CnfFormula tseitin(const BoolCircuit& circuit, int root);

// Exact weighted model count of the CNF with original variables weighted
// (p, 1-p) and auxiliaries weight-neutral. DPLL with unit propagation and
// connected-component decomposition; worst case exponential.
double prob_wmc(const CnfFormula& cnf, const ProbMap& probs);

struct MonteCarloResult {
  double estimate = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
};
MonteCarloResult prob_monte_carlo(const BoolCircuit& circuit, int root, const ProbMap& probs,
                                  std::uint64_t samples, std::uint64_t seed);

enum class ProbMethod : std::uint8_t { Auto, ReadOnce, TreeDec, Wmc, Enumerate, MonteCarlo };

const char* prob_method_name(ProbMethod m);
std::optional<ProbMethod> prob_method_from_name(const std::string& name);

struct ProbOptions {
  ProbMethod method = ProbMethod::Auto;
  int width_cap = 10;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 1;
};

struct ProbResult {
  double probability = 0.0;
  ProbMethod method = ProbMethod::Auto;  // the method that actually resolved
};

// The pipeline: read-once, then tree decomposition (width <= cap), then
// Tseitin + weighted model counting. Explicit methods dispatch directly.
ProbResult probability_evaluate(const BoolCircuit& circuit, int root, const ProbMap& probs,
                                const ProbOptions& options = {});
ProbResult probability_evaluate(const CircuitStore& store, const Uuid& root, const ProbMap& probs,
                                const ProbOptions& options = {},
                                const std::map<Uuid, std::string>& leaf_names = {});

// Definitional marginal probability: enumerates valuations of the tokens,
// keeps the sub-instance each valuation selects, evaluates the plain query,
// and sums the probabilities of valuations whose answer contains `t`.
// The instance must carry Boolean annotations over the tokens of `probs`.
double marginal_brute(const QueryPtr& q, const AnnotatedInstance& inst, const ProbMap& probs,
                      const Tuple& t);

}  // namespace provq
