#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace provq {

// Arena of Boolean circuit nodes. Children are created before parents, so
// node ids are a topological order and bottom-up passes are a single sweep.
class BoolCircuit {
 public:
  enum class Kind : std::uint8_t { Var, ConstTrue, ConstFalse, And, Or, Not };

  struct Node {
    Kind kind;
    std::vector<int> children;
    int var = -1;  // Var only
  };

  // One Var node per distinct token; repeated requests return the same node.
  int add_var(const std::string& token);
  int const_true();
  int const_false();
  int add_and(std::vector<int> children);
  int add_or(std::vector<int> children);
  int add_not(int child);

  const Node& node(int id) const { return nodes_[std::size_t(id)]; }
  int size() const { return int(nodes_.size()); }

  int var_count() const { return int(var_names_.size()); }
  const std::string& var_name(int var) const { return var_names_[std::size_t(var)]; }
  // Node id of a token's Var node, or -1.
  int var_node(const std::string& token) const;

  // Distinct var ids reachable from root, ascending.
  std::vector<int> vars_reachable(int root) const;
  // Node ids reachable from root, ascending (hence topologically sorted).
  std::vector<int> nodes_reachable(int root) const;

  // Evaluate under an assignment indexed by var id.
  bool eval(int root, const std::vector<char>& var_values) const;

  std::string to_string(int root) const;

  static int compare_structural(const BoolCircuit& ca, int a, const BoolCircuit& cb, int b);

 private:
  int add_node(Node n);

  std::vector<Node> nodes_;
  std::vector<std::string> var_names_;
  std::map<std::string, int> var_ids_;
  int const_true_ = -1;
  int const_false_ = -1;
};

// Copy of the subcircuit under root with constant gates folded away
// (And absorbs true children, collapses on false, and dually for Or).
// The result is either a constant or a circuit with no constant nodes.
std::pair<std::shared_ptr<BoolCircuit>, int> fold_constants(const BoolCircuit& circuit, int root);

}  // namespace provq
