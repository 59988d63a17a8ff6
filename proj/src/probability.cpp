#include "provq/probability.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <unordered_map>

#include "provq/errors.hpp"
#include "provq/eval.hpp"

namespace provq {

void validate_prob(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    raise(Errc::BadProbability, "probability " + std::to_string(p) + " outside [0, 1]");
  }
}

const char* prob_method_name(ProbMethod m) {
  switch (m) {
    case ProbMethod::Auto: return "auto";
    case ProbMethod::ReadOnce: return "readonce";
    case ProbMethod::TreeDec: return "treedec";
    case ProbMethod::Wmc: return "wmc";
    case ProbMethod::Enumerate: return "enumerate";
    case ProbMethod::MonteCarlo: return "montecarlo";
  }
  return "?";
}

std::optional<ProbMethod> prob_method_from_name(const std::string& name) {
  for (ProbMethod m : {ProbMethod::Auto, ProbMethod::ReadOnce, ProbMethod::TreeDec,
                       ProbMethod::Wmc, ProbMethod::Enumerate, ProbMethod::MonteCarlo}) {
    if (name == prob_method_name(m)) return m;
  }
  return std::nullopt;
}

namespace {

// Probability per var id for the variables reachable from root.
std::vector<double> reachable_var_probs(const BoolCircuit& circuit, int root,
                                        const ProbMap& probs) {
  std::vector<double> out(std::size_t(circuit.var_count()), 0.0);
  for (int var : circuit.vars_reachable(root)) {
    auto it = probs.find(circuit.var_name(var));
    if (it == probs.end()) {
      raise(Errc::UnknownToken, "no probability for token '" + circuit.var_name(var) + "'");
    }
    validate_prob(it->second);
    out[std::size_t(var)] = it->second;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Boolean provenance extraction
// ---------------------------------------------------------------------------

ExtractedCircuit to_bool_circuit(const CircuitStore& store, const Uuid& root,
                                 const std::map<Uuid, std::string>& leaf_names) {
  ExtractedCircuit out;
  out.circuit = std::make_shared<BoolCircuit>();
  std::unordered_map<Uuid, int, UuidHash> memo;

  std::vector<std::pair<Uuid, bool>> stack{{root, false}};
  while (!stack.empty()) {
    auto [id, expanded] = stack.back();
    stack.pop_back();
    if (memo.count(id)) continue;
    GateRecord rec = store.get(id);
    if (rec.kind == GateKind::Value || rec.kind == GateKind::Semimodule ||
        rec.kind == GateKind::Aggregate) {
      raise(Errc::AggregateInProbability,
            "aggregate constructions have no Boolean provenance reading");
    }
    if (!expanded) {
      stack.emplace_back(id, true);
      for (const Uuid& c : rec.children) {
        if (!memo.count(c)) stack.emplace_back(c, false);
      }
      continue;
    }
    int node = -1;
    switch (rec.kind) {
      case GateKind::Input: {
        auto it = leaf_names.find(id);
        node = out.circuit->add_var(it != leaf_names.end() ? it->second : id.to_string());
        break;
      }
      case GateKind::Zero:
        node = out.circuit->const_false();
        break;
      case GateKind::One:
        node = out.circuit->const_true();
        break;
      case GateKind::Plus: {
        std::vector<int> children;
        children.reserve(rec.children.size());
        for (const Uuid& c : rec.children) children.push_back(memo.at(c));
        node = out.circuit->add_or(std::move(children));
        break;
      }
      case GateKind::Times: {
        std::vector<int> children;
        children.reserve(rec.children.size());
        for (const Uuid& c : rec.children) children.push_back(memo.at(c));
        node = out.circuit->add_and(std::move(children));
        break;
      }
      case GateKind::Monus: {
        int a = memo.at(rec.children[0]);
        int b = memo.at(rec.children[1]);
        node = out.circuit->add_and({a, out.circuit->add_not(b)});
        break;
      }
      case GateKind::Delta:
        node = memo.at(rec.children[0]);
        break;
      default:
        raise(Errc::AggregateInProbability, "unexpected gate kind");
    }
    memo.emplace(id, node);
  }
  out.root = memo.at(root);
  return out;
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

double prob_enumerate(const BoolCircuit& circuit, int root, const ProbMap& probs) {
  std::vector<int> vars = circuit.vars_reachable(root);
  if (vars.size() > 25) {
    raise(Errc::TooManyVariables,
          "enumeration over " + std::to_string(vars.size()) + " variables refused");
  }
  std::vector<double> p = reachable_var_probs(circuit, root, probs);
  std::vector<int> topo = circuit.nodes_reachable(root);

  std::vector<char> assignment(std::size_t(circuit.var_count()), 0);
  std::vector<char> value(std::size_t(circuit.size()), 0);
  double total = 0.0;
  std::uint64_t worlds = std::uint64_t(1) << vars.size();
  for (std::uint64_t mask = 0; mask < worlds; ++mask) {
    double pr = 1.0;
    for (std::size_t i = 0; i < vars.size(); ++i) {
      bool present = (mask >> i) & 1;
      assignment[std::size_t(vars[i])] = present;
      pr *= present ? p[std::size_t(vars[i])] : 1.0 - p[std::size_t(vars[i])];
    }
    for (int id : topo) {
      const auto& n = circuit.node(id);
      switch (n.kind) {
        case BoolCircuit::Kind::Var: value[std::size_t(id)] = assignment[std::size_t(n.var)]; break;
        case BoolCircuit::Kind::ConstTrue: value[std::size_t(id)] = 1; break;
        case BoolCircuit::Kind::ConstFalse: value[std::size_t(id)] = 0; break;
        case BoolCircuit::Kind::And: {
          char v = 1;
          for (int c : n.children) v = char(v && value[std::size_t(c)]);
          value[std::size_t(id)] = v;
          break;
        }
        case BoolCircuit::Kind::Or: {
          char v = 0;
          for (int c : n.children) v = char(v || value[std::size_t(c)]);
          value[std::size_t(id)] = v;
          break;
        }
        case BoolCircuit::Kind::Not:
          value[std::size_t(id)] = char(!value[std::size_t(n.children[0])]);
          break;
      }
    }
    if (value[std::size_t(root)]) total += pr;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Read-once
// ---------------------------------------------------------------------------

std::optional<double> prob_read_once(const BoolCircuit& circuit, int root, const ProbMap& probs) {
  auto [folded, froot] = fold_constants(circuit, root);
  const auto& fr = folded->node(froot);
  if (fr.kind == BoolCircuit::Kind::ConstTrue) return 1.0;
  if (fr.kind == BoolCircuit::Kind::ConstFalse) return 0.0;

  // Tree shape: within the reachable subgraph every node has at most one
  // parent (the interning of Var nodes makes repeated variables show up as
  // shared leaves, so this single test also enforces variable uniqueness).
  std::vector<int> reach = folded->nodes_reachable(froot);
  std::vector<int> indegree(std::size_t(folded->size()), 0);
  for (int id : reach) {
    for (int c : folded->node(id).children) ++indegree[std::size_t(c)];
  }
  for (int id : reach) {
    if (indegree[std::size_t(id)] > 1) return std::nullopt;
  }

  std::vector<double> p = reachable_var_probs(*folded, froot, probs);
  std::vector<double> value(std::size_t(folded->size()), 0.0);
  for (int id : reach) {
    const auto& n = folded->node(id);
    switch (n.kind) {
      case BoolCircuit::Kind::Var:
        value[std::size_t(id)] = p[std::size_t(n.var)];
        break;
      case BoolCircuit::Kind::ConstTrue:
        value[std::size_t(id)] = 1.0;
        break;
      case BoolCircuit::Kind::ConstFalse:
        value[std::size_t(id)] = 0.0;
        break;
      case BoolCircuit::Kind::And: {
        double v = 1.0;
        for (int c : n.children) v *= value[std::size_t(c)];
        value[std::size_t(id)] = v;
        break;
      }
      case BoolCircuit::Kind::Or: {
        // Sibling subtrees have disjoint variables, hence independent.
        double v = 1.0;
        for (int c : n.children) v *= 1.0 - value[std::size_t(c)];
        value[std::size_t(id)] = 1.0 - v;
        break;
      }
      case BoolCircuit::Kind::Not:
        value[std::size_t(id)] = 1.0 - value[std::size_t(n.children[0])];
        break;
    }
  }
  return value[std::size_t(froot)];
}

// ---------------------------------------------------------------------------
// Tree decomposition (min-fill over the wire graph)
// ---------------------------------------------------------------------------

int TreeDecomposition::width() const {
  std::size_t w = 0;
  for (const auto& bag : bags) w = std::max(w, bag.size());
  return int(w) - 1;
}

std::optional<TreeDecomposition> tree_decompose(const BoolCircuit& circuit, int root,
                                                int width_cap) {
  std::vector<int> reach = circuit.nodes_reachable(root);
  std::unordered_map<int, std::set<int>> adj;
  for (int id : reach) adj[id];  // ensure isolated vertices exist
  for (int id : reach) {
    for (int c : circuit.node(id).children) {
      if (c == id) continue;
      adj[id].insert(c);
      adj[c].insert(id);
    }
  }

  TreeDecomposition out;
  std::vector<int> elim_order;
  std::unordered_map<int, int> bag_of_vertex;  // eliminated vertex -> its bag index
  std::set<int> remaining(reach.begin(), reach.end());

  while (!remaining.empty()) {
    // Min-fill vertex; ties broken by lowest id for reproducibility.
    int best = -1;
    long best_fill = -1;
    for (int v : remaining) {
      const auto& nv = adj[v];
      long fill = 0;
      for (auto it1 = nv.begin(); it1 != nv.end(); ++it1) {
        auto it2 = it1;
        for (++it2; it2 != nv.end(); ++it2) {
          if (!adj[*it1].count(*it2)) ++fill;
        }
      }
      if (best == -1 || fill < best_fill) {
        best = v;
        best_fill = fill;
      }
    }

    std::vector<int> bag{best};
    bag.insert(bag.end(), adj[best].begin(), adj[best].end());
    std::sort(bag.begin(), bag.end());
    if (int(bag.size()) - 1 > width_cap) return std::nullopt;

    bag_of_vertex[best] = int(out.bags.size());
    out.bags.push_back(bag);
    elim_order.push_back(best);

    // Connect the neighborhood into a clique, then remove the vertex.
    std::vector<int> neighbors(adj[best].begin(), adj[best].end());
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
      for (std::size_t j = i + 1; j < neighbors.size(); ++j) {
        adj[neighbors[i]].insert(neighbors[j]);
        adj[neighbors[j]].insert(neighbors[i]);
      }
    }
    for (int u : neighbors) adj[u].erase(best);
    adj.erase(best);
    remaining.erase(best);
  }

  // Standard elimination-order tree: each bag attaches to the bag of the
  // earliest-eliminated vertex among its other members.
  std::unordered_map<int, int> elim_rank;
  for (std::size_t i = 0; i < elim_order.size(); ++i) elim_rank[elim_order[i]] = int(i);
  for (std::size_t i = 0; i < out.bags.size(); ++i) {
    int v = elim_order[i];
    int parent_vertex = -1;
    int best_rank = int(elim_order.size());
    for (int u : out.bags[i]) {
      if (u == v) continue;
      int r = elim_rank[u];
      if (r > int(i) && r < best_rank) {
        best_rank = r;
        parent_vertex = u;
      }
    }
    if (parent_vertex >= 0) {
      out.tree_edges.emplace_back(int(i), bag_of_vertex[parent_vertex]);
    } else if (i + 1 < out.bags.size()) {
      // Isolated component; chain to the next bag to keep the tree connected.
      out.tree_edges.emplace_back(int(i), int(i) + 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weighted counting along a tree decomposition
//
// The DP assigns every circuit node a Boolean and tracks, per gate in a bag,
// a running fold of the child values seen so far (conjunction for and-gates,
// disjunction for or/not-gates). Each wire edge is folded at exactly one
// decomposition node containing both endpoints; when a gate is forgotten its
// value must match its completed fold, when a variable is forgotten its
// weight multiplies in, and the root must be true when forgotten.
// ---------------------------------------------------------------------------

namespace {

struct NiceNode {
  enum class Kind : std::uint8_t { Leaf, Introduce, Forget, Join };
  Kind kind;
  int vertex = -1;
  std::vector<int> bag;  // sorted, state slots follow this order
  int child0 = -1;
  int child1 = -1;
  std::vector<std::pair<int, int>> fold_edges;  // (gate, child)
};

struct NiceTree {
  std::vector<NiceNode> nodes;
  int root = -1;
};

int slot_of(const std::vector<int>& bag, int vertex) {
  auto it = std::lower_bound(bag.begin(), bag.end(), vertex);
  return int(it - bag.begin());
}

class NiceBuilder {
 public:
  NiceBuilder(const TreeDecomposition& d, int root_bag) : d_(d) {
    adjacency_.resize(d.bags.size());
    for (auto [a, b] : d.tree_edges) {
      adjacency_[std::size_t(a)].push_back(b);
      adjacency_[std::size_t(b)].push_back(a);
    }
    int top = build(root_bag, -1);
    // Forget everything left in the root bag.
    std::vector<int> bag = d.bags[std::size_t(root_bag)];
    for (int v : bag) {
      top = add_forget(v, top);
    }
    tree_.root = top;
  }

  NiceTree take() { return std::move(tree_); }

 private:
  int add_node(NiceNode n) {
    tree_.nodes.push_back(std::move(n));
    return int(tree_.nodes.size()) - 1;
  }

  int add_forget(int v, int child) {
    std::vector<int> bag = tree_.nodes[std::size_t(child)].bag;
    bag.erase(std::find(bag.begin(), bag.end(), v));
    return add_node(NiceNode{NiceNode::Kind::Forget, v, std::move(bag), child, -1, {}});
  }

  int add_introduce(int v, int child) {
    std::vector<int> bag = tree_.nodes[std::size_t(child)].bag;
    bag.insert(std::lower_bound(bag.begin(), bag.end(), v), v);
    return add_node(NiceNode{NiceNode::Kind::Introduce, v, std::move(bag), child, -1, {}});
  }

  // Builds a subtree whose top node has exactly bag `b`.
  int build(int b, int parent) {
    const std::vector<int>& bag = d_.bags[std::size_t(b)];
    std::vector<int> branch_tops;
    for (int c : adjacency_[std::size_t(b)]) {
      if (c == parent) continue;
      int t = build(c, b);
      // Transition child bag -> this bag.
      for (int v : d_.bags[std::size_t(c)]) {
        if (!std::binary_search(bag.begin(), bag.end(), v)) t = add_forget(v, t);
      }
      for (int v : bag) {
        const auto& cb = d_.bags[std::size_t(c)];
        if (!std::binary_search(cb.begin(), cb.end(), v)) t = add_introduce(v, t);
      }
      branch_tops.push_back(t);
    }
    if (branch_tops.empty()) {
      int t = add_node(NiceNode{NiceNode::Kind::Leaf, -1, {}, -1, -1, {}});
      for (int v : bag) t = add_introduce(v, t);
      return t;
    }
    int acc = branch_tops[0];
    for (std::size_t i = 1; i < branch_tops.size(); ++i) {
      acc = add_node(NiceNode{NiceNode::Kind::Join, -1, bag, acc, branch_tops[i], {}});
    }
    return acc;
  }

  const TreeDecomposition& d_;
  std::vector<std::vector<int>> adjacency_;
  NiceTree tree_;
};

void validate_decomposition(const BoolCircuit& circuit, int root, const TreeDecomposition& d) {
  std::vector<int> reach = circuit.nodes_reachable(root);
  std::set<int> reach_set(reach.begin(), reach.end());

  if (d.bags.empty()) raise(Errc::InvalidDecomposition, "no bags");
  if (d.tree_edges.size() + 1 != d.bags.size()) {
    raise(Errc::InvalidDecomposition, "bag tree is not a tree");
  }
  // Connectivity of the bag tree.
  std::vector<std::vector<int>> adjacency(d.bags.size());
  for (auto [a, b] : d.tree_edges) {
    if (a < 0 || b < 0 || std::size_t(a) >= d.bags.size() || std::size_t(b) >= d.bags.size()) {
      raise(Errc::InvalidDecomposition, "tree edge out of range");
    }
    adjacency[std::size_t(a)].push_back(b);
    adjacency[std::size_t(b)].push_back(a);
  }
  std::vector<char> seen(d.bags.size(), 0);
  std::vector<int> stack{0};
  std::size_t visited = 0;
  while (!stack.empty()) {
    int b = stack.back();
    stack.pop_back();
    if (seen[std::size_t(b)]) continue;
    seen[std::size_t(b)] = 1;
    ++visited;
    for (int n : adjacency[std::size_t(b)]) {
      if (!seen[std::size_t(n)]) stack.push_back(n);
    }
  }
  if (visited != d.bags.size()) raise(Errc::InvalidDecomposition, "bag tree is disconnected");

  std::map<int, std::vector<int>> bags_of_vertex;
  for (std::size_t i = 0; i < d.bags.size(); ++i) {
    for (int v : d.bags[i]) {
      if (!reach_set.count(v)) {
        raise(Errc::InvalidDecomposition, "bag contains an unreachable vertex");
      }
      bags_of_vertex[v].push_back(int(i));
    }
  }
  for (int v : reach) {
    if (!bags_of_vertex.count(v)) {
      raise(Errc::InvalidDecomposition, "vertex missing from every bag");
    }
  }
  // Edge coverage.
  for (int id : reach) {
    for (int c : circuit.node(id).children) {
      bool covered = false;
      for (std::size_t i = 0; i < d.bags.size() && !covered; ++i) {
        const auto& bag = d.bags[i];
        covered = std::binary_search(bag.begin(), bag.end(), id) &&
                  std::binary_search(bag.begin(), bag.end(), c);
      }
      if (!covered) raise(Errc::InvalidDecomposition, "wire edge not covered by any bag");
    }
  }
  // Per-vertex connectivity.
  for (const auto& [v, in_bags] : bags_of_vertex) {
    std::set<int> member(in_bags.begin(), in_bags.end());
    std::vector<int> dfs{in_bags[0]};
    std::set<int> visited_bags;
    while (!dfs.empty()) {
      int b = dfs.back();
      dfs.pop_back();
      if (visited_bags.count(b)) continue;
      visited_bags.insert(b);
      for (int n : adjacency[std::size_t(b)]) {
        if (member.count(n) && !visited_bags.count(n)) dfs.push_back(n);
      }
    }
    if (visited_bags.size() != member.size()) {
      raise(Errc::InvalidDecomposition, "vertex occurrences do not form a subtree");
    }
  }
  for (const auto& bag : d.bags) {
    if (bag.size() > 31) raise(Errc::InvalidDecomposition, "bag too large for the counter");
    if (!std::is_sorted(bag.begin(), bag.end())) {
      raise(Errc::InvalidDecomposition, "bags must be sorted");
    }
  }
}

}  // namespace

double prob_treedec(const BoolCircuit& circuit, int root, const TreeDecomposition& decomposition,
                    const ProbMap& probs) {
  validate_decomposition(circuit, root, decomposition);
  std::vector<double> p = reachable_var_probs(circuit, root, probs);

  int root_bag = -1;
  for (std::size_t i = 0; i < decomposition.bags.size(); ++i) {
    const auto& bag = decomposition.bags[i];
    if (std::binary_search(bag.begin(), bag.end(), root)) {
      root_bag = int(i);
      break;
    }
  }
  if (root_bag < 0) raise(Errc::InvalidDecomposition, "root vertex missing");

  NiceTree nice = NiceBuilder(decomposition, root_bag).take();

  // Designate every wire edge to the topmost nice node containing both ends.
  {
    std::vector<std::pair<int, int>> edges;
    for (int id : circuit.nodes_reachable(root)) {
      std::set<int> dedup;
      for (int c : circuit.node(id).children) {
        if (dedup.insert(c).second) edges.emplace_back(id, c);
      }
    }
    for (auto [g, c] : edges) {
      // Walk from the nice root downward; the first node containing both is
      // the topmost because vertex occurrences form subtrees.
      int designated = -1;
      std::vector<int> stack{nice.root};
      while (!stack.empty()) {
        int idx = stack.back();
        stack.pop_back();
        const NiceNode& n = nice.nodes[std::size_t(idx)];
        if (std::binary_search(n.bag.begin(), n.bag.end(), g) &&
            std::binary_search(n.bag.begin(), n.bag.end(), c)) {
          designated = idx;
          break;
        }
        if (n.child0 >= 0) stack.push_back(n.child0);
        if (n.child1 >= 0) stack.push_back(n.child1);
      }
      if (designated < 0) raise(Errc::InvalidDecomposition, "edge not representable");
      nice.nodes[std::size_t(designated)].fold_edges.emplace_back(g, c);
    }
  }

  // State: two bits per slot; even bit = node value, odd bit = partial fold.
  using States = std::unordered_map<std::uint64_t, double>;

  auto is_gate = [&](int v) {
    auto k = circuit.node(v).kind;
    return k == BoolCircuit::Kind::And || k == BoolCircuit::Kind::Or ||
           k == BoolCircuit::Kind::Not;
  };
  auto fold_is_and = [&](int v) { return circuit.node(v).kind == BoolCircuit::Kind::And; };

  auto apply_folds = [&](const NiceNode& n, States states) -> States {
    if (n.fold_edges.empty()) return states;
    States out;
    for (auto [state, w] : states) {
      std::uint64_t s = state;
      for (auto [g, c] : n.fold_edges) {
        int gs = slot_of(n.bag, g);
        int cs = slot_of(n.bag, c);
        bool cv = (s >> (2 * cs)) & 1;
        bool partial = (s >> (2 * gs + 1)) & 1;
        bool folded = fold_is_and(g) ? (partial && cv) : (partial || cv);
        s = (s & ~(std::uint64_t(1) << (2 * gs + 1))) |
            (std::uint64_t(folded) << (2 * gs + 1));
      }
      out[s] += w;
    }
    return out;
  };

  std::vector<States> table(nice.nodes.size());
  for (std::size_t idx = 0; idx < nice.nodes.size(); ++idx) {
    const NiceNode& n = nice.nodes[idx];
    States states;
    switch (n.kind) {
      case NiceNode::Kind::Leaf:
        states.emplace(0, 1.0);
        break;
      case NiceNode::Kind::Introduce: {
        const NiceNode& child = nice.nodes[std::size_t(n.child0)];
        int vs = slot_of(n.bag, n.vertex);
        auto kind = circuit.node(n.vertex).kind;
        bool gate = is_gate(n.vertex);
        bool init_partial = fold_is_and(n.vertex);
        for (auto [cstate, w] : table[std::size_t(n.child0)]) {
          // Re-index child slots around the inserted vertex.
          std::uint64_t low_mask = (std::uint64_t(1) << (2 * vs)) - 1;
          std::uint64_t low = cstate & low_mask;
          std::uint64_t high = (cstate & ~low_mask) << 2;
          for (int b = 0; b <= 1; ++b) {
            if (kind == BoolCircuit::Kind::ConstTrue && b == 0) continue;
            if (kind == BoolCircuit::Kind::ConstFalse && b == 1) continue;
            std::uint64_t s = low | high | (std::uint64_t(b) << (2 * vs));
            if (gate && init_partial) s |= std::uint64_t(1) << (2 * vs + 1);
            states[s] += w;
          }
        }
        (void)child;
        break;
      }
      case NiceNode::Kind::Forget: {
        const NiceNode& child = nice.nodes[std::size_t(n.child0)];
        int vs = slot_of(child.bag, n.vertex);
        auto kind = circuit.node(n.vertex).kind;
        for (auto [cstate, w] : table[std::size_t(n.child0)]) {
          bool value = (cstate >> (2 * vs)) & 1;
          bool partial = (cstate >> (2 * vs + 1)) & 1;
          bool keep = true;
          double weight = w;
          switch (kind) {
            case BoolCircuit::Kind::And:
            case BoolCircuit::Kind::Or:
              keep = value == partial;
              break;
            case BoolCircuit::Kind::Not:
              keep = value == !partial;
              break;
            case BoolCircuit::Kind::Var:
              weight *= value ? p[std::size_t(circuit.node(n.vertex).var)]
                              : 1.0 - p[std::size_t(circuit.node(n.vertex).var)];
              break;
            default:
              break;  // constants were pinned at introduction
          }
          if (n.vertex == root && !value) keep = false;
          if (!keep || weight == 0.0) continue;
          std::uint64_t low_mask = (std::uint64_t(1) << (2 * vs)) - 1;
          std::uint64_t low = cstate & low_mask;
          std::uint64_t high = (cstate >> 2) & ~low_mask;
          states[low | high] += weight;
        }
        break;
      }
      case NiceNode::Kind::Join: {
        // Combine branch states agreeing on values; partial folds merge with
        // the gate's own operation (the branches folded disjoint edge sets).
        std::uint64_t value_mask = 0, and_mask = 0, or_mask = 0;
        for (std::size_t i = 0; i < n.bag.size(); ++i) {
          value_mask |= std::uint64_t(1) << (2 * i);
          if (is_gate(n.bag[i])) {
            if (fold_is_and(n.bag[i])) {
              and_mask |= std::uint64_t(1) << (2 * i + 1);
            } else {
              or_mask |= std::uint64_t(1) << (2 * i + 1);
            }
          }
        }
        std::unordered_map<std::uint64_t, std::vector<std::pair<std::uint64_t, double>>> by_value;
        for (auto [s, w] : table[std::size_t(n.child1)]) {
          by_value[s & value_mask].emplace_back(s, w);
        }
        for (auto [s1, w1] : table[std::size_t(n.child0)]) {
          auto it = by_value.find(s1 & value_mask);
          if (it == by_value.end()) continue;
          for (auto [s2, w2] : it->second) {
            std::uint64_t partial = ((s1 & s2) & and_mask) | ((s1 | s2) & or_mask);
            states[(s1 & value_mask) | partial] += w1 * w2;
          }
        }
        break;
      }
    }
    table[idx] = apply_folds(n, std::move(states));
  }

  double total = 0.0;
  for (auto [s, w] : table[std::size_t(nice.root)]) total += w;
  return total;
}

// ---------------------------------------------------------------------------
// Tseitin CNF
// ---------------------------------------------------------------------------

CnfFormula tseitin(const BoolCircuit& circuit, int root) {
  CnfFormula cnf;
  std::vector<int> reach = circuit.nodes_reachable(root);

  // Circuit variables first, in var-id order.
  std::map<int, int> var_lit;  // var id -> cnf var
  for (int id : reach) {
    const auto& n = circuit.node(id);
    if (n.kind == BoolCircuit::Kind::Var && !var_lit.count(n.var)) {
      var_lit[n.var] = 0;  // placeholder, assigned below in sorted order
    }
  }
  for (auto& [var, lit] : var_lit) {
    lit = ++cnf.num_vars;
    cnf.var_tokens.push_back(circuit.var_name(var));
  }
  cnf.num_original = cnf.num_vars;

  std::vector<int> node_lit(std::size_t(circuit.size()), 0);
  for (int id : reach) {
    const auto& n = circuit.node(id);
    if (n.kind == BoolCircuit::Kind::Var) {
      node_lit[std::size_t(id)] = var_lit[n.var];
    } else {
      node_lit[std::size_t(id)] = ++cnf.num_vars;
    }
  }

  for (int id : reach) {
    const auto& n = circuit.node(id);
    int g = node_lit[std::size_t(id)];
    switch (n.kind) {
      case BoolCircuit::Kind::Var:
        break;
      case BoolCircuit::Kind::ConstTrue:
        cnf.clauses.push_back({g});
        break;
      case BoolCircuit::Kind::ConstFalse:
        cnf.clauses.push_back({-g});
        break;
      case BoolCircuit::Kind::And: {
        std::vector<int> long_clause{g};
        for (int c : n.children) {
          cnf.clauses.push_back({-g, node_lit[std::size_t(c)]});
          long_clause.push_back(-node_lit[std::size_t(c)]);
        }
        cnf.clauses.push_back(std::move(long_clause));
        break;
      }
      case BoolCircuit::Kind::Or: {
        std::vector<int> long_clause{-g};
        for (int c : n.children) {
          cnf.clauses.push_back({g, -node_lit[std::size_t(c)]});
          long_clause.push_back(node_lit[std::size_t(c)]);
        }
        cnf.clauses.push_back(std::move(long_clause));
        break;
      }
      case BoolCircuit::Kind::Not: {
        int c = node_lit[std::size_t(n.children[0])];
        cnf.clauses.push_back({g, c});
        cnf.clauses.push_back({-g, -c});
        break;
      }
    }
  }
  cnf.root_literal = node_lit[std::size_t(root)];
  cnf.clauses.push_back({cnf.root_literal});
  return cnf;
}

// ---------------------------------------------------------------------------
// DPLL weighted model counting
// ---------------------------------------------------------------------------

namespace {

class WmcCounter {
 public:
  explicit WmcCounter(std::vector<std::pair<double, double>> weights)
      : weights_(std::move(weights)) {}

  double count(std::vector<std::vector<int>> clauses) {
    if (clauses.empty()) return 1.0;
    for (const auto& cl : clauses) {
      if (cl.empty()) return 0.0;
    }
    double factor = 1.0;

    // Unit propagation to fixpoint.
    bool progressed = true;
    while (progressed) {
      progressed = false;
      int unit = 0;
      for (const auto& cl : clauses) {
        if (cl.size() == 1) {
          unit = cl[0];
          break;
        }
      }
      if (unit != 0) {
        std::set<int> before = vars_of(clauses);
        auto next = substitute(clauses, unit);
        if (!next) return 0.0;
        factor *= weight_of(unit);
        factor *= vanished_factor(before, *next, std::abs(unit));
        clauses = std::move(*next);
        if (clauses.empty()) return factor;
        progressed = true;
      }
    }

    // Connected components share no variables and multiply independently.
    auto components = split_components(clauses);
    if (components.size() > 1) {
      for (auto& comp : components) factor *= count(std::move(comp));
      return factor;
    }

    // Branch on the most frequent variable.
    std::map<int, int> freq;
    for (const auto& cl : clauses) {
      for (int lit : cl) ++freq[std::abs(lit)];
    }
    int v = 0, best = -1;
    for (auto [var, n] : freq) {
      if (n > best) {
        best = n;
        v = var;
      }
    }
    std::set<int> before = vars_of(clauses);
    double total = 0.0;
    for (int phase : {v, -v}) {
      auto next = substitute(clauses, phase);
      if (!next) continue;
      double branch = weight_of(phase) * vanished_factor(before, *next, v);
      total += branch * count(std::move(*next));
    }
    return factor * total;
  }

 private:
  double weight_of(int lit) const {
    const auto& [wt, wf] = weights_[std::size_t(std::abs(lit)) - 1];
    return lit > 0 ? wt : wf;
  }

  static std::set<int> vars_of(const std::vector<std::vector<int>>& clauses) {
    std::set<int> out;
    for (const auto& cl : clauses) {
      for (int lit : cl) out.insert(std::abs(lit));
    }
    return out;
  }

  // Clause set under lit := true, or nullopt when an empty clause appears.
  static std::optional<std::vector<std::vector<int>>> substitute(
      const std::vector<std::vector<int>>& clauses, int lit) {
    std::vector<std::vector<int>> out;
    out.reserve(clauses.size());
    for (const auto& cl : clauses) {
      bool satisfied = false;
      std::vector<int> remaining;
      for (int l : cl) {
        if (l == lit) {
          satisfied = true;
          break;
        }
        if (l != -lit) remaining.push_back(l);
      }
      if (satisfied) continue;
      if (remaining.empty()) return std::nullopt;
      out.push_back(std::move(remaining));
    }
    return out;
  }

  // Variables that silently left the formula count both phases.
  double vanished_factor(const std::set<int>& before,
                         const std::vector<std::vector<int>>& after, int assigned) const {
    std::set<int> now = vars_of(after);
    double f = 1.0;
    for (int v : before) {
      if (v != assigned && !now.count(v)) {
        const auto& [wt, wf] = weights_[std::size_t(v) - 1];
        f *= wt + wf;
      }
    }
    return f;
  }

  static std::vector<std::vector<std::vector<int>>> split_components(
      const std::vector<std::vector<int>>& clauses) {
    // Union-find over variables.
    std::map<int, int> parent;
    std::function<int(int)> find = [&](int x) {
      while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
      }
      return x;
    };
    for (const auto& cl : clauses) {
      for (int lit : cl) {
        int v = std::abs(lit);
        if (!parent.count(v)) parent[v] = v;
      }
    }
    for (const auto& cl : clauses) {
      int first = std::abs(cl[0]);
      for (int lit : cl) {
        int a = find(first), b = find(std::abs(lit));
        if (a != b) parent[a] = b;
      }
    }
    std::map<int, std::vector<std::vector<int>>> groups;
    for (const auto& cl : clauses) {
      groups[find(std::abs(cl[0]))].push_back(cl);
    }
    std::vector<std::vector<std::vector<int>>> out;
    for (auto& [rep, group] : groups) out.push_back(std::move(group));
    return out;
  }

  std::vector<std::pair<double, double>> weights_;
};

}  // namespace

double prob_wmc(const CnfFormula& cnf, const ProbMap& probs) {
  std::vector<std::pair<double, double>> weights(std::size_t(cnf.num_vars), {1.0, 1.0});
  for (int i = 0; i < cnf.num_original; ++i) {
    auto it = probs.find(cnf.var_tokens[std::size_t(i)]);
    if (it == probs.end()) {
      raise(Errc::UnknownToken, "no probability for token '" + cnf.var_tokens[std::size_t(i)] + "'");
    }
    validate_prob(it->second);
    weights[std::size_t(i)] = {it->second, 1.0 - it->second};
  }

  // Variables in no clause at all contribute both phases.
  std::set<int> used;
  for (const auto& cl : cnf.clauses) {
    for (int lit : cl) used.insert(std::abs(lit));
  }
  double free_factor = 1.0;
  for (int v = 1; v <= cnf.num_vars; ++v) {
    if (!used.count(v)) free_factor *= weights[std::size_t(v) - 1].first +
                                       weights[std::size_t(v) - 1].second;
  }
  return free_factor * WmcCounter(std::move(weights)).count(cnf.clauses);
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

MonteCarloResult prob_monte_carlo(const BoolCircuit& circuit, int root, const ProbMap& probs,
                                  std::uint64_t samples, std::uint64_t seed) {
  if (samples == 0) raise(Errc::BadProbability, "sample count must be >= 1");
  std::vector<double> p = reachable_var_probs(circuit, root, probs);
  std::vector<int> vars = circuit.vars_reachable(root);
  std::vector<int> topo = circuit.nodes_reachable(root);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<char> assignment(std::size_t(circuit.var_count()), 0);
  std::vector<char> value(std::size_t(circuit.size()), 0);

  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    for (int var : vars) {
      assignment[std::size_t(var)] = uniform(rng) < p[std::size_t(var)];
    }
    for (int id : topo) {
      const auto& n = circuit.node(id);
      switch (n.kind) {
        case BoolCircuit::Kind::Var: value[std::size_t(id)] = assignment[std::size_t(n.var)]; break;
        case BoolCircuit::Kind::ConstTrue: value[std::size_t(id)] = 1; break;
        case BoolCircuit::Kind::ConstFalse: value[std::size_t(id)] = 0; break;
        case BoolCircuit::Kind::And: {
          char v = 1;
          for (int c : n.children) v = char(v && value[std::size_t(c)]);
          value[std::size_t(id)] = v;
          break;
        }
        case BoolCircuit::Kind::Or: {
          char v = 0;
          for (int c : n.children) v = char(v || value[std::size_t(c)]);
          value[std::size_t(id)] = v;
          break;
        }
        case BoolCircuit::Kind::Not:
          value[std::size_t(id)] = char(!value[std::size_t(n.children[0])]);
          break;
      }
    }
    hits += value[std::size_t(root)] ? 1 : 0;
  }
  return MonteCarloResult{double(hits) / double(samples), samples, seed};
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

ProbResult probability_evaluate(const BoolCircuit& circuit, int root, const ProbMap& probs,
                                const ProbOptions& options) {
  switch (options.method) {
    case ProbMethod::Enumerate:
      return {prob_enumerate(circuit, root, probs), ProbMethod::Enumerate};
    case ProbMethod::MonteCarlo: {
      auto mc = prob_monte_carlo(circuit, root, probs, options.samples, options.seed);
      return {mc.estimate, ProbMethod::MonteCarlo};
    }
    case ProbMethod::ReadOnce: {
      auto p = prob_read_once(circuit, root, probs);
      if (!p) raise(Errc::NotReadOnce, "circuit is not read-once");
      return {*p, ProbMethod::ReadOnce};
    }
    case ProbMethod::TreeDec: {
      auto d = tree_decompose(circuit, root, options.width_cap);
      if (!d) {
        raise(Errc::TooWide, "no decomposition of width <= " + std::to_string(options.width_cap));
      }
      return {prob_treedec(circuit, root, *d, probs), ProbMethod::TreeDec};
    }
    case ProbMethod::Wmc:
      return {prob_wmc(tseitin(circuit, root), probs), ProbMethod::Wmc};
    case ProbMethod::Auto:
      break;
  }

  // Step 1: read-once after constant folding.
  if (auto p = prob_read_once(circuit, root, probs)) {
    return {*p, ProbMethod::ReadOnce};
  }
  // Step 2: bounded-width decomposition of the folded circuit.
  auto [folded, froot] = fold_constants(circuit, root);
  if (auto d = tree_decompose(*folded, froot, options.width_cap)) {
    return {prob_treedec(*folded, froot, *d, probs), ProbMethod::TreeDec};
  }
  // Step 3: CNF and exact weighted counting.
  return {prob_wmc(tseitin(*folded, froot), probs), ProbMethod::Wmc};
}

ProbResult probability_evaluate(const CircuitStore& store, const Uuid& root, const ProbMap& probs,
                                const ProbOptions& options,
                                const std::map<Uuid, std::string>& leaf_names) {
  ExtractedCircuit extracted = to_bool_circuit(store, root, leaf_names);
  return probability_evaluate(*extracted.circuit, extracted.root, probs, options);
}

// ---------------------------------------------------------------------------
// Definitional marginal probability
// ---------------------------------------------------------------------------

double marginal_brute(const QueryPtr& q, const AnnotatedInstance& inst, const ProbMap& probs,
                      const Tuple& t) {
  std::vector<std::string> tokens;
  for (const auto& [token, p] : probs) {
    validate_prob(p);
    tokens.push_back(token);
  }
  if (tokens.size() > 20) {
    raise(Errc::TooManyVariables,
          "brute-force marginal over " + std::to_string(tokens.size()) + " tokens refused");
  }

  // All annotations must be Boolean elements over the given tokens.
  for (const auto& [label, rel] : inst.relations) {
    for (const auto& [row, c] : rel.rows()) {
      if (!row.element.is_boolean()) {
        raise(Errc::DomainMismatch, "brute-force marginal needs Boolean annotations");
      }
      const BoolRef& ref = row.element.as_boolean();
      for (int var : ref.circuit->vars_reachable(ref.node)) {
        if (!probs.count(ref.circuit->var_name(var))) {
          raise(Errc::UnknownToken,
                "annotation token '" + ref.circuit->var_name(var) + "' has no probability");
        }
      }
    }
  }

  double total = 0.0;
  std::uint64_t worlds = std::uint64_t(1) << tokens.size();
  for (std::uint64_t mask = 0; mask < worlds; ++mask) {
    double pr = 1.0;
    std::map<std::string, bool> valuation;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      bool present = (mask >> i) & 1;
      valuation[tokens[i]] = present;
      double p = probs.at(tokens[i]);
      pr *= present ? p : 1.0 - p;
    }
    if (pr == 0.0) continue;

    Instance world;
    for (const auto& [label, rel] : inst.relations) {
      Relation plain(rel.arity());
      for (const auto& [row, c] : rel.rows()) {
        const BoolRef& ref = row.element.as_boolean();
        std::vector<char> assignment(std::size_t(ref.circuit->var_count()), 0);
        for (int var = 0; var < ref.circuit->var_count(); ++var) {
          auto it = valuation.find(ref.circuit->var_name(var));
          assignment[std::size_t(var)] = it != valuation.end() && it->second;
        }
        if (ref.circuit->eval(ref.node, assignment)) plain.add(row.tuple, c);
      }
      world.emplace(label, std::move(plain));
    }
    Relation result = eval_query(q, world);
    if (t.arity() == result.arity() && result.contains(t)) total += pr;
  }
  return total;
}

}  // namespace provq
