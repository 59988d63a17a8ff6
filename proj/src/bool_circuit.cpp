#include "provq/bool_circuit.hpp"

#include <algorithm>
#include <cassert>

namespace provq {

int BoolCircuit::add_node(Node n) {
  for (int c : n.children) {
    assert(c >= 0 && c < size());
    (void)c;
  }
  nodes_.push_back(std::move(n));
  return int(nodes_.size()) - 1;
}

int BoolCircuit::add_var(const std::string& token) {
  auto it = var_ids_.find(token);
  if (it != var_ids_.end()) return it->second;
  int var = int(var_names_.size());
  var_names_.push_back(token);
  Node n;
  n.kind = Kind::Var;
  n.var = var;
  int id = add_node(std::move(n));
  var_ids_.emplace(token, id);
  return id;
}

int BoolCircuit::var_node(const std::string& token) const {
  auto it = var_ids_.find(token);
  return it == var_ids_.end() ? -1 : it->second;
}

int BoolCircuit::const_true() {
  if (const_true_ < 0) const_true_ = add_node(Node{Kind::ConstTrue, {}, -1});
  return const_true_;
}

int BoolCircuit::const_false() {
  if (const_false_ < 0) const_false_ = add_node(Node{Kind::ConstFalse, {}, -1});
  return const_false_;
}

int BoolCircuit::add_and(std::vector<int> children) {
  if (children.empty()) return const_true();
  return add_node(Node{Kind::And, std::move(children), -1});
}

int BoolCircuit::add_or(std::vector<int> children) {
  if (children.empty()) return const_false();
  return add_node(Node{Kind::Or, std::move(children), -1});
}

int BoolCircuit::add_not(int child) { return add_node(Node{Kind::Not, {child}, -1}); }

std::vector<int> BoolCircuit::nodes_reachable(int root) const {
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<int> stack{root};
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    if (seen[std::size_t(id)]) continue;
    seen[std::size_t(id)] = 1;
    for (int c : node(id).children) {
      if (!seen[std::size_t(c)]) stack.push_back(c);
    }
  }
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (seen[std::size_t(i)]) out.push_back(i);
  }
  return out;
}

std::vector<int> BoolCircuit::vars_reachable(int root) const {
  std::vector<int> vars;
  for (int id : nodes_reachable(root)) {
    if (node(id).kind == Kind::Var) vars.push_back(node(id).var);
  }
  std::sort(vars.begin(), vars.end());
  return vars;
}

bool BoolCircuit::eval(int root, const std::vector<char>& var_values) const {
  std::vector<char> value(nodes_.size(), 0);
  for (int id : nodes_reachable(root)) {
    const Node& n = node(id);
    switch (n.kind) {
      case Kind::Var:
        value[std::size_t(id)] = var_values[std::size_t(n.var)];
        break;
      case Kind::ConstTrue:
        value[std::size_t(id)] = 1;
        break;
      case Kind::ConstFalse:
        value[std::size_t(id)] = 0;
        break;
      case Kind::And: {
        char v = 1;
        for (int c : n.children) v = char(v && value[std::size_t(c)]);
        value[std::size_t(id)] = v;
        break;
      }
      case Kind::Or: {
        char v = 0;
        for (int c : n.children) v = char(v || value[std::size_t(c)]);
        value[std::size_t(id)] = v;
        break;
      }
      case Kind::Not:
        value[std::size_t(id)] = char(!value[std::size_t(n.children[0])]);
        break;
    }
  }
  return value[std::size_t(root)] != 0;
}

std::string BoolCircuit::to_string(int root) const {
  const Node& n = node(root);
  switch (n.kind) {
    case Kind::Var:
      return var_name(n.var);
    case Kind::ConstTrue:
      return "true";
    case Kind::ConstFalse:
      return "false";
    case Kind::Not:
      return "¬" + to_string(n.children[0]);
    case Kind::And:
    case Kind::Or: {
      std::string sep = n.kind == Kind::And ? "∧" : "∨";
      std::string out = "(";
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i > 0) out += sep;
        out += to_string(n.children[i]);
      }
      out += ")";
      return out;
    }
  }
  return "?";
}

int BoolCircuit::compare_structural(const BoolCircuit& ca, int a, const BoolCircuit& cb, int b) {
  const Node& na = ca.node(a);
  const Node& nb = cb.node(b);
  if (na.kind != nb.kind) return int(na.kind) < int(nb.kind) ? -1 : 1;
  if (na.kind == Kind::Var) return ca.var_name(na.var).compare(cb.var_name(nb.var));
  if (na.children.size() != nb.children.size()) {
    return na.children.size() < nb.children.size() ? -1 : 1;
  }
  for (std::size_t i = 0; i < na.children.size(); ++i) {
    int c = compare_structural(ca, na.children[i], cb, nb.children[i]);
    if (c != 0) return c;
  }
  return 0;
}

std::pair<std::shared_ptr<BoolCircuit>, int> fold_constants(const BoolCircuit& circuit, int root) {
  auto out = std::make_shared<BoolCircuit>();
  std::vector<int> mapped(std::size_t(circuit.size()), -2);
  // -2 unvisited; otherwise the id in `out` (possibly a constant node).
  for (int id : circuit.nodes_reachable(root)) {
    const auto& n = circuit.node(id);
    int result;
    switch (n.kind) {
      case BoolCircuit::Kind::Var:
        result = out->add_var(circuit.var_name(n.var));
        break;
      case BoolCircuit::Kind::ConstTrue:
        result = out->const_true();
        break;
      case BoolCircuit::Kind::ConstFalse:
        result = out->const_false();
        break;
      case BoolCircuit::Kind::Not: {
        int c = mapped[std::size_t(n.children[0])];
        auto ck = out->node(c).kind;
        if (ck == BoolCircuit::Kind::ConstTrue) {
          result = out->const_false();
        } else if (ck == BoolCircuit::Kind::ConstFalse) {
          result = out->const_true();
        } else {
          result = out->add_not(c);
        }
        break;
      }
      case BoolCircuit::Kind::And:
      case BoolCircuit::Kind::Or: {
        bool is_and = n.kind == BoolCircuit::Kind::And;
        std::vector<int> kept;
        bool collapsed = false;
        for (int child : n.children) {
          int c = mapped[std::size_t(child)];
          auto ck = out->node(c).kind;
          if (ck == BoolCircuit::Kind::ConstTrue) {
            if (!is_and) {
              collapsed = true;
              break;
            }
            continue;  // neutral for And
          }
          if (ck == BoolCircuit::Kind::ConstFalse) {
            if (is_and) {
              collapsed = true;
              break;
            }
            continue;  // neutral for Or
          }
          kept.push_back(c);
        }
        if (collapsed) {
          result = is_and ? out->const_false() : out->const_true();
        } else if (kept.empty()) {
          result = is_and ? out->const_true() : out->const_false();
        } else if (kept.size() == 1) {
          result = kept[0];
        } else {
          result = is_and ? out->add_and(std::move(kept)) : out->add_or(std::move(kept));
        }
        break;
      }
      default:
        result = -1;
    }
    mapped[std::size_t(id)] = result;
  }
  return {out, mapped[std::size_t(root)]};
}

}  // namespace provq
