#include "provq/parser.hpp"

#include <cctype>
#include <charconv>

#include "provq/errors.hpp"

namespace provq {

namespace {

struct Token {
  enum class Kind {
    Ident,
    Integer,
    Real,
    Text,
    Hash,      // #i
    Symbol,    // punctuation / operators
    End,
  };
  Kind kind;
  std::string text;
  std::int64_t int_value = 0;
  double real_value = 0.0;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& input) : input_(input) { advance(); }

  const Token& peek() const { return current_; }

  Token next() {
    Token t = current_;
    advance();
    return t;
  }

  struct Checkpoint {
    std::size_t pos;
    int line;
    int column;
    Token current;
  };
  Checkpoint checkpoint() const { return {pos_, line_, column_, current_}; }
  void restore(const Checkpoint& c) {
    pos_ = c.pos;
    line_ = c.line;
    column_ = c.column;
    current_ = c.current;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, line_, column_); }

  char look(std::size_t ahead = 0) const {
    return pos_ + ahead < input_.size() ? input_[pos_ + ahead] : '\0';
  }

  void bump() {
    if (pos_ < input_.size()) {
      if (input_[pos_] == '\n') {
        ++line_;
        column_ = 1;
      } else {
        ++column_;
      }
      ++pos_;
    }
  }

  void advance() {
    while (pos_ < input_.size() && std::isspace(static_cast<unsigned char>(input_[pos_]))) bump();
    current_ = Token{};
    current_.line = line_;
    current_.column = column_;
    if (pos_ >= input_.size()) {
      current_.kind = Token::Kind::End;
      return;
    }
    char c = look();
    if (c == '#') {
      bump();
      if (!std::isdigit(static_cast<unsigned char>(look()))) fail("expected digits after '#'");
      std::int64_t v = 0;
      while (std::isdigit(static_cast<unsigned char>(look()))) {
        v = v * 10 + (look() - '0');
        if (v > 1'000'000) fail("positional index too large");
        bump();
      }
      current_.kind = Token::Kind::Hash;
      current_.int_value = v;
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (std::isdigit(static_cast<unsigned char>(look()))) bump();
      bool is_real = false;
      if (look() == '.' && std::isdigit(static_cast<unsigned char>(look(1)))) {
        is_real = true;
        bump();
        while (std::isdigit(static_cast<unsigned char>(look()))) bump();
      }
      if (look() == 'e' || look() == 'E') {
        std::size_t mark = pos_;
        bump();
        if (look() == '+' || look() == '-') bump();
        if (std::isdigit(static_cast<unsigned char>(look()))) {
          is_real = true;
          while (std::isdigit(static_cast<unsigned char>(look()))) bump();
        } else {
          pos_ = mark;  // not an exponent; leave 'e' for the next token
        }
      }
      std::string text = input_.substr(start, pos_ - start);
      if (is_real) {
        current_.kind = Token::Kind::Real;
        current_.real_value = std::strtod(text.c_str(), nullptr);
      } else {
        current_.kind = Token::Kind::Integer;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), current_.int_value);
        if (ec != std::errc()) fail("integer literal out of range");
      }
      current_.text = std::move(text);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (std::isalnum(static_cast<unsigned char>(look())) || look() == '_') bump();
      current_.kind = Token::Kind::Ident;
      current_.text = input_.substr(start, pos_ - start);
      return;
    }
    if (c == '"') {
      bump();
      std::string text;
      while (true) {
        char ch = look();
        if (ch == '\0') fail("unterminated string literal");
        if (ch == '"') {
          bump();
          break;
        }
        if (ch == '\\') {
          bump();
          char esc = look();
          switch (esc) {
            case '"': text.push_back('"'); break;
            case '\\': text.push_back('\\'); break;
            case 'n': text.push_back('\n'); break;
            case 't': text.push_back('\t'); break;
            default: fail("unknown escape sequence");
          }
          bump();
          continue;
        }
        text.push_back(ch);
        bump();
      }
      current_.kind = Token::Kind::Text;
      current_.text = std::move(text);
      return;
    }
    // Multi-character operators first.
    static const char* two_char[] = {"<=", ">=", "!="};
    for (const char* op : two_char) {
      if (c == op[0] && look(1) == op[1]) {
        current_.kind = Token::Kind::Symbol;
        current_.text = op;
        bump();
        bump();
        return;
      }
    }
    static const std::string singles = "()[],;=<>+-*/";
    if (singles.find(c) != std::string::npos) {
      current_.kind = Token::Kind::Symbol;
      current_.text = std::string(1, c);
      bump();
      return;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  const std::string& input_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
  Token current_;
};

class Parser {
 public:
  explicit Parser(const std::string& input) : lexer_(input) {}

  QueryPtr parse_whole() {
    QueryPtr q = parse_query();
    expect_end();
    return q;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    const Token& t = lexer_.peek();
    throw ParseError(msg, t.line, t.column);
  }

  bool at_symbol(const std::string& s) {
    return lexer_.peek().kind == Token::Kind::Symbol && lexer_.peek().text == s;
  }

  bool at_ident(const std::string& s) {
    return lexer_.peek().kind == Token::Kind::Ident && lexer_.peek().text == s;
  }

  void expect_symbol(const std::string& s) {
    if (!at_symbol(s)) fail("expected '" + s + "'");
    lexer_.next();
  }

  void expect_end() {
    if (lexer_.peek().kind != Token::Kind::End) fail("trailing input after query");
  }

  std::string expect_ident() {
    if (lexer_.peek().kind != Token::Kind::Ident) fail("expected an identifier");
    return lexer_.next().text;
  }

  QueryPtr parse_query() {
    if (lexer_.peek().kind != Token::Kind::Ident) fail("expected a query");
    std::string head = lexer_.peek().text;
    if (head == "relation") {
      lexer_.next();
      return q_relation(expect_ident());
    }
    if (head == "project") {
      lexer_.next();
      expect_symbol("[");
      std::vector<Term> terms;
      terms.push_back(parse_term());
      while (at_symbol(",")) {
        lexer_.next();
        terms.push_back(parse_term());
      }
      expect_symbol("]");
      expect_symbol("(");
      QueryPtr child = parse_query();
      expect_symbol(")");
      return q_project(std::move(terms), std::move(child));
    }
    if (head == "select" || head == "join") {
      lexer_.next();
      expect_symbol("[");
      Predicate pred = parse_predicate();
      expect_symbol("]");
      expect_symbol("(");
      QueryPtr left = parse_query();
      if (head == "select") {
        expect_symbol(")");
        return q_select(std::move(pred), std::move(left));
      }
      expect_symbol(",");
      QueryPtr right = parse_query();
      expect_symbol(")");
      return q_join(std::move(pred), std::move(left), std::move(right));
    }
    if (head == "times" || head == "msum" || head == "mdiff" || head == "setunion") {
      lexer_.next();
      expect_symbol("(");
      QueryPtr left = parse_query();
      expect_symbol(",");
      QueryPtr right = parse_query();
      expect_symbol(")");
      if (head == "times") return q_cross(std::move(left), std::move(right));
      if (head == "msum") return q_msum(std::move(left), std::move(right));
      if (head == "mdiff") return q_mdiff(std::move(left), std::move(right));
      return q_setunion(std::move(left), std::move(right));
    }
    if (head == "dedup") {
      lexer_.next();
      expect_symbol("(");
      QueryPtr child = parse_query();
      expect_symbol(")");
      return q_dedup(std::move(child));
    }
    if (head == "agg") {
      lexer_.next();
      expect_symbol("[");
      std::vector<int> groups;
      if (at_ident("group")) {
        lexer_.next();
        while (lexer_.peek().kind == Token::Kind::Hash) {
          groups.push_back(int(lexer_.next().int_value));
          if (at_symbol(",")) {
            lexer_.next();
            continue;
          }
          break;
        }
      }
      expect_symbol(";");
      std::vector<AggSpec> aggs;
      aggs.push_back(parse_agg_spec());
      while (at_symbol(",")) {
        lexer_.next();
        aggs.push_back(parse_agg_spec());
      }
      expect_symbol("]");
      expect_symbol("(");
      QueryPtr child = parse_query();
      expect_symbol(")");
      return q_aggregate(std::move(groups), std::move(aggs), std::move(child));
    }
    // A bare identifier is a relation reference.
    lexer_.next();
    return q_relation(head);
  }

  AggSpec parse_agg_spec() {
    std::string name = expect_ident();
    AggKind kind;
    bool lifted = false;
    if (name == "count") kind = AggKind::Count;
    else if (name == "sum") kind = AggKind::Sum;
    else if (name == "min") kind = AggKind::Min;
    else if (name == "max") kind = AggKind::Max;
    else if (name == "oplus") kind = AggKind::PlusFold;
    else if (name == "deltaoplus") kind = AggKind::DeltaPlusFold;
    else if (name == "lift_count") { kind = AggKind::LiftCount; lifted = true; }
    else if (name == "lift_sum") { kind = AggKind::LiftSum; lifted = true; }
    else if (name == "lift_min") { kind = AggKind::LiftMin; lifted = true; }
    else if (name == "lift_max") { kind = AggKind::LiftMax; lifted = true; }
    else fail("unknown aggregate function '" + name + "'");

    expect_symbol("(");
    Term term = parse_term();
    std::optional<Term> annot;
    if (lifted) {
      expect_symbol(",");
      annot = parse_term();
    }
    expect_symbol(")");
    std::string display;
    if (at_ident("as")) {
      lexer_.next();
      display = expect_ident();
    }
    return AggSpec{kind, std::move(term), std::move(annot), std::move(display)};
  }

  Predicate parse_predicate() { return parse_or(); }

  Predicate parse_or() {
    std::vector<Predicate> parts{parse_and()};
    while (at_ident("or")) {
      lexer_.next();
      parts.push_back(parse_and());
    }
    return Predicate::disj(std::move(parts));
  }

  Predicate parse_and() {
    std::vector<Predicate> parts{parse_pred_atom()};
    while (at_ident("and")) {
      lexer_.next();
      parts.push_back(parse_pred_atom());
    }
    return Predicate::conj(std::move(parts));
  }

  Predicate parse_pred_atom() {
    if (at_ident("not")) {
      lexer_.next();
      expect_symbol("(");
      Predicate inner = parse_predicate();
      expect_symbol(")");
      return Predicate::negate(std::move(inner));
    }
    if (at_symbol("(")) {
      // Either a grouped predicate or a parenthesized term starting a
      // comparison; try the predicate reading, backtrack on failure.
      auto mark = lexer_.checkpoint();
      try {
        lexer_.next();
        Predicate inner = parse_predicate();
        expect_symbol(")");
        return inner;
      } catch (const ParseError&) {
        lexer_.restore(mark);
      }
    }
    Term lhs = parse_term();
    CmpOp op;
    if (at_symbol("=")) op = CmpOp::Eq;
    else if (at_symbol("!=")) op = CmpOp::Ne;
    else if (at_symbol("<")) op = CmpOp::Lt;
    else if (at_symbol("<=")) op = CmpOp::Le;
    else if (at_symbol(">")) op = CmpOp::Gt;
    else if (at_symbol(">=")) op = CmpOp::Ge;
    else fail("expected a comparison operator");
    lexer_.next();
    Term rhs = parse_term();
    return Predicate::compare(op, std::move(lhs), std::move(rhs));
  }

  Term parse_term() { return parse_additive(); }

  Term parse_additive() {
    Term t = parse_multiplicative();
    while (at_symbol("+") || at_symbol("-")) {
      TermOp op = lexer_.next().text == "+" ? TermOp::Add : TermOp::Sub;
      Term rhs = parse_multiplicative();
      t = Term::apply(op, {std::move(t), std::move(rhs)});
    }
    return t;
  }

  Term parse_multiplicative() {
    Term t = parse_term_atom();
    while (at_symbol("*") || at_symbol("/")) {
      TermOp op = lexer_.next().text == "*" ? TermOp::Mul : TermOp::Div;
      Term rhs = parse_term_atom();
      t = Term::apply(op, {std::move(t), std::move(rhs)});
    }
    return t;
  }

  Term parse_term_atom() {
    const Token& t = lexer_.peek();
    switch (t.kind) {
      case Token::Kind::Hash:
        return Term::column(int(lexer_.next().int_value));
      case Token::Kind::Integer:
        return Term::literal(Value::integer(lexer_.next().int_value));
      case Token::Kind::Real:
        return Term::literal(Value::real(lexer_.next().real_value));
      case Token::Kind::Text:
        return Term::literal(Value::text(lexer_.next().text));
      case Token::Kind::Ident: {
        std::string name = t.text;
        if (name == "true" || name == "false") {
          lexer_.next();
          return Term::literal(Value::boolean(name == "true"));
        }
        if (name == "date") {
          lexer_.next();
          if (lexer_.peek().kind != Token::Kind::Text) fail("expected a quoted date");
          std::string iso = lexer_.next().text;
          if (!Value::is_valid_date(iso)) fail("invalid ISO date '" + iso + "'");
          return Term::literal(Value::date(std::move(iso)));
        }
        if (name == "concat" || name == "otimes" || name == "ominus") {
          lexer_.next();
          expect_symbol("(");
          Term a = parse_term();
          expect_symbol(",");
          Term b = parse_term();
          expect_symbol(")");
          TermOp op = name == "concat" ? TermOp::Concat
                      : name == "otimes" ? TermOp::OTimes
                                         : TermOp::OMinus;
          return Term::apply(op, {std::move(a), std::move(b)});
        }
        fail("unexpected identifier '" + name + "' in a term");
      }
      case Token::Kind::Symbol:
        if (t.text == "(") {
          lexer_.next();
          Term inner = parse_term();
          expect_symbol(")");
          return inner;
        }
        if (t.text == "-") {
          lexer_.next();
          const Token& lit = lexer_.peek();
          if (lit.kind == Token::Kind::Integer) {
            return Term::literal(Value::integer(-lexer_.next().int_value));
          }
          if (lit.kind == Token::Kind::Real) {
            return Term::literal(Value::real(-lexer_.next().real_value));
          }
          fail("expected a numeric literal after unary '-'");
        }
        fail("unexpected symbol '" + t.text + "' in a term");
      default:
        fail("expected a term");
    }
  }

  Lexer lexer_;
};

}  // namespace

QueryPtr parse(const std::string& text) { return Parser(text).parse_whole(); }

}  // namespace provq
