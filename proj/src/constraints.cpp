#include "cfbench/constraints.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace cfbench {

namespace {

// Recursive-descent parser for one side of a relation.
class ExprParser {
 public:
  ExprParser(const std::string& text, const std::function<int(const std::string&)>& resolve)
      : text_(text), resolve_(resolve) {}

  RelationExpression::NodePtr parse_all() {
    auto node = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) {
      throw std::runtime_error("malformed expression: trailing input at '" + text_.substr(pos_) +
                               "'");
    }
    return node;
  }

 private:
  using Node = RelationExpression::Node;
  using NodePtr = RelationExpression::NodePtr;

  NodePtr make(Node::Op op, NodePtr l = nullptr, NodePtr r = nullptr) {
    auto n = std::make_unique<Node>();
    n->op = op;
    n->left = std::move(l);
    n->right = std::move(r);
    return n;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  NodePtr parse_expr() {
    auto node = parse_term();
    for (;;) {
      if (eat('+')) {
        node = make(Node::Op::Add, std::move(node), parse_term());
      } else if (eat('-')) {
        node = make(Node::Op::Sub, std::move(node), parse_term());
      } else {
        return node;
      }
    }
  }

  NodePtr parse_term() {
    auto node = parse_unary();
    for (;;) {
      if (eat('*')) {
        node = make(Node::Op::Mul, std::move(node), parse_unary());
      } else if (eat('/')) {
        node = make(Node::Op::Div, std::move(node), parse_unary());
      } else {
        return node;
      }
    }
  }

  NodePtr parse_unary() {
    if (eat('-')) return make(Node::Op::Neg, parse_unary());
    return parse_power();
  }

  NodePtr parse_power() {
    auto base = parse_primary();
    if (eat('^')) {
      // right associative: a^b^c = a^(b^c); exponent may carry unary minus
      return make(Node::Op::Pow, std::move(base), parse_unary());
    }
    return base;
  }

  NodePtr parse_primary() {
    const char c = peek();
    if (c == '(') {
      eat('(');
      auto node = parse_expr();
      if (!eat(')')) throw std::runtime_error("malformed expression: missing ')'");
      return node;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    throw std::runtime_error(std::string("malformed expression: unexpected '") +
                             (c ? std::string(1, c) : "end of input") + "'");
  }

  NodePtr parse_number() {
    skip_ws();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text_.substr(pos_), &used);
    } catch (const std::exception&) {
      throw std::runtime_error("malformed expression: bad number at '" + text_.substr(pos_) + "'");
    }
    pos_ += used;
    auto n = make(Node::Op::Constant);
    n->value = v;
    return n;
  }

  NodePtr parse_identifier() {
    skip_ws();
    std::size_t end = pos_;
    while (end < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
      ++end;
    }
    const std::string name = text_.substr(pos_, end - pos_);
    pos_ = end;
    if (name == "pi") {
      auto n = make(Node::Op::Constant);
      n->value = std::numbers::pi;
      return n;
    }
    auto n = make(Node::Op::Variable);
    n->index = resolve_(name);
    return n;
  }

  const std::string& text_;
  const std::function<int(const std::string&)>& resolve_;
  std::size_t pos_ = 0;
};

}  // namespace

RelationExpression RelationExpression::parse(
    const std::string& text, const std::function<int(const std::string&)>& resolve) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || text.find('=', eq + 1) != std::string::npos) {
    throw std::runtime_error("relation must contain exactly one '=': " + text);
  }
  RelationExpression rel;
  rel.text_ = text;
  rel.lhs_ = ExprParser(text.substr(0, eq), resolve).parse_all();
  const std::string rhs_text = text.substr(eq + 1);
  rel.rhs_ = ExprParser(rhs_text, resolve).parse_all();
  return rel;
}

double RelationExpression::eval(const Node& n, const Vector& raw) {
  switch (n.op) {
    case Node::Op::Constant:
      return n.value;
    case Node::Op::Variable:
      return raw(n.index);
    case Node::Op::Add:
      return eval(*n.left, raw) + eval(*n.right, raw);
    case Node::Op::Sub:
      return eval(*n.left, raw) - eval(*n.right, raw);
    case Node::Op::Mul:
      return eval(*n.left, raw) * eval(*n.right, raw);
    case Node::Op::Div:
      return eval(*n.left, raw) / eval(*n.right, raw);
    case Node::Op::Pow:
      return std::pow(eval(*n.left, raw), eval(*n.right, raw));
    case Node::Op::Neg:
      return -eval(*n.left, raw);
  }
  return std::nan("");
}

bool RelationExpression::holds(const Vector& raw, double tolerance) const {
  const double l = eval(*lhs_, raw);
  const double r = eval(*rhs_, raw);
  if (!std::isfinite(l) || !std::isfinite(r)) return false;
  return std::abs(l - r) <= tolerance * std::max(1.0, std::abs(r));
}

ConstraintSet parse_constraints(const PreparedDataset& ds) {
  ConstraintSet cs;
  const auto& schema = ds.schema;

  // explicit bounds (column range, or a range entry in the constraint
  // section) take precedence over the train min/max fallback
  auto explicit_range = [&](const std::string& name) -> std::optional<std::pair<double, double>> {
    for (const auto& entry : schema.constraints) {
      if (entry.kind == ConstraintEntry::Kind::Range && entry.feature == name) {
        return std::make_pair(entry.lo, entry.hi);
      }
    }
    const ColumnSpec* spec = schema.find(name);
    if (spec && spec->allowed_range) return *spec->allowed_range;
    return std::nullopt;
  };

  for (const auto& g : ds.encoding.groups) {
    if (g.kind == ColumnKind::Numeric) {
      UnivariateRule rule;
      rule.kind = UnivariateRule::Kind::Range;
      rule.feature = g.name;
      rule.encoded_index = g.indices[0];
      if (const auto range = explicit_range(g.name)) {
        rule.lo = range->first;
        rule.hi = range->second;
      } else {
        rule.lo = denormalize_value(ds, g.indices[0], ds.stats.min(g.indices[0]));
        rule.hi = denormalize_value(ds, g.indices[0], ds.stats.max(g.indices[0]));
      }
      cs.univariate.push_back(std::move(rule));
    } else if (g.kind == ColumnKind::Binary) {
      UnivariateRule rule;
      rule.kind = UnivariateRule::Kind::Binary;
      rule.feature = g.name;
      rule.encoded_index = g.indices[0];
      cs.univariate.push_back(std::move(rule));
    } else {
      cs.ohe_groups.push_back({g.name, g.indices});
    }
  }

  auto resolve = [&](const std::string& name) -> int {
    const EncodedGroup* g = ds.encoding.group_for(name);
    if (!g) throw std::runtime_error("relation references unknown feature: " + name);
    if (g->kind == ColumnKind::Categorical) {
      throw std::runtime_error("relation references one-hot feature " + name +
                               "; relations need scalar features");
    }
    return g->indices[0];
  };

  for (const auto& entry : schema.constraints) {
    if (entry.kind != ConstraintEntry::Kind::Relation) continue;
    RelationRule rule{RelationExpression::parse(entry.relation, resolve), entry.tolerance};
    cs.relations.push_back(std::move(rule));
  }
  return cs;
}

int check_ruc(const Vector& raw, const ConstraintSet& cs) {
  for (const auto& rule : cs.univariate) {
    const double v = raw(rule.encoded_index);
    if (rule.kind == UnivariateRule::Kind::Binary) {
      if (v != 0.0 && v != 1.0) return 0;
    } else {
      if (!(rule.lo <= v && v <= rule.hi)) return 0;  // NaN fails both sides
    }
  }
  return 1;
}

int check_rmc(const Vector& raw, const Vector& encoded, const ConstraintSet& cs) {
  for (const auto& group : cs.ohe_groups) {
    int active = 0;
    for (int idx : group.indices) {
      const double v = encoded(idx);
      if (v == 1.0) {
        ++active;
      } else if (v != 0.0) {
        return 0;
      }
    }
    if (active != 1) return 0;
  }
  for (const auto& rule : cs.relations) {
    if (!rule.expression.holds(raw, rule.tolerance)) return 0;
  }
  return 1;
}

std::vector<std::string> audit_dataset(const PreparedDataset& ds, const ConstraintSet& cs) {
  std::vector<std::string> warnings;
  for (int r = 0; r < ds.rows(); ++r) {
    const Vector encoded = ds.X.row(r);
    const Vector raw = decode_row(ds, encoded);
    const int ruc = check_ruc(raw, cs);
    const int rmc = check_rmc(raw, encoded, cs);
    if (!ruc || !rmc) {
      std::ostringstream msg;
      msg << "row " << r << " of dataset " << ds.id << " violates its own constraints (ruc=" << ruc
          << ", rmc=" << rmc << "); check data quality";
      warnings.push_back(msg.str());
    }
  }
  return warnings;
}

}  // namespace cfbench
