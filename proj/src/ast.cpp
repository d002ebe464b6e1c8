#include "recql/ast.hpp"

#include <algorithm>
#include <sstream>

#include "recql/util.hpp"

namespace recql {

void IndexExpr::add_term(const std::string& var, long long coef) {
  for (auto& [name, c] : terms) {
    if (iequals(name, var)) {
      c += coef;
      if (c == 0) {
        terms.erase(std::remove_if(terms.begin(), terms.end(),
                                   [&](const auto& t) { return t.second == 0; }),
                    terms.end());
      }
      return;
    }
  }
  if (coef != 0) terms.emplace_back(var, coef);
}

long long IndexExpr::eval(const Binding& binding) const {
  long long v = constant;
  for (const auto& [name, coef] : terms) {
    auto bound = binding.lookup(name);
    if (!bound) throw Error(ErrorKind::Internal, "unbound index variable '" + name + "'");
    v += coef * *bound;
  }
  return v;
}

bool IndexExpr::references(std::string_view var) const {
  for (const auto& [name, coef] : terms) {
    (void)coef;
    if (iequals(name, var)) return true;
  }
  return false;
}

static std::vector<std::pair<std::string, long long>> folded_sorted(
    const std::vector<std::pair<std::string, long long>>& terms) {
  std::vector<std::pair<std::string, long long>> out;
  out.reserve(terms.size());
  for (const auto& [name, coef] : terms) out.emplace_back(fold(name), coef);
  std::sort(out.begin(), out.end());
  return out;
}

bool IndexExpr::operator==(const IndexExpr& o) const {
  return constant == o.constant && folded_sorted(terms) == folded_sorted(o.terms);
}

// The text must reparse under the index grammar, which has no unary minus:
// coefficients expand into repeated terms and a leading negative term forces
// the constant to the front ("0-i", "5-i").
std::string IndexExpr::to_string() const {
  std::string out;
  auto emit_var = [&](const std::string& name, long long count, bool negative) {
    for (long long k = 0; k < count; ++k) {
      if (negative) {
        out += "-";
      } else if (!out.empty()) {
        out += "+";
      }
      out += name;
    }
  };
  for (const auto& [name, coef] : terms) {
    if (coef > 0) emit_var(name, coef, false);
  }
  bool has_negative = false;
  for (const auto& [name, coef] : terms) {
    if (coef < 0) has_negative = true;
  }
  if (out.empty()) {
    out = std::to_string(constant);
    for (const auto& [name, coef] : terms) {
      if (coef < 0) emit_var(name, -coef, true);
    }
    return out;
  }
  for (const auto& [name, coef] : terms) {
    if (coef < 0) emit_var(name, -coef, true);
  }
  (void)has_negative;
  if (constant > 0) {
    out += "+" + std::to_string(constant);
  } else if (constant < 0) {
    out += std::to_string(constant);
  }
  return out;
}

void Binding::bind(const std::string& var, long long value) {
  entries_.emplace_back(var, value);
}

void Binding::truncate(size_t n) {
  if (n < entries_.size()) entries_.resize(n);
}

std::optional<long long> Binding::lookup(std::string_view var) const {
  // Later bindings shadow earlier ones.
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (iequals(it->first, var)) return it->second;
  }
  return std::nullopt;
}

bool IndexPattern::operator==(const IndexPattern& o) const {
  if (is_range() != o.is_range()) return false;
  if (!is_range()) return *expr == *o.expr;
  return iequals(variable, o.variable) && lower == o.lower &&
         upper.has_value() == o.upper.has_value() &&
         (!upper || *upper == *o.upper);
}

std::string IndexPattern::to_string() const {
  if (!is_range()) return "[" + expr->to_string() + "]";
  std::string s = "[" + variable + ":" + lower.to_string() + "...";
  if (upper) s += upper->to_string();
  return s + "]";
}

const char* cmp_op_text(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "<>";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

bool ScalarExpr::operator==(const ScalarExpr& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::Number: return number == o.number;
    case Kind::Ident: return iequals(qualifier, o.qualifier) && iequals(name, o.name);
    case Kind::Call:
    case Kind::Aggregate: return iequals(name, o.name) && args == o.args;
    case Kind::Binary: return op == o.op && args == o.args;
    case Kind::Star: return true;
  }
  return false;
}

bool ScalarExpr::contains_aggregate() const {
  if (kind == Kind::Aggregate) return true;
  for (const auto& a : args) {
    if (a.contains_aggregate()) return true;
  }
  return false;
}

bool SelectItem::operator==(const SelectItem& o) const {
  return expr == o.expr && iequals(alias, o.alias);
}

bool Predicate::operator==(const Predicate& o) const {
  return lhs == o.lhs && op == o.op && rhs == o.rhs;
}

bool UnionDim::operator==(const UnionDim& o) const {
  return iequals(variable, o.variable) && lower == o.lower && upper == o.upper;
}

bool FromItem::operator==(const FromItem& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::Base:
      return iequals(table, o.table) && iequals(alias, o.alias);
    case Kind::Instance:
      return iequals(table, o.table) && iequals(alias, o.alias) && indices == o.indices;
    case Kind::UnionRange:
      return iequals(table, o.table) && iequals(alias, o.alias) && dims == o.dims;
    case Kind::Derived:
      return iequals(alias, o.alias) && *derived == *o.derived;
    case Kind::Values:
      return iequals(alias, o.alias) && values_rows == o.values_rows;
  }
  return false;
}

bool Query::operator==(const Query& o) const {
  return items == o.items && from == o.from && where == o.where && group_by == o.group_by;
}

static bool names_equal(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!iequals(a[i], b[i])) return false;
  }
  return true;
}

bool TableDefinition::operator==(const TableDefinition& o) const {
  return iequals(name, o.name) && patterns == o.patterns && names_equal(columns, o.columns) &&
         *body == *o.body;
}

bool PathExpr::Part::operator==(const Part& o) const {
  if (text.has_value() != o.text.has_value()) return false;
  if (text) return *text == *o.text;
  return expr == o.expr;
}

bool PathExpr::operator==(const PathExpr& o) const { return parts == o.parts; }

std::string PathExpr::eval(const Binding& binding) const {
  std::string out;
  for (const auto& part : parts) {
    if (part.text) {
      out += *part.text;
    } else {
      out += std::to_string(part.expr.eval(binding));
    }
  }
  return out;
}

bool InstanceRef::operator==(const InstanceRef& o) const {
  return iequals(name, o.name) && indices == o.indices;
}

bool ColumnDecl::operator==(const ColumnDecl& o) const {
  return iequals(name, o.name) && kind == o.kind;
}

bool ForLoop::operator==(const ForLoop& o) const {
  return iequals(var, o.var) && lower == o.lower && upper == o.upper && body == o.body;
}

bool ExecItem::operator==(const ExecItem& o) const {
  if ((stmt != nullptr) != (o.stmt != nullptr)) return false;
  if (stmt) return *stmt == *o.stmt;
  return *loop == *o.loop;
}

bool Statement::operator==(const Statement& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::Define: return def == o.def;
    case Kind::AdHocQuery: return *query == *o.query && iequals(bulk_into, o.bulk_into);
    case Kind::Execute: return exec == o.exec;
    case Kind::Materialize: return target == o.target;
    case Kind::Export: return target == o.target && export_path == o.export_path;
    case Kind::LoadBase:
      return iequals(base_name, o.base_name) && base_columns == o.base_columns &&
             base_path == o.base_path;
  }
  return false;
}

bool Program::operator==(const Program& o) const { return statements == o.statements; }

}  // namespace recql
