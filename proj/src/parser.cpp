#include "recql/parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>
#include <vector>

#include "recql/util.hpp"

namespace recql {
namespace {

enum class Tok {
  Ident, Number, String,
  LParen, RParen, LBracket, RBracket,
  Comma, Semi, Colon, Dot, Ellipsis,
  Plus, Minus, Star,
  Eq, Ne, Lt, Le, Gt, Ge,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;         // identifier spelling or string contents
  double number = 0.0;
  bool is_int = false;
  long long int_value = 0;
  SourceSpan span;
};

const char* token_name(Tok kind) {
  switch (kind) {
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::String: return "string";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Comma: return "','";
    case Tok::Semi: return "';'";
    case Tok::Colon: return "':'";
    case Tok::Dot: return "'.'";
    case Tok::Ellipsis: return "'...'";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Eq: return "'='";
    case Tok::Ne: return "'<>'";
    case Tok::Lt: return "'<'";
    case Tok::Le: return "'<='";
    case Tok::Gt: return "'>'";
    case Tok::Ge: return "'>='";
    case Tok::End: return "end of input";
  }
  return "?";
}

[[noreturn]] void fail(const SourceSpan& span, const std::string& msg) {
  throw Error(ErrorKind::Syntax, msg, span);
}

std::vector<Token> lex(std::string_view text) {
  std::vector<Token> out;
  size_t i = 0;
  int line = 1, col = 1;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (text[i + k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += n;
  };
  auto peek = [&](size_t k) -> char { return i + k < text.size() ? text[i + k] : '\0'; };
  while (i < text.size()) {
    char c = text[i];
    SourceSpan span{line, col};
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '-' && peek(1) == '-') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    if ((c >= '0' && c <= '9')) {
      size_t start = i;
      while (i < text.size() && text[i] >= '0' && text[i] <= '9') advance(1);
      bool is_int = true;
      if (i < text.size() && text[i] == '.' && peek(1) != '.') {
        if (!(peek(1) >= '0' && peek(1) <= '9')) fail(span, "expected digits after decimal point");
        is_int = false;
        advance(1);
        while (i < text.size() && text[i] >= '0' && text[i] <= '9') advance(1);
      }
      if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
        size_t j = i + 1;
        if (j < text.size() && (text[j] == '+' || text[j] == '-')) ++j;
        if (j < text.size() && text[j] >= '0' && text[j] <= '9') {
          is_int = false;
          advance(j - i);
          while (i < text.size() && text[i] >= '0' && text[i] <= '9') advance(1);
        }
      }
      Token tok;
      tok.kind = Tok::Number;
      tok.span = span;
      tok.text = std::string(text.substr(start, i - start));
      auto [p, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), tok.number);
      if (ec != std::errc() || p != tok.text.data() + tok.text.size()) {
        fail(span, "malformed number '" + tok.text + "'");
      }
      tok.is_int = is_int;
      if (is_int) {
        auto [ip, iec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), tok.int_value);
        if (iec != std::errc() || ip != tok.text.data() + tok.text.size()) {
          fail(span, "integer literal out of range");
        }
      }
      out.push_back(std::move(tok));
      continue;
    }
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
      size_t start = i;
      while (i < text.size() &&
             ((text[i] >= 'a' && text[i] <= 'z') || (text[i] >= 'A' && text[i] <= 'Z') ||
              (text[i] >= '0' && text[i] <= '9') || text[i] == '_')) {
        advance(1);
      }
      out.push_back({Tok::Ident, std::string(text.substr(start, i - start)), 0.0, false, 0, span});
      continue;
    }
    if (c == '\'') {
      advance(1);
      size_t start = i;
      while (i < text.size() && text[i] != '\'' && text[i] != '\n') advance(1);
      if (i >= text.size() || text[i] != '\'') fail(span, "unterminated string literal");
      std::string value(text.substr(start, i - start));
      advance(1);
      out.push_back({Tok::String, std::move(value), 0.0, false, 0, span});
      continue;
    }
    if (c == '.') {
      if (peek(1) == '.' && peek(2) == '.') {
        advance(3);
        out.push_back({Tok::Ellipsis, "...", 0.0, false, 0, span});
      } else {
        advance(1);
        out.push_back({Tok::Dot, ".", 0.0, false, 0, span});
      }
      continue;
    }
    auto single = [&](Tok kind) {
      advance(1);
      out.push_back({kind, std::string(1, c), 0.0, false, 0, span});
    };
    switch (c) {
      case '(': single(Tok::LParen); continue;
      case ')': single(Tok::RParen); continue;
      case '[': single(Tok::LBracket); continue;
      case ']': single(Tok::RBracket); continue;
      case ',': single(Tok::Comma); continue;
      case ';': single(Tok::Semi); continue;
      case ':': single(Tok::Colon); continue;
      case '+': single(Tok::Plus); continue;
      case '-': single(Tok::Minus); continue;
      case '*': single(Tok::Star); continue;
      case '=': single(Tok::Eq); continue;
      case '<':
        if (peek(1) == '>') {
          advance(2);
          out.push_back({Tok::Ne, "<>", 0.0, false, 0, span});
        } else if (peek(1) == '=') {
          advance(2);
          out.push_back({Tok::Le, "<=", 0.0, false, 0, span});
        } else {
          single(Tok::Lt);
        }
        continue;
      case '>':
        if (peek(1) == '=') {
          advance(2);
          out.push_back({Tok::Ge, ">=", 0.0, false, 0, span});
        } else {
          single(Tok::Gt);
        }
        continue;
      default:
        fail(span, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::End, "", 0.0, false, 0, SourceSpan{line, col}});
  return out;
}

bool is_reserved(std::string_view name) {
  static const std::array<const char*, 22> words = {
      "create", "table", "as", "select", "from", "where", "group", "by",
      "and", "union", "values", "sum", "execute", "for", "in", "materialize",
      "export", "to", "load", "bulk", "collect", "into"};
  std::string folded = fold(name);
  for (const char* w : words) {
    if (folded == w) return true;
  }
  return false;
}

class Parser {
public:
  explicit Parser(std::string_view text) : tokens_(lex(text)) {}

  Program parse_program() {
    Program program;
    while (!at(Tok::End)) {
      program.statements.push_back(parse_statement());
    }
    return program;
  }

  Query parse_single_select() {
    expect_kw("select");
    Query q = parse_select(nullptr);
    accept(Tok::Semi);
    if (!at(Tok::End)) fail(cur().span, "unexpected input after query");
    return q;
  }

private:
  std::vector<Token> tokens_;
  size_t pos_ = 0;
  std::vector<std::string> scope_;
  std::map<std::string, std::pair<size_t, SourceSpan>> arity_;

  const Token& cur() const { return tokens_[pos_]; }
  const Token& peek(size_t k = 1) const {
    return tokens_[std::min(pos_ + k, tokens_.size() - 1)];
  }
  bool at(Tok kind) const { return cur().kind == kind; }
  bool at_kw(std::string_view kw) const {
    return cur().kind == Tok::Ident && iequals(cur().text, kw);
  }
  bool peek_kw(size_t k, std::string_view kw) const {
    return peek(k).kind == Tok::Ident && iequals(peek(k).text, kw);
  }
  Token take() { return tokens_[pos_++]; }
  bool accept(Tok kind) {
    if (!at(kind)) return false;
    ++pos_;
    return true;
  }
  Token expect(Tok kind, const char* context) {
    if (!at(kind)) {
      fail(cur().span, std::string("expected ") + token_name(kind) + " " + context + ", found " +
                           token_name(cur().kind));
    }
    return take();
  }
  void expect_kw(std::string_view kw) {
    if (!at_kw(kw)) {
      std::string upper(kw);
      for (char& c : upper) c = static_cast<char>(::toupper(static_cast<unsigned char>(c)));
      fail(cur().span, "expected " + upper + ", found " + describe(cur()));
    }
    ++pos_;
  }
  bool accept_kw(std::string_view kw) {
    if (!at_kw(kw)) return false;
    ++pos_;
    return true;
  }
  static std::string describe(const Token& tok) {
    if (tok.kind == Tok::Ident) return "'" + tok.text + "'";
    return token_name(tok.kind);
  }

  std::string take_name(const char* what) {
    Token tok = expect(Tok::Ident, what);
    if (is_reserved(tok.text)) {
      fail(tok.span, "reserved word '" + tok.text + "' cannot be used as " + what);
    }
    return tok.text;
  }

  bool in_scope(std::string_view var) const {
    for (const auto& v : scope_) {
      if (iequals(v, var)) return true;
    }
    return false;
  }

  void record_arity(const std::string& name, size_t n, const SourceSpan& span) {
    std::string key = fold(name);
    auto it = arity_.find(key);
    if (it == arity_.end()) {
      arity_.emplace(key, std::make_pair(n, span));
      return;
    }
    if (it->second.first != n) {
      std::ostringstream msg;
      msg << "table '" << name << "' used with " << n << " indices but previously with "
          << it->second.first << " at line " << it->second.second.line;
      throw Error(ErrorKind::Arity, msg.str(), span);
    }
  }

  // ---- index expressions --------------------------------------------------

  IndexExpr parse_index_expr() {
    IndexExpr expr;
    bool first = true;
    long long sign = 1;
    for (;;) {
      if (!first) {
        if (accept(Tok::Plus)) {
          sign = 1;
        } else if (accept(Tok::Minus)) {
          sign = -1;
        } else {
          break;
        }
      } else if (at(Tok::Minus)) {
        fail(cur().span, "negative index expressions are not supported");
      }
      if (at(Tok::Number)) {
        Token tok = take();
        if (!tok.is_int) fail(tok.span, "index expressions must use integers");
        expr.constant += sign * tok.int_value;
      } else if (at(Tok::Ident) && !is_reserved(cur().text)) {
        Token tok = take();
        if (!in_scope(tok.text)) {
          fail(tok.span, "unknown index variable '" + tok.text + "'");
        }
        expr.add_term(tok.text, sign);
      } else {
        fail(cur().span, std::string("expected index expression, found ") + describe(cur()));
      }
      first = false;
      sign = 1;
    }
    if (expr.is_constant() && expr.constant < 0) {
      fail(cur().span, "negative index expressions are not supported");
    }
    return expr;
  }

  // ---- definitions --------------------------------------------------------

  IndexPattern parse_pattern() {
    IndexPattern pat;
    pat.span = cur().span;
    expect(Tok::LBracket, "to open an index pattern");
    if (at(Tok::Ident) && peek(1).kind == Tok::Colon) {
      Token var = take();
      if (is_reserved(var.text)) {
        fail(var.span, "reserved word '" + var.text + "' cannot be used as an index variable");
      }
      take();  // ':'
      pat.variable = var.text;
      pat.lower = parse_index_expr();
      expect(Tok::Ellipsis, "in an index range");
      if (!at(Tok::RBracket)) {
        pat.upper = parse_index_expr();
      }
      expect(Tok::RBracket, "to close an index pattern");
      scope_.push_back(pat.variable);  // visible to later patterns and the body
    } else {
      pat.expr = parse_index_expr();
      expect(Tok::RBracket, "to close an index pattern");
    }
    return pat;
  }

  Statement parse_create_table() {
    Statement stmt;
    stmt.kind = Statement::Kind::Define;
    stmt.span = cur().span;
    expect_kw("create");
    expect_kw("table");
    stmt.def.span = stmt.span;
    stmt.def.name = take_name("a table name");
    size_t scope_base = scope_.size();
    while (at(Tok::LBracket)) {
      stmt.def.patterns.push_back(parse_pattern());
    }
    record_arity(stmt.def.name, stmt.def.patterns.size(), stmt.span);
    expect(Tok::LParen, "to open the column list");
    for (;;) {
      stmt.def.columns.push_back(take_name("a column name"));
      if (!accept(Tok::Comma)) break;
    }
    expect(Tok::RParen, "to close the column list");
    expect_kw("as");
    expect_kw("select");
    stmt.def.body = std::make_shared<Query>(parse_select(nullptr));
    expect(Tok::Semi, "to end the statement");
    scope_.resize(scope_base);
    return stmt;
  }

  // ---- scalar expressions -------------------------------------------------

  ScalarExpr parse_scalar_primary() {
    SourceSpan span = cur().span;
    if (at(Tok::Number)) {
      Token tok = take();
      ScalarExpr e;
      e.kind = ScalarExpr::Kind::Number;
      e.number = tok.number;
      e.span = span;
      return e;
    }
    if (accept(Tok::LParen)) {
      ScalarExpr inner = parse_scalar_expr();
      expect(Tok::RParen, "to close the expression");
      return inner;
    }
    if (at(Tok::Minus)) {
      fail(span, "unary minus is not supported; subtract from an explicit operand");
    }
    if (at(Tok::Ident)) {
      if (at_kw("sum") && peek(1).kind == Tok::LParen) {
        fail(span, "SUM must be the entire select item");
      }
      if (is_reserved(cur().text)) {
        fail(span, "reserved word '" + cur().text + "' cannot start an expression");
      }
      Token head = take();
      if (at(Tok::LParen)) {
        take();
        ScalarExpr call;
        call.kind = ScalarExpr::Kind::Call;
        call.name = head.text;
        call.span = span;
        if (!at(Tok::RParen)) {
          for (;;) {
            call.args.push_back(parse_scalar_expr());
            if (!accept(Tok::Comma)) break;
          }
        }
        expect(Tok::RParen, "to close the argument list");
        return call;
      }
      ScalarExpr ident;
      ident.kind = ScalarExpr::Kind::Ident;
      ident.span = span;
      if (accept(Tok::Dot)) {
        ident.qualifier = head.text;
        ident.name = take_name("a column name");
      } else {
        ident.name = head.text;
      }
      return ident;
    }
    fail(span, std::string("expected an expression, found ") + describe(cur()));
  }

  ScalarExpr parse_scalar_mul() {
    ScalarExpr lhs = parse_scalar_primary();
    while (at(Tok::Star)) {
      SourceSpan span = take().span;
      ScalarExpr node;
      node.kind = ScalarExpr::Kind::Binary;
      node.op = '*';
      node.span = span;
      node.args.push_back(std::move(lhs));
      node.args.push_back(parse_scalar_primary());
      lhs = std::move(node);
    }
    return lhs;
  }

  ScalarExpr parse_scalar_expr() {
    ScalarExpr lhs = parse_scalar_mul();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      Token op = take();
      ScalarExpr node;
      node.kind = ScalarExpr::Kind::Binary;
      node.op = op.kind == Tok::Plus ? '+' : '-';
      node.span = op.span;
      node.args.push_back(std::move(lhs));
      node.args.push_back(parse_scalar_mul());
      lhs = std::move(node);
    }
    return lhs;
  }

  // ---- queries ------------------------------------------------------------

  SelectItem parse_select_item() {
    SelectItem item;
    if (at_kw("sum") && peek(1).kind == Tok::LParen) {
      SourceSpan span = take().span;
      take();  // '('
      ScalarExpr agg;
      agg.kind = ScalarExpr::Kind::Aggregate;
      agg.name = "SUM";
      agg.span = span;
      agg.args.push_back(parse_scalar_expr());
      expect(Tok::RParen, "to close the aggregate");
      if (at(Tok::Plus) || at(Tok::Minus) || at(Tok::Star)) {
        fail(cur().span, "SUM must be the entire select item");
      }
      item.expr = std::move(agg);
    } else {
      item.expr = parse_scalar_expr();
    }
    if (accept_kw("as")) {
      item.alias = take_name("a select item alias");
    }
    return item;
  }

  ScalarExpr parse_column_ref() {
    SourceSpan span = cur().span;
    ScalarExpr e;
    e.kind = ScalarExpr::Kind::Ident;
    e.span = span;
    std::string head = take_name("a column reference");
    if (accept(Tok::Dot)) {
      e.qualifier = head;
      e.name = take_name("a column name");
    } else {
      e.name = head;
    }
    return e;
  }

  UnionDim parse_union_dim() {
    UnionDim dim;
    expect(Tok::LBracket, "to open a range dimension");
    if (at(Tok::Ident) && peek(1).kind == Tok::Colon && !is_reserved(cur().text)) {
      dim.variable = take().text;
      take();  // ':'
      dim.lower = parse_index_expr();
      expect(Tok::Ellipsis, "in a range dimension");
      if (at(Tok::RBracket)) fail(cur().span, "union ranges require an upper bound");
      dim.upper = parse_index_expr();
      expect(Tok::RBracket, "to close a range dimension");
      scope_.push_back(dim.variable);  // visible to later dimensions only
      return dim;
    }
    dim.lower = parse_index_expr();
    if (accept(Tok::Ellipsis)) {
      if (at(Tok::RBracket)) fail(cur().span, "union ranges require an upper bound");
      dim.upper = parse_index_expr();
    } else {
      dim.upper = dim.lower;
    }
    expect(Tok::RBracket, "to close a range dimension");
    return dim;
  }

  FromItem parse_from_item() {
    FromItem item;
    item.span = cur().span;
    if (at(Tok::LParen)) {
      take();
      expect_kw("select");
      item.kind = FromItem::Kind::Derived;
      item.derived = std::make_shared<Query>(parse_select(nullptr));
      expect(Tok::RParen, "to close the derived table");
      expect_kw("as");
      item.alias = take_name("a derived table alias");
      return item;
    }
    if (at_kw("values")) {
      take();
      item.kind = FromItem::Kind::Values;
      for (;;) {
        expect(Tok::LParen, "to open a VALUES tuple");
        std::vector<double> row;
        for (;;) {
          Token tok = expect(Tok::Number, "in a VALUES tuple");
          row.push_back(tok.number);
          if (!accept(Tok::Comma)) break;
        }
        expect(Tok::RParen, "to close a VALUES tuple");
        if (!item.values_rows.empty() && row.size() != item.values_rows.front().size()) {
          fail(item.span, "VALUES tuples must all have the same width");
        }
        item.values_rows.push_back(std::move(row));
        if (at(Tok::Comma) && peek(1).kind == Tok::LParen) {
          take();
          continue;
        }
        break;
      }
      return item;
    }
    if (at_kw("union")) {
      SourceSpan span = take().span;
      item.kind = FromItem::Kind::UnionRange;
      item.table = take_name("a table name");
      size_t scope_base = scope_.size();
      while (at(Tok::LBracket)) {
        item.dims.push_back(parse_union_dim());
      }
      scope_.resize(scope_base);
      if (item.dims.empty()) fail(span, "UNION requires at least one range dimension");
      record_arity(item.table, item.dims.size(), span);
      if (accept_kw("as")) item.alias = take_name("a table alias");
      return item;
    }
    SourceSpan span = cur().span;
    item.table = take_name("a table name");
    while (at(Tok::LBracket)) {
      take();
      item.indices.push_back(parse_index_expr());
      expect(Tok::RBracket, "to close a table index");
    }
    item.kind = item.indices.empty() ? FromItem::Kind::Base : FromItem::Kind::Instance;
    record_arity(item.table, item.indices.size(), span);
    if (accept_kw("as")) item.alias = take_name("a table alias");
    return item;
  }

  CmpOp parse_cmp_op() {
    switch (cur().kind) {
      case Tok::Eq: take(); return CmpOp::Eq;
      case Tok::Ne: take(); return CmpOp::Ne;
      case Tok::Lt: take(); return CmpOp::Lt;
      case Tok::Le: take(); return CmpOp::Le;
      case Tok::Gt: take(); return CmpOp::Gt;
      case Tok::Ge: take(); return CmpOp::Ge;
      default:
        fail(cur().span, std::string("expected a comparison operator, found ") + describe(cur()));
    }
  }

  static bool column_matches(const ScalarExpr& item, const ScalarExpr& key) {
    if (!iequals(item.name, key.name)) return false;
    if (item.qualifier.empty() || key.qualifier.empty()) return true;
    return iequals(item.qualifier, key.qualifier);
  }

  void check_aggregate_rules(const Query& q, const SourceSpan& span) {
    bool any_aggregate = false;
    for (const auto& item : q.items) {
      if (item.expr.kind == ScalarExpr::Kind::Aggregate) {
        any_aggregate = true;
      } else if (item.expr.contains_aggregate()) {
        fail(item.expr.span, "SUM must be the entire select item");
      }
    }
    if (!q.group_by.empty() && !any_aggregate) {
      fail(span, "GROUP BY requires an aggregate select item");
    }
    if (!any_aggregate) return;
    for (const auto& item : q.items) {
      if (item.expr.kind == ScalarExpr::Kind::Aggregate) continue;
      if (item.expr.kind != ScalarExpr::Kind::Ident) {
        fail(item.expr.span, "non-aggregate select items must be grouping columns");
      }
      bool found = false;
      for (const auto& key : q.group_by) {
        if (column_matches(item.expr, key)) {
          found = true;
          break;
        }
      }
      if (!found) {
        fail(item.expr.span,
             "select item '" + item.expr.name + "' must appear in GROUP BY");
      }
    }
  }

  // Caller has already consumed SELECT. bulk_out non-null where BULK COLLECT
  // INTO is legal (top-level and EXECUTE statements, not definition bodies).
  Query parse_select(std::string* bulk_out) {
    Query q;
    q.span = cur().span;
    if (at(Tok::Star)) {
      Token star = take();
      SelectItem item;
      item.expr.kind = ScalarExpr::Kind::Star;
      item.expr.span = star.span;
      q.items.push_back(std::move(item));
    } else {
      for (;;) {
        q.items.push_back(parse_select_item());
        if (!accept(Tok::Comma)) break;
      }
    }
    if (at_kw("bulk")) {
      SourceSpan span = take().span;
      expect_kw("collect");
      expect_kw("into");
      std::string target = take_name("a BULK COLLECT target");
      if (!bulk_out) fail(span, "BULK COLLECT is not allowed here");
      record_arity(target, 0, span);
      *bulk_out = target;
    }
    expect_kw("from");
    bool saw_values = false;
    for (;;) {
      FromItem item = parse_from_item();
      saw_values = saw_values || item.kind == FromItem::Kind::Values;
      q.from.push_back(std::move(item));
      if (!accept(Tok::Comma)) break;
    }
    if (saw_values && q.from.size() > 1) {
      fail(q.from.front().span, "VALUES must be the only source in FROM");
    }
    if (accept_kw("where")) {
      for (;;) {
        Predicate p;
        p.span = cur().span;
        p.lhs = parse_scalar_expr();
        p.op = parse_cmp_op();
        p.rhs = parse_scalar_expr();
        q.where.push_back(std::move(p));
        if (!accept_kw("and")) break;
      }
    }
    if (accept_kw("group")) {
      expect_kw("by");
      for (;;) {
        q.group_by.push_back(parse_column_ref());
        if (!accept(Tok::Comma)) break;
      }
    }
    check_aggregate_rules(q, q.span);
    return q;
  }

  // ---- executable statements ----------------------------------------------

  InstanceRef parse_instance_ref() {
    InstanceRef ref;
    ref.span = cur().span;
    ref.name = take_name("a table name");
    while (at(Tok::LBracket)) {
      take();
      ref.indices.push_back(parse_index_expr());
      expect(Tok::RBracket, "to close a table index");
    }
    record_arity(ref.name, ref.indices.size(), ref.span);
    return ref;
  }

  PathExpr parse_path_expr() {
    PathExpr path;
    for (;;) {
      PathExpr::Part part;
      if (at(Tok::String)) {
        part.text = take().text;
      } else if (at(Tok::Number)) {
        Token tok = take();
        if (!tok.is_int) fail(tok.span, "path expressions take integer parts");
        part.expr.constant = tok.int_value;
      } else if (at(Tok::Ident) && !is_reserved(cur().text)) {
        Token tok = take();
        if (!in_scope(tok.text)) fail(tok.span, "unknown index variable '" + tok.text + "'");
        part.expr.add_term(tok.text, 1);
      } else {
        fail(cur().span, "expected a string or index variable in the path");
      }
      path.parts.push_back(std::move(part));
      if (!accept(Tok::Plus)) break;
    }
    return path;
  }

  Statement parse_materialize() {
    Statement stmt;
    stmt.kind = Statement::Kind::Materialize;
    stmt.span = cur().span;
    expect_kw("materialize");
    bool parens = accept(Tok::LParen);
    stmt.target = parse_instance_ref();
    if (parens) expect(Tok::RParen, "to close MATERIALIZE");
    expect(Tok::Semi, "to end the statement");
    return stmt;
  }

  Statement parse_export() {
    Statement stmt;
    stmt.kind = Statement::Kind::Export;
    stmt.span = cur().span;
    expect_kw("export");
    expect(Tok::LParen, "after EXPORT");
    stmt.target = parse_instance_ref();
    expect(Tok::RParen, "to close the EXPORT target");
    expect_kw("to");
    stmt.export_path = parse_path_expr();
    expect(Tok::Semi, "to end the statement");
    return stmt;
  }

  Statement parse_adhoc_query() {
    Statement stmt;
    stmt.kind = Statement::Kind::AdHocQuery;
    stmt.span = cur().span;
    expect_kw("select");
    stmt.query = std::make_shared<Query>(parse_select(&stmt.bulk_into));
    expect(Tok::Semi, "to end the statement");
    return stmt;
  }

  ExecItem parse_exec_item() {
    ExecItem item;
    if (at_kw("for")) {
      auto loop = std::make_shared<ForLoop>();
      loop->span = take().span;
      loop->var = take_name("a loop variable");
      expect_kw("in");
      loop->lower = parse_index_expr();
      expect(Tok::Ellipsis, "in the loop range");
      loop->upper = parse_index_expr();
      expect(Tok::Colon, "after the loop range");
      scope_.push_back(loop->var);
      if (accept(Tok::LParen)) {
        while (!at(Tok::RParen)) {
          loop->body.push_back(parse_exec_item());
        }
        take();  // ')'
      } else {
        loop->body.push_back(parse_exec_item());
      }
      scope_.pop_back();
      item.loop = std::move(loop);
      return item;
    }
    Statement stmt;
    if (at_kw("materialize")) {
      stmt = parse_materialize();
    } else if (at_kw("export")) {
      stmt = parse_export();
    } else if (at_kw("select")) {
      stmt = parse_adhoc_query();
    } else {
      fail(cur().span, "expected FOR, MATERIALIZE, EXPORT, or SELECT in EXECUTE block");
    }
    item.stmt = std::make_shared<Statement>(std::move(stmt));
    return item;
  }

  Statement parse_execute() {
    Statement stmt;
    stmt.kind = Statement::Kind::Execute;
    stmt.span = cur().span;
    expect_kw("execute");
    expect(Tok::LParen, "after EXECUTE");
    while (!at(Tok::RParen)) {
      stmt.exec.push_back(parse_exec_item());
    }
    take();  // ')'
    expect(Tok::Semi, "to end the statement");
    return stmt;
  }

  CellKind parse_cell_kind() {
    Token tok = expect(Tok::Ident, "as a column kind");
    std::string kind = fold(tok.text);
    auto take_dim = [&]() -> uint32_t {
      Token d = expect(Tok::Number, "as a dimension");
      if (!d.is_int || d.int_value <= 0) fail(d.span, "dimensions must be positive integers");
      return static_cast<uint32_t>(d.int_value);
    };
    if (kind == "scalar") return CellKind::scalar();
    if (kind == "vector") {
      expect(Tok::LParen, "after vector");
      uint32_t d = take_dim();
      expect(Tok::RParen, "to close vector");
      return CellKind::tensor(1, d);
    }
    if (kind == "matrix") {
      expect(Tok::LParen, "after matrix");
      uint32_t r = take_dim();
      expect(Tok::Comma, "between matrix dimensions");
      uint32_t c = take_dim();
      expect(Tok::RParen, "to close matrix");
      return CellKind::tensor(r, c);
    }
    fail(tok.span, "unknown column kind '" + tok.text + "' (expected scalar, vector, or matrix)");
  }

  Statement parse_load() {
    Statement stmt;
    stmt.kind = Statement::Kind::LoadBase;
    stmt.span = cur().span;
    expect_kw("load");
    expect_kw("table");
    stmt.base_name = take_name("a table name");
    record_arity(stmt.base_name, 0, stmt.span);
    expect(Tok::LParen, "to open the column list");
    for (;;) {
      ColumnDecl col;
      col.name = take_name("a column name");
      col.kind = parse_cell_kind();
      stmt.base_columns.push_back(std::move(col));
      if (!accept(Tok::Comma)) break;
    }
    expect(Tok::RParen, "to close the column list");
    expect_kw("from");
    stmt.base_path = expect(Tok::String, "as the source path").text;
    expect(Tok::Semi, "to end the statement");
    return stmt;
  }

  Statement parse_statement() {
    if (at_kw("create")) return parse_create_table();
    if (at_kw("load")) return parse_load();
    if (at_kw("execute")) return parse_execute();
    if (at_kw("materialize")) return parse_materialize();
    if (at_kw("export")) return parse_export();
    if (at_kw("select")) return parse_adhoc_query();
    fail(cur().span,
         "expected CREATE, LOAD, EXECUTE, MATERIALIZE, EXPORT, or SELECT, found " + describe(cur()));
  }
};

// ---- formatting ------------------------------------------------------------

std::string format_scalar_prec(const ScalarExpr& expr, int context);

std::string format_args(const std::vector<ScalarExpr>& args) {
  std::string out;
  for (size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += format_scalar_prec(args[i], 0);
  }
  return out;
}

std::string format_scalar_prec(const ScalarExpr& expr, int context) {
  switch (expr.kind) {
    case ScalarExpr::Kind::Number:
      return fmt_double(expr.number);
    case ScalarExpr::Kind::Ident:
      return expr.qualifier.empty() ? expr.name : expr.qualifier + "." + expr.name;
    case ScalarExpr::Kind::Call:
      return expr.name + "(" + format_args(expr.args) + ")";
    case ScalarExpr::Kind::Aggregate:
      return "SUM(" + format_scalar_prec(expr.args.front(), 0) + ")";
    case ScalarExpr::Kind::Star:
      return "*";
    case ScalarExpr::Kind::Binary: {
      int prec = expr.op == '*' ? 2 : 1;
      std::string text = format_scalar_prec(expr.args[0], prec) + " " + expr.op + " " +
                         format_scalar_prec(expr.args[1], prec + 1);
      if (prec < context) return "(" + text + ")";
      return text;
    }
  }
  return "?";
}

std::string format_path(const PathExpr& path) {
  std::string out;
  for (size_t i = 0; i < path.parts.size(); ++i) {
    if (i) out += " + ";
    if (path.parts[i].text) {
      out += "'" + *path.parts[i].text + "'";
    } else {
      out += path.parts[i].expr.to_string();
    }
  }
  return out;
}

std::string format_instance_ref(const InstanceRef& ref) {
  std::string out = ref.name;
  for (const auto& idx : ref.indices) {
    out += "[" + idx.to_string() + "]";
  }
  return out;
}

std::string format_cell_kind(const CellKind& kind) {
  if (kind.tag == CellKind::Tag::Scalar) return "scalar";
  if (kind.rows == 1) return "vector(" + std::to_string(kind.cols) + ")";
  return "matrix(" + std::to_string(kind.rows) + "," + std::to_string(kind.cols) + ")";
}

std::string format_from_item(const FromItem& item) {
  std::string out;
  switch (item.kind) {
    case FromItem::Kind::Base:
      out = item.table;
      break;
    case FromItem::Kind::Instance:
      out = item.table;
      for (const auto& idx : item.indices) out += "[" + idx.to_string() + "]";
      break;
    case FromItem::Kind::UnionRange:
      out = "UNION " + item.table;
      for (const auto& dim : item.dims) {
        out += "[";
        if (!dim.variable.empty()) {
          out += dim.variable + ":" + dim.lower.to_string() + "..." + dim.upper.to_string();
        } else if (dim.lower == dim.upper) {
          out += dim.lower.to_string();
        } else {
          out += dim.lower.to_string() + "..." + dim.upper.to_string();
        }
        out += "]";
      }
      break;
    case FromItem::Kind::Derived:
      out = "(" + format_query(*item.derived) + ") AS " + item.alias;
      return out;
    case FromItem::Kind::Values: {
      out = "VALUES ";
      for (size_t r = 0; r < item.values_rows.size(); ++r) {
        if (r) out += ", ";
        out += "(";
        for (size_t c = 0; c < item.values_rows[r].size(); ++c) {
          if (c) out += ", ";
          out += fmt_double(item.values_rows[r][c]);
        }
        out += ")";
      }
      return out;
    }
  }
  if (!item.alias.empty()) out += " AS " + item.alias;
  return out;
}

std::string format_query_impl(const Query& q, const std::string& bulk, const char* sep) {
  std::ostringstream out;
  out << "SELECT ";
  for (size_t i = 0; i < q.items.size(); ++i) {
    if (i) out << ", ";
    out << format_scalar_prec(q.items[i].expr, 0);
    if (!q.items[i].alias.empty()) out << " AS " << q.items[i].alias;
  }
  if (!bulk.empty()) out << sep << "BULK COLLECT INTO " << bulk;
  out << sep << "FROM ";
  for (size_t i = 0; i < q.from.size(); ++i) {
    if (i) out << ", ";
    out << format_from_item(q.from[i]);
  }
  if (!q.where.empty()) {
    out << sep << "WHERE ";
    for (size_t i = 0; i < q.where.size(); ++i) {
      if (i) out << " AND ";
      out << format_scalar_prec(q.where[i].lhs, 0) << " " << cmp_op_text(q.where[i].op) << " "
          << format_scalar_prec(q.where[i].rhs, 0);
    }
  }
  if (!q.group_by.empty()) {
    out << sep << "GROUP BY ";
    for (size_t i = 0; i < q.group_by.size(); ++i) {
      if (i) out << ", ";
      out << format_scalar_prec(q.group_by[i], 0);
    }
  }
  return out.str();
}

void format_exec_item(std::ostringstream& out, const ExecItem& item, int depth);

void format_exec_statement(std::ostringstream& out, const Statement& stmt, int depth) {
  std::string pad(static_cast<size_t>(depth) * 2, ' ');
  switch (stmt.kind) {
    case Statement::Kind::Materialize:
      out << pad << "MATERIALIZE (" << format_instance_ref(stmt.target) << ");\n";
      break;
    case Statement::Kind::Export:
      out << pad << "EXPORT (" << format_instance_ref(stmt.target) << ") TO "
          << format_path(stmt.export_path) << ";\n";
      break;
    case Statement::Kind::AdHocQuery:
      out << pad << format_query_impl(*stmt.query, stmt.bulk_into, " ") << ";\n";
      break;
    default:
      out << pad << "-- unsupported\n";
      break;
  }
}

void format_exec_item(std::ostringstream& out, const ExecItem& item, int depth) {
  std::string pad(static_cast<size_t>(depth) * 2, ' ');
  if (item.loop) {
    out << pad << "FOR " << item.loop->var << " IN " << item.loop->lower.to_string() << "..."
        << item.loop->upper.to_string() << ":";
    if (item.loop->body.size() == 1) {
      out << "\n";
      format_exec_item(out, item.loop->body.front(), depth + 1);
    } else {
      out << " (\n";
      for (const auto& child : item.loop->body) {
        format_exec_item(out, child, depth + 1);
      }
      out << pad << ")\n";
    }
    return;
  }
  format_exec_statement(out, *item.stmt, depth);
}

}  // namespace

Program parse_program(std::string_view text) { return Parser(text).parse_program(); }

Query parse_select_text(std::string_view text) { return Parser(text).parse_single_select(); }

std::string format_scalar(const ScalarExpr& expr) { return format_scalar_prec(expr, 0); }

std::string format_query(const Query& query) { return format_query_impl(query, "", " "); }

std::string format_statement(const Statement& stmt) {
  std::ostringstream out;
  switch (stmt.kind) {
    case Statement::Kind::Define: {
      out << "CREATE TABLE " << stmt.def.name;
      for (const auto& pat : stmt.def.patterns) out << pat.to_string();
      out << " (";
      for (size_t i = 0; i < stmt.def.columns.size(); ++i) {
        if (i) out << ", ";
        out << stmt.def.columns[i];
      }
      out << ") AS\n" << format_query_impl(*stmt.def.body, "", "\n") << ";";
      break;
    }
    case Statement::Kind::AdHocQuery:
      out << format_query_impl(*stmt.query, stmt.bulk_into, "\n") << ";";
      break;
    case Statement::Kind::Execute: {
      out << "EXECUTE (\n";
      for (const auto& item : stmt.exec) {
        format_exec_item(out, item, 1);
      }
      out << ");";
      break;
    }
    case Statement::Kind::Materialize:
      out << "MATERIALIZE (" << format_instance_ref(stmt.target) << ");";
      break;
    case Statement::Kind::Export:
      out << "EXPORT (" << format_instance_ref(stmt.target) << ") TO "
          << format_path(stmt.export_path) << ";";
      break;
    case Statement::Kind::LoadBase: {
      out << "LOAD TABLE " << stmt.base_name << " (";
      for (size_t i = 0; i < stmt.base_columns.size(); ++i) {
        if (i) out << ", ";
        out << stmt.base_columns[i].name << " " << format_cell_kind(stmt.base_columns[i].kind);
      }
      out << ") FROM '" << stmt.base_path << "';";
      break;
    }
  }
  return out.str();
}

std::string format_program(const Program& program) {
  std::ostringstream out;
  for (size_t i = 0; i < program.statements.size(); ++i) {
    if (i) out << "\n\n";
    out << format_statement(program.statements[i]);
  }
  out << "\n";
  return out.str();
}

}  // namespace recql
