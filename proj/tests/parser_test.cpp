#include <doctest.h>

#include <string>
#include <vector>

#include "recql/ast.hpp"
#include "recql/errors.hpp"
#include "recql/parser.hpp"

using namespace recql;

namespace {

const char* kPascal = R"(
-- Pascal's triangle: edges are 1, interior cells sum the two cells above.
CREATE TABLE pascalsTri[i:0...][0] (VAL) AS
SELECT * FROM VALUES (1);

CREATE TABLE pascalsTri[i:1...][i] (VAL) AS
SELECT * FROM pascalsTri[i-1][i-1];

CREATE TABLE pascalsTri[i:2...][j:1...i-1] (VAL) AS
SELECT a.VAL + b.VAL AS VAL
FROM pascalsTri[i-1][j-1] AS a, pascalsTri[i-1][j] AS b;
)";

const char* kFfnnSlice = R"(
CREATE TABLE WI[i:1...][j:1...3] (COL, VAL) AS
SELECT w.COL AS COL, SUM(matmul(a.ACT, w.MAT)) AS VAL
FROM A[i][j-1] AS a, W[i-1][j] AS w
WHERE w.ROW = a.COL
GROUP BY w.COL;
)";

Statement first_statement(const std::string& text) {
  Program p = parse_program(text);
  REQUIRE(!p.statements.empty());
  return p.statements.front();
}

}  // namespace

TEST_CASE("definitions parse into patterns, columns, and bodies") {
  Program p = parse_program(kPascal);
  REQUIRE(p.statements.size() == 3);

  const TableDefinition& base = p.statements[0].def;
  CHECK(base.name == "pascalsTri");
  REQUIRE(base.patterns.size() == 2);
  CHECK(base.patterns[0].is_range());
  CHECK(base.patterns[0].variable == "i");
  CHECK(base.patterns[0].lower.constant == 0);
  CHECK(!base.patterns[0].upper.has_value());
  CHECK(!base.patterns[1].is_range());
  CHECK(base.patterns[1].expr->is_constant());
  CHECK(base.patterns[1].expr->constant == 0);
  REQUIRE(base.body->from.size() == 1);
  CHECK(base.body->from[0].kind == FromItem::Kind::Values);
  CHECK(base.body->from[0].values_rows == std::vector<std::vector<double>>{{1.0}});
  REQUIRE(base.body->items.size() == 1);
  CHECK(base.body->items[0].expr.kind == ScalarExpr::Kind::Star);

  const TableDefinition& diag = p.statements[1].def;
  REQUIRE(diag.patterns.size() == 2);
  CHECK(!diag.patterns[1].is_range());
  CHECK(diag.patterns[1].expr->references("i"));

  const TableDefinition& interior = p.statements[2].def;
  REQUIRE(interior.patterns.size() == 2);
  CHECK(interior.patterns[1].is_range());
  CHECK(interior.patterns[1].upper.has_value());
  CHECK(interior.patterns[1].upper->references("i"));
  CHECK(interior.patterns[1].upper->constant == -1);
  REQUIRE(interior.body->from.size() == 2);
  CHECK(interior.body->from[0].kind == FromItem::Kind::Instance);
  CHECK(interior.body->from[0].alias == "a");
  REQUIRE(interior.body->from[0].indices.size() == 2);
  CHECK(interior.body->items[0].expr.kind == ScalarExpr::Kind::Binary);
  CHECK(interior.body->items[0].expr.op == '+');
}

TEST_CASE("join query with aggregate and grouping parses") {
  Statement stmt = first_statement(kFfnnSlice);
  const Query& q = *stmt.def.body;
  REQUIRE(q.items.size() == 2);
  CHECK(q.items[0].expr.kind == ScalarExpr::Kind::Ident);
  CHECK(q.items[0].expr.qualifier == "w");
  CHECK(q.items[1].expr.kind == ScalarExpr::Kind::Aggregate);
  REQUIRE(q.items[1].expr.args.size() == 1);
  CHECK(q.items[1].expr.args[0].kind == ScalarExpr::Kind::Call);
  CHECK(q.items[1].expr.args[0].name == "matmul");
  REQUIRE(q.where.size() == 1);
  CHECK(q.where[0].op == CmpOp::Eq);
  REQUIRE(q.group_by.size() == 1);
  CHECK(q.group_by[0].qualifier == "w");
  CHECK(q.group_by[0].name == "COL");
}

TEST_CASE("keywords and identifiers match case-insensitively") {
  Program a = parse_program(
      "create table T[i:0...4] (X) as select * from Values (1);");
  Program b = parse_program(
      "CREATE TABLE t[I:0...4] (x) AS SELECT * FROM VALUES (1);");
  CHECK(a == b);
}

TEST_CASE("execute blocks parse loops, exports, and materialize") {
  Program p = parse_program(R"(
EXECUTE (
  FOR i IN 0...30:
    EXPORT (LOSS[i]) TO 'loss_' + i + '.csv';
  FOR i IN 0...50: (
    FOR j IN 0...i:
      MATERIALIZE (pascalsTri[i][j]);
    MATERIALIZE pascalsTri[i][0];
  )
);
)");
  REQUIRE(p.statements.size() == 1);
  const Statement& stmt = p.statements[0];
  CHECK(stmt.kind == Statement::Kind::Execute);
  REQUIRE(stmt.exec.size() == 2);

  REQUIRE(stmt.exec[0].loop != nullptr);
  const ForLoop& exp_loop = *stmt.exec[0].loop;
  CHECK(exp_loop.var == "i");
  CHECK(exp_loop.lower.constant == 0);
  CHECK(exp_loop.upper.constant == 30);
  REQUIRE(exp_loop.body.size() == 1);
  const Statement& exp = *exp_loop.body[0].stmt;
  CHECK(exp.kind == Statement::Kind::Export);
  CHECK(exp.target.name == "LOSS");
  REQUIRE(exp.export_path.parts.size() == 3);
  CHECK(*exp.export_path.parts[0].text == "loss_");
  CHECK(exp.export_path.parts[1].expr.references("i"));
  CHECK(*exp.export_path.parts[2].text == ".csv");
  Binding b;
  b.bind("i", 7);
  CHECK(exp.export_path.eval(b) == "loss_7.csv");

  const ForLoop& outer = *stmt.exec[1].loop;
  REQUIRE(outer.body.size() == 2);
  REQUIRE(outer.body[0].loop != nullptr);
  const ForLoop& inner = *outer.body[0].loop;
  CHECK(inner.upper.references("i"));
  CHECK(outer.body[1].stmt->kind == Statement::Kind::Materialize);
}

TEST_CASE("load table records column kinds") {
  Statement stmt = first_statement(
      "LOAD TABLE DATA_INPUT (BATCH scalar, COL scalar, ACT matrix(64,16), V vector(4)) "
      "FROM 'data/input.csv';");
  CHECK(stmt.kind == Statement::Kind::LoadBase);
  CHECK(stmt.base_name == "DATA_INPUT");
  CHECK(stmt.base_path == "data/input.csv");
  REQUIRE(stmt.base_columns.size() == 4);
  CHECK(stmt.base_columns[0].kind == CellKind::scalar());
  CHECK(stmt.base_columns[2].kind == CellKind::tensor(64, 16));
  CHECK(stmt.base_columns[3].kind == CellKind::tensor(1, 4));
}

TEST_CASE("union ranges bind earlier dimensions for later bounds") {
  Statement stmt = first_statement(
      "SELECT * FROM UNION pascalsTri[i:0...50][0...i];");
  const Query& q = *stmt.query;
  REQUIRE(q.from.size() == 1);
  const FromItem& item = q.from[0];
  CHECK(item.kind == FromItem::Kind::UnionRange);
  REQUIRE(item.dims.size() == 2);
  CHECK(item.dims[0].variable == "i");
  CHECK(item.dims[0].lower.constant == 0);
  CHECK(item.dims[0].upper.constant == 50);
  CHECK(item.dims[1].variable.empty());
  CHECK(item.dims[1].upper.references("i"));

  CHECK_THROWS_WITH_AS(parse_program("SELECT * FROM UNION t[i:0...];"),
                       doctest::Contains("upper bound"), Error);
}

TEST_CASE("values sources take several tuples but stay the sole from item") {
  Statement stmt = first_statement("SELECT * FROM VALUES (1, 2), (3, 4);");
  REQUIRE(stmt.query->from.size() == 1);
  CHECK(stmt.query->from[0].values_rows ==
        std::vector<std::vector<double>>{{1.0, 2.0}, {3.0, 4.0}});

  CHECK_THROWS_WITH_AS(first_statement("SELECT * FROM VALUES (1), t;"),
                       doctest::Contains("only source"), Error);
  CHECK_THROWS_WITH_AS(first_statement("SELECT * FROM VALUES (1, 2), (3);"),
                       doctest::Contains("same width"), Error);
}

TEST_CASE("bulk collect sits between the select list and FROM") {
  Statement stmt = first_statement(
      "SELECT e.A, e.B BULK COLLECT INTO AEW FROM (SELECT * FROM t) AS e;");
  CHECK(stmt.kind == Statement::Kind::AdHocQuery);
  CHECK(stmt.bulk_into == "AEW");
  REQUIRE(stmt.query->from.size() == 1);
  CHECK(stmt.query->from[0].kind == FromItem::Kind::Derived);
  CHECK(stmt.query->from[0].alias == "e");

  CHECK_THROWS_WITH_AS(
      parse_program("CREATE TABLE x[0] (A) AS SELECT v0 BULK COLLECT INTO t FROM VALUES (1);"),
      doctest::Contains("not allowed here"), Error);
}

TEST_CASE("aggregate placement rules") {
  CHECK_THROWS_WITH_AS(first_statement("SELECT SUM(x) + 1 FROM t;"),
                       doctest::Contains("entire select item"), Error);
  CHECK_THROWS_WITH_AS(first_statement("SELECT f(SUM(x)) FROM t;"),
                       doctest::Contains("entire select item"), Error);
  CHECK_THROWS_WITH_AS(first_statement("SELECT SUM(SUM(x)) FROM t;"),
                       doctest::Contains("entire select item"), Error);
  CHECK_THROWS_WITH_AS(first_statement("SELECT a, SUM(b) FROM t GROUP BY c;"),
                       doctest::Contains("must appear in GROUP BY"), Error);
  CHECK_THROWS_WITH_AS(first_statement("SELECT a + 1, SUM(b) FROM t GROUP BY a;"),
                       doctest::Contains("grouping columns"), Error);
  CHECK_THROWS_WITH_AS(first_statement("SELECT a FROM t GROUP BY a;"),
                       doctest::Contains("requires an aggregate"), Error);
  CHECK_NOTHROW(first_statement("SELECT a, SUM(b) AS s FROM t GROUP BY a;"));
  CHECK_NOTHROW(first_statement("SELECT t.a, SUM(b) AS s FROM t GROUP BY a;"));
}

TEST_CASE("index arity is enforced across the whole program") {
  CHECK_THROWS_AS(parse_program(R"(
CREATE TABLE f[i:0...] (V) AS SELECT * FROM VALUES (1);
SELECT * FROM f[1][2];
)"),
                  Error);
  try {
    parse_program("SELECT * FROM t[1]; SELECT * FROM t[1][2];");
    FAIL("expected ArityError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Arity);
    CHECK(std::string(e.what()).find("'t'") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_program("LOAD TABLE t (A scalar) FROM 'x.csv'; SELECT * FROM t[1];"),
                  Error);
  CHECK_THROWS_AS(parse_program(R"(
CREATE TABLE f[i:0...] (V) AS SELECT * FROM VALUES (1);
EXECUTE ( MATERIALIZE (f[0][0]); );
)"),
                  Error);
}

TEST_CASE("scope rules for index variables") {
  CHECK_THROWS_WITH_AS(parse_program("SELECT * FROM t[k];"),
                       doctest::Contains("unknown index variable"), Error);
  CHECK_THROWS_WITH_AS(
      parse_program("CREATE TABLE x[i:0...j] (A) AS SELECT * FROM VALUES (1);"),
      doctest::Contains("unknown index variable"), Error);
  CHECK_THROWS_WITH_AS(
      parse_program("EXECUTE ( FOR i IN 0...3: MATERIALIZE (t[j]); );"),
      doctest::Contains("unknown index variable"), Error);
  // A pattern variable is not visible inside its own bounds.
  CHECK_THROWS_WITH_AS(
      parse_program("CREATE TABLE x[i:i...3] (A) AS SELECT * FROM VALUES (1);"),
      doctest::Contains("unknown index variable"), Error);
  // Earlier patterns are visible to later ones and to the body.
  CHECK_NOTHROW(parse_program(
      "CREATE TABLE x[i:2...][j:1...i-1] (A) AS SELECT * FROM x[i-1][j] AS p;"));
}

TEST_CASE("negative and fractional indices are rejected") {
  CHECK_THROWS_WITH_AS(parse_program("SELECT * FROM t[0-1+0];"), doctest::Contains("negative"),
                       Error);
  CHECK_THROWS_WITH_AS(parse_program("SELECT * FROM t[1.5];"), doctest::Contains("integers"),
                       Error);
}

TEST_CASE("malformed inputs raise syntax errors with positions") {
  const char* bad[] = {
      "CREATE TABLE (A) AS SELECT * FROM t;",
      "CREATE TABLE x[0] A) AS SELECT * FROM t;",
      "SELECT FROM t;",
      "SELECT a FROM;",
      "SELECT a FROM t WHERE;",
      "SELECT a FROM t GROUP a;",
      "EXECUTE ( MATERIALIZE t[0] )",
      "EXPORT LOSS[0] TO 'x.csv';",
      "LOAD TABLE t (A tensor) FROM 'x.csv';",
      "SELECT a FROM t WHERE a == b;",
      "SELECT 'text' FROM t;",
      "CREATE TABLE x[i:0..3] (A) AS SELECT * FROM t;",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    try {
      parse_program(text);
      FAIL_CHECK("expected SyntaxError for: ", text);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Syntax);
      CHECK(e.span().line >= 1);
      CHECK(e.span().column >= 1);
      CHECK(e.diagnostic().find("SyntaxError") == 0);
    }
  }
}

TEST_CASE("comments and ellipsis interact with number lexing") {
  Program p = parse_program(R"(
-- leading comment with -- dashes and 1.5 numbers
SELECT a -- trailing comment
FROM t; -- done
)");
  REQUIRE(p.statements.size() == 1);

  Statement stmt = first_statement("SELECT 1.5, 2e3, a FROM UNION t[0...50];");
  CHECK(stmt.query->items[0].expr.number == 1.5);
  CHECK(stmt.query->items[1].expr.number == 2000.0);
  CHECK(stmt.query->from[0].dims[0].upper.constant == 50);
}

TEST_CASE("reserved words cannot name tables or columns") {
  CHECK_THROWS_WITH_AS(parse_program("CREATE TABLE select[0] (A) AS SELECT * FROM t;"),
                       doctest::Contains("reserved word"), Error);
  CHECK_THROWS_WITH_AS(parse_program("SELECT a AS from FROM t;"),
                       doctest::Contains("reserved word"), Error);
}

TEST_CASE("formatting round-trips structurally") {
  const char* programs[] = {
      kPascal,
      kFfnnSlice,
      "SELECT * FROM VALUES (1, 2.5), (3, 4);",
      "SELECT a.X + b.Y * 2 AS Z, q FROM t[0][1] AS a, u AS b WHERE a.X <= b.Y AND q <> 3;",
      "SELECT q, SUM(a.X) AS S FROM t[0][1] AS a WHERE a.X <= 4 GROUP BY q;",
      "SELECT (a.X + b.Y) * (c - 1) AS Z FROM t AS a, u AS b, v AS c;",
      "SELECT w.COL, SUM(matmul(t(a.ACT), e.ERR)) AS G FROM a, e AS e WHERE a.COL = e.COL "
      "GROUP BY w.COL;",
      "LOAD TABLE W_INIT_1 (ROW scalar, COL scalar, MAT matrix(16,16)) FROM 'w1.csv';",
      "EXECUTE ( FOR i IN 0...30: ( EXPORT (LOSS[i]) TO 'loss_' + i + '.csv'; "
      "MATERIALIZE (W[i][1]); ) );",
      "SELECT * FROM UNION p[i:0...50][0...i];",
      "SELECT e.A BULK COLLECT INTO AEW FROM (SELECT x AS A FROM t WHERE x < 9) AS e;",
      "MATERIALIZE (pascalsTri[3][2]);",
      "EXPORT (f[10]) TO 'fib.csv';",
  };
  for (const char* text : programs) {
    CAPTURE(text);
    Program once = parse_program(text);
    std::string formatted = format_program(once);
    CAPTURE(formatted);
    Program twice = parse_program(formatted);
    CHECK(once == twice);
    CHECK(format_program(twice) == formatted);
  }
}

TEST_CASE("index expression text stays inside the grammar") {
  Program p = parse_program(
      "CREATE TABLE x[i:0...][j:0...] (A) AS SELECT * FROM x[i+i-3][0-j] AS p;");
  const FromItem& item = p.statements[0].def.body->from[0];
  CHECK(item.indices[0].to_string() == "i+i-3");
  CHECK(item.indices[1].to_string() == "0-j");
  // Reparse of the canonical spelling produces the same expression.
  Program again = parse_program(format_program(p));
  CHECK(p == again);
}
