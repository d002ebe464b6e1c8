#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "recql/catalog.hpp"
#include "recql/errors.hpp"
#include "recql/parser.hpp"
#include "recql/plan.hpp"
#include "recql/unroll.hpp"
#include "oracles.hpp"

using namespace recql;

namespace {

Catalog build_catalog(const std::string& text) {
  Catalog cat;
  Program p = parse_program(text);
  for (const auto& stmt : p.statements) {
    if (stmt.kind == Statement::Kind::Define) {
      cat.register_definition(stmt.def);
    }
  }
  return cat;
}

const char* kPascal = R"(
CREATE TABLE pascalsTri[i:0...][0] (VAL) AS
SELECT * FROM VALUES (1);

CREATE TABLE pascalsTri[i:1...][i] (VAL) AS
SELECT * FROM pascalsTri[i-1][i-1];

CREATE TABLE pascalsTri[i:2...][j:1...i-1] (VAL) AS
SELECT a.VAL + b.VAL AS VAL
FROM pascalsTri[i-1][j-1] AS a, pascalsTri[i-1][j] AS b;
)";

const char* kFibonacci = R"(
CREATE TABLE fib[0] (VAL) AS SELECT * FROM VALUES (1);
CREATE TABLE fib[1] (VAL) AS SELECT * FROM VALUES (1);
CREATE TABLE fib[i:2...] (VAL) AS
SELECT SUM(f.VAL) AS VAL FROM UNION fib[i-2...i-1] AS f;
)";

size_t distinct_provenance(const PlanDag& dag) {
  std::set<InstanceKey> keys;
  for (const auto& [id, key] : dag.provenance_key) {
    (void)id;
    keys.insert(key);
  }
  return keys.size();
}

}  // namespace

TEST_CASE("instance resolution dispatches on index patterns") {
  Catalog cat = build_catalog(kPascal);

  ResolvedInstance base = cat.resolve_instance({"pascalsTri", {4, 0}});
  CHECK(base.def->body->from[0].kind == FromItem::Kind::Values);
  CHECK(base.binding.lookup("i") == 4);

  ResolvedInstance diag = cat.resolve_instance({"pascalstri", {3, 3}});
  CHECK(diag.def->patterns[1].expr.has_value());
  CHECK(diag.binding.lookup("I") == 3);

  ResolvedInstance interior = cat.resolve_instance({"pascalsTri", {4, 2}});
  CHECK(interior.binding.lookup("i") == 4);
  CHECK(interior.binding.lookup("j") == 2);

  CHECK_THROWS_AS(cat.resolve_instance({"pascalsTri", {2, 5}}), Error);
  try {
    cat.resolve_instance({"pascalsTri", {-1, 0}});
    FAIL("expected NoMatchError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoMatch);
  }
  CHECK_THROWS_AS(cat.resolve_instance({"unknownTable", {0}}), Error);
}

TEST_CASE("ambiguous instance matches are reported") {
  Catalog cat = build_catalog(R"(
CREATE TABLE o[i:0...][0] (V) AS SELECT * FROM VALUES (1);
CREATE TABLE o[0][j:0...] (V) AS SELECT * FROM VALUES (2);
)");
  CHECK_NOTHROW(cat.resolve_instance({"o", {3, 0}}));
  CHECK_NOTHROW(cat.resolve_instance({"o", {0, 3}}));
  try {
    cat.resolve_instance({"o", {0, 0}});
    FAIL("expected AmbiguousMatchError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::AmbiguousMatch);
  }
}

TEST_CASE("identical redefinition is idempotent; conflicts with bases fail") {
  Catalog cat = build_catalog(kPascal);
  size_t n = cat.definitions().size();
  Program p = parse_program(kPascal);
  for (const auto& stmt : p.statements) {
    cat.register_definition(stmt.def);
  }
  CHECK(cat.definitions().size() == n);

  Relation rel = make_relation({"X"}, {CellKind::scalar()});
  cat.register_base_table("inputs", rel);
  CHECK_THROWS_AS(cat.register_base_table("INPUTS", rel), Error);
  CHECK_THROWS_AS(cat.register_base_table("PASCALSTRI", rel), Error);
  Program q = parse_program("CREATE TABLE Inputs[0] (Y) AS SELECT * FROM VALUES (1);");
  CHECK_THROWS_AS(cat.register_definition(q.statements[0].def), Error);
}

TEST_CASE("union expansion is lexicographic and rejects empty ranges") {
  Catalog cat = build_catalog(kPascal);
  Program p = parse_program("SELECT * FROM UNION pascalsTri[i:0...3][0...i];");
  const FromItem& item = p.statements[0].query->from[0];
  Binding none;
  auto keys = cat.expand_union(item, none);
  REQUIRE(keys.size() == 10);
  CHECK(keys.front().to_string() == "pascalsTri[0][0]");
  CHECK(keys[1].to_string() == "pascalsTri[1][0]");
  CHECK(keys[2].to_string() == "pascalsTri[1][1]");
  CHECK(keys.back().to_string() == "pascalsTri[3][3]");

  Program bad = parse_program("SELECT * FROM UNION pascalsTri[i:3...1][0...i];");
  try {
    cat.expand_union(bad.statements[0].query->from[0], none);
    FAIL("expected EmptyRangeError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyRange);
  }
}

TEST_CASE("pascal 3 2 compiles to the expected shared dag") {
  Catalog cat = build_catalog(kPascal);
  Unroller u(cat);
  u.add_materialize({"pascalsTri", {3, 2}});
  CHECK(u.instances_compiled() == 6);
  CHECK(u.memo().size() == 6);
  PlanDag dag = u.finish();

  CHECK(dag.nodes.size() == 9);
  CHECK(count_operators(dag, OpKind::Values) == 2);
  CHECK(count_operators(dag, OpKind::Join) == 2);
  CHECK(count_operators(dag, OpKind::Map) == 2);
  CHECK(count_operators(dag, OpKind::Project) == 2);  // pass-through wrappers
  CHECK(count_operators(dag, OpKind::Sink) == 1);
  CHECK(distinct_provenance(dag) == 6);
  dag.validate();

  // Edges all point forward; ascending ids are executable order.
  for (const auto& [from, to] : dag.edges()) {
    CHECK(from < to);
  }
}

TEST_CASE("trivial instance compiles to values plus sink") {
  Catalog cat = build_catalog(kPascal);
  PlanDag dag = unroll({{"pascalsTri", {0, 0}}}, cat);
  CHECK(dag.nodes.size() == 2);
  CHECK(dag.nodes[0].kind == OpKind::Values);
  CHECK(dag.nodes[0].columns == std::vector<std::string>{"VAL"});
  CHECK(dag.nodes[1].kind == OpKind::Sink);
}

TEST_CASE("memoization shares subplans across targets and repeat calls") {
  Catalog cat = build_catalog(kPascal);
  Unroller u(cat);
  u.add_materialize({"pascalsTri", {3, 2}});
  int after_first = u.instances_compiled();
  int root_a = u.compile_instance({"pascalsTri", {3, 2}});
  int root_b = u.compile_instance({"PASCALSTRI", {3, 2}});
  CHECK(root_a == root_b);
  CHECK(u.instances_compiled() == after_first);
  u.add_materialize({"pascalsTri", {2, 2}});  // already in the memo
  CHECK(u.instances_compiled() == after_first);
  PlanDag dag = u.finish();
  CHECK(count_operators(dag, OpKind::Sink) == 2);
}

TEST_CASE("full depth 50 closure compiles every cell once") {
  Catalog cat = build_catalog(kPascal);
  Unroller u(cat);
  for (long long i = 0; i <= 50; ++i) {
    for (long long j = 0; j <= i; ++j) {
      u.add_materialize({"pascalsTri", {i, j}});
    }
  }
  CHECK(u.instances_compiled() == 51 * 52 / 2);
  PlanDag dag = u.finish();
  CHECK(distinct_provenance(dag) == 51 * 52 / 2);
  CHECK(count_operators(dag, OpKind::Sink) == 51 * 52 / 2);
  dag.validate();
}

TEST_CASE("fibonacci unions two predecessor versions") {
  Catalog cat = build_catalog(kFibonacci);
  Unroller u(cat);
  u.add_materialize({"fib", {10}});
  CHECK(u.instances_compiled() == 11);
  PlanDag dag = u.finish();
  CHECK(count_operators(dag, OpKind::Union) == 9);
  for (const RaNode& n : dag.nodes) {
    if (n.kind == OpKind::Union) CHECK(n.inputs.size() == 2);
    if (n.kind == OpKind::Aggregate) {
      CHECK(n.group_keys.empty());
      CHECK(n.agg_args.size() == 1);
    }
  }
}

TEST_CASE("union over a single version collapses") {
  Catalog cat = build_catalog(R"(
CREATE TABLE t[0] (V) AS SELECT * FROM VALUES (5);
CREATE TABLE s[0] (V) AS SELECT * FROM UNION t[0...0];
)");
  PlanDag dag = unroll({{"s", {0}}}, cat);
  CHECK(count_operators(dag, OpKind::Union) == 0);
}

TEST_CASE("join queries compile to join, map, aggregate, project") {
  Catalog cat = build_catalog(R"(
CREATE TABLE A[0][0] (COL, ACT) AS SELECT * FROM VALUES (0, 1), (1, 2);
CREATE TABLE W[0][1] (ROW, COL, MAT) AS SELECT * FROM VALUES (0, 0, 3), (1, 0, 4);
CREATE TABLE WI[i:1...][j:1...1] (COL, VAL) AS
SELECT w.COL AS COL, SUM(w.MAT * a.ACT) AS VAL
FROM A[i-1][j-1] AS a, W[i-1][j] AS w
WHERE w.ROW = a.COL
GROUP BY w.COL;
)");
  Unroller u(cat);
  int root = u.compile_instance({"WI", {1, 1}});
  PlanDag dag = u.finish();

  const RaNode& proj = dag.node(root);
  REQUIRE(proj.kind == OpKind::Project);
  CHECK(proj.columns == std::vector<std::string>{"COL", "VAL"});
  const RaNode& agg = dag.node(proj.inputs[0]);
  REQUIRE(agg.kind == OpKind::Aggregate);
  CHECK(agg.group_keys == std::vector<int>{0});
  CHECK(agg.agg_args == std::vector<int>{1});
  const RaNode& map = dag.node(agg.inputs[0]);
  REQUIRE(map.kind == OpKind::Map);
  REQUIRE(map.maps.size() == 2);
  CHECK(map.maps[0].kind == CellExpr::Kind::Column);
  CHECK(map.maps[0].column == 3);  // w.COL within [COL, ACT, ROW, COL, MAT]
  CHECK(map.maps[1].kind == CellExpr::Kind::Binary);
  const RaNode& join = dag.node(map.inputs[0]);
  REQUIRE(join.kind == OpKind::Join);
  CHECK(join.join_keys == std::vector<std::pair<int, int>>{{0, 0}});
}

TEST_CASE("where predicates on variables fold to constants") {
  Catalog cat = build_catalog(R"(
CREATE TABLE src[0] (BATCH, V) AS SELECT * FROM VALUES (0, 10), (1, 20);
CREATE TABLE pick[i:0...] (V) AS
SELECT s.V AS V FROM src[0] AS s WHERE s.BATCH = i AND i >= 0;
)");
  Unroller u(cat);
  int root = u.compile_instance({"pick", {1}});
  PlanDag dag = u.finish();
  const RaNode& proj = dag.node(root);
  const RaNode& sel = dag.node(proj.inputs[0]);
  REQUIRE(sel.kind == OpKind::Select);
  // i >= 0 folded away; s.BATCH = i remains with i folded to 1.
  REQUIRE(sel.filters.size() == 1);
  CHECK(sel.filters[0].rhs.kind == CellExpr::Kind::Const);
  CHECK(sel.filters[0].rhs.value == 1.0);
}

TEST_CASE("cycles and runaway recursion are reported") {
  Catalog cycle = build_catalog(R"(
CREATE TABLE a[i:0...] (V) AS SELECT * FROM b[i];
CREATE TABLE b[i:0...] (V) AS SELECT * FROM a[i];
)");
  Unroller u(cycle);
  try {
    u.compile_instance({"a", {3}});
    FAIL("expected CycleError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Cycle);
    CHECK(std::string(e.what()).find("a[3] -> b[3] -> a[3]") != std::string::npos);
  }

  Catalog runaway = build_catalog(
      "CREATE TABLE up[i:0...] (V) AS SELECT * FROM up[i+1];");
  Unroller v(runaway);
  v.set_max_depth(64);
  try {
    v.compile_instance({"up", {0}});
    FAIL("expected DepthLimitError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DepthLimit);
  }
}

TEST_CASE("compile-time column and function diagnostics") {
  Catalog cat = build_catalog(R"(
CREATE TABLE t[0] (A, B) AS SELECT * FROM VALUES (1, 2);
CREATE TABLE w[0] (A, C) AS SELECT * FROM VALUES (3, 4);
)");
  auto compile_one = [&](const std::string& text) {
    Catalog local = build_catalog(
        "CREATE TABLE t[0] (A, B) AS SELECT * FROM VALUES (1, 2);\n"
        "CREATE TABLE w[0] (A, C) AS SELECT * FROM VALUES (3, 4);\n" + text);
    Unroller u(local);
    u.compile_instance({"q", {0}});
  };
  try {
    compile_one("CREATE TABLE q[0] (X) AS SELECT nope AS X FROM t[0] AS a;");
    FAIL("expected UnknownColumnError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownColumn);
  }
  try {
    compile_one("CREATE TABLE q[0] (X) AS SELECT A AS X FROM t[0] AS a, w[0] AS b;");
    FAIL("expected ambiguity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownColumn);
    CHECK(std::string(e.what()).find("ambiguous") != std::string::npos);
  }
  try {
    compile_one("CREATE TABLE q[0] (X) AS SELECT frobnicate(a.A) AS X FROM t[0] AS a;");
    FAIL("expected UnknownUdfError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownUdf);
  }
  try {
    compile_one("CREATE TABLE q[0] (X) AS SELECT matmul(a.A) AS X FROM t[0] AS a;");
    FAIL("expected arity TypeError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Type);
  }
  try {
    compile_one("CREATE TABLE q[0] (X) AS SELECT a.A AS X, a.B AS Y FROM t[0] AS a;");
    FAIL("expected column count TypeError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Type);
    CHECK(std::string(e.what()).find("declares 1 columns") != std::string::npos);
  }
}

TEST_CASE("values columns default to positional names") {
  Catalog cat = build_catalog(
      "CREATE TABLE q[0] (B, A) AS SELECT v1 AS B, v0 AS A FROM VALUES (1, 2);");
  Unroller u(cat);
  int root = u.compile_instance({"q", {0}});
  PlanDag dag = u.finish();
  const RaNode& proj = dag.node(root);
  REQUIRE(proj.kind == OpKind::Project);
  CHECK(proj.project == std::vector<int>{1, 0});
  CHECK(proj.columns == std::vector<std::string>{"B", "A"});
}

TEST_CASE("plan json and dot round-trip the dag") {
  Catalog cat = build_catalog(kPascal);
  PlanDag dag = unroll({{"pascalsTri", {3, 2}}}, cat);
  std::string text = plan_to_json(dag);
  PlanDag back = plan_from_json(text);
  REQUIRE(back.nodes.size() == dag.nodes.size());
  for (size_t i = 0; i < dag.nodes.size(); ++i) {
    CHECK(back.nodes[i].kind == dag.nodes[i].kind);
    CHECK(back.nodes[i].inputs == dag.nodes[i].inputs);
    CHECK(back.nodes[i].columns == dag.nodes[i].columns);
    CHECK(back.nodes[i].project == dag.nodes[i].project);
    CHECK(back.nodes[i].join_keys == dag.nodes[i].join_keys);
    CHECK(back.nodes[i].group_keys == dag.nodes[i].group_keys);
    CHECK(back.nodes[i].maps == dag.nodes[i].maps);
  }
  CHECK(back.sinks == dag.sinks);
  CHECK(back.provenance_key.size() == dag.provenance_key.size());

  std::string dot = plan_to_dot(dag);
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find("\xe2\x8b\x88") != std::string::npos);  // join glyph
  CHECK(dot.find("Sink pascalsTri[3][2]") != std::string::npos);
}
