#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recql/ast.hpp"
#include "recql/relation.hpp"

namespace recql {

// A concrete table version: name plus fully evaluated indices. Base tables
// use an empty index list. Name comparison is case-insensitive; the first
// spelling seen is kept for display.
struct InstanceKey {
  std::string name;
  std::vector<long long> indices;

  std::string to_string() const;
  bool operator==(const InstanceKey& o) const;
  bool operator!=(const InstanceKey& o) const { return !(*this == o); }
  bool operator<(const InstanceKey& o) const;
};

struct InstanceKeyHash {
  size_t operator()(const InstanceKey& key) const;
};

struct ResolvedInstance {
  const TableDefinition* def = nullptr;
  Binding binding;
};

// Name registry for table definitions and loaded base tables. Definitions
// with one name may coexist when their index patterns dispatch to different
// versions; overlap is only detected when a key resolves ambiguously.
class Catalog {
public:
  // Identical re-registration is a no-op. A name collision with a base
  // table is a ConfigError.
  void register_definition(const TableDefinition& def);

  // The relation carries the schema. Re-registering a base name or shadowing
  // a definition is a ConfigError.
  void register_base_table(const std::string& name, Relation data);

  bool has_base(std::string_view name) const;
  bool has_definition(std::string_view name) const;
  const Relation* base_table(std::string_view name) const;
  Relation* mutable_base_table(std::string_view name);

  // Pattern match over all definitions of the key's name, binding pattern
  // variables left to right. Exactly one definition must match; zero is a
  // NoMatchError, several an AmbiguousMatchError.
  ResolvedInstance resolve_instance(const InstanceKey& key) const;

  // Expands a UNION from-item into concrete keys, leftmost dimension
  // outermost. A dimension may bind a variable for the bounds of later
  // dimensions. An empty range is an EmptyRangeError.
  std::vector<InstanceKey> expand_union(const FromItem& item, const Binding& outer) const;

  const std::vector<TableDefinition>& definitions() const { return defs_; }

private:
  std::vector<TableDefinition> defs_;
  std::map<std::string, Relation> bases_;          // folded name
  std::map<std::string, std::string> base_names_;  // folded name -> display
};

}  // namespace recql
