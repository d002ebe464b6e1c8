#include "recql/catalog.hpp"

#include <functional>
#include <sstream>

#include "recql/errors.hpp"
#include "recql/util.hpp"

namespace recql {

std::string InstanceKey::to_string() const {
  std::string out = name;
  for (long long v : indices) {
    out += "[" + std::to_string(v) + "]";
  }
  return out;
}

bool InstanceKey::operator==(const InstanceKey& o) const {
  return indices == o.indices && iequals(name, o.name);
}

bool InstanceKey::operator<(const InstanceKey& o) const {
  std::string a = fold(name), b = fold(o.name);
  if (a != b) return a < b;
  return indices < o.indices;
}

size_t InstanceKeyHash::operator()(const InstanceKey& key) const {
  size_t h = std::hash<std::string>()(fold(key.name));
  for (long long v : key.indices) {
    h ^= std::hash<long long>()(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

void Catalog::register_definition(const TableDefinition& def) {
  if (has_base(def.name)) {
    throw Error(ErrorKind::Config,
                "'" + def.name + "' is already a loaded base table", def.span);
  }
  for (const auto& existing : defs_) {
    if (existing == def) return;
  }
  defs_.push_back(def);
}

void Catalog::register_base_table(const std::string& name, Relation data) {
  std::string key = fold(name);
  if (bases_.count(key)) {
    throw Error(ErrorKind::Config, "base table '" + name + "' is already loaded");
  }
  if (has_definition(name)) {
    throw Error(ErrorKind::Config, "'" + name + "' is already a defined table");
  }
  bases_.emplace(key, std::move(data));
  base_names_.emplace(key, name);
}

bool Catalog::has_base(std::string_view name) const {
  return bases_.count(fold(name)) != 0;
}

bool Catalog::has_definition(std::string_view name) const {
  for (const auto& def : defs_) {
    if (iequals(def.name, name)) return true;
  }
  return false;
}

const Relation* Catalog::base_table(std::string_view name) const {
  auto it = bases_.find(fold(name));
  return it == bases_.end() ? nullptr : &it->second;
}

Relation* Catalog::mutable_base_table(std::string_view name) {
  auto it = bases_.find(fold(name));
  return it == bases_.end() ? nullptr : &it->second;
}

namespace {

// Left-to-right pattern match; every bound is evaluated under the bindings
// accumulated so far, so later patterns may depend on earlier variables.
std::optional<Binding> match_patterns(const TableDefinition& def,
                                      const std::vector<long long>& indices) {
  if (def.patterns.size() != indices.size()) return std::nullopt;
  Binding binding;
  for (size_t i = 0; i < def.patterns.size(); ++i) {
    const IndexPattern& pat = def.patterns[i];
    long long v = indices[i];
    if (!pat.is_range()) {
      if (pat.expr->eval(binding) != v) return std::nullopt;
      continue;
    }
    if (v < pat.lower.eval(binding)) return std::nullopt;
    if (pat.upper && v > pat.upper->eval(binding)) return std::nullopt;
    binding.bind(pat.variable, v);
  }
  return binding;
}

}  // namespace

ResolvedInstance Catalog::resolve_instance(const InstanceKey& key) const {
  const TableDefinition* found = nullptr;
  Binding binding;
  std::vector<int> match_lines;
  for (const auto& def : defs_) {
    if (!iequals(def.name, key.name)) continue;
    auto m = match_patterns(def, key.indices);
    if (!m) continue;
    match_lines.push_back(def.span.line);
    if (!found) {
      found = &def;
      binding = std::move(*m);
    }
  }
  if (!found) {
    throw Error(ErrorKind::NoMatch, "no definition of '" + key.name + "' matches " +
                                        key.to_string());
  }
  if (match_lines.size() > 1) {
    std::ostringstream msg;
    msg << key.to_string() << " matches " << match_lines.size() << " definitions (lines";
    for (int line : match_lines) msg << " " << line;
    msg << ")";
    throw Error(ErrorKind::AmbiguousMatch, msg.str());
  }
  return ResolvedInstance{found, std::move(binding)};
}

std::vector<InstanceKey> Catalog::expand_union(const FromItem& item,
                                               const Binding& outer) const {
  std::vector<InstanceKey> out;
  std::vector<long long> current;
  Binding binding = outer;
  std::function<void(size_t)> walk = [&](size_t d) {
    if (d == item.dims.size()) {
      out.push_back(InstanceKey{item.table, current});
      return;
    }
    const UnionDim& dim = item.dims[d];
    long long lo = dim.lower.eval(binding);
    long long hi = dim.upper.eval(binding);
    if (lo > hi) {
      throw Error(ErrorKind::EmptyRange,
                  "dimension " + std::to_string(d + 1) + " of UNION " + item.table +
                      " is empty (" + std::to_string(lo) + "..." + std::to_string(hi) + ")",
                  item.span);
    }
    for (long long v = lo; v <= hi; ++v) {
      current.push_back(v);
      size_t base = binding.size();
      if (!dim.variable.empty()) binding.bind(dim.variable, v);
      walk(d + 1);
      binding.truncate(base);
      current.pop_back();
    }
  };
  walk(0);
  return out;
}

}  // namespace recql
