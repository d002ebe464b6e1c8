#include "recql/store.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "recql/errors.hpp"
#include "recql/util.hpp"

namespace fs = std::filesystem;

namespace recql {
namespace {

uint64_t fnv1a(const std::string& text) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex16(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

// Keys carry '/', brackets, and case-significant display names; the file
// name keeps a readable sanitized prefix and disambiguates with a hash of
// the exact key.
std::string file_name_for(const std::string& key) {
  std::string safe;
  for (char c : key) {
    bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                c == '.' || c == '-';
    safe.push_back(keep ? c : '_');
  }
  if (safe.size() > 80) safe.resize(80);
  return safe + "_" + hex16(fnv1a(key)) + ".rqrel";
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  }
  out << text;
  if (!out) {
    throw Error(ErrorKind::Io, "short write to '" + path.string() + "'");
  }
}

}  // namespace

void write_relation_file(const fs::path& path, Relation rel) {
  sort_rows_canonical(rel);
  std::ostringstream out;
  out << "RQREL v1\n" << rel.ncols() << "\n";
  for (size_t c = 0; c < rel.ncols(); ++c) {
    if (c) out << '\t';
    out << rel.columns[c] << ':' << rel.kinds[c].to_string();
  }
  out << '\n';
  // Sidecar references are written as "@t<k>" rather than full file names,
  // so the bytes of the relation file do not depend on its own name.
  size_t sidecar = 0;
  std::string stem = path.filename().string();
  for (const auto& row : rel.rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out << '\t';
      if (is_scalar(row[c])) {
        out << fmt_double(as_scalar(row[c]));
      } else {
        std::string tag = "t" + std::to_string(sidecar++);
        write_chunk_file(path.parent_path() / (stem + "." + tag), as_tensor(row[c]));
        out << '@' << tag;
      }
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

Relation read_relation_file(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "RQREL v1") {
    throw Error(ErrorKind::Io, "'" + path.string() + "' is not a relation file");
  }
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::Io, "'" + path.string() + "' is truncated");
  }
  size_t ncols = 0;
  try {
    ncols = std::stoul(line);
  } catch (...) {
    throw Error(ErrorKind::Io, "bad column count in '" + path.string() + "'");
  }
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::Io, "'" + path.string() + "' is truncated");
  }
  std::vector<std::string> columns;
  std::vector<CellKind> kinds;
  {
    std::istringstream specs(line);
    std::string spec;
    while (std::getline(specs, spec, '\t')) {
      size_t colon = spec.rfind(':');
      if (colon == std::string::npos) {
        throw Error(ErrorKind::Io, "bad column spec '" + spec + "' in '" + path.string() + "'");
      }
      columns.push_back(spec.substr(0, colon));
      kinds.push_back(cell_kind_from_text(spec.substr(colon + 1)));
    }
  }
  if (columns.size() != ncols) {
    throw Error(ErrorKind::Io, "column spec count mismatch in '" + path.string() + "'");
  }
  Relation rel = make_relation(std::move(columns), std::move(kinds));
  while (std::getline(in, line)) {
    if (line.empty() && in.eof()) break;
    std::vector<Cell> row;
    size_t start = 0;
    for (size_t c = 0; c < ncols; ++c) {
      size_t end = (c + 1 == ncols) ? line.size() : line.find('\t', start);
      if (end == std::string::npos) {
        throw Error(ErrorKind::Io, "short row in '" + path.string() + "'");
      }
      std::string field = line.substr(start, end - start);
      start = end + 1;
      if (!field.empty() && field[0] == '@') {
        std::string name = path.filename().string() + "." + field.substr(1);
        row.emplace_back(read_chunk_file(path.parent_path() / name));
      } else {
        try {
          size_t used = 0;
          double v = std::stod(field, &used);
          if (used != field.size()) throw std::invalid_argument(field);
          row.emplace_back(v);
        } catch (...) {
          throw Error(ErrorKind::Io, "bad scalar '" + field + "' in '" + path.string() + "'");
        }
      }
    }
    rel.add_row(std::move(row));
  }
  return rel;
}

MaterializationStore::MaterializationStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "rel");
  load_manifest();
}

void MaterializationStore::load_manifest() {
  fs::path manifest = root_ / "manifest.json";
  if (!fs::exists(manifest)) return;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, std::string("invalid store manifest: ") + e.what());
  }
  try {
    for (const auto& item : doc.at("entries")) {
      Entry entry;
      entry.file = item.at("file").get<std::string>();
      entry.stats.row_count = item.at("rows").get<uint64_t>();
      entry.stats.bytes = item.at("bytes").get<uint64_t>();
      entry.stats.distinct = item.at("distinct").get<std::vector<uint64_t>>();
      entries_[item.at("key").get<std::string>()] = std::move(entry);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, std::string("invalid store manifest: ") + e.what());
  }
}

void MaterializationStore::save_manifest() const {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& [key, entry] : entries_) {
    items.push_back({{"key", key},
                     {"file", entry.file},
                     {"rows", entry.stats.row_count},
                     {"bytes", entry.stats.bytes},
                     {"distinct", entry.stats.distinct}});
  }
  nlohmann::json doc{{"version", 1}, {"entries", std::move(items)}};
  write_text_file(root_ / "manifest.json", doc.dump(2));
}

bool MaterializationStore::has(const std::string& key) const {
  return entries_.count(key) != 0;
}

const Relation& MaterializationStore::put(const std::string& key, Relation rel) {
  if (has(key)) {
    throw Error(ErrorKind::Internal, "store key '" + key + "' is already materialized");
  }
  sort_rows_canonical(rel);
  Entry entry;
  entry.file = "rel/" + file_name_for(key);
  entry.stats = collect_stats(rel);
  write_relation_file(root_ / entry.file, rel);
  entries_[key] = std::move(entry);
  manifest_dirty_ = true;
  return cache_[key] = std::move(rel);
}

void MaterializationStore::flush() {
  if (!manifest_dirty_) return;
  save_manifest();
  manifest_dirty_ = false;
}

MaterializationStore::~MaterializationStore() {
  try {
    flush();
  } catch (...) {
    // A failed manifest write in teardown must not terminate; the relation
    // files themselves are already on disk.
  }
}

const Relation& MaterializationStore::get(const std::string& key) {
  auto hit = cache_.find(key);
  if (hit != cache_.end()) return hit->second;
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw Error(ErrorKind::MissingInput, "no materialization for key '" + key + "'");
  }
  return cache_[key] = read_relation_file(root_ / it->second.file);
}

const TableStats& MaterializationStore::stats(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw Error(ErrorKind::MissingInput, "no materialization for key '" + key + "'");
  }
  return it->second.stats;
}

std::filesystem::path MaterializationStore::file_for(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw Error(ErrorKind::MissingInput, "no materialization for key '" + key + "'");
  }
  return root_ / it->second.file;
}

std::vector<std::string> MaterializationStore::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [key, entry] : entries_) out.push_back(key);
  return out;
}

std::filesystem::path MaterializationStore::exports_dir() const {
  fs::path dir = root_ / "exports";
  fs::create_directories(dir);
  return dir;
}

}  // namespace recql
