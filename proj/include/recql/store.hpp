#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "recql/relation.hpp"

namespace recql {

// Writes a relation to `path` in the RQREL text format and its tensor cells
// to sidecar chunk files next to it. Rows are canonically sorted first and
// sidecars are numbered in emission order over the sorted rows, so the bytes
// on disk depend only on the relation's contents.
void write_relation_file(const std::filesystem::path& path, Relation rel);
Relation read_relation_file(const std::filesystem::path& path);

// Disk-backed store of materialized relations with a write-through RAM
// cache. Each key is written exactly once; reads serve from the cache or
// reload from disk. A JSON manifest tracks files and table statistics; it
// is rewritten on flush() and destruction, not per put, so another store
// object on the same root sees new entries only after a flush.
class MaterializationStore {
public:
  explicit MaterializationStore(std::filesystem::path root);
  ~MaterializationStore();
  MaterializationStore(const MaterializationStore&) = delete;
  MaterializationStore& operator=(const MaterializationStore&) = delete;

  bool has(const std::string& key) const;
  // Sorts, persists, caches. Throws Internal when the key already exists.
  const Relation& put(const std::string& key, Relation rel);
  // Throws MissingInput when the key was never materialized.
  const Relation& get(const std::string& key);
  const TableStats& stats(const std::string& key) const;

  std::vector<std::string> keys() const;  // sorted
  // Absolute path of the relation file behind a key. The name is derived
  // from the key alone, so equal keys map to equal names across stores.
  std::filesystem::path file_for(const std::string& key) const;
  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path exports_dir() const;  // created on demand

  // Drops the RAM cache; disk contents and the manifest stay.
  void drop_cache() { cache_.clear(); }

  // Writes the manifest if entries were added since the last save.
  void flush();

private:
  struct Entry {
    std::string file;  // relative to root
    TableStats stats;
  };

  void load_manifest();
  void save_manifest() const;

  std::filesystem::path root_;
  std::map<std::string, Entry> entries_;
  std::unordered_map<std::string, Relation> cache_;
  bool manifest_dirty_ = false;
};

}  // namespace recql
