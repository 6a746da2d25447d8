#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeprep/document.hpp"

namespace codeprep {

using ordered_json = nlohmann::ordered_json;

// Content-addressed file store: blobs/<sha[0:2]>/<sha>. Writes are atomic
// (temp file + rename) and idempotent.
class BlobStore {
 public:
  explicit BlobStore(std::filesystem::path root) : root_(std::move(root)) {}

  std::string put(std::string_view content) const;
  std::string get(std::string_view sha) const;
  bool contains(std::string_view sha) const;
  std::filesystem::path path_for(std::string_view sha) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

// {doc_id, repo, path, language, byte_len, line_count, domain, quality_stage,
//  blob, drop_reason?}
ordered_json manifest_record(const SourceDocument& doc, std::string_view blob,
                             std::string_view drop_reason = {});

// Rebuilds a document from a manifest record, loading its content from
// `store`. Records carrying a drop_reason should be filtered out first.
SourceDocument document_from_record(const nlohmann::json& record, const BlobStore& store);

bool is_dropped(const nlohmann::json& record);

// Serializes one JSON line. Invalid UTF-8 is replaced rather than thrown.
std::string json_line(const ordered_json& value);
std::string json_line(const nlohmann::json& value);

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path);
  void write(const ordered_json& value);
  void write(const nlohmann::json& value);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Writes via temp file + rename, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view bytes);

// Loads every live (non-dropped) document of a manifest.
std::vector<SourceDocument> load_manifest_documents(const std::filesystem::path& manifest,
                                                    const BlobStore& store);

// Writes documents (content into the store) and returns nothing; dropped
// records can be appended by the caller with manifest_record(..., reason).
void write_manifest(const std::filesystem::path& manifest,
                    const std::vector<SourceDocument>& docs, const BlobStore& store);

// <run>/blobs for a manifest at <run>/<stage>/manifest.jsonl.
std::filesystem::path default_store_for(const std::filesystem::path& manifest);

}  // namespace codeprep
