#include "codeprep/manifest.hpp"

#include <atomic>
#include <sstream>

#include <unistd.h>

#include "codeprep/errors.hpp"
#include "codeprep/hashing.hpp"

namespace fs = std::filesystem;

namespace codeprep {

fs::path BlobStore::path_for(std::string_view sha) const {
  if (sha.size() < 3) throw IoError("invalid blob id: " + std::string(sha));
  return root_ / std::string(sha.substr(0, 2)) / std::string(sha);
}

bool BlobStore::contains(std::string_view sha) const {
  std::error_code ec;
  return fs::is_regular_file(path_for(sha), ec);
}

std::string BlobStore::put(std::string_view content) const {
  std::string sha = sha256_hex(content);
  if (!contains(sha)) write_file(path_for(sha), content);
  return sha;
}

std::string BlobStore::get(std::string_view sha) const {
  return read_file(path_for(sha));
}

ordered_json manifest_record(const SourceDocument& doc, std::string_view blob,
                             std::string_view drop_reason) {
  ordered_json r;
  r["doc_id"] = doc.doc_id;
  r["repo"] = doc.repo;
  r["path"] = doc.path;
  r["language"] = doc.language;
  r["byte_len"] = doc.byte_len;
  r["line_count"] = doc.line_count;
  r["domain"] = to_string(doc.domain);
  r["quality_stage"] = doc.quality_stage;
  if (!blob.empty()) r["blob"] = blob;
  if (!drop_reason.empty()) r["drop_reason"] = drop_reason;
  return r;
}

bool is_dropped(const nlohmann::json& record) {
  return record.contains("drop_reason") && !record["drop_reason"].is_null();
}

SourceDocument document_from_record(const nlohmann::json& record, const BlobStore& store) {
  try {
    SourceDocument doc;
    doc.doc_id = record.at("doc_id").get<std::string>();
    doc.repo = record.at("repo").get<std::string>();
    doc.path = record.at("path").get<std::string>();
    doc.language = record.value("language", "unknown");
    doc.domain = parse_domain(record.value("domain", "code"));
    doc.quality_stage = record.value("quality_stage", 0);
    doc.content = store.get(record.at("blob").get<std::string>());
    doc.byte_len = doc.content.size();
    doc.line_count = count_lines(doc.content);
    if (record.contains("byte_len") && record["byte_len"].get<std::size_t>() != doc.byte_len) {
      throw IoError("blob for " + doc.doc_id + " does not match recorded byte_len");
    }
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed manifest record: ") + e.what());
  }
}

std::string json_line(const ordered_json& value) {
  return value.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string json_line(const nlohmann::json& value) {
  return value.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

JsonlWriter::JsonlWriter(const fs::path& path) : path_(path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot write " + path.string());
}

void JsonlWriter::write(const ordered_json& value) { out_ << json_line(value) << '\n'; }
void JsonlWriter::write(const nlohmann::json& value) { out_ << json_line(value) << '\n'; }

void JsonlWriter::close() {
  out_.close();
  if (!out_) throw IoError("failed writing " + path_.string());
}

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  static std::atomic<std::uint64_t> counter{0};
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<SourceDocument> load_manifest_documents(const fs::path& manifest,
                                                    const BlobStore& store) {
  std::vector<SourceDocument> docs;
  for (const auto& record : read_jsonl(manifest)) {
    if (is_dropped(record)) continue;
    docs.push_back(document_from_record(record, store));
  }
  return docs;
}

void write_manifest(const fs::path& manifest, const std::vector<SourceDocument>& docs,
                    const BlobStore& store) {
  JsonlWriter out(manifest);
  for (const auto& doc : docs) out.write(manifest_record(doc, store.put(doc.content)));
  out.close();
}

fs::path default_store_for(const fs::path& manifest) {
  return fs::absolute(manifest).parent_path().parent_path() / "blobs";
}

}  // namespace codeprep
