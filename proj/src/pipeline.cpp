#include "codeprep/pipeline.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "codeprep/decontam.hpp"
#include "codeprep/errors.hpp"
#include "codeprep/hashing.hpp"
#include "codeprep/mixture.hpp"
#include "codeprep/parallel.hpp"
#include "codeprep/sentinels.hpp"

namespace codeprep {

namespace fs = std::filesystem;
using nlohmann::json;

nlohmann::ordered_json summary_json(const StageSummary& s) {
  nlohmann::ordered_json j;
  j["stage"] = s.stage;
  j["status"] = s.status;
  j["input"] = s.input;
  j["output"] = s.output;
  j["dropped"] = s.dropped;
  j["tokens"] = s.tokens;
  j["details"] = s.details;
  return j;
}

StageSummary summary_from_json(const json& j) {
  StageSummary s;
  s.stage = j.at("stage").get<std::string>();
  s.status = j.value("status", "ran");
  s.input = j.value("input", std::size_t{0});
  s.output = j.value("output", std::size_t{0});
  s.dropped = j.value("dropped", std::size_t{0});
  s.tokens = j.value("tokens", std::size_t{0});
  if (j.contains("details")) s.details = j["details"];
  return s;
}

namespace {

void note(const StageEnv& env, std::string_view doc_id) {
  if (env.last_doc_id) env.last_doc_id->assign(doc_id);
}

void write_jsonl(const fs::path& path, const std::vector<nlohmann::ordered_json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += json_line(r);
    out.push_back('\n');
  }
  write_file(path, out);
}

void write_json(const fs::path& path, const nlohmann::ordered_json& value) {
  write_file(path, value.dump(2, ' ', false, json::error_handler_t::replace) + "\n");
}

std::vector<std::string> put_all(const std::vector<SourceDocument>& docs, const BlobStore& store,
                                 unsigned workers) {
  std::vector<std::string> blobs(docs.size());
  parallel_for(docs.size(), workers, [&](std::size_t i) { blobs[i] = store.put(docs[i].content); });
  return blobs;
}

std::size_t count_tokens(const std::vector<SourceDocument>& docs, const TokenBudgeter& budgeter) {
  std::size_t total = 0;
  for (const auto& d : docs) total += budgeter.count(d.content);
  return total;
}

// Writes a manifest in input order with dropped documents inline.
void write_document_manifest(const fs::path& path, const std::vector<SourceDocument>& input,
                             const std::vector<SourceDocument>& kept,
                             const std::map<std::string, std::string>& drop_reasons,
                             const StageEnv& env) {
  const BlobStore store(env.blobs);
  std::map<std::string, const SourceDocument*> by_id;
  for (const auto& d : kept) by_id[d.doc_id] = &d;
  std::vector<SourceDocument> ordered;
  std::vector<std::string> reasons;
  for (const auto& d : input) {
    const auto k = by_id.find(d.doc_id);
    if (k != by_id.end()) {
      ordered.push_back(*k->second);
      reasons.emplace_back();
    } else {
      const auto r = drop_reasons.find(d.doc_id);
      ordered.push_back(d);
      reasons.push_back(r == drop_reasons.end() ? "dropped" : r->second);
    }
  }
  const std::vector<std::string> blobs = put_all(ordered, store, env.workers);
  std::vector<nlohmann::ordered_json> records;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    note(env, ordered[i].doc_id);
    records.push_back(manifest_record(ordered[i], blobs[i], reasons[i]));
  }
  write_jsonl(path, records);
}

nlohmann::ordered_json domain_counts(const std::vector<SourceDocument>& docs) {
  std::map<std::string, std::size_t> counts;
  for (const auto& d : docs) ++counts[std::string(to_string(d.domain))];
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : counts) j[k] = v;
  return j;
}

struct Unit {
  std::string unit_id;
  std::string domain;
  std::string text;
  std::size_t tokens = 0;
};

// units.jsonl {unit_id, domain, offset, bytes, tokens} over shard.txt
void write_units(const fs::path& dir, const std::vector<Unit>& units) {
  std::string shard;
  std::vector<nlohmann::ordered_json> index;
  for (const auto& u : units) {
    nlohmann::ordered_json j;
    j["unit_id"] = u.unit_id;
    j["domain"] = u.domain;
    j["offset"] = shard.size();
    j["bytes"] = u.text.size();
    j["tokens"] = u.tokens;
    index.push_back(std::move(j));
    shard += u.text;
  }
  write_file(dir / "shard.txt", shard);
  write_jsonl(dir / "units.jsonl", index);
}

std::vector<Unit> read_units(const fs::path& units_file) {
  const std::string shard = read_file(units_file.parent_path() / "shard.txt");
  std::vector<Unit> units;
  for (const auto& j : read_jsonl(units_file)) {
    Unit u;
    u.unit_id = j.at("unit_id").get<std::string>();
    u.domain = j.at("domain").get<std::string>();
    const auto offset = j.at("offset").get<std::size_t>();
    const auto bytes = j.at("bytes").get<std::size_t>();
    if (offset + bytes > shard.size()) {
      throw FormatError(fmt::format("{}: unit {} lies outside shard.txt", units_file.string(),
                                    u.unit_id));
    }
    u.text = shard.substr(offset, bytes);
    u.tokens = j.at("tokens").get<std::size_t>();
    units.push_back(std::move(u));
  }
  return units;
}

Unit plain_unit(const SourceDocument& doc, const TokenBudgeter& budgeter) {
  Unit u{doc.doc_id, std::string(to_string(doc.domain)), render_file_fim(FimSample::plain(doc.content)), 0};
  u.tokens = budgeter.count(u.text);
  return u;
}

}  // namespace

StageSummary ingest_stage(const std::vector<IngestSource>& sources, std::uint64_t max_file_bytes,
                          const LanguageMap& languages, const fs::path& out_dir,
                          const StageEnv& env) {
  fs::create_directories(out_dir);
  std::vector<SourceDocument> docs;
  std::vector<nlohmann::ordered_json> skipped;
  std::set<std::string> seen;
  std::size_t duplicates = 0;
  for (const auto& src : sources) {
    IngestOptions opt;
    opt.domain = src.domain;
    opt.max_file_bytes = max_file_bytes;
    opt.layout = src.layout;
    opt.repo_name = src.repo_name;
    opt.languages = &languages;
    opt.workers = env.workers;
    IngestResult result = ingest_directory(src.path, opt);
    for (auto& d : result.documents) {
      note(env, d.doc_id);
      if (!seen.insert(d.doc_id).second) {
        ++duplicates;
        continue;
      }
      docs.push_back(std::move(d));
    }
    for (const auto& s : result.skipped) {
      nlohmann::ordered_json j;
      j["repo"] = s.repo;
      j["path"] = s.path;
      j["byte_len"] = s.byte_len;
      j["reason"] = s.reason;
      skipped.push_back(std::move(j));
    }
  }
  write_document_manifest(out_dir / "manifest.jsonl", docs, docs, {}, env);
  write_jsonl(out_dir / "skipped.jsonl", skipped);

  StageSummary s;
  s.stage = "ingest";
  s.status = "ran";
  s.input = docs.size() + skipped.size() + duplicates;
  s.output = docs.size();
  s.dropped = skipped.size() + duplicates;
  s.tokens = count_tokens(docs, env.budgeter);
  s.details["domains"] = domain_counts(docs);
  s.details["duplicates"] = duplicates;
  return s;
}

StageSummary filter_stage(const fs::path& in_manifest, const CascadeConfig& cascade,
                          const fs::path& out_dir, const StageEnv& env) {
  fs::create_directories(out_dir);
  const BlobStore store(env.blobs);
  const std::vector<SourceDocument> docs = load_manifest_documents(in_manifest, store);
  CascadeResult result = run_cascade(docs, cascade, env.budgeter, env.workers);

  std::map<std::string, std::string> reasons;
  for (const auto& d : result.drops) {
    // the first failure is the one that ends a document's climb
    reasons.emplace(d.doc_id, fmt::format("filter:stage{}:{}", d.stage, d.reason));
  }
  write_document_manifest(out_dir / "manifest.jsonl", docs, result.kept, reasons, env);
  std::vector<nlohmann::ordered_json> drops;
  for (const auto& d : result.drops) {
    drops.push_back({{"doc_id", d.doc_id}, {"stage", d.stage}, {"reason", d.reason}});
  }
  write_jsonl(out_dir / "drops.jsonl", drops);
  write_json(out_dir / "stage_report.json", stage_report_json(result.stage_report));

  StageSummary s;
  s.stage = "filter";
  s.status = "ran";
  s.input = docs.size();
  s.output = result.kept.size();
  s.dropped = docs.size() - result.kept.size();
  s.tokens = count_tokens(result.kept, env.budgeter);
  s.details["stages"] = stage_report_json(result.stage_report);
  return s;
}

StageSummary decontam_stage(const fs::path& in_manifest, const std::vector<fs::path>& test_sets,
                            std::size_t n, const fs::path& out_dir, const StageEnv& env) {
  fs::create_directories(out_dir);
  const BlobStore store(env.blobs);
  const std::vector<SourceDocument> docs = load_manifest_documents(in_manifest, store);
  std::vector<TestDocument> tests;
  for (const auto& p : test_sets) {
    for (auto& t : load_test_sets(p)) tests.push_back(std::move(t));
  }
  const NGramIndex index = build_index(tests, n);
  DecontamResult result = filter_corpus(docs, index, env.workers);

  std::map<std::string, std::string> reasons;
  std::vector<nlohmann::ordered_json> removals;
  std::map<std::string, std::size_t> per_benchmark;
  for (const auto& r : result.removals) {
    std::set<std::string> names;
    for (const auto& m : r.matches) {
      names.insert(m.benchmark);
      removals.push_back({{"doc_id", r.doc_id}, {"benchmark", m.benchmark}, {"offset", m.offset}});
    }
    std::string joined;
    for (const auto& name : names) {
      joined += joined.empty() ? name : "," + name;
      ++per_benchmark[name];
    }
    reasons[r.doc_id] = "contaminated:" + joined;
  }
  write_document_manifest(out_dir / "manifest.jsonl", docs, result.clean, reasons, env);
  write_jsonl(out_dir / "removals.jsonl", removals);

  StageSummary s;
  s.stage = "decontam";
  s.status = "ran";
  s.input = docs.size();
  s.output = result.clean.size();
  s.dropped = result.removals.size();
  s.tokens = count_tokens(result.clean, env.budgeter);
  s.details["n"] = n;
  s.details["test_documents"] = tests.size();
  s.details["grams"] = index.size();
  nlohmann::ordered_json bench = nlohmann::ordered_json::object();
  for (const auto& [k, v] : per_benchmark) bench[k] = v;
  s.details["flagged_by_benchmark"] = std::move(bench);
  return s;
}

StageSummary fim_stage(const fs::path& in_manifest, const FimOptions& options,
                       const fs::path& out_dir, const StageEnv& env) {
  fs::create_directories(out_dir);
  const BlobStore store(env.blobs);
  const std::vector<SourceDocument> docs = load_manifest_documents(in_manifest, store);
  std::vector<SourceDocument> code;
  std::vector<const SourceDocument*> other;
  std::map<std::string, Domain> domains;
  for (const auto& d : docs) {
    domains[d.doc_id] = d.domain;
    if (d.domain == Domain::code) {
      code.push_back(d);
    } else {
      other.push_back(&d);
    }
  }
  FimBuildResult built = build_fim_corpus(code, options, env.workers);

  struct Row {
    std::string doc_id;
    std::string origin;
    bool fallback = false;
    Unit unit;
  };
  std::vector<Row> rows;
  std::vector<nlohmann::ordered_json> drops;
  std::map<std::string, std::size_t> origins;
  for (auto& r : built.records) {
    Unit u{r.doc_id, "code", std::move(r.rendered), 0};
    u.tokens = env.budgeter.count(u.text);
    rows.push_back({r.doc_id, std::string(to_string(r.sample.origin)), r.sample.fallback,
                    std::move(u)});
  }
  for (const auto& d : built.drops) drops.push_back({{"doc_id", d.doc_id}, {"reason", d.reason}});
  for (const SourceDocument* d : other) {
    if (contains_sentinel(d->content)) {
      drops.push_back({{"doc_id", d->doc_id}, {"reason", "sentinel-collision"}});
      continue;
    }
    rows.push_back({d->doc_id, "plain", false, plain_unit(*d, env.budgeter)});
  }
  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return a.doc_id < b.doc_id; });
  std::sort(drops.begin(), drops.end(), [](const auto& a, const auto& b) {
    return a["doc_id"].template get<std::string>() < b["doc_id"].template get<std::string>();
  });

  std::vector<nlohmann::ordered_json> samples;
  std::vector<Unit> units;
  std::size_t tokens = 0;
  for (auto& r : rows) {
    note(env, r.doc_id);
    ++origins[r.origin];
    nlohmann::ordered_json j;
    j["doc_id"] = r.doc_id;
    j["domain"] = r.unit.domain;
    j["origin"] = r.origin;
    if (r.fallback) j["fallback"] = true;
    j["rendered"] = r.unit.text;
    samples.push_back(std::move(j));
    tokens += r.unit.tokens;
    units.push_back(std::move(r.unit));
  }
  write_jsonl(out_dir / "samples.jsonl", samples);
  write_units(out_dir, units);
  write_jsonl(out_dir / "drops.jsonl", drops);

  StageSummary s;
  s.stage = "fim";
  s.status = "ran";
  s.input = docs.size();
  s.output = units.size();
  s.dropped = drops.size();
  s.tokens = tokens;
  nlohmann::ordered_json o = nlohmann::ordered_json::object();
  for (const auto& [k, v] : origins) o[k] = v;
  s.details["origins"] = std::move(o);
  return s;
}

StageSummary pack_stage(const fs::path& in_manifest, const PackOptions& options,
                        const fs::path& out_dir, const StageEnv& env) {
  fs::create_directories(out_dir);
  const BlobStore store(env.blobs);
  const std::vector<SourceDocument> docs = load_manifest_documents(in_manifest, store);
  std::vector<SourceDocument> code;
  std::vector<const SourceDocument*> other;
  for (const auto& d : docs) {
    if (d.domain == Domain::code) {
      code.push_back(d);
    } else {
      other.push_back(&d);
    }
  }
  PackResult packed = pack_corpus(code, options, env.workers);

  std::vector<Unit> units;
  std::vector<nlohmann::ordered_json> index;
  std::size_t tokens = 0;
  std::size_t fim_applied = 0;
  std::size_t truncated = 0;
  for (auto& seq : packed.sequences) {
    index.push_back(pack_index_record(seq));
    fim_applied += seq.fim_applied ? 1 : 0;
    truncated += seq.truncated_paths.size();
    tokens += seq.approx_tokens;
    units.push_back({fmt::format("{}#{}", seq.repo_name, seq.sequence_idx), "code",
                     std::move(seq.rendered), seq.approx_tokens});
  }
  std::vector<nlohmann::ordered_json> drops;
  for (const auto& d : packed.drops) {
    drops.push_back(
        {{"doc_id", d.doc_id}, {"repo", d.repo}, {"path", d.path}, {"reason", d.reason}});
  }
  std::vector<Unit> plain;
  for (const SourceDocument* d : other) {
    note(env, d->doc_id);
    if (contains_sentinel(d->content)) {
      drops.push_back({{"doc_id", d->doc_id},
                       {"repo", d->repo},
                       {"path", d->path},
                       {"reason", "sentinel-collision"}});
      continue;
    }
    plain.push_back(plain_unit(*d, env.budgeter));
  }
  std::sort(plain.begin(), plain.end(),
            [](const Unit& a, const Unit& b) { return a.unit_id < b.unit_id; });
  for (auto& u : plain) {
    tokens += u.tokens;
    units.push_back(std::move(u));
  }
  write_jsonl(out_dir / "index.jsonl", index);
  write_units(out_dir, units);
  write_jsonl(out_dir / "drops.jsonl", drops);

  StageSummary s;
  s.stage = "pack";
  s.status = "ran";
  s.input = docs.size();
  s.output = units.size();
  s.dropped = drops.size();
  s.tokens = tokens;
  s.details["sequences"] = packed.sequences.size();
  s.details["fim_applied"] = fim_applied;
  s.details["truncated_files"] = truncated;
  s.details["budget"] = options.budget;
  return s;
}

StageSummary mix_stage(const fs::path& input, const std::map<std::string, double>& targets,
                       double max_epochs, const fs::path& out_dir, const StageEnv& env) {
  fs::create_directories(out_dir);
  std::vector<Unit> units;
  if (input.filename() == "units.jsonl") {
    units = read_units(input);
  } else {
    const BlobStore store(env.blobs);
    for (const auto& d : load_manifest_documents(input, store)) {
      note(env, d.doc_id);
      if (!contains_sentinel(d.content)) units.push_back(plain_unit(d, env.budgeter));
    }
  }
  std::map<std::string, std::vector<MixItem>> streams;
  std::map<std::string, std::vector<const Unit*>> by_domain;
  std::map<std::string, std::size_t> available;
  for (const auto& u : units) {
    streams[u.domain].push_back({u.unit_id, u.tokens});
    by_domain[u.domain].push_back(&u);
    available[u.domain] += u.tokens;
  }
  const MixturePlan plan = plan_mixture(available, targets, max_epochs);
  const std::vector<Emission> emissions = sample_interleaved(streams, plan, env.seed);

  std::string shard;
  std::vector<nlohmann::ordered_json> order;
  for (std::size_t i = 0; i < emissions.size(); ++i) {
    const Emission& e = emissions[i];
    const Unit& u = *by_domain.at(e.domain)[e.index];
    nlohmann::ordered_json j;
    j["position"] = i;
    j["unit_id"] = u.unit_id;
    j["domain"] = e.domain;
    j["pass"] = e.pass;
    j["tokens"] = e.tokens;
    order.push_back(std::move(j));
    shard += u.text;
  }
  write_jsonl(out_dir / "stream.jsonl", order);
  write_file(out_dir / "shard.txt", shard);
  nlohmann::ordered_json report;
  report["plan"] = plan_json(plan);
  report["domains"] = mixture_report(emissions, plan);
  write_json(out_dir / "report.json", report);

  StageSummary s;
  s.stage = "mix";
  s.status = "ran";
  s.input = units.size();
  s.output = emissions.size();
  std::size_t tokens = 0;
  for (const auto& e : emissions) tokens += e.tokens;
  s.tokens = tokens;
  s.details = report["domains"];
  return s;
}

StageSummary gate_stage(const fs::path& instructions, const GatePolicy& policy,
                        const ExternalScores& scores, const fs::path& out_dir,
                        const StageEnv& env) {
  fs::create_directories(out_dir);
  std::vector<InstructionSample> samples;
  std::set<std::string> ids;
  for (const auto& j : read_jsonl(instructions)) {
    samples.push_back(InstructionSample::from_json(j));
    note(env, samples.back().sample_id);
    if (!ids.insert(samples.back().sample_id).second) {
      throw FormatError(fmt::format("duplicate sample_id {}", samples.back().sample_id));
    }
  }
  const GateResult result = gate_instruction_corpus(samples, policy, scores, env.workers);
  std::vector<nlohmann::ordered_json> kept;
  std::map<std::string, std::size_t> languages;
  for (const auto& g : result.kept) {
    kept.push_back(gated_record(g));
    ++languages[g.sample.language_label];
  }
  std::vector<nlohmann::ordered_json> drops;
  std::map<std::string, std::size_t> reasons;
  for (const auto& d : result.drops) {
    drops.push_back({{"sample_id", d.sample_id}, {"reason", d.reason}});
    ++reasons[d.reason];
  }
  write_jsonl(out_dir / "kept.jsonl", kept);
  write_jsonl(out_dir / "drops.jsonl", drops);

  StageSummary s;
  s.stage = "gate";
  s.status = "ran";
  s.input = samples.size();
  s.output = result.kept.size();
  s.dropped = result.drops.size();
  nlohmann::ordered_json r = nlohmann::ordered_json::object();
  for (const auto& [k, v] : reasons) r[k] = v;
  nlohmann::ordered_json l = nlohmann::ordered_json::object();
  for (const auto& [k, v] : languages) l[k] = v;
  s.details["drop_reasons"] = std::move(r);
  s.details["kept_languages"] = std::move(l);
  return s;
}

StageSummary needle_stage(const fs::path& in_manifest, const std::vector<double>& depths,
                          const std::vector<std::size_t>& lengths, const NeedleSpec& spec,
                          const fs::path& out_dir, const StageEnv& env) {
  fs::create_directories(out_dir / "contexts");
  const BlobStore store(env.blobs);
  std::vector<SourceDocument> code;
  for (auto& d : load_manifest_documents(in_manifest, store)) {
    if (d.domain == Domain::code) code.push_back(std::move(d));
  }
  const NeedleCorpus corpus = NeedleCorpus::from_documents(code);
  const std::vector<NeedleInstance> grid =
      generate_grid(corpus, depths, lengths, spec, env.budgeter, env.workers);
  std::vector<nlohmann::ordered_json> records;
  std::size_t tokens = 0;
  for (const auto& inst : grid) {
    const std::string rel = "contexts/" + inst.instance_id + ".txt";
    write_file(out_dir / rel, inst.prompt());
    records.push_back(instance_record(inst, rel));
    tokens += inst.actual_length;
  }
  write_jsonl(out_dir / "instances.jsonl", records);

  StageSummary s;
  s.stage = "needle";
  s.status = "ran";
  s.input = code.size();
  s.output = grid.size();
  s.tokens = tokens;
  return s;
}

StageSummary needle_score_stage(const fs::path& instances, const fs::path& responses,
                                const fs::path& out_csv) {
  std::vector<NeedleInstance> grid;
  for (const auto& j : read_jsonl(instances)) {
    NeedleInstance inst;
    inst.instance_id = j.at("instance_id").get<std::string>();
    inst.expected = j.at("expected").get<std::string>();
    inst.depth_fraction = j.at("depth").get<double>();
    inst.target_length = j.at("length").get<std::size_t>();
    grid.push_back(std::move(inst));
  }
  std::map<std::string, std::string> answers;
  for (const auto& j : read_jsonl(responses)) {
    answers[j.at("instance_id").get<std::string>()] = j.value("response", std::string{});
  }
  const std::vector<NeedleResult> results = score_grid(grid, answers);
  write_file(out_csv, results_csv(results));
  StageSummary s;
  s.stage = "needle-score";
  s.status = "ran";
  s.input = grid.size();
  s.output = results.size();
  std::size_t passed = 0;
  for (const auto& r : results) passed += static_cast<std::size_t>(r.score);
  s.details["passed"] = passed;
  return s;
}

nlohmann::ordered_json run_report_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["stages"] = nlohmann::ordered_json::array();
  for (const auto& s : report.stages) j["stages"].push_back(summary_json(s));
  return j;
}

RunReport run_report_from_json(const json& j) {
  RunReport r;
  for (const auto& s : j.at("stages")) r.stages.push_back(summary_from_json(s));
  return r;
}

std::string run_report_text(const RunReport& report) {
  if (report.stages.empty()) return "no stages ran\n";
  std::string out = fmt::format("{:<10} {:<7} {:>9} {:>9} {:>9} {:>12}\n", "stage", "status",
                                "input", "output", "dropped", "tokens");
  for (const auto& s : report.stages) {
    out += fmt::format("{:<10} {:<7} {:>9} {:>9} {:>9} {:>12}\n", s.stage, s.status, s.input,
                       s.output, s.dropped, s.tokens);
  }
  return out;
}

namespace {

constexpr int kStampVersion = 1;

std::string file_digest(const fs::path& path) { return sha256_hex(read_file(path)); }

// Digest of a file or of every regular file below a directory.
std::string tree_digest(const fs::path& path) {
  if (!fs::exists(path)) throw IoError(fmt::format("{} does not exist", path.string()));
  if (!fs::is_directory(path)) return file_digest(path);
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& e : fs::recursive_directory_iterator(path)) {
    if (e.is_regular_file()) {
      files.emplace_back(fs::relative(e.path(), path).generic_string(), e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::string acc;
  for (const auto& [rel, full] : files) acc += rel + '\0' + file_digest(full) + '\n';
  return sha256_hex(acc);
}

std::map<std::string, std::string> output_digests(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel == "_stamp.json") continue;
    out[rel] = file_digest(e.path());
  }
  return out;
}

bool blobs_present(const fs::path& manifest, const BlobStore& store) {
  for (const auto& r : read_jsonl(manifest)) {
    if (r.contains("blob") && !store.contains(r["blob"].get<std::string>())) return false;
  }
  return true;
}

struct StageTask {
  std::string name;
  fs::path dir;
  nlohmann::ordered_json fingerprint;
  std::function<StageSummary()> body;
};

StageSummary run_task(const StageTask& task, const BlobStore& store, bool force,
                      std::string& last_doc_id) {
  const fs::path stamp_path = task.dir / "_stamp.json";
  const std::string fingerprint = sha256_hex(task.fingerprint.dump());
  if (!force && fs::exists(stamp_path)) {
    try {
      const json stamp = json::parse(read_file(stamp_path));
      std::map<std::string, std::string> recorded =
          stamp.at("outputs").get<std::map<std::string, std::string>>();
      bool valid = stamp.at("version").get<int>() == kStampVersion &&
                   stamp.at("fingerprint").get<std::string>() == fingerprint &&
                   output_digests(task.dir) == recorded;
      if (valid && recorded.count("manifest.jsonl")) {
        valid = blobs_present(task.dir / "manifest.jsonl", store);
      }
      if (valid) {
        StageSummary s = summary_from_json(stamp.at("summary"));
        s.status = "cached";
        return s;
      }
    } catch (const std::exception&) {
      // unreadable stamp: recompute
    }
  }
  if (fs::exists(task.dir)) fs::remove_all(task.dir);
  fs::create_directories(task.dir);
  last_doc_id.clear();
  StageSummary summary;
  try {
    summary = task.body();
  } catch (const std::exception& e) {
    throw Error(fmt::format("stage {} failed: {} (last doc_id: {})", task.name, e.what(),
                            last_doc_id.empty() ? "none" : last_doc_id));
  }
  nlohmann::ordered_json stamp;
  stamp["version"] = kStampVersion;
  stamp["stage"] = task.name;
  stamp["fingerprint"] = fingerprint;
  stamp["outputs"] = output_digests(task.dir);
  stamp["summary"] = summary_json(summary);
  write_json(stamp_path, stamp);
  return summary;
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& config, const fs::path& base_dir,
                       const RunOptions& options) {
  RunReport report;
  const bool any = config.ingest.enabled || config.filter.enabled || config.decontam.enabled ||
                   config.fim.enabled || config.pack.enabled || config.mix.enabled ||
                   config.gate.enabled || config.needle.enabled;
  if (!any) return report;

  const auto resolve = [&](const std::string& p) -> fs::path {
    if (p.empty()) return {};
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  const fs::path out = resolve(config.output_dir);
  fs::create_directories(out);
  std::string last_doc_id;
  StageEnv env;
  env.blobs = out / "blobs";
  env.budgeter = TokenBudgeter::from_name(config.budgeter);
  env.seed = config.seed;
  env.workers = std::max(1u, options.workers);
  env.last_doc_id = &last_doc_id;
  const BlobStore store(env.blobs);

  nlohmann::ordered_json common;
  common["seed"] = config.seed;
  common["budgeter"] = config.budgeter;

  fs::path doc_manifest = out / "ingest" / "manifest.jsonl";
  const auto fingerprint = [&](std::string_view stage, nlohmann::ordered_json settings,
                               nlohmann::ordered_json inputs) {
    nlohmann::ordered_json f;
    f["stage"] = stage;
    f["common"] = common;
    f["settings"] = std::move(settings);
    f["inputs"] = std::move(inputs);
    return f;
  };
  const auto require = [](const fs::path& p, std::string_view stage) {
    if (!fs::exists(p)) {
      throw ConfigError(fmt::format("stage {} needs {}, which does not exist", stage, p.string()));
    }
    return p;
  };
  const auto run = [&](StageTask task) {
    report.stages.push_back(run_task(task, store, options.force, last_doc_id));
  };

  if (config.ingest.enabled) {
    std::vector<IngestSource> sources = config.ingest.sources;
    nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
    nlohmann::ordered_json settings;
    settings["max_file_bytes"] = config.ingest.max_file_bytes;
    settings["sources"] = nlohmann::ordered_json::array();
    for (auto& s : sources) {
      s.path = resolve(s.path).string();
      inputs.push_back(tree_digest(s.path));
      settings["sources"].push_back({{"domain", to_string(s.domain)},
                                     {"layout", s.layout == RepoLayout::single ? "single" : "subdirs"},
                                     {"repo_name", s.repo_name}});
    }
    const fs::path lang_file = resolve(config.ingest.languages);
    if (!lang_file.empty()) inputs.push_back(file_digest(lang_file));
    run({"ingest", out / "ingest", fingerprint("ingest", settings, inputs), [&, sources] {
           const LanguageMap map =
               lang_file.empty() ? LanguageMap::defaults() : LanguageMap::load(lang_file);
           return ingest_stage(sources, config.ingest.max_file_bytes, map, out / "ingest", env);
         }});
  }
  if (config.filter.enabled) {
    const fs::path input = require(doc_manifest, "filter");
    const fs::path cascade_file = resolve(config.filter.cascade);
    nlohmann::ordered_json inputs = {file_digest(input)};
    if (!cascade_file.empty()) inputs.push_back(file_digest(cascade_file));
    CascadeConfig cascade = cascade_file.empty() ? default_cascade()
                                                 : load_cascade_config(cascade_file);
    run({"filter", out / "filter", fingerprint("filter", {}, inputs), [&, input] {
           return filter_stage(input, cascade, out / "filter", env);
         }});
    doc_manifest = out / "filter" / "manifest.jsonl";
  }
  if (config.decontam.enabled) {
    const fs::path input = require(doc_manifest, "decontam");
    std::vector<fs::path> sets;
    nlohmann::ordered_json inputs = {file_digest(input)};
    for (const auto& t : config.decontam.test_sets) {
      sets.push_back(resolve(t));
      inputs.push_back(tree_digest(sets.back()));
    }
    run({"decontam", out / "decontam",
         fingerprint("decontam", {{"n", config.decontam.n}}, inputs), [&, input, sets] {
           return decontam_stage(input, sets, config.decontam.n, out / "decontam", env);
         }});
    doc_manifest = out / "decontam" / "manifest.jsonl";
  }

  fs::path mix_input = doc_manifest;
  if (config.fim.enabled) {
    const fs::path input = require(doc_manifest, "fim");
    FimOptions fim;
    fim.policy = {config.fim.rate, config.fim.min_middle_chars, config.fim.max_middle_fraction,
                  config.seed};
    fim.ast_languages = {config.fim.ast_languages.begin(), config.fim.ast_languages.end()};
    nlohmann::ordered_json settings = {{"rate", config.fim.rate},
                                       {"min_middle_chars", config.fim.min_middle_chars},
                                       {"max_middle_fraction", config.fim.max_middle_fraction},
                                       {"ast_languages", fim.ast_languages}};
    run({"fim", out / "fim", fingerprint("fim", settings, {file_digest(input)}),
         [&, input, fim] { return fim_stage(input, fim, out / "fim", env); }});
    mix_input = out / "fim" / "units.jsonl";
  }
  if (config.pack.enabled) {
    const fs::path input = require(doc_manifest, "pack");
    PackOptions pack;
    pack.budget = config.pack.budget;
    pack.budgeter = env.budgeter;
    pack.order = parse_file_order(config.pack.order);
    pack.fim_last = config.pack.fim_last;
    pack.policy = {config.fim.rate, config.fim.min_middle_chars, config.fim.max_middle_fraction,
                   config.seed};
    pack.ast_languages = {config.fim.ast_languages.begin(), config.fim.ast_languages.end()};
    nlohmann::ordered_json settings = {{"budget", config.pack.budget},
                                       {"order", config.pack.order},
                                       {"fim_last", config.pack.fim_last},
                                       {"rate", config.fim.rate},
                                       {"min_middle_chars", config.fim.min_middle_chars},
                                       {"max_middle_fraction", config.fim.max_middle_fraction},
                                       {"ast_languages", pack.ast_languages}};
    run({"pack", out / "pack", fingerprint("pack", settings, {file_digest(input)}),
         [&, input, pack] { return pack_stage(input, pack, out / "pack", env); }});
    mix_input = out / "pack" / "units.jsonl";
  }
  if (config.mix.enabled) {
    const fs::path input = require(mix_input, "mix");
    nlohmann::ordered_json settings = {{"targets", config.mix.targets},
                                       {"max_epochs", config.mix.max_epochs}};
    nlohmann::ordered_json inputs = {input.filename().string(), file_digest(input)};
    if (input.filename() == "units.jsonl") {
      inputs.push_back(file_digest(input.parent_path() / "shard.txt"));
    }
    run({"mix", out / "mix", fingerprint("mix", settings, inputs), [&, input] {
           return mix_stage(input, config.mix.targets, config.mix.max_epochs, out / "mix", env);
         }});
  }
  if (config.gate.enabled) {
    const fs::path input = require(resolve(config.gate.input), "gate");
    const fs::path scores_file = resolve(config.gate.scores);
    GatePolicy policy = config.gate.policy;
    policy.seed = config.seed;
    nlohmann::ordered_json inputs = {file_digest(input)};
    if (!scores_file.empty()) inputs.push_back(file_digest(scores_file));
    run({"gate", out / "gate", fingerprint("gate", gate_policy_toml(policy), inputs),
         [&, input, scores_file, policy] {
           const ExternalScores scores =
               scores_file.empty() ? ExternalScores{} : load_external_scores(scores_file);
           return gate_stage(input, policy, scores, out / "gate", env);
         }});
  }
  if (config.needle.enabled) {
    const fs::path input = require(doc_manifest, "needle");
    NeedleSpec spec;
    spec.seed = config.seed;
    spec.needle_path = config.needle.needle_path;
    spec.language = config.needle.language;
    const fs::path needle_file = resolve(config.needle.needle_file);
    if (!needle_file.empty()) spec.needle_source = read_file(needle_file);
    const std::vector<std::size_t> lengths(config.needle.lengths.begin(),
                                           config.needle.lengths.end());
    nlohmann::ordered_json settings = {{"depths", config.needle.depths},
                                       {"lengths", config.needle.lengths},
                                       {"needle_path", spec.needle_path},
                                       {"language", spec.language},
                                       {"needle", sha256_hex(spec.needle_source)}};
    run({"needle", out / "needle", fingerprint("needle", settings, {file_digest(input)}),
         [&, input, spec, lengths] {
           return needle_stage(input, config.needle.depths, lengths, spec, out / "needle", env);
         }});
  }
  write_json(out / "run_report.json", run_report_json(report));
  return report;
}

}  // namespace codeprep
