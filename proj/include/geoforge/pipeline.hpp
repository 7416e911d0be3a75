#pragma once

// Seed ingestion, per-seed synthesis fan-out, diagram and text generation,
// and dataset emission.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoforge/engine.hpp"
#include "geoforge/layout.hpp"
#include "geoforge/synth.hpp"
#include "geoforge/verbalize.hpp"

namespace geoforge::pipeline {

namespace fs = std::filesystem;

struct PipelineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  std::vector<fs::path> seed_paths;  // files, or directories scanned for *.json and *.cdl
  fs::path out_dir;
  int per_seed = 12;
  std::uint64_t seed = 42;
  engine::DeductionBudget budget{};
  layout::LayoutConfig layout{};
  int layout_attempts = 3;  // optimizer runs, each with its own stream, before a candidate is dropped
  std::vector<int> sizes{112, 224, 336};
  double image_ratio = 0.5;
  int attempts_per_problem = 10;
  std::optional<verbalize::RewriterConfig> rewriter;
  int workers = 1;
  bool dump_trace = false;
  bool dump_layout = false;

  // Throws PipelineError naming the first broken field.
  void check() const;
};

struct SeedDiagnostic {
  std::string source;  // file, with "#index" for entries of a JSON array
  std::string message;
};

struct IngestResult {
  std::vector<synth::FormalizedSeed> seeds;
  std::vector<SeedDiagnostic> diagnostics;
  int read = 0;
};

// Parses, validates and deduces every seed. A JSON file holds one annotation
// object or an array of them; any other file is CDL text. Bad seeds become
// diagnostics; throws PipelineError when none is left.
IngestResult ingest_seeds(const std::vector<fs::path>& paths, const engine::DeductionBudget& budget = {});

// Files the paths expand to, sorted within each directory.
std::vector<fs::path> expand_seed_paths(const std::vector<fs::path>& paths);

struct Provenance {
  std::string seed_id;
  int attempt = 0;
  synth::SwapRecord swap;
  synth::GoalProvenance goal = synth::GoalProvenance::Original;
  bool rewriter_used = false;
  int short_edge = 224;
};

struct InstructionRecord {
  std::string id;
  std::string question;
  std::string solution;
  Number answer;
  Provenance provenance;
  std::vector<std::uint8_t> png;
  std::string svg;
  std::optional<nlohmann::json> trace;
  std::optional<nlohmann::json> layout;
  cdl::FormalProblem problem;  // as synthesized, id = record id
  std::string problem_key;     // synth::problem_key of the candidate

  std::string image_path() const { return "images/" + id + ".png"; }
  // {id, image, question, solution, answer, provenance}; answer is a plain
  // JSON number, provenance carries the problem as annotation JSON.
  nlohmann::json to_json() const;
};

// "<seed>_<NNN>".
std::string record_id(const std::string& seed_id, int index);

// Appends rows to <out>/dataset.jsonl and writes images/<id>.png and .svg.
// Emitting an id again rewrites its files and skips the row when the row is
// unchanged; a different row under a known id throws PipelineError.
class DatasetWriter {
 public:
  explicit DatasetWriter(const fs::path& out_dir, bool truncate = true);
  // write_files = false when the caller already wrote the images.
  void emit(const InstructionRecord& record, bool write_files = true);
  int rows() const { return static_cast<int>(rows_.size()); }

 private:
  fs::path out_;
  std::ofstream jsonl_;
  std::map<std::string, std::string> rows_;  // id -> row
};

// One-shot form of DatasetWriter::emit for an existing output directory.
void emit_record(const InstructionRecord& record, const fs::path& out_dir);

// Image files only: png, svg and the optional trace and layout dumps.
void write_record_files(const InstructionRecord& record, const fs::path& out_dir);

struct RunStats {
  int seeds_read = 0;
  int seeds_valid = 0;
  int attempted = 0;
  // Candidates that passed synthesis; each is then emitted or dropped by a
  // late stage.
  int accepted = 0;
  int emitted = 0;
  std::map<std::string, int> rejections;       // synthesis stage
  std::map<std::string, int> late_rejections;  // layout, render, text, verification
  int gave_up = 0;                             // seeds that hit the attempt cap
  int cross_seed_duplicates = 0;
  int rewrites = 0;
  double wall_seconds = 0.0;
  std::vector<SeedDiagnostic> diagnostics;

  int total(const std::map<std::string, int>& m) const;
  // attempted = accepted + synthesis rejections and
  // emitted = accepted - late rejections.
  bool consistent() const;
  nlohmann::json to_json() const;
  static RunStats from_json(const nlohmann::json& j);
};

// Names a synthesis-stage rejection may carry.
bool is_synthesis_reason(const std::string& reason);

// Called by run_pipeline in place of verbalize::rewrite; lets tests inject
// faults.
using Rewriter = std::function<verbalize::RewriteOutcome(const std::string& question, const std::string& hint,
                                                         const std::string& record_id)>;

// Writes dataset.jsonl, images/ and stats.json under config.out_dir. Rows are
// ordered by seed order, then candidate index, whatever the worker count.
// Throws PipelineError on config errors, an unwritable output directory, or
// no valid seed.
RunStats run_pipeline(const PipelineConfig& config, const Rewriter& rewriter = {});

// Builds the record of one candidate, or returns the late rejection reason.
// stream_seed drives size choice, layout restarts and template variants.
struct LateOutcome {
  std::optional<InstructionRecord> record;
  std::string reason;
  std::string detail;
};
LateOutcome build_record(const synth::SynthesisCandidate& candidate, const std::string& id, std::uint64_t stream_seed,
                         const PipelineConfig& config, const Rewriter& rewriter);

// Image-channel values must not be stated in the question (unless a text
// fact has the same value), and every image-channel metric must be drawn.
std::string channel_leak(const cdl::FormalProblem& p, const std::string& question, int drawn_annotations);

}  // namespace geoforge::pipeline
