#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <set>
#include <thread>

#include "geoforge/pipeline.hpp"
#include "geoforge/render.hpp"

namespace geoforge::pipeline {
namespace {

struct SeedOutput {
  synth::SynthesisBatch batch;
  std::vector<InstructionRecord> records;
  std::optional<SeedDiagnostic> failure;
};

}  // namespace

void PipelineConfig::check() const {
  if (per_seed < 1) throw PipelineError("per-seed count must be at least 1");
  if (seed_paths.empty()) throw PipelineError("no seed paths given");
  for (const auto& p : seed_paths) {
    if (!fs::exists(p)) throw PipelineError("seed path does not exist: " + p.string());
  }
  if (out_dir.empty()) throw PipelineError("no output directory given");
  if (sizes.empty()) throw PipelineError("no image sizes given");
  for (int s : sizes) {
    if (std::find(std::begin(render::kShortEdges), std::end(render::kShortEdges), s) == std::end(render::kShortEdges)) {
      throw PipelineError("image size " + std::to_string(s) + " is not one of 112, 224, 336");
    }
  }
  if (image_ratio < 0.0 || image_ratio > 1.0) throw PipelineError("image ratio must lie in [0, 1]");
  if (workers < 1) throw PipelineError("worker count must be at least 1");
  if (layout_attempts < 1) throw PipelineError("layout attempts must be at least 1");
}

RunStats run_pipeline(const PipelineConfig& config, const Rewriter& rewriter) {
  const auto start = std::chrono::steady_clock::now();
  config.check();
  DatasetWriter writer(config.out_dir);

  auto ingest = ingest_seeds(config.seed_paths, config.budget);
  RunStats stats;
  stats.seeds_read = ingest.read;
  stats.seeds_valid = static_cast<int>(ingest.seeds.size());
  stats.diagnostics = ingest.diagnostics;

  synth::SynthOptions options;
  options.image_ratio = config.image_ratio;
  options.attempts_per_problem = config.attempts_per_problem;
  options.budget = config.budget;

  const std::size_t n = ingest.seeds.size();
  std::vector<std::optional<SeedOutput>> done(n);
  std::set<std::string> keys;
  std::size_t next_flush = 0;
  std::mutex sink;
  std::exception_ptr fatal;

  // Rows leave in seed order; images are written by the worker that made them.
  auto flush = [&] {
    while (next_flush < n && done[next_flush]) {
      auto& out = *done[next_flush];
      if (out.failure) stats.diagnostics.push_back(*out.failure);
      int upfront = out.batch.attempts == 0 && out.batch.diagnostics.contains("SeedExhausted") ? 1 : 0;
      stats.attempted += out.batch.attempts + upfront;
      stats.accepted += static_cast<int>(out.batch.candidates.size());
      for (const auto& [reason, count] : out.batch.diagnostics) {
        if (reason == "GaveUp") {
          stats.gave_up += count;
        } else if (is_synthesis_reason(reason)) {
          stats.rejections[reason] += count;
        } else {
          stats.late_rejections[reason] += count;
          stats.accepted += count;
        }
      }
      for (auto& rec : out.records) {
        writer.emit(rec, false);
        ++stats.emitted;
        if (rec.provenance.rewriter_used) ++stats.rewrites;
        if (!keys.insert(rec.problem_key).second) ++stats.cross_seed_duplicates;
      }
      done[next_flush].reset();
      ++next_flush;
    }
  };

  auto run_seed = [&](std::size_t i) -> SeedOutput {
    const auto& seed = ingest.seeds[i];
    const std::string& seed_id = seed.problem.id;
    SeedOutput out;
    try {
      auto late = [&](synth::SynthesisCandidate& c) -> std::string {
        const auto id = record_id(seed_id, static_cast<int>(out.records.size()));
        const auto stream = derive_seed(config.seed, seed_id + "/late", static_cast<std::uint64_t>(c.attempt));
        auto outcome = build_record(c, id, stream, config, rewriter);
        if (!outcome.record) return outcome.reason.empty() ? std::string("InternalError") : outcome.reason;
        outcome.record->provenance.seed_id = seed_id;
        write_record_files(*outcome.record, config.out_dir);
        outcome.record->png.clear();
        outcome.record->svg.clear();
        out.records.push_back(std::move(*outcome.record));
        return {};
      };
      out.batch = synth::synthesize_batch(seed, config.per_seed, config.seed, options, late);
    } catch (const PipelineError&) {
      throw;
    } catch (const std::exception& e) {
      out.failure = SeedDiagnostic{seed_id, std::string("seed aborted: ") + e.what()};
      for (const auto& rec : out.records) {
        std::error_code ec;
        fs::remove(config.out_dir / "images" / (rec.id + ".png"), ec);
        fs::remove(config.out_dir / "images" / (rec.id + ".svg"), ec);
      }
      out.records.clear();
      out.batch = {};
    }
    return out;
  };

  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i; (i = cursor.fetch_add(1)) < n;) {
      std::exception_ptr error;
      std::optional<SeedOutput> out;
      try {
        out = run_seed(i);
      } catch (...) {
        error = std::current_exception();
      }
      std::lock_guard lock(sink);
      if (!error) {
        done[i] = std::move(out);
        try {
          flush();
        } catch (...) {
          error = std::current_exception();
        }
      }
      if (error) {
        if (!fatal) fatal = error;
        cursor = n;
        return;
      }
    }
  };
  const int threads = std::min<int>(config.workers, static_cast<int>(n));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream(config.out_dir / "stats.json") << stats.to_json().dump(2) << '\n';
  return stats;
}

}  // namespace geoforge::pipeline
