#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "geoforge/cdl.hpp"
#include "geoforge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace geoforge;

namespace {

int run_synth(pipeline::PipelineConfig config) {
  try {
    auto stats = pipeline::run_pipeline(config);
    std::printf("seeds %d/%d valid, %d attempted, %d accepted, %d emitted in %.1f s\n", stats.seeds_valid,
                stats.seeds_read, stats.attempted, stats.accepted, stats.emitted, stats.wall_seconds);
    for (const auto& d : stats.diagnostics) std::fprintf(stderr, "%s: %s\n", d.source.c_str(), d.message.c_str());
    return 0;
  } catch (const pipeline::PipelineError& e) {
    std::fprintf(stderr, "geoforge: %s\n", e.what());
    return 2;
  }
}

bool report(const std::string& source, const cdl::ParseResult& r) {
  if (!r.ok()) {
    for (const auto& d : r.diagnostics) {
      std::printf("%s:%d: %s: %s\n", source.c_str(), d.line, d.code.c_str(), d.message.c_str());
    }
    return false;
  }
  auto v = cdl::validate(r.problem);
  for (const auto& x : v.violations) {
    std::printf("%s: %s: %s\n", source.c_str(), std::string(cdl::name_of(x.kind)).c_str(), x.detail.c_str());
  }
  if (v.ok()) std::printf("%s: ok\n", source.c_str());
  return v.ok();
}

int run_validate(const fs::path& file) {
  std::ifstream in(file);
  if (!in) {
    std::fprintf(stderr, "geoforge: cannot read %s\n", file.c_str());
    return 2;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  bool ok = true;
  if (file.extension() == ".json") {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) {
      std::printf("%s: malformed JSON\n", file.c_str());
      return 1;
    }
    if (j.is_array()) {
      for (std::size_t i = 0; i < j.size(); ++i) {
        ok = report(file.string() + "#" + std::to_string(i), cdl::parse_problem_json(j[i], file.stem().string())) && ok;
      }
    } else {
      ok = report(file.string(), cdl::parse_problem_json(j, file.stem().string()));
    }
  } else {
    ok = report(file.string(), cdl::parse_problem(text, file.stem().string()));
  }
  return ok ? 0 : 1;
}

int run_stats(const fs::path& out) {
  std::ifstream in(out / "stats.json");
  if (!in) {
    std::fprintf(stderr, "geoforge: no stats.json in %s\n", out.c_str());
    return 2;
  }
  auto stats = pipeline::RunStats::from_json(nlohmann::json::parse(in));
  int rows = 0, missing = 0;
  std::ifstream jsonl(out / "dataset.jsonl");
  for (std::string line; std::getline(jsonl, line);) {
    if (line.empty()) continue;
    ++rows;
    auto j = nlohmann::json::parse(line);
    if (!fs::exists(out / j.at("image").get<std::string>())) ++missing;
  }
  std::printf("seeds read      %d\n", stats.seeds_read);
  std::printf("seeds valid     %d\n", stats.seeds_valid);
  std::printf("attempted       %d\n", stats.attempted);
  std::printf("accepted        %d\n", stats.accepted);
  std::printf("emitted         %d\n", stats.emitted);
  for (const auto& [k, v] : stats.rejections) std::printf("  synthesis %-16s %d\n", k.c_str(), v);
  for (const auto& [k, v] : stats.late_rejections) std::printf("  late      %-16s %d\n", k.c_str(), v);
  std::printf("gave up         %d\n", stats.gave_up);
  std::printf("cross-seed dups %d\n", stats.cross_seed_duplicates);
  std::printf("rewritten       %d\n", stats.rewrites);
  std::printf("wall time       %.1f s\n", stats.wall_seconds);
  std::printf("dataset rows    %d\n", rows);
  bool ok = stats.consistent() && rows == stats.emitted && missing == 0;
  if (!stats.consistent()) std::printf("counters do not reconcile\n");
  if (rows != stats.emitted) std::printf("row count differs from emitted\n");
  if (missing > 0) std::printf("%d images missing\n", missing);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthesize geometry instruction data from formal seed problems"};
  app.require_subcommand(1);

  pipeline::PipelineConfig config;
  std::vector<std::string> seeds;
  std::string out, sizes = "112,224,336", rewriter_url, rewriter_model, key_env = "GEOFORGE_REWRITER_KEY";
  double rewriter_timeout = 30.0;
  auto* synth = app.add_subcommand("synth", "Generate a dataset");
  synth->add_option("--seeds", seeds, "Seed files or directories")->required();
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--per-seed", config.per_seed, "Problems per seed")->capture_default_str();
  synth->add_option("--seed", config.seed, "Global random seed")->capture_default_str();
  synth->add_option("--image-ratio", config.image_ratio, "Chance a metric condition goes to the diagram")
      ->capture_default_str();
  synth->add_option("--sizes", sizes, "Shorter canvas edges to draw from")->capture_default_str();
  synth->add_option("--rewriter", rewriter_url, "HTTP endpoint of the solution rewriter");
  synth->add_option("--rewriter-model", rewriter_model, "Model name sent to the rewriter");
  synth->add_option("--rewriter-key-env", key_env, "Environment variable holding the rewriter key")
      ->capture_default_str();
  synth->add_option("--rewriter-timeout", rewriter_timeout, "Rewriter timeout in seconds")->capture_default_str();
  synth->add_option("--workers", config.workers, "Worker threads")->capture_default_str();
  synth->add_option("--max-rounds", config.budget.max_rounds, "Deduction rounds per problem")->capture_default_str();
  synth->add_option("--deduce-timeout", config.budget.timeout_seconds, "Deduction time limit per problem")
      ->capture_default_str();
  synth->add_option("--restarts", config.layout.restarts, "Layout restarts per optimizer run")->capture_default_str();
  synth->add_flag("--dump-trace", config.dump_trace, "Write traces/<id>.json");
  synth->add_flag("--dump-layout", config.dump_layout, "Write layouts/<id>.json");

  std::string file;
  auto* validate = app.add_subcommand("validate", "Parse and validate a seed file");
  validate->add_option("file", file, "CDL text or annotation JSON")->required();

  std::string stats_dir;
  auto* stats = app.add_subcommand("stats", "Summarize a finished run");
  stats->add_option("dir", stats_dir, "Output directory of a synth run")->required();

  CLI11_PARSE(app, argc, argv);

  if (*synth) {
    for (const auto& s : seeds) config.seed_paths.emplace_back(s);
    config.out_dir = out;
    config.sizes.clear();
    std::stringstream ss(sizes);
    for (std::string part; std::getline(ss, part, ',');) {
      try {
        config.sizes.push_back(std::stoi(part));
      } catch (const std::exception&) {
        std::fprintf(stderr, "geoforge: bad size '%s'\n", part.c_str());
        return 2;
      }
    }
    if (!rewriter_url.empty()) {
      verbalize::RewriterConfig rc;
      rc.url = rewriter_url;
      rc.model = rewriter_model;
      rc.api_key_env = key_env;
      rc.timeout_seconds = rewriter_timeout;
      config.rewriter = rc;
    }
    return run_synth(config);
  }
  if (*validate) return run_validate(file);
  return run_stats(stats_dir);
}
