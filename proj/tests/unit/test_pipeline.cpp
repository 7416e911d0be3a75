#include <doctest.h>

#include <atomic>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "fixtures.hpp"
#include "geoforge/pipeline.hpp"
#include "geoforge/render.hpp"

using namespace geoforge;
using namespace geoforge::pipeline;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("geoforge_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<nlohmann::json> rows(const fs::path& out) {
  std::vector<nlohmann::json> v;
  std::ifstream in(out / "dataset.jsonl");
  for (std::string line; std::getline(in, line);) v.push_back(nlohmann::json::parse(line));
  return v;
}

PipelineConfig fixture_config(const fs::path& out, int workers = 1) {
  PipelineConfig c;
  c.seed_paths = {fixtures::source_path("data/seeds")};
  c.out_dir = out;
  c.per_seed = 8;
  c.seed = 42;
  c.workers = workers;
  return c;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

const std::string kTriangle =
    "Shape(AB,BC,CA)\nEqual(MeasureOfAngle(ABC),50)\nEqual(MeasureOfAngle(BCA),60)\n"
    "Value(MeasureOfAngle(CAB))\n";

}  // namespace

TEST_CASE("run_pipeline: counters reconcile on the fixture seeds") {
  auto out = scratch("counters");
  auto stats = run_pipeline(fixture_config(out));
  CHECK(stats.seeds_read == 10);
  CHECK(stats.seeds_valid == 10);
  CHECK(stats.emitted <= 80);
  CHECK(stats.emitted > 0);
  CHECK(stats.attempted == stats.accepted + stats.total(stats.rejections));
  CHECK(stats.emitted == stats.accepted - stats.total(stats.late_rejections));
  CHECK(stats.consistent());
  for (const auto& [reason, n] : stats.rejections) CHECK(is_synthesis_reason(reason));
  for (const auto& [reason, n] : stats.late_rejections) CHECK_FALSE(is_synthesis_reason(reason));

  auto all = rows(out);
  CHECK(static_cast<int>(all.size()) == stats.emitted);
  std::set<std::string> ids;
  std::map<std::string, int> per_seed;
  for (const auto& r : all) {
    const std::string id = r["id"];
    CHECK(ids.insert(id).second);
    const std::string seed = r["provenance"]["seed_id"];
    CHECK(id == record_id(seed, per_seed[seed]++));
    CHECK(r["image"] == "images/" + id + ".png");
    CHECK(fs::exists(out / r["image"].get<std::string>()));
    CHECK(fs::exists(out / "images" / (id + ".svg")));
    CHECK(r["answer"].is_number());
    CHECK(verbalize::verify_answer(r["solution"].get<std::string>(), r["answer"].get<double>()));
    CHECK(r["question"].get<std::string>().rfind("As shown in the figure, ", 0) == 0);
  }
  for (const auto& [seed, n] : per_seed) CHECK(n <= 8);

  auto saved = RunStats::from_json(nlohmann::json::parse(slurp(out / "stats.json")));
  CHECK(saved.emitted == stats.emitted);
  CHECK(saved.consistent());
  fs::remove_all(out);
}

TEST_CASE("run_pipeline: output does not depend on repetition or worker count") {
  auto a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  run_pipeline(fixture_config(a, 1));
  run_pipeline(fixture_config(b, 1));
  run_pipeline(fixture_config(c, 4));
  const auto jsonl = slurp(a / "dataset.jsonl");
  CHECK(jsonl == slurp(b / "dataset.jsonl"));
  CHECK(jsonl == slurp(c / "dataset.jsonl"));
  int images = 0;
  for (const auto& e : fs::directory_iterator(a / "images")) {
    auto name = e.path().filename();
    const auto bytes = slurp(e.path());
    CHECK(bytes == slurp(b / "images" / name));
    CHECK(bytes == slurp(c / "images" / name));
    ++images;
  }
  CHECK(images == 2 * static_cast<int>(rows(a).size()));

  // A different global seed gives a different dataset.
  auto d = scratch("det_d");
  auto cfg = fixture_config(d);
  cfg.seed = 43;
  run_pipeline(cfg);
  CHECK(slurp(d / "dataset.jsonl") != jsonl);
  for (const auto& p : {a, b, c, d}) fs::remove_all(p);
}

TEST_CASE("run_pipeline: corrupted rewrites are dropped as VerifyFail") {
  auto out = scratch("faults");
  std::atomic<int> calls{0}, corrupted{0};
  Rewriter faulty = [&](const std::string&, const std::string& hint, const std::string&) {
    const int call = calls++;
    verbalize::RewriteOutcome r{"In short: " + hint, true, ""};
    if (derive_seed(99, "fault", static_cast<std::uint64_t>(call)) % 20 == 0) {
      ++corrupted;
      const auto cut = hint.rfind("The answer is ");
      const bool deg = hint.ends_with("°.");
      r.text = hint.substr(0, cut) + verbalize::answer_sentence(Number::real(*verbalize::extract_answer(hint) + 1), deg);
    }
    return r;
  };
  auto stats = run_pipeline(fixture_config(out), faulty);
  CHECK(corrupted > 0);
  CHECK(stats.late_rejections["VerifyFail"] == corrupted.load());
  CHECK(stats.consistent());
  CHECK(stats.rewrites == stats.emitted);
  for (const auto& r : rows(out)) {
    CHECK(r["provenance"]["rewriter_used"] == true);
    CHECK(r["solution"].get<std::string>().rfind("In short: ", 0) == 0);
    CHECK(verbalize::verify_answer(r["solution"].get<std::string>(), r["answer"].get<double>()));
  }
  fs::remove_all(out);
}

TEST_CASE("run_pipeline: an unreachable rewriter keeps the template solutions") {
  auto out = scratch("norewriter");
  auto cfg = fixture_config(out);
  cfg.seed_paths = {fixtures::source_path("data/seeds/thales_diameter.json")};
  cfg.per_seed = 2;
  cfg.rewriter = verbalize::RewriterConfig{"http://127.0.0.1:9/rewrite", "", "GEOFORGE_REWRITER_KEY", 0.2, 0};
  auto stats = run_pipeline(cfg);
  CHECK(stats.emitted > 0);
  CHECK(stats.rewrites == 0);
  for (const auto& r : rows(out)) CHECK(r["provenance"]["rewriter_used"] == false);
  fs::remove_all(out);
}

TEST_CASE("ingest_seeds: bad files become diagnostics") {
  auto dir = scratch("ingest");
  for (const auto& e : fs::directory_iterator(fixtures::source_path("data/seeds"))) {
    fs::copy_file(e.path(), dir / e.path().filename());
  }
  write(dir / "zz_broken.json", "{\"construction_cdl\": [\"Shape(AB,BC,CA)\"");
  write(dir / "zz_empty.cdl", "  \n");
  write(dir / "zz_unknown.cdl", "Shape(AB,BC,CA)\nFrobnicate(ABC)\n");
  write(dir / "zz_undeclared.cdl", "Shape(AB,BC,CA)\nEqual(LengthOfLine(XY),3)\n");
  write(dir / "zz_good.cdl", kTriangle);
  write(dir / "zz_pair.json",
        "[{\"construction_cdl\":[\"Shape(AB,BC,CA)\"],\"text_cdl\":[\"Equal(LengthOfLine(AB),3)\"]}, 7]");
  write(dir / "notes.md", "ignored");

  auto r = ingest_seeds({dir});
  CHECK(r.read == 10 + 7);
  CHECK(r.seeds.size() == 10 + 2);
  CHECK(r.diagnostics.size() == 5);
  std::set<std::string> bad;
  for (const auto& d : r.diagnostics) bad.insert(fs::path(d.source).filename().string());
  CHECK(bad == std::set<std::string>{"zz_broken.json", "zz_empty.cdl", "zz_unknown.cdl", "zz_undeclared.cdl",
                                     "zz_pair.json#1"});
  std::set<std::string> ids;
  for (const auto& s : r.seeds) ids.insert(s.problem.id);
  CHECK(ids.contains("zz_good"));
  CHECK(ids.contains("zz_pair_0"));

  // The closure is there for every retained seed.
  for (const auto& s : r.seeds) CHECK(s.m_all.size() >= s.m_p.size());
  fs::remove_all(dir);
}

TEST_CASE("ingest_seeds: nothing valid aborts") {
  auto dir = scratch("ingest_none");
  write(dir / "a.cdl", "");
  write(dir / "b.json", "not json");
  CHECK_THROWS_AS(ingest_seeds({dir}), PipelineError);
  fs::remove_all(dir);
}

TEST_CASE("ingest_seeds: a deduction that runs out of time keeps its partial closure") {
  auto dir = scratch("ingest_timeout");
  write(dir / "t.cdl", kTriangle);
  engine::DeductionBudget tight;
  tight.timeout_seconds = 0.0;
  auto r = ingest_seeds({dir}, tight);
  REQUIRE(r.seeds.size() == 1);
  CHECK(r.seeds[0].deduction.timed_out);
  CHECK(r.seeds[0].m_p.size() == 2);
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].message.find("timed out") != std::string::npos);

  auto full = ingest_seeds({dir});
  CHECK_FALSE(full.seeds[0].deduction.timed_out);
  CHECK(full.seeds[0].m_all.size() > r.seeds[0].m_all.size());
  fs::remove_all(dir);
}

TEST_CASE("PipelineConfig::check") {
  auto good = fixture_config(scratch("cfg"));
  CHECK_NOTHROW(good.check());
  auto c = good;
  c.per_seed = 0;
  CHECK_THROWS_AS(c.check(), PipelineError);
  c = good;
  c.sizes = {224, 100};
  CHECK_THROWS_AS(c.check(), PipelineError);
  c = good;
  c.seed_paths = {"/nonexistent/seeds"};
  CHECK_THROWS_AS(c.check(), PipelineError);
  c = good;
  c.workers = 0;
  CHECK_THROWS_AS(c.check(), PipelineError);
  fs::remove_all(good.out_dir);
}

TEST_CASE("run_pipeline: unwritable output directory is fatal") {
  auto dir = scratch("unwritable");
  write(dir / "file", "x");
  auto cfg = fixture_config(dir / "file" / "out");
  CHECK_THROWS_AS(run_pipeline(cfg), PipelineError);
  fs::remove_all(dir);
}

namespace {

InstructionRecord sample_record(const std::string& id, Number answer) {
  InstructionRecord r;
  r.id = id;
  r.question = "As shown in the figure, find x.";
  r.solution = "The answer is " + answer.display() + ".";
  r.answer = answer;
  r.provenance.seed_id = "fg7k_12";
  r.png = {0x89, 'P', 'N', 'G'};
  r.svg = "<svg/>";
  r.problem.id = id;
  return r;
}

}  // namespace

TEST_CASE("emit_record: row, image and idempotence") {
  auto out = scratch("emit");
  auto rec = sample_record(record_id("fg7k_12", 3), Number::ratio(5, 2));
  CHECK(rec.id == "fg7k_12_003");
  emit_record(rec, out);
  CHECK(fs::exists(out / "images" / "fg7k_12_003.png"));
  CHECK(slurp(out / "images" / "fg7k_12_003.png") == std::string("\x89PNG"));
  auto first = slurp(out / "dataset.jsonl");
  CHECK(first.find("\"answer\":2.5") != std::string::npos);
  CHECK(first.find("5/2") == std::string::npos);
  auto j = nlohmann::json::parse(first);
  for (const char* key : {"id", "image", "question", "solution", "answer", "provenance"}) CHECK(j.contains(key));

  emit_record(rec, out);
  CHECK(slurp(out / "dataset.jsonl") == first);

  auto other = rec;
  other.question = "Something else.";
  CHECK_THROWS_AS(emit_record(other, out), PipelineError);

  emit_record(sample_record("fg7k_12_004", Number(30)), out);
  auto all = rows(out);
  REQUIRE(all.size() == 2);
  CHECK(all[1]["answer"].is_number_integer());
  CHECK(all[1]["answer"] == 30);
  fs::remove_all(out);
}

TEST_CASE("channel_leak") {
  auto r = cdl::parse_problem(
      "Shape(AB,BC,CA)\nEqual(LengthOfLine(AB),5)\nimage: Equal(LengthOfLine(BC),7)\nValue(LengthOfLine(CA))\n");
  REQUIRE(r.ok());
  CHECK(channel_leak(r.problem, "As shown in the figure, AB = 5. Find CA.", 1).empty());
  CHECK_FALSE(channel_leak(r.problem, "As shown in the figure, AB = 5 and BC = 7. Find CA.", 1).empty());
  CHECK_FALSE(channel_leak(r.problem, "As shown in the figure, AB = 5. Find CA.", 0).empty());
}
