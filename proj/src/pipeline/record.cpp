#include <algorithm>
#include <cmath>
#include <cstdio>

#include "geoforge/pipeline.hpp"
#include "geoforge/render.hpp"

namespace geoforge::pipeline {
namespace {

nlohmann::json metric_list(const engine::MetricSet& ms) {
  auto out = nlohmann::json::array();
  for (const auto& m : ms) out.push_back(engine::symbol_text(m.symbol) + " = " + m.value.to_string());
  return out;
}

void write_bytes(const fs::path& p, const void* data, std::size_t n) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw PipelineError("cannot write " + p.string());
}

void write_text(const fs::path& p, const std::string& s) { write_bytes(p, s.data(), s.size()); }

bool close(double a, double b) { return std::fabs(a - b) <= std::max(1e-4, 1e-3 * std::fabs(b)); }

}  // namespace

std::string record_id(const std::string& seed_id, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", index);
  return seed_id + "_" + buf;
}

nlohmann::json InstructionRecord::to_json() const {
  nlohmann::json j;
  j["id"] = id;
  j["image"] = image_path();
  j["question"] = question;
  j["solution"] = solution;
  if (answer.is_integer()) {
    j["answer"] = answer.num();
  } else {
    j["answer"] = answer.value();
  }
  j["provenance"] = {
      {"seed_id", provenance.seed_id},
      {"attempt", provenance.attempt},
      {"swap", {{"n", provenance.swap.n}, {"removed", metric_list(provenance.swap.removed)},
                {"added", metric_list(provenance.swap.added)}}},
      {"goal", std::string(synth::name_of(provenance.goal))},
      {"rewriter_used", provenance.rewriter_used},
      {"short_edge", provenance.short_edge},
      {"cdl", cdl::to_json(problem)},
  };
  return j;
}

void write_record_files(const InstructionRecord& record, const fs::path& out_dir) {
  write_bytes(out_dir / "images" / (record.id + ".png"), record.png.data(), record.png.size());
  write_text(out_dir / "images" / (record.id + ".svg"), record.svg);
  if (record.trace) {
    fs::create_directories(out_dir / "traces");
    write_text(out_dir / "traces" / (record.id + ".json"), record.trace->dump(2) + "\n");
  }
  if (record.layout) {
    fs::create_directories(out_dir / "layouts");
    write_text(out_dir / "layouts" / (record.id + ".json"), record.layout->dump(2) + "\n");
  }
}

DatasetWriter::DatasetWriter(const fs::path& out_dir, bool truncate) : out_(out_dir) {
  std::error_code ec;
  fs::create_directories(out_ / "images", ec);
  if (ec) throw PipelineError("cannot create " + (out_ / "images").string() + ": " + ec.message());
  const auto path = out_ / "dataset.jsonl";
  if (!truncate && fs::exists(path)) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (!j.is_discarded() && j.contains("id")) rows_[j["id"].get<std::string>()] = line;
    }
  }
  jsonl_.open(path, truncate ? std::ios::trunc : std::ios::app);
  if (!jsonl_) throw PipelineError("cannot write " + path.string());
}

void DatasetWriter::emit(const InstructionRecord& record, bool write_files) {
  if (write_files) write_record_files(record, out_);
  std::string row = record.to_json().dump();
  if (auto it = rows_.find(record.id); it != rows_.end()) {
    if (it->second != row) throw PipelineError("conflicting row for id " + record.id);
    return;
  }
  jsonl_ << row << '\n';
  jsonl_.flush();
  if (!jsonl_) throw PipelineError("cannot append to " + (out_ / "dataset.jsonl").string());
  rows_.emplace(record.id, std::move(row));
}

void emit_record(const InstructionRecord& record, const fs::path& out_dir) {
  DatasetWriter(out_dir, false).emit(record);
}

// ---- stats -------------------------------------------------------------------

bool is_synthesis_reason(const std::string& reason) {
  using synth::Rejection;
  for (auto r : {Rejection::SeedExhausted, Rejection::NoGoalAvailable, Rejection::Invalid, Rejection::Inconsistent,
                 Rejection::NoInference, Rejection::ZeroStep, Rejection::Duplicate}) {
    if (reason == synth::name_of(r)) return true;
  }
  return false;
}

int RunStats::total(const std::map<std::string, int>& m) const {
  int n = 0;
  for (const auto& [k, v] : m) n += v;
  return n;
}

bool RunStats::consistent() const {
  return attempted == accepted + total(rejections) && emitted == accepted - total(late_rejections) && emitted >= 0;
}

nlohmann::json RunStats::to_json() const {
  auto diags = nlohmann::json::array();
  for (const auto& d : diagnostics) diags.push_back({{"source", d.source}, {"message", d.message}});
  return {{"seeds_read", seeds_read},
          {"seeds_valid", seeds_valid},
          {"attempted", attempted},
          {"accepted", accepted},
          {"emitted", emitted},
          {"rejections", rejections},
          {"late_rejections", late_rejections},
          {"gave_up", gave_up},
          {"cross_seed_duplicates", cross_seed_duplicates},
          {"rewrites", rewrites},
          {"wall_seconds", wall_seconds},
          {"diagnostics", diags}};
}

RunStats RunStats::from_json(const nlohmann::json& j) {
  RunStats s;
  s.seeds_read = j.at("seeds_read");
  s.seeds_valid = j.at("seeds_valid");
  s.attempted = j.at("attempted");
  s.accepted = j.at("accepted");
  s.emitted = j.at("emitted");
  s.rejections = j.at("rejections").get<std::map<std::string, int>>();
  s.late_rejections = j.at("late_rejections").get<std::map<std::string, int>>();
  s.gave_up = j.value("gave_up", 0);
  s.cross_seed_duplicates = j.value("cross_seed_duplicates", 0);
  s.rewrites = j.value("rewrites", 0);
  s.wall_seconds = j.value("wall_seconds", 0.0);
  for (const auto& d : j.value("diagnostics", nlohmann::json::array())) {
    s.diagnostics.push_back({d.at("source"), d.at("message")});
  }
  return s;
}

// ---- one candidate -------------------------------------------------------------

std::string channel_leak(const cdl::FormalProblem& p, const std::string& question, int drawn_annotations) {
  std::vector<double> text_values, image_values;
  for (const auto& f : p.text_facts) {
    if (const auto* m = std::get_if<cdl::MetricFact>(&f)) text_values.push_back(m->value.value());
  }
  for (const auto& f : p.image_facts) {
    if (const auto* m = std::get_if<cdl::MetricFact>(&f)) image_values.push_back(m->value.value());
  }
  if (drawn_annotations != static_cast<int>(image_values.size())) {
    return std::to_string(image_values.size()) + " image values but " + std::to_string(drawn_annotations) + " drawn";
  }
  for (double t : verbalize::numeric_tokens(question)) {
    bool stated = std::any_of(text_values.begin(), text_values.end(), [&](double v) { return close(t, v); });
    if (stated) continue;
    for (double w : image_values) {
      if (close(t, w)) return "question states image value " + Number::real(w).display();
    }
  }
  return {};
}

LateOutcome build_record(const synth::SynthesisCandidate& candidate, const std::string& id, std::uint64_t stream_seed,
                         const PipelineConfig& config, const Rewriter& rewriter) {
  LateOutcome out;
  const auto& p = candidate.problem;
  try {
    Rng rng(stream_seed);
    const int edge = config.sizes[static_cast<std::size_t>(rng.below(config.sizes.size()))];

    auto system = layout::compile_constraints(p);
    std::optional<layout::LayoutSolution> solution;
    std::optional<render::RenderedDiagram> image;
    for (int k = 0; k < std::max(1, config.layout_attempts) && !image; ++k) {
      Rng layout_rng(derive_seed(stream_seed, "layout", static_cast<std::uint64_t>(k)));
      try {
        solution = layout::optimize(system, layout_rng, config.layout);
        auto spec = render::make_diagram(p, system, *solution, edge);
        spec.id = id;
        image = render::render_diagram(spec);
      } catch (const layout::LayoutError& e) {
        out.reason = e.kind;
        out.detail = e.what();
      } catch (const render::RenderError& e) {
        out.reason = e.kind;
        out.detail = e.what();
      }
    }
    if (!image) return out;

    const auto& bank = verbalize::TemplateBank::builtin();
    Rng text_rng(derive_seed(stream_seed, "text"));
    auto question = verbalize::verbalize_problem(p, bank, text_rng);
    auto hint = verbalize::verbalize_solution(candidate.result, candidate.steps, bank, &text_rng);

    int drawn = static_cast<int>(std::count_if(image->labels.labels.begin(), image->labels.labels.end(),
                                               [](const render::Label& l) { return l.role == render::Label::Role::Value; }));
    if (auto leak = channel_leak(p, question, drawn); !leak.empty()) {
      out.reason = "ChannelLeak";
      out.detail = leak;
      return out;
    }

    InstructionRecord rec;
    rec.id = id;
    rec.question = question;
    rec.solution = hint;
    if (rewriter) {
      auto r = rewriter(question, hint, id);
      rec.solution = r.text;
      rec.provenance.rewriter_used = r.rewriter_used;
    } else if (config.rewriter) {
      auto r = verbalize::rewrite(question, hint, &*config.rewriter);
      rec.solution = r.text;
      rec.provenance.rewriter_used = r.rewriter_used;
    }
    if (!verbalize::verify_answer(rec.solution, candidate.goal_value.value())) {
      out.reason = "VerifyFail";
      out.detail = "solution does not end in " + candidate.goal_value.display();
      return out;
    }

    rec.answer = candidate.goal_value;
    rec.provenance.seed_id = p.id.substr(0, p.id.rfind('_'));
    rec.provenance.attempt = candidate.attempt;
    rec.provenance.swap = candidate.swap;
    rec.provenance.goal = candidate.provenance;
    rec.provenance.short_edge = edge;
    rec.png = std::move(image->png);
    rec.svg = std::move(image->svg);
    if (config.dump_trace) rec.trace = engine::trace_to_json(candidate.result, candidate.steps);
    if (config.dump_layout) rec.layout = layout::to_json(system, *solution, config.layout);
    rec.problem = p;
    rec.problem.id = id;
    rec.problem_key = synth::problem_key(p);
    out.record = std::move(rec);
  } catch (const layout::LayoutError& e) {
    out.reason = e.kind;
    out.detail = e.what();
  } catch (const verbalize::VerbalizeError& e) {
    out.reason = e.kind;
    out.detail = e.what();
  } catch (const std::exception& e) {
    out.reason = "InternalError";
    out.detail = e.what();
  }
  return out;
}

}  // namespace geoforge::pipeline
