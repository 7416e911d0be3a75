#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "geoforge/pipeline.hpp"

namespace geoforge::pipeline {
namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw PipelineError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string parse_errors(const cdl::ParseResult& r) {
  std::string out;
  for (const auto& d : r.diagnostics) {
    if (!out.empty()) out += "; ";
    out += d.code + (d.line > 0 ? " at line " + std::to_string(d.line) : "") + ": " + d.message;
  }
  return out;
}

bool seed_extension(const fs::path& p) {
  auto ext = p.extension().string();
  return ext == ".json" || ext == ".cdl" || ext == ".txt";
}

}  // namespace

std::vector<fs::path> expand_seed_paths(const std::vector<fs::path>& paths) {
  std::vector<fs::path> out;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && seed_extension(e.path())) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

IngestResult ingest_seeds(const std::vector<fs::path>& paths, const engine::DeductionBudget& budget) {
  IngestResult out;
  std::set<std::string> ids;

  auto take = [&](const std::string& source, const cdl::ParseResult& parsed) {
    if (!parsed.ok()) {
      out.diagnostics.push_back({source, parse_errors(parsed)});
      return;
    }
    const auto& p = parsed.problem;
    if (auto report = cdl::validate(p); !report.ok()) {
      std::string msg;
      for (const auto& v : report.violations) {
        if (!msg.empty()) msg += "; ";
        msg += std::string(cdl::name_of(v.kind)) + ": " + v.detail;
      }
      out.diagnostics.push_back({source, msg});
      return;
    }
    if (!ids.insert(p.id).second) {
      out.diagnostics.push_back({source, "duplicate seed id " + p.id});
      return;
    }
    auto seed = synth::formalize(p, budget);
    if (seed.deduction.inconsistent()) {
      out.diagnostics.push_back({source, "inconsistent statement: " + *seed.deduction.inconsistency});
      return;
    }
    if (seed.deduction.timed_out) {
      out.diagnostics.push_back({source, "deduction timed out; partial closure kept"});
    }
    out.seeds.push_back(std::move(seed));
  };

  for (const auto& file : expand_seed_paths(paths)) {
    const std::string source = file.string();
    const std::string stem = file.stem().string();
    std::string text;
    try {
      text = read_file(file);
    } catch (const PipelineError& e) {
      ++out.read;
      out.diagnostics.push_back({source, e.what()});
      continue;
    }
    if (blank(text)) {
      ++out.read;
      out.diagnostics.push_back({source, "empty file"});
      continue;
    }
    if (file.extension() == ".json") {
      auto j = nlohmann::json::parse(text, nullptr, false);
      if (j.is_discarded() || !(j.is_object() || j.is_array())) {
        ++out.read;
        out.diagnostics.push_back({source, "malformed JSON"});
        continue;
      }
      if (j.is_object()) {
        ++out.read;
        take(source, cdl::parse_problem_json(j, stem));
      } else {
        for (std::size_t i = 0; i < j.size(); ++i) {
          ++out.read;
          const auto src = source + "#" + std::to_string(i);
          if (!j[i].is_object()) {
            out.diagnostics.push_back({src, "entry is not an object"});
            continue;
          }
          take(src, cdl::parse_problem_json(j[i], stem + "_" + std::to_string(i)));
        }
      }
    } else {
      ++out.read;
      take(source, cdl::parse_problem(text, stem));
    }
  }
  if (out.seeds.empty()) {
    std::string msg = "no valid seed among " + std::to_string(out.read) + " read";
    if (!out.diagnostics.empty()) msg += " (first: " + out.diagnostics.front().source + ": " + out.diagnostics.front().message + ")";
    throw PipelineError(msg);
  }
  return out;
}

}  // namespace geoforge::pipeline
