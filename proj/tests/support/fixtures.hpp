#pragma once

// Loaders for the bundled seeds and the test data files, shared by the unit
// tests and the acceptance runner.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoforge/cdl.hpp"

namespace fixtures {

inline std::string source_path(const std::string& rel) { return std::string(GEOFORGE_SOURCE_DIR) + "/" + rel; }

inline nlohmann::json read_json(const std::string& rel) {
  std::ifstream in(source_path(rel));
  if (!in) throw std::runtime_error("cannot open " + rel);
  return nlohmann::json::parse(in);
}

inline geoforge::cdl::FormalProblem parse_lines(const nlohmann::json& lines, const std::string& id) {
  std::string src;
  for (const auto& l : lines) src += l.get<std::string>() + "\n";
  auto r = geoforge::cdl::parse_problem(src, id);
  if (!r.ok()) throw std::runtime_error(id + ": " + r.diagnostics.front().message);
  return r.problem;
}

inline std::vector<geoforge::cdl::FormalProblem> seeds() {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(source_path("data/seeds"))) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<geoforge::cdl::FormalProblem> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    auto r = geoforge::cdl::parse_problem_json(nlohmann::json::parse(in), f.stem().string());
    if (!r.ok()) throw std::runtime_error(f.string() + ": " + r.diagnostics.front().message);
    out.push_back(r.problem);
  }
  return out;
}

struct Oracle {
  std::string name;
  geoforge::cdl::FormalProblem problem;
  geoforge::Number expected;
};

inline std::vector<Oracle> oracles() {
  std::vector<Oracle> out;
  for (const auto& o : read_json("tests/data/oracle.json")) {
    out.push_back({o["name"], parse_lines(o["cdl"], o["name"]), *geoforge::Number::parse(o["expected"].get<std::string>())});
  }
  return out;
}

struct LayoutSpec {
  std::string name;
  geoforge::cdl::FormalProblem problem;
};

inline std::vector<LayoutSpec> layout_specs(bool feasible) {
  std::vector<LayoutSpec> out;
  const auto all = read_json("tests/data/layout_golden.json");
  for (const auto& s : all.at(feasible ? "feasible" : "infeasible")) {
    out.push_back({s["name"], parse_lines(s["cdl"], s["name"])});
  }
  return out;
}

}  // namespace fixtures
