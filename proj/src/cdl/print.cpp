#include <sstream>

#include "geoforge/cdl.hpp"

namespace geoforge::cdl {
namespace {

std::string join_points(const PointTuple& t) {
  std::string s;
  for (const auto& p : t) s += p;
  return s;
}

std::string call(std::string_view name, const std::vector<PointTuple>& args) {
  std::string s(name);
  s += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) s += ',';
    s += join_points(args[i]);
  }
  s += ')';
  return s;
}

}  // namespace

std::string print_statement(const ConstructionFact& f) { return call(name_of(f.kind), f.args); }

std::string print_statement(const RelationFact& f) { return call(name_of(f.predicate), f.args); }

std::string print_statement(const MetricFact& f) {
  return "Equal(" + call(name_of(f.quantity), {f.args}) + "," + f.value.to_string() + ")";
}

std::string print_statement(const StatementFact& f) {
  return std::visit([](const auto& x) { return print_statement(x); }, f);
}

std::string print_statement(const Goal& g) { return "Value(" + call(name_of(g.quantity), {g.args}) + ")"; }

std::string print_problem(const FormalProblem& p) {
  std::ostringstream out;
  for (const auto& c : p.constructions) out << print_statement(c) << '\n';
  for (const auto& f : p.text_facts) out << print_statement(f) << '\n';
  for (const auto& f : p.image_facts) out << "image: " << print_statement(f) << '\n';
  if (p.goal) out << print_statement(*p.goal) << '\n';
  return out.str();
}

nlohmann::json to_json(const FormalProblem& p) {
  nlohmann::json j;
  j["problem_id"] = p.id;
  auto& c = j["construction_cdl"] = nlohmann::json::array();
  for (const auto& f : p.constructions) c.push_back(print_statement(f));
  auto& t = j["text_cdl"] = nlohmann::json::array();
  for (const auto& f : p.text_facts) t.push_back(print_statement(f));
  auto& i = j["image_cdl"] = nlohmann::json::array();
  for (const auto& f : p.image_facts) i.push_back(print_statement(f));
  j["goal_cdl"] = p.goal ? nlohmann::json(print_statement(*p.goal)) : nlohmann::json();
  return j;
}

bool FormalProblem::same_structure(const FormalProblem& other) const {
  return constructions == other.constructions && text_facts == other.text_facts &&
         image_facts == other.image_facts && goal == other.goal;
}

}  // namespace geoforge::cdl
