#include <httplib.h>

#include <cstdlib>

#include "geoforge/verbalize.hpp"

namespace geoforge::verbalize {

std::string rewrite_prompt(const std::string& problem, const std::string& hint) {
  return "Given a geometry problem and its answer hint, write a answer to the problem. Ensure the answer is correct, "
         "concise, easy to understand, and written with clarity and natural flow.\n\n"
         "Guidelines\n"
         "1. Refer to the answer hint, but do not use the information in it as given conditions.\n"
         "2. Only output the solution, without any additional information.\n\n"
         "Problem\n" +
         problem + "\n\nHint\n" + hint;
}

RewriteOutcome rewrite(const std::string& problem, const std::string& hint, const RewriterConfig* config) {
  RewriteOutcome out{hint, false, ""};
  if (config == nullptr || config->url.empty()) {
    out.diagnostic = "no rewriter configured";
    return out;
  }
  // Split "scheme://host[:port]/path".
  const auto& url = config->url;
  auto scheme_end = url.find("://");
  auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  if (!client.is_valid()) {
    out.diagnostic = "unsupported rewriter url " + url;
    return out;
  }
  auto secs = static_cast<time_t>(config->timeout_seconds);
  auto usecs = static_cast<time_t>((config->timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (const char* key = std::getenv(config->api_key_env.c_str()); key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  nlohmann::json body{{"prompt", rewrite_prompt(problem, hint)}};
  if (!config->model.empty()) body["model"] = config->model;
  const std::string payload = body.dump();

  for (int attempt = 0; attempt <= std::max(0, config->retries); ++attempt) {
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      out.diagnostic = "rewriter request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      out.diagnostic = "rewriter returned HTTP " + std::to_string(res->status);
      continue;
    }
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string() ||
        j["text"].get<std::string>().empty()) {
      out.diagnostic = "rewriter response has no text";
      continue;
    }
    out.text = j["text"].get<std::string>();
    out.rewriter_used = true;
    out.diagnostic.clear();
    return out;
  }
  return out;
}

}  // namespace geoforge::verbalize
