#include "optiroute/analyzer.hpp"

#include <cmath>
#include <iostream>
#include <regex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "optiroute/error.hpp"

namespace optiroute {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw Error(ErrorCode::InvalidArgument, "invalid analyzer endpoint URL: " + url);
  }
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

}  // namespace

TaskProfile parse_analyzer_reply(std::string_view body) {
  const auto doc = nlohmann::json::parse(body.begin(), body.end());
  if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, "reply is not an object");
  const auto task = parse_task_type(doc.at("task_type").get<std::string>());
  if (!task) throw Error(ErrorCode::InvalidArgument, "unknown task_type in reply");
  const auto domain = parse_domain(doc.at("domain").get<std::string>());
  if (!domain) throw Error(ErrorCode::InvalidArgument, "unknown domain in reply");
  const double complexity = doc.at("complexity").get<double>();
  if (!std::isfinite(complexity) || !in_unit_interval(complexity)) {
    throw Error(ErrorCode::InvalidArgument, "complexity outside [0,1] in reply");
  }
  return {*task, *domain, complexity};
}

Analysis external_analyze(const std::string& endpoint, std::string_view text,
                          std::chrono::milliseconds timeout, const PruneConfig& cfg) {
  try {
    if (timeout.count() <= 0) throw Error(ErrorCode::InvalidArgument, "timeout must be > 0");
    const auto ep = split_url(endpoint);
    httplib::Client client(ep.origin);
    const auto sec = static_cast<time_t>(timeout.count() / 1000);
    const auto usec = static_cast<time_t>((timeout.count() % 1000) * 1000);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    const nlohmann::json request = {{"query", std::string(text)}};
    auto res = client.Post(ep.path, request.dump(), "application/json");
    if (!res) {
      throw Error(ErrorCode::BackendFailure,
                  "analyzer request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::BackendFailure,
                  "analyzer returned HTTP " + std::to_string(res->status));
    }
    return {parse_analyzer_reply(res->body), "external"};
  } catch (const std::exception& e) {
    std::cerr << "optiroute: external analyzer fallback: " << e.what() << '\n';
  }
  return {analyze(text, cfg), "fallback-heuristic"};
}

AnalyzeFn external_analyzer(std::string endpoint, std::chrono::milliseconds timeout,
                            PruneConfig cfg) {
  validate(cfg);
  return [endpoint = std::move(endpoint), timeout, cfg](std::string_view text) {
    return external_analyze(endpoint, text, timeout, cfg);
  };
}

}  // namespace optiroute
