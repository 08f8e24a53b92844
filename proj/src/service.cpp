#include "optiroute/service.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "optiroute/error.hpp"
#include "optiroute/serialize.hpp"

namespace optiroute {

using nlohmann::json;

namespace {

class RequestError : public Error {
public:
  RequestError(std::string field, const std::string& message)
      : Error(ErrorCode::InvalidArgument, message), field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) {
      throw RequestError(key, "unknown field \"" + key + "\" in " + where);
    }
  }
}

std::string resolve_path(const std::string& path, const std::string& base_dir) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

AdapterBinding parse_binding(const json& j, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, where + " must be an object");
  reject_unknown_keys(j, {"kind", "base_url", "token_env", "timeout_ms"}, where);
  AdapterBinding b;
  const auto kind = j.value("kind", std::string("echo"));
  if (kind == "echo") {
    b.kind = AdapterKind::echo;
  } else if (kind == "http") {
    b.kind = AdapterKind::http;
    b.base_url = j.at("base_url").get<std::string>();
  } else {
    throw Error(ErrorCode::ConfigError, where + ": unknown adapter kind \"" + kind + "\"");
  }
  b.token_env = j.value("token_env", std::string());
  b.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30'000));
  if (b.timeout.count() <= 0) throw Error(ErrorCode::ConfigError, where + ": timeout_ms must be > 0");
  return b;
}

// Resolves prefs/profile_name from a request object.
std::pair<PreferenceVector, bool> resolve_prefs(
    const json& body, const std::map<std::string, PreferenceVector, std::less<>>& profiles) {
  const bool has_prefs = body.contains("prefs");
  const bool has_profile = body.contains("profile_name");
  if (has_prefs && has_profile) {
    throw RequestError("prefs", "prefs and profile_name are mutually exclusive");
  }
  if (has_prefs) {
    try {
      return {prefs_from_json(body.at("prefs")), false};
    } catch (const Error& e) {
      throw RequestError("prefs", e.what());
    }
  }
  if (has_profile) {
    const auto& name = body.at("profile_name");
    if (!name.is_string()) throw RequestError("profile_name", "profile_name must be a string");
    auto it = profiles.find(name.get<std::string>());
    if (it == profiles.end()) {
      throw RequestError("profile_name", "unknown profile \"" + name.get<std::string>() + "\"");
    }
    return {it->second, false};
  }
  return {profiles.at(std::string(kBalancedProfile)), true};
}

}  // namespace

ServiceConfig parse_service_config(const json& doc, const std::string& base_dir) {
  try {
    if (!doc.is_object()) throw Error(ErrorCode::ConfigError, "config must be an object");
    reject_unknown_keys(doc,
                        {"listen", "catalog_path", "profiles", "adapters", "router", "prune",
                         "analyzer", "decision_log", "feedback_log", "decision_retention_hours",
                         "bearer_token_env"},
                        "config");
    ServiceConfig cfg;
    if (auto it = doc.find("listen"); it != doc.end()) {
      const auto listen = it->get<std::string>();
      const auto colon = listen.rfind(':');
      if (colon == std::string::npos) {
        throw Error(ErrorCode::ConfigError, "listen must be host:port");
      }
      cfg.listen_host = listen.substr(0, colon);
      cfg.listen_port = std::stoi(listen.substr(colon + 1));
    }
    if (!doc.contains("catalog_path")) throw Error(ErrorCode::ConfigError, "catalog_path missing");
    cfg.catalog_path = resolve_path(doc.at("catalog_path").get<std::string>(), base_dir);

    if (auto it = doc.find("profiles"); it != doc.end()) {
      for (const auto& [name, prefs] : it->items()) cfg.profiles[name] = prefs_from_json(prefs);
    }
    if (auto it = doc.find("adapters"); it != doc.end()) {
      reject_unknown_keys(*it, {"default", "bindings"}, "adapters");
      cfg.default_adapter.reset();
      if (auto d = it->find("default"); d != it->end() && !d->is_null()) {
        cfg.default_adapter = parse_binding(*d, "adapters.default");
      }
      if (auto b = it->find("bindings"); b != it->end()) {
        for (const auto& [id, binding] : b->items()) {
          cfg.bindings[id] = parse_binding(binding, "adapters.bindings." + id);
        }
      }
    }
    if (auto it = doc.find("router"); it != doc.end()) {
      reject_unknown_keys(*it, {"k", "min_reliability", "fallback_max_doublings"}, "router");
      cfg.router.k = it->value("k", cfg.router.k);
      cfg.router.min_reliability = it->value("min_reliability", cfg.router.min_reliability);
      cfg.router.fallback_max_doublings =
          it->value("fallback_max_doublings", cfg.router.fallback_max_doublings);
    }
    validate(cfg.router);
    if (auto it = doc.find("prune"); it != doc.end()) {
      reject_unknown_keys(*it, {"max_words", "head_words", "tail_words", "middle_sample_words", "seed"},
                          "prune");
      cfg.prune.max_words = it->value("max_words", cfg.prune.max_words);
      cfg.prune.head_words = it->value("head_words", cfg.prune.head_words);
      cfg.prune.tail_words = it->value("tail_words", cfg.prune.tail_words);
      cfg.prune.middle_sample_words = it->value("middle_sample_words", cfg.prune.middle_sample_words);
      cfg.prune.seed = it->value("seed", cfg.prune.seed);
    }
    validate(cfg.prune);
    if (auto it = doc.find("analyzer"); it != doc.end()) {
      reject_unknown_keys(*it, {"endpoint", "timeout_ms"}, "analyzer");
      if (it->contains("endpoint")) cfg.analyzer_endpoint = it->at("endpoint").get<std::string>();
      cfg.analyzer_timeout = std::chrono::milliseconds(it->value("timeout_ms", 500));
    }
    if (auto it = doc.find("decision_log"); it != doc.end()) {
      cfg.decision_log = resolve_path(it->get<std::string>(), base_dir);
    }
    if (auto it = doc.find("feedback_log"); it != doc.end()) {
      cfg.feedback_log = resolve_path(it->get<std::string>(), base_dir);
    }
    if (auto it = doc.find("decision_retention_hours"); it != doc.end()) {
      cfg.decision_retention = std::chrono::hours(it->get<long>());
    }
    if (auto it = doc.find("bearer_token_env"); it != doc.end()) {
      cfg.bearer_token_env = it->get<std::string>();
    }
    return cfg;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, std::string("invalid config: ") + e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("invalid config: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("invalid config: ") + e.what());
  }
}

ServiceConfig load_service_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::ConfigError, "config file is not valid JSON");
  const auto dir = std::filesystem::path(path).parent_path().string();
  return parse_service_config(doc, dir.empty() ? "." : dir);
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::EmptyQuery:
    case ErrorCode::ZeroPreferences:
    case ErrorCode::MalformedCatalog:
    case ErrorCode::SchemaViolation:
    case ErrorCode::EmptyBatch:
    case ErrorCode::ZeroVector: return 400;
    case ErrorCode::UnknownDecision: return 404;
    case ErrorCode::DuplicateFeedback: return 409;
    case ErrorCode::NoModelAvailable: return 422;
    case ErrorCode::BackendFailure: return 502;
    case ErrorCode::EmptyCatalog: return 503;
    case ErrorCode::BackendTimeout: return 504;
    default: return 500;
  }
}

Response error_response(const Error& e) {
  json body = {{"error", to_string(e.code())}, {"message", e.what()}};
  if (!e.details().empty()) body["details"] = e.details();
  if (auto* req = dynamic_cast<const RequestError*>(&e)) body["field"] = req->field();
  return {http_status(e.code()), std::move(body)};
}

Service::Service(ServiceConfig config)
    : config_(std::move(config)),
      decisions_(DecisionStoreOptions{config_.decision_log, config_.decision_retention}),
      feedback_(config_.feedback_log) {
  validate(config_.router);
  validate(config_.prune);
  if (!config_.profiles.contains(kBalancedProfile)) {
    config_.profiles[std::string(kBalancedProfile)] = PreferenceVector::uniform(0.5);
  }
  analyzer_ = config_.analyzer_endpoint
                  ? external_analyzer(*config_.analyzer_endpoint, config_.analyzer_timeout,
                                      config_.prune)
                  : heuristic_analyzer(config_.prune);
  if (config_.default_adapter) default_adapter_ = make_adapter(*config_.default_adapter);
  for (const auto& [id, binding] : config_.bindings) adapters_[id] = make_adapter(binding);

  try {
    auto cards = load_catalog_file(config_.catalog_path);
    check_bindings(normalize_catalog(cards));
    catalogs_.publish(std::move(cards));
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError,
                "cannot load catalog " + config_.catalog_path + ": " + e.what(), e.details());
  }
}

void Service::check_bindings(const NormalizedCatalog& catalog) const {
  if (default_adapter_) return;
  std::lock_guard lock(adapters_mutex_);
  std::vector<std::string> unbound;
  for (const auto& card : catalog.cards()) {
    if (!adapters_.contains(card.id)) unbound.push_back("model \"" + card.id + "\" has no adapter binding");
  }
  if (!unbound.empty()) throw Error(ErrorCode::SchemaViolation, unbound.front(), unbound);
}

void Service::set_adapter(const std::string& model_id, std::shared_ptr<BackendAdapter> adapter) {
  std::lock_guard lock(adapters_mutex_);
  adapters_[model_id] = std::move(adapter);
}

std::shared_ptr<BackendAdapter> Service::adapter_for(const std::string& model_id) const {
  std::lock_guard lock(adapters_mutex_);
  if (auto it = adapters_.find(model_id); it != adapters_.end()) return it->second;
  return default_adapter_;
}

Service::ResolvedRequest Service::resolve(const json& body) const {
  if (!body.is_object()) throw RequestError("", "request body must be a JSON object");
  reject_unknown_keys(body, {"query", "prefs", "profile_name", "k", "mode"}, "route request");
  ResolvedRequest req;
  auto q = body.find("query");
  if (q == body.end() || !q->is_string()) {
    throw RequestError("query", "query must be a string");
  }
  req.query = q->get<std::string>();
  std::tie(req.prefs, req.defaulted_prefs) = resolve_prefs(body, config_.profiles);
  req.router = config_.router;
  if (auto k = body.find("k"); k != body.end()) {
    if (!k->is_number_integer() || k->get<long long>() < 1) {
      throw RequestError("k", "k must be a positive integer");
    }
    req.router.k = k->get<std::size_t>();
  }
  return req;
}

RoutingDecision Service::route_and_persist(const ResolvedRequest& req,
                                           const CatalogHandle& catalog) {
  if (!catalog) throw Error(ErrorCode::EmptyCatalog, "no catalog loaded");
  const auto table = feedback_.table();
  RouteContext ctx{bias_source(*table), analyzer_, &ids_};
  auto decision = route(req.query, req.prefs, *catalog, req.router, ctx);
  if (req.defaulted_prefs) decision.tags.emplace_back("defaulted-prefs");
  decisions_.put(decision);
  return decision;
}

Response Service::handle_route(const json& body) {
  try {
    if (body.is_object() && body.value("mode", std::string("route_only")) == "infer") {
      return handle_infer(body);
    }
    if (body.is_object() && body.contains("mode") &&
        body.at("mode") != "route_only") {
      throw RequestError("mode", "mode must be \"route_only\" or \"infer\"");
    }
    const auto req = resolve(body);
    return {200, to_json(route_and_persist(req, catalogs_.current()))};
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response Service::handle_infer(const json& body) {
  RoutingDecision decision;
  try {
    const auto req = resolve(body);
    decision = route_and_persist(req, catalogs_.current());
  } catch (const Error& e) {
    return error_response(e);
  }
  const std::string query = body.at("query").get<std::string>();
  try {
    auto adapter = adapter_for(decision.selected);
    if (!adapter) {
      throw Error(ErrorCode::BackendFailure,
                  "no adapter bound for model \"" + decision.selected + "\"");
    }
    const auto start = std::chrono::steady_clock::now();
    std::string output = adapter->infer(decision.selected, query);
    const std::chrono::duration<double, std::milli> elapsed =
        std::chrono::steady_clock::now() - start;
    return {200, {{"decision", to_json(decision)},
                  {"output", std::move(output)},
                  {"latency_ms", elapsed.count()}}};
  } catch (const Error& e) {
    auto r = error_response(e);
    r.body["decision"] = to_json(decision);
    r.body["decision_id"] = decision.decision_id;
    return r;
  }
}

Response Service::handle_batch(const json& body) {
  try {
    if (!body.is_object()) throw RequestError("", "request body must be a JSON object");
    reject_unknown_keys(body, {"queries", "prefs", "profile_name", "sample_rate", "seed", "k"},
                        "batch request");
    auto qs = body.find("queries");
    if (qs == body.end() || !qs->is_array()) {
      throw RequestError("queries", "queries must be an array of strings");
    }
    std::vector<std::string> queries;
    for (const auto& q : *qs) {
      if (!q.is_string()) throw RequestError("queries", "queries must be an array of strings");
      queries.push_back(q.get<std::string>());
    }
    auto [prefs, defaulted] = resolve_prefs(body, config_.profiles);
    const double rate = body.value("sample_rate", 0.02);
    const std::uint64_t seed = body.value("seed", std::uint64_t{0});
    RouterConfig router = config_.router;
    if (auto k = body.find("k"); k != body.end()) {
      if (!k->is_number_integer() || k->get<long long>() < 1) {
        throw RequestError("k", "k must be a positive integer");
      }
      router.k = k->get<std::size_t>();
    }
    const auto catalog = catalogs_.current();
    if (!catalog) throw Error(ErrorCode::EmptyCatalog, "no catalog loaded");
    const auto table = feedback_.table();
    RouteContext ctx{bias_source(*table), analyzer_, &ids_};
    auto batch = route_batch(queries, prefs, rate, seed, *catalog, router, ctx);
    for (auto& d : batch.decisions) {
      if (defaulted) d.tags.emplace_back("defaulted-prefs");
      decisions_.put(d);
    }
    return {200, to_json(batch)};
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response Service::handle_feedback(const json& body) {
  try {
    if (!body.is_object()) throw RequestError("", "request body must be a JSON object");
    reject_unknown_keys(body, {"decision_id", "signal", "ts"}, "feedback event");
    FeedbackEvent event;
    auto id = body.find("decision_id");
    if (id == body.end() || !id->is_string()) {
      throw RequestError("decision_id", "decision_id must be a string");
    }
    event.decision_id = id->get<std::string>();
    auto sig = body.find("signal");
    const auto signal = sig != body.end() && sig->is_string()
                            ? parse_signal(sig->get<std::string>())
                            : std::nullopt;
    if (!signal) throw RequestError("signal", "signal must be \"up\" or \"down\"");
    event.signal = *signal;
    if (auto ts = body.find("ts"); ts != body.end()) {
      event.timestamp = parse_utc(ts->get<std::string>());
    }
    feedback_.record(event, decisions_);
    return {204, nullptr};
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response Service::handle_models() const {
  const auto catalog = catalogs_.current();
  if (!catalog) return error_response(Error(ErrorCode::EmptyCatalog, "no catalog loaded"));
  return {200, catalog_summary(*catalog)};
}

Response Service::handle_reload(const json& body) {
  try {
    std::string path = config_.catalog_path;
    if (body.is_object() && body.contains("path")) path = body.at("path").get<std::string>();
    auto cards = load_catalog_file(path);
    check_bindings(normalize_catalog(cards));
    const auto handle = catalogs_.publish(std::move(cards));
    return {200, {{"version", handle->version()}, {"model_count", handle->size()}}};
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response Service::handle_healthz() const {
  return {200, {{"status", "ok"}, {"catalog_version", catalogs_.version()}}};
}

Response Service::dispatch(const std::string& method, const std::string& path,
                           const std::string& raw) {
  static const std::map<std::string, std::string> routes = {
      {"/v1/route", "POST"},      {"/v1/infer", "POST"},          {"/v1/route/batch", "POST"},
      {"/v1/feedback", "POST"},   {"/v1/catalog/reload", "POST"}, {"/v1/models", "GET"},
      {"/v1/healthz", "GET"},
  };
  auto it = routes.find(path);
  if (it == routes.end()) {
    return {404, {{"error", "NotFound"}, {"message", "no such endpoint " + path}}};
  }
  if (it->second != method) {
    return {405, {{"error", "MethodNotAllowed"}, {"message", path + " expects " + it->second}}};
  }
  if (method == "GET") return path == "/v1/models" ? handle_models() : handle_healthz();

  json body = raw.empty() ? json::object() : json::parse(raw, nullptr, false);
  if (body.is_discarded()) {
    return {400, {{"error", "InvalidArgument"}, {"message", "request body is not valid JSON"}}};
  }
  try {
    if (path == "/v1/route") return handle_route(body);
    if (path == "/v1/infer") return handle_infer(body);
    if (path == "/v1/route/batch") return handle_batch(body);
    if (path == "/v1/feedback") return handle_feedback(body);
    return handle_reload(body);
  } catch (const json::exception& e) {
    return {400, {{"error", "InvalidArgument"}, {"message", e.what()}}};
  }
}

}  // namespace optiroute
