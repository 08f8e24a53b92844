#pragma once
#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "optiroute/analyzer.hpp"
#include "optiroute/registry.hpp"
#include "optiroute/router.hpp"
#include "optiroute/store.hpp"

namespace optiroute {

// ---------------------------------------------------------------------------
// Inference backends

enum class AdapterKind { echo, http };

struct AdapterBinding {
  AdapterKind kind = AdapterKind::echo;
  std::string base_url;   // http only, e.g. http://127.0.0.1:9000/generate
  std::string token_env;  // name of the env var holding the bearer token
  std::chrono::milliseconds timeout{30'000};
};

class BackendAdapter {
public:
  virtual ~BackendAdapter() = default;
  /// Throws BackendFailure or BackendTimeout.
  [[nodiscard]] virtual std::string infer(const std::string& model_id,
                                          const std::string& query) = 0;
};

/// "echo:<model_id>:<16 hex digits of FNV-1a 64 over the query bytes>".
[[nodiscard]] std::string echo_output(std::string_view model_id, std::string_view query);

[[nodiscard]] std::unique_ptr<BackendAdapter> make_adapter(const AdapterBinding& binding);

// ---------------------------------------------------------------------------
// Deployment config

struct ServiceConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::string catalog_path;
  std::map<std::string, PreferenceVector, std::less<>> profiles = default_profiles();
  std::optional<AdapterBinding> default_adapter = AdapterBinding{};
  std::map<std::string, AdapterBinding> bindings;
  RouterConfig router;
  PruneConfig prune;
  std::optional<std::string> analyzer_endpoint;
  std::chrono::milliseconds analyzer_timeout{500};
  std::optional<std::string> decision_log;
  std::optional<std::string> feedback_log;
  std::chrono::seconds decision_retention = std::chrono::hours(24 * 7);
  std::optional<std::string> bearer_token_env;
};

/// Relative paths resolve against `base_dir`. Throws ConfigError.
[[nodiscard]] ServiceConfig parse_service_config(const nlohmann::json& doc,
                                                 const std::string& base_dir = ".");
[[nodiscard]] ServiceConfig load_service_config(const std::string& path);

// ---------------------------------------------------------------------------
// Request handling, transport independent

struct Response {
  int status = 200;
  nlohmann::json body;
};

[[nodiscard]] int http_status(ErrorCode code) noexcept;
[[nodiscard]] Response error_response(const Error& e);

class Service {
public:
  /// Loads the catalog named in the config. Throws ConfigError if it cannot.
  explicit Service(ServiceConfig config);

  Response handle_route(const nlohmann::json& body);
  Response handle_infer(const nlohmann::json& body);
  Response handle_batch(const nlohmann::json& body);
  Response handle_feedback(const nlohmann::json& body);
  Response handle_models() const;
  Response handle_reload(const nlohmann::json& body);
  Response handle_healthz() const;

  /// Parses the raw body then dispatches; malformed JSON becomes a 400.
  Response dispatch(const std::string& method, const std::string& path, const std::string& body);

  [[nodiscard]] CatalogHandle catalog() const { return catalogs_.current(); }
  [[nodiscard]] const ServiceConfig& config() const noexcept { return config_; }
  [[nodiscard]] const FeedbackStore& feedback() const noexcept { return feedback_; }
  [[nodiscard]] const DecisionStore& decisions() const noexcept { return decisions_; }

  /// Replaces the adapter for one model id (tests, embedding).
  void set_adapter(const std::string& model_id, std::shared_ptr<BackendAdapter> adapter);

private:
  struct ResolvedRequest {
    std::string query;
    PreferenceVector prefs;
    bool defaulted_prefs = false;
    RouterConfig router;
  };

  ResolvedRequest resolve(const nlohmann::json& body) const;
  RoutingDecision route_and_persist(const ResolvedRequest& req, const CatalogHandle& catalog);
  void check_bindings(const NormalizedCatalog& catalog) const;
  std::shared_ptr<BackendAdapter> adapter_for(const std::string& model_id) const;

  ServiceConfig config_;
  CatalogStore catalogs_;
  DecisionStore decisions_;
  FeedbackStore feedback_;
  AnalyzeFn analyzer_;
  DecisionIdGenerator ids_;
  mutable std::mutex adapters_mutex_;
  std::map<std::string, std::shared_ptr<BackendAdapter>> adapters_;
  std::shared_ptr<BackendAdapter> default_adapter_;
};

// ---------------------------------------------------------------------------
// HTTP transport

class HttpServer {
public:
  HttpServer(Service& service, std::optional<std::string> bearer_token = std::nullopt);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds (port 0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); in-flight requests finish before it returns.
  void listen();
  /// bind() + listen() on a background thread.
  int start(const std::string& host, int port);
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace optiroute
