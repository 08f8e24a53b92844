// Everything that touches cpp-httplib on the service side lives here.
#include "optiroute/service.hpp"

#include <cstdio>
#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "optiroute/error.hpp"

namespace optiroute {

using nlohmann::json;

std::string echo_output(std::string_view model_id, std::string_view query) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : query) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return "echo:" + std::string(model_id) + ":" + hex;
}

namespace {

class EchoAdapter final : public BackendAdapter {
public:
  std::string infer(const std::string& model_id, const std::string& query) override {
    return echo_output(model_id, query);
  }
};

class HttpAdapter final : public BackendAdapter {
public:
  explicit HttpAdapter(AdapterBinding binding) : binding_(std::move(binding)) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(binding_.base_url, m, re)) {
      throw Error(ErrorCode::ConfigError, "invalid adapter base_url " + binding_.base_url);
    }
    origin_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/";
  }

  std::string infer(const std::string& model_id, const std::string& query) override {
    httplib::Client client(origin_);
    const auto ms = binding_.timeout.count();
    client.set_connection_timeout(ms / 1000, (ms % 1000) * 1000);
    client.set_read_timeout(ms / 1000, (ms % 1000) * 1000);
    client.set_write_timeout(ms / 1000, (ms % 1000) * 1000);
    httplib::Headers headers;
    if (!binding_.token_env.empty()) {
      if (const char* token = std::getenv(binding_.token_env.c_str())) {
        headers.emplace("Authorization", std::string("Bearer ") + token);
      }
    }
    const json request = {{"model", model_id}, {"query", query}};
    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(path_, headers, request.dump(), "application/json");
    if (!res) {
      const auto elapsed = std::chrono::steady_clock::now() - start;
      const bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                             (res.error() == httplib::Error::Read &&
                              elapsed >= binding_.timeout * 9 / 10);
      throw Error(timed_out ? ErrorCode::BackendTimeout : ErrorCode::BackendFailure,
                  "backend for \"" + model_id + "\" failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::BackendFailure,
                  "backend for \"" + model_id + "\" returned HTTP " + std::to_string(res->status));
    }
    const auto body = json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("output") ||
        !body.at("output").is_string()) {
      throw Error(ErrorCode::BackendFailure,
                  "backend for \"" + model_id + "\" returned no \"output\" string");
    }
    return body.at("output").get<std::string>();
  }

private:
  AdapterBinding binding_;
  std::string origin_;
  std::string path_;
};

}  // namespace

std::unique_ptr<BackendAdapter> make_adapter(const AdapterBinding& binding) {
  if (binding.kind == AdapterKind::http) return std::make_unique<HttpAdapter>(binding);
  return std::make_unique<EchoAdapter>();
}

struct HttpServer::Impl {
  Impl(Service& s, std::optional<std::string> t) : service(s), token(std::move(t)) {}
  Service& service;
  std::optional<std::string> token;
  httplib::Server server;
};

HttpServer::HttpServer(Service& service, std::optional<std::string> bearer_token)
    : impl_(std::make_unique<Impl>(service, std::move(bearer_token))) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    if (impl_->token && req.path != "/v1/healthz") {
      const auto auth = req.get_header_value("Authorization");
      if (auth != "Bearer " + *impl_->token) {
        res.status = 401;
        res.set_content(R"({"error":"Unauthorized","message":"missing or invalid bearer token"})",
                        "application/json");
        return;
      }
    }
    const auto out = impl_->service.dispatch(req.method, req.path, req.body);
    res.status = out.status;
    if (out.status != 204) res.set_content(out.body.dump(), "application/json");
  };
  for (const char* path : {"/v1/route", "/v1/infer", "/v1/route/batch", "/v1/feedback",
                           "/v1/catalog/reload", "/v1/models", "/v1/healthz"}) {
    impl_->server.Post(path, handler);
    impl_->server.Get(path, handler);
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::ConfigError, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::ConfigError, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

int HttpServer::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  thread_ = std::thread([this] { listen(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace optiroute
