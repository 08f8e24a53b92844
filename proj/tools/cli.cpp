#include "cli.hpp"

#include "optiroute/analyzer.hpp"
#include "optiroute/error.hpp"
#include "optiroute/registry.hpp"
#include "optiroute/router.hpp"
#include "optiroute/serialize.hpp"
#include "optiroute/service.hpp"
#include "optiroute/sim.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <pthread.h>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

namespace optiroute {

namespace {

using nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ConfigError:
      return kExitUsage;
    default:
      return kExitDomain;
  }
}

struct PrefFlags {
  std::string profile;
  std::string prefs;
};

void add_pref_flags(CLI::App* cmd, PrefFlags& flags) {
  auto* profile = cmd->add_option("--profile", flags.profile, "Named preference preset");
  auto* prefs = cmd->add_option("--prefs", flags.prefs, "key=value,... weights in [0,1]");
  profile->excludes(prefs);
}

// Returns the preference vector and whether it was defaulted.
std::pair<PreferenceVector, bool> resolve_prefs(const PrefFlags& flags) {
  if (!flags.prefs.empty()) return {parse_preferences(flags.prefs), false};
  const auto& profiles = default_profiles();
  const std::string name = flags.profile.empty() ? std::string(kBalancedProfile) : flags.profile;
  auto it = profiles.find(name);
  if (it == profiles.end()) {
    throw Error(ErrorCode::InvalidArgument, "unknown profile \"" + name + "\"");
  }
  return {it->second, flags.profile.empty()};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

CatalogHandle open_catalog(const std::string& path) {
  return snapshot(normalize_catalog(load_catalog_file(path)));
}

void print_decision(std::ostream& out, const RoutingDecision& d, std::size_t max_candidates = 5) {
  out << "selected: " << d.selected << "\n"
      << std::fixed << std::setprecision(4) << "score: " << d.score << "\n"
      << "similarity: " << d.similarity << "\n"
      << "fallback: " << to_string(d.fallback_level) << "\n"
      << "profile: task_type=" << to_string(d.profile.task_type)
      << " domain=" << to_string(d.profile.domain) << " complexity=" << std::setprecision(2)
      << d.profile.complexity << "\n";
  if (!d.tags.empty()) {
    out << "tags:";
    for (const auto& t : d.tags) out << ' ' << t;
    out << "\n";
  }
  out << "candidates:\n";
  const std::size_t n = std::min(max_candidates, d.candidates.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = d.candidates[i];
    out << "  " << std::left << std::setw(24) << c.model_id << std::right << std::setprecision(4)
        << " score=" << c.score << " similarity=" << c.similarity << "\n";
  }
  out.unsetf(std::ios::floatfield);
  out << std::setprecision(6);
}

int cmd_route(std::ostream& out, const std::string& catalog_path, const std::string& query,
              const std::string& query_file, const PrefFlags& pflags, std::size_t k, bool as_json) {
  if (query.empty() == query_file.empty()) {
    throw Error(ErrorCode::InvalidArgument, "exactly one of --query or --query-file is required");
  }
  std::string text = query;
  if (!query_file.empty()) {
    text = read_file(query_file);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  }
  auto [prefs, defaulted] = resolve_prefs(pflags);
  const auto catalog = open_catalog(catalog_path);
  RouterConfig cfg;
  cfg.k = k;
  validate(cfg);
  auto decision = route(text, prefs, *catalog, cfg);
  if (defaulted) decision.tags.push_back("defaulted-prefs");
  if (as_json) {
    out << to_json(decision).dump(2) << "\n";
  } else {
    print_decision(out, decision);
  }
  return kExitOk;
}

int cmd_batch(std::ostream& out, const std::string& catalog_path, const std::string& queries_file,
              const PrefFlags& pflags, double rate, std::uint64_t seed, std::size_t k,
              bool as_json) {
  const auto queries = read_lines(queries_file);
  auto [prefs, defaulted] = resolve_prefs(pflags);
  const auto catalog = open_catalog(catalog_path);
  RouterConfig cfg;
  cfg.k = k;
  validate(cfg);
  const auto batch = route_batch(queries, prefs, rate, seed, *catalog, cfg);
  if (as_json) {
    out << to_json(batch).dump(2) << "\n";
    return kExitOk;
  }
  out << "sampled " << batch.sample_indices.size() << " of " << batch.batch_size << "\n"
      << "selected: " << batch.selected << "\n"
      << "basis: " << batch.selection_basis << "\n"
      << std::fixed << std::setprecision(4) << "mean_score: " << batch.mean_score << "\n"
      << "sample_indices:";
  for (auto i : batch.sample_indices) out << ' ' << i;
  out << "\n";
  if (defaulted) out << "tags: defaulted-prefs\n";
  return kExitOk;
}

int cmd_catalog_validate(std::ostream& out, const std::string& path, bool as_json) {
  try {
    const auto cards = load_catalog_file(path);
    auto violations = validate_cards(cards);
    if (cards.empty()) violations.insert(violations.begin(), "catalog has no models");
    if (violations.empty()) {
      if (as_json) {
        out << json{{"ok", true}, {"models", cards.size()}}.dump() << "\n";
      } else {
        out << "OK: " << cards.size() << " models\n";
      }
      return kExitOk;
    }
    if (as_json) {
      out << json{{"ok", false}, {"violations", violations}}.dump() << "\n";
    } else {
      out << "FAIL: " << violations.size() << " violation(s)\n";
      for (const auto& v : violations) out << "  " << v << "\n";
    }
    return kExitDomain;
  } catch (const Error& e) {
    auto lines = e.details().empty() ? std::vector<std::string>{e.what()} : e.details();
    if (as_json) {
      out << json{{"ok", false}, {"error", to_string(e.code())}, {"violations", lines}}.dump()
          << "\n";
    } else {
      out << "FAIL: " << lines.size() << " violation(s)\n";
      for (const auto& v : lines) out << "  " << v << "\n";
    }
    return kExitDomain;
  }
}

int cmd_catalog_normalize(std::ostream& out, const std::string& path, bool as_json) {
  const auto catalog = open_catalog(path);
  if (as_json) {
    out << catalog_summary(*catalog).dump(2) << "\n";
    return kExitOk;
  }
  std::size_t width = 8;
  for (const auto& c : catalog->cards()) width = std::max(width, c.id.size() + 2);
  out << std::left << std::setw(static_cast<int>(width)) << "model";
  for (const auto& name : kDimNames) {
    out << std::right << std::setw(static_cast<int>(name.size() + 2)) << name;
  }
  out << "\n";
  for (std::size_t i = 0; i < catalog->size(); ++i) {
    out << std::left << std::setw(static_cast<int>(width)) << catalog->card(i).id << std::right
        << std::fixed << std::setprecision(3);
    const auto v = catalog->vector(i);
    for (Eigen::Index d = 0; d < kRouteDims; ++d) {
      out << std::setw(static_cast<int>(kDimNames[d].size() + 2)) << v(d);
    }
    out << "\n";
  }
  return kExitOk;
}

int cmd_serve(std::ostream& out, std::ostream& err, std::string config_path) {
  if (config_path.empty()) {
    if (const char* env = std::getenv("OPTIROUTE_CONFIG")) config_path = env;
  }
  if (config_path.empty()) {
    err << "serve: --config or OPTIROUTE_CONFIG is required\n";
    return kExitUsage;
  }
  std::unique_ptr<Service> service;
  std::optional<std::string> token;
  try {
    auto config = load_service_config(config_path);
    if (config.bearer_token_env) {
      const char* value = std::getenv(config.bearer_token_env->c_str());
      if (!value || !*value) {
        throw Error(ErrorCode::ConfigError,
                    "bearer token variable " + *config.bearer_token_env + " is not set");
      }
      token = value;
    }
    service = std::make_unique<Service>(std::move(config));
  } catch (const Error& e) {
    err << "serve: " << e.what() << "\n";
    for (const auto& d : e.details()) err << "  " << d << "\n";
    return kExitUsage;
  }

  // Block the shutdown signals before any server thread exists so that only
  // sigwait below ever sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &signals, &previous);

  const auto& cfg = service->config();
  HttpServer server(*service, token);
  int port = 0;
  try {
    port = server.start(cfg.listen_host, cfg.listen_port);
  } catch (const Error& e) {
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
    err << "serve: " << e.what() << "\n";
    return kExitUsage;
  }
  out << "listening on " << cfg.listen_host << ":" << port << std::endl;

  int received = 0;
  sigwait(&signals, &received);
  err << "serve: received signal " << received << ", draining\n";
  server.stop();
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  return kExitOk;
}

int cmd_simulate(std::ostream& out, const std::string& catalog_path,
                 const std::string& workload_path, const std::string& policies_csv,
                 std::optional<std::uint64_t> seed, const std::string& out_path, unsigned threads) {
  auto spec = sim::load_workload_file(workload_path);
  if (seed) spec.seed = *seed;
  const auto policies = sim::parse_policies(policies_csv, spec.seed);
  const auto catalog = open_catalog(catalog_path);
  const auto workload = sim::generate_workload(spec);
  auto report = sim::evaluate(workload, *catalog, policies, spec.prefs, {}, {}, threads);
  report.seed = spec.seed;
  if (!out_path.empty()) {
    std::ofstream file(out_path);
    if (!file) throw Error(ErrorCode::InvalidArgument, "cannot write " + out_path);
    file << sim::to_json(report).dump(2) << "\n";
  }
  out << sim::render_table(report);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Preference-aware model router", "optiroute"};
  app.require_subcommand(1);

  bool as_json = false;
  std::string catalog_path;
  PrefFlags pflags;
  std::size_t k = RouterConfig{}.k;

  auto* route_cmd = app.add_subcommand("route", "Route one query");
  std::string query, query_file;
  route_cmd->add_option("--catalog", catalog_path, "Catalog JSON")->required();
  route_cmd->add_option("--query", query, "Query text");
  route_cmd->add_option("--query-file", query_file, "File holding the query");
  add_pref_flags(route_cmd, pflags);
  route_cmd->add_option("--k", k, "Neighbors to consider");
  route_cmd->add_flag("--json", as_json, "Emit the service wire format");

  auto* batch_cmd = app.add_subcommand("batch", "Route a query collection to one model");
  std::string queries_file;
  double rate = 0.02;
  std::uint64_t seed = 0;
  batch_cmd->add_option("--catalog", catalog_path, "Catalog JSON")->required();
  batch_cmd->add_option("--queries-file", queries_file, "One query per line")->required();
  batch_cmd->add_option("--sample-rate", rate, "Fraction of queries to analyze");
  batch_cmd->add_option("--seed", seed, "Sampling seed");
  add_pref_flags(batch_cmd, pflags);
  batch_cmd->add_option("--k", k, "Neighbors to consider");
  batch_cmd->add_flag("--json", as_json, "Emit the service wire format");

  auto* catalog_cmd = app.add_subcommand("catalog", "Inspect a catalog");
  catalog_cmd->require_subcommand(1);
  auto* validate_cmd = catalog_cmd->add_subcommand("validate", "Check a catalog");
  auto* normalize_cmd = catalog_cmd->add_subcommand("normalize", "Print normalized vectors");
  for (auto* sub : {validate_cmd, normalize_cmd}) {
    sub->add_option("--catalog", catalog_path, "Catalog JSON")->required();
    sub->add_flag("--json", as_json, "Machine-readable output");
  }

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  std::string config_path;
  serve_cmd->add_option("--config", config_path, "Service config JSON (or OPTIROUTE_CONFIG)");

  auto* sim_cmd = app.add_subcommand("simulate", "Compare routing policies on a workload");
  std::string workload_path, policies_csv = "optiroute,random,cheapest_passing_filter", out_path;
  std::optional<std::uint64_t> sim_seed;
  unsigned threads = 1;
  sim_cmd->add_option("--catalog", catalog_path, "Catalog JSON")->required();
  sim_cmd->add_option("--workload", workload_path, "Workload spec JSON")->required();
  sim_cmd->add_option("--policies", policies_csv, "Comma-separated policies");
  sim_cmd->add_option("--seed", sim_seed, "Overrides the workload seed");
  sim_cmd->add_option("--out", out_path, "Write the JSON report here");
  sim_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 256u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*route_cmd) return cmd_route(out, catalog_path, query, query_file, pflags, k, as_json);
    if (*batch_cmd) {
      return cmd_batch(out, catalog_path, queries_file, pflags, rate, seed, k, as_json);
    }
    if (*validate_cmd) return cmd_catalog_validate(out, catalog_path, as_json);
    if (*normalize_cmd) return cmd_catalog_normalize(out, catalog_path, as_json);
    if (*serve_cmd) return cmd_serve(out, err, config_path);
    if (*sim_cmd) {
      return cmd_simulate(out, catalog_path, workload_path, policies_csv, sim_seed, out_path,
                          threads);
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    for (const auto& d : e.details()) err << "  " << d << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitUsage;
}

}  // namespace optiroute
