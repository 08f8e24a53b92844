#include "optiroute/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "optiroute/analyzer.hpp"
#include "optiroute/error.hpp"
#include "optiroute/rng.hpp"
#include "optiroute/serialize.hpp"

namespace optiroute::sim {

using nlohmann::json;

namespace {

template <typename Key>
double mass(const std::map<Key, double>& mix) {
  double total = 0.0;
  for (const auto& [_, p] : mix) total += p;
  return total;
}

template <typename Key>
Key draw(const std::map<Key, double>& mix, Rng& rng) {
  const double u = rng.next_double();
  double acc = 0.0;
  Key last = mix.begin()->first;
  for (const auto& [key, p] : mix) {
    if (p <= 0.0) continue;
    acc += p;
    last = key;
    if (u < acc) return key;
  }
  return last;
}

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  return items[rng.next_below(items.size())];
}

// Instruction openers per task type. Each contains a keyword of its own rule
// and none of the keywords of rules ranked before it.
const std::map<TaskType, std::vector<std::string>>& instructions() {
  static const std::map<TaskType, std::vector<std::string>> table = {
      {TaskType::sentiment_analysis,
       {"Find the sentiment of the passage:", "What is the sentiment of this review:",
        "Decide whether the sentiment here is positive or negative:"}},
      {TaskType::translation,
       {"Translate the following text into French:", "Please translate this message to German:",
        "Provide a Spanish translation of this note:"}},
      {TaskType::summarization,
       {"Summarize the following text:", "Write a short summary of this passage:",
        "List the key points of this update:"}},
      {TaskType::code_generation,
       {"Write a Python function that parses this report:",
        "Implement a small script that automates the following:",
        "Produce SQL code that stores the facts below:"}},
      {TaskType::extraction,
       {"Extract every name and date from this text:",
        "List all the organizations mentioned in this note:",
        "Pull out the key figures from this passage:"}},
      {TaskType::classification,
       {"Classify the following message by topic:", "Categorize this note:",
        "Assign a label to this message:"}},
      {TaskType::text_generation,
       {"Write a short story inspired by this note:", "Compose a poem about the following:",
        "Draft an email to the team based on this:"}},
      {TaskType::question_answering,
       {"Answer this question about the passage:", "Explain the main reason behind this:",
        "Using the passage, tell me who is responsible?"}},
      {TaskType::other,
       {"Note for later:", "Keep this on file:", "Some context for the archive:"}},
  };
  return table;
}

const std::map<Domain, std::vector<std::string>>& domain_sentences() {
  static const std::map<Domain, std::vector<std::string>> table = {
      {Domain::general,
       {"the team met on monday to plan the next quarter.",
        "the weather was mild and the park was busy all afternoon.",
        "the volunteers organized a community event downtown.",
        "our neighbors repainted the fence over the weekend."}},
      {Domain::healthcare,
       {"the patient reported new symptoms and the doctor adjusted the medication.",
        "the clinic scheduled a follow-up visit after the diagnosis.",
        "hospital staff discussed the treatment plan with the family."}},
      {Domain::finance,
       {"the portfolio lost value as bond yields rose.",
        "quarterly earnings beat expectations and the dividend was raised.",
        "the bank tightened credit for new loans."}},
      {Domain::legal,
       {"the plaintiff filed a motion and the court set a hearing.",
        "the contract clause limits liability for both parties.",
        "the attorney prepared testimony for the appeal."}},
      {Domain::food_beverage,
       {"the restaurant served a rich espresso and a light dessert.",
        "the chef changed the menu to include fresh pasta.",
        "our waiter recommended the house wine with dinner."}},
      {Domain::technology,
       {"the server cluster moved to the cloud last month.",
        "the database migration caused brief network outages.",
        "new firmware improved laptop battery life."}},
  };
  return table;
}

const std::vector<std::string>& sentences_for(Domain d) {
  const auto& table = domain_sentences();
  auto it = table.find(d);
  return it == table.end() ? table.at(Domain::general) : it->second;
}

enum class Tier { low, mid, high };

std::string build_query(TaskType type, Domain domain, Tier tier, Rng& rng) {
  std::ostringstream os;
  os << pick(instructions().at(type), rng);
  const auto& pool = sentences_for(domain);
  switch (tier) {
    case Tier::low:
      os << ' ' << pick(pool, rng);
      break;
    case Tier::mid:
      os << " First read the context, then respond.";
      for (int i = 0; i < 3; ++i) os << ' ' << pick(pool, rng);
      break;
    case Tier::high:
      os << " Step 1. read everything carefully. Step 2. weigh each detail.";
      for (int i = 0; i < 14; ++i) {
        os << ' ' << pick(pool, rng);
        if (i == 4) os << " It was not at all what anyone expected.";
        if (i == 9) os << " The \"perfect\" outcome, as if anyone believed it.";
      }
      break;
  }
  return os.str();
}

constexpr double kTierComplexity[] = {0.2, 0.5, 0.8};

}  // namespace

void validate(const WorkloadSpec& spec) {
  if (spec.n_queries == 0) throw Error(ErrorCode::InvalidArgument, "n_queries must be positive");
  if (spec.task_mix.empty() || std::abs(mass(spec.task_mix) - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "task_mix must sum to 1");
  }
  if (spec.domain_mix.empty() || std::abs(mass(spec.domain_mix) - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "domain_mix must sum to 1");
  }
  const auto& c = spec.complexity;
  if (c.low < 0 || c.mid < 0 || c.high < 0 || std::abs(c.low + c.mid + c.high - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "complexity_dist fractions must sum to 1");
  }
  for (const auto& [_, p] : spec.task_mix) {
    if (p < 0) throw Error(ErrorCode::InvalidArgument, "negative task_mix probability");
  }
  for (const auto& [_, p] : spec.domain_mix) {
    if (p < 0) throw Error(ErrorCode::InvalidArgument, "negative domain_mix probability");
  }
  optiroute::validate(spec.prefs);
}

WorkloadSpec parse_workload(const json& doc) {
  WorkloadSpec spec;
  try {
    for (const auto& [key, _] : doc.items()) {
      static const std::set<std::string> allowed = {"n_queries", "task_mix", "domain_mix",
                                                    "complexity_dist", "seed", "prefs", "profile"};
      if (!allowed.contains(key)) {
        throw Error(ErrorCode::InvalidArgument, "unknown workload field \"" + key + "\"");
      }
    }
    spec.n_queries = doc.at("n_queries").get<std::size_t>();
    for (const auto& [name, p] : doc.at("task_mix").items()) {
      auto t = parse_task_type(name);
      if (!t) throw Error(ErrorCode::InvalidArgument, "unknown task type \"" + name + "\"");
      spec.task_mix[*t] = p.get<double>();
    }
    if (auto it = doc.find("domain_mix"); it != doc.end()) {
      for (const auto& [name, p] : it->items()) {
        auto d = parse_domain(name);
        if (!d) throw Error(ErrorCode::InvalidArgument, "unknown domain \"" + name + "\"");
        spec.domain_mix[*d] = p.get<double>();
      }
    } else {
      spec.domain_mix[Domain::general] = 1.0;
    }
    if (auto it = doc.find("complexity_dist"); it != doc.end()) {
      spec.complexity = {it->value("low_frac", 0.0), it->value("mid_frac", 0.0),
                         it->value("high_frac", 0.0)};
    }
    spec.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("prefs") && doc.contains("profile")) {
      throw Error(ErrorCode::InvalidArgument, "prefs and profile are mutually exclusive");
    }
    if (auto it = doc.find("prefs"); it != doc.end()) spec.prefs = prefs_from_json(*it);
    if (auto it = doc.find("profile"); it != doc.end()) {
      const auto& profiles = default_profiles();
      auto p = profiles.find(it->get<std::string>());
      if (p == profiles.end()) {
        throw Error(ErrorCode::InvalidArgument, "unknown profile \"" + it->get<std::string>() + "\"");
      }
      spec.prefs = p->second;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("invalid workload: ") + e.what());
  }
  validate(spec);
  return spec;
}

WorkloadSpec load_workload_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open workload file " + path);
  const auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::InvalidArgument, "workload is not valid JSON");
  return parse_workload(doc);
}

std::vector<WorkloadItem> generate_workload(const WorkloadSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  const std::map<Tier, double> tiers = {
      {Tier::low, spec.complexity.low}, {Tier::mid, spec.complexity.mid},
      {Tier::high, spec.complexity.high}};
  std::vector<WorkloadItem> out;
  out.reserve(spec.n_queries);
  for (std::size_t i = 0; i < spec.n_queries; ++i) {
    const TaskType type = draw(spec.task_mix, rng);
    const Domain domain = draw(spec.domain_mix, rng);
    const Tier tier = draw(tiers, rng);
    out.push_back({build_query(type, domain, tier, rng),
                   {type, domain, kTierComplexity[static_cast<int>(tier)]}});
  }
  return out;
}

std::vector<ModelCard> generate_catalog(std::size_t n, std::uint64_t seed,
                                        std::size_t generalist_every) {
  Rng rng(seed);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.next_double(); };
  std::vector<ModelCard> cards;
  for (std::size_t i = 0; i < n; ++i) {
    ModelCard c;
    char id[32];
    std::snprintf(id, sizeof(id), "m%02zu", i);
    c.id = id;
    c.name = "Synthetic " + c.id;
    c.provider = "synthetic";
    c.params_b = std::round(uniform(0.5, 400.0) * 10.0) / 10.0;
    c.generalist = generalist_every > 0 && i % generalist_every == generalist_every - 1;
    for (auto t : kAllTaskTypes) {
      if (c.generalist || rng.next_double() < 0.6) c.task_types.insert(t);
    }
    if (c.task_types.empty()) c.task_types.insert(kAllTaskTypes[rng.next_below(kAllTaskTypes.size())]);
    for (auto d : kAllDomains) {
      if (rng.next_double() < 0.4) c.domains.insert(d);
    }
    auto& m = c.metrics;
    m.accuracy = uniform(0.5, 0.99);
    m.latency_ms = uniform(50.0, 2000.0);
    m.cost_per_1k_tokens_usd = uniform(0.0002, 0.06);
    m.helpfulness = uniform(0.3, 1.0);
    m.honesty = uniform(0.3, 1.0);
    m.harmlessness = uniform(0.3, 1.0);
    m.steerability = uniform(0.3, 1.0);
    m.creativity = uniform(0.3, 1.0);
    m.reliability = uniform(0.9, 1.0);
    m.complexity_capability = uniform(0.0, 1.0);
    cards.push_back(std::move(c));
  }
  return cards;
}

std::string Policy::name() const {
  switch (kind) {
    case PolicyKind::optiroute: return "optiroute";
    case PolicyKind::always_model: return "always:" + model_id;
    case PolicyKind::random: return "random:" + std::to_string(seed);
    case PolicyKind::cheapest_passing_filter: return "cheapest_passing_filter";
  }
  return "unknown";
}

std::vector<Policy> parse_policies(const std::string& csv, std::uint64_t default_seed) {
  std::vector<Policy> out;
  std::istringstream is(csv);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (item.empty()) continue;
    Policy p;
    if (item == "optiroute") {
      p.kind = PolicyKind::optiroute;
    } else if (item == "cheapest_passing_filter" || item == "cheapest") {
      p.kind = PolicyKind::cheapest_passing_filter;
    } else if (item == "random") {
      p.kind = PolicyKind::random;
      p.seed = default_seed;
    } else if (item.rfind("random:", 0) == 0) {
      p.kind = PolicyKind::random;
      p.seed = std::stoull(item.substr(7));
    } else if (item.rfind("always:", 0) == 0 && item.size() > 7) {
      p.kind = PolicyKind::always_model;
      p.model_id = item.substr(7);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown policy \"" + item + "\"");
    }
    out.push_back(std::move(p));
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no policies given");
  return out;
}

namespace {

struct Pick {
  std::size_t index;  // catalog index, or catalog.size() when unrouted
  bool fallback;
};

struct Prepared {
  TaskProfile profile;
  double tokens;
};

Pick select(const Policy& policy, const Prepared& q, std::size_t query_index,
            const NormalizedCatalog& catalog, const PreferenceVector& prefs,
            const RouterConfig& cfg) {
  const auto none = catalog.size();
  switch (policy.kind) {
    case PolicyKind::always_model:
      return {catalog.find(policy.model_id), false};
    case PolicyKind::random: {
      // Per-query stream so results do not depend on evaluation order.
      Rng rng(policy.seed ^ (0x9e3779b97f4a7c15ULL * (query_index + 1)));
      return {static_cast<std::size_t>(rng.next_below(catalog.size())), false};
    }
    case PolicyKind::cheapest_passing_filter: {
      std::size_t best = none;
      for (std::size_t i = 0; i < catalog.size(); ++i) {
        if (!passes_filters(catalog.card(i), q.profile, cfg)) continue;
        const auto& c = catalog.card(i);
        if (best == none ||
            c.metrics.cost_per_1k_tokens_usd < catalog.card(best).metrics.cost_per_1k_tokens_usd ||
            (c.metrics.cost_per_1k_tokens_usd ==
                 catalog.card(best).metrics.cost_per_1k_tokens_usd &&
             c.id < catalog.card(best).id)) {
          best = i;
        }
      }
      if (best != none) return {best, false};
      // Nothing passes: cheapest model overall, counted as a fallback.
      for (std::size_t i = 0; i < catalog.size(); ++i) {
        if (best == none || catalog.card(i).metrics.cost_per_1k_tokens_usd <
                                catalog.card(best).metrics.cost_per_1k_tokens_usd) {
          best = i;
        }
      }
      return {best, true};
    }
    case PolicyKind::optiroute: {
      try {
        const auto d = route_profile(q.profile, prefs, catalog, cfg, no_bias());
        return {catalog.find(d.selected), d.fallback_level != FallbackLevel::none};
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoModelAvailable) throw;
        return {none, true};
      }
    }
  }
  return {none, true};
}

}  // namespace

PolicyReport evaluate(const std::vector<WorkloadItem>& workload, const NormalizedCatalog& catalog,
                      const std::vector<Policy>& policies, const PreferenceVector& prefs,
                      const RouterConfig& cfg, const PruneConfig& prune, unsigned threads) {
  if (catalog.empty()) throw Error(ErrorCode::EmptyCatalog, "catalog has no models");
  for (const auto& p : policies) {
    if (p.kind == PolicyKind::always_model && catalog.find(p.model_id) == catalog.size()) {
      throw Error(ErrorCode::UnknownPolicyModel,
                  "policy " + p.name() + " names a model that is not in the catalog");
    }
  }

  const std::size_t n = workload.size();
  std::vector<Prepared> prepared(n);
  std::vector<Pick> picks(n * policies.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      prepared[i] = {analyze(workload[i].query, prune),
                     static_cast<double>(split_words(workload[i].query).size())};
      for (std::size_t p = 0; p < policies.size(); ++p) {
        picks[i * policies.size() + p] = select(policies[p], prepared[i], i, catalog, prefs, cfg);
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (workers == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
    for (auto& t : pool) t.join();
  }

  // Reduce in query order so totals are bit-identical regardless of threads.
  PolicyReport report;
  report.n_queries = n;
  for (std::size_t p = 0; p < policies.size(); ++p) {
    PolicyResult r;
    r.name = policies[p].name();
    double latency = 0.0;
    double quality = 0.0;
    std::size_t fallbacks = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& pick = picks[i * policies.size() + p];
      if (pick.fallback) ++fallbacks;
      if (pick.index == catalog.size()) {
        ++r.histogram[std::string(kUnrouted)];
        continue;
      }
      const auto& card = catalog.card(pick.index);
      ++r.histogram[card.id];
      r.total_cost_usd += card.metrics.cost_per_1k_tokens_usd * prepared[i].tokens / 1000.0;
      latency += card.metrics.latency_ms;
      quality += score(catalog.vector(pick.index), prefs, 0.0);
    }
    if (n > 0) {
      r.mean_latency_ms = latency / static_cast<double>(n);
      r.mean_selection_score = quality / static_cast<double>(n);
      r.fallback_rate = static_cast<double>(fallbacks) / static_cast<double>(n);
    }
    report.policies.push_back(std::move(r));
  }
  return report;
}

json to_json(const PolicyReport& report) {
  json policies = json::array();
  for (const auto& p : report.policies) {
    policies.push_back({{"name", p.name},
                        {"total_cost_usd", p.total_cost_usd},
                        {"mean_latency_ms", p.mean_latency_ms},
                        {"mean_selection_score", p.mean_selection_score},
                        {"fallback_rate", p.fallback_rate},
                        {"histogram", p.histogram}});
  }
  return {{"n_queries", report.n_queries},
          {"seed", report.seed},
          {"cost_model", "input tokens only; one token per whitespace-delimited word"},
          {"quality_proxy",
           "weighted selection score under the workload preferences; model outputs are not "
           "evaluated"},
          {"policies", std::move(policies)}};
}

std::string render_table(const PolicyReport& report) {
  std::ostringstream os;
  os << "# cost model: input tokens only (1 token = 1 word)\n"
     << "# quality: weighted selection score (no model outputs evaluated)\n"
     << "# queries: " << report.n_queries << "  seed: " << report.seed << "\n";
  os << std::left << std::setw(28) << "policy" << std::right << std::setw(16) << "total_cost_usd"
     << std::setw(16) << "mean_latency_ms" << std::setw(12) << "mean_score" << std::setw(12)
     << "fallback" << "  top model\n";
  for (const auto& p : report.policies) {
    std::string top;
    std::size_t top_count = 0;
    for (const auto& [id, count] : p.histogram) {
      if (count > top_count) {
        top = id;
        top_count = count;
      }
    }
    os << std::left << std::setw(28) << p.name << std::right << std::fixed << std::setprecision(6)
       << std::setw(16) << p.total_cost_usd << std::setprecision(1) << std::setw(16)
       << p.mean_latency_ms << std::setprecision(4) << std::setw(12) << p.mean_selection_score
       << std::setw(12) << p.fallback_rate << "  " << top << " (" << top_count << ")\n";
  }
  return os.str();
}

}  // namespace optiroute::sim
