#include "optiroute/serialize.hpp"

#include <ctime>
#include <iomanip>
#include <sstream>

#include "optiroute/error.hpp"

namespace optiroute {

using nlohmann::json;

json to_json(const TaskProfile& profile) {
  return {{"task_type", to_string(profile.task_type)},
          {"domain", to_string(profile.domain)},
          {"complexity", profile.complexity}};
}

TaskProfile profile_from_json(const json& j) {
  const auto task = parse_task_type(j.at("task_type").get<std::string>());
  const auto domain = parse_domain(j.at("domain").get<std::string>());
  if (!task || !domain) throw Error(ErrorCode::InvalidArgument, "invalid task profile");
  return {*task, *domain, j.at("complexity").get<double>()};
}

json to_json(const PreferenceVector& prefs) {
  const auto w = prefs.weights();
  json j = json::object();
  for (std::size_t i = 0; i < kPreferenceNames.size(); ++i) {
    j[std::string(kPreferenceNames[i])] = w(static_cast<Eigen::Index>(i));
  }
  return j;
}

PreferenceVector prefs_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "prefs must be an object");
  std::string csv;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) {
      throw Error(ErrorCode::InvalidArgument, "preference \"" + key + "\" must be a number");
    }
    std::ostringstream os;
    os << std::setprecision(17) << value.get<double>();
    if (!csv.empty()) csv.push_back(',');
    csv += key + "=" + os.str();
  }
  return parse_preferences(csv);
}

json to_json(const RoutingDecision& d) {
  json candidates = json::array();
  for (const auto& c : d.candidates) {
    candidates.push_back({{"model_id", c.model_id}, {"similarity", c.similarity}, {"score", c.score}});
  }
  return {{"decision_id", d.decision_id},
          {"selected", d.selected},
          {"score", d.score},
          {"similarity", d.similarity},
          {"candidates", std::move(candidates)},
          {"fallback_level", to_string(d.fallback_level)},
          {"profile", to_json(d.profile)},
          {"prefs", to_json(d.prefs)},
          {"catalog_version", d.catalog_version},
          {"analyzer_tag", d.analyzer_tag},
          {"tags", d.tags}};
}

RoutingDecision decision_from_json(const json& j) {
  RoutingDecision d;
  d.decision_id = j.at("decision_id").get<std::string>();
  d.selected = j.at("selected").get<std::string>();
  d.score = j.at("score").get<double>();
  d.similarity = j.at("similarity").get<double>();
  for (const auto& c : j.at("candidates")) {
    d.candidates.push_back({c.at("model_id").get<std::string>(), c.at("similarity").get<double>(),
                            c.at("score").get<double>()});
  }
  const auto level = parse_fallback_level(j.at("fallback_level").get<std::string>());
  if (!level) throw Error(ErrorCode::InvalidArgument, "invalid fallback_level");
  d.fallback_level = *level;
  d.profile = profile_from_json(j.at("profile"));
  d.prefs = prefs_from_json(j.at("prefs"));
  d.catalog_version = j.at("catalog_version").get<std::uint64_t>();
  d.analyzer_tag = j.at("analyzer_tag").get<std::string>();
  d.tags = j.value("tags", std::vector<std::string>{});
  return d;
}

json to_json(const BatchDecision& b) {
  json decisions = json::array();
  for (const auto& d : b.decisions) decisions.push_back(to_json(d));
  return {{"selected", b.selected},
          {"batch_size", b.batch_size},
          {"sample_size", b.sample_indices.size()},
          {"sample_indices", b.sample_indices},
          {"selection_basis", b.selection_basis},
          {"mean_score", b.mean_score},
          {"catalog_version", b.catalog_version},
          {"decisions", std::move(decisions)}};
}

json to_json(const ModelCard& card) {
  json task_types = json::array();
  for (auto t : card.task_types) task_types.push_back(to_string(t));
  json domains = json::array();
  for (auto d : card.domains) domains.push_back(to_string(d));
  const auto& m = card.metrics;
  json j = {{"id", card.id},
            {"name", card.name},
            {"provider", card.provider},
            {"params_b", card.params_b},
            {"task_types", std::move(task_types)},
            {"domains", std::move(domains)},
            {"generalist", card.generalist},
            {"metrics",
             {{"accuracy", m.accuracy},
              {"latency_ms", m.latency_ms},
              {"cost_per_1k_tokens_usd", m.cost_per_1k_tokens_usd},
              {"helpfulness", m.helpfulness},
              {"honesty", m.honesty},
              {"harmlessness", m.harmlessness},
              {"steerability", m.steerability},
              {"creativity", m.creativity},
              {"reliability", m.reliability},
              {"complexity_capability", m.complexity_capability}}}};
  if (!card.annotations.empty()) j["annotations"] = card.annotations;
  return j;
}

json catalog_document(const std::vector<ModelCard>& cards) {
  json models = json::array();
  for (const auto& c : cards) models.push_back(to_json(c));
  return {{"schema_version", 1}, {"models", std::move(models)}};
}

json catalog_summary(const NormalizedCatalog& catalog) {
  json models = json::array();
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const auto& card = catalog.card(i);
    json task_types = json::array();
    for (auto t : card.task_types) task_types.push_back(to_string(t));
    json domains = json::array();
    for (auto d : card.domains) domains.push_back(to_string(d));
    const ModelVector v = catalog.vector(i);
    models.push_back({{"id", card.id},
                      {"task_types", std::move(task_types)},
                      {"domains", std::move(domains)},
                      {"generalist", card.generalist},
                      {"normalized_vector", std::vector<double>(v.data(), v.data() + v.size())}});
  }
  return {{"version", catalog.version()}, {"models", std::move(models)}};
}

std::string format_utc(std::chrono::system_clock::time_point t) {
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0')
     << (ms % 1000) << 'Z';
  return os.str();
}

std::chrono::system_clock::time_point parse_utc(const std::string& s) {
  std::tm tm{};
  std::istringstream is(s);
  is >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
  if (is.fail()) throw Error(ErrorCode::InvalidArgument, "invalid UTC timestamp \"" + s + "\"");
  int millis = 0;
  if (is.peek() == '.') {
    is.get();
    std::string frac;
    while (std::isdigit(is.peek())) frac.push_back(static_cast<char>(is.get()));
    frac = (frac + "000").substr(0, 3);
    millis = std::stoi(frac);
  }
  const std::time_t secs = timegm(&tm);
  return std::chrono::system_clock::from_time_t(secs) + std::chrono::milliseconds(millis);
}

}  // namespace optiroute
