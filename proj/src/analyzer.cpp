#include "optiroute/analyzer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>

#include "optiroute/error.hpp"
#include "optiroute/rng.hpp"

namespace optiroute {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

bool is_token_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '\'' || c == '+' || c == '#';
}

// Lowercased lexical tokens for rule matching. Apostrophes are kept inside
// words ("wasn't") but possessive "'s" is stripped ("restaurant's").
std::vector<std::string> lexical_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && cur.front() == '\'') cur.erase(cur.begin());
    while (!cur.empty() && cur.back() == '\'') cur.pop_back();
    if (cur.size() > 2 && cur.compare(cur.size() - 2, 2, "'s") == 0) cur.resize(cur.size() - 2);
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    if (is_token_char(c)) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

using Phrase = std::vector<std::string_view>;

struct PhraseList {
  std::vector<Phrase> phrases;

  PhraseList(std::initializer_list<std::string_view> entries) {
    for (auto e : entries) {
      Phrase p;
      std::size_t start = 0;
      while (start < e.size()) {
        auto end = e.find(' ', start);
        if (end == std::string_view::npos) end = e.size();
        p.push_back(e.substr(start, end - start));
        start = end + 1;
      }
      phrases.push_back(std::move(p));
    }
  }

  // Number of (position, phrase) matches.
  [[nodiscard]] int count(const std::vector<std::string>& tokens) const {
    int hits = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      for (const auto& p : phrases) {
        if (i + p.size() > tokens.size()) continue;
        bool ok = true;
        for (std::size_t j = 0; j < p.size() && ok; ++j) ok = tokens[i + j] == p[j];
        if (ok) ++hits;
      }
    }
    return hits;
  }
};

struct TaskRule {
  TaskType type;
  PhraseList phrases;
};

// Ordered: the first rule with any hit decides. Keep docs/analyzer.md in sync.
const std::vector<TaskRule>& task_rules() {
  static const std::vector<TaskRule> rules = {
      {TaskType::sentiment_analysis,
       {"sentiment", "sentiments", "polarity", "positive or negative", "negative or positive",
        "author feel", "emotional tone"}},
      {TaskType::translation, {"translate", "translated", "translating", "translation"}},
      {TaskType::summarization,
       {"summarize", "summarise", "summary", "summarization", "summarisation", "tldr", "tl dr",
        "condense", "key points", "main points", "recap"}},
      {TaskType::code_generation,
       {"code", "python", "javascript", "typescript", "java", "c++", "c#", "golang", "sql",
        "regex", "implement", "script", "debug", "refactor", "write a function",
        "function that", "unit test", "unit tests"}},
      {TaskType::extraction,
       {"extract", "extraction", "pull out", "list all", "find all", "named entities",
        "identify all", "parse out"}},
      {TaskType::classification,
       {"classify", "classification", "categorize", "categorise", "categorization",
        "which category", "label", "spam or ham"}},
      {TaskType::text_generation,
       {"write", "compose", "draft", "generate", "story", "poem", "essay", "brainstorm",
        "slogan", "tagline", "come up with", "blog post"}},
      {TaskType::question_answering,
       {"answer", "question", "explain", "what", "who", "when", "where", "why", "which",
        "how"}},
  };
  return rules;
}

struct DomainLexicon {
  Domain domain;
  PhraseList words;
};

const std::vector<DomainLexicon>& domain_lexicons() {
  static const std::vector<DomainLexicon> lexicons = {
      {Domain::healthcare,
       {"patient", "patients", "doctor", "physician", "nurse", "hospital", "clinic", "clinical",
        "diagnosis", "diagnose", "symptom", "symptoms", "disease", "medication", "medicine",
        "treatment", "therapy", "surgery", "medical", "dosage", "prescription", "cancer",
        "diabetes", "vaccine", "healthcare"}},
      {Domain::finance,
       {"stock", "stocks", "bond", "bonds", "portfolio", "investment", "investor", "investors",
        "loan", "loans", "bank", "banking", "credit", "revenue", "earnings", "dividend", "tax",
        "taxes", "finance", "financial", "inflation", "equity", "hedge", "trading", "mortgage",
        "profit", "assets"}},
      {Domain::legal,
       {"plaintiff", "defendant", "court", "motion", "judgment", "judge", "attorney", "lawyer",
        "counsel", "lawsuit", "litigation", "statute", "contract", "clause", "liability", "tort",
        "verdict", "appeal", "jurisdiction", "legal", "indemnity", "subpoena", "testimony"}},
      {Domain::food_beverage,
       {"restaurant", "restaurants", "espresso", "coffee", "dessert", "desserts", "menu", "dish",
        "dishes", "food", "chef", "meal", "meals", "waiter", "waitress", "pizza", "pasta",
        "burger", "wine", "beer", "cocktail", "cocktails", "cuisine", "flavor", "flavour",
        "recipe", "bakery", "brunch", "dinner", "lunch", "breakfast", "sushi", "steak", "cafe",
        "bistro", "appetizer"}},
      {Domain::technology,
       {"software", "hardware", "computer", "server", "servers", "database", "cloud", "network",
        "api", "kubernetes", "docker", "linux", "cpu", "gpu", "laptop", "smartphone",
        "firmware", "encryption", "microservice", "microservices", "python", "javascript",
        "code"}},
  };
  return lexicons;
}

const PhraseList& negation_markers() {
  static const PhraseList markers = {"not", "hardly", "never", "yeah right", "as if"};
  return markers;
}

const PhraseList& multi_step_markers() {
  static const PhraseList markers = {"then", "after that", "step", "steps", "afterwards"};
  return markers;
}

bool has_contraction_negation(const std::vector<std::string>& tokens) {
  return std::any_of(tokens.begin(), tokens.end(), [](const std::string& t) {
    return t.size() > 3 && t.compare(t.size() - 3, 3, "n't") == 0;
  });
}

// A pair of quotes enclosing one to three words, e.g. the "amazing" service.
bool has_ironic_quotes(std::string_view text) {
  static constexpr std::string_view kOpenCurly = "\xE2\x80\x9C";
  static constexpr std::string_view kCloseCurly = "\xE2\x80\x9D";
  struct Mark {
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Mark> marks;
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '"') {
      marks.push_back({i, i + 1});
      ++i;
    } else if (text.substr(i, 3) == kOpenCurly || text.substr(i, 3) == kCloseCurly) {
      marks.push_back({i, i + 3});
      i += 3;
    } else {
      ++i;
    }
  }
  for (std::size_t m = 0; m + 1 < marks.size(); m += 2) {
    auto inner = text.substr(marks[m].end, marks[m + 1].begin - marks[m].end);
    const auto words = split_words(inner);
    if (!words.empty() && words.size() <= 3 && !is_space(inner.front()) &&
        !is_space(inner.back())) {
      return true;
    }
  }
  return false;
}

bool is_numbered_item(std::string_view word) {
  if (word.size() < 2) return false;
  const char last = word.back();
  if (last != '.' && last != ')') return false;
  return std::all_of(word.begin(), word.end() - 1,
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

void require_nonempty(std::string_view text) {
  if (trim(text).empty()) throw Error(ErrorCode::EmptyQuery, "query is empty");
}

std::string join(const std::vector<std::string_view>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out.append(w);
  }
  return out;
}

}  // namespace

void validate(const PruneConfig& cfg) {
  if (cfg.max_words == 0 || cfg.head_words == 0 || cfg.tail_words == 0 ||
      cfg.middle_sample_words == 0) {
    throw Error(ErrorCode::InvalidArgument, "prune word counts must be positive");
  }
  if (cfg.head_words + cfg.tail_words + cfg.middle_sample_words > cfg.max_words) {
    throw Error(ErrorCode::InvalidArgument,
                "head_words + tail_words + middle_sample_words must not exceed max_words");
  }
}

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

std::string prune_query(std::string_view text, const PruneConfig& cfg) {
  validate(cfg);
  const auto words = split_words(text);
  if (words.size() <= cfg.max_words) return std::string(text);

  const std::size_t middle_begin = cfg.head_words;
  const std::size_t middle_end = words.size() - cfg.tail_words;
  Rng rng(cfg.seed);
  const auto picked = rng.sample_indices(middle_end - middle_begin, cfg.middle_sample_words);

  std::vector<std::string_view> out(words.begin(), words.begin() + middle_begin);
  out.push_back(kPruneMarker);
  for (auto offset : picked) out.push_back(words[middle_begin + offset]);
  out.push_back(kPruneMarker);
  out.insert(out.end(), words.begin() + static_cast<std::ptrdiff_t>(middle_end), words.end());
  return join(out);
}

TaskType classify_task(std::string_view text) {
  require_nonempty(text);
  const auto tokens = lexical_tokens(text);
  for (const auto& rule : task_rules()) {
    if (rule.phrases.count(tokens) > 0) return rule.type;
  }
  if (trim(text).back() == '?') return TaskType::question_answering;
  return TaskType::other;
}

std::array<int, kAllDomains.size()> domain_hits(std::string_view text) {
  std::array<int, kAllDomains.size()> hits{};
  const auto tokens = lexical_tokens(text);
  for (const auto& lex : domain_lexicons()) {
    hits[static_cast<std::size_t>(lex.domain)] = lex.words.count(tokens);
  }
  return hits;
}

Domain classify_domain(std::string_view text) {
  require_nonempty(text);
  const auto hits = domain_hits(text);
  int best = 0;
  Domain winner = Domain::general;
  bool tied = false;
  for (auto d : kAllDomains) {
    const int h = hits[static_cast<std::size_t>(d)];
    if (h > best) {
      best = h;
      winner = d;
      tied = false;
    } else if (h == best && h > 0) {
      tied = true;
    }
  }
  return tied ? Domain::general : winner;
}

ComplexitySignals complexity_signals(std::string_view text) {
  ComplexitySignals s;
  const auto words = split_words(text);
  s.words = words.size();
  const auto tokens = lexical_tokens(text);
  s.negation = negation_markers().count(tokens) > 0 || has_contraction_negation(tokens) ||
               has_ironic_quotes(text);
  const auto numbered = std::count_if(words.begin(), words.end(), is_numbered_item);
  s.multi_step = multi_step_markers().count(tokens) > 0 || numbered >= 2;
  const auto hits = domain_hits(text);
  s.rare_domain = std::any_of(hits.begin(), hits.end(), [](int h) { return h > 0; });
  return s;
}

double estimate_complexity(std::string_view text) {
  require_nonempty(text);
  const auto s = complexity_signals(text);
  const double length = std::min(1.0, static_cast<double>(s.words) / 300.0);
  const double score = 0.15 + 0.25 * length + 0.20 * (s.negation ? 1.0 : 0.0) +
                       0.20 * (s.multi_step ? 1.0 : 0.0) + 0.20 * (s.rare_domain ? 1.0 : 0.0);
  return std::clamp(score, 0.0, 1.0);
}

TaskProfile analyze(std::string_view text, const PruneConfig& cfg) {
  require_nonempty(text);
  const std::string pruned = prune_query(text, cfg);
  return {classify_task(pruned), classify_domain(pruned), estimate_complexity(pruned)};
}

AnalyzeFn heuristic_analyzer(PruneConfig cfg) {
  validate(cfg);
  return [cfg](std::string_view text) { return Analysis{analyze(text, cfg), "heuristic"}; };
}

}  // namespace optiroute
