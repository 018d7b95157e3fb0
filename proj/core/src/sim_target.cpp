#include "potforge/sim_target.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <regex>
#include <set>

#include <fmt/format.h>

#include "potforge/digest.hpp"
#include "potforge/error.hpp"

namespace potforge {
namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::mt19937_64 seeded_engine(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (std::uint64_t p : parts) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

// Uniform integer in [0, n) from raw engine output; the modulo bias is
// negligible for the small ranges used here and keeps results identical
// across standard libraries.
std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return n == 0 ? 0 : rng() % n; }

bool coin(std::mt19937_64& rng, double p) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53 < p;
}

std::int64_t gcd64(std::int64_t a, std::int64_t b) { return std::gcd(a, b); }

std::optional<std::string> evaluate_expression(std::int64_t a, char op, std::int64_t b) {
  std::int64_t r = 0;
  bool overflow = false;
  switch (op) {
    case '+': overflow = __builtin_add_overflow(a, b, &r); break;
    case '-': overflow = __builtin_sub_overflow(a, b, &r); break;
    case '*': overflow = __builtin_mul_overflow(a, b, &r); break;
    case '/': {
      if (b == 0 || (a == INT64_MIN && b == -1)) return std::nullopt;
      if (a % b == 0) {
        r = a / b;
        break;
      }
      std::int64_t num = a;
      std::int64_t den = b;
      if (den < 0) {
        num = -num;
        den = -den;
      }
      const std::int64_t g = gcd64(num, den);
      return fmt::format("{}/{}", num / g, den / g);
    }
    default: return std::nullopt;
  }
  if (overflow) return std::nullopt;
  return std::to_string(r);
}

std::string wrong_answer(const std::string& truth) {
  static const std::regex kInt(R"(^-?\d+$)");
  if (std::regex_match(truth, kInt)) {
    try {
      return std::to_string(std::stoll(truth) + 1);
    } catch (const std::out_of_range&) {
    }
  }
  return "not " + truth;
}

// --- optimizer stub helpers ---

struct HistoryLine {
  std::string text;
  double score = 0.0;
};

using Clause = std::vector<std::string>;

std::vector<Clause> clauses_of(std::string_view text) {
  std::vector<Clause> out;
  Clause cur;
  std::string word;
  auto end_word = [&] {
    if (!word.empty()) cur.push_back(std::exchange(word, {}));
  };
  auto end_clause = [&] {
    end_word();
    if (!cur.empty()) out.push_back(std::exchange(cur, {}));
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '\'' || c == '-') {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == ' ' || c == '\t') {
      end_word();
    } else if (c >= 0x80) {
      // drop non-ASCII bytes (arrows, dashes) without splitting words
    } else {
      end_clause();
    }
  }
  end_clause();
  return out;
}

std::size_t word_count(const std::vector<Clause>& clauses) {
  std::size_t n = 0;
  for (const auto& c : clauses) n += c.size();
  return n;
}

}  // namespace

std::vector<std::string> validate(const SimTargetConfig& cfg) {
  std::vector<std::string> errors;
  if (cfg.base_reasoning_tokens <= 0) errors.push_back("sim base_reasoning_tokens must be > 0");
  if (cfg.noise_amplitude < 0) errors.push_back("sim noise_amplitude must be >= 0");
  std::set<std::string> seen;
  for (const auto& t : cfg.trigger_lexicon) {
    if (t.weight < 0) errors.push_back(fmt::format("sim trigger '{}' has negative weight", t.pattern));
    if (t.pattern.empty()) errors.push_back("sim trigger pattern is empty");
    if (t.pattern != lower_ascii(t.pattern)) {
      errors.push_back(fmt::format("sim trigger '{}' must be lowercase", t.pattern));
    }
    if (!seen.insert(t.pattern).second) {
      errors.push_back(fmt::format("sim trigger '{}' listed twice", t.pattern));
    }
  }
  for (const auto& p : cfg.corruption_patterns) {
    if (p.empty()) errors.push_back("sim corruption pattern is empty");
  }
  return errors;
}

SimTargetConfig default_sim_target_config() {
  SimTargetConfig cfg;
  cfg.base_reasoning_tokens = 300;
  cfg.trigger_lexicon = {
      {"multiple perspectives", 400}, {"explore each", 350},        {"step by step", 300},
      {"hidden assumptions", 300},    {"verify every", 250},        {"alternative approaches", 200},
  };
  cfg.corruption_patterns = {"ignore the question", "give the opposite answer"};
  cfg.noise_amplitude = 0;
  cfg.rng_seed = 0;
  return cfg;
}

std::string sim_ground_truth(std::string_view prompt) {
  static const std::regex kTag(R"(\[answer:\s*([^\]]+)\])", std::regex::icase);
  const std::string text(prompt);
  std::smatch m;
  if (std::regex_search(text, m, kTag)) return trim(m[1].str());

  // "×" is two bytes; normalize before matching the operator class.
  std::string ascii;
  ascii.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text.compare(i, 2, "×") == 0) {
      ascii.push_back('*');
      ++i;
    } else {
      ascii.push_back(text[i]);
    }
  }
  static const std::regex kAsciiExpr(R"((-?\d+)\s*([-+*/])\s*(-?\d+))");
  if (std::regex_search(ascii, m, kAsciiExpr)) {
    try {
      if (auto r = evaluate_expression(std::stoll(m[1].str()), m[2].str()[0], std::stoll(m[3].str()))) {
        return *r;
      }
    } catch (const std::out_of_range&) {
    }
  }
  return "unknown";
}

CompletionRecord sim_complete(std::string_view prompt, const SimTargetConfig& cfg,
                              std::int64_t per_call_seed) {
  if (prompt.empty()) throw Error(ErrorCode::kInvalidArgument, "sim_complete needs a prompt");
  const std::string lower = lower_ascii(prompt);

  std::int64_t tokens = cfg.base_reasoning_tokens;
  for (const auto& t : cfg.trigger_lexicon) {
    if (!t.pattern.empty() && lower.find(t.pattern) != std::string::npos) tokens += t.weight;
  }
  if (cfg.noise_amplitude > 0) {
    auto rng = seeded_engine({cfg.rng_seed, static_cast<std::uint64_t>(per_call_seed),
                              fnv1a64(prompt)});
    const auto span = static_cast<std::uint64_t>(2 * cfg.noise_amplitude + 1);
    tokens += static_cast<std::int64_t>(draw(rng, span)) - cfg.noise_amplitude;
  }

  bool corrupted = false;
  for (const auto& p : cfg.corruption_patterns) {
    if (!p.empty() && lower.find(lower_ascii(p)) != std::string::npos) corrupted = true;
  }
  std::string answer = sim_ground_truth(prompt);
  if (corrupted) answer = wrong_answer(answer);

  CompletionRecord r;
  r.answer_text = "Working through the problem. The answer is \\boxed{" + answer + "}.";
  r.reasoning_tokens = std::max<std::int64_t>(tokens, 0);
  r.output_tokens = 7;
  r.source = RecordSource::kSimulator;
  r.provenance = TokenProvenance::kSimulator;
  return r;
}

std::vector<std::string> sim_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (c < 0x80 && std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::exchange(cur, {}));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

EmbeddingVector sim_embed(std::string_view text, int dim, std::uint64_t rng_seed) {
  if (dim < 2) throw Error(ErrorCode::kInvalidArgument, "sim_embed needs dim >= 2");
  EmbeddingVector v{std::vector<double>(static_cast<std::size_t>(dim), 0.0)};
  const std::uint64_t salt = splitmix64(rng_seed);
  for (const auto& w : sim_words(text)) {
    const std::uint64_t h = splitmix64(fnv1a64(w) ^ salt);
    const std::size_t idx = h % static_cast<std::uint64_t>(dim);
    v.values[idx] += (h >> 63) ? -1.0 : 1.0;
  }
  const double n = norm(v);
  if (n == 0.0) {
    std::fill(v.values.begin(), v.values.end(), 0.0);
    v.values[0] = 1.0;
    return v;
  }
  for (double& x : v.values) x /= n;
  return v;
}

std::string sim_optimizer_complete(std::string_view meta_prompt, std::int64_t seed) {
  static const std::regex kHistory(R"(^(.*) → (-?\d+(?:\.\d+)?)\s*$)");
  static const std::regex kCount(R"((\d+) new guiding phrase)");

  std::vector<HistoryLine> history;
  std::string free_text;
  std::size_t start = 0;
  const std::string text(meta_prompt);
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    std::smatch m;
    if (std::regex_match(line, m, kHistory)) {
      history.push_back({trim(m[1].str()), std::stod(m[2].str())});
    } else {
      free_text += line;
      free_text += '\n';
    }
    start = end + 1;
  }

  int m = 10;
  std::smatch cm;
  if (std::regex_search(text, cm, kCount)) m = std::clamp(std::stoi(cm[1].str()), 1, 100);

  std::vector<Clause> vocabulary = clauses_of(free_text);
  for (const auto& h : history) {
    for (auto& c : clauses_of(h.text)) vocabulary.push_back(std::move(c));
  }
  if (vocabulary.empty()) vocabulary.push_back({"think", "carefully"});

  const std::uint64_t digest = fnv1a64(meta_prompt);
  auto fragment = [&](std::mt19937_64& rng) {
    const Clause& c = vocabulary[draw(rng, vocabulary.size())];
    const std::size_t len = std::min<std::size_t>(c.size(), 2 + draw(rng, 3));
    const std::size_t off = draw(rng, c.size() - len + 1);
    return Clause(c.begin() + static_cast<std::ptrdiff_t>(off),
                  c.begin() + static_cast<std::ptrdiff_t>(off + len));
  };

  std::string out;
  for (int i = 0; i < m; ++i) {
    auto rng = seeded_engine({static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(i), digest});

    std::vector<Clause> clauses;
    if (!history.empty()) {
      // later history lines score higher; weight them quadratically
      std::vector<double> weights(history.size());
      for (std::size_t h = 0; h < history.size(); ++h) weights[h] = static_cast<double>((h + 1) * (h + 1));
      const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
      double pick = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
      std::size_t parent = history.size() - 1;
      for (std::size_t h = 0; h < history.size(); ++h) {
        if (pick < weights[h]) {
          parent = h;
          break;
        }
        pick -= weights[h];
      }
      clauses = clauses_of(history[parent].text);
    }

    if (clauses.size() > 1 && coin(rng, 0.4)) {
      clauses.erase(clauses.begin() + static_cast<std::ptrdiff_t>(draw(rng, clauses.size())));
    }
    auto insert = [&](Clause c) {
      const auto at = draw(rng, clauses.size() + 1);
      clauses.insert(clauses.begin() + static_cast<std::ptrdiff_t>(at), std::move(c));
    };
    insert(fragment(rng));
    if (coin(rng, 0.5)) insert(fragment(rng));
    if (history.size() > 1 && coin(rng, 0.3)) {
      const auto donor = clauses_of(history[draw(rng, history.size())].text);
      if (!donor.empty()) insert(donor[draw(rng, donor.size())]);
    }
    while (word_count(clauses) > 36 && clauses.size() > 1) {
      clauses.erase(clauses.begin() + static_cast<std::ptrdiff_t>(draw(rng, clauses.size())));
    }

    std::string phrase;
    for (std::size_t c = 0; c < clauses.size(); ++c) {
      if (c > 0) phrase += ", ";
      for (std::size_t w = 0; w < clauses[c].size(); ++w) {
        if (w > 0) phrase += ' ';
        phrase += clauses[c][w];
      }
    }
    if (!phrase.empty()) phrase[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(phrase[0])));
    phrase += '.';
    out += fmt::format("{}. {}\n", i + 1, phrase);
  }
  return out;
}

CompletionRecord SimTargetBackend::complete(const ModelEndpoint&, const CompletionRequest& request) {
  return sim_complete(request.prompt, cfg_, request.seed);
}

std::vector<EmbeddingVector> SimTargetBackend::embed(const ModelEndpoint& endpoint, std::string_view) {
  throw Error(ErrorCode::kInvalidArgument, "sim target '" + endpoint.id + "' does not embed");
}

CompletionRecord SimEmbedBackend::complete(const ModelEndpoint& endpoint, const CompletionRequest&) {
  throw Error(ErrorCode::kInvalidArgument, "sim embedder '" + endpoint.id + "' does not complete");
}

std::vector<EmbeddingVector> SimEmbedBackend::embed(const ModelEndpoint& endpoint,
                                                    std::string_view text) {
  const int dim = endpoint.dimension > 0 ? endpoint.dimension : 256;
  return {sim_embed(text, dim, seed_)};
}

CompletionRecord SimOptimizerBackend::complete(const ModelEndpoint&, const CompletionRequest& request) {
  CompletionRecord r;
  r.answer_text = sim_optimizer_complete(request.prompt, request.seed);
  r.reasoning_tokens = 0;
  r.output_tokens = static_cast<std::int64_t>(sim_words(r.answer_text).size());
  r.source = RecordSource::kSimulator;
  r.provenance = TokenProvenance::kSimulator;
  return r;
}

std::vector<EmbeddingVector> SimOptimizerBackend::embed(const ModelEndpoint& endpoint,
                                                        std::string_view) {
  throw Error(ErrorCode::kInvalidArgument, "sim optimizer '" + endpoint.id + "' does not embed");
}

}  // namespace potforge
