#include "potforge/phrases.hpp"

#include <cctype>
#include <regex>

#include "potforge/error.hpp"

namespace potforge {
namespace {

std::string_view trim_view(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_quotes(std::string s) {
  static constexpr std::string_view kPairs[][2] = {
      {"\"", "\""}, {"'", "'"}, {"“", "”"}, {"‘", "’"}, {"**", "**"}};
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& p : kPairs) {
      if (s.size() >= p[0].size() + p[1].size() && s.starts_with(p[0]) && s.ends_with(p[1])) {
        s = std::string(trim_view(std::string_view(s).substr(
            p[0].size(), s.size() - p[0].size() - p[1].size())));
        changed = true;
      }
    }
  }
  return s;
}

}  // namespace

std::string_view to_string(PhraseOrigin origin) {
  switch (origin) {
    case PhraseOrigin::kSeedCorpus: return "seed_corpus";
    case PhraseOrigin::kGenerator: return "generator";
    case PhraseOrigin::kOptimizerRound: return "optimizer_round";
  }
  return "seed_corpus";
}

PhraseOrigin phrase_origin_from_string(std::string_view s) {
  if (s == "seed_corpus") return PhraseOrigin::kSeedCorpus;
  if (s == "generator") return PhraseOrigin::kGenerator;
  if (s == "optimizer_round") return PhraseOrigin::kOptimizerRound;
  throw Error(ErrorCode::kInvalidArgument, "unknown phrase origin '" + std::string(s) + "'");
}

void to_json(nlohmann::json& j, const GuidingPhrase& p) {
  j = nlohmann::json{{"id", p.id},
                     {"text", p.text},
                     {"origin", to_string(p.origin)},
                     {"created_round", p.created_round}};
}

void from_json(const nlohmann::json& j, GuidingPhrase& p) {
  p.id = j.at("id").get<std::string>();
  p.text = j.at("text").get<std::string>();
  p.origin = phrase_origin_from_string(j.at("origin").get<std::string>());
  p.created_round = j.value("created_round", 0);
}

void to_json(nlohmann::json& j, const Question& q) {
  j = nlohmann::json{{"id", q.id},
                     {"question", q.text},
                     {"answer", q.ground_truth ? nlohmann::json(*q.ground_truth) : nlohmann::json(nullptr)},
                     {"dataset", q.dataset}};
}

void from_json(const nlohmann::json& j, Question& q) {
  q.id = j.at("id").get<std::string>();
  q.text = j.at("question").get<std::string>();
  q.ground_truth.reset();
  if (j.contains("answer") && !j.at("answer").is_null()) q.ground_truth = j.at("answer").get<CanonicalAnswer>();
  q.dataset = j.value("dataset", std::string{});
}

std::optional<std::string> phrase_violation(std::string_view text, std::size_t max_chars) {
  if (trim_view(text).empty()) return "empty phrase";
  if (trim_view(text).size() != text.size()) return "leading or trailing whitespace";
  for (unsigned char c : text) {
    if (c < 0x20 || c == 0x7f) return "control character in phrase";
  }
  const std::size_t len = utf8_length(text);
  if (len > max_chars) {
    return "phrase has " + std::to_string(len) + " characters, limit " + std::to_string(max_chars);
  }
  return std::nullopt;
}

std::vector<std::string> split_phrase_list(std::string_view response) {
  static const std::regex kMarker(R"(^(?:\d+\s*[.):]|[-*•]|[(]\d+[)])\s+(.*)$)");
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    std::string item = strip_quotes(std::string(trim_view(cur)));
    // "Here are the phrases:" style preambles are not phrases
    if (!item.empty() && !item.ends_with(':')) out.push_back(std::move(item));
    cur.clear();
  };
  std::vector<std::string> lines;
  bool any_marker = false;
  for (std::size_t start = 0; start <= response.size();) {
    auto end = response.find('\n', start);
    if (end == std::string_view::npos) end = response.size();
    lines.emplace_back(trim_view(response.substr(start, end - start)));
    if (std::regex_match(lines.back(), kMarker)) any_marker = true;
    start = end + 1;
  }
  for (const std::string& line : lines) {
    // without list markers every line stands alone
    if (!any_marker) {
      flush();
      cur = line;
      continue;
    }
    std::smatch m;
    if (line.empty()) {
      flush();
    } else if (std::regex_match(line, m, kMarker)) {
      flush();
      cur = m[1].str();
    } else if (!cur.empty()) {
      cur += ' ';
      cur += line;
    } else {
      cur = line;
    }
  }
  flush();
  return out;
}

std::string fold_case(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool space = false;
  for (unsigned char c : trim_view(text)) {
    if (std::isspace(c)) {
      space = true;
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::size_t utf8_length(std::string_view text) noexcept {
  std::size_t n = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

}  // namespace potforge
