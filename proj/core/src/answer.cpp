#include "potforge/answer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <optional>
#include <regex>
#include <vector>

#include "potforge/error.hpp"

namespace potforge {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool space = false;
  for (unsigned char c : trim(s)) {
    if (std::isspace(c)) {
      space = true;
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

// Removes wrappers that do not change the value: $...$, \text{...},
// \left/\right, trailing sentence punctuation.
std::string strip_decoration(std::string s) {
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    s = trim(s);
    if (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
      s = s.substr(1, s.size() - 2);
      changed = true;
      continue;
    }
    for (std::string_view wrap : {"\\text{", "\\mathrm{", "\\textbf{", "\\mathbf{", "\\boxed{"}) {
      if (s.starts_with(wrap) && s.back() == '}') {
        s = s.substr(wrap.size(), s.size() - wrap.size() - 1);
        changed = true;
        break;
      }
    }
    if (changed) continue;
    if (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';' || s.back() == '!')) {
      s.pop_back();
      changed = true;
    }
  }
  return s;
}

std::string strip_leading_zeros(std::string digits) {
  const auto nz = digits.find_first_not_of('0');
  return nz == std::string::npos ? "0" : digits.substr(nz);
}

struct Signed {
  bool negative = false;
  std::string digits;
};

std::string render_integer(bool negative, const std::string& digits) {
  const std::string d = strip_leading_zeros(digits);
  return (negative && d != "0" ? "-" : "") + d;
}

std::optional<CanonicalAnswer> as_number(const std::string& raw, const std::string& s_in) {
  std::string s;
  for (char c : s_in) {
    if (c != ' ') s.push_back(c);
  }
  for (std::string_view pre : {"\\$", "$", "€", "£"}) {
    if (s.starts_with(pre)) s.erase(0, pre.size());
  }
  for (std::string_view suf : {"\\%", "%"}) {
    if (s.ends_with(suf)) s.erase(s.size() - suf.size());
  }
  static const std::regex kThousands(R"(^[+-]?\d{1,3}(,\d{3})+(\.\d+)?$)");
  if (std::regex_match(s, kThousands)) s.erase(std::remove(s.begin(), s.end(), ','), s.end());

  static const std::regex kInt(R"(^([+-]?)(\d+)$)");
  static const std::regex kFrac(R"(^([+-]?)(\d+)/([+-]?)(\d+)$)");
  static const std::regex kTexFrac(R"(^([+-]?)\\d?frac\{([+-]?)(\d+)\}\{(\d+)\}$)");
  static const std::regex kDec(R"(^([+-]?)(\d*)\.(\d+)$|^([+-]?)(\d+)\.$)");
  std::smatch m;
  if (std::regex_match(s, m, kInt)) {
    return CanonicalAnswer{raw, render_integer(m[1] == "-", m[2].str()), AnswerKind::kInteger};
  }

  std::optional<std::pair<bool, std::pair<std::string, std::string>>> frac;
  if (std::regex_match(s, m, kFrac)) {
    frac = {(m[1] == "-") != (m[3] == "-"), {m[2].str(), m[4].str()}};
  } else if (std::regex_match(s, m, kTexFrac)) {
    frac = {(m[1] == "-") != (m[2] == "-"), {m[3].str(), m[4].str()}};
  }
  if (frac) {
    try {
      long long num = std::stoll(frac->second.first);
      long long den = std::stoll(frac->second.second);
      if (den == 0) return std::nullopt;
      const long long g = std::gcd(num, den);
      if (g > 0) {
        num /= g;
        den /= g;
      }
      const bool neg = frac->first && num != 0;
      if (den == 1) {
        return CanonicalAnswer{raw, (neg ? "-" : "") + std::to_string(num), AnswerKind::kInteger};
      }
      return CanonicalAnswer{raw, (neg ? "-" : "") + std::to_string(num) + "/" + std::to_string(den),
                             AnswerKind::kRational};
    } catch (const std::out_of_range&) {
      return std::nullopt;
    }
  }

  if (std::regex_match(s, m, kDec)) {
    const bool neg = m[1] == "-" || m[4] == "-";
    std::string whole = m[2].matched || m[3].matched ? m[2].str() : m[5].str();
    std::string frac_digits = m[3].matched ? m[3].str() : "";
    while (!frac_digits.empty() && frac_digits.back() == '0') frac_digits.pop_back();
    if (frac_digits.empty()) {
      return CanonicalAnswer{raw, render_integer(neg, whole.empty() ? "0" : whole),
                             AnswerKind::kInteger};
    }
    std::string canon = (neg ? "-" : "") + strip_leading_zeros(whole.empty() ? "0" : whole) + "." +
                        frac_digits;
    return CanonicalAnswer{raw, canon, AnswerKind::kDecimal};
  }
  return std::nullopt;
}

std::optional<CanonicalAnswer> as_choice(const std::string& raw, const std::string& s) {
  static const std::regex kChoice(R"(^(?:option\s+)?\(?([A-Ea-e])\)?(?:\s*[.:)].*)?$)",
                                  std::regex::icase);
  std::smatch m;
  if (std::regex_match(s, m, kChoice)) {
    return CanonicalAnswer{raw, std::string(1, static_cast<char>(std::toupper(m[1].str()[0]))),
                           AnswerKind::kChoice};
  }
  return std::nullopt;
}

std::optional<double> numeric_value(const CanonicalAnswer& a) {
  try {
    if (a.kind == AnswerKind::kRational) {
      const auto slash = a.canonical.find('/');
      return std::stod(a.canonical.substr(0, slash)) / std::stod(a.canonical.substr(slash + 1));
    }
    if (a.kind == AnswerKind::kInteger || a.kind == AnswerKind::kDecimal) {
      return std::stod(a.canonical);
    }
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

// Text following the last \boxed{ with balanced braces.
std::optional<std::string> last_boxed(std::string_view text) {
  const auto pos = text.rfind("\\boxed{");
  if (pos == std::string_view::npos) return std::nullopt;
  std::size_t i = pos + 7;
  int depth = 1;
  std::string out;
  for (; i < text.size(); ++i) {
    if (text[i] == '{') ++depth;
    if (text[i] == '}' && --depth == 0) return out;
    out.push_back(text[i]);
  }
  return std::nullopt;
}

const std::regex& number_regex() {
  static const std::regex kNumber(
      R"([-+]?\\d?frac\{[-+]?\d+\}\{\d+\}|[-+]?\d{1,3}(?:,\d{3})+(?:\.\d+)?|[-+]?\d+(?:\.\d+)?(?:\s*/\s*\d+)?|[-+]?\.\d+)");
  return kNumber;
}

std::optional<std::string> last_match(const std::string& s, const std::regex& re) {
  std::optional<std::string> last;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    last = it->str();
  }
  return last;
}

std::optional<std::string> first_match(const std::string& s, const std::regex& re) {
  std::smatch m;
  if (std::regex_search(s, m, re)) return m.str();
  return std::nullopt;
}

const std::regex& choice_regex() {
  static const std::regex kChoice(R"(\(([A-Ea-e])\)|\b([A-E])\b)");
  return kChoice;
}

// Resolves a marker span (the text after "answer is" etc.) to one answer.
std::optional<CanonicalAnswer> resolve_span(const std::string& span, AnswerHint hint) {
  const std::string cleaned = strip_decoration(span);
  if (cleaned.empty()) return std::nullopt;
  if (hint == AnswerHint::kText) return canonicalize_answer(cleaned, hint);
  if (hint != AnswerHint::kNumeric) {
    if (auto c = as_choice(cleaned, cleaned)) return c;
  }
  if (hint != AnswerHint::kChoice) {
    if (auto n = as_number(cleaned, cleaned)) return n;
    if (auto num = first_match(cleaned, number_regex())) return canonicalize_answer(*num, hint);
  }
  if (hint == AnswerHint::kChoice) {
    std::smatch m;
    if (std::regex_search(cleaned, m, choice_regex())) {
      const std::string letter = m[1].matched ? m[1].str() : m[2].str();
      return canonicalize_answer(letter, hint);
    }
  }
  return canonicalize_answer(cleaned, AnswerHint::kText);
}

}  // namespace

std::string_view to_string(AnswerKind kind) {
  switch (kind) {
    case AnswerKind::kInteger: return "integer";
    case AnswerKind::kRational: return "rational";
    case AnswerKind::kDecimal: return "decimal";
    case AnswerKind::kChoice: return "choice";
    case AnswerKind::kText: return "text";
  }
  return "text";
}

AnswerKind answer_kind_from_string(std::string_view s) {
  if (s == "integer") return AnswerKind::kInteger;
  if (s == "rational") return AnswerKind::kRational;
  if (s == "decimal") return AnswerKind::kDecimal;
  if (s == "choice") return AnswerKind::kChoice;
  if (s == "text") return AnswerKind::kText;
  throw Error(ErrorCode::kInvalidArgument, "unknown answer kind '" + std::string(s) + "'");
}

void to_json(nlohmann::json& j, const CanonicalAnswer& a) {
  j = nlohmann::json{{"raw", a.raw}, {"canonical", a.canonical}, {"kind", to_string(a.kind)}};
}

void from_json(const nlohmann::json& j, CanonicalAnswer& a) {
  a.raw = j.value("raw", std::string{});
  a.canonical = j.at("canonical").get<std::string>();
  a.kind = answer_kind_from_string(j.at("kind").get<std::string>());
}

CanonicalAnswer canonicalize_answer(std::string_view span, AnswerHint hint) {
  const std::string raw = trim(span);
  const std::string s = strip_decoration(raw);
  if (hint != AnswerHint::kText) {
    if (hint != AnswerHint::kChoice) {
      if (auto n = as_number(raw, s)) return *n;
    }
    if (hint != AnswerHint::kNumeric) {
      if (auto c = as_choice(raw, s)) return *c;
    }
  }
  return CanonicalAnswer{raw, lower(collapse_spaces(s)), AnswerKind::kText};
}

CanonicalAnswer extract_answer(std::string_view text, AnswerHint hint) {
  const std::string body = trim(text);
  if (body.empty()) throw Error(ErrorCode::kNoAnswerFound, "empty model output");

  // Tier 1: boxed answer, then the last explicit marker.
  if (auto boxed = last_boxed(body)) {
    if (auto a = resolve_span(*boxed, hint)) return *a;
  }
  static const std::regex kMarker(
      R"((final answer\s*(?:is)?\s*[:=]?|the answer is\s*:?|answer\s*[:=]|answer is\s*:?)\s*)",
      std::regex::icase);
  std::optional<std::size_t> span_start;
  for (auto it = std::sregex_iterator(body.begin(), body.end(), kMarker);
       it != std::sregex_iterator(); ++it) {
    span_start = static_cast<std::size_t>(it->position() + it->length());
  }
  if (span_start) {
    std::string span = body.substr(*span_start);
    const auto nl = span.find('\n');
    if (nl != std::string::npos) span = span.substr(0, nl);
    static const std::regex kSentenceEnd(R"([.!?](\s|$))");
    std::smatch m;
    // A '.' inside a decimal is not a sentence end, so only cut at ". "
    if (std::regex_search(span, m, kSentenceEnd)) span = span.substr(0, m.position());
    if (auto a = resolve_span(span, hint)) return *a;
  }

  // Tier 2: last standalone number or choice in the final sentence.
  std::string last_line;
  {
    std::size_t end = body.size();
    while (end > 0) {
      const auto nl = body.rfind('\n', end - 1);
      const std::size_t b = nl == std::string::npos ? 0 : nl + 1;
      last_line = trim(std::string_view(body).substr(b, end - b));
      if (!last_line.empty() || nl == std::string::npos) break;
      end = nl;
    }
  }
  std::string sentence = last_line;
  {
    static const std::regex kSplit(R"([.!?]\s+)");
    std::vector<std::string> parts;
    std::sregex_token_iterator it(last_line.begin(), last_line.end(), kSplit, -1);
    for (; it != std::sregex_token_iterator(); ++it) {
      const std::string p = trim(it->str());
      if (!p.empty()) parts.push_back(p);
    }
    if (!parts.empty()) sentence = parts.back();
  }
  if (hint != AnswerHint::kText) {
    if (hint != AnswerHint::kNumeric) {
      static const std::regex kParenChoice(R"(\(([A-Ea-e])\))");
      if (auto c = last_match(sentence, kParenChoice)) return canonicalize_answer(*c, hint);
    }
    if (hint != AnswerHint::kChoice) {
      if (auto n = last_match(sentence, number_regex())) return canonicalize_answer(*n, hint);
    }
  }

  // Tier 3: the last line as text.
  return CanonicalAnswer{last_line, lower(collapse_spaces(strip_decoration(last_line))),
                         AnswerKind::kText};
}

bool answers_match(const CanonicalAnswer& a, const CanonicalAnswer& b) {
  if (a.canonical.empty() || b.canonical.empty()) return false;
  const auto va = numeric_value(a);
  const auto vb = numeric_value(b);
  if (va && vb) {
    if (a.kind == AnswerKind::kInteger && b.kind == AnswerKind::kInteger) {
      return a.canonical == b.canonical;
    }
    const double scale = std::max({1.0, std::abs(*va), std::abs(*vb)});
    return std::abs(*va - *vb) <= 1e-9 * scale;
  }
  return a.kind == b.kind && a.canonical == b.canonical;
}

}  // namespace potforge
