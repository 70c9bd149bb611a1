#include "sumfact/prompts.hpp"

#include <charconv>

#include "sumfact/error.hpp"
#include "template_assets.hpp"

namespace sumfact {

namespace {

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_csv(std::string_view s) {
  std::vector<std::string> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const auto item = trim_view(s.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::Binary: return "binary";
    case Granularity::BinaryReasoning: return "binary_reasoning";
    case Granularity::FullLocalization: return "full_localization";
  }
  return "?";
}

Granularity parse_granularity(std::string_view s) {
  if (s == "binary") return Granularity::Binary;
  if (s == "binary_reasoning" || s == "reasoning") return Granularity::BinaryReasoning;
  if (s == "full_localization" || s == "localization") return Granularity::FullLocalization;
  throw Error(ErrorKind::InvalidConfig, "unknown granularity '" + std::string(s) + "'");
}

PromptTemplate parse_template_asset(std::string_view asset) {
  PromptTemplate t;
  const auto sep = asset.find("\n---\n");
  if (sep == std::string_view::npos) throw Error(ErrorKind::SchemaMismatch, "template asset lacks a '---' separator");
  std::string_view header = asset.substr(0, sep);
  std::string_view body = asset.substr(sep + 5);
  while (!header.empty()) {
    const auto nl = header.find('\n');
    const std::string_view line = nl == std::string_view::npos ? header : header.substr(0, nl);
    const auto colon = line.find(':');
    if (colon != std::string_view::npos) {
      const auto key = trim_view(line.substr(0, colon));
      const auto value = trim_view(line.substr(colon + 1));
      if (key == "name") t.name = value;
      else if (key == "version") t.version = value;
      else if (key == "reconstructed") t.reconstructed = value == "true";
      else if (key == "steps") t.steps = split_csv(value);
    }
    if (nl == std::string_view::npos) break;
    header.remove_prefix(nl + 1);
  }
  if (t.name.empty() || t.version.empty())
    throw Error(ErrorKind::SchemaMismatch, "template asset needs 'name' and 'version'");
  if (!body.empty() && body.back() == '\n') body.remove_suffix(1);
  t.body = body;
  return t;
}

const PromptTemplate& template_for(Granularity g) {
  static const PromptTemplate binary = parse_template_asset(assets::kBinary);
  static const PromptTemplate reasoning = parse_template_asset(assets::kBinaryReasoning);
  static const PromptTemplate full = parse_template_asset(assets::kFullLocalization);
  switch (g) {
    case Granularity::Binary: return binary;
    case Granularity::BinaryReasoning: return reasoning;
    case Granularity::FullLocalization: return full;
  }
  return full;
}

const PromptTemplate& summary_template() {
  static const PromptTemplate summarize = parse_template_asset(assets::kSummarize);
  return summarize;
}

std::string render(const PromptTemplate& tmpl, const std::map<std::string, std::string, std::less<>>& slots) {
  const std::string_view body = tmpl.body;
  std::string out;
  out.reserve(body.size() + 256);
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      const auto close = body.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = slots.find(body.substr(i + 1, close - i - 1));
        if (it != slots.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += body[i++];
  }
  return out;
}

std::string number_sentences(std::span<const std::string> sentences) {
  std::string out;
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    if (k > 0) out += '\n';
    out += '[' + std::to_string(k + 1) + "] " + sentences[k];
  }
  return out;
}

PromptText build_prompt(Granularity g, const Document& document, std::span<const std::string> sentences) {
  if (sentences.empty()) throw Error(ErrorKind::EmptySentences, "cannot build a prompt for zero sentences");
  const auto& tmpl = template_for(g);
  PromptText p;
  p.body = render(tmpl, {{"document", document.text},
                         {"sentence_count", std::to_string(sentences.size())},
                         {"numbered_sentences", number_sentences(sentences)}});
  p.granularity = g;
  p.sentence_count = sentences.size();
  p.template_version = tmpl.version_tag();
  return p;
}

std::string build_summary_prompt(const Document& document) {
  return render(summary_template(), {{"document", document.text}});
}

PromptParts parse_prompt(std::string_view body) {
  constexpr std::string_view kDocMarker = "\nDocument:\n";
  constexpr std::string_view kSummaryMarker = "\n\nSummary with ";
  constexpr std::string_view kOutputMarker = "\n\nJSON Output:";

  const auto doc_at = body.find(kDocMarker);
  const auto sum_at = body.rfind(kSummaryMarker);
  if (doc_at == std::string_view::npos || sum_at == std::string_view::npos || sum_at < doc_at)
    throw Error(ErrorKind::SchemaMismatch, "prompt has no document/summary sections");

  PromptParts parts;
  parts.document = body.substr(doc_at + kDocMarker.size(), sum_at - doc_at - kDocMarker.size());

  std::string_view rest = body.substr(sum_at + kSummaryMarker.size());
  std::size_t count = 0;
  auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), count);
  if (ec != std::errc{}) throw Error(ErrorKind::SchemaMismatch, "prompt sentence count is not a number");
  rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
  const auto header_end = rest.find('\n');
  if (header_end == std::string_view::npos) throw Error(ErrorKind::SchemaMismatch, "prompt has no sentences");
  rest.remove_prefix(header_end + 1);
  if (const auto out_at = rest.rfind(kOutputMarker); out_at != std::string_view::npos) rest = rest.substr(0, out_at);

  for (std::size_t k = 1; k <= count; ++k) {
    const std::string prefix = '[' + std::to_string(k) + "] ";
    if (!rest.starts_with(prefix))
      throw Error(ErrorKind::SchemaMismatch, "prompt line for sentence " + std::to_string(k) + " is missing");
    rest.remove_prefix(prefix.size());
    const auto nl = rest.find('\n');
    parts.sentences.emplace_back(rest.substr(0, nl));
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
  }
  return parts;
}

}  // namespace sumfact
