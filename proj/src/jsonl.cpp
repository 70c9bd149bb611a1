#include "sumfact/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "sumfact/error.hpp"

namespace sumfact {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::EmptySentences: return "EmptySentences";
    case ErrorKind::EndpointUnavailable: return "EndpointUnavailable";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::MalformedResponse: return "MalformedResponse";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::NoJsonFound: return "NoJsonFound";
    case ErrorKind::UnbalancedBrackets: return "UnbalancedBrackets";
    case ErrorKind::WrongArity: return "WrongArity";
    case ErrorKind::UnknownCategory: return "UnknownCategory";
    case ErrorKind::MissingKey: return "MissingKey";
    case ErrorKind::Exhausted: return "Exhausted";
    case ErrorKind::DegenerateGroundTruth: return "DegenerateGroundTruth";
    case ErrorKind::ConstantVector: return "ConstantVector";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::KeyMismatch: return "KeyMismatch";
    case ErrorKind::TooFewSystems: return "TooFewSystems";
    case ErrorKind::MisalignedInputs: return "MisalignedInputs";
    case ErrorKind::CoverageMismatch: return "CoverageMismatch";
    case ErrorKind::InvalidRecord: return "InvalidRecord";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  std::vector<Json> rows;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      rows.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw Error(ErrorKind::SchemaMismatch,
                  path.filename().string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

std::string dump_compact(const Json& j) {
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows) {
  std::string buf;
  for (const auto& row : rows) {
    buf += dump_compact(row);
    buf += '\n';
  }
  write_text(path, buf);
}

const Json& require(const Json& obj, std::string_view key) {
  if (!obj.is_object()) throw Error(ErrorKind::SchemaMismatch, "expected a JSON object");
  auto it = obj.find(std::string(key));
  if (it == obj.end()) throw Error(ErrorKind::SchemaMismatch, "missing field '" + std::string(key) + "'");
  return *it;
}

std::string require_string(const Json& obj, std::string_view key) {
  const Json& v = require(obj, key);
  if (!v.is_string())
    throw Error(ErrorKind::SchemaMismatch, "field '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

}  // namespace sumfact
