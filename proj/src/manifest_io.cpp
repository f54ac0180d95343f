#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hilite/error.hpp"
#include "hilite/qc.hpp"
#include "json.hpp"

namespace hilite::qc {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

// RFC 4180 record splitter; `in` is positioned at the start of a record.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == EOF) return false;
  std::string field;
  bool quoted = false;
  for (;;) {
    const int c = in.get();
    if (c == EOF) {
      if (quoted) throw Error(ErrorCode::ParseError, "unterminated quoted CSV field");
      fields.push_back(std::move(field));
      return true;
    }
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field += '"';
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field += static_cast<char>(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      return true;
    } else {
      field += static_cast<char>(c);
    }
  }
}

PairRecord record_from_fields(const std::vector<std::string>& f,
                              const std::string& where) {
  if (f.size() != 8) {
    throw Error(ErrorCode::ParseError,
                where + ": expected 8 fields, got " + std::to_string(f.size()));
  }
  PairRecord r;
  r.id = f[0];
  r.highlight_path = f[1];
  r.gt_path = f[2];
  const auto cat = parse_category(f[3]);
  const auto light = parse_light(f[4]);
  const auto angle = parse_angle(f[5]);
  const auto env = parse_environment(f[6]);
  if (!cat || !light || !angle || !env) {
    throw Error(ErrorCode::ParseError, where + ": unknown label value");
  }
  r.category = *cat;
  r.light = *light;
  r.angle = *angle;
  r.environment = *env;
  r.language = f[7];
  if (r.id.empty()) throw Error(ErrorCode::ParseError, where + ": empty id");
  return r;
}

json record_json(const PairRecord& r) {
  // Key order follows the CSV header.
  json j = json::object();
  j["id"] = r.id;
  j["highlight_path"] = r.highlight_path.generic_string();
  j["gt_path"] = r.gt_path.generic_string();
  j["category"] = to_string(r.category);
  j["light"] = to_string(r.light);
  j["angle"] = to_string(r.angle);
  j["environment"] = to_string(r.environment);
  j["language"] = r.language;
  return j;
}

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::UnwritablePath, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_manifest_csv(const Manifest& m, const fs::path& path) {
  std::ofstream out = open_for_write(path);
  out << kManifestCsvHeader << '\n';
  for (const PairRecord& r : m.records) {
    out << csv_field(r.id) << ',' << csv_field(r.highlight_path.generic_string())
        << ',' << csv_field(r.gt_path.generic_string()) << ','
        << to_string(r.category) << ',' << to_string(r.light) << ','
        << to_string(r.angle) << ',' << to_string(r.environment) << ','
        << csv_field(r.language) << '\n';
  }
}

void write_manifest_jsonl(const Manifest& m, const fs::path& path) {
  std::ofstream out = open_for_write(path);
  for (const PairRecord& r : m.records) out << record_json(r).dump() << '\n';
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "no such file: " + path.string());
  Manifest m;
  m.source_root = path.parent_path();

  if (path.extension() == ".jsonl") {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = path.string() + ":" + std::to_string(line_no);
      try {
        const json j = json::parse(line);
        m.records.push_back(record_from_fields(
            {j.at("id").get<std::string>(), j.at("highlight_path").get<std::string>(),
             j.at("gt_path").get<std::string>(), j.at("category").get<std::string>(),
             j.at("light").get<std::string>(), j.at("angle").get<std::string>(),
             j.at("environment").get<std::string>(),
             j.value("language", std::string(kUndeterminedLanguage))},
            where));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, where + ": " + e.what());
      }
    }
  } else if (path.extension() == ".csv") {
    std::vector<std::string> fields;
    if (!read_csv_record(in, fields)) {
      throw Error(ErrorCode::ParseError, path.string() + ": empty file");
    }
    std::string header;
    for (std::size_t i = 0; i < fields.size(); ++i)
      header += (i ? "," : "") + fields[i];
    if (header != kManifestCsvHeader) {
      throw Error(ErrorCode::ParseError, path.string() + ": unexpected header '" +
                                             header + "'");
    }
    int line_no = 1;
    while (read_csv_record(in, fields)) {
      ++line_no;
      if (fields.size() == 1 && fields[0].empty()) continue;
      m.records.push_back(
          record_from_fields(fields, path.string() + ":" + std::to_string(line_no)));
    }
  } else {
    throw Error(ErrorCode::UnsupportedFormat,
                "manifest must be .csv or .jsonl: " + path.string());
  }
  validate_unique_ids(m);
  return m;
}

std::string to_json_line(const AlignmentReport& r) {
  json j = json::object();
  j["pair_id"] = r.pair_id;
  j["residual_outside_mask"] = r.residual_outside_mask;
  j["estimated_shift"] = {r.shift_dx, r.shift_dy};
  j["verdict"] = to_string(r.verdict);
  if (!r.note.empty()) j["note"] = r.note;
  return j.dump();
}

void write_reports_jsonl(const std::vector<AlignmentReport>& reports,
                         const fs::path& path) {
  std::ofstream out = open_for_write(path);
  for (const AlignmentReport& r : reports) out << to_json_line(r) << '\n';
}

}  // namespace hilite::qc
