#include "lma4rec/data/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include <nlohmann/json.hpp>

#include "lma4rec/error.hpp"

namespace lma4rec::data {

std::optional<InputFormat> parse_format(std::string_view name) {
  if (name == "csv") return InputFormat::kCsv;
  if (name == "tsv") return InputFormat::kTsv;
  if (name == "jsonl" || name == "json-lines" || name == "jsonlines") return InputFormat::kJsonLines;
  return std::nullopt;
}

std::string_view format_name(InputFormat format) {
  switch (format) {
    case InputFormat::kCsv: return "csv";
    case InputFormat::kTsv: return "tsv";
    case InputFormat::kJsonLines: return "jsonl";
  }
  return "unknown";
}

std::optional<InputFormat> format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".csv") return InputFormat::kCsv;
  if (ext == ".tsv" || ext == ".txt") return InputFormat::kTsv;
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return InputFormat::kJsonLines;
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

std::int64_t parse_timestamp(std::string_view text, std::size_t line) {
  std::int64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ParseError("invalid timestamp '" + std::string(text) + "'", line);
  }
  return value;
}

bool blank(std::string_view s) { return trim(s).empty(); }

std::vector<Interaction> ingest_delimited(std::istream& in, char sep) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> user_col, item_col, time_col;
  bool have_header = false;
  std::vector<Interaction> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto fields = split(line, sep);
    if (!have_header) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == "user") user_col = i;
        if (fields[i] == "item") item_col = i;
        if (fields[i] == "timestamp") time_col = i;
      }
      if (!user_col || !item_col || !time_col) {
        throw ParseError("header must name the columns user, item and timestamp", line_no);
      }
      have_header = true;
      continue;
    }
    auto field = [&](std::size_t col, const char* name) {
      if (col >= fields.size() || fields[col].empty()) {
        throw ParseError(std::string("record is missing field '") + name + "'", line_no);
      }
      return fields[col];
    };
    Interaction rec;
    rec.user_key = std::string(field(*user_col, "user"));
    rec.item_key = std::string(field(*item_col, "item"));
    rec.timestamp = parse_timestamp(field(*time_col, "timestamp"), line_no);
    out.push_back(std::move(rec));
  }
  return out;
}

std::string key_of(const nlohmann::json& j, const char* name, std::size_t line) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) throw ParseError(std::string("record is missing field '") + name + "'", line);
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return it->dump();
  throw ParseError(std::string("field '") + name + "' must be a string or integer", line);
}

std::vector<Interaction> ingest_json_lines(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<Interaction> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw ParseError("invalid JSON record", line_no);
    }
    if (!j.is_object()) throw ParseError("record must be a JSON object", line_no);
    Interaction rec;
    rec.user_key = key_of(j, "user", line_no);
    rec.item_key = key_of(j, "item", line_no);
    const auto ts = j.find("timestamp");
    if (ts == j.end() || ts->is_null()) throw ParseError("record is missing field 'timestamp'", line_no);
    if (ts->is_number_integer()) {
      rec.timestamp = ts->get<std::int64_t>();
    } else if (ts->is_string()) {
      rec.timestamp = parse_timestamp(ts->get<std::string>(), line_no);
    } else {
      throw ParseError("field 'timestamp' must be an integer", line_no);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

std::vector<Interaction> ingest(std::istream& in, InputFormat format) {
  std::vector<Interaction> out;
  switch (format) {
    case InputFormat::kCsv: out = ingest_delimited(in, ','); break;
    case InputFormat::kTsv: out = ingest_delimited(in, '\t'); break;
    case InputFormat::kJsonLines: out = ingest_json_lines(in); break;
  }
  if (out.empty()) throw ParseError("input contains no interactions", 0);
  return out;
}

std::vector<Interaction> ingest(const std::filesystem::path& path, InputFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("no such input: " + path.string());
  return ingest(in, format);
}

void write_tsv(std::ostream& out, const std::vector<Interaction>& interactions) {
  out << "user\titem\ttimestamp\n";
  for (const auto& r : interactions) out << r.user_key << '\t' << r.item_key << '\t' << r.timestamp << '\n';
}

}  // namespace lma4rec::data
