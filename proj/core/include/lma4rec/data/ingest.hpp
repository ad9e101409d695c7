#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lma4rec::data {

struct Interaction {
  std::string user_key;
  std::string item_key;
  std::int64_t timestamp = 0;
};

enum class InputFormat { kCsv, kTsv, kJsonLines };

std::optional<InputFormat> parse_format(std::string_view name);
std::string_view format_name(InputFormat format);
// From the extension: .csv, .tsv/.txt, .jsonl/.json/.ndjson.
std::optional<InputFormat> format_from_path(const std::filesystem::path& path);

// CSV/TSV need a header naming the user, item and timestamp columns (any
// order, extra columns ignored); JSON-lines records need those three keys.
// Throws ParseError (with line number) on malformed records or when no record is found.
std::vector<Interaction> ingest(std::istream& in, InputFormat format);
std::vector<Interaction> ingest(const std::filesystem::path& path, InputFormat format);

void write_tsv(std::ostream& out, const std::vector<Interaction>& interactions);

}  // namespace lma4rec::data
