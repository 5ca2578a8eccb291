#include "termgraph/store/import_format.hpp"

#include <charconv>
#include <fstream>

#include <json.hpp>

#include "termgraph/error.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::store {

namespace {
std::optional<int> parse_rank(std::string_view s) {
  s = text::trim(s);
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}
}  // namespace

ParsedRows read_delimited_rows(std::istream& in, char delimiter) {
  ParsedRows out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      first = false;
      if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
          static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
        line.erase(0, 3);
      auto header = text::split(line, delimiter);
      if (header.size() == 3 && text::to_lower(text::trim(header[0])) == "code_id" &&
          text::to_lower(text::trim(header[1])) == "string")
        continue;
    }
    if (text::trim(line).empty()) continue;
    std::size_t index = out.rows_read++;
    auto fields = text::split(line, delimiter);
    if (fields.size() != 3) {
      out.rejections.push_back({index, "expected 3 columns, found " + std::to_string(fields.size())});
      continue;
    }
    auto rank = parse_rank(fields[2]);
    if (!rank) {
      out.rejections.push_back({index, "rank '" + fields[2] + "' is not an integer"});
      continue;
    }
    out.rows.push_back({std::move(fields[0]), std::move(fields[1]), *rank});
  }
  return out;
}

ParsedRows read_delimited_file(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + path.string());
  return read_delimited_rows(in, delimiter);
}

ParsedRows read_columnar_rows(std::string_view json_text) {
  auto j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(ErrorCode::kInvalidArgument, "columnar fixture is not a JSON object");
  for (const char* column : {"code_id", "string", "rank"})
    if (!j.contains(column) || !j[column].is_array())
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("columnar fixture lacks array column '") + column + "'");
  const auto& ids = j["code_id"];
  const auto& strings = j["string"];
  const auto& ranks = j["rank"];
  if (ids.size() != strings.size() || ids.size() != ranks.size())
    throw Error(ErrorCode::kInvalidArgument, "columnar fixture columns differ in length");
  ParsedRows out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ++out.rows_read;
    if (!ids[i].is_string() || !strings[i].is_string() || !ranks[i].is_number_integer()) {
      out.rejections.push_back({i, "wrong cell types"});
      continue;
    }
    out.rows.push_back({ids[i].get<std::string>(), strings[i].get<std::string>(), ranks[i].get<int>()});
  }
  return out;
}

std::vector<HierarchyEdge> read_hierarchy(std::istream& in, char delimiter) {
  std::vector<HierarchyEdge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto fields = text::split(line, delimiter);
    if (fields.size() > 2 || text::trim(fields[0]).empty())
      throw Error(ErrorCode::kInvalidArgument,
                  "hierarchy line " + std::to_string(line_no) + ": expected term<d>parent");
    HierarchyEdge edge{std::string(text::trim(fields[0])), std::nullopt};
    if (fields.size() == 2 && !text::trim(fields[1]).empty())
      edge.parent = std::string(text::trim(fields[1]));
    edges.push_back(std::move(edge));
  }
  return edges;
}

}  // namespace termgraph::store
