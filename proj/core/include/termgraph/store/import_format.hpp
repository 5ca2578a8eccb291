#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "termgraph/store/types.hpp"

namespace termgraph::store {

struct ParsedRows {
  std::vector<ImportRow> rows;
  std::vector<RowRejection> rejections;
  std::size_t rows_read = 0;
};

// UTF-8 delimiter-separated text with columns code_id, string, rank. A first
// line reading "code_id<d>string<d>rank" is treated as a header. Lines with
// the wrong column count or a non-integer rank are rejected and reported;
// empty fields are left for import_terminology to reject.
ParsedRows read_delimited_rows(std::istream& in, char delimiter = '\t');
ParsedRows read_delimited_file(const std::filesystem::path& path, char delimiter = '\t');

// Columnar fixture: {"code_id": [...], "string": [...], "rank": [...]}, all
// arrays the same length.
ParsedRows read_columnar_rows(std::string_view json_text);

// Hierarchy file: one "term<d>parent" per line; an empty parent marks a root.
std::vector<HierarchyEdge> read_hierarchy(std::istream& in, char delimiter = '\t');

}  // namespace termgraph::store
