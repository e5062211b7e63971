#pragma once

#include <istream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blockfwer/blockwise.hpp"

namespace bfwer {

// Thrown for malformed input files; the message carries "source:line: ".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct PValueTable {
  std::vector<std::string> hypothesis_ids;
  std::vector<std::string> block_ids;  // one label per hypothesis
  std::vector<double> p;

  BlockPartition partition() const { return BlockPartition::from_labels(hypothesis_ids, block_ids); }
};

// Columns hypothesis_id,block_id,p_value; a header row is required.
PValueTable read_pvalue_csv(std::istream& in, const std::string& source = "<stream>");
PValueTable read_pvalue_csv_file(const std::string& path);

// Columns hypothesis_id,block_id; the p field of the result stays empty.
PValueTable read_partition_csv_file(const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace bfwer
