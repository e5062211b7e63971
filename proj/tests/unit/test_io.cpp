#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "blockfwer/io.hpp"

using namespace bfwer;

namespace {

PValueTable parse(const std::string& text) {
  std::istringstream in(text);
  return read_pvalue_csv(in, "t.csv");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(PValueCsv, ParsesAndGroupsBlocks) {
  const auto t = parse("hypothesis_id,block_id,p_value\nh1,a,0.01\nh2,b,0.5\nh3,a,0.02\nh4,b,1\nh5,a,0\nh6,b,1e-8\n");
  EXPECT_EQ(t.hypothesis_ids.size(), 6u);
  EXPECT_DOUBLE_EQ(t.p[5], 1e-8);
  const auto part = t.partition();
  EXPECT_EQ(part.block_ids, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(part.blocks[0], (std::array<std::size_t, 3>{0, 2, 4}));
}

TEST(PValueCsv, ColumnOrderFromHeader) {
  const auto t = parse("p_value,hypothesis_id,block_id\n0.3,x,b1\n0.2,y,b1\n0.1,z,b1\n");
  EXPECT_EQ(t.hypothesis_ids[2], "z");
  EXPECT_DOUBLE_EQ(t.p[0], 0.3);
}

TEST(PValueCsv, LineNumberedErrors) {
  EXPECT_EQ(error_of("hypothesis_id,block_id,p_value\nh1,a,0.1\nh2,a,zz\n"), "t.csv:3: p_value 'zz' is not a number");
  EXPECT_EQ(error_of("hypothesis_id,block_id,p_value\nh1,a,1.5\n"), "t.csv:2: p_value 1.5 outside [0,1]");
  EXPECT_EQ(error_of("hypothesis_id,block_id,p_value\nh1,a\n"), "t.csv:2: expected 3 fields, got 2");
  EXPECT_EQ(error_of("hypothesis_id,block_id,p_value\nh1,a,0.1\n\nh1,a,0.2\n"), "t.csv:4: duplicate hypothesis_id 'h1'");
  EXPECT_EQ(error_of("id,block,p\n"), "t.csv:1: header must name hypothesis_id, block_id and p_value");
  EXPECT_EQ(error_of(""), "t.csv:1: empty file");
  EXPECT_NE(error_of("hypothesis_id,block_id,p_value\n,a,0.1\n").find(":2: empty hypothesis_id"), std::string::npos);
}

TEST(PValueCsv, ParseErrorCarriesLine) {
  try {
    parse("hypothesis_id,block_id,p_value\nh1,a,0.1\nh2,a,0.2\nh3,a,-1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(Files, MissingFileAndJsonLine) {
  EXPECT_THROW(read_pvalue_csv_file("/nonexistent/x.csv"), std::runtime_error);
  const auto path = std::filesystem::temp_directory_path() / "blockfwer_io_test.json";
  write_text_file(path.string(), "{\n  \"a\": 1,\n  \"b\": ,\n}\n");
  try {
    read_json_file(path.string());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  write_text_file(path.string(), "{\"a\": [1, 2]}");
  EXPECT_EQ(read_json_file(path.string()).at("a").size(), 2u);
  std::filesystem::remove(path);
}

TEST(Files, PartitionCsv) {
  const auto path = std::filesystem::temp_directory_path() / "blockfwer_part_test.csv";
  write_text_file(path.string(), "hypothesis_id,block_id\nh1,a\nh2,a\nh3,a\n");
  const auto t = read_partition_csv_file(path.string());
  EXPECT_TRUE(t.p.empty());
  EXPECT_EQ(t.partition().n_blocks(), 1u);
  std::filesystem::remove(path);
}
