#include "blockfwer/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace bfwer {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

static PValueTable read_table(std::istream& in, const std::string& source, bool need_p) {
  PValueTable t;
  std::string line;
  std::size_t lineno = 0;
  int col_h = -1, col_b = -1, col_p = -1;
  std::size_t n_cols = 0;
  bool header = false;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (!header) {
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == "hypothesis_id") col_h = static_cast<int>(i);
        if (f[i] == "block_id") col_b = static_cast<int>(i);
        if (f[i] == "p_value") col_p = static_cast<int>(i);
      }
      if (col_h < 0 || col_b < 0 || (need_p && col_p < 0)) {
        throw ParseError(source, lineno,
                         need_p ? "header must name hypothesis_id, block_id and p_value"
                                : "header must name hypothesis_id and block_id");
      }
      n_cols = f.size();
      header = true;
      continue;
    }
    if (f.size() != n_cols) {
      throw ParseError(source, lineno, "expected " + std::to_string(n_cols) + " fields, got " +
                                           std::to_string(f.size()));
    }
    const std::string& h = f[col_h];
    const std::string& b = f[col_b];
    if (h.empty()) throw ParseError(source, lineno, "empty hypothesis_id");
    if (b.empty()) throw ParseError(source, lineno, "empty block_id");
    if (!seen.insert(h).second) throw ParseError(source, lineno, "duplicate hypothesis_id '" + h + "'");
    t.hypothesis_ids.push_back(h);
    t.block_ids.push_back(b);
    if (!need_p) continue;
    const std::string& ps = f[col_p];
    double p = 0.0;
    const auto [ptr, ec] = std::from_chars(ps.data(), ps.data() + ps.size(), p);
    if (ec != std::errc() || ptr != ps.data() + ps.size()) {
      throw ParseError(source, lineno, "p_value '" + ps + "' is not a number");
    }
    if (!(p >= 0.0 && p <= 1.0)) throw ParseError(source, lineno, "p_value " + ps + " outside [0,1]");
    t.p.push_back(p);
  }
  if (!header) throw ParseError(source, std::max<std::size_t>(lineno, 1), "empty file");
  if (t.hypothesis_ids.empty()) throw ParseError(source, lineno, "no data rows");
  return t;
}

PValueTable read_pvalue_csv(std::istream& in, const std::string& source) { return read_table(in, source, true); }

PValueTable read_pvalue_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_pvalue_csv(in, path);
}

PValueTable read_partition_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_table(in, path, false);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    // byte offset -> line number
    const std::string text = ss.str();
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw ParseError(path, line, e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace bfwer
