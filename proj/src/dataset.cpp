#include "fairrank/dataset.hpp"

#include "fairrank/errors.hpp"
#include "fairrank/jsonio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace fairrank {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw ValidationError("dataset", msg);
}

void check_rank_permutation(const std::vector<int>& rank) {
  const int n = static_cast<int>(rank.size());
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int r : rank) {
    if (r < 1 || r > n) {
      fail("rank value " + std::to_string(r) + " outside 1.." +
           std::to_string(n) + ": not a permutation");
    }
    if (seen[static_cast<std::size_t>(r - 1)]) {
      fail("duplicate rank position " + std::to_string(r) +
           ": not a permutation");
    }
    seen[static_cast<std::size_t>(r - 1)] = 1;
  }
}

}  // namespace

RankedDataset::RankedDataset(std::vector<std::string> attribute_names,
                             std::vector<std::vector<std::string>> attribute_domains,
                             std::vector<std::vector<int>> rows,
                             std::vector<int> rank,
                             std::string protected_attribute,
                             std::string favorable_value,
                             std::vector<std::string> redlining_attributes)
    : names_(std::move(attribute_names)),
      domains_(std::move(attribute_domains)),
      rows_(std::move(rows)),
      rank_(std::move(rank)),
      protected_attr_(std::move(protected_attribute)),
      favorable_value_(std::move(favorable_value)),
      redlining_(std::move(redlining_attributes)) {
  if (names_.size() != domains_.size()) {
    fail("attribute_names and attribute_domains size mismatch");
  }
  std::set<std::string> name_set(names_.begin(), names_.end());
  if (name_set.size() != names_.size()) {
    fail("duplicate attribute names");
  }
  for (std::size_t a = 0; a < names_.size(); ++a) {
    if (names_[a].empty()) fail("empty attribute name");
    if (names_[a].rfind("__", 0) == 0) {
      fail("attribute name '" + names_[a] + "' uses the reserved __ prefix");
    }
    std::set<std::string> dom(domains_[a].begin(), domains_[a].end());
    if (dom.size() != domains_[a].size() || domains_[a].empty()) {
      fail("attribute '" + names_[a] + "' has an empty or duplicated domain");
    }
  }
  if (rows_.size() != rank_.size()) {
    fail("row count and rank count differ");
  }
  if (rank_.empty()) fail("dataset has no rows");
  check_rank_permutation(rank_);
  for (const auto& row : rows_) {
    if (row.size() != names_.size()) fail("row width mismatch");
    for (std::size_t a = 0; a < row.size(); ++a) {
      if (row[a] < 0 || row[a] >= static_cast<int>(domains_[a].size())) {
        fail("row value for '" + names_[a] + "' is outside its domain");
      }
    }
  }

  auto it = std::find(names_.begin(), names_.end(), protected_attr_);
  if (it == names_.end()) {
    fail("unknown protected attribute '" + protected_attr_ + "'");
  }
  protected_index_ = static_cast<int>(it - names_.begin());
  const auto& pdom = domains_[static_cast<std::size_t>(protected_index_)];
  if (pdom.size() != 2) {
    fail("protected attribute '" + protected_attr_ + "' must have exactly two domain values, has " +
         std::to_string(pdom.size()));
  }
  auto fit = std::find(pdom.begin(), pdom.end(), favorable_value_);
  if (fit == pdom.end()) {
    fail("favorable value '" + favorable_value_ +
         "' not in the protected attribute's domain");
  }
  favorable_code_ = static_cast<int>(fit - pdom.begin());

  std::set<std::string> red_set(redlining_.begin(), redlining_.end());
  if (red_set.size() != redlining_.size()) fail("duplicate redlining attribute");
  for (const auto& r : redlining_) {
    if (r == protected_attr_) {
      fail("redlining attributes must exclude the protected attribute");
    }
    if (!name_set.count(r)) fail("unknown redlining attribute '" + r + "'");
  }
  std::sort(redlining_.begin(), redlining_.end());
}

RankedDataset RankedDataset::from_string_rows(
    std::vector<std::string> attribute_names,
    std::vector<std::vector<std::string>> attribute_domains,
    const std::vector<std::vector<std::string>>& rows,
    std::vector<int> rank,
    std::string protected_attribute,
    std::string favorable_value,
    std::vector<std::string> redlining_attributes) {
  std::vector<std::vector<int>> coded;
  coded.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.size() != attribute_names.size()) fail("row width mismatch");
    std::vector<int> c(row.size());
    for (std::size_t a = 0; a < row.size(); ++a) {
      const auto& dom = attribute_domains[a];
      auto it = std::find(dom.begin(), dom.end(), row[a]);
      if (it == dom.end()) {
        fail("value '" + row[a] + "' not in declared domain of '" +
             attribute_names[a] + "'");
      }
      c[a] = static_cast<int>(it - dom.begin());
    }
    coded.push_back(std::move(c));
  }
  return RankedDataset(std::move(attribute_names), std::move(attribute_domains),
                       std::move(coded), std::move(rank),
                       std::move(protected_attribute), std::move(favorable_value),
                       std::move(redlining_attributes));
}

int RankedDataset::attribute_index(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) {
    fail("unknown attribute '" + name + "'");
  }
  return static_cast<int>(it - names_.begin());
}

std::vector<std::size_t> RankedDataset::order_by_rank() const {
  std::vector<std::size_t> order(size());
  for (std::size_t i = 0; i < size(); ++i) {
    order[static_cast<std::size_t>(rank_[i] - 1)] = i;
  }
  return order;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

// Splits one CSV record. Fields may be double-quoted; embedded quotes are
// doubled. Embedded newlines are not supported.
std::vector<std::string> split_csv_line(const std::string& line, int lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) {
    throw ValidationError("dataset", "unterminated quote on line " +
                                         std::to_string(lineno));
  }
  fields.push_back(cur);
  return fields;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += '"';
  return out;
}

int parse_rank_cell(const std::string& cell, int lineno) {
  std::size_t pos = 0;
  int value = 0;
  try {
    value = std::stoi(cell, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != cell.size()) {
    throw ValidationError("dataset", "rank cell '" + cell + "' on line " +
                                         std::to_string(lineno) +
                                         " is not an integer");
  }
  return value;
}

}  // namespace

LoadedData load_ranked_csv(const std::string& path, const ColumnRoles& roles) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("dataset", "cannot open " + path + " for reading");
  }
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw ValidationError("dataset", path + " is empty (missing header row)");
  }
  if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();
  const std::vector<std::string> header = split_csv_line(header_line, 1);

  int rank_col = -1;
  int score_col = -1;
  std::vector<int> attr_cols;
  std::vector<std::string> attr_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name == roles.rank_column) {
      if (rank_col >= 0) {
        throw ValidationError("dataset", "duplicate rank column '" + name + "'");
      }
      rank_col = static_cast<int>(c);
    } else if (name == "__score") {
      score_col = static_cast<int>(c);
    } else if (name.rfind("__", 0) == 0) {
      // Reserved metadata column (e.g. __old_rank); ignored on load.
    } else {
      attr_cols.push_back(static_cast<int>(c));
      attr_names.push_back(name);
    }
  }
  if (rank_col < 0) {
    throw ValidationError("dataset", "rank column '" + roles.rank_column +
                                         "' not found in " + path);
  }

  std::vector<std::vector<std::string>> raw_rows;
  std::vector<int> rank;
  std::vector<double> scores;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line, lineno);
    if (fields.size() != header.size()) {
      throw ValidationError("dataset", "line " + std::to_string(lineno) + " has " +
                                           std::to_string(fields.size()) +
                                           " fields, header has " +
                                           std::to_string(header.size()));
    }
    std::vector<std::string> row;
    row.reserve(attr_cols.size());
    for (int c : attr_cols) row.push_back(fields[static_cast<std::size_t>(c)]);
    raw_rows.push_back(std::move(row));
    rank.push_back(parse_rank_cell(fields[static_cast<std::size_t>(rank_col)], lineno));
    if (score_col >= 0) {
      const std::string& cell = fields[static_cast<std::size_t>(score_col)];
      std::size_t pos = 0;
      double s = 0;
      try {
        s = std::stod(cell, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != cell.size() || pos == 0 || !std::isfinite(s)) {
        throw ValidationError("dataset", "__score cell '" + cell + "' on line " +
                                             std::to_string(lineno) +
                                             " is not a finite number");
      }
      scores.push_back(s);
    }
  }

  // Domains: declared if given, otherwise the sorted set of observed values.
  std::vector<std::vector<std::string>> domains(attr_names.size());
  for (std::size_t a = 0; a < attr_names.size(); ++a) {
    auto it = roles.declared_domains.find(attr_names[a]);
    if (it != roles.declared_domains.end()) {
      domains[a] = it->second;
    } else {
      std::set<std::string> values;
      for (const auto& row : raw_rows) values.insert(row[a]);
      domains[a].assign(values.begin(), values.end());
    }
  }

  RankedDataset data = RankedDataset::from_string_rows(
      attr_names, std::move(domains), raw_rows, std::move(rank),
      roles.protected_attribute, roles.favorable_value, roles.redlining);

  LoadedData out{std::move(data), std::nullopt};
  if (score_col >= 0) {
    ScoreAssignment sa;
    sa.scores = std::move(scores);
    out.scores = std::move(sa);
  }
  return out;
}

std::vector<int> read_rank_column(const std::string& path,
                                  const std::string& rank_column) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("dataset", "cannot open " + path + " for reading");
  }
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw ValidationError("dataset", path + " is empty (missing header row)");
  }
  if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();
  const auto header = split_csv_line(header_line, 1);
  int rank_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == rank_column) rank_col = static_cast<int>(c);
  }
  if (rank_col < 0) {
    throw ValidationError("dataset", "rank column '" + rank_column +
                                         "' not found in " + path);
  }
  std::vector<int> rank;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line, lineno);
    if (fields.size() != header.size()) {
      throw ValidationError("dataset",
                            "line " + std::to_string(lineno) + " field count mismatch");
    }
    rank.push_back(parse_rank_cell(fields[static_cast<std::size_t>(rank_col)], lineno));
  }
  check_rank_permutation(rank);
  return rank;
}

void write_ranked_csv(
    const RankedDataset& data, const std::string& path,
    const std::vector<std::pair<std::string, std::vector<std::string>>>&
        extra_columns) {
  for (const auto& [name, cells] : extra_columns) {
    if (cells.size() != data.size()) {
      throw ValidationError("dataset", "extra column '" + name +
                                           "' has wrong number of cells");
    }
  }
  std::ofstream out(path);
  if (!out) {
    throw IoError("dataset", "cannot open " + path + " for writing");
  }
  for (std::size_t a = 0; a < data.attribute_names().size(); ++a) {
    if (a) out << ',';
    out << csv_escape(data.attribute_names()[a]);
  }
  if (!data.attribute_names().empty()) out << ',';
  out << "rank";
  for (const auto& [name, cells] : extra_columns) {
    out << ',' << csv_escape(name);
  }
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t a = 0; a < data.attribute_names().size(); ++a) {
      if (a) out << ',';
      out << csv_escape(data.value(i, a));
    }
    if (!data.attribute_names().empty()) out << ',';
    out << data.rank_of(i);
    for (const auto& [name, cells] : extra_columns) {
      out << ',' << csv_escape(cells[i]);
    }
    out << '\n';
  }
  if (!out) {
    throw IoError("dataset", "write failed for " + path);
  }
}

void write_scored_csv(const RankedDataset& data, const ScoreAssignment& scores,
                      const std::string& path) {
  if (scores.scores.size() != data.size()) {
    throw ValidationError("dataset", "score count does not match dataset size");
  }
  std::vector<std::string> cells;
  cells.reserve(data.size());
  for (double s : scores.scores) cells.push_back(format_double(s));
  write_ranked_csv(data, path, {{"__score", std::move(cells)}});
}

}  // namespace fairrank
