#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fairrank {

// Affine normalization applied to fitted scores after optimization.
struct GaugeRecord {
  double shift = 0.0;
  double scale = 1.0;

  bool operator==(const GaugeRecord&) const = default;
};

// One continuous qualification score per individual, row-aligned with the
// dataset it was fitted from.
struct ScoreAssignment {
  std::vector<double> scores;
  GaugeRecord gauge;
  double regularization = 0.0;

  bool operator==(const ScoreAssignment&) const = default;
};

// Column roles for CSV ingestion. Domains default to the observed value set
// (sorted); declared_domains may widen them so zero-count strata stay
// representable.
struct ColumnRoles {
  std::string rank_column = "rank";
  std::string protected_attribute;
  std::string favorable_value;
  std::vector<std::string> redlining;
  std::map<std::string, std::vector<std::string>> declared_domains;
};

// A ranked dataset: categorical profile attributes plus a total-order rank
// permutation (position 1 is the top of the ranking). Immutable after
// construction; every accessor is safe to call concurrently.
//
// Category values are strings with no ordinal meaning; internally each row
// stores the index of its value within the attribute's domain.
class RankedDataset {
 public:
  RankedDataset(std::vector<std::string> attribute_names,
                std::vector<std::vector<std::string>> attribute_domains,
                std::vector<std::vector<int>> rows,
                std::vector<int> rank,
                std::string protected_attribute,
                std::string favorable_value,
                std::vector<std::string> redlining_attributes);

  // Convenience constructor taking rows of value labels instead of codes.
  static RankedDataset from_string_rows(
      std::vector<std::string> attribute_names,
      std::vector<std::vector<std::string>> attribute_domains,
      const std::vector<std::vector<std::string>>& rows,
      std::vector<int> rank,
      std::string protected_attribute,
      std::string favorable_value,
      std::vector<std::string> redlining_attributes);

  std::size_t size() const { return rank_.size(); }
  const std::vector<std::string>& attribute_names() const { return names_; }
  const std::vector<std::vector<std::string>>& attribute_domains() const {
    return domains_;
  }

  // Index of an attribute by name; throws ValidationError if absent.
  int attribute_index(const std::string& name) const;

  int value_code(std::size_t row, std::size_t attr) const {
    return rows_[row][attr];
  }
  const std::string& value(std::size_t row, std::size_t attr) const {
    return domains_[attr][static_cast<std::size_t>(rows_[row][attr])];
  }
  const std::vector<std::vector<int>>& rows() const { return rows_; }

  const std::vector<int>& rank() const { return rank_; }
  int rank_of(std::size_t row) const { return rank_[row]; }

  const std::string& protected_attribute() const { return protected_attr_; }
  const std::string& favorable_value() const { return favorable_value_; }
  const std::vector<std::string>& redlining_attributes() const {
    return redlining_;
  }

  int protected_index() const { return protected_index_; }
  int favorable_code() const { return favorable_code_; }

  // Row indices from rank position 1 to N.
  std::vector<std::size_t> order_by_rank() const;

  bool operator==(const RankedDataset&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<std::string>> domains_;
  std::vector<std::vector<int>> rows_;
  std::vector<int> rank_;
  std::string protected_attr_;
  std::string favorable_value_;
  std::vector<std::string> redlining_;
  int protected_index_ = -1;
  int favorable_code_ = -1;
};

struct LoadedData {
  RankedDataset data;
  // Populated when the file carries a "__score" column.
  std::optional<ScoreAssignment> scores;
};

// Loads a ranked CSV (UTF-8, comma separated, header row). Columns whose
// names start with "__" are reserved metadata, never attributes; "__score"
// is parsed into LoadedData::scores when present.
LoadedData load_ranked_csv(const std::string& path, const ColumnRoles& roles);

// Reads only the rank column of a CSV and validates it as a permutation.
// Lets rank-distance tools compare files without knowing any column roles.
std::vector<int> read_rank_column(const std::string& path,
                                  const std::string& rank_column);

// Writers. Extra columns let callers append provenance (e.g. old rank and
// scores on repaired output); each extra column must have one cell per row.
void write_ranked_csv(
    const RankedDataset& data, const std::string& path,
    const std::vector<std::pair<std::string, std::vector<std::string>>>&
        extra_columns = {});
void write_scored_csv(const RankedDataset& data, const ScoreAssignment& scores,
                      const std::string& path);

}  // namespace fairrank
