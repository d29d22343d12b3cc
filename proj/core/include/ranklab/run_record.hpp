#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ranklab {

/// Per-epoch measurements. Epochs are strictly increasing per (model, metric).
class RunRecord {
 public:
  struct Row {
    std::size_t epoch = 0;
    std::string model;
    std::string metric;
    double value = 0.0;

    bool operator==(const Row&) const = default;
  };

  /// Throws std::logic_error when `epoch` does not exceed the last epoch
  /// recorded for (model, metric).
  void add(std::size_t epoch, const std::string& model, const std::string& metric, double value);
  void append(const RunRecord& other);

  const std::vector<Row>& rows() const noexcept { return rows_; }
  std::vector<std::pair<std::size_t, double>> series(const std::string& model, const std::string& metric) const;
  std::optional<double> last(const std::string& model, const std::string& metric) const;
  std::optional<double> at(std::size_t epoch, const std::string& model, const std::string& metric) const;

  /// Header `epoch,model,metric,value`, LF line endings.
  void write_csv(std::ostream& out) const;
  static RunRecord read_csv(std::istream& in);

  bool operator==(const RunRecord& other) const { return rows_ == other.rows_; }

 private:
  std::vector<Row> rows_;
  std::map<std::pair<std::string, std::string>, std::size_t> last_epoch_;
};

}  // namespace ranklab
