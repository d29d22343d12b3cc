#include "ranklab/run_record.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace ranklab {

void RunRecord::add(std::size_t epoch, const std::string& model, const std::string& metric, double value)
{
  auto key = std::make_pair(model, metric);
  auto it = last_epoch_.find(key);
  if (it != last_epoch_.end() && epoch <= it->second)
    throw std::logic_error(fmt::format("epoch {} for {}/{} does not follow epoch {}", epoch, model, metric, it->second));
  last_epoch_[key] = epoch;
  rows_.push_back(Row{epoch, model, metric, value});
}

void RunRecord::append(const RunRecord& other)
{
  for (const auto& r : other.rows_) add(r.epoch, r.model, r.metric, r.value);
}

std::vector<std::pair<std::size_t, double>> RunRecord::series(const std::string& model, const std::string& metric) const
{
  std::vector<std::pair<std::size_t, double>> out;
  for (const auto& r : rows_)
    if (r.model == model && r.metric == metric) out.emplace_back(r.epoch, r.value);
  return out;
}

std::optional<double> RunRecord::last(const std::string& model, const std::string& metric) const
{
  for (auto it = rows_.rbegin(); it != rows_.rend(); ++it)
    if (it->model == model && it->metric == metric) return it->value;
  return std::nullopt;
}

std::optional<double> RunRecord::at(std::size_t epoch, const std::string& model, const std::string& metric) const
{
  for (const auto& r : rows_)
    if (r.epoch == epoch && r.model == model && r.metric == metric) return r.value;
  return std::nullopt;
}

void RunRecord::write_csv(std::ostream& out) const
{
  out << "epoch,model,metric,value\n";
  for (const auto& r : rows_) out << fmt::format("{},{},{},{}\n", r.epoch, r.model, r.metric, r.value);
}

RunRecord RunRecord::read_csv(std::istream& in)
{
  RunRecord rec;
  std::string line;
  if (!std::getline(in, line) || line != "epoch,model,metric,value")
    throw std::runtime_error("run record CSV must start with 'epoch,model,metric,value'");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string epoch, model, metric, value;
    if (!std::getline(ss, epoch, ',') || !std::getline(ss, model, ',') || !std::getline(ss, metric, ',') ||
        !std::getline(ss, value))
      throw std::runtime_error(fmt::format("run record CSV line {} has too few fields", line_no));
    try {
      rec.add(std::stoull(epoch), model, metric, std::stod(value));
    } catch (const std::invalid_argument&) {
      throw std::runtime_error(fmt::format("run record CSV line {} is not numeric", line_no));
    }
  }
  return rec;
}

}  // namespace ranklab
