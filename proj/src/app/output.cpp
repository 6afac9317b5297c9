#include "oed/app/output.hpp"

#include "oed/error.hpp"

#include <charconv>
#include <cmath>

namespace oed::app {

std::string format_number(double value)
{
  if (std::isnan(value))
    return "nan";
  if (std::isinf(value))
    return value > 0 ? "inf" : "-inf";
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
  : path_(path)
  , out_(path, std::ios::binary | std::ios::trunc)
  , columns_(header.size())
{
  if (!out_)
    throw InputError("cannot open '" + path.string() + "' for writing");
  for (std::size_t i = 0; i < header.size(); ++i)
    out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::separator()
{
  if (filled_ == columns_)
    throw std::logic_error("CSV row for '" + path_.string() + "' has too many cells");
  if (filled_++)
    out_ << ',';
}

CsvWriter& CsvWriter::cell(double value)
{
  separator();
  out_ << format_number(value);
  return *this;
}

CsvWriter& CsvWriter::cell(long long value)
{
  separator();
  out_ << value;
  return *this;
}

CsvWriter& CsvWriter::cell(const std::string& value)
{
  separator();
  out_ << value;
  return *this;
}

void CsvWriter::end_row()
{
  if (filled_ != columns_)
    throw std::logic_error("CSV row for '" + path_.string() + "' has " +
                           std::to_string(filled_) + " of " + std::to_string(columns_) +
                           " cells");
  out_ << '\n';
  filled_ = 0;
}

void CsvWriter::close()
{
  out_.close();
  if (!out_)
    throw InputError("failed writing '" + path_.string() + "'");
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw InputError("cannot open '" + path.string() + "' for writing");
  out << value.dump(2) << '\n';
  if (!out)
    throw InputError("failed writing '" + path.string() + "'");
}

nlohmann::json to_json(const Eigen::VectorXd& v)
{
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out.push_back(v(i));
  return out;
}

nlohmann::json to_json(const Eigen::MatrixXd& m)
{
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    out.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return out;
}

} // namespace oed::app
