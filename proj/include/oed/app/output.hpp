#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace oed::app {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

/// Shortest decimal text that reads back to the same double; "inf"/"nan"
/// for non-finite values.
std::string format_number(double value);

/// Comma-separated table written row by row. Values are not quoted, so
/// cells must not contain commas.
class CsvWriter
{
public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& cell(double value);
  CsvWriter& cell(long long value);
  CsvWriter& cell(const std::string& value);
  void end_row();
  void close();

private:
  void separator();

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_ = 0;
  std::size_t filled_ = 0;
};

/// Writes `value` with 2-space indentation and a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& value);

nlohmann::json to_json(const Eigen::VectorXd& v);
nlohmann::json to_json(const Eigen::MatrixXd& m);

} // namespace oed::app
