#pragma once

#include "mpost/measures.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace mpost {

// Draw files. CSV layout is one row per atom with a required header `w,x1,...,xp`;
// the JSON form is {"atoms": [[...], ...], "weights": [...]} with weights optional.

EmpiricalMeasure read_measure_csv(std::istream& in);
EmpiricalMeasure read_measure_csv(const std::filesystem::path& path);
void write_measure_csv(std::ostream& out, const EmpiricalMeasure& measure);
void write_measure_csv(const std::filesystem::path& path, const EmpiricalMeasure& measure);

nlohmann::json measure_to_json(const EmpiricalMeasure& measure);
EmpiricalMeasure measure_from_json(const nlohmann::json& j);

/// Reads every *.csv / *.json draw file in a directory, sorted by file name.
std::vector<EmpiricalMeasure> read_measure_dir(const std::filesystem::path& dir);

/// Plain numeric table with a header row (data files `x1..xp[,y]`).
struct NumericTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};
NumericTable read_numeric_csv(std::istream& in);
NumericTable read_numeric_csv(const std::filesystem::path& path);

}  // namespace mpost
