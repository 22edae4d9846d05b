#include "mpost/measure_io.hpp"

#include "mpost/errors.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mpost {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto first = field.find_first_not_of(" \t\r");
    const auto last = field.find_last_not_of(" \t\r");
    fields.push_back(first == std::string::npos ? std::string{}
                                                : field.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line_no) + ": cannot parse number '" + s + "'");
  }
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

NumericTable read_numeric_csv(std::istream& in) {
  NumericTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!blank(line)) break;
  }
  if (blank(line)) throw ConfigError("CSV input is empty");
  table.header = split_csv_line(line);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != table.header.size()) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f, line_no));
    rows.push_back(std::move(row));
  }

  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return table;
}

NumericTable read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_numeric_csv(in);
}

EmpiricalMeasure read_measure_csv(std::istream& in) {
  const NumericTable table = read_numeric_csv(in);
  const auto& h = table.header;
  if (h.size() < 2 || h[0] != "w") {
    throw ConfigError("draw CSV header must be `w,x1,...,xp`");
  }
  for (std::size_t k = 1; k < h.size(); ++k) {
    if (h[k] != "x" + std::to_string(k)) {
      throw ConfigError("draw CSV header column " + std::to_string(k) + " should be x" +
                        std::to_string(k) + ", got '" + h[k] + "'");
    }
  }
  const Eigen::Index cols = table.values.cols();
  Eigen::VectorXd w = table.values.col(0);
  Eigen::MatrixXd atoms = table.values.rightCols(cols - 1);
  return make_empirical(std::move(atoms), std::move(w));
}

EmpiricalMeasure read_measure_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return read_measure_csv(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_measure_csv(std::ostream& out, const EmpiricalMeasure& measure) {
  out << "w";
  for (Eigen::Index k = 1; k <= measure.dim(); ++k) out << ",x" << k;
  out << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < measure.size(); ++i) {
    out << measure.weights()[i];
    for (Eigen::Index k = 0; k < measure.dim(); ++k) out << ',' << measure.atoms()(i, k);
    out << '\n';
  }
}

void write_measure_csv(const std::filesystem::path& path, const EmpiricalMeasure& measure) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_measure_csv(out, measure);
}

nlohmann::json measure_to_json(const EmpiricalMeasure& measure) {
  nlohmann::json atoms = nlohmann::json::array();
  for (Eigen::Index i = 0; i < measure.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < measure.dim(); ++k) row.push_back(measure.atoms()(i, k));
    atoms.push_back(std::move(row));
  }
  std::vector<double> w(measure.weights().data(), measure.weights().data() + measure.size());
  return {{"atoms", std::move(atoms)}, {"weights", std::move(w)}};
}

EmpiricalMeasure measure_from_json(const nlohmann::json& j) {
  try {
    const auto atoms = j.at("atoms").get<std::vector<std::vector<double>>>();
    std::vector<double> weights;
    if (j.contains("weights")) weights = j.at("weights").get<std::vector<double>>();
    return make_empirical(atoms, weights);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed measure JSON: ") + e.what());
  }
}

std::vector<EmpiricalMeasure> read_measure_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".csv" || ext == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no draw files in " + dir.string());

  std::vector<EmpiricalMeasure> measures;
  for (const auto& f : files) {
    if (f.extension() == ".csv") {
      measures.push_back(read_measure_csv(f));
    } else {
      std::ifstream in(f);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(f.string() + ": " + e.what());
      }
      measures.push_back(measure_from_json(j));
    }
  }
  return measures;
}

}  // namespace mpost
