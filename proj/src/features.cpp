#include "maniapipe/features.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace maniapipe::features {

namespace {
constexpr double kStddevFloor = 1e-8;
}

void FeatureTable::add_row(const functionals::FeatureVector& fv, corpus::Label label) {
  if (names.empty() && values.rows == 0) {
    names = fv.names;
    values = Matrix(0, fv.values.size());
  }
  if (fv.values.size() != values.cols) {
    throw Error(ErrorCode::DimensionMismatch,
                "row of " + std::to_string(fv.values.size()) + " values in a " +
                    std::to_string(values.cols) + "-dim table");
  }
  values.data.insert(values.data.end(), fv.values.begin(), fv.values.end());
  values.rows++;
  labels.push_back(label);
  recording_ids.push_back(fv.recording_id);
  task_indices.push_back(fv.task_index);
}

NormParams znorm_fit(const FeatureTable& train) {
  if (train.size() == 0) {
    throw Error(ErrorCode::EmptyTable, "cannot fit normalization on an empty table");
  }
  const std::size_t n = train.size();
  const std::size_t d = train.dims();
  NormParams params;
  params.mean.assign(d, 0.0);
  params.stddev.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) params.mean[c] += train.values(r, c);
  }
  for (double& m : params.mean) m /= n;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = train.values(r, c) - params.mean[c];
      params.stddev[c] += diff * diff;
    }
  }
  for (double& s : params.stddev) s = std::max(std::sqrt(s / n), kStddevFloor);
  return params;
}

FeatureTable znorm_apply(const FeatureTable& table, const NormParams& params) {
  if (params.mean.size() != table.dims() || params.stddev.size() != table.dims()) {
    throw Error(ErrorCode::DimensionMismatch,
                "params of " + std::to_string(params.mean.size()) + " dims vs table of " +
                    std::to_string(table.dims()));
  }
  FeatureTable out = table;
  for (std::size_t r = 0; r < out.size(); ++r) {
    for (std::size_t c = 0; c < out.dims(); ++c) {
      out.values(r, c) = (out.values(r, c) - params.mean[c]) / params.stddev[c];
    }
  }
  return out;
}

void save_table(const FeatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const std::string& name : table.names) out << name << ",";
  out << "label,recording_id,task_index\n";
  char buf[64];
  for (std::size_t r = 0; r < table.size(); ++r) {
    for (std::size_t c = 0; c < table.dims(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", table.values(r, c));
      out << buf << ",";
    }
    out << corpus::to_string(table.labels[r]) << "," << table.recording_ids[r] << ",";
    if (table.task_indices[r]) out << *table.task_indices[r];
    out << "\n";
  }
  if (!out) throw Error(ErrorCode::IoError, "short write: " + path.string());
}

FeatureTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "no such table: " + path.string());

  auto split_line = [](const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
  };

  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::SchemaViolation, "empty table file: " + path.string());
  }
  std::vector<std::string> header = split_line(line);
  if (header.size() < 4 || header[header.size() - 3] != "label" ||
      header[header.size() - 2] != "recording_id" || header.back() != "task_index") {
    throw Error(ErrorCode::SchemaViolation,
                "table header must end with label,recording_id,task_index: " +
                    path.string());
  }
  const std::size_t dims = header.size() - 3;

  FeatureTable table;
  table.names.assign(header.begin(), header.begin() + dims);
  table.values = Matrix(0, dims);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::SchemaViolation,
                  path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < dims; ++c) {
      char* end = nullptr;
      const double v = std::strtod(fields[c].c_str(), &end);
      if (end == fields[c].c_str()) {
        throw Error(ErrorCode::SchemaViolation,
                    path.string() + ":" + std::to_string(line_no) +
                        ": bad numeric field '" + fields[c] + "'");
      }
      table.values.data.push_back(v);
    }
    table.values.rows++;
    table.labels.push_back(corpus::label_from_string(fields[dims]));
    table.recording_ids.push_back(fields[dims + 1]);
    const std::string& task = fields[dims + 2];
    table.task_indices.push_back(
        task.empty() ? std::optional<int>{} : std::optional<int>{std::stoi(task)});
  }
  return table;
}

void save_norm_params(const NormParams& params, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["mean"] = params.mean;
  doc["stddev"] = params.stddev;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

NormParams load_norm_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "no such params: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
    NormParams params;
    params.mean = doc.at("mean").get<std::vector<double>>();
    params.stddev = doc.at("stddev").get<std::vector<double>>();
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation,
                "bad norm params " + path.string() + ": " + e.what());
  }
}

}  // namespace maniapipe::features
