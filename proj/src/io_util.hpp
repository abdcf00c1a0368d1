#pragma once

// src-private helpers shared by the JSON readers and the byte-stable writers

#include <Eigen/Dense>
#include <cstdio>
#include <string>
#include <vector>

#include "filtstab/model.hpp"
#include "filtstab/vendor_json.hpp"

namespace filtstab::detail {

inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void append_json_array(std::string& out, const char* key,
                              const std::vector<double>& v) {
  out += '"';
  out += key;
  out += "\":[";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt_g17(v[i]);
  }
  out += ']';
}

inline bool read_matrix(const nlohmann::json& j, Eigen::MatrixXd& out,
                        std::vector<ModelError>& errs,
                        const std::string& field) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    errs.push_back({"DimensionMismatch", field + " must be an array of rows"});
    return false;
  }
  const auto rows = j.size();
  const auto cols = j[0].size();
  out.resize(static_cast<long>(rows), static_cast<long>(cols));
  for (size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      errs.push_back({"DimensionMismatch", field + " rows have unequal length"});
      return false;
    }
    for (size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) {
        errs.push_back({"DimensionMismatch", field + " has a non-numeric entry"});
        return false;
      }
      out(static_cast<long>(i), static_cast<long>(k)) = j[i][k].get<double>();
    }
  }
  return true;
}

inline bool read_vector(const nlohmann::json& j, Eigen::VectorXd& out,
                        std::vector<ModelError>& errs,
                        const std::string& field) {
  if (!j.is_array()) {
    errs.push_back({"DimensionMismatch", field + " must be an array"});
    return false;
  }
  out.resize(static_cast<long>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      errs.push_back({"DimensionMismatch", field + " has a non-numeric entry"});
      return false;
    }
    out[static_cast<long>(i)] = j[i].get<double>();
  }
  return true;
}

// Rejects unknown keys, reports missing required ones. True iff clean.
inline bool check_fields(const nlohmann::json& j,
                         const std::vector<const char*>& required,
                         std::vector<ModelError>& errs,
                         const std::vector<const char*>& optional = {}) {
  if (!j.is_object()) {
    errs.push_back({"DimensionMismatch", "input is not a JSON object"});
    return false;
  }
  const size_t before = errs.size();
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : required) known = known || it.key() == k;
    for (const char* k : optional) known = known || it.key() == k;
    if (!known) errs.push_back({"UnknownField", it.key()});
  }
  for (const char* k : required)
    if (!j.contains(k)) errs.push_back({"MissingField", k});
  return errs.size() == before;
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& M) {
  auto out = nlohmann::json::array();
  for (long i = 0; i < M.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (long k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
    out.push_back(row);
  }
  return out;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  auto out = nlohmann::json::array();
  for (long i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace filtstab::detail
