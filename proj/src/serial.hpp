#pragma once

// JSON plumbing shared by the model files. Internal to the library.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "medfs/error.hpp"
#include "medfs/objective.hpp"

namespace medfs::serial {

using Json = nlohmann::ordered_json;

inline Json to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Eigen::VectorXd vector_from(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError("section '" + what + "' must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError("section '" + what + "' holds a non-number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline Json to_json(const Hyperparams& h) {
  return Json{{"c", h.c},
              {"epsilon", h.epsilon},
              {"p0", h.p0},
              {"sigma", h.sigma},
              {"bias", to_string(h.bias)},
              {"variant", to_string(h.variant)}};
}

inline Hyperparams hyperparams_from(const Json& j) {
  Hyperparams h;
  try {
    h.c = j.at("c").get<double>();
    h.epsilon = j.at("epsilon").get<double>();
    h.p0 = j.at("p0").get<double>();
    h.sigma = j.at("sigma").get<double>();
    h.bias = bias_mode_from_string(j.at("bias").get<std::string>());
    h.variant = variant_from_string(j.at("variant").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("section 'hyperparams' is malformed: ") + e.what());
  }
  h.validate();
  return h;
}

inline Json to_json(const DualVars& d) {
  return Json{{"lambda", to_json(d.lambda)}, {"lambda_prime", to_json(d.lambda_prime)}};
}

inline DualVars duals_from(const Json& j) {
  if (!j.is_object() || !j.contains("lambda") || !j.contains("lambda_prime")) {
    throw ParseError("section 'duals' is malformed");
  }
  DualVars d;
  d.lambda = vector_from(j["lambda"], "duals.lambda");
  d.lambda_prime = vector_from(j["lambda_prime"], "duals.lambda_prime");
  return d;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
  out << text << '\n';
  if (!out) throw InvalidArgument("failed writing '" + path.string() + "'");
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open model file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Parses `text` and checks that every name in `sections` is a top-level
// key. A truncated document fails to parse; the first section whose key
// never appears in the text is reported, or the last one present if the
// cut fell inside it.
inline Json parse_document(const std::string& text, const std::vector<std::string>& sections) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::string last_present;
    for (const auto& name : sections) {
      if (text.find("\"" + name + "\"") == std::string::npos) {
        throw ParseError("model file is truncated or malformed: missing section '" + name +
                         "'");
      }
      last_present = name;
    }
    throw ParseError("model file is truncated or malformed inside section '" + last_present +
                     "' (" + e.what() + ")");
  }
  if (!doc.is_object()) throw ParseError("model file must hold a JSON object");
  for (const auto& name : sections) {
    if (!doc.contains(name)) throw ParseError("model file is missing section '" + name + "'");
  }
  const Json& version = doc["version"];
  if (!version.is_number_integer()) throw ParseError("section 'version' must be an integer");
  return doc;
}

}  // namespace medfs::serial
