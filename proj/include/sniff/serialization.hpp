#pragma once

// Model files: JSON with every float stored as its fixed-width hex bit pattern.
//
// {"precision": "binary64",
//  "extractor": [{"activation": "relu", "weights": [[hex, ...], ...], "biases": [hex, ...]}, ...],
//  "student": {"weights": [[hex, ...], ...], "biases": [hex, ...]}}
//
// Weight matrices are stored row-major as in_dim rows of out_dim entries.

#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "sniff/model.hpp"

namespace sniff {

namespace detail {

using nlohmann::json;

template <Binary T>
json hex_vector(const std::vector<T>& v) {
  json out = json::array();
  for (T x : v) out.push_back(to_hex(x));
  return out;
}

template <Binary T>
json hex_matrix(const Matrix<T>& mat) {
  json out = json::array();
  for (std::size_t r = 0; r < mat.rows; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < mat.cols; ++c) row.push_back(to_hex(mat(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

inline const json& member(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw FormatError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(path + "." + key, "missing field");
  return *it;
}

template <Binary T>
T read_hex(const json& j, const std::string& path) {
  if (!j.is_string())
    throw FormatError(path, std::string("expected a ") + std::to_string(FloatTraits<T>::kHexDigits) +
                                "-hex-digit string, decimal literals are not accepted");
  T v;
  if (!parse_hex<T>(j.get_ref<const std::string&>(), v))
    throw FormatError(path, "'" + j.get<std::string>() + "' is not a " +
                                std::to_string(FloatTraits<T>::kHexDigits) + "-hex-digit bit pattern");
  return v;
}

template <Binary T>
std::vector<T> read_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw FormatError(path, "expected an array");
  std::vector<T> out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(read_hex<T>(j[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

template <Binary T>
Matrix<T> read_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw FormatError(path, "expected a non-empty array of rows");
  Matrix<T> mat;
  mat.rows = j.size();
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    auto row = read_vector<T>(j[r], rp);
    if (r == 0) {
      if (row.empty()) throw FormatError(rp, "empty row");
      mat.cols = row.size();
    } else if (row.size() != mat.cols) {
      throw FormatError(rp, "row has " + std::to_string(row.size()) + " entries, expected " +
                                std::to_string(mat.cols));
    }
    mat.data.insert(mat.data.end(), row.begin(), row.end());
  }
  return mat;
}

inline json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("$", e.what());
  }
}

inline std::string read_precision(const json& root) {
  const json& p = member(root, "precision", "$");
  if (!p.is_string() || (p != "binary64" && p != "binary32"))
    throw FormatError("$.precision", "expected \"binary64\" or \"binary32\"");
  return p.get<std::string>();
}

}  // namespace detail

template <Binary T>
std::string save_model(const StudentModel<T>& model) {
  using detail::json;
  json root;
  root["precision"] = FloatTraits<T>::kName;
  json layers = json::array();
  for (const auto& L : model.extractor.layers) {
    json layer;
    layer["activation"] = to_string(L.activation);
    layer["weights"] = detail::hex_matrix(L.weights);
    layer["biases"] = detail::hex_vector(L.biases);
    layers.push_back(std::move(layer));
  }
  root["extractor"] = std::move(layers);
  root["student"]["weights"] = detail::hex_matrix(model.student.weights);
  root["student"]["biases"] = detail::hex_vector(model.student.biases);
  return root.dump(1) + "\n";
}

template <Binary T>
StudentModel<T> load_model(std::string_view text) {
  using detail::json;
  const json root = detail::parse_json(text);
  if (!root.is_object()) throw FormatError("$", "expected a JSON object");
  const std::string precision = detail::read_precision(root);
  if (precision != FloatTraits<T>::kName)
    throw FormatError("$.precision", "file holds " + precision + ", expected " + FloatTraits<T>::kName);

  StudentModel<T> model;
  const json& ext = detail::member(root, "extractor", "$");
  if (!ext.is_array() || ext.empty()) throw FormatError("$.extractor", "expected a non-empty array of layers");
  for (std::size_t l = 0; l < ext.size(); ++l) {
    const std::string lp = "$.extractor[" + std::to_string(l) + "]";
    DenseLayer<T> layer;
    const json& act = detail::member(ext[l], "activation", lp);
    auto a = act.is_string() ? parse_activation(act.get<std::string>()) : std::nullopt;
    if (!a) throw FormatError(lp + ".activation", "expected relu, identity or tanh");
    layer.activation = *a;
    layer.weights = detail::read_matrix<T>(detail::member(ext[l], "weights", lp), lp + ".weights");
    layer.biases = detail::read_vector<T>(detail::member(ext[l], "biases", lp), lp + ".biases");
    if (layer.biases.size() != layer.out_dim())
      throw FormatError(lp + ".biases", "has " + std::to_string(layer.biases.size()) + " entries, expected " +
                                            std::to_string(layer.out_dim()));
    if (l > 0 && model.extractor.layers.back().out_dim() != layer.in_dim())
      throw FormatError(lp + ".weights", "has " + std::to_string(layer.in_dim()) + " rows, previous layer outputs " +
                                            std::to_string(model.extractor.layers.back().out_dim()));
    model.extractor.layers.push_back(std::move(layer));
  }

  const json& st = detail::member(root, "student", "$");
  model.student.weights = detail::read_matrix<T>(detail::member(st, "weights", "$.student"), "$.student.weights");
  model.student.biases = detail::read_vector<T>(detail::member(st, "biases", "$.student"), "$.student.biases");
  const std::size_t n = model.extractor.output_dim();
  if (model.student.weights.rows != n)
    throw FormatError("$.student.weights", "has " + std::to_string(model.student.weights.rows) +
                                               " rows, extractor outputs n = " + std::to_string(n));
  if (model.student.biases.size() != model.student.weights.cols)
    throw FormatError("$.student.biases", "has " + std::to_string(model.student.biases.size()) +
                                              " entries, expected m = " + std::to_string(model.student.weights.cols));
  try {
    model.student.validate();
  } catch (const Error& e) {
    throw FormatError("$.student", e.what());
  }
  return model;
}

using AnyModel = std::variant<StudentModel<double>, StudentModel<float>>;

/// Loads whichever precision the file declares.
inline AnyModel load_any_model(std::string_view text) {
  const auto root = detail::parse_json(text);
  if (!root.is_object()) throw FormatError("$", "expected a JSON object");
  if (detail::read_precision(root) == "binary32") return load_model<float>(text);
  return load_model<double>(text);
}

/// FNV-1a over the serialized bytes.
inline std::uint64_t checksum(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace sniff
