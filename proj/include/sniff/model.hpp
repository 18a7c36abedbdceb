#pragma once

// Student network = public frozen feature extractor + secret dense layer + softmax.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sniff/errors.hpp"
#include "sniff/fault.hpp"
#include "sniff/numeric.hpp"
#include "sniff/random.hpp"

namespace sniff {

/// Row-major dense matrix.
template <Binary T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, T fill = T{0}) : rows(r), cols(c), data(r * c, fill) {}

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

enum class Activation { kRelu, kIdentity, kTanh };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
  }
  return "?";
}

inline std::optional<Activation> parse_activation(std::string_view s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "identity") return Activation::kIdentity;
  if (s == "tanh") return Activation::kTanh;
  return std::nullopt;
}

/// out_k = act(b_k + sum_i in_i * W(i, k)), W is in_dim x out_dim.
template <Binary T>
struct DenseLayer {
  Matrix<T> weights;
  std::vector<T> biases;
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const { return weights.rows; }
  std::size_t out_dim() const { return weights.cols; }
};

template <Binary T>
T activate(Activation a, T v) {
  switch (a) {
    case Activation::kRelu: return v > T{0} ? v : T{0};
    case Activation::kIdentity: return v;
    case Activation::kTanh: return std::tanh(v);
  }
  return v;
}

/// The frozen, publicly known part of the network: x -> I(x).
template <Binary T>
struct FeatureExtractor {
  std::vector<DenseLayer<T>> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

  void validate() const {
    if (layers.empty()) throw UsageError("feature extractor needs at least one layer");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& L = layers[l];
      if (L.in_dim() == 0 || L.out_dim() == 0)
        throw UsageError("extractor layer " + std::to_string(l) + " has a zero dimension");
      if (L.weights.data.size() != L.in_dim() * L.out_dim() || L.biases.size() != L.out_dim())
        throw UsageError("extractor layer " + std::to_string(l) + " has inconsistent sizes");
      if (l > 0 && layers[l - 1].out_dim() != L.in_dim())
        throw UsageError("extractor layer " + std::to_string(l) + " input " +
                         std::to_string(L.in_dim()) + " does not match previous output " +
                         std::to_string(layers[l - 1].out_dim()));
    }
  }
};

/// The secret last layer: weights n x m, biases m.
template <Binary T>
struct StudentLayer {
  Matrix<T> weights;
  std::vector<T> biases;

  std::size_t n() const { return weights.rows; }
  std::size_t m() const { return weights.cols; }

  void validate() const {
    if (n() == 0 || m() == 0) throw UsageError("student layer needs n >= 1 and m >= 1");
    if (weights.data.size() != n() * m() || biases.size() != m())
      throw UsageError("student layer has inconsistent sizes");
    require_finite<T>(weights.data, "student weights");
    require_finite<T>(biases, "student biases");
  }
};

template <Binary T>
struct StudentModel {
  using Scalar = T;
  static constexpr const char* kPrecision = FloatTraits<T>::kName;

  FeatureExtractor<T> extractor;
  StudentLayer<T> student;

  std::size_t n() const { return student.n(); }
  std::size_t m() const { return student.m(); }

  void validate() const {
    extractor.validate();
    student.validate();
    if (extractor.output_dim() != student.n())
      throw UsageError("extractor output " + std::to_string(extractor.output_dim()) +
                       " does not match student input " + std::to_string(student.n()));
  }
};

template <Binary T>
std::vector<T> apply_layer(const DenseLayer<T>& layer, std::span<const T> in) {
  std::vector<T> out(layer.out_dim());
  for (std::size_t k = 0; k < layer.out_dim(); ++k) {
    T acc = 0;
    for (std::size_t i = 0; i < layer.in_dim(); ++i) acc += in[i] * layer.weights(i, k);
    out[k] = activate(layer.activation, acc + layer.biases[k]);
  }
  return out;
}

template <Binary T>
std::vector<T> extract_features(const FeatureExtractor<T>& extractor, std::span<const T> x) {
  if (x.size() != extractor.input_dim())
    throw UsageError("input has " + std::to_string(x.size()) + " entries, extractor expects " +
                     std::to_string(extractor.input_dim()));
  require_finite(x, "input");
  std::vector<T> cur(x.begin(), x.end());
  for (std::size_t l = 0; l < extractor.layers.size(); ++l) {
    cur = apply_layer<T>(extractor.layers[l], cur);
    require_finite<T>(cur, "extractor layer output");
  }
  return cur;
}

template <Binary T>
std::vector<T> extract_features(const StudentModel<T>& model, std::span<const T> x) {
  return extract_features(model.extractor, x);
}

template <Binary T>
void check_fault_bounds(const FaultSpec& fault, std::size_t n, std::size_t m) {
  auto bad = [&](const std::string& what) {
    throw UsageError("fault " + to_string(fault) + " out of bounds for n=" + std::to_string(n) +
                     ", m=" + std::to_string(m) + " (" + what + ")");
  };
  std::visit(
      [&](const auto& t) {
        if constexpr (requires { t.i; })
          if (t.i >= n) bad("i");
        if constexpr (requires { t.j; })
          if (t.j >= m) bad("j");
      },
      fault.target);
  // Validates the kind against the format width.
  (void)apply_fault<T>(T{0}, fault.kind);
}

/// Logits of the student layer with an optional single fault.
///
/// y_j accumulates I_i * w_ij in ascending i and adds the bias last. A fault
/// at (i, j) only touches that neuron's computation; an Input fault hits the
/// shared feature before fan-out. Activation faults are not applied here.
template <Binary T>
std::vector<T> student_logits(const StudentLayer<T>& layer, std::span<const T> features,
                              const std::optional<FaultSpec>& fault = std::nullopt) {
  const std::size_t n = layer.n(), m = layer.m();
  if (features.size() != n)
    throw UsageError("feature vector has " + std::to_string(features.size()) +
                     " entries, student expects " + std::to_string(n));
  require_finite(features, "feature vector");
  if (fault) check_fault_bounds<T>(*fault, n, m);

  const auto* tgt = fault ? &fault->target : nullptr;
  auto hits = [&](auto tag, std::size_t i, std::size_t j) {
    using Tag = decltype(tag);
    if (!tgt) return false;
    const auto* t = std::get_if<Tag>(tgt);
    if (!t) return false;
    if constexpr (requires { t->i; })
      if (t->i != i) return false;
    if constexpr (requires { t->j; })
      if (t->j != j) return false;
    return true;
  };

  std::vector<T> in(features.begin(), features.end());
  if (tgt)
    if (const auto* t = std::get_if<target::Input>(tgt)) in[t->i] = apply_fault<T>(in[t->i], fault->kind);

  std::vector<T> y(m);
  for (std::size_t j = 0; j < m; ++j) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      T w = layer.weights(i, j);
      if (hits(target::Weight{}, i, j)) w = apply_fault<T>(w, fault->kind);
      T p = in[i] * w;
      if (hits(target::Product{}, i, j)) p = apply_fault<T>(p, fault->kind);
      acc += p;
    }
    T b = layer.biases[j];
    if (hits(target::Bias{}, 0, j)) b = apply_fault<T>(b, fault->kind);
    acc += b;
    if (hits(target::Sum{}, 0, j)) acc = apply_fault<T>(acc, fault->kind);
    y[j] = acc;
  }
  require_finite<T>(y, "logits");
  return y;
}

/// Softmax output from a precomputed feature vector.
template <Binary T>
std::vector<T> forward_features(const StudentModel<T>& model, std::span<const T> features,
                                const std::optional<FaultSpec>& fault = std::nullopt) {
  auto z = softmax<T>(student_logits(model.student, features, fault));
  if (fault)
    if (const auto* t = std::get_if<target::Activation>(&fault->target)) {
      z[t->j] = apply_fault<T>(z[t->j], fault->kind);
      require_finite<T>(z, "faulted softmax output");
    }
  return z;
}

template <Binary T>
std::vector<T> forward(const StudentModel<T>& model, std::span<const T> x,
                       const std::optional<FaultSpec>& fault = std::nullopt) {
  auto features = extract_features(model, x);
  return forward_features<T>(model, features, fault);
}

// ---------------------------------------------------------------------------

struct Range {
  double low = -1.0;
  double high = 1.0;
};

/// Seeded random model. `extractor_dims` lists every width from the raw input
/// to the feature vector, so its last entry must equal n. Hidden extractor
/// layers use relu, the last one identity.
template <Binary T>
StudentModel<T> generate_synthetic(std::uint64_t seed, const std::vector<std::size_t>& extractor_dims,
                                   std::size_t n, std::size_t m, Range range = {}) {
  if (extractor_dims.size() < 2)
    throw UsageError("extractor dims need an input and an output width");
  for (auto d : extractor_dims)
    if (d == 0) throw UsageError("extractor dims must be positive");
  if (extractor_dims.back() != n)
    throw UsageError("last extractor dim " + std::to_string(extractor_dims.back()) +
                     " must equal n = " + std::to_string(n));
  if (n == 0 || m == 0) throw UsageError("n and m must be positive");
  if (!std::isfinite(range.low) || !std::isfinite(range.high) || !(range.low < range.high))
    throw UsageError("weight range must be finite with low < high");

  Rng rng(seed, Stream::kModel);
  auto draw = [&] { return static_cast<T>(rng.uniform(range.low, range.high)); };

  StudentModel<T> model;
  for (std::size_t l = 0; l + 1 < extractor_dims.size(); ++l) {
    DenseLayer<T> layer;
    layer.weights = Matrix<T>(extractor_dims[l], extractor_dims[l + 1]);
    for (auto& w : layer.weights.data) w = draw();
    layer.biases.resize(extractor_dims[l + 1]);
    for (auto& b : layer.biases) b = draw();
    layer.activation = l + 2 == extractor_dims.size() ? Activation::kIdentity : Activation::kRelu;
    model.extractor.layers.push_back(std::move(layer));
  }
  model.student.weights = Matrix<T>(n, m);
  for (auto& w : model.student.weights.data) w = draw();
  model.student.biases.resize(m);
  for (auto& b : model.student.biases) b = draw();
  return model;
}

/// Single identity layer: I(x) = x.
template <Binary T>
FeatureExtractor<T> identity_extractor(std::size_t n) {
  DenseLayer<T> layer;
  layer.weights = Matrix<T>(n, n);
  for (std::size_t k = 0; k < n; ++k) layer.weights(k, k) = T{1};
  layer.biases.assign(n, T{0});
  layer.activation = Activation::kIdentity;
  return {{std::move(layer)}};
}

}  // namespace sniff
