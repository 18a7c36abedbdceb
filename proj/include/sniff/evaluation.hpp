#pragma once

// Precision statistics, rounding/accuracy experiments and the temporal
// redundancy countermeasure.

#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "sniff/model.hpp"

namespace sniff {

// ---------------------------------------------------------------------------
// Precision

struct PrecisionSummary {
  double max_weight_abs_error = 0;
  double max_bias_abs_error = 0;
  /// Errors bucketed by decade: key k counts errors in [10^k, 10^(k+1)).
  std::map<int, std::size_t> decade_histogram;
  std::size_t exact_count = 0;  // errors that are exactly zero
  const char* precision = "binary64";
};

inline int error_decade(double err) { return static_cast<int>(std::floor(std::log10(err))); }

template <Binary T>
PrecisionSummary summarize_precision(const StudentLayer<T>& truth, const StudentLayer<T>& recovered) {
  if (truth.n() != recovered.n() || truth.m() != recovered.m() ||
      truth.biases.size() != recovered.biases.size())
    throw UsageError("precision summary needs layers of matching dimensions");
  PrecisionSummary s;
  s.precision = FloatTraits<T>::kName;
  auto add = [&](T a, T b, double& max) {
    double err = std::abs(static_cast<double>(a) - static_cast<double>(b));
    if (std::isnan(err)) throw NumericDomainError("non-finite parameter in precision summary");
    max = std::max(max, err);
    if (err == 0.0) ++s.exact_count;
    else ++s.decade_histogram[error_decade(err)];
  };
  for (std::size_t k = 0; k < truth.weights.data.size(); ++k)
    add(truth.weights.data[k], recovered.weights.data[k], s.max_weight_abs_error);
  for (std::size_t k = 0; k < truth.biases.size(); ++k)
    add(truth.biases[k], recovered.biases[k], s.max_bias_abs_error);
  return s;
}

// ---------------------------------------------------------------------------
// Rounding

/// Nearest multiple of 10^-digits, ties to even, decided on the exact binary
/// value of x (0.125 -> 0.12 at two digits).
inline double round_to_digits(double x, int digits) {
  if (digits < 0) throw UsageError("digits must be non-negative");
  if (!std::isfinite(x)) return x;
  if (digits > 22) {
    // 10^digits is no longer exact; only tiny values can change here.
    const long double p = std::pow(10.0L, digits);
    const long double scaled = static_cast<long double>(x) * p;
    if (std::abs(scaled) >= 0x1.0p63L) return x;
    return static_cast<double>(std::nearbyint(scaled) / p);
  }
  const double p = std::pow(10.0, digits);  // exact for digits <= 22
  const double scaled = x * p;
  if (std::abs(scaled) >= 0x1.0p52) return x;  // already an integer multiple
  // x * p = scaled + residual exactly.
  const double residual = std::fma(x, p, -scaled);
  double r = std::nearbyint(scaled);
  const double frac = scaled - std::floor(scaled);
  if (frac == 0.5 && residual != 0.0) r = residual > 0 ? std::ceil(scaled) : std::floor(scaled);
  const double out = r / p;
  return out == 0.0 ? std::copysign(0.0, x) : out;
}

template <Binary T>
StudentLayer<T> round_parameters(const StudentLayer<T>& layer, int digits) {
  StudentLayer<T> out = layer;
  for (auto& w : out.weights.data) w = static_cast<T>(round_to_digits(static_cast<double>(w), digits));
  for (auto& b : out.biases) b = static_cast<T>(round_to_digits(static_cast<double>(b), digits));
  return out;
}

// ---------------------------------------------------------------------------
// Accuracy

template <Binary T>
struct LabeledPoint {
  std::vector<T> x;
  std::size_t label;
};

template <Binary T>
struct Dataset {
  std::vector<LabeledPoint<T>> train;
  std::vector<LabeledPoint<T>> test;
};

inline constexpr std::size_t kDatasetSize = 2000;
inline constexpr std::size_t kTestSize = 500;

inline constexpr std::size_t kAnchorCandidates = 64;

/// m Gaussian blobs with unit variance; labels are blob indices assigned
/// round-robin and the last `test_size` points are held out.
///
/// Without a model the centres are uniform in [-2, 2]^dim. With a model, the
/// centre of blob k is the candidate (out of kAnchorCandidates standard-normal
/// draws, scaled by 2) with the largest class-k softmax output, so labels are
/// correlated with the model's decisions without any training.
template <Binary T>
Dataset<T> make_blob_dataset(std::uint64_t seed, std::size_t dim, std::size_t m,
                             std::size_t total = kDatasetSize, std::size_t test_size = kTestSize,
                             const StudentModel<T>* anchor = nullptr) {
  if (dim == 0 || m == 0) throw UsageError("dataset needs positive dimension and class count");
  if (test_size == 0 || test_size > total) throw UsageError("test split must be within the dataset");
  if (anchor && (anchor->extractor.input_dim() != dim || anchor->m() != m))
    throw UsageError("anchor model does not match dataset dimensions");
  Rng rng(seed, Stream::kDataset);
  std::vector<std::vector<double>> centres(m, std::vector<double>(dim));
  if (!anchor) {
    for (auto& c : centres)
      for (auto& v : c) v = rng.uniform(-2.0, 2.0);
  } else {
    std::vector<double> best(m, -1.0);
    for (std::size_t c = 0; c < kAnchorCandidates * m; ++c) {
      std::vector<T> x(dim);
      for (auto& v : x) v = static_cast<T>(2.0 * rng.normal());
      auto z = forward<T>(*anchor, x);
      for (std::size_t k = 0; k < m; ++k)
        if (static_cast<double>(z[k]) > best[k]) {
          best[k] = static_cast<double>(z[k]);
          centres[k].assign(x.begin(), x.end());
        }
    }
  }

  Dataset<T> ds;
  for (std::size_t k = 0; k < total; ++k) {
    LabeledPoint<T> p{std::vector<T>(dim), k % m};
    for (std::size_t d = 0; d < dim; ++d) p.x[d] = static_cast<T>(centres[p.label][d] + rng.normal());
    (k < total - test_size ? ds.train : ds.test).push_back(std::move(p));
  }
  return ds;
}

template <Binary T>
std::size_t predict(const StudentModel<T>& model, std::span<const T> x) {
  return argmax(forward<T>(model, x));
}

struct AccuracyPoint {
  std::optional<int> digits;  // nullopt: no rounding
  std::size_t total = 0;
  std::size_t correct_a = 0;
  std::size_t correct_b = 0;
  std::size_t disagreements = 0;  // points where the two argmaxes differ
  double accuracy_a = 0;
  double accuracy_b = 0;
  double diff = 0;  // accuracy_a - accuracy_b
};

template <Binary T>
AccuracyPoint accuracy_diff(const StudentModel<T>& a, const StudentModel<T>& b,
                            const std::vector<LabeledPoint<T>>& data) {
  if (data.empty()) throw UsageError("accuracy needs a non-empty dataset");
  if (a.n() != b.n() || a.m() != b.m() || a.extractor.input_dim() != b.extractor.input_dim())
    throw UsageError("models compared for accuracy must share dimensions");
  AccuracyPoint pt;
  pt.total = data.size();
  for (const auto& p : data) {
    const std::size_t pa = predict<T>(a, p.x), pb = predict<T>(b, p.x);
    pt.correct_a += pa == p.label;
    pt.correct_b += pb == p.label;
    pt.disagreements += pa != pb;
  }
  pt.accuracy_a = static_cast<double>(pt.correct_a) / static_cast<double>(pt.total);
  pt.accuracy_b = static_cast<double>(pt.correct_b) / static_cast<double>(pt.total);
  pt.diff = pt.accuracy_a - pt.accuracy_b;
  return pt;
}

/// Default sweep; nullopt stands for unrounded parameters.
inline std::vector<std::optional<int>> default_digit_sweep() {
  return {0, 1, 2, 3, 4, 6, 8, std::nullopt};
}

/// Original vs. recovered-with-rounded-student, one point per digit setting.
template <Binary T>
std::vector<AccuracyPoint> accuracy_curve(const StudentModel<T>& original, const StudentModel<T>& recovered,
                                          const std::vector<LabeledPoint<T>>& data,
                                          const std::vector<std::optional<int>>& digits) {
  std::vector<AccuracyPoint> curve;
  for (const auto& d : digits) {
    StudentModel<T> rounded = recovered;
    if (d) rounded.student = round_parameters(recovered.student, *d);
    auto pt = accuracy_diff(original, rounded, data);
    pt.digits = d;
    curve.push_back(pt);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Temporal redundancy

template <Binary T>
struct RedundancyOutcome {
  std::size_t runs = 0;
  bool detected = false;
  std::vector<std::vector<T>> outputs;
};

/// Runs the same input N times, one run optionally faulted, and flags any
/// numerical disagreement between runs (so +0.0 == -0.0).
template <Binary T>
RedundancyOutcome<T> redundancy_detect(const StudentModel<T>& model, std::span<const T> x,
                                       const std::optional<FaultSpec>& fault, std::size_t runs,
                                       std::size_t faulted_run) {
  if (runs < 2) throw UsageError("temporal redundancy needs at least two runs");
  if (faulted_run >= runs) throw UsageError("faulted run index outside the run count");
  RedundancyOutcome<T> out;
  out.runs = runs;
  for (std::size_t r = 0; r < runs; ++r)
    out.outputs.push_back(forward<T>(model, x, r == faulted_run ? fault : std::nullopt));
  for (std::size_t r = 1; r < runs && !out.detected; ++r)
    for (std::size_t k = 0; k < out.outputs[0].size(); ++k)
      if (out.outputs[r][k] != out.outputs[0][k]) {
        out.detected = true;
        break;
      }
  return out;
}

}  // namespace sniff
