#pragma once

// Recovery of the secret last layer from sign-flip fault observations.
//
// With z = softmax(y)_j and a sign flip on one additive term t of y_j, the
// faulted logit is y_j - 2t and every other logit is unchanged, so
//
//   (1/z~ - 1) / (1/z - 1) = exp(2t)
//
// t is the bias b_j for a bias fault and I_i * w_ij for a product fault.

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sniff/session.hpp"

namespace sniff {

/// Clean and faulted softmax output at class j0. For weight faults, i0 and
/// the attacker-computed feature value I_{i0} are present.
struct ObservationPair {
  double z = 0;
  double z_tilde = 0;
  std::size_t j0 = 0;
  std::optional<std::size_t> i0 = std::nullopt;
  std::optional<double> feature = std::nullopt;
  // Optional sums of the other classes' outputs (clean, faulted). They equal
  // 1 - z and 1 - z~ but keep full relative precision when z is close to 1.
  std::optional<double> rest = std::nullopt;
  std::optional<double> rest_tilde = std::nullopt;
};

/// Pair at class j from two full output vectors; rest sums run in ascending k.
template <Binary T>
ObservationPair observe(std::span<const T> clean, std::span<const T> faulted, std::size_t j,
                        std::optional<std::size_t> i0 = std::nullopt,
                        std::optional<double> feature = std::nullopt) {
  if (clean.size() != faulted.size() || j >= clean.size())
    throw UsageError("observation index outside the output vector");
  double rest = 0, rest_tilde = 0;
  for (std::size_t k = 0; k < clean.size(); ++k) {
    if (k == j) continue;
    rest += static_cast<double>(clean[k]);
    rest_tilde += static_cast<double>(faulted[k]);
  }
  ObservationPair obs{static_cast<double>(clean[j]), static_cast<double>(faulted[j]), j, i0, feature};
  if (clean.size() > 1) {
    obs.rest = rest;
    obs.rest_tilde = rest_tilde;
  }
  return obs;
}

/// ln((1/z~ - 1) / (1/z - 1)), i.e. 2t.
///
/// Evaluated through the odds (1-z)/z. When the other classes' outputs are
/// known, their sum replaces 1-z, which otherwise loses all relative
/// precision as z approaches 1.
inline double log_odds_ratio(const ObservationPair& obs) {
  auto saturated = [](double v) { return !(v > 0.0 && v < 1.0); };
  if (saturated(obs.z) || saturated(obs.z_tilde))
    throw DegenerateObservationError("softmax output saturated: z = " + describe(obs.z) +
                                     ", z~ = " + describe(obs.z_tilde));
  const double rest = obs.rest ? *obs.rest : 1.0 - obs.z;
  const double rest_tilde = obs.rest_tilde ? *obs.rest_tilde : 1.0 - obs.z_tilde;
  if (!(rest > 0.0) || !(rest_tilde > 0.0) || !std::isfinite(rest) || !std::isfinite(rest_tilde))
    throw DegenerateObservationError("remaining classes' outputs underflowed: " + describe(rest) + ", " +
                                     describe(rest_tilde));
  const double odds_clean = rest / obs.z;
  const double odds_faulted = rest_tilde / obs.z_tilde;
  double ratio = odds_faulted / odds_clean;
  double result;
  if (std::isfinite(ratio) && ratio > 0.0) {
    result = std::log(ratio);
  } else {
    result = (std::log(rest_tilde) - std::log(obs.z_tilde)) - (std::log(rest) - std::log(obs.z));
  }
  if (!std::isfinite(result))
    throw NumericDomainError("log-odds ratio is not finite for z = " + describe(obs.z) +
                             ", z~ = " + describe(obs.z_tilde));
  return result;
}

/// b_j0 = 1/2 ln((1/z~ - 1) / (1/z - 1)).
inline double recover_bias(const ObservationPair& obs) {
  if (obs.i0) throw UsageError("bias recovery expects an observation without an input index");
  return 0.5 * log_odds_ratio(obs);
}

/// w_{i0 j0} = 1/(2 I_{i0}) ln((1/z~ - 1) / (1/z - 1)).
inline double recover_weight(const ObservationPair& obs) {
  if (!obs.i0 || !obs.feature)
    throw UsageError("weight recovery needs the input index and its feature value");
  const double feature = *obs.feature;
  if (feature == 0.0)
    throw VanishingInputError("feature " + std::to_string(*obs.i0) + " vanishes for this input");
  if (!std::isfinite(feature)) throw NumericDomainError("feature value is not finite");
  const double w = log_odds_ratio(obs) / (2.0 * feature);
  if (!std::isfinite(w)) throw NumericDomainError("recovered weight is not finite");
  return w;
}

template <Binary T>
using InputSampler = std::function<std::vector<T>()>;

/// Independent standard-normal components.
template <Binary T>
InputSampler<T> gaussian_sampler(std::uint64_t seed, std::size_t dim) {
  auto rng = std::make_shared<Rng>(seed, Stream::kAttackInputs);
  return [rng, dim] {
    std::vector<T> x(dim);
    for (auto& v : x) v = static_cast<T>(rng->normal());
    return x;
  };
}

template <Binary T>
struct NonVanishingInput {
  std::vector<T> x;
  std::vector<T> features;
  std::size_t tries = 0;
};

/// Absolute floor of the default threshold.
inline constexpr double kEpsilonFloor = 1e-9;
/// Default threshold relative to the largest feature magnitude of the sample.
inline constexpr double kEpsilonRelative = 1e-3;

/// Threshold applied to a sampled feature vector. An explicit epsilon wins;
/// otherwise max(1e-3 * max_i |I_i|, 1e-9).
template <Binary T>
double nonvanishing_threshold(std::span<const T> features, std::optional<double> epsilon) {
  if (epsilon) return *epsilon;
  double peak = 0;
  for (T v : features) peak = std::max(peak, std::abs(static_cast<double>(v)));
  return std::max(kEpsilonRelative * peak, kEpsilonFloor);
}

/// Offline search over the public extractor for an input with |I(x)_{i0}| >= epsilon.
template <Binary T>
NonVanishingInput<T> find_nonvanishing_input(const FeatureExtractor<T>& extractor, std::size_t i0,
                                             const InputSampler<T>& sampler,
                                             std::optional<double> epsilon, std::size_t max_tries) {
  if (i0 >= extractor.output_dim())
    throw UsageError("feature index " + std::to_string(i0) + " outside 0.." +
                     std::to_string(extractor.output_dim() - 1));
  if (epsilon && !(*epsilon > 0.0)) throw UsageError("epsilon must be positive");
  if (max_tries == 0) throw UsageError("max_tries must be at least 1");

  for (std::size_t t = 1; t <= max_tries; ++t) {
    auto x = sampler();
    auto features = extract_features<T>(extractor, x);
    if (std::abs(static_cast<double>(features[i0])) >= nonvanishing_threshold<T>(features, epsilon))
      return {std::move(x), std::move(features), t};
  }
  throw SearchFailureError("no non-vanishing input for feature " + std::to_string(i0) + " after " +
                           std::to_string(max_tries) + " tries");
}

struct ExtractionConfig {
  std::uint64_t seed = 0;
  std::optional<double> epsilon = std::nullopt;  // default: relative rule above
  std::size_t max_tries = 1000;
  std::size_t retry_limit = 10;
};

enum class ParameterKind { kWeight, kBias };

struct ParameterResult {
  ParameterKind kind;
  std::size_t i = 0;  // unused for biases
  std::size_t j = 0;
  bool ok = false;
  double recovered = 0;
  std::optional<double> truth = std::nullopt;
  std::optional<double> abs_error = std::nullopt;
  std::size_t retries = 0;
  std::string failure = {};
};

template <Binary T>
struct RecoveryReport {
  StudentLayer<T> recovered;
  std::vector<ParameterResult> parameters;  // biases first, then weights row-major

  std::optional<double> max_weight_error;
  std::optional<double> max_bias_error;

  std::size_t fault_count = 0;
  std::size_t faulted_runs = 0;
  std::size_t clean_runs = 0;
  std::size_t run_count = 0;
  std::size_t theoretical_runs = 0;  // 2m + 2mn: one clean run per fault
  std::size_t expected_faults = 0;   // m + mn
  std::size_t retries = 0;
  std::size_t search_tries = 0;
  std::size_t failures = 0;

  bool complete() const { return failures == 0; }
};

/// Recovers W_S and b_S through the session using one sign-flip fault per
/// parameter. Attacker knowledge: the public extractor, n, m, chosen inputs and
/// softmax outputs. `truth`, when given, only fills the error columns.
template <Binary T>
RecoveryReport<T> extract_last_layer(FaultSession<T>& session, const FeatureExtractor<T>& extractor,
                                     std::size_t n, std::size_t m, const ExtractionConfig& config,
                                     const StudentLayer<T>* truth = nullptr) {
  if (n == 0 || m == 0) throw UsageError("n and m must be positive");
  if (extractor.output_dim() != n)
    throw UsageError("public extractor output does not match n = " + std::to_string(n));
  if (truth && (truth->n() != n || truth->m() != m))
    throw UsageError("ground-truth layer dimensions do not match n, m");

  const std::size_t faults_before = session.fault_count();
  const std::size_t runs_before = session.run_count();

  RecoveryReport<T> report;
  report.recovered.weights = Matrix<T>(n, m);
  report.recovered.biases.assign(m, T{0});
  report.expected_faults = m + n * m;
  report.theoretical_runs = 2 * m + 2 * n * m;

  auto sampler = gaussian_sampler<T>(config.seed, extractor.input_dim());

  std::map<std::vector<typename FloatTraits<T>::Bits>, std::vector<T>> clean_cache;
  auto clean_output = [&](const std::vector<T>& x) -> const std::vector<T>& {
    std::vector<typename FloatTraits<T>::Bits> key;
    key.reserve(x.size());
    for (T v : x) key.push_back(FloatBits<T>(v).bits());
    auto it = clean_cache.find(key);
    if (it == clean_cache.end()) it = clean_cache.emplace(std::move(key), session.run(RawInput<T>{x})).first;
    return it->second;
  };

  auto finish = [&](ParameterResult r, T value) {
    r.recovered = static_cast<double>(value);
    if (truth) {
      r.truth = r.kind == ParameterKind::kBias ? static_cast<double>(truth->biases[r.j])
                                                : static_cast<double>(truth->weights(r.i, r.j));
      if (r.ok) r.abs_error = std::abs(r.recovered - *r.truth);
    }
    report.parameters.push_back(std::move(r));
  };

  // Biases: any input works, one is shared by all classes.
  {
    std::vector<T> x = sampler();
    for (std::size_t j = 0; j < m; ++j) {
      ParameterResult r{ParameterKind::kBias, 0, j};
      T value = 0;
      for (;;) {
        try {
          const auto& clean = clean_output(x);
          auto faulted = session.run(RawInput<T>{x}, bias_sign(j));
          value = static_cast<T>(recover_bias(observe<T>(clean, faulted, j)));
          r.ok = true;
          break;
        } catch (const DegenerateObservationError& e) {
          if (r.retries == config.retry_limit) {
            r.failure = e.what();
            break;
          }
          ++r.retries;
          x = sampler();
        }
      }
      report.retries += r.retries;
      if (r.ok) report.recovered.biases[j] = value;
      else ++report.failures;
      finish(std::move(r), value);
    }
  }

  // Weights: one non-vanishing input per feature index, shared across classes.
  for (std::size_t i = 0; i < n; ++i) {
    std::optional<NonVanishingInput<T>> input;
    std::string search_failure;
    auto search = [&] {
      try {
        input = find_nonvanishing_input<T>(extractor, i, sampler, config.epsilon, config.max_tries);
        report.search_tries += input->tries;
      } catch (const SearchFailureError& e) {
        input.reset();
        search_failure = e.what();
        report.search_tries += config.max_tries;
      }
    };
    search();

    for (std::size_t j = 0; j < m; ++j) {
      ParameterResult r{ParameterKind::kWeight, i, j};
      T value = 0;
      while (input) {
        try {
          const auto& clean = clean_output(input->x);
          auto faulted = session.run(RawInput<T>{input->x}, product_sign(i, j));
          auto obs = observe<T>(clean, faulted, j, i, static_cast<double>(input->features[i]));
          value = static_cast<T>(recover_weight(obs));
          r.ok = true;
          break;
        } catch (const DegenerateObservationError& e) {
          if (r.retries == config.retry_limit) {
            r.failure = e.what();
            break;
          }
          ++r.retries;
          search();
        }
      }
      if (!r.ok && r.failure.empty()) r.failure = search_failure;
      report.retries += r.retries;
      if (r.ok) report.recovered.weights(i, j) = value;
      else ++report.failures;
      finish(std::move(r), value);
    }
  }

  report.fault_count = session.fault_count() - faults_before;
  report.run_count = session.run_count() - runs_before;
  report.faulted_runs = report.fault_count;
  report.clean_runs = report.run_count - report.faulted_runs;

  if (truth) {
    double wmax = 0, bmax = 0;
    for (const auto& p : report.parameters) {
      if (!p.abs_error) continue;
      double& slot = p.kind == ParameterKind::kBias ? bmax : wmax;
      slot = std::max(slot, *p.abs_error);
    }
    report.max_weight_error = wmax;
    report.max_bias_error = bmax;
  }
  return report;
}

}  // namespace sniff
