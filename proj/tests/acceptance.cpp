// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>

#include "oracle.hpp"
#include "sniff/sniff.hpp"

using namespace sniff;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::uint64_t kSeed = 42;
constexpr double kExactTolerance = 1e-12;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

template <Binary T>
RecoveryReport<T> attack(const StudentModel<T>& model, std::uint64_t seed) {
  FaultSession<T> session(std::make_shared<const StudentModel<T>>(model));
  return extract_last_layer<T>(session, model.extractor, model.n(), model.m(), ExtractionConfig{seed},
                               &model.student);
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

Outcome exact_recovery() {
  const auto start = Clock::now();
  auto model = generate_synthetic<double>(kSeed, {32, 16}, 16, 10);
  auto r = attack(model, kSeed);
  const double elapsed = seconds_since(start);
  const bool ok = r.complete() && *r.max_weight_error <= kExactTolerance && *r.max_bias_error <= kExactTolerance &&
                  elapsed < 5.0;
  return {ok, "max weight error " + sci(*r.max_weight_error) + ", max bias error " + sci(*r.max_bias_error) +
                  " (<= 1e-12), " + sci(elapsed) + " s (< 5 s)"};
}

Outcome fault_accounting() {
  auto model = generate_synthetic<double>(kSeed, {32, 16}, 16, 10);
  auto r = attack(model, kSeed);
  const bool ok = r.retries == 0 && r.fault_count == 170 && r.expected_faults == 170 &&
                  r.theoretical_runs == 340 && r.faulted_runs == 170 && r.clean_runs <= 17;
  return {ok, "faults " + std::to_string(r.fault_count) + " (m + nm = 170), theoretical runs " +
                  std::to_string(r.theoretical_runs) + ", actual runs " + std::to_string(r.run_count) + " (" +
                  std::to_string(r.clean_runs) + " cached clean + " + std::to_string(r.faulted_runs) +
                  " faulted), retries " + std::to_string(r.retries)};
}

Outcome sweep_robustness() {
  const auto start = Clock::now();
  double worst = 0;
  std::size_t runs = 0, bad = 0;
  for (std::size_t n : {4, 16, 64})
    for (std::size_t m : {2, 10})
      for (std::uint64_t s = 0; s < 20; ++s) {
        const std::uint64_t seed = 1000 + s;
        auto model = generate_synthetic<double>(seed, {32, n}, n, m);
        auto r = attack(model, seed);
        const double e = std::max(*r.max_weight_error, *r.max_bias_error);
        worst = std::max(worst, e);
        ++runs;
        if (!r.complete() || e > kExactTolerance) ++bad;
      }
  const double elapsed = seconds_since(start);
  return {bad == 0 && elapsed < 120.0, std::to_string(runs) + " extractions, " + std::to_string(bad) +
                                           " over bound, worst error " + sci(worst) + ", " + sci(elapsed) +
                                           " s (< 120 s)"};
}

Outcome functional_equivalence() {
  auto model = generate_synthetic<double>(kSeed, {32, 16}, 16, 10);
  auto r = attack(model, kSeed);
  StudentModel<double> recovered{model.extractor, r.recovered};
  auto data = make_blob_dataset<double>(kSeed, 32, 10, kDatasetSize, kTestSize, &model);
  auto curve = accuracy_curve(model, recovered, data.test, {2, std::nullopt});
  const auto& two = curve[0];
  const auto& full = curve[1];
  const bool ok = data.train.size() == 1500 && data.test.size() == 500 && full.disagreements == 0 &&
                  full.diff == 0.0 && std::abs(two.diff) <= 0.01;
  return {ok, "unrounded: " + std::to_string(full.disagreements) + " disagreements, diff " + sci(full.diff) +
                  "; digits=2: diff " + sci(two.diff) + " (|diff| <= 0.01), original accuracy " +
                  sci(full.accuracy_a)};
}

Outcome countermeasure() {
  Rng rng(kSeed, Stream::kTrials);
  std::size_t detected_nonzero = 0, detected_zero = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(15), m = 2 + rng.below(9);
    auto model = generate_synthetic<double>(rng.next_u64(), {8, n}, n, m);
    std::vector<double> x(8);
    for (auto& v : x) v = rng.normal();
    auto I = extract_features(model, std::span<const double>(x));
    std::size_t i = rng.below(n), j = rng.below(m);
    while (I[i] * model.student.weights(i, j) == 0.0) i = rng.below(n);
    detected_nonzero += redundancy_detect<double>(model, x, product_sign(i, j), 2, rng.below(2)).detected;

    model.student.weights(i, j) = 0.0;
    detected_zero += redundancy_detect<double>(model, x, product_sign(i, j), 2, rng.below(2)).detected;
  }
  return {detected_nonzero == 1000 && detected_zero == 0,
          "N=2 detected " + std::to_string(detected_nonzero) + "/1000 nonzero-product flips, " +
              std::to_string(detected_zero) + "/1000 zero-product flips (blind spot)"};
}

Outcome numeric_invariants() {
  Rng rng(kSeed, Stream::kTrials);
  std::size_t involution_bad = 0;
  for (int t = 0; t < 1000000; ++t) {
    auto w = FloatWord::from_bits(rng.next_u64());
    if (sign_flip(sign_flip(w)) != w || sign_flip(w).bits() != (w.bits() ^ 0x8000000000000000ULL)) ++involution_bad;
  }

  double worst_norm = 0;  // in units of m * 2^-50
  for (int t = 0; t < 10000; ++t) {
    const std::size_t m = 1 + rng.below(64);
    std::vector<double> y(m);
    for (auto& v : y) v = rng.uniform(-50, 50);
    double total = 0;
    for (double p : softmax(y)) total += p;
    worst_norm = std::max(worst_norm, std::abs(total - 1.0) / (static_cast<double>(m) * 0x1p-50));
  }

  double worst_forward = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t in = 1 + rng.below(16), n = 1 + rng.below(32), m = 1 + rng.below(32);
    auto model = generate_synthetic<double>(rng.next_u64(), {in, 1 + rng.below(16), n}, n, m);
    std::vector<double> x(in);
    for (auto& v : x) v = rng.normal();
    auto z = forward<double>(model, x);
    auto ref = oracle::forward(model, x);
    for (std::size_t j = 0; j < m; ++j)
      worst_forward = std::max(worst_forward, std::abs(z[j] - static_cast<double>(ref[j])));
  }

  double worst_roundtrip = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t n = 1 + rng.below(16), m = 2 + rng.below(15);
    auto model = generate_synthetic<double>(rng.next_u64(), {n, n}, n, m);
    model.extractor = identity_extractor<double>(n);
    std::vector<double> x(n);
    for (auto& v : x) v = (rng.below(2) ? 1 : -1) * rng.uniform(0.25, 2.0);
    const std::size_t i = rng.below(n), j = rng.below(m);
    auto clean = forward<double>(model, x);
    double err;
    if (t % 2 == 0) {
      auto f = forward<double>(model, x, bias_sign(j));
      err = std::abs(recover_bias(observe<double>(clean, f, j)) - model.student.biases[j]);
    } else {
      auto f = forward<double>(model, x, product_sign(i, j));
      err = std::abs(recover_weight(observe<double>(clean, f, j, i, x[i])) - model.student.weights(i, j));
    }
    worst_roundtrip = std::max(worst_roundtrip, err);
  }

  const bool ok = involution_bad == 0 && worst_norm <= 1.0 && worst_forward <= 0x1p-45 &&
                  worst_roundtrip <= kExactTolerance;
  return {ok, "involution failures " + std::to_string(involution_bad) + "/1e6; softmax sum error " +
                  sci(worst_norm) + " x m*2^-50; forward vs oracle " + sci(worst_forward) +
                  " (<= 2^-45); recovery round trip " + sci(worst_roundtrip) + " (<= 1e-12)"};
}

Outcome degradation() {
  auto model = generate_synthetic<float>(kSeed, {32, 16}, 16, 10);
  auto r = attack(model, kSeed);
  const double e = std::max(*r.max_weight_error, *r.max_bias_error);
  return {r.complete() && e <= 1e-4, "binary32 max error " + sci(e) + " (<= 1e-4)"};
}

Outcome serialization() {
  Rng rng(kSeed, Stream::kTrials);
  std::size_t bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t in = 1 + rng.below(6), n = 1 + rng.below(6), m = 1 + rng.below(6);
    auto model = generate_synthetic<double>(rng.next_u64(), {in, n}, n, m);
    model.student.biases[rng.below(m)] = -0.0;
    model.student.weights.data[rng.below(n * m)] = std::numeric_limits<double>::denorm_min() * 3;
    model.extractor.layers[0].weights.data[0] = -std::numeric_limits<double>::denorm_min();
    auto text = save_model(model);
    auto back = load_model<double>(text);
    auto same = [](const std::vector<double>& a, const std::vector<double>& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t k = 0; k < a.size(); ++k)
        if (oracle::bits_of(a[k]) != oracle::bits_of(b[k])) return false;
      return true;
    };
    if (!same(model.student.weights.data, back.student.weights.data) ||
        !same(model.student.biases, back.student.biases) ||
        !same(model.extractor.layers[0].weights.data, back.extractor.layers[0].weights.data) ||
        !same(model.extractor.layers[0].biases, back.extractor.layers[0].biases) || save_model(back) != text)
      ++bad;
  }

  namespace fs = std::filesystem;
  const auto base = fs::temp_directory_path() / "sniff_acceptance";
  fs::remove_all(base);
  std::size_t differing = 0;
  std::ostringstream sink;
  ExperimentConfig a, b;
  a.out = (base / "a").string();
  b.out = (base / "b").string();
  const int rc = cmd_all(a, sink) | cmd_all(b, sink);
  for (auto f : {"model.json", "recovered.json", "report.csv", "precision.csv", "accuracy.csv"})
    differing += detail::read_file((fs::path(a.out) / f).string()) != detail::read_file((fs::path(b.out) / f).string());
  return {bad == 0 && differing == 0 && rc == 0,
          std::to_string(1000 - bad) + "/1000 bit-exact model round trips; " + std::to_string(differing) +
              " differing output files across repeated runs"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"1 exact-recovery precision", exact_recovery},
      {"2 fault/run accounting", fault_accounting},
      {"3 sweep robustness", sweep_robustness},
      {"4 functional equivalence", functional_equivalence},
      {"5 temporal redundancy", countermeasure},
      {"6 numeric invariants", numeric_invariants},
      {"7 binary32 degradation", degradation},
      {"8 serialization and determinism", serialization},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    failures += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
