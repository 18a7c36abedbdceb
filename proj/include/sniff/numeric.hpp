#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sniff/errors.hpp"
#include "sniff/float_word.hpp"

namespace sniff {

template <Binary T>
void require_finite(std::span<const T> values, const char* where) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k]))
      throw NumericDomainError(std::string(where) + ": non-finite value at index " +
                               std::to_string(k) + " = " + to_hex(values[k]));
  }
}

/// Softmax with max-subtraction. Throws on any non-finite logit or output.
template <Binary T>
std::vector<T> softmax(std::span<const T> logits) {
  if (logits.empty()) throw UsageError("softmax of an empty vector");
  require_finite(logits, "softmax input");
  const T peak = *std::max_element(logits.begin(), logits.end());
  std::vector<T> out(logits.size());
  T total = 0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - peak);
    total += out[k];
  }
  for (T& v : out) v /= total;
  require_finite<T>(out, "softmax output");
  return out;
}

template <Binary T>
std::vector<T> softmax(const std::vector<T>& logits) {
  return softmax(std::span<const T>(logits));
}

/// Index of the largest entry; ties go to the lowest index.
template <Binary T>
std::size_t argmax(std::span<const T> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] > values[best]) best = k;
  return best;
}

template <Binary T>
std::size_t argmax(const std::vector<T>& values) {
  return argmax(std::span<const T>(values));
}

}  // namespace sniff
