#pragma once

// CSV output. Floats are written as hex bit patterns only.

#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sniff/evaluation.hpp"
#include "sniff/extraction.hpp"

namespace sniff {

template <Binary T>
void write_recovery_csv(std::ostream& os, const RecoveryReport<T>& r) {
  os << "kind,i,j,recovered_hex,true_hex,abs_error_hex,retries,status\n";
  for (const auto& p : r.parameters) {
    const bool bias = p.kind == ParameterKind::kBias;
    os << (bias ? "bias" : "weight") << ',';
    if (!bias) os << p.i;
    os << ',' << p.j << ',';
    if (p.ok) os << to_hex(static_cast<T>(p.recovered));
    os << ',';
    if (p.truth) os << to_hex(static_cast<T>(*p.truth));
    os << ',';
    if (p.abs_error) os << to_hex(*p.abs_error);
    os << ',' << p.retries << ',';
    if (p.ok) {
      os << "ok";
    } else {
      // Quoted; failure messages contain commas.
      std::string msg = p.failure;
      for (auto& c : msg)
        if (c == '"') c = '\'';
      os << "\"failed: " << msg << '"';
    }
    os << '\n';
  }
  os << "summary,,,,,";
  if (r.max_weight_error && r.max_bias_error)
    os << to_hex(std::max(*r.max_weight_error, *r.max_bias_error));
  os << ',' << r.retries << ",\"precision=" << FloatTraits<T>::kName << ";faults=" << r.fault_count
     << ";expected_faults=" << r.expected_faults << ";runs=" << r.run_count
     << ";clean_runs=" << r.clean_runs << ";faulted_runs=" << r.faulted_runs
     << ";theoretical_runs=" << r.theoretical_runs << ";search_tries=" << r.search_tries
     << ";failures=" << r.failures;
  if (r.max_weight_error) os << ";max_weight_error=" << to_hex(*r.max_weight_error);
  if (r.max_bias_error) os << ";max_bias_error=" << to_hex(*r.max_bias_error);
  os << "\"\n";
}

inline void write_precision_csv(std::ostream& os, const PrecisionSummary& s) {
  os << "metric,value\n";
  os << "precision," << s.precision << '\n';
  os << "max_weight_abs_error," << to_hex(s.max_weight_abs_error) << '\n';
  os << "max_bias_abs_error," << to_hex(s.max_bias_abs_error) << '\n';
  os << "exact_count," << s.exact_count << '\n';
  for (const auto& [decade, count] : s.decade_histogram) os << "decade_" << decade << ',' << count << '\n';
}

inline void write_accuracy_csv(std::ostream& os, const std::vector<AccuracyPoint>& curve) {
  os << "digits,total,correct_original,correct_recovered,disagreements,accuracy_original_hex,"
        "accuracy_recovered_hex,diff_hex\n";
  for (const auto& p : curve) {
    os << (p.digits ? std::to_string(*p.digits) : std::string("inf")) << ',' << p.total << ','
       << p.correct_a << ',' << p.correct_b << ',' << p.disagreements << ',' << to_hex(p.accuracy_a)
       << ',' << to_hex(p.accuracy_b) << ',' << to_hex(p.diff) << '\n';
  }
}

template <class F>
std::string to_csv_string(F&& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

}  // namespace sniff
