#pragma once

// Experiment commands behind the command-line tool. Each writes its files to
// the configured output directory, prints a human summary and returns an exit
// status.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sniff/evaluation.hpp"
#include "sniff/extraction.hpp"
#include "sniff/report.hpp"
#include "sniff/serialization.hpp"

namespace sniff {

struct ExperimentConfig {
  std::uint64_t seed = 42;
  std::vector<std::size_t> dims{32, 16};  // extractor widths, input first; last is n
  std::size_t classes = 10;               // m
  double weight_low = -1.0;
  double weight_high = 1.0;
  int precision = 64;  // 64 or 32
  std::string model;      // input model path; defaults to <out>/model.json
  std::string recovered;  // recovered model path; defaults to <out>/recovered.json
  std::string out = "out";
  std::optional<double> epsilon;
  std::size_t max_tries = 1000;
  std::size_t retry_limit = 10;
  std::string fault;
  std::string input;  // comma separated decimals; empty samples one from the seed
  std::vector<std::optional<int>> digits = default_digit_sweep();
};

inline constexpr double kTolerance64 = 1e-12;
inline constexpr double kTolerance32 = 1e-4;
inline constexpr double kAccuracyDiffAtTwoDigits = 0.01;

template <Binary T>
constexpr double recovery_tolerance() {
  return std::is_same_v<T, double> ? kTolerance64 : kTolerance32;
}

/// "0,1,2,inf" -> {0, 1, 2, nullopt}.
inline std::vector<std::optional<int>> parse_digits(std::string_view text) {
  std::vector<std::optional<int>> out;
  for (const auto& tok : detail::split(text, ',', 0)) {
    if (tok.text == "inf") {
      out.push_back(std::nullopt);
      continue;
    }
    auto v = detail::parse_uint(tok, "a digit count or 'inf'");
    if (v > 300) throw ParseError(tok.pos, std::string(tok.text), "digit count too large");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

inline std::vector<std::size_t> parse_dims(std::string_view text) {
  std::vector<std::size_t> out;
  for (const auto& tok : detail::split(text, ',', 0))
    out.push_back(static_cast<std::size_t>(detail::parse_uint(tok, "a layer width")));
  return out;
}

template <Binary T>
std::vector<T> parse_input(std::string_view text) {
  std::vector<T> out;
  for (const auto& tok : detail::split(text, ',', 0)) {
    double v;
    auto s = tok.text;
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
      throw ParseError(tok.pos, std::string(tok.text), "expected a decimal number");
    out.push_back(static_cast<T>(v));
  }
  return out;
}

namespace detail {

inline std::filesystem::path out_dir(const ExperimentConfig& cfg) {
  std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string model_path(const ExperimentConfig& cfg) {
  return cfg.model.empty() ? (std::filesystem::path(cfg.out) / "model.json").string() : cfg.model;
}

inline std::string recovered_path(const ExperimentConfig& cfg) {
  return cfg.recovered.empty() ? (std::filesystem::path(cfg.out) / "recovered.json").string() : cfg.recovered;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << bytes;
  if (!out) throw UsageError("failed writing " + path.string());
}

/// Timestamps live only in run.log so every other output stays reproducible.
inline void log_line(const ExperimentConfig& cfg, const std::string& msg) {
  std::ofstream log(out_dir(cfg) / "run.log", std::ios::app);
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  log << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << ' ' << msg << '\n';
}

template <Binary T>
std::string dims_string(const StudentModel<T>& model) {
  std::string s = std::to_string(model.extractor.input_dim());
  for (const auto& L : model.extractor.layers) s += "->" + std::to_string(L.out_dim());
  return s;
}

template <Binary T>
bool is_default_desk_model(const StudentModel<T>& model) {
  return model.extractor.layers.size() == 1 && model.extractor.input_dim() == 32 && model.n() == 16 &&
         model.m() == 10;
}

template <class F>
decltype(auto) with_model(const AnyModel& any, F&& f) {
  return std::visit(std::forward<F>(f), any);
}

template <Binary T>
int attack_impl(const ExperimentConfig& cfg, const StudentModel<T>& model, std::ostream& os) {
  auto victim = std::make_shared<const StudentModel<T>>(model);
  FaultSession<T> session(victim);
  ExtractionConfig ec{cfg.seed, cfg.epsilon, cfg.max_tries, cfg.retry_limit};
  auto report = extract_last_layer<T>(session, model.extractor, model.n(), model.m(), ec, &model.student);

  StudentModel<T> recovered{model.extractor, report.recovered};
  const auto dir = out_dir(cfg);
  write_file(recovered_path(cfg), save_model(recovered));
  write_file(dir / "report.csv", to_csv_string([&](std::ostream& s) { write_recovery_csv(s, report); }));

  const double tol = recovery_tolerance<T>();
  const double worst = std::max(*report.max_weight_error, *report.max_bias_error);
  os << "precision:        " << FloatTraits<T>::kName << " (error threshold " << to_decimal(tol) << ")\n"
     << "dimensions:       n=" << model.n() << " m=" << model.m() << '\n'
     << "max weight error: " << describe(*report.max_weight_error) << '\n'
     << "max bias error:   " << describe(*report.max_bias_error) << '\n'
     << "faults injected:  " << report.fault_count << " (m + n*m = " << report.expected_faults << ")\n"
     << "victim runs:      " << report.run_count << " (" << report.clean_runs << " clean, "
     << report.faulted_runs << " faulted; uncached 2m + 2mn = " << report.theoretical_runs << ")\n"
     << "retries:          " << report.retries << '\n'
     << "failed params:    " << report.failures << '\n'
     << "within threshold: " << (worst <= tol ? "yes" : "no") << '\n';
  log_line(cfg, "attack faults=" + std::to_string(report.fault_count) +
                    " failures=" + std::to_string(report.failures));
  return report.complete() ? 0 : 1;
}

template <Binary T>
int evaluate_impl(const ExperimentConfig& cfg, const StudentModel<T>& original,
                  const StudentModel<T>& recovered, std::ostream& os) {
  original.validate();
  recovered.validate();
  if (original.n() != recovered.n() || original.m() != recovered.m() ||
      original.extractor.input_dim() != recovered.extractor.input_dim())
    throw UsageError("original and recovered models have different dimensions");

  auto summary = summarize_precision(original.student, recovered.student);
  auto data = make_blob_dataset<T>(cfg.seed, original.extractor.input_dim(), original.m(), kDatasetSize,
                                   kTestSize, &original);
  auto curve = accuracy_curve(original, recovered, data.test, cfg.digits);

  const auto dir = out_dir(cfg);
  write_file(dir / "precision.csv", to_csv_string([&](std::ostream& s) { write_precision_csv(s, summary); }));
  write_file(dir / "accuracy.csv", to_csv_string([&](std::ostream& s) { write_accuracy_csv(s, curve); }));

  const double tol = recovery_tolerance<T>();
  bool ok = summary.max_weight_abs_error <= tol && summary.max_bias_abs_error <= tol;
  os << "precision:        " << summary.precision << '\n'
     << "max weight error: " << describe(summary.max_weight_abs_error) << '\n'
     << "max bias error:   " << describe(summary.max_bias_abs_error) << '\n'
     << "error threshold:  " << to_decimal(tol) << (ok ? " (met)" : " (EXCEEDED)") << '\n';

  const bool desk = is_default_desk_model(original);
  for (const auto& p : curve) {
    os << "digits=" << (p.digits ? std::to_string(*p.digits) : std::string("inf")) << "  acc_original="
       << to_decimal(p.accuracy_a) << "  acc_recovered=" << to_decimal(p.accuracy_b)
       << "  diff=" << to_decimal(p.diff) << "  disagreements=" << p.disagreements << '\n';
    if (!p.digits && p.disagreements != 0) {
      os << "unrounded recovered model disagrees with the original\n";
      ok = false;
    }
    if (p.digits == 2 && std::abs(p.diff) > kAccuracyDiffAtTwoDigits) {
      os << "|diff| at two digits exceeds " << to_decimal(kAccuracyDiffAtTwoDigits)
         << (desk ? "" : " (reported only: not the default desk configuration)") << '\n';
      if (desk) ok = false;
    }
  }
  log_line(cfg, std::string("evaluate ") + (ok ? "pass" : "fail"));
  return ok ? 0 : 1;
}

}  // namespace detail

template <Binary T>
StudentModel<T> synthesize(const ExperimentConfig& cfg) {
  if (cfg.dims.empty()) throw UsageError("extractor dims must not be empty");
  if (cfg.classes == 0) throw UsageError("class count m must be at least 1");
  return generate_synthetic<T>(cfg.seed, cfg.dims, cfg.dims.back(), cfg.classes,
                               Range{cfg.weight_low, cfg.weight_high});
}

inline int cmd_generate(const ExperimentConfig& cfg, std::ostream& os) {
  if (cfg.precision != 64 && cfg.precision != 32) throw UsageError("precision must be 64 or 32");
  std::string bytes;
  std::string summary;
  auto emit = [&](const auto& model) {
    bytes = save_model(model);
    summary = std::string(model.kPrecision) + " model: extractor " + detail::dims_string(model) +
              ", n=" + std::to_string(model.n()) + ", m=" + std::to_string(model.m());
  };
  if (cfg.precision == 64) emit(synthesize<double>(cfg));
  else emit(synthesize<float>(cfg));

  detail::out_dir(cfg);
  const std::string path = detail::model_path(cfg);
  detail::write_file(path, bytes);
  os << summary << "\nwrote " << path << '\n';
  detail::log_line(cfg, "generate " + path);
  return 0;
}

inline int cmd_attack(const ExperimentConfig& cfg, std::ostream& os) {
  auto any = load_any_model(detail::read_file(detail::model_path(cfg)));
  return detail::with_model(any, [&](const auto& model) {
    model.validate();
    return detail::attack_impl(cfg, model, os);
  });
}

inline int cmd_inject(const ExperimentConfig& cfg, std::ostream& os) {
  if (cfg.fault.empty()) throw UsageError("inject needs --fault");
  const FaultSpec fault = parse_fault(cfg.fault);
  auto any = load_any_model(detail::read_file(detail::model_path(cfg)));
  return detail::with_model(any, [&](const auto& model) {
    using T = typename std::decay_t<decltype(model)>::Scalar;
    model.validate();
    std::vector<T> x = cfg.input.empty() ? gaussian_sampler<T>(cfg.seed, model.extractor.input_dim())()
                                         : parse_input<T>(cfg.input);
    auto clean = forward<T>(model, x);
    auto faulted = forward<T>(model, x, fault);
    os << "fault: " << to_string(fault) << '\n';
    os << "j,clean,faulted\n";
    for (std::size_t j = 0; j < clean.size(); ++j)
      os << j << ',' << describe(clean[j]) << ',' << describe(faulted[j]) << '\n';
    return 0;
  });
}

inline int cmd_evaluate(const ExperimentConfig& cfg, std::ostream& os) {
  auto original = load_any_model(detail::read_file(detail::model_path(cfg)));
  auto recovered = load_any_model(detail::read_file(detail::recovered_path(cfg)));
  if (original.index() != recovered.index())
    throw UsageError("original and recovered models use different precisions");
  return detail::with_model(original, [&](const auto& a) {
    using M = std::decay_t<decltype(a)>;
    return detail::evaluate_impl(cfg, a, std::get<M>(recovered), os);
  });
}

inline int cmd_all(const ExperimentConfig& cfg, std::ostream& os) {
  ExperimentConfig c = cfg;
  c.model = detail::model_path(cfg);
  c.recovered = detail::recovered_path(cfg);
  if (int rc = cmd_generate(c, os)) return rc;
  int rc = cmd_attack(c, os);
  int rc_eval = cmd_evaluate(c, os);
  return rc ? rc : rc_eval;
}

}  // namespace sniff
