#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "sniff/model.hpp"

namespace sniff {

/// Raw network input x.
template <Binary T>
struct RawInput {
  std::vector<T> x;
};

/// Precomputed extractor output I(x).
template <Binary T>
struct FeatureInput {
  std::vector<T> features;
};

template <Binary T>
using VictimInput = std::variant<RawInput<T>, FeatureInput<T>>;

template <Binary T>
struct RunRecord {
  std::size_t input_id;
  std::optional<FaultSpec> fault;
  std::vector<T> output;
};

/// Victim oracle under the single-fault adversary: every query is one forward
/// pass carrying at most one fault. Queries and outputs are logged.
template <Binary T>
class FaultSession {
public:
  explicit FaultSession(std::shared_ptr<const StudentModel<T>> model) : model_(std::move(model)) {
    if (!model_) throw UsageError("fault session needs a model");
    model_->validate();
  }

  std::vector<T> run(const VictimInput<T>& input, std::span<const FaultSpec> faults) {
    if (faults.size() > 1)
      throw SessionDisciplineError("single fault adversary: " + std::to_string(faults.size()) +
                                   " faults requested in one run");
    std::optional<FaultSpec> fault;
    if (!faults.empty()) fault = faults.front();

    std::vector<T> out = std::visit(
        [&](const auto& in) {
          using In = std::decay_t<decltype(in)>;
          if constexpr (std::is_same_v<In, RawInput<T>>)
            return forward<T>(*model_, in.x, fault);
          else
            return forward_features<T>(*model_, in.features, fault);
        },
        input);

    log_.push_back({input_id(input), fault, out});
    if (fault) ++fault_count_;
    return out;
  }

  std::vector<T> run(const VictimInput<T>& input, const std::optional<FaultSpec>& fault = std::nullopt) {
    if (fault) return run(input, std::span<const FaultSpec>(&*fault, 1));
    return run(input, std::span<const FaultSpec>{});
  }

  std::size_t run_count() const { return log_.size(); }
  std::size_t fault_count() const { return fault_count_; }
  std::size_t clean_run_count() const { return log_.size() - fault_count_; }
  const std::vector<RunRecord<T>>& log() const { return log_; }
  std::size_t n() const { return model_->n(); }
  std::size_t m() const { return model_->m(); }

private:
  // Ids are assigned by first appearance of the exact input bits.
  std::size_t input_id(const VictimInput<T>& input) {
    std::vector<typename FloatTraits<T>::Bits> key;
    std::visit(
        [&](const auto& in) {
          using In = std::decay_t<decltype(in)>;
          constexpr bool raw = std::is_same_v<In, RawInput<T>>;
          key.push_back(raw ? 0 : 1);
          if constexpr (raw) {
            for (T e : in.x) key.push_back(FloatBits<T>(e).bits());
          } else {
            for (T e : in.features) key.push_back(FloatBits<T>(e).bits());
          }
        },
        input);
    auto [it, inserted] = ids_.try_emplace(std::move(key), ids_.size());
    return it->second;
  }

  std::shared_ptr<const StudentModel<T>> model_;
  std::vector<RunRecord<T>> log_;
  std::size_t fault_count_ = 0;
  std::map<std::vector<typename FloatTraits<T>::Bits>, std::size_t> ids_;
};

}  // namespace sniff
