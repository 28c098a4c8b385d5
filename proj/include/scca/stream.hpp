#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "scca/common.hpp"

namespace scca {

/// One paired observation of the two views.
struct PairedSample {
  Vector x;
  Vector y;
};

/// Pull interface over a stream of paired samples. Sources are consumed
/// once; callers that need several passes open a fresh source.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::optional<PairedSample> next() = 0;
};

/// In-memory sample source.
class VectorSource final : public SampleSource {
 public:
  explicit VectorSource(std::vector<PairedSample> samples)
      : samples_(std::move(samples)) {}

  std::optional<PairedSample> next() override {
    if (pos_ >= samples_.size()) return std::nullopt;
    return samples_[pos_++];
  }

 private:
  std::vector<PairedSample> samples_;
  std::size_t pos_ = 0;
};

/// Step-size schedule: a constant theory-driven rate, or the practical
/// c / sqrt(t) decay.
class StepSchedule {
 public:
  static StepSchedule constant(double eta) {
    if (!(eta > 0.0)) throw input_error("StepSchedule: eta must be positive");
    return StepSchedule(eta, false);
  }
  static StepSchedule sqrt_decay(double c) {
    if (!(c > 0.0)) throw input_error("StepSchedule: c must be positive");
    return StepSchedule(c, true);
  }

  double at(std::int64_t t) const {
    if (t < 1) throw input_error("StepSchedule: step index must be >= 1");
    return decay_ ? value_ / std::sqrt(static_cast<double>(t)) : value_;
  }

 private:
  StepSchedule(double value, bool decay) : value_(value), decay_(decay) {}
  double value_;
  bool decay_;
};

}  // namespace scca
