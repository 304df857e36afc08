#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nnmf {

enum class ErrorCode {
  io,
  parse,
  duplicate_observation,
  empty_data,
  invalid_argument,
  dimension,
  index_range,
  format,
  version,
  truncated,
  shape,
  numerical,
  training_diverged,
  all_runs_diverged,
  unsupported,
  config,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by train() when the objective stops being finite.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(int last_finite_epoch, const std::string& what)
      : Error(ErrorCode::training_diverged, what),
        last_finite_epoch_(last_finite_epoch) {}

  // 0 when the very first epoch already diverged.
  int last_finite_epoch() const noexcept { return last_finite_epoch_; }

 private:
  int last_finite_epoch_;
};

}  // namespace nnmf
