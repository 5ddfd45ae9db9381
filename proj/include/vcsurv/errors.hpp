#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vcsurv {

enum class ErrorCode {
  invalid_bandwidth,
  invalid_data,
  nonfinite_moment,
  sparse_region,
  no_convergence,
  insufficient_data,
  singular_system,
  all_points_failed,
  config,
  degenerate_grid,
  split_failure,
  selection_failure,
  calibration_failure,
  study_invalid,
  ingest,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type. `context` carries a
// short machine-oriented location (grid point, row/column, id ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string context = {});

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] const std::string& context() const noexcept { return context_; }

 private:
  ErrorCode code_;
  std::string context_;
};

}  // namespace vcsurv
