#include "vcsurv/errors.hpp"

#include <utility>

namespace vcsurv {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_bandwidth: return "invalid_bandwidth";
    case ErrorCode::invalid_data: return "invalid_data";
    case ErrorCode::nonfinite_moment: return "nonfinite_moment";
    case ErrorCode::sparse_region: return "sparse_region";
    case ErrorCode::no_convergence: return "no_convergence";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::singular_system: return "singular_system";
    case ErrorCode::all_points_failed: return "all_points_failed";
    case ErrorCode::config: return "config";
    case ErrorCode::degenerate_grid: return "degenerate_grid";
    case ErrorCode::split_failure: return "split_failure";
    case ErrorCode::selection_failure: return "selection_failure";
    case ErrorCode::calibration_failure: return "calibration_failure";
    case ErrorCode::study_invalid: return "study_invalid";
    case ErrorCode::ingest: return "ingest";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::string context)
    : std::runtime_error(message), code_(code), context_(std::move(context)) {}

}  // namespace vcsurv
