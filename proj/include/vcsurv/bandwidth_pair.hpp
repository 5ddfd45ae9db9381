#pragma once

namespace vcsurv {

/// Smoothing bandwidths: h1 for event-time distance, h2 for observation-time distance.
struct BandwidthPair {
  double h1 = 0.0;
  double h2 = 0.0;

  [[nodiscard]] double max() const noexcept { return h1 > h2 ? h1 : h2; }
  /// Throws ErrorCode::invalid_bandwidth unless both are finite and positive.
  void validate() const;

  friend bool operator==(const BandwidthPair&, const BandwidthPair&) = default;
};

}  // namespace vcsurv
