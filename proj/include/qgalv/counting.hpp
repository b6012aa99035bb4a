#pragma once

// Detection records from mean atom numbers. The counter is modelled as an efficiency scalar
// and each shot as an independent Poisson draw; the physics fixes only the mean.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "qgalv/error.hpp"
#include "qgalv/random.hpp"
#include "qgalv/spectra.hpp"

namespace qgalv {

struct DetectionConfig {
  double efficiency = 1.0;
  std::size_t shots = 1;  ///< per Omega point
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(efficiency >= 0 && efficiency <= 1, "detection.efficiency must be in [0, 1]");
    detail::require(shots >= 1, "detection.shots must be >= 1");
  }
};

/// Appends Poisson counts with mean efficiency * N(Omega) per shot. Point i draws from the
/// stream member_seed(seed, i).
[[nodiscard]] inline ScanResult simulate_counts(ScanResult scan, const DetectionConfig& det) {
  det.validate();
  scan.efficiency = det.efficiency;
  scan.shots = det.shots;
  scan.seed = det.seed;
  scan.counts.assign(scan.mean_atoms.size(), std::vector<std::uint64_t>(det.shots, 0));
  for (std::size_t i = 0; i < scan.mean_atoms.size(); ++i) {
    const double mean = det.efficiency * scan.mean_atoms[i];
    if (!(mean > 0)) continue;
    boost::random::mt19937_64 rng(member_seed(det.seed, i));
    boost::random::poisson_distribution<std::uint64_t, double> draw(mean);
    for (auto& c : scan.counts[i]) c = draw(rng);
  }
  return scan;
}

struct CountEstimate {
  double mean = 0;       ///< estimated N(Omega)
  double std_error = 0;  ///< NaN for a single shot
  bool flagged = false;  ///< std_error undefined
};

/// Unbiased N(Omega) estimate: sample mean of the counts divided by the efficiency.
[[nodiscard]] inline std::vector<CountEstimate> estimate_means(const ScanResult& scan) {
  if (!(scan.efficiency > 0)) throw ValidationError("estimate_means: efficiency 0 carries no information");
  detail::require(scan.counts.size() == scan.mean_atoms.size(), "estimate_means: scan has no counts");
  std::vector<CountEstimate> out(scan.counts.size());
  for (std::size_t i = 0; i < scan.counts.size(); ++i) {
    const auto& c = scan.counts[i];
    detail::require(!c.empty(), "estimate_means: need at least one shot per point");
    const auto n = static_cast<double>(c.size());
    double mean = 0;
    for (auto v : c) mean += static_cast<double>(v);
    mean /= n;
    out[i].mean = mean / scan.efficiency;
    if (c.size() == 1) {
      out[i].std_error = std::numeric_limits<double>::quiet_NaN();
      out[i].flagged = true;
      continue;
    }
    double var = 0;
    for (auto v : c) var += (static_cast<double>(v) - mean) * (static_cast<double>(v) - mean);
    var /= (n - 1);
    out[i].std_error = std::sqrt(var / n) / scan.efficiency;
  }
  return out;
}

}  // namespace qgalv
