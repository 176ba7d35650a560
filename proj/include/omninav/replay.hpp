#pragma once

#include <vector>

#include "omninav/core.hpp"
#include "omninav/execution.hpp"
#include "omninav/localization.hpp"
#include "omninav/sim.hpp"

namespace omninav::sim {

enum class ScanSource { Merged, BaseOnly, DepthOnly };

struct ReplayOptions {
  localization::MclConfig mcl;
  double init_sigma_xy = 0.5;
  double init_sigma_theta = deg2rad(20.0);
  ScanSource source = ScanSource::Merged;
  Execution exec = Execution::Parallel;
};

struct ReplaySample {
  double t = 0.0;
  Pose2D truth;
  Pose2D estimate;
  double position_error = 0.0;
  double heading_error = 0.0;
};

struct ReplayResult {
  std::vector<ReplaySample> timeline;
  std::size_t resamples = 0;

  const ReplaySample& final_sample() const { return timeline.back(); }
};

/// Runs MCL over a simulator log: the filter starts as a Gaussian around the first logged
/// true pose, predicts with the accumulated odometry and corrects at every scan row of the
/// chosen source. Throws std::invalid_argument when the log lacks states or those scans.
ReplayResult replay_localization(const std::vector<LogRecord>& log, const OccupancyGrid& map,
                                 const ReplayOptions& opts = {});

}  // namespace omninav::sim
