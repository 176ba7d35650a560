#include "omninav/replay.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace omninav::sim {

namespace {

std::string_view scan_type(ScanSource source) {
  switch (source) {
    case ScanSource::Merged:
      return "scan_merged";
    case ScanSource::BaseOnly:
      return "scan_base";
    case ScanSource::DepthOnly:
      return "scan_depth";
  }
  return "";
}

ScanFrame scan_frame(ScanSource source) {
  switch (source) {
    case ScanSource::Merged:
      return ScanFrame::Merged;
    case ScanSource::BaseOnly:
      return ScanFrame::Base;
    case ScanSource::DepthOnly:
      return ScanFrame::Depth;
  }
  return ScanFrame::Merged;
}

}  // namespace

ReplayResult replay_localization(const std::vector<LogRecord>& log, const OccupancyGrid& map,
                                 const ReplayOptions& opts) {
  const std::string_view wanted = scan_type(opts.source);
  localization::MonteCarloLocalizer mcl(map, opts.mcl, opts.exec);
  ReplayResult out;
  std::optional<Pose2D> truth;
  Pose2D pending;  // odometry accumulated since the last correction
  for (const LogRecord& rec : log) {
    if (rec.type == "state") {
      Pose2D pose;
      Pose2D delta;
      decode_state(rec.payload, pose, delta);
      if (!truth) {
        mcl.init_gaussian(pose, opts.init_sigma_xy, opts.init_sigma_theta);
      } else {
        pending = pending.compose(delta);
      }
      truth = pose;
    } else if (rec.type == wanted) {
      if (!truth) {
        throw std::invalid_argument("replay: scan before the first state row");
      }
      mcl.predict(pending);
      pending = Pose2D{};
      mcl.correct(decode_scan(rec.payload, scan_frame(opts.source)));
      const Pose2D est = mcl.estimate().mean;
      out.timeline.push_back({rec.t, *truth, est, distance(est, *truth),
                              std::abs(angle_diff(est.theta, truth->theta))});
    }
  }
  if (!truth) {
    throw std::invalid_argument("replay: log has no state rows");
  }
  if (out.timeline.empty()) {
    throw std::invalid_argument("replay: log has no '" + std::string(wanted) + "' rows");
  }
  out.resamples = mcl.resample_count();
  return out;
}

}  // namespace omninav::sim
