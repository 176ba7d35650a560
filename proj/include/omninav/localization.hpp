#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "omninav/core.hpp"
#include "omninav/execution.hpp"
#include "omninav/kernels.hpp"

namespace omninav::localization {

struct Particle {
  Pose2D pose;
  double weight = 0.0;
};

using ParticleSet = std::vector<Particle>;

/// Odometry noise coefficients of the sample motion model, as standard deviations:
///   sigma_rot   = rot_from_rot * |d_theta| + rot_from_trans * |d_trans|
///   sigma_trans = trans_from_trans * |d_trans| + trans_from_rot * |d_theta|
struct OdometryNoise {
  double rot_from_rot = 0.05;      // a1
  double rot_from_trans = 0.05;    // a2
  double trans_from_trans = 0.1;   // a3
  double trans_from_rot = 0.05;    // a4
};

struct MclConfig {
  int particle_count = 500;
  OdometryNoise odom_noise;
  double z_hit = 0.95;
  double z_rand = 0.05;
  double sigma_hit = 0.1;
  double likelihood_max_dist = 2.0;
  double resample_threshold = 0.5;
  int max_beams = 60;
  std::uint64_t rng_seed = 42;

  void validate() const;
};

using Rng = std::mt19937_64;

/// Nearest-occupied-cell distances (metres, clamped at max_distance) on the grid's cells.
class DistanceField {
 public:
  DistanceField(const OccupancyGrid& grid, double max_distance,
                Execution exec = Execution::Parallel);

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  double max_distance() const { return max_distance_; }
  double at(int col, int row) const {
    return values_[static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(col)];
  }
  /// Distance at a world point; max_distance outside the grid.
  double lookup(double x, double y) const { return view().lookup(x, y); }
  kernels::FieldView view() const;
  const std::vector<double>& values() const { return values_; }

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 0.05;
  double origin_x_ = 0.0;
  double origin_y_ = 0.0;
  double max_distance_ = 2.0;
  std::vector<double> values_;
};

DistanceField distance_field(const OccupancyGrid& grid, double max_dist,
                             Execution exec = Execution::Parallel);

/// Axis-aligned sampling window for init_uniform.
struct Region {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;
};

/// Uniform over free cells (optionally restricted to cells whose centre lies in `region`),
/// uniform heading, equal weights. Throws std::invalid_argument if no eligible cell exists.
ParticleSet init_uniform(const OccupancyGrid& grid, const MclConfig& cfg, Rng& rng,
                         const std::optional<Region>& region = std::nullopt);

/// Gaussian cloud around `mean` with independent x/y/theta spreads.
ParticleSet init_gaussian(const Pose2D& mean, double sigma_xy, double sigma_theta,
                          const MclConfig& cfg, Rng& rng);

/// Advances every particle by the body-frame odometry increment plus sampled noise.
void motion_update(ParticleSet& ps, const Pose2D& odom_delta, const OdometryNoise& noise,
                   Rng& rng);

struct MeasurementResult {
  std::size_t beams_used = 0;
  bool recovered = false;  // every weight vanished and the set was reweighted uniformly
};

/// Likelihood-field reweighting with the merged (or any body-frame) scan. At most
/// cfg.max_beams valid beams are used, evenly strided over the valid ones.
MeasurementResult measurement_update(ParticleSet& ps, const LaserScan& scan,
                                     const DistanceField& field, const MclConfig& cfg,
                                     Execution exec = Execution::Parallel);

/// Selects the beams measurement_update scores.
std::vector<kernels::BodyBeam> select_beams(const LaserScan& scan, int max_beams);

double effective_sample_size(const ParticleSet& ps);
void normalize_weights(ParticleSet& ps);

/// Low-variance resampling, only when ESS < threshold * N. Returns whether it ran.
bool resample(ParticleSet& ps, double threshold, Rng& rng);
/// Low-variance resampling unconditionally.
void low_variance_resample(ParticleSet& ps, Rng& rng);

struct PoseEstimate {
  Pose2D mean;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
};

/// Weighted mean (circular for theta) and weighted covariance about it.
PoseEstimate estimate(const ParticleSet& ps);

/// Stateful wrapper: owns the particles and the seeded RNG.
class MonteCarloLocalizer {
 public:
  MonteCarloLocalizer(const OccupancyGrid& map, MclConfig cfg,
                      Execution exec = Execution::Parallel);

  void init_gaussian(const Pose2D& mean, double sigma_xy, double sigma_theta);
  void init_uniform(const std::optional<Region>& region = std::nullopt);
  void predict(const Pose2D& odom_delta);
  MeasurementResult correct(const LaserScan& scan);
  PoseEstimate estimate() const { return localization::estimate(particles_); }

  const ParticleSet& particles() const { return particles_; }
  const MclConfig& config() const { return cfg_; }
  std::size_t resample_count() const { return resamples_; }

 private:
  OccupancyGrid map_;
  MclConfig cfg_;
  Execution exec_;
  DistanceField field_;
  Rng rng_;
  ParticleSet particles_;
  std::size_t resamples_ = 0;
};

}  // namespace omninav::localization
