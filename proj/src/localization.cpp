#include "omninav/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace omninav::localization {

void MclConfig::validate() const {
  if (particle_count < 10) {
    throw std::invalid_argument("mcl: particle_count must be >= 10");
  }
  if (z_hit < 0.0 || z_rand < 0.0 || std::abs(z_hit + z_rand - 1.0) > 1e-9) {
    throw std::invalid_argument("mcl: z_hit + z_rand must equal 1");
  }
  if (!(sigma_hit > 0.0) || !(likelihood_max_dist > 0.0)) {
    throw std::invalid_argument("mcl: sigma_hit and likelihood_max_dist must be positive");
  }
  if (resample_threshold < 0.0 || resample_threshold > 1.0) {
    throw std::invalid_argument("mcl: resample_threshold must be in [0, 1]");
  }
  if (max_beams < 1) {
    throw std::invalid_argument("mcl: max_beams must be >= 1");
  }
}

DistanceField::DistanceField(const OccupancyGrid& grid, double max_distance, Execution exec)
    : width_(grid.width),
      height_(grid.height),
      resolution_(grid.resolution),
      origin_x_(grid.origin.x),
      origin_y_(grid.origin.y),
      max_distance_(max_distance) {
  grid.validate();
  if (grid.origin.theta != 0.0) {
    throw std::invalid_argument("distance field: rotated map origins are not supported");
  }
  if (!(max_distance > 0.0)) {
    throw std::invalid_argument("distance field: max_distance must be positive");
  }
  std::vector<std::uint8_t> occupied(grid.size());
  std::transform(grid.cells.begin(), grid.cells.end(), occupied.begin(),
                 [](CellState s) { return s == CellState::Occupied ? 1 : 0; });
  values_.resize(grid.size());
  kernels::squared_distance_transform(occupied, width_, height_, values_, exec);
  for (double& v : values_) {
    v = std::min(std::sqrt(v) * resolution_, max_distance_);
  }
}

kernels::FieldView DistanceField::view() const {
  return {values_, width_, height_, resolution_, origin_x_, origin_y_, max_distance_};
}

DistanceField distance_field(const OccupancyGrid& grid, double max_dist, Execution exec) {
  return DistanceField(grid, max_dist, exec);
}

ParticleSet init_uniform(const OccupancyGrid& grid, const MclConfig& cfg, Rng& rng,
                         const std::optional<Region>& region) {
  std::vector<CellIndex> eligible;
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      if (grid.at(c, r) != CellState::Free) {
        continue;
      }
      if (region) {
        const Point2 p = cell_center(grid, {c, r});
        if (p.x < region->min_x || p.x > region->max_x || p.y < region->min_y ||
            p.y > region->max_y) {
          continue;
        }
      }
      eligible.push_back({c, r});
    }
  }
  if (eligible.empty()) {
    throw std::invalid_argument("init_uniform: no free cells to sample from");
  }
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n = static_cast<std::size_t>(cfg.particle_count);
  ParticleSet ps(n);
  for (Particle& p : ps) {
    const CellIndex cell = eligible[pick(rng)];
    const Point2 local{(cell.col + unit(rng)) * grid.resolution,
                       (cell.row + unit(rng)) * grid.resolution};
    const Point2 world = grid.origin.transform(local);
    p.pose = Pose2D(world.x, world.y, kPi - kTwoPi * unit(rng));
    p.weight = 1.0 / static_cast<double>(n);
  }
  return ps;
}

ParticleSet init_gaussian(const Pose2D& mean, double sigma_xy, double sigma_theta,
                          const MclConfig& cfg, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto n = static_cast<std::size_t>(cfg.particle_count);
  ParticleSet ps(n);
  for (Particle& p : ps) {
    const double dx = sigma_xy * gauss(rng);
    const double dy = sigma_xy * gauss(rng);
    const double dt = sigma_theta * gauss(rng);
    p.pose = Pose2D(mean.x + dx, mean.y + dy, mean.theta + dt);
    p.weight = 1.0 / static_cast<double>(n);
  }
  return ps;
}

void motion_update(ParticleSet& ps, const Pose2D& odom_delta, const OdometryNoise& noise,
                   Rng& rng) {
  const double trans = std::hypot(odom_delta.x, odom_delta.y);
  const double rot = std::abs(odom_delta.theta);
  const double sigma_rot = noise.rot_from_rot * rot + noise.rot_from_trans * trans;
  const double sigma_trans = noise.trans_from_trans * trans + noise.trans_from_rot * rot;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Particle& p : ps) {
    Pose2D noisy;
    noisy.x = odom_delta.x + sigma_trans * gauss(rng);
    noisy.y = odom_delta.y + sigma_trans * gauss(rng);
    noisy.theta = odom_delta.theta + sigma_rot * gauss(rng);
    p.pose = p.pose.compose(noisy);
  }
}

std::vector<kernels::BodyBeam> select_beams(const LaserScan& scan, int max_beams) {
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    if (scan.ranges[i] >= 0.0) {
      valid.push_back(i);
    }
  }
  std::vector<kernels::BodyBeam> beams;
  if (valid.empty() || max_beams < 1) {
    return beams;
  }
  const std::size_t cap = static_cast<std::size_t>(max_beams);
  const std::size_t stride = (valid.size() + cap - 1) / cap;
  for (std::size_t k = 0; k < valid.size(); k += stride) {
    const std::size_t i = valid[k];
    const double a = scan.angle_min + static_cast<double>(i) * scan.angle_increment;
    beams.push_back({std::cos(a), std::sin(a), scan.ranges[i]});
  }
  return beams;
}

MeasurementResult measurement_update(ParticleSet& ps, const LaserScan& scan,
                                     const DistanceField& field, const MclConfig& cfg,
                                     Execution exec) {
  MeasurementResult result;
  const auto beams = select_beams(scan, cfg.max_beams);
  result.beams_used = beams.size();
  if (beams.empty() || ps.empty()) {
    return result;
  }
  std::vector<Pose2D> poses(ps.size());
  std::transform(ps.begin(), ps.end(), poses.begin(), [](const Particle& p) { return p.pose; });
  std::vector<double> loglik(ps.size());
  kernels::BeamModel model{cfg.z_hit, cfg.z_rand, cfg.sigma_hit, scan.range_max};
  kernels::score_poses(poses, beams, field.view(), model, loglik, exec);

  // Serial, fixed-order normalisation keeps serial and parallel runs bit-identical.
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    loglik[i] += ps[i].weight > 0.0 ? std::log(ps[i].weight)
                                    : -std::numeric_limits<double>::infinity();
    if (loglik[i] > best) {
      best = loglik[i];
    }
  }
  if (!std::isfinite(best)) {
    for (Particle& p : ps) {
      p.weight = 1.0 / static_cast<double>(ps.size());
    }
    result.recovered = true;
    return result;
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ps[i].weight = std::exp(loglik[i] - best);
  }
  normalize_weights(ps);
  return result;
}

double effective_sample_size(const ParticleSet& ps) {
  double sum_sq = 0.0;
  for (const Particle& p : ps) {
    sum_sq += p.weight * p.weight;
  }
  return sum_sq > 0.0 ? 1.0 / sum_sq : 0.0;
}

void normalize_weights(ParticleSet& ps) {
  double total = 0.0;
  for (const Particle& p : ps) {
    total += p.weight;
  }
  if (!(total > 0.0)) {
    for (Particle& p : ps) {
      p.weight = 1.0 / static_cast<double>(ps.size());
    }
    return;
  }
  for (Particle& p : ps) {
    p.weight /= total;
  }
}

void low_variance_resample(ParticleSet& ps, Rng& rng) {
  const std::size_t n = ps.size();
  if (n == 0) {
    return;
  }
  const double step = 1.0 / static_cast<double>(n);
  std::uniform_real_distribution<double> start(0.0, step);
  const double r = start(rng);
  ParticleSet out;
  out.reserve(n);
  double cumulative = ps[0].weight;
  std::size_t i = 0;
  for (std::size_t m = 0; m < n; ++m) {
    const double u = r + static_cast<double>(m) * step;
    while (u > cumulative && i + 1 < n) {
      ++i;
      cumulative += ps[i].weight;
    }
    out.push_back({ps[i].pose, step});
  }
  ps = std::move(out);
}

bool resample(ParticleSet& ps, double threshold, Rng& rng) {
  if (ps.empty() || effective_sample_size(ps) >= threshold * static_cast<double>(ps.size())) {
    return false;
  }
  low_variance_resample(ps, rng);
  return true;
}

PoseEstimate estimate(const ParticleSet& ps) {
  PoseEstimate est;
  if (ps.empty()) {
    return est;
  }
  double total = 0.0;
  double mx = 0.0;
  double my = 0.0;
  double sin_sum = 0.0;
  double cos_sum = 0.0;
  for (const Particle& p : ps) {
    total += p.weight;
    mx += p.weight * p.pose.x;
    my += p.weight * p.pose.y;
    sin_sum += p.weight * std::sin(p.pose.theta);
    cos_sum += p.weight * std::cos(p.pose.theta);
  }
  if (!(total > 0.0)) {
    return est;
  }
  mx /= total;
  my /= total;
  est.mean = Pose2D(mx, my, std::atan2(sin_sum, cos_sum));
  for (const Particle& p : ps) {
    const Eigen::Vector3d d(p.pose.x - mx, p.pose.y - my,
                            angle_diff(p.pose.theta, est.mean.theta));
    est.covariance += (p.weight / total) * d * d.transpose();
  }
  return est;
}

MonteCarloLocalizer::MonteCarloLocalizer(const OccupancyGrid& map, MclConfig cfg, Execution exec)
    : map_(map),
      cfg_(cfg),
      exec_(exec),
      field_(map, cfg.likelihood_max_dist, exec),
      rng_(cfg.rng_seed) {
  cfg_.validate();
}

void MonteCarloLocalizer::init_gaussian(const Pose2D& mean, double sigma_xy, double sigma_theta) {
  particles_ = localization::init_gaussian(mean, sigma_xy, sigma_theta, cfg_, rng_);
}

void MonteCarloLocalizer::init_uniform(const std::optional<Region>& region) {
  particles_ = localization::init_uniform(map_, cfg_, rng_, region);
}

void MonteCarloLocalizer::predict(const Pose2D& odom_delta) {
  motion_update(particles_, odom_delta, cfg_.odom_noise, rng_);
}

MeasurementResult MonteCarloLocalizer::correct(const LaserScan& scan) {
  const MeasurementResult res = measurement_update(particles_, scan, field_, cfg_, exec_);
  if (resample(particles_, cfg_.resample_threshold, rng_)) {
    ++resamples_;
  }
  return res;
}

}  // namespace omninav::localization
