#pragma once

#include <cstdint>
#include <span>

#include "omninav/core.hpp"
#include "omninav/execution.hpp"

// Data-parallel inner loops. Every kernel has one serial reference path and one OpenMP
// path selected by Execution; the two must agree bit-for-bit (see tests/unit/test_kernels.cpp
// and bench/bench_kernels.cpp).
namespace omninav::kernels {

struct RasterFrame {
  double min_x = 0.0;
  double min_y = 0.0;
  double resolution = 0.05;
  int width = 0;
  int height = 0;

  /// Cell of (x, y), clamped into the frame.
  std::size_t cell_of(double x, double y) const;
};

/// Sets out[cell] = 1 for every point's cell. `out` must hold width*height bytes and is
/// not cleared first. The parallel path rasterizes per-thread partitions and ORs them.
void rasterize_points(std::span<const Point3> points, const RasterFrame& frame,
                      std::span<std::uint8_t> out, Execution exec);

/// Exact squared Euclidean distance (in cells^2) from each cell to the nearest cell with
/// occupied != 0. Cells with no occupied cell anywhere get a value >= 1e20.
void squared_distance_transform(std::span<const std::uint8_t> occupied, int width, int height,
                                std::span<double> out, Execution exec);

inline constexpr double kFarSquared = 1e20;

/// Read-only view of a metric distance field on an axis-aligned grid.
struct FieldView {
  std::span<const double> distance;  // metres, row-major
  int width = 0;
  int height = 0;
  double resolution = 0.05;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double max_distance = 2.0;

  double lookup(double x, double y) const;
};

/// Beam in the body frame, pre-split into unit direction and range.
struct BodyBeam {
  double cos_bearing = 1.0;
  double sin_bearing = 0.0;
  double range = 0.0;
};

struct BeamModel {
  double z_hit = 0.95;
  double z_rand = 0.05;
  double sigma_hit = 0.2;
  double range_max = 4.0;
};

/// out[i] = sum over beams of log(z_hit * N(d; 0, sigma) + z_rand / range_max), where d is
/// the field distance at the beam endpoint seen from poses[i].
void score_poses(std::span<const Pose2D> poses, std::span<const BodyBeam> beams,
                 const FieldView& field, const BeamModel& model, std::span<double> out,
                 Execution exec);

}  // namespace omninav::kernels
