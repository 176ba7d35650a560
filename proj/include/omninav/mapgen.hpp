#pragma once

#include <filesystem>
#include <iosfwd>

#include "omninav/core.hpp"
#include "omninav/execution.hpp"

namespace omninav::mapgen {

struct MapGenConfig {
  double z_min = 0.05;
  double z_max = 1.2;
  double resolution = 0.05;
  int denoise_min_cluster = 3;
  int seed_margin = 1;

  void validate() const;
};

/// Points with z_min <= z <= z_max, in input order.
PointCloud height_filter(const PointCloud& cloud, double z_min, double z_max);

/// Axis-aligned occupancy raster of the cloud's (x, y) footprint. The grid spans the
/// bounding box with floor(extent / resolution) + 1 cells per axis so the outermost points
/// land in-bounds; origin is the bounding-box minimum. Throws on an empty cloud.
OccupancyGrid rasterize(const PointCloud& cloud, double resolution,
                        Execution exec = Execution::Parallel);

/// Frees every 8-connected occupied component smaller than min_cluster cells.
OccupancyGrid denoise(const OccupancyGrid& grid, int min_cluster);

/// Marks free space 4-connected to the border (without crossing occupied cells) as unknown.
/// The border band is `seed_margin` cells deep.
OccupancyGrid fill_unknown(const OccupancyGrid& grid, int seed_margin = 1);

struct MapStats {
  std::size_t input_points = 0;
  std::size_t band_points = 0;
  std::size_t occupied = 0;
  std::size_t free = 0;
  std::size_t unknown = 0;
  std::size_t denoised_cells = 0;
};

/// height_filter -> rasterize -> denoise -> fill_unknown. Throws std::invalid_argument when
/// the cloud is empty or no point survives the height band.
OccupancyGrid extract_map(const PointCloud& cloud, const MapGenConfig& cfg,
                          MapStats* stats = nullptr, Execution exec = Execution::Parallel);

/// ASCII point cloud: one "x y z" triple per line, '#' starts a comment.
PointCloud read_point_cloud(std::istream& is);
PointCloud read_point_cloud(const std::filesystem::path& path);
void write_point_cloud(std::ostream& os, const PointCloud& cloud);

}  // namespace omninav::mapgen
