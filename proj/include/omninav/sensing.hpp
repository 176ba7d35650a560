#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "omninav/core.hpp"

namespace omninav::sensing {

/// The three sparse base lasers. Sector i covers centers[i] +/- fov_per_laser/2.
struct BaseLaserConfig {
  std::array<double, 3> centers{0.0, deg2rad(90.0), deg2rad(-90.0)};
  double fov_per_laser = deg2rad(60.0);
  int points_per_laser = 15;
  double range_min = 0.1;
  double range_max = 3.0;
  double mount_height = 0.1;

  double beam_increment() const { return fov_per_laser / (points_per_laser - 1); }
  /// Throws std::invalid_argument when sectors overlap or point count < 2.
  void validate() const;
};

/// Horizontal slice of the head depth camera.
struct DepthScanConfig {
  double fov = deg2rad(58.0);
  int points = 320;
  double range_min = 0.3;
  double range_max = 4.0;
  double mount_height = 1.1;
  int slice_row = 0;

  void validate() const;
};

/// Row-major depth (z along the optical axis), metres. Non-positive or non-finite = no data.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> depths;
  double horizontal_fov = deg2rad(58.0);

  double at(int col, int row) const {
    return depths[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }
};

/// Pinhole model shared by the depth camera and the simulator: focal length chosen so that
/// the outermost columns sit at +/- fov/2; column 0 is the leftmost (positive bearing).
struct PinholeColumns {
  double cx = 0.0;
  double focal = 1.0;

  PinholeColumns(int width, double fov);
  double bearing(double col) const;
  double column(double bearing) const;
};

/// One range per output bin, `width` bins spanning [-fov/2, fov/2] at uniform increment.
/// Each bin reads the nearest image column along its bearing; range = depth / cos(column
/// bearing). Throws std::out_of_range when cfg.slice_row is outside the image.
LaserScan depth_image_to_scan(const DepthImage& img, const DepthScanConfig& cfg);

/// Re-expresses each valid beam endpoint of a sensor-frame scan as bearing/range from the
/// body origin. The output keeps the input's angular grid rotated by mount_bearing; beams
/// that land outside it are dropped, collisions keep the nearer return.
LaserScan transform_scan_to_body(const LaserScan& scan, double mount_bearing,
                                 Point2 mount_offset = {});

/// Stitches body-frame base laser scans onto one grid at the first scan's increment,
/// covering the hull of all spans. Uncovered bins stay invalid.
LaserScan assemble_base_scan(std::span<const LaserScan> body_scans);

/// Fuses the sparse base scan and the dense depth scan on the depth scan's angular grid
/// extended to cover both spans. Overlaps keep the nearer return; a base beam only fills
/// bins whose centre lies within half an increment of it (both, when it sits exactly on a
/// bin boundary). Throws std::invalid_argument
/// when base.frame != Base or depth.frame != Depth.
LaserScan merge_scans(const LaserScan& base, const LaserScan& depth);

/// Bin count the merge produces for the given spans at `increment`.
std::size_t merged_bin_count(const LaserScan& base, const LaserScan& depth);

/// Fixture text format: header line "angle_min angle_max angle_increment range_min
/// range_max", then one line of whitespace-separated ranges.
void write_scan_text(std::ostream& os, const LaserScan& scan);
LaserScan read_scan_text(std::istream& is, ScanFrame frame);

}  // namespace omninav::sensing
