#include "omninav/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "omninav/text.hpp"

namespace omninav::sensing {

namespace {

// Tolerance for snapping angles that are multiples of an increment up to rounding.
constexpr double kGridEps = 1e-9;

void keep_nearer(double& slot, double r) {
  if (r < 0.0) {
    return;
  }
  slot = (slot < 0.0) ? r : std::min(slot, r);
}

std::size_t count_from_anchor(double anchor, double hi, double inc) {
  return static_cast<std::size_t>(std::max(0.0, std::ceil((hi - anchor) / inc - kGridEps))) + 1;
}

}  // namespace

void BaseLaserConfig::validate() const {
  if (points_per_laser < 2) {
    throw std::invalid_argument("base laser: points_per_laser must be >= 2");
  }
  if (!(fov_per_laser > 0.0) || !(range_max > range_min) || range_min < 0.0) {
    throw std::invalid_argument("base laser: bad fov or range limits");
  }
  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (std::size_t j = i + 1; j < centers.size(); ++j) {
      if (std::abs(angle_diff(centers[i], centers[j])) < fov_per_laser - 1e-12) {
        throw std::invalid_argument("base laser: sectors overlap");
      }
    }
  }
}

void DepthScanConfig::validate() const {
  if (!(fov > 0.0) || fov >= kPi) {
    throw std::invalid_argument("depth scan: fov must be in (0, pi)");
  }
  if (points < 2) {
    throw std::invalid_argument("depth scan: need at least 2 points");
  }
  if (!(range_max > range_min) || range_min < 0.0) {
    throw std::invalid_argument("depth scan: bad range limits");
  }
}

PinholeColumns::PinholeColumns(int width, double fov)
    : cx((width - 1) / 2.0), focal(((width - 1) / 2.0) / std::tan(fov / 2.0)) {
  if (width < 2 || !(fov > 0.0) || fov >= kPi) {
    throw std::invalid_argument("pinhole: need width >= 2 and fov in (0, pi)");
  }
}

double PinholeColumns::bearing(double col) const { return std::atan((cx - col) / focal); }
double PinholeColumns::column(double bearing) const { return cx - focal * std::tan(bearing); }

LaserScan depth_image_to_scan(const DepthImage& img, const DepthScanConfig& cfg) {
  if (img.width < 2 || img.height < 1 ||
      img.depths.size() != static_cast<std::size_t>(img.width) * img.height) {
    throw std::invalid_argument("depth image: bad dimensions");
  }
  if (cfg.slice_row < 0 || cfg.slice_row >= img.height) {
    throw std::out_of_range("depth image: slice_row " + std::to_string(cfg.slice_row) +
                            " outside image of height " + std::to_string(img.height));
  }
  const PinholeColumns cam(img.width, img.horizontal_fov);
  const double half = img.horizontal_fov / 2.0;
  const double inc = img.horizontal_fov / (img.width - 1);
  LaserScan scan = LaserScan::make_empty(-half, inc, static_cast<std::size_t>(img.width),
                                         cfg.range_min, cfg.range_max, ScanFrame::Depth);
  scan.angle_max = half;

  for (int j = 0; j < img.width; ++j) {
    const double theta = -half + j * inc;
    const int col = std::clamp(static_cast<int>(std::lround(cam.column(theta))), 0, img.width - 1);
    const double depth = img.at(col, cfg.slice_row);
    if (!std::isfinite(depth) || depth <= 0.0) {
      continue;
    }
    const double r = depth / std::cos(cam.bearing(col));
    if (r >= cfg.range_min && r <= cfg.range_max) {
      scan.ranges[static_cast<std::size_t>(j)] = r;
    }
  }
  return scan;
}

LaserScan transform_scan_to_body(const LaserScan& scan, double mount_bearing, Point2 mount_offset) {
  const double shift = std::hypot(mount_offset.x, mount_offset.y);
  LaserScan out = LaserScan::make_empty(scan.angle_min + mount_bearing, scan.angle_increment,
                                        scan.ranges.size(), std::max(0.0, scan.range_min - shift),
                                        scan.range_max + shift, scan.frame);
  const Pose2D mount(mount_offset.x, mount_offset.y, mount_bearing);
  const double inc = scan.angle_increment;
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    const double r = scan.ranges[i];
    if (r < 0.0) {
      continue;
    }
    const double a = scan.angle_min + static_cast<double>(i) * inc;
    const Point2 p = mount.transform({r * std::cos(a), r * std::sin(a)});
    const double bearing = std::atan2(p.y, p.x);
    const double rel = normalize_angle(bearing - out.angle_min);
    const long idx = std::lround(rel / inc);
    if (idx < 0 || static_cast<std::size_t>(idx) >= out.ranges.size()) {
      continue;
    }
    keep_nearer(out.ranges[static_cast<std::size_t>(idx)], std::hypot(p.x, p.y));
  }
  return out;
}

LaserScan assemble_base_scan(std::span<const LaserScan> body_scans) {
  if (body_scans.empty()) {
    throw std::invalid_argument("assemble_base_scan: no scans");
  }
  const LaserScan& first = body_scans.front();
  const double inc = first.angle_increment;
  double lo = first.angle_min;
  double hi = first.angle_max;
  double rmin = first.range_min;
  double rmax = first.range_max;
  for (const LaserScan& s : body_scans) {
    lo = std::min(lo, s.angle_min);
    hi = std::max(hi, s.angle_max);
    rmin = std::min(rmin, s.range_min);
    rmax = std::max(rmax, s.range_max);
  }
  const double k_lo = std::ceil((first.angle_min - lo) / inc - kGridEps);
  const double anchor = first.angle_min - k_lo * inc;
  LaserScan out = LaserScan::make_empty(anchor, inc, count_from_anchor(anchor, hi, inc), rmin,
                                        rmax, ScanFrame::Base);
  for (const LaserScan& s : body_scans) {
    for (std::size_t i = 0; i < s.ranges.size(); ++i) {
      if (s.ranges[i] < 0.0) {
        continue;
      }
      const double a = s.angle_min + static_cast<double>(i) * s.angle_increment;
      const long idx = std::lround((a - anchor) / inc);
      if (idx >= 0 && static_cast<std::size_t>(idx) < out.ranges.size()) {
        keep_nearer(out.ranges[static_cast<std::size_t>(idx)], s.ranges[i]);
      }
    }
  }
  return out;
}

namespace {

struct MergeGrid {
  double angle_min;
  std::size_t depth_offset;
  std::size_t count;
};

MergeGrid merge_grid(const LaserScan& base, const LaserScan& depth) {
  const double inc = depth.angle_increment;
  const double depth_max =
      depth.angle_min + static_cast<double>(depth.ranges.size() - 1) * inc;
  const double lo = std::min(base.angle_min, depth.angle_min);
  const double hi = std::max(base.angle_max, depth_max);
  const auto k_lo =
      static_cast<std::size_t>(std::max(0.0, std::ceil((depth.angle_min - lo) / inc - kGridEps)));
  const auto k_hi =
      static_cast<std::size_t>(std::max(0.0, std::ceil((hi - depth_max) / inc - kGridEps)));
  return {depth.angle_min - static_cast<double>(k_lo) * inc, k_lo,
          k_lo + depth.ranges.size() + k_hi};
}

}  // namespace

std::size_t merged_bin_count(const LaserScan& base, const LaserScan& depth) {
  return merge_grid(base, depth).count;
}

LaserScan merge_scans(const LaserScan& base, const LaserScan& depth) {
  if (base.frame != ScanFrame::Base || depth.frame != ScanFrame::Depth) {
    throw std::invalid_argument("merge_scans: expected (base, depth) frames, got (" +
                                std::string(to_string(base.frame)) + ", " +
                                std::string(to_string(depth.frame)) + ")");
  }
  if (!(depth.angle_increment > 0.0) || depth.ranges.empty()) {
    throw std::invalid_argument("merge_scans: depth scan has no bins");
  }
  const MergeGrid grid = merge_grid(base, depth);
  const double inc = depth.angle_increment;
  LaserScan out = LaserScan::make_empty(grid.angle_min, inc, grid.count,
                                        std::min(base.range_min, depth.range_min),
                                        std::max(base.range_max, depth.range_max),
                                        ScanFrame::Merged);
  std::copy(depth.ranges.begin(), depth.ranges.end(),
            out.ranges.begin() + static_cast<std::ptrdiff_t>(grid.depth_offset));
  for (std::size_t i = 0; i < base.ranges.size(); ++i) {
    if (base.ranges[i] < 0.0) {
      continue;
    }
    const double a = base.angle_min + static_cast<double>(i) * base.angle_increment;
    const double x = (a - grid.angle_min) / inc;
    // The +/- inc/2 window is closed, so a beam on a bin boundary feeds both bins.
    const long first = std::lround(std::ceil(x - 0.5 - kGridEps));
    const long last = std::lround(std::floor(x + 0.5 + kGridEps));
    for (long idx = std::max(first, 0L); idx <= last; ++idx) {
      if (static_cast<std::size_t>(idx) < out.ranges.size()) {
        keep_nearer(out.ranges[static_cast<std::size_t>(idx)], base.ranges[i]);
      }
    }
  }
  return out;
}

void write_scan_text(std::ostream& os, const LaserScan& scan) {
  using text::format_double;
  os << format_double(scan.angle_min) << ' ' << format_double(scan.angle_max) << ' '
     << format_double(scan.angle_increment) << ' ' << format_double(scan.range_min) << ' '
     << format_double(scan.range_max) << '\n';
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    if (i > 0) {
      os << ' ';
    }
    os << format_double(scan.ranges[i]);
  }
  os << '\n';
}

LaserScan read_scan_text(std::istream& is, ScanFrame frame) {
  std::string header;
  std::string body;
  if (!std::getline(is, header)) {
    throw std::invalid_argument("scan text: missing header line");
  }
  std::getline(is, body);
  const auto fields = text::split_ws(header);
  if (fields.size() != 5) {
    throw std::invalid_argument("scan text: header needs 5 fields");
  }
  LaserScan scan;
  scan.angle_min = text::parse_double(fields[0]);
  scan.angle_max = text::parse_double(fields[1]);
  scan.angle_increment = text::parse_double(fields[2]);
  scan.range_min = text::parse_double(fields[3]);
  scan.range_max = text::parse_double(fields[4]);
  scan.frame = frame;
  for (auto f : text::split_ws(body)) {
    const double r = text::parse_double(f);
    scan.ranges.push_back(r < 0.0 ? kInvalidRange : r);
  }
  scan.validate();
  return scan;
}

}  // namespace omninav::sensing
