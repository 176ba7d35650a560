#include "omninav/mapgen.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "omninav/kernels.hpp"
#include "omninav/text.hpp"

namespace omninav::mapgen {

void MapGenConfig::validate() const {
  if (!(z_min < z_max)) {
    throw std::invalid_argument("mapgen: z_min must be below z_max");
  }
  if (!(resolution > 0.0)) {
    throw std::invalid_argument("mapgen: resolution must be positive");
  }
  if (denoise_min_cluster < 1 || seed_margin < 1) {
    throw std::invalid_argument("mapgen: min_cluster and seed_margin must be >= 1");
  }
}

PointCloud height_filter(const PointCloud& cloud, double z_min, double z_max) {
  PointCloud out;
  std::copy_if(cloud.points.begin(), cloud.points.end(), std::back_inserter(out.points),
               [&](const Point3& p) { return p.z >= z_min && p.z <= z_max; });
  return out;
}

OccupancyGrid rasterize(const PointCloud& cloud, double resolution, Execution exec) {
  if (cloud.empty()) {
    throw std::invalid_argument("empty cloud");
  }
  if (!(resolution > 0.0)) {
    throw std::invalid_argument("rasterize: resolution must be positive");
  }
  double min_x = cloud.points.front().x;
  double max_x = min_x;
  double min_y = cloud.points.front().y;
  double max_y = min_y;
  for (const Point3& p : cloud.points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  kernels::RasterFrame frame;
  frame.min_x = min_x;
  frame.min_y = min_y;
  frame.resolution = resolution;
  frame.width = static_cast<int>(std::floor((max_x - min_x) / resolution + 1e-9)) + 1;
  frame.height = static_cast<int>(std::floor((max_y - min_y) / resolution + 1e-9)) + 1;

  std::vector<std::uint8_t> hits(static_cast<std::size_t>(frame.width) * frame.height, 0);
  kernels::rasterize_points(cloud.points, frame, hits, exec);

  OccupancyGrid grid(frame.width, frame.height, resolution, Pose2D(min_x, min_y, 0.0));
  std::transform(hits.begin(), hits.end(), grid.cells.begin(),
                 [](std::uint8_t h) { return h ? CellState::Occupied : CellState::Free; });
  return grid;
}

namespace {

int find_root(std::vector<int>& parent, int i) {
  while (parent[static_cast<std::size_t>(i)] != i) {
    parent[static_cast<std::size_t>(i)] =
        parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
    i = parent[static_cast<std::size_t>(i)];
  }
  return i;
}

void unite(std::vector<int>& parent, int a, int b) {
  a = find_root(parent, a);
  b = find_root(parent, b);
  if (a != b) {
    parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
}

}  // namespace

OccupancyGrid denoise(const OccupancyGrid& grid, int min_cluster) {
  if (min_cluster < 1) {
    throw std::invalid_argument("denoise: min_cluster must be >= 1");
  }
  OccupancyGrid out = grid;
  if (min_cluster == 1) {
    return out;
  }
  const int w = grid.width;
  const int h = grid.height;
  std::vector<int> parent(grid.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto occupied = [&](int c, int r) {
    return grid.in_bounds(c, r) && grid.at(c, r) == CellState::Occupied;
  };
  // Single raster pass: link each cell to its already-visited 8-neighbours.
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!occupied(c, r)) {
        continue;
      }
      const int self = static_cast<int>(grid.index(c, r));
      const int prev[4][2] = {{c - 1, r}, {c - 1, r - 1}, {c, r - 1}, {c + 1, r - 1}};
      for (const auto& n : prev) {
        if (occupied(n[0], n[1])) {
          unite(parent, self, static_cast<int>(grid.index(n[0], n[1])));
        }
      }
    }
  }
  std::vector<int> size(grid.size(), 0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.cells[i] == CellState::Occupied) {
      ++size[static_cast<std::size_t>(find_root(parent, static_cast<int>(i)))];
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.cells[i] == CellState::Occupied &&
        size[static_cast<std::size_t>(find_root(parent, static_cast<int>(i)))] < min_cluster) {
      out.cells[i] = CellState::Free;
    }
  }
  return out;
}

OccupancyGrid fill_unknown(const OccupancyGrid& grid, int seed_margin) {
  if (seed_margin < 1) {
    throw std::invalid_argument("fill_unknown: seed_margin must be >= 1");
  }
  OccupancyGrid out = grid;
  const int w = grid.width;
  const int h = grid.height;
  std::deque<CellIndex> queue;
  auto visit = [&](int c, int r) {
    if (out.in_bounds(c, r) && out.at(c, r) == CellState::Free) {
      out.at(c, r) = CellState::Unknown;
      queue.push_back({c, r});
    }
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const bool border = c < seed_margin || r < seed_margin || c >= w - seed_margin ||
                          r >= h - seed_margin;
      if (border) {
        visit(c, r);
      }
    }
  }
  while (!queue.empty()) {
    const CellIndex cell = queue.front();
    queue.pop_front();
    visit(cell.col + 1, cell.row);
    visit(cell.col - 1, cell.row);
    visit(cell.col, cell.row + 1);
    visit(cell.col, cell.row - 1);
  }
  return out;
}

OccupancyGrid extract_map(const PointCloud& cloud, const MapGenConfig& cfg, MapStats* stats,
                          Execution exec) {
  cfg.validate();
  if (cloud.empty()) {
    throw std::invalid_argument("empty cloud");
  }
  const PointCloud band = height_filter(cloud, cfg.z_min, cfg.z_max);
  if (band.empty()) {
    throw std::invalid_argument("no points inside height band [" + text::format_double(cfg.z_min) +
                                ", " + text::format_double(cfg.z_max) + "]");
  }
  const OccupancyGrid raw = rasterize(band, cfg.resolution, exec);
  const OccupancyGrid clean = denoise(raw, cfg.denoise_min_cluster);
  OccupancyGrid map = fill_unknown(clean, cfg.seed_margin);
  if (stats != nullptr) {
    stats->input_points = cloud.size();
    stats->band_points = band.size();
    stats->denoised_cells = raw.count(CellState::Occupied) - clean.count(CellState::Occupied);
    stats->occupied = map.count(CellState::Occupied);
    stats->free = map.count(CellState::Free);
    stats->unknown = map.count(CellState::Unknown);
  }
  return map;
}

PointCloud read_point_cloud(std::istream& is) {
  PointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view body = text::strip_comment(line);
    if (body.empty()) {
      continue;
    }
    const auto fields = text::split_ws(body);
    if (fields.size() != 3) {
      throw std::invalid_argument("point cloud line " + std::to_string(lineno) +
                                  ": expected 'x y z'");
    }
    Point3 p;
    try {
      p = {text::parse_double(fields[0]), text::parse_double(fields[1]),
           text::parse_double(fields[2])};
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("point cloud line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw std::invalid_argument("point cloud line " + std::to_string(lineno) +
                                  ": non-finite coordinate");
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open point cloud " + path.string());
  }
  return read_point_cloud(in);
}

void write_point_cloud(std::ostream& os, const PointCloud& cloud) {
  for (const Point3& p : cloud.points) {
    os << text::format_double(p.x) << ' ' << text::format_double(p.y) << ' '
       << text::format_double(p.z) << '\n';
  }
}

}  // namespace omninav::mapgen
