#pragma once

#include <filesystem>
#include <iosfwd>

#include "omninav/core.hpp"

namespace omninav::map_io {

inline constexpr unsigned char kOccupiedByte = 0;
inline constexpr unsigned char kFreeByte = 255;
inline constexpr unsigned char kUnknownByte = 205;

/// Binary PGM (P5, maxval 255). The first image row is the grid's top row (largest y).
void write_pgm(std::ostream& os, const OccupancyGrid& grid);
/// Reads pixels into a grid with the given resolution/origin. Throws std::invalid_argument on
/// a malformed header or a pixel outside {0, 205, 255}.
OccupancyGrid read_pgm(std::istream& is, double resolution, const Pose2D& origin);

/// Sidecar lines: "resolution: <r>", "origin: <x> <y> <theta>", "negate: 0".
void write_metadata(std::ostream& os, const OccupancyGrid& grid);
struct MapMetadata {
  double resolution = 0.05;
  Pose2D origin;
};
MapMetadata read_metadata(std::istream& is);

/// Writes <stem>.pgm and <stem>.yaml.
void write_map(const OccupancyGrid& grid, const std::filesystem::path& stem);
OccupancyGrid read_map(const std::filesystem::path& stem);

}  // namespace omninav::map_io
