#include "omninav/map_io.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "omninav/text.hpp"

namespace omninav::map_io {

namespace {

unsigned char encode(CellState s) {
  switch (s) {
    case CellState::Occupied:
      return kOccupiedByte;
    case CellState::Free:
      return kFreeByte;
    case CellState::Unknown:
      return kUnknownByte;
  }
  return kUnknownByte;
}

CellState decode(unsigned char b) {
  switch (b) {
    case kOccupiedByte:
      return CellState::Occupied;
    case kFreeByte:
      return CellState::Free;
    case kUnknownByte:
      return CellState::Unknown;
    default:
      throw std::invalid_argument("pgm: pixel value " + std::to_string(b) +
                                  " is not one of 0/205/255");
  }
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& is) {
  std::string tok;
  int ch = 0;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) {
        return tok;
      }
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) {
    throw std::invalid_argument("pgm: truncated header");
  }
  return tok;
}

}  // namespace

void write_pgm(std::ostream& os, const OccupancyGrid& grid) {
  grid.validate();
  os << "P5\n" << grid.width << ' ' << grid.height << "\n255\n";
  std::string row(static_cast<std::size_t>(grid.width), '\0');
  for (int r = grid.height - 1; r >= 0; --r) {
    for (int c = 0; c < grid.width; ++c) {
      row[static_cast<std::size_t>(c)] = static_cast<char>(encode(grid.at(c, r)));
    }
    os.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

OccupancyGrid read_pgm(std::istream& is, double resolution, const Pose2D& origin) {
  if (header_token(is) != "P5") {
    throw std::invalid_argument("pgm: expected P5 magic");
  }
  long long w = 0;
  long long h = 0;
  long long maxval = 0;
  try {
    w = text::parse_int(header_token(is));
    h = text::parse_int(header_token(is));
    maxval = text::parse_int(header_token(is));
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("pgm: malformed header");
  }
  if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16)) {
    throw std::invalid_argument("pgm: bad dimensions");
  }
  if (maxval != 255) {
    throw std::invalid_argument("pgm: maxval must be 255");
  }
  OccupancyGrid grid(static_cast<int>(w), static_cast<int>(h), resolution, origin);
  std::string row(static_cast<std::size_t>(w), '\0');
  for (int r = grid.height - 1; r >= 0; --r) {
    if (!is.read(row.data(), static_cast<std::streamsize>(row.size()))) {
      throw std::invalid_argument("pgm: truncated pixel data");
    }
    for (int c = 0; c < grid.width; ++c) {
      grid.at(c, r) = decode(static_cast<unsigned char>(row[static_cast<std::size_t>(c)]));
    }
  }
  if (is.peek() != EOF) {
    throw std::invalid_argument("pgm: trailing bytes after pixel data");
  }
  return grid;
}

void write_metadata(std::ostream& os, const OccupancyGrid& grid) {
  using text::format_double;
  os << "resolution: " << format_double(grid.resolution) << '\n'
     << "origin: " << format_double(grid.origin.x) << ' ' << format_double(grid.origin.y) << ' '
     << format_double(grid.origin.theta) << '\n'
     << "negate: 0\n";
}

MapMetadata read_metadata(std::istream& is) {
  MapMetadata meta;
  bool have_res = false;
  bool have_origin = false;
  std::string line;
  while (std::getline(is, line)) {
    const std::string_view body = text::strip_comment(line);
    if (body.empty()) {
      continue;
    }
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) {
      throw std::invalid_argument("map metadata: expected 'key: value', got '" + line + "'");
    }
    const std::string_view key = text::trim(body.substr(0, colon));
    const std::string_view value = text::trim(body.substr(colon + 1));
    if (key == "resolution") {
      meta.resolution = text::parse_double(value);
      have_res = true;
    } else if (key == "origin") {
      const auto f = text::split_ws(value);
      if (f.size() != 3) {
        throw std::invalid_argument("map metadata: origin needs x y theta");
      }
      meta.origin = Pose2D(text::parse_double(f[0]), text::parse_double(f[1]),
                           text::parse_double(f[2]));
      have_origin = true;
    } else if (key == "negate") {
      if (text::parse_int(value) != 0) {
        throw std::invalid_argument("map metadata: only negate: 0 is supported");
      }
    } else {
      throw std::invalid_argument("map metadata: unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_res || !have_origin || !(meta.resolution > 0.0)) {
    throw std::invalid_argument("map metadata: resolution and origin are required");
  }
  return meta;
}

void write_map(const OccupancyGrid& grid, const std::filesystem::path& stem) {
  std::filesystem::path pgm = stem;
  pgm += ".pgm";
  std::filesystem::path yaml = stem;
  yaml += ".yaml";
  std::ofstream img(pgm, std::ios::binary);
  std::ofstream meta(yaml);
  if (!img || !meta) {
    throw std::runtime_error("cannot write map files at " + stem.string());
  }
  write_pgm(img, grid);
  write_metadata(meta, grid);
  if (!img || !meta) {
    throw std::runtime_error("I/O error writing map " + stem.string());
  }
}

OccupancyGrid read_map(const std::filesystem::path& stem) {
  std::filesystem::path pgm = stem;
  pgm += ".pgm";
  std::filesystem::path yaml = stem;
  yaml += ".yaml";
  std::ifstream meta_in(yaml);
  if (!meta_in) {
    throw std::runtime_error("cannot open " + yaml.string());
  }
  const MapMetadata meta = read_metadata(meta_in);
  std::ifstream img(pgm, std::ios::binary);
  if (!img) {
    throw std::runtime_error("cannot open " + pgm.string());
  }
  return read_pgm(img, meta.resolution, meta.origin);
}

}  // namespace omninav::map_io
