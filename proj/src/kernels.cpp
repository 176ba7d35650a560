#include "omninav/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace omninav {

int parallel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace omninav

namespace omninav::kernels {

namespace {

constexpr double kCellEps = 1e-9;

int thread_id() {
#ifdef _OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

// One-dimensional lower envelope of parabolas (Felzenszwalb & Huttenlocher).
// f and d have n entries with stride `stride`; scratch holds v (n ints) and z (n+1 doubles).
void edt_1d(const double* f, double* d, int n, std::ptrdiff_t stride, std::vector<int>& v,
            std::vector<double>& z, std::vector<double>& fcopy) {
  for (int q = 0; q < n; ++q) {
    fcopy[static_cast<std::size_t>(q)] = f[q * stride];
  }
  int k = 0;
  v[0] = 0;
  z[0] = -HUGE_VAL;
  z[1] = HUGE_VAL;
  auto intersect = [&](int q, int p) {
    const double fq = fcopy[static_cast<std::size_t>(q)] + static_cast<double>(q) * q;
    const double fp = fcopy[static_cast<std::size_t>(p)] + static_cast<double>(p) * p;
    return (fq - fp) / (2.0 * (q - p));
  };
  for (int q = 1; q < n; ++q) {
    double s = intersect(q, v[static_cast<std::size_t>(k)]);
    // z[0] is -inf, so k never drops below zero.
    while (s <= z[static_cast<std::size_t>(k)]) {
      --k;
      s = intersect(q, v[static_cast<std::size_t>(k)]);
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = HUGE_VAL;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(k) + 1] < q) {
      ++k;
    }
    const int vk = v[static_cast<std::size_t>(k)];
    const double dq = static_cast<double>(q - vk);
    d[q * stride] = dq * dq + fcopy[static_cast<std::size_t>(vk)];
  }
}

void edt_columns(std::span<double> buf, int width, int height, int c0, int c1) {
  std::vector<int> v(static_cast<std::size_t>(height));
  std::vector<double> z(static_cast<std::size_t>(height) + 1);
  std::vector<double> tmp(static_cast<std::size_t>(height));
  for (int c = c0; c < c1; ++c) {
    double* col = buf.data() + c;
    edt_1d(col, col, height, width, v, z, tmp);
  }
}

void edt_rows(std::span<double> buf, int width, int r0, int r1) {
  std::vector<int> v(static_cast<std::size_t>(width));
  std::vector<double> z(static_cast<std::size_t>(width) + 1);
  std::vector<double> tmp(static_cast<std::size_t>(width));
  for (int r = r0; r < r1; ++r) {
    double* row = buf.data() + static_cast<std::ptrdiff_t>(r) * width;
    edt_1d(row, row, width, 1, v, z, tmp);
  }
}

double score_one(const Pose2D& pose, std::span<const BodyBeam> beams, const FieldView& field,
                 const BeamModel& model) {
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  const double norm = model.z_hit / (model.sigma_hit * std::sqrt(2.0 * kPi));
  const double inv_two_var = 1.0 / (2.0 * model.sigma_hit * model.sigma_hit);
  const double floor_p = model.z_rand / model.range_max;
  double total = 0.0;
  for (const BodyBeam& b : beams) {
    const double lx = b.range * b.cos_bearing;
    const double ly = b.range * b.sin_bearing;
    const double d = field.lookup(pose.x + c * lx - s * ly, pose.y + s * lx + c * ly);
    total += std::log(norm * std::exp(-d * d * inv_two_var) + floor_p);
  }
  return total;
}

}  // namespace

std::size_t RasterFrame::cell_of(double x, double y) const {
  const auto col = std::clamp(static_cast<long>(std::floor((x - min_x) / resolution + kCellEps)),
                              0L, static_cast<long>(width) - 1);
  const auto row = std::clamp(static_cast<long>(std::floor((y - min_y) / resolution + kCellEps)),
                              0L, static_cast<long>(height) - 1);
  return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
         static_cast<std::size_t>(col);
}

void rasterize_points(std::span<const Point3> points, const RasterFrame& frame,
                      std::span<std::uint8_t> out, Execution exec) {
  const std::size_t cells = static_cast<std::size_t>(frame.width) * frame.height;
  if (out.size() != cells) {
    throw std::invalid_argument("rasterize_points: output size mismatch");
  }
  const auto n = static_cast<std::ptrdiff_t>(points.size());
  if (exec == Execution::Serial) {
    for (const Point3& p : points) {
      out[frame.cell_of(p.x, p.y)] = 1;
    }
    return;
  }

  const int threads = parallel_threads();
  std::vector<std::vector<std::uint8_t>> partial(static_cast<std::size_t>(threads));
#pragma omp parallel num_threads(threads)
  {
    auto& mine = partial[static_cast<std::size_t>(thread_id())];
    mine.assign(cells, 0);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const Point3& p = points[static_cast<std::size_t>(i)];
      mine[frame.cell_of(p.x, p.y)] = 1;
    }
  }
  const auto ncells = static_cast<std::ptrdiff_t>(cells);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < ncells; ++c) {
    std::uint8_t v = out[static_cast<std::size_t>(c)];
    for (const auto& part : partial) {
      v |= part[static_cast<std::size_t>(c)];
    }
    out[static_cast<std::size_t>(c)] = v;
  }
}

void squared_distance_transform(std::span<const std::uint8_t> occupied, int width, int height,
                                std::span<double> out, Execution exec) {
  const std::size_t cells = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (occupied.size() != cells || out.size() != cells) {
    throw std::invalid_argument("squared_distance_transform: size mismatch");
  }
  for (std::size_t i = 0; i < cells; ++i) {
    out[i] = occupied[i] ? 0.0 : kFarSquared;
  }
  if (exec == Execution::Serial) {
    edt_columns(out, width, height, 0, width);
    edt_rows(out, width, 0, height);
    return;
  }
#pragma omp parallel
  {
#ifdef _OPENMP
    const int team = omp_get_num_threads();
#else
    const int team = 1;
#endif
    const int id = thread_id();
    const int c0 = static_cast<int>(static_cast<long>(width) * id / team);
    const int c1 = static_cast<int>(static_cast<long>(width) * (id + 1) / team);
    edt_columns(out, width, height, c0, c1);
#pragma omp barrier
    const int r0 = static_cast<int>(static_cast<long>(height) * id / team);
    const int r1 = static_cast<int>(static_cast<long>(height) * (id + 1) / team);
    edt_rows(out, width, r0, r1);
  }
}

double FieldView::lookup(double x, double y) const {
  const double fc = std::floor((x - origin_x) / resolution);
  const double fr = std::floor((y - origin_y) / resolution);
  if (!(fc >= 0.0) || !(fr >= 0.0) || fc >= width || fr >= height) {
    return max_distance;
  }
  return distance[static_cast<std::size_t>(fr) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(fc)];
}

void score_poses(std::span<const Pose2D> poses, std::span<const BodyBeam> beams,
                 const FieldView& field, const BeamModel& model, std::span<double> out,
                 Execution exec) {
  if (out.size() != poses.size()) {
    throw std::invalid_argument("score_poses: output size mismatch");
  }
  const auto n = static_cast<std::ptrdiff_t>(poses.size());
  if (exec == Execution::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] =
          score_one(poses[static_cast<std::size_t>(i)], beams, field, model);
    }
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        score_one(poses[static_cast<std::size_t>(i)], beams, field, model);
  }
}

}  // namespace omninav::kernels
