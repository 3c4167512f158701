#include "mctsteg/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mctsteg/rng.hpp"

namespace mctsteg::corpus {

namespace {

constexpr double kPi = 3.14159265358979323846;

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Zero-mean multi-octave value noise with per-octave amplitude decay.
Grid<double> value_noise(int size, Rng& rng, double base_cell, int octaves, double persistence) {
  Grid<double> out(size, size, 0.0);
  double amplitude = 1.0;
  double cell = base_cell;
  for (int o = 0; o < octaves && cell >= 1.0; ++o) {
    const int n = static_cast<int>(std::ceil(size / cell)) + 2;
    std::vector<double> lattice(static_cast<std::size_t>(n * n));
    for (double& v : lattice) v = 2.0 * rng.uniform() - 1.0;
    for (int i = 0; i < size; ++i) {
      const double y = i / cell;
      const int y0 = static_cast<int>(y);
      const double ty = smoothstep(y - y0);
      for (int j = 0; j < size; ++j) {
        const double x = j / cell;
        const int x0 = static_cast<int>(x);
        const double tx = smoothstep(x - x0);
        const auto at = [&](int a, int b) { return lattice[static_cast<std::size_t>(a * n + b)]; };
        const double top = at(y0, x0) * (1 - tx) + at(y0, x0 + 1) * tx;
        const double bot = at(y0 + 1, x0) * (1 - tx) + at(y0 + 1, x0 + 1) * tx;
        out(i, j) += amplitude * (top * (1 - ty) + bot * ty);
      }
    }
    amplitude *= persistence;
    cell /= 2.0;
  }
  return out;
}

double gaussian(Rng& rng) {
  const double u1 = std::max(rng.uniform(), 1e-300);
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

Grid<double> blur3(const Grid<double>& in, double center_weight) {
  const int n = in.width();
  Grid<double> out(n, n);
  const double side = (1.0 - center_weight) / 2.0;
  Grid<double> tmp(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      tmp(i, j) = center_weight * in(i, j) + side * (in(i, std::max(j - 1, 0)) + in(i, std::min(j + 1, n - 1)));
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out(i, j) = center_weight * tmp(i, j) + side * (tmp(std::max(i - 1, 0), j) + tmp(std::min(i + 1, n - 1), j));
    }
  }
  return out;
}

}  // namespace

PixelMatrix generate_cover(int size, std::uint64_t seed) {
  if (size < 8) throw Error(Errc::InvalidArgument, "synthetic covers need size >= 8");
  Rng rng(stream_seed(seed, 0xC0FE));
  const double s = size;

  // Illumination: tilted plane plus broad low-frequency variation.
  Grid<double> img(size, size);
  const double base = 60.0 + 120.0 * rng.uniform();
  const double gx = (rng.uniform() - 0.5) * 80.0;
  const double gy = (rng.uniform() - 0.5) * 80.0;
  const Grid<double> broad = value_noise(size, rng, s / 2.0, 2, 0.5);
  const double broad_amp = 5.0 + 20.0 * rng.uniform();
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      img(i, j) = base + gx * (j / s - 0.5) + gy * (i / s - 0.5) + broad_amp * broad(i, j);
    }
  }

  // Shaded ellipses and rectangles with soft edges.
  const int objects = 2 + static_cast<int>(rng.below(6));
  for (int o = 0; o < objects; ++o) {
    const double ci = rng.uniform() * s;
    const double cj = rng.uniform() * s;
    const double ri = (0.08 + 0.3 * rng.uniform()) * s;
    const double rj = (0.08 + 0.3 * rng.uniform()) * s;
    const double level = 20.0 + 215.0 * rng.uniform();
    const double shade = (rng.uniform() - 0.5) * 60.0;
    const double softness = 0.3 + 1.2 * rng.uniform();
    const bool ellipse = rng.uniform() < 0.5;
    const double angle = rng.uniform() * kPi;
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    for (int i = 0; i < size; ++i) {
      for (int j = 0; j < size; ++j) {
        const double u = ((i - ci) * ca + (j - cj) * sa) / ri;
        const double v = (-(i - ci) * sa + (j - cj) * ca) / rj;
        const double dist = ellipse ? std::sqrt(u * u + v * v) - 1.0 : std::max(std::abs(u), std::abs(v)) - 1.0;
        const double edge_px = dist * std::min(ri, rj);
        const double inside = 1.0 / (1.0 + std::exp(edge_px / softness));
        const double value = level + shade * u;
        img(i, j) = img(i, j) * (1.0 - inside) + value * inside;
      }
    }
  }

  // Textured regions selected by a smooth mask.
  const Grid<double> mask = value_noise(size, rng, s / 3.0, 2, 0.5);
  const Grid<double> texture = value_noise(size, rng, 1.5 + 6.0 * rng.uniform(), 5, 0.8);
  const double tex_amp = 20.0 + 60.0 * rng.uniform();
  const double mask_bias = -0.1 - 0.8 * rng.uniform();
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double m = 1.0 / (1.0 + std::exp(-8.0 * (mask(i, j) + mask_bias)));
      img(i, j) += tex_amp * m * texture(i, j);
    }
  }

  // Sensor noise (signal-dependent), optics, then quantization.
  const double read_noise = 0.02 + 0.2 * rng.uniform();
  const double shot = 0.0005 + 0.004 * rng.uniform();
  for (std::size_t k = 0; k < img.size(); ++k) {
    const double sigma = std::sqrt(read_noise * read_noise + shot * std::max(img[k], 0.0));
    img[k] += sigma * gaussian(rng);
  }
  img = blur3(img, 0.5 + 0.4 * rng.uniform());
  Grid<double> out(size, size);
  for (std::size_t k = 0; k < img.size(); ++k) out[k] = std::clamp(std::round(img[k]), 0.0, 255.0);
  return {std::move(out), Domain::Spatial};
}

}  // namespace mctsteg::corpus
