#include "camf/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace camf {
namespace {

void skip_space_and_comments(std::istream& is) {
  while (is) {
    const int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
}

std::size_t read_header_int(std::istream& is, const std::filesystem::path& path) {
  skip_space_and_comments(is);
  long v = -1;
  is >> v;
  if (!is || v <= 0) throw std::runtime_error("malformed PNM header in " + path.string());
  return static_cast<std::size_t>(v);
}

}  // namespace

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read image " + path.string());
  char magic[2] = {};
  is.read(magic, 2);
  if (!is || magic[0] != 'P' || (magic[1] != '6' && magic[1] != '5')) {
    throw std::runtime_error(path.string() + " is not a binary PPM/PGM file");
  }
  const std::size_t channels = magic[1] == '6' ? 3 : 1;
  const std::size_t w = read_header_int(is, path);
  const std::size_t h = read_header_int(is, path);
  const std::size_t maxval = read_header_int(is, path);
  if (maxval != 255) throw std::runtime_error(path.string() + ": only 8-bit PNM is supported");
  is.get();  // single whitespace before the raster
  std::vector<unsigned char> raw(w * h * channels);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!is) throw std::runtime_error(path.string() + ": truncated raster");
  Image img(h, w, channels);
  for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = static_cast<float>(raw[i]) / 255.0f;
  return img;
}

void write_pnm(const std::filesystem::path& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument("PNM export needs 1 or 3 channels");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write image " + path.string());
  os << (img.channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const float v = std::clamp(img.pixels[i], 0.0f, 1.0f);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

Image checkerboard(std::size_t size, std::size_t cell) {
  if (cell == 0) throw std::invalid_argument("checkerboard cell must be positive");
  Image img(size, size, 3);
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c) {
      const float v = ((r / cell + c / cell) % 2) ? 1.0f : 0.0f;
      for (std::size_t ch = 0; ch < 3; ++ch) img.at(r, c, ch) = v;
    }
  return img;
}

Image band_limited_noise(std::size_t size, std::size_t max_freq, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> freq(-static_cast<int>(max_freq), static_cast<int>(max_freq));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  constexpr int kTerms = 12;
  Image img(size, size, 3);
  for (std::size_t ch = 0; ch < 3; ++ch) {
    std::vector<std::array<double, 3>> terms(kTerms);
    for (auto& t : terms) t = {double(freq(rng)), double(freq(rng)), phase(rng)};
    for (std::size_t r = 0; r < size; ++r)
      for (std::size_t c = 0; c < size; ++c) {
        double v = 0.0;
        for (const auto& t : terms)
          v += std::cos(2.0 * std::numbers::pi * (t[0] * double(r) + t[1] * double(c)) /
                            double(size) + t[2]);
        img.at(r, c, ch) = static_cast<float>(0.5 + 0.5 * v / kTerms);
      }
  }
  return img;
}

Image natural_scene(std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double n = static_cast<double>(size);
  Image img(size, size, 3);

  // sky-to-ground shading
  const double tint[3] = {0.35 + 0.3 * u(rng), 0.4 + 0.3 * u(rng), 0.45 + 0.3 * u(rng)};
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c)
      for (std::size_t ch = 0; ch < 3; ++ch)
        img.at(r, c, ch) = static_cast<float>(tint[ch] * (0.6 + 0.4 * (1.0 - r / n)) +
                                              0.1 * std::sin(3.0 * c / n + ch));

  // hard-edged ellipses and rectangles
  for (int s = 0; s < 14; ++s) {
    const double cx = u(rng) * n, cy = u(rng) * n;
    const double rx = (0.04 + 0.18 * u(rng)) * n, ry = (0.04 + 0.18 * u(rng)) * n;
    const double color[3] = {u(rng), u(rng), u(rng)};
    const bool ellipse = u(rng) < 0.6;
    for (std::size_t r = 0; r < size; ++r)
      for (std::size_t c = 0; c < size; ++c) {
        const double dx = (c - cx) / rx, dy = (r - cy) / ry;
        const bool inside = ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1 && std::abs(dy) <= 1;
        if (!inside) continue;
        const double shade = 0.75 + 0.25 * (1.0 - dy) / 2.0;
        for (std::size_t ch = 0; ch < 3; ++ch)
          img.at(r, c, ch) = static_cast<float>(color[ch] * shade);
      }
  }

  // 1/f texture
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::array<double, 4>> waves;
  for (int k = 0; k < 160; ++k) {
    const double f = 2.0 + u(rng) * (n / 4.0);
    const double theta = u(rng) * 2.0 * std::numbers::pi;
    waves.push_back({f * std::cos(theta), f * std::sin(theta), u(rng) * 2.0 * std::numbers::pi,
                     0.35 * g(rng) / f});
  }
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c) {
      double t = 0.0;
      for (const auto& w : waves)
        t += w[3] * std::cos(2.0 * std::numbers::pi * (w[0] * c + w[1] * r) / n + w[2]);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const float v = img.at(r, c, ch) + static_cast<float>(t);
        img.at(r, c, ch) = std::clamp(v, 0.0f, 1.0f);
      }
    }
  return img;
}

}  // namespace camf
