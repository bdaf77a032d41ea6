#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace camf {

/// Interleaved H x W x C image with samples in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 3;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, float fill = 0.0f)
      : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

  float& at(std::size_t r, std::size_t c, std::size_t ch) {
    return pixels[(r * width + c) * channels + ch];
  }
  float at(std::size_t r, std::size_t c, std::size_t ch) const {
    return pixels[(r * width + c) * channels + ch];
  }
};

/// Binary PPM (P6) or PGM (P5), maxval 255. Throws with the path on failure.
Image read_pnm(const std::filesystem::path& path);
/// Writes P6 for 3-channel and P5 for 1-channel images; values are clamped
/// to [0,1] and rounded to 8 bits.
void write_pnm(const std::filesystem::path& path, const Image& img);

/// Procedural test images with known spectral content.
Image checkerboard(std::size_t size, std::size_t cell);
/// Sum of random sinusoids with integer frequencies up to `max_freq` cycles
/// per image side.
Image band_limited_noise(std::size_t size, std::size_t max_freq, std::uint64_t seed);
/// Smooth shading, hard-edged shapes and 1/f texture, standing in for a
/// natural photograph.
Image natural_scene(std::size_t size, std::uint64_t seed);

}  // namespace camf
