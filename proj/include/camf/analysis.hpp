#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "camf/grid.hpp"
#include "camf/image.hpp"
#include "camf/nn.hpp"
#include "camf/tasks.hpp"

namespace camf {

/// Largest H*W handled by the direct DFT when an extent is not a power of two.
inline constexpr std::size_t kDirectDftLimit = 4096;

/// Unnormalized 2-D DFT of a row-major real H x W array, DC at index 0.
/// Radix-2 FFT for power-of-two extents, direct summation otherwise.
std::vector<std::complex<double>> dft2_complex(std::span<const double> x, std::size_t height,
                                               std::size_t width);

/// Magnitudes on the H x W frequency lattice with DC moved to (H/2, W/2).
struct SpectrumMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> magnitude;
  std::string source;

  double at(std::size_t r, std::size_t c) const { return magnitude[r * width + c]; }
  double energy() const;
  /// Energy in bins whose Chebyshev distance from DC exceeds half of Nyquist.
  double high_band_energy() const;
  /// high_band_energy / energy, 0 for an all-zero map.
  double high_frequency_ratio() const;
};

std::vector<double> fftshift(std::span<const double> x, std::size_t height, std::size_t width);

SpectrumMap dft2(std::span<const double> x, std::size_t height, std::size_t width,
                 std::string source = {});

/// Spectrum of pred - target. Multi-channel images combine channels by
/// root-sum-square of their magnitudes, so energies add across channels.
SpectrumMap freq_error_map(const Image& pred, const Image& target);

enum class FeatureLayout { PixelMajor, ChannelMajor };

/// Mean over channels of the population variance over pixels. `features`
/// is [P x C] for PixelMajor and [C x P] for ChannelMajor.
double pixel_feature_variance(std::span<const Real> features, std::size_t pixels,
                              std::size_t channels, FeatureLayout layout = FeatureLayout::PixelMajor);
double pixel_feature_variance(const Tensor& features);

/// Output of the last hidden stage (the head's input) for every row.
Tensor final_hidden_features(const FieldModel& model, const Dataset& data, std::size_t chunk = 8192);

/// Grid channel as a d1 x d2 grayscale image, min-max normalized; a
/// constant grid maps to 128/255.
Image grid_image(const ModulationGrid& grid, std::size_t channel = 0);
void export_grid_image(const ModulationGrid& grid, const std::filesystem::path& path,
                       std::size_t channel = 0);
/// Min-max normalized magnitudes as a PGM.
void export_spectrum_image(const SpectrumMap& map, const std::filesystem::path& path);

/// Predictions [H*W x C] laid out as an image.
Image render_image(const Tensor& pred, std::size_t height, std::size_t width);

/// PSNR on `data` after quantize/dequantize of every parameter tensor.
/// bits == 32 is the unmodified model.
double eval_quantized(const FieldModel& model, int bits, const Dataset& data);

}  // namespace camf
