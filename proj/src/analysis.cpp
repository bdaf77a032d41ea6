#include "camf/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "camf/optim.hpp"

namespace camf {
namespace {

using cd = std::complex<double>;

void fft_inplace(std::vector<cd>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len)
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cd w = std::polar(1.0, ang * static_cast<double>(k));
        const cd u = a[i + k], v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
  }
}

void dft_direct(std::vector<cd>& a) {
  const std::size_t n = a.size();
  std::vector<cd> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    cd acc = 0;
    for (std::size_t j = 0; j < n; ++j)
      acc += a[j] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((k * j) % n) / n);
    out[k] = acc;
  }
  a = std::move(out);
}

bool is_low_band(std::size_t r, std::size_t c, std::size_t h, std::size_t w) {
  // position relative to the shifted DC bin, as a fraction of Nyquist
  const double fy = (static_cast<double>(r) - static_cast<double>(h / 2)) / (h / 2.0);
  const double fx = (static_cast<double>(c) - static_cast<double>(w / 2)) / (w / 2.0);
  return std::max(std::abs(fy), std::abs(fx)) <= 0.5;
}

}  // namespace

std::vector<cd> dft2_complex(std::span<const double> x, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0 || x.size() != height * width) {
    throw std::invalid_argument("dft2 needs a non-empty H x W array");
  }
  const bool radix2 = std::has_single_bit(height) && std::has_single_bit(width);
  if (!radix2 && height * width > kDirectDftLimit) {
    throw std::invalid_argument("dft2: " + std::to_string(height) + "x" + std::to_string(width) +
                                " is not a power of two and exceeds the direct DFT limit");
  }
  auto transform = [&](std::vector<cd>& v) { radix2 ? fft_inplace(v) : dft_direct(v); };
  std::vector<cd> out(x.begin(), x.end());
  std::vector<cd> line(width);
  for (std::size_t r = 0; r < height; ++r) {
    std::copy_n(out.begin() + r * width, width, line.begin());
    transform(line);
    std::copy(line.begin(), line.end(), out.begin() + r * width);
  }
  line.resize(height);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t r = 0; r < height; ++r) line[r] = out[r * width + c];
    transform(line);
    for (std::size_t r = 0; r < height; ++r) out[r * width + c] = line[r];
  }
  return out;
}

std::vector<double> fftshift(std::span<const double> x, std::size_t height, std::size_t width) {
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c)
      out[((r + height / 2) % height) * width + (c + width / 2) % width] = x[r * width + c];
  return out;
}

double SpectrumMap::energy() const {
  double e = 0.0;
  for (double m : magnitude) e += m * m;
  return e;
}

double SpectrumMap::high_band_energy() const {
  double e = 0.0;
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c)
      if (!is_low_band(r, c, height, width)) e += at(r, c) * at(r, c);
  return e;
}

double SpectrumMap::high_frequency_ratio() const {
  const double total = energy();
  return total > 0.0 ? high_band_energy() / total : 0.0;
}

SpectrumMap dft2(std::span<const double> x, std::size_t height, std::size_t width,
                 std::string source) {
  const auto spec = dft2_complex(x, height, width);
  std::vector<double> mag(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) mag[i] = std::abs(spec[i]);
  return {height, width, fftshift(mag, height, width), std::move(source)};
}

SpectrumMap freq_error_map(const Image& pred, const Image& target) {
  if (pred.height != target.height || pred.width != target.width || pred.channels != target.channels) {
    throw std::invalid_argument("freq_error_map needs images of equal shape");
  }
  const std::size_t h = pred.height, w = pred.width, ch = pred.channels;
  std::vector<double> energy(h * w, 0.0);
  std::vector<double> err(h * w);
  for (std::size_t k = 0; k < ch; ++k) {
    for (std::size_t i = 0; i < h * w; ++i)
      err[i] = static_cast<double>(pred.pixels[i * ch + k]) - target.pixels[i * ch + k];
    const SpectrumMap m = dft2(err, h, w);
    for (std::size_t i = 0; i < h * w; ++i) energy[i] += m.magnitude[i] * m.magnitude[i];
  }
  for (double& e : energy) e = std::sqrt(e);
  return {h, w, std::move(energy), "error"};
}

double pixel_feature_variance(std::span<const Real> features, std::size_t pixels,
                              std::size_t channels, FeatureLayout layout) {
  if (features.size() != pixels * channels || channels == 0) {
    throw std::invalid_argument("feature array does not match pixels x channels");
  }
  if (pixels <= 1) return 0.0;
  double total = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    auto value = [&](std::size_t p) -> double {
      return layout == FeatureLayout::PixelMajor ? features[p * channels + c] : features[c * pixels + p];
    };
    double mean = 0.0;
    for (std::size_t p = 0; p < pixels; ++p) mean += value(p);
    mean /= static_cast<double>(pixels);
    double var = 0.0;
    for (std::size_t p = 0; p < pixels; ++p) var += (value(p) - mean) * (value(p) - mean);
    total += var / static_cast<double>(pixels);
  }
  return total / static_cast<double>(channels);
}

double pixel_feature_variance(const Tensor& features) {
  if (features.rank() != 2) throw std::invalid_argument("expected [pixels x channels] features");
  return pixel_feature_variance(features.data(), features.dim(0), features.dim(1));
}

Tensor final_hidden_features(const FieldModel& model, const Dataset& data, std::size_t chunk) {
  const auto& stages = model.stages();
  std::size_t head = stages.size();
  for (std::size_t i = stages.size(); i-- > 0;)
    if (std::holds_alternative<LinearLayer>(stages[i])) {
      head = i;
      break;
    }
  if (head == 0 || head == stages.size()) throw std::invalid_argument("model has no hidden stage");
  const std::size_t width = std::get<LinearLayer>(stages[head]).in_features();
  const std::size_t rows = data.rows();
  const std::size_t step = std::max<std::size_t>(1, chunk / data.group) * data.group;
  std::vector<Real> out;
  out.reserve(rows * width);
  for (std::size_t b = 0; b < rows; b += step) {
    const std::size_t e = std::min(rows, b + step);
    const auto src = data.coords.data();
    const std::size_t d = data.coords.dim(1);
    const Tensor x(Shape{e - b, d}, std::vector<Real>(src.begin() + b * d, src.begin() + e * d));
    std::vector<Tensor> capture;
    model.forward(x, {}, &capture);
    const auto h = capture[head - 1].data();
    out.insert(out.end(), h.begin(), h.end());
  }
  return Tensor(Shape{rows, width}, std::move(out));
}

Image grid_image(const ModulationGrid& grid, std::size_t channel) {
  grid.validate();
  if (grid.rank() != 2) throw std::invalid_argument("grid export needs a rank-2 grid");
  if (channel >= grid.channels) throw std::invalid_argument("grid channel out of range");
  const std::size_t d1 = grid.resolution[0], d2 = grid.resolution[1], k = grid.channels;
  const auto v = grid.values.data();
  double lo = v[channel], hi = v[channel];
  for (std::size_t i = 0; i < d1 * d2; ++i) {
    lo = std::min<double>(lo, v[i * k + channel]);
    hi = std::max<double>(hi, v[i * k + channel]);
  }
  Image img(d1, d2, 1);
  for (std::size_t i = 0; i < d1 * d2; ++i) {
    const double level = hi > lo ? std::round((v[i * k + channel] - lo) / (hi - lo) * 255.0) : 128.0;
    img.pixels[i] = static_cast<float>(level / 255.0);
  }
  return img;
}

void export_grid_image(const ModulationGrid& grid, const std::filesystem::path& path,
                       std::size_t channel) {
  write_pnm(path, grid_image(grid, channel));
}

void export_spectrum_image(const SpectrumMap& map, const std::filesystem::path& path) {
  const auto [lo, hi] = std::minmax_element(map.magnitude.begin(), map.magnitude.end());
  Image img(map.height, map.width, 1);
  for (std::size_t i = 0; i < map.magnitude.size(); ++i)
    img.pixels[i] = *hi > *lo ? static_cast<float>((map.magnitude[i] - *lo) / (*hi - *lo)) : 0.5f;
  write_pnm(path, img);
}

Image render_image(const Tensor& pred, std::size_t height, std::size_t width) {
  if (pred.rank() != 2 || pred.dim(0) != height * width) {
    throw std::invalid_argument("prediction rows do not match a " + std::to_string(height) + "x" +
                                std::to_string(width) + " image");
  }
  Image img(height, width, pred.dim(1));
  std::transform(pred.data().begin(), pred.data().end(), img.pixels.begin(),
                 [](Real v) { return static_cast<float>(v); });
  return img;
}

double eval_quantized(const FieldModel& model, int bits, const Dataset& data) {
  FieldModel copy = model;
  for (auto& p : copy.parameters()) *p.value = p.value->clone();
  quantize_model(copy, bits);
  return evaluate_psnr(copy, data);
}

}  // namespace camf
