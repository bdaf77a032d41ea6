#include "camf/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace camf {
namespace {

constexpr std::array<char, 8> kMagic = {'C', 'A', 'M', 'F', 'C', 'K', 'P', 'T'};

enum Tag : std::uint32_t { kEncoding = 1, kLinear = 2, kActivation = 3, kCam = 4 };

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  void u8(std::uint8_t v) { os_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(Real v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void size(std::size_t v) { u32(static_cast<std::uint32_t>(v)); }
  void tensor(const Tensor& t) {
    size(t.rank());
    for (std::size_t d : t.shape()) size(d);
    for (Real v : t.data()) f32(v);
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}
  std::uint8_t u8() {
    const int c = is_.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("checkpoint truncated");
    return static_cast<std::uint8_t>(c);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  Real f32() { return static_cast<Real>(std::bit_cast<float>(u32())); }
  std::size_t size() { return u32(); }
  Tensor tensor() {
    const std::size_t rank = size();
    if (rank > 8) throw std::runtime_error("checkpoint tensor rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = size();
    std::vector<Real> data(numel(shape));
    for (auto& v : data) v = f32();
    return Tensor(std::move(shape), std::move(data));
  }

 private:
  std::istream& is_;
};

void write_grid(Writer& w, const ModulationGrid& g) {
  w.size(g.rank());
  for (std::size_t d : g.resolution) w.size(d);
  w.size(g.channels);
  w.tensor(g.values);
}

ModulationGrid read_grid(Reader& r) {
  ModulationGrid g;
  const std::size_t rank = r.size();
  if (rank < 1 || rank > 2) throw std::runtime_error("checkpoint grid rank " + std::to_string(rank));
  g.resolution.resize(rank);
  for (auto& d : g.resolution) d = r.size();
  g.channels = r.size();
  g.values = r.tensor();
  g.validate();
  return g;
}

}  // namespace

void save_model(std::ostream& os, const FieldModel& model) {
  Writer w(os);
  os.write(kMagic.data(), kMagic.size());
  w.u32(kCheckpointVersion);
  w.size(model.input_dim());
  w.size(model.stages().size());
  for (const Stage& st : model.stages()) {
    if (const auto* enc = std::get_if<FourierEncoding>(&st)) {
      w.u32(kEncoding);
      w.u32(static_cast<std::uint32_t>(enc->kind));
      w.size(enc->input_dim);
      w.size(enc->frequencies);
      w.u8(enc->include_input ? 1 : 0);
      w.f32(enc->gaussian_scale);
      w.u64(enc->seed);
      w.tensor(enc->projection);
    } else if (const auto* lin = std::get_if<LinearLayer>(&st)) {
      w.u32(kLinear);
      w.tensor(lin->weight);
      w.tensor(lin->bias);
    } else if (const auto* act = std::get_if<Activation>(&st)) {
      w.u32(kActivation);
      w.u32(static_cast<std::uint32_t>(*act));
    } else if (const auto* cs = std::get_if<CamStage>(&st)) {
      const CamLayer& l = cs->layer;
      w.u32(kCam);
      w.u32(static_cast<std::uint32_t>(l.mode));
      w.u8(l.normalize ? 1 : 0);
      w.f32(l.epsilon);
      w.u32(static_cast<std::uint32_t>(l.channel_norm));
      w.size(l.selector.size());
      for (std::size_t s : l.selector) w.size(s);
      w.size(cs->samples_per_ray);
      w.size(cs->channels);
      w.size(cs->height);
      w.size(cs->width);
      write_grid(w, l.gamma);
      write_grid(w, l.beta);
    }
  }
  if (!os) throw std::runtime_error("failed writing checkpoint");
}

FieldModel load_model(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw std::runtime_error("not a camf checkpoint");
  Reader r(is);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const std::size_t input_dim = r.size();
  const std::size_t count = r.size();
  std::vector<Stage> stages;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t tag = r.u32();
    switch (tag) {
      case kEncoding: {
        FourierEncoding enc;
        const std::uint32_t kind = r.u32();
        if (kind > 1) throw std::runtime_error("unknown encoding kind in checkpoint");
        enc.kind = static_cast<EncodingKind>(kind);
        enc.input_dim = r.size();
        enc.frequencies = r.size();
        enc.include_input = r.u8() != 0;
        enc.gaussian_scale = r.f32();
        enc.seed = r.u64();
        enc.projection = r.tensor();
        stages.emplace_back(std::move(enc));
        break;
      }
      case kLinear: {
        LinearLayer lin;
        lin.weight = r.tensor();
        lin.bias = r.tensor();
        stages.emplace_back(std::move(lin));
        break;
      }
      case kActivation: {
        const std::uint32_t a = r.u32();
        if (a > 1) throw std::runtime_error("unknown activation in checkpoint");
        stages.emplace_back(static_cast<Activation>(a));
        break;
      }
      case kCam: {
        CamStage cs;
        CamLayer& l = cs.layer;
        const std::uint32_t mode = r.u32();
        if (mode > 2) throw std::runtime_error("unknown cam mode in checkpoint");
        l.mode = static_cast<CamMode>(mode);
        l.normalize = r.u8() != 0;
        l.epsilon = r.f32();
        const std::uint32_t norm = r.u32();
        if (norm > 1) throw std::runtime_error("unknown channel norm in checkpoint");
        l.channel_norm = static_cast<ChannelNorm>(norm);
        l.selector.resize(r.size());
        for (auto& s : l.selector) s = r.size();
        cs.samples_per_ray = r.size();
        cs.channels = r.size();
        cs.height = r.size();
        cs.width = r.size();
        l.gamma = read_grid(r);
        l.beta = read_grid(r);
        stages.emplace_back(std::move(cs));
        break;
      }
      default:
        throw std::runtime_error("unknown stage tag " + std::to_string(tag) + " in checkpoint");
    }
  }
  return FieldModel(input_dim, std::move(stages));
}

void save_model(const std::filesystem::path& path, const FieldModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_model(os, model);
}

FieldModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  return load_model(is);
}

}  // namespace camf
