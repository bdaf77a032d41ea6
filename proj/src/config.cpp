#include "camf/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace camf {
namespace {

struct ParseError : std::invalid_argument {
  ParseError(std::size_t line, const std::string& msg)
      : std::invalid_argument("line " + std::to_string(line) + ": " + msg) {}
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& v) {
  T out{};
  const char* first = v.data();
  const char* last = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) throw std::invalid_argument("expected a number, got '" + v + "'");
  return out;
}

std::size_t parse_size(const std::string& v) { return parse_number<std::size_t>(v); }
double parse_real(const std::string& v) { return parse_number<double>(v); }

double parse_positive(const std::string& v) {
  const double d = parse_real(v);
  if (!(d > 0)) throw std::invalid_argument("expected a positive number, got '" + v + "'");
  return d;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw std::invalid_argument("expected true/false, got '" + v + "'");
}

std::vector<std::size_t> parse_list(const std::string& v) {
  std::vector<std::size_t> out;
  if (v == "none" || v == "all" || v.empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_size(trim(item)));
  return out;
}

std::string format_list(const std::vector<std::size_t>& v, const char* empty) {
  if (v.empty()) return empty;
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class E>
E parse_enum(const std::string& v, const std::map<std::string, E>& names) {
  const auto it = names.find(v);
  if (it == names.end()) {
    std::string allowed;
    for (const auto& [k, _] : names) allowed += (allowed.empty() ? "" : "|") + k;
    throw std::invalid_argument("expected one of " + allowed + ", got '" + v + "'");
  }
  return it->second;
}

template <class E>
std::string enum_name(E v, const std::map<std::string, E>& names) {
  for (const auto& [k, e] : names)
    if (e == v) return k;
  return "?";
}

const std::map<std::string, TaskKind> kTasks = {
    {"signal1d", TaskKind::Signal1D},
    {"image-regression", TaskKind::ImageRegression},
    {"image-generalization", TaskKind::ImageGeneralization},
    {"synthetic-ray", TaskKind::SyntheticRay},
    {"synthetic-video-tensor", TaskKind::SyntheticVideo},
};
const std::map<std::string, CamVariant> kVariants = {
    {"none", CamVariant::None}, {"cam", CamVariant::Cam}, {"cam-n", CamVariant::CamN}};
const std::map<std::string, MlpSpec::Encoding> kEncodings = {
    {"none", MlpSpec::Encoding::None},
    {"gaussian", MlpSpec::Encoding::Gaussian},
    {"power2", MlpSpec::Encoding::PowerOfTwo}};
const std::map<std::string, CamMode> kModes = {
    {"scalar", CamMode::Scalar}, {"ray", CamMode::Ray}, {"channel", CamMode::Channel}};
const std::map<std::string, ChannelNorm> kChannelNorms = {{"plane", ChannelNorm::Plane},
                                                          {"volume", ChannelNorm::Volume}};
const std::map<std::string, bool> kHeads = {{"sigmoid", true}, {"linear", false}};

using Setter = std::function<void(TrainConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"task.kind", [](TrainConfig&, const std::string&) {}},  // handled first
      {"task.image", [](TrainConfig& c, const std::string& v) { c.image = v; }},
      {"task.samples", [](TrainConfig& c, const std::string& v) { c.samples = parse_size(v); }},
      {"task.rays", [](TrainConfig& c, const std::string& v) { c.rays = parse_size(v); }},
      {"task.frames", [](TrainConfig& c, const std::string& v) { c.frames = parse_size(v); }},
      {"task.frame_size", [](TrainConfig& c, const std::string& v) { c.frame_size = parse_size(v); }},
      {"task.iterations", [](TrainConfig& c, const std::string& v) { c.iterations = parse_size(v); }},
      {"task.batch_size", [](TrainConfig& c, const std::string& v) { c.batch_size = parse_size(v); }},
      {"task.seed", [](TrainConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>(v); }},
      {"task.bits", [](TrainConfig& c, const std::string& v) { c.bits = parse_number<int>(v); }},

      {"model.layers", [](TrainConfig& c, const std::string& v) { c.model.layers = parse_size(v); }},
      {"model.width", [](TrainConfig& c, const std::string& v) { c.model.width = parse_size(v); }},
      {"model.output", [](TrainConfig& c, const std::string& v) { c.model.sigmoid_head = parse_enum(v, kHeads); }},
      {"model.encoding", [](TrainConfig& c, const std::string& v) { c.model.encoding = parse_enum(v, kEncodings); }},
      {"model.frequencies", [](TrainConfig& c, const std::string& v) { c.model.frequencies = parse_size(v); }},
      {"model.gaussian_scale", [](TrainConfig& c, const std::string& v) { c.model.gaussian_scale = static_cast<Real>(parse_positive(v)); }},
      {"model.include_input", [](TrainConfig& c, const std::string& v) { c.model.include_input = parse_bool(v); }},
      {"model.cam", [](TrainConfig& c, const std::string& v) { c.cam = parse_enum(v, kVariants); }},
      {"model.cam_mode", [](TrainConfig& c, const std::string& v) { c.model.cam_mode = parse_enum(v, kModes); }},
      {"model.cam_layers", [](TrainConfig& c, const std::string& v) { c.model.cam_layers = parse_list(v); }},
      {"model.epsilon", [](TrainConfig& c, const std::string& v) { c.model.cam_epsilon = static_cast<Real>(parse_positive(v)); }},
      {"model.channel_norm", [](TrainConfig& c, const std::string& v) { c.model.channel_norm = parse_enum(v, kChannelNorms); }},
      {"model.selector", [](TrainConfig& c, const std::string& v) { c.model.cam_selector = parse_list(v); }},
      {"model.samples_per_ray", [](TrainConfig& c, const std::string& v) { c.model.samples_per_ray = parse_size(v); }},
      {"model.feature_shape", [](TrainConfig& c, const std::string& v) {
         const auto s = parse_list(v);
         if (s.size() != 3) throw std::invalid_argument("feature_shape needs C,H,W");
         c.model.feature_channels = s[0];
         c.model.feature_height = s[1];
         c.model.feature_width = s[2];
       }},

      {"grid.resolution", [](TrainConfig& c, const std::string& v) { c.model.grid_resolution = parse_list(v); }},
      {"grid.channels", [](TrainConfig& c, const std::string& v) { c.model.grid_channels = parse_size(v); }},

      {"optim.lr_network", [](TrainConfig& c, const std::string& v) { c.schedule.network_lr = parse_positive(v); }},
      {"optim.lr_grid", [](TrainConfig& c, const std::string& v) { c.schedule.grid_lr = parse_positive(v); }},
      {"optim.milestones", [](TrainConfig& c, const std::string& v) { c.schedule.milestones = parse_list(v); }},
      {"optim.factor", [](TrainConfig& c, const std::string& v) { c.schedule.factor = parse_positive(v); }},

      {"output.dir", [](TrainConfig& c, const std::string& v) { c.out_dir = v; }},
  };
  return table;
}

struct Entry {
  std::size_t line;
  std::string key;
  std::string value;
};

}  // namespace

const char* task_name(TaskKind t) {
  switch (t) {
    case TaskKind::Signal1D: return "signal1d";
    case TaskKind::ImageRegression: return "image-regression";
    case TaskKind::ImageGeneralization: return "image-generalization";
    case TaskKind::SyntheticRay: return "synthetic-ray";
    case TaskKind::SyntheticVideo: return "synthetic-video-tensor";
  }
  return "?";
}

const char* variant_name(CamVariant v) {
  switch (v) {
    case CamVariant::None: return "baseline";
    case CamVariant::Cam: return "cam";
    case CamVariant::CamN: return "cam-n";
  }
  return "?";
}

TrainConfig TrainConfig::defaults(TaskKind task) {
  TrainConfig c;
  c.task = task;
  MlpSpec& m = c.model;
  switch (task) {
    case TaskKind::Signal1D:
      m.input_dim = 1;
      m.output_dim = 1;
      m.layers = 4;
      m.width = 64;
      m.sigmoid_head = false;
      m.encoding = MlpSpec::Encoding::None;
      m.frequencies = 16;
      m.include_input = true;
      m.grid_resolution = {64};
      c.iterations = 1500;
      c.batch_size = 0;
      c.schedule = {1e-3, 1e-2, {}, 0.1};
      break;
    case TaskKind::ImageRegression:
    case TaskKind::ImageGeneralization:
      m.input_dim = 2;
      m.output_dim = 3;
      m.layers = 4;
      m.width = 256;
      m.sigmoid_head = true;
      m.encoding = MlpSpec::Encoding::Gaussian;
      m.frequencies = 256;
      m.gaussian_scale = 10;
      m.grid_resolution = {32, 32};
      c.image = "synthetic:natural:256";
      c.iterations = 2000;
      c.batch_size = 16384;
      c.schedule = {1e-3, 1e-2, {1000, 1500}, 0.1};
      break;
    case TaskKind::SyntheticRay:
      m.input_dim = 5;
      m.output_dim = 3;
      m.layers = 4;
      m.width = 64;
      m.sigmoid_head = true;
      m.encoding = MlpSpec::Encoding::Gaussian;
      m.frequencies = 64;
      m.gaussian_scale = 2;
      m.include_input = false;
      m.cam_mode = CamMode::Ray;
      m.cam_selector = {3, 4};
      m.grid_resolution = {3, 10};
      m.samples_per_ray = 8;
      c.iterations = 500;
      c.batch_size = 128;
      c.schedule = {1e-3, 1e-2, {}, 0.1};
      break;
    case TaskKind::SyntheticVideo:
      m.input_dim = 1;
      m.output_dim = 3 * 8 * 8;
      m.layers = 3;
      m.width = 256;
      m.sigmoid_head = true;
      m.encoding = MlpSpec::Encoding::PowerOfTwo;
      m.frequencies = 8;
      m.include_input = true;
      m.cam_mode = CamMode::Channel;
      m.grid_resolution = {8};
      m.grid_channels = 16;
      m.feature_channels = 16;
      m.feature_height = 4;
      m.feature_width = 4;
      c.iterations = 500;
      c.batch_size = 0;
      c.schedule = {1e-3, 1e-2, {}, 0.1};
      break;
  }
  return c;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
  if (iterations == 0) fail("iterations must be positive");
  if (bits != 32 && bits != 8 && bits != 6) fail("bits must be 32, 8 or 6");
  if (model.layers < 1 || model.width == 0) fail("model needs layers and width");
  schedule.validate();
  if (task == TaskKind::Signal1D && samples < 2) fail("signal1d needs at least 2 samples");
  if ((task == TaskKind::ImageRegression || task == TaskKind::ImageGeneralization) && image.empty())
    fail("image task needs task.image");
  if (task == TaskKind::SyntheticVideo && model.output_dim != 3 * frame_size * frame_size)
    fail("synthetic video head must emit 3*frame_size^2 values");
  for (std::size_t l : model.cam_layers)
    if (l + 1 >= model.layers) fail("cam_layers entry " + std::to_string(l) + " is not a hidden layer");
  if (model.grid_resolution.empty() || model.grid_resolution.size() > 2)
    fail("grid.resolution needs one or two extents");
  for (std::size_t d : model.grid_resolution)
    if (d < 2) fail("grid resolution must be at least 2");
  if (!out_dir.empty() && out_dir == image) fail("output directory and image path coincide");
}

TrainConfig TrainConfig::with_variant(CamVariant v) const {
  TrainConfig c = *this;
  c.cam = v;
  return c;
}

TrainConfig parse_config(const std::string& text) {
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::string section;
  std::istringstream is(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
    if (section.empty()) throw ParseError(lineno, "key outside of a section");
    const std::string key = section + "." + trim(line.substr(0, eq));
    if (!setters().contains(key)) throw ParseError(lineno, "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ParseError(lineno, "duplicate key '" + key + "'");
    entries.push_back({lineno, key, trim(line.substr(eq + 1))});
  }

  const auto kind = std::find_if(entries.begin(), entries.end(),
                                 [](const Entry& e) { return e.key == "task.kind"; });
  if (kind == entries.end()) throw ParseError(lineno, "missing required key 'task.kind'");
  TrainConfig c;
  try {
    c = TrainConfig::defaults(parse_enum(kind->value, kTasks));
  } catch (const std::invalid_argument& e) {
    throw ParseError(kind->line, e.what());
  }
  for (const Entry& e : entries) {
    try {
      setters().at(e.key)(c, e.value);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ParseError(e.line, e.key + ": " + ex.what());
    }
  }
  if (c.task == TaskKind::SyntheticVideo) c.model.output_dim = 3 * c.frame_size * c.frame_size;
  c.validate();
  return c;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

std::string serialize_config(const TrainConfig& c) {
  const MlpSpec& m = c.model;
  std::ostringstream os;
  os << "[task]\n"
     << "kind = " << enum_name(c.task, kTasks) << '\n';
  if (!c.image.empty()) os << "image = " << c.image << '\n';
  os << "samples = " << c.samples << '\n'
     << "rays = " << c.rays << '\n'
     << "frames = " << c.frames << '\n'
     << "frame_size = " << c.frame_size << '\n'
     << "iterations = " << c.iterations << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "seed = " << c.seed << '\n'
     << "bits = " << c.bits << "\n\n";
  os << "[model]\n"
     << "layers = " << m.layers << '\n'
     << "width = " << m.width << '\n'
     << "output = " << enum_name(m.sigmoid_head, kHeads) << '\n'
     << "encoding = " << enum_name(m.encoding, kEncodings) << '\n'
     << "frequencies = " << m.frequencies << '\n'
     << "gaussian_scale = " << format_real(m.gaussian_scale) << '\n'
     << "include_input = " << (m.include_input ? "true" : "false") << '\n'
     << "cam = " << enum_name(c.cam, kVariants) << '\n'
     << "cam_mode = " << enum_name(m.cam_mode, kModes) << '\n'
     << "cam_layers = " << format_list(m.cam_layers, "all") << '\n'
     << "epsilon = " << format_real(m.cam_epsilon) << '\n'
     << "channel_norm = " << enum_name(m.channel_norm, kChannelNorms) << '\n'
     << "selector = " << format_list(m.cam_selector, "all") << '\n'
     << "samples_per_ray = " << m.samples_per_ray << '\n';
  if (m.feature_channels)
    os << "feature_shape = " << m.feature_channels << ',' << m.feature_height << ','
       << m.feature_width << '\n';
  os << "\n[grid]\n"
     << "resolution = " << format_list(m.grid_resolution, "none") << '\n'
     << "channels = " << m.grid_channels << "\n\n";
  os << "[optim]\n"
     << "lr_network = " << format_real(c.schedule.network_lr) << '\n'
     << "lr_grid = " << format_real(c.schedule.grid_lr) << '\n'
     << "milestones = " << format_list(c.schedule.milestones, "none") << '\n'
     << "factor = " << format_real(c.schedule.factor) << '\n';
  if (!c.out_dir.empty()) os << "\n[output]\ndir = " << c.out_dir << '\n';
  return os.str();
}

}  // namespace camf
