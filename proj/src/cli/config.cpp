#include "motionnet/cli/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace motionnet::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const std::string& expected) {
  throw std::invalid_argument("config key '" + std::string(key) + "': invalid value '" + std::string(value) +
                              "' (expected " + expected + ")");
}

std::string fmt(double v) {
  char buf[40];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, end);
}

double parse_double(std::string_view key, std::string_view v) {
  const std::string s = trim(v);
  double out = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) bad_value(key, v, "a real number");
  return out;
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  const std::string s = trim(v);
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) bad_value(key, v, "a non-negative integer");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  const std::string s = trim(v);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = v.find(',', start);
    out.push_back(trim(v.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Entry {
  std::string key;
  std::string doc;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, std::string_view)> set;
};

using RealRef = std::function<double&(Config&)>;
using SizeRef = std::function<std::size_t&(Config&)>;
using IntRef = std::function<int&(Config&)>;
using BoolRef = std::function<bool&(Config&)>;

Entry real(std::string key, std::string doc, RealRef ref) {
  return {key, std::move(doc), [ref](const Config& c) { return fmt(ref(const_cast<Config&>(c))); },
          [ref, key](Config& c, std::string_view v) { ref(c) = parse_double(key, v); }};
}

Entry size(std::string key, std::string doc, SizeRef ref) {
  return {key, std::move(doc), [ref](const Config& c) { return std::to_string(ref(const_cast<Config&>(c))); },
          [ref, key](Config& c, std::string_view v) { ref(c) = static_cast<std::size_t>(parse_uint(key, v)); }};
}

Entry integer(std::string key, std::string doc, IntRef ref) {
  return {key, std::move(doc), [ref](const Config& c) { return std::to_string(ref(const_cast<Config&>(c))); },
          [ref, key](Config& c, std::string_view v) {
            const auto u = parse_uint(key, v);
            if (u > 1000000) bad_value(key, v, "an integer up to 1000000");
            ref(c) = static_cast<int>(u);
          }};
}

Entry boolean(std::string key, std::string doc, BoolRef ref) {
  return {key, std::move(doc), [ref](const Config& c) { return ref(const_cast<Config&>(c)) ? "true" : "false"; },
          [ref, key](Config& c, std::string_view v) { ref(c) = parse_bool(key, v); }};
}

void add_category(std::vector<Entry>& e, const std::string& name, std::size_t idx) {
  const std::string p = "scenario." + name + ".";
  e.push_back(integer(p + "min_count", "minimum number of " + name + " actors",
                      [idx](Config& c) -> int& { return c.source.scenario.categories[idx].min_count; }));
  e.push_back(integer(p + "max_count", "maximum number of " + name + " actors",
                      [idx](Config& c) -> int& { return c.source.scenario.categories[idx].max_count; }));
  e.push_back(real(p + "speed_min", name + " speed lower bound (m/s)",
                   [idx](Config& c) -> double& { return c.source.scenario.categories[idx].speed_min; }));
  e.push_back(real(p + "speed_max", name + " speed upper bound (m/s)",
                   [idx](Config& c) -> double& { return c.source.scenario.categories[idx].speed_max; }));
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back({"seed", "base seed of data generation, initialisation and shuffling",
                 [](const Config& c) { return std::to_string(c.seed); },
                 [](Config& c, std::string_view v) { c.seed = parse_uint("seed", v); }});

    e.push_back(real("grid.x_min", "BEV range along x (m); reference crop is [-32, 32]",
                     [](Config& c) -> double& { return c.grid.x_min; }));
    e.push_back(real("grid.x_max", "", [](Config& c) -> double& { return c.grid.x_max; }));
    e.push_back(real("grid.y_min", "BEV range along y (m); reference crop is [-32, 32]",
                     [](Config& c) -> double& { return c.grid.y_min; }));
    e.push_back(real("grid.y_max", "", [](Config& c) -> double& { return c.grid.y_max; }));
    e.push_back(real("grid.z_min", "height range (m); reference [-3, 2]", [](Config& c) -> double& { return c.grid.z_min; }));
    e.push_back(real("grid.z_max", "", [](Config& c) -> double& { return c.grid.z_max; }));
    e.push_back(real("grid.dx", "voxel size along x (m); reference 0.25", [](Config& c) -> double& { return c.grid.dx; }));
    e.push_back(real("grid.dy", "voxel size along y (m); reference 0.25", [](Config& c) -> double& { return c.grid.dy; }));
    e.push_back(real("grid.dz", "voxel size along z (m); reference 0.4", [](Config& c) -> double& { return c.grid.dz; }));
    e.push_back({"sync", "ego-motion compensation of past sweeps: gt or none",
                 [](const Config& c) { return std::string(bev::to_string(c.sync)); },
                 [](Config& c, std::string_view v) { c.sync = bev::parse_sync_mode(trim(v)); }});

    e.push_back(integer("clip.input_frames", "sweeps per clip including the keyframe; reference 5",
                        [](Config& c) -> int& { return c.source.clip.input_frames; }));
    e.push_back(real("clip.frame_spacing", "seconds between input sweeps; reference 0.2",
                     [](Config& c) -> double& { return c.source.clip.frame_spacing; }));
    e.push_back(integer("clip.future_steps", "predicted future steps N",
                        [](Config& c) -> int& { return c.source.clip.future_steps; }));
    e.push_back(real("clip.future_step", "seconds between predicted steps",
                     [](Config& c) -> double& { return c.source.clip.future_step; }));
    e.push_back(real("clip.pair_offset", "time shift of the paired clip (s); reference 0.05",
                     [](Config& c) -> double& { return c.source.pair_offset; }));

    e.push_back(real("scenario.region", "actors are placed in [-r, r]^2 around the ego",
                     [](Config& c) -> double& { return c.source.scenario.region_half_extent; }));
    add_category(e, "vehicle", 0);
    add_category(e, "pedestrian", 1);
    add_category(e, "bicycle", 2);
    add_category(e, "others", 3);
    e.push_back(real("scenario.stationary_fraction", "probability that an actor is parked",
                     [](Config& c) -> double& { return c.source.scenario.stationary_fraction; }));
    e.push_back(real("scenario.turn_fraction", "probability of a constant-turn-rate trajectory",
                     [](Config& c) -> double& { return c.source.scenario.turn_fraction; }));
    e.push_back(real("scenario.stop_and_go_fraction", "probability of a stop-and-go trajectory",
                     [](Config& c) -> double& { return c.source.scenario.stop_and_go_fraction; }));
    e.push_back(real("scenario.yaw_rate_min", "turn rate magnitude lower bound (rad/s)",
                     [](Config& c) -> double& { return c.source.scenario.yaw_rate_min; }));
    e.push_back(real("scenario.yaw_rate_max", "turn rate magnitude upper bound (rad/s)",
                     [](Config& c) -> double& { return c.source.scenario.yaw_rate_max; }));
    e.push_back(real("scenario.ego_speed_min", "ego speed lower bound (m/s)",
                     [](Config& c) -> double& { return c.source.scenario.ego_speed_min; }));
    e.push_back(real("scenario.ego_speed_max", "ego speed upper bound (m/s)",
                     [](Config& c) -> double& { return c.source.scenario.ego_speed_max; }));
    e.push_back(real("scenario.ego_yaw_rate_max", "ego turn rate magnitude bound (rad/s)",
                     [](Config& c) -> double& { return c.source.scenario.ego_yaw_rate_max; }));
    e.push_back(integer("scenario.clutter_count", "static poles and walls per scene",
                        [](Config& c) -> int& { return c.source.scenario.clutter_count; }));
    e.push_back(real("scenario.ground_z", "ground height in the sensor frame (m)",
                     [](Config& c) -> double& { return c.source.scenario.ground_z; }));

    e.push_back(real("lidar.surface_density", "expected points per m^2 of box surface",
                     [](Config& c) -> double& { return c.source.lidar.surface_density; }));
    e.push_back(real("lidar.ground_density", "expected points per m^2 of ground",
                     [](Config& c) -> double& { return c.source.lidar.ground_density; }));
    e.push_back(real("lidar.ground_extent", "ground sampled over [-e, e]^2 (m)",
                     [](Config& c) -> double& { return c.source.lidar.ground_extent; }));
    e.push_back(real("lidar.range_scale", "range attenuation scale (m)",
                     [](Config& c) -> double& { return c.source.lidar.range_scale; }));
    e.push_back(real("lidar.max_range", "sensing range (m)", [](Config& c) -> double& { return c.source.lidar.max_range; }));
    e.push_back(real("lidar.noise_sigma", "isotropic point noise (m)",
                     [](Config& c) -> double& { return c.source.lidar.noise_sigma; }));
    e.push_back(boolean("lidar.ground", "sample the ground plane", [](Config& c) -> bool& { return c.source.lidar.ground; }));
    e.push_back(boolean("lidar.clutter", "sample static clutter", [](Config& c) -> bool& { return c.source.lidar.clutter; }));

    e.push_back(size("model.lift_channels", "width of the two-layer channel lift; reference 32",
                     [](Config& c) -> std::size_t& { return c.model.lift_channels; }));
    e.push_back({"model.widths", "channel widths of the four pyramid blocks",
                 [](const Config& c) {
                   const auto& w = c.model.widths;
                   return std::to_string(w[0]) + "," + std::to_string(w[1]) + "," + std::to_string(w[2]) + "," +
                          std::to_string(w[3]);
                 },
                 [](Config& c, std::string_view v) {
                   const auto parts = split_list(v);
                   if (parts.size() != 4) bad_value("model.widths", v, "four comma-separated integers");
                   for (std::size_t i = 0; i < 4; ++i)
                     c.model.widths[i] = static_cast<std::size_t>(parse_uint("model.widths", parts[i]));
                 }});
    e.push_back(size("model.temporal_kernel", "temporal kernel length; reference 3",
                     [](Config& c) -> std::size_t& { return c.model.temporal_kernel; }));
    e.push_back({"model.fusion", "where temporal convolutions sit: early, middle or late",
                 [](const Config& c) { return std::string(stpn::to_string(c.model.fusion)); },
                 [](Config& c, std::string_view v) { c.model.fusion = stpn::parse_fusion(trim(v)); }});
    e.push_back(size("model.head_channels", "hidden width of each output head",
                     [](Config& c) -> std::size_t& { return c.model.head_channels; }));
    e.push_back(boolean("model.state_head", "train and use the static/moving head",
                        [](Config& c) -> bool& { return c.model.state_head; }));
    e.push_back(boolean("model.relative_offset", "regress per-step increments instead of absolute displacement",
                        [](Config& c) -> bool& { return c.model.relative_offset; }));
    e.push_back(boolean("model.batch_norm", "batch normalisation after every hidden convolution",
                        [](Config& c) -> bool& { return c.model.batch_norm; }));

    e.push_back(real("loss.alpha", "spatial consistency factor; reference 15", [](Config& c) -> double& { return c.loss.alpha; }));
    e.push_back(real("loss.beta", "foreground temporal consistency factor; reference 2.5",
                     [](Config& c) -> double& { return c.loss.beta; }));
    e.push_back(real("loss.gamma", "background temporal consistency factor; reference 0.1",
                     [](Config& c) -> double& { return c.loss.gamma; }));
    e.push_back(boolean("loss.fit_class_weights", "derive class/state weights from training-set frequencies",
                        [](Config& c) -> bool& { return c.train.fit_class_weights; }));

    e.push_back(size("train.epochs", "passes over the training clips", [](Config& c) -> std::size_t& { return c.train.epochs; }));
    e.push_back(size("train.batch_size", "keyframe clips per step", [](Config& c) -> std::size_t& { return c.train.batch_size; }));
    e.push_back(real("train.lr", "Adam learning rate", [](Config& c) -> double& { return c.train.lr; }));
    e.push_back(boolean("train.mgda", "weight the three tasks by their min-norm gradient combination",
                        [](Config& c) -> bool& { return c.train.mgda; }));
    e.push_back(size("train.max_steps", "stop after this many steps (0 = no limit)",
                     [](Config& c) -> std::size_t& { return c.train.max_steps; }));
    e.push_back(boolean("train.use_pairs", "feed shifted clips for the temporal losses",
                        [](Config& c) -> bool& { return c.train.use_pairs; }));

    e.push_back(real("infer.static_threshold", "static probability above which motion is zeroed",
                     [](Config& c) -> double& { return c.inference.static_threshold; }));
    e.push_back(boolean("infer.suppress_background", "zero motion of cells classified as background",
                        [](Config& c) -> bool& { return c.inference.suppress_background; }));
    e.push_back(boolean("infer.suppress_static", "zero motion of cells estimated static",
                        [](Config& c) -> bool& { return c.inference.suppress_static; }));
    e.push_back(boolean("eval.all_steps", "average errors over every step instead of the horizon",
                        [](Config& c) -> bool& { return c.eval.all_steps; }));

    e.push_back(size("data.train_clips", "clips generated for training", [](Config& c) -> std::size_t& { return c.data.train_clips; }));
    e.push_back(size("data.val_clips", "clips generated for model selection", [](Config& c) -> std::size_t& { return c.data.val_clips; }));
    e.push_back(size("data.test_clips", "clips generated for evaluation", [](Config& c) -> std::size_t& { return c.data.test_clips; }));
    return e;
  }();
  return entries;
}

const Entry& find(std::string_view key) {
  for (const auto& e : registry())
    if (e.key == key) return e;
  throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

}  // namespace

void Config::resolve() {
  grid.validate();
  model = model_config();
  model.validate();
  if (source.clip.input_frames < 1) throw std::invalid_argument("config: clip.input_frames must be >= 1");
  if (source.clip.future_steps < 1) throw std::invalid_argument("config: clip.future_steps must be >= 1");
  if (!(source.clip.future_step > 0) || !(source.clip.frame_spacing > 0))
    throw std::invalid_argument("config: clip time steps must be positive");
  if (grid.rows() % 8 != 0 || grid.cols() % 8 != 0)
    throw std::invalid_argument("config: grid must be divisible by 8 in both directions, got " +
                                std::to_string(grid.rows()) + "x" + std::to_string(grid.cols()));
  if (train.batch_size < 1) throw std::invalid_argument("config: train.batch_size must be >= 1");
  if (loss.alpha < 0 || loss.beta < 0 || loss.gamma < 0)
    throw std::invalid_argument("config: loss factors must be non-negative");
}

stpn::StpnConfig Config::model_config() const {
  stpn::StpnConfig m = model;
  m.input_channels = grid.channels();
  m.frames = static_cast<std::size_t>(source.clip.input_frames);
  m.steps = static_cast<std::size_t>(source.clip.future_steps);
  m.step_seconds = source.clip.future_step;
  m.categories = sim::kNumCategories;
  return m;
}

pipeline::SampleOptions Config::sample_options() const {
  pipeline::SampleOptions o;
  o.grid = grid;
  o.sync = sync;
  return o;
}

std::vector<KeyInfo> config_keys() {
  std::vector<KeyInfo> out;
  for (const auto& e : registry()) out.push_back({e.key, e.doc});
  return out;
}

void set_value(Config& config, std::string_view key, std::string_view value) { find(key).set(config, value); }

std::string get_value(const Config& config, std::string_view key) { return find(key).get(config); }

Config parse_config(std::string_view text) {
  Config c;
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    try {
      set_value(c, trim(std::string_view(t).substr(0, eq)), std::string_view(t).substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  c.resolve();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const Config& config) {
  std::string out;
  for (const auto& e : registry()) {
    out += e.key + " = " + e.get(config);
    if (!e.doc.empty()) out += "  # " + e.doc;
    out += '\n';
  }
  return out;
}

void save_config(const std::filesystem::path& path, const Config& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << serialize_config(config);
}

}  // namespace motionnet::cli
