#include "motionnet/sim/clip_io.hpp"

#include <cmath>

#include "motionnet/nn/binary_io.hpp"

namespace motionnet::sim {

namespace {
constexpr std::string_view kMagic = "MNCLIP01";

float checked_f32(io::ByteReader& r, const char* what) {
  const std::size_t at = r.offset();
  const float v = r.f32();
  if (!std::isfinite(v)) throw io::FormatError(std::string("clip: non-finite ") + what, at);
  return v;
}
}  // namespace

std::vector<std::uint8_t> encode_clip(const Clip& clip) {
  io::ByteWriter w;
  w.bytes(kMagic);
  w.u32(static_cast<std::uint32_t>(clip.frames.size()));
  w.u32(static_cast<std::uint32_t>(clip.actors.size()));
  w.f32(static_cast<float>(clip.future_step));
  for (const auto& f : clip.frames) {
    w.f64(f.timestamp);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) w.f32(static_cast<float>(f.ego_pose(i, j)));
    w.u32(static_cast<std::uint32_t>(f.points.size()));
    for (const auto& p : f.points) {
      w.f32(static_cast<float>(p.x()));
      w.f32(static_cast<float>(p.y()));
      w.f32(static_cast<float>(p.z()));
    }
  }
  for (const auto& a : clip.actors) {
    if (a.poses.size() != clip.frames.size())
      throw std::invalid_argument("encode_clip: actor " + std::to_string(a.id) + " pose count differs from frame count");
    w.u32(static_cast<std::uint32_t>(a.id));
    w.u8(static_cast<std::uint8_t>(a.category));
    w.f32(static_cast<float>(a.size.length));
    w.f32(static_cast<float>(a.size.width));
    w.f32(static_cast<float>(a.size.height));
    for (const auto& p : a.poses) {
      w.f32(static_cast<float>(p.x));
      w.f32(static_cast<float>(p.y));
      w.f32(static_cast<float>(p.z));
      w.f32(static_cast<float>(p.yaw));
    }
  }
  return std::move(w.buffer());
}

Clip decode_clip(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  r.expect_magic(kMagic, "clip");
  const std::uint32_t frame_count = r.u32();
  const std::uint32_t actor_count = r.u32();
  const std::size_t dt_at = r.offset();
  Clip clip;
  clip.future_step = r.f32();
  if (!(clip.future_step > 0.0)) throw io::FormatError("clip: future step must be positive", dt_at);
  if (frame_count == 0) throw io::FormatError("clip: zero frames", 8);

  int keyframes = 0;
  for (std::uint32_t i = 0; i < frame_count; ++i) {
    Frame f;
    const std::size_t ts_at = r.offset();
    f.timestamp = r.f64();
    if (!std::isfinite(f.timestamp)) throw io::FormatError("clip: non-finite timestamp", ts_at);
    if (i > 0 && !(f.timestamp > clip.frames.back().timestamp))
      throw io::FormatError("clip: timestamps must be strictly increasing", ts_at);
    if (f.timestamp == 0.0) ++keyframes;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) f.ego_pose(a, b) = checked_f32(r, "ego pose entry");
    const std::uint32_t n = r.u32();
    r.require(static_cast<std::size_t>(n) * 12, "point data");
    f.points.reserve(n);
    for (std::uint32_t k = 0; k < n; ++k) {
      const double x = checked_f32(r, "point coordinate");
      const double y = checked_f32(r, "point coordinate");
      const double z = checked_f32(r, "point coordinate");
      f.points.emplace_back(x, y, z);
    }
    clip.frames.push_back(std::move(f));
  }
  if (keyframes != 1) throw io::FormatError("clip: expected exactly one keyframe with timestamp 0", 20);

  for (std::uint32_t i = 0; i < actor_count; ++i) {
    ActorRecord a;
    a.id = static_cast<int>(r.u32());
    const std::size_t cat_at = r.offset();
    const std::uint8_t cat = r.u8();
    if (cat == 0 || cat > 4) throw io::FormatError("clip: invalid actor category " + std::to_string(cat), cat_at);
    a.category = static_cast<Category>(cat);
    a.size.length = checked_f32(r, "box size");
    a.size.width = checked_f32(r, "box size");
    a.size.height = checked_f32(r, "box size");
    if (a.size.length <= 0 || a.size.width <= 0 || a.size.height <= 0)
      throw io::FormatError("clip: box size must be positive", r.offset() - 12);
    for (std::uint32_t k = 0; k < frame_count; ++k) {
      BoxPose p;
      p.x = checked_f32(r, "box pose");
      p.y = checked_f32(r, "box pose");
      p.z = checked_f32(r, "box pose");
      p.yaw = checked_f32(r, "box pose");
      a.poses.push_back(p);
    }
    clip.actors.push_back(std::move(a));
  }
  if (r.remaining() != 0) throw io::FormatError("clip: trailing bytes", r.offset());
  return clip;
}

void save_clip(const std::filesystem::path& path, const Clip& clip) { io::write_file(path, encode_clip(clip)); }

Clip load_clip(const std::filesystem::path& path) { return decode_clip(io::read_file(path)); }

}  // namespace motionnet::sim
