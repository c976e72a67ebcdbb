#include "ego3d/heatmap.hpp"

#include <algorithm>
#include <cmath>

#include "ego3d/errors.hpp"

namespace ego3d {

std::string to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::joint_confidence: return "joint-confidence";
    case ChannelKind::peh_sin: return "peh-sin";
    case ChannelKind::peh_cos: return "peh-cos";
  }
  return "unknown";
}

ChannelKind channel_kind_from(const std::string& name) {
  if (name == "joint-confidence") return ChannelKind::joint_confidence;
  if (name == "peh-sin") return ChannelKind::peh_sin;
  if (name == "peh-cos") return ChannelKind::peh_cos;
  throw FormatError("unknown channel kind '" + name + "'");
}

namespace {

void check_sigma(double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("heatmap sigma must be positive");
}

}  // namespace

Heatmap joint_heatmap_gt(const Vec2& pixel, bool visible, HeatmapShape shape, double sigma) {
  check_sigma(sigma);
  Heatmap h(shape, ChannelKind::joint_confidence);
  if (!visible) return h;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int r = 0; r < shape.height; ++r) {
    for (int c = 0; c < shape.width; ++c) {
      const double dx = c - pixel.x();
      const double dy = r - pixel.y();
      h.at(r, c) = std::exp(-(dx * dx + dy * dy) * inv);
    }
  }
  return h;
}

double point_segment_distance(const Vec2& q, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (q - a).norm();
  const double t = std::clamp((q - a).dot(ab) / len2, 0.0, 1.0);
  return (q - (a + t * ab)).norm();
}

std::optional<LimbSegment2D> clip_to_grid(const LimbSegment2D& seg, HeatmapShape shape) {
  // Liang-Barsky against the pixel-edge rectangle.
  const double xmin = -0.5, ymin = -0.5;
  const double xmax = shape.width - 0.5, ymax = shape.height - 0.5;
  const Vec2 d = seg.b - seg.a;
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {seg.a.x() - xmin, xmax - seg.a.x(), seg.a.y() - ymin, ymax - seg.a.y()};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return std::nullopt;
  }
  LimbSegment2D out = seg;
  out.a = seg.a + t0 * d;
  out.b = seg.a + t1 * d;
  out.a_visible = seg.a_visible && t0 == 0.0;
  out.b_visible = seg.b_visible && t1 == 1.0;
  return out;
}

PehChannels peh_gt(const LimbSegment2D& seg, LimbAngle theta, HeatmapShape shape, double sigma) {
  check_sigma(sigma);
  PehChannels out{Heatmap(shape, ChannelKind::peh_sin), Heatmap(shape, ChannelKind::peh_cos)};
  const auto clipped = clip_to_grid(seg, shape);
  if (!clipped) return out;
  const double s = std::sin(theta.theta);
  const double c = std::cos(theta.theta);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int r = 0; r < shape.height; ++r) {
    for (int col = 0; col < shape.width; ++col) {
      const double d = point_segment_distance(Vec2(col, r), clipped->a, clipped->b);
      const double conf = std::exp(-d * d * inv);
      out.sin.at(r, col) = conf * s;
      out.cos.at(r, col) = conf * c;
    }
  }
  return out;
}

double limb_pixel_length(const LimbSegment2D& seg) {
  return std::max(1.0, std::hypot(seg.a.x() - seg.b.x(), seg.a.y() - seg.b.y()));
}

JointPeak decode_joint(const Heatmap& h) {
  JointPeak best;
  bool first = true;
  for (int r = 0; r < h.height; ++r) {
    for (int c = 0; c < h.width; ++c) {
      const double v = h.at(r, c);
      if (first || v > best.confidence) {
        best = {Vec2(c, r), v};
        first = false;
      }
    }
  }
  return best;
}

AngleEstimate decode_angle(const Heatmap& sin_h, const Heatmap& cos_h) {
  if (sin_h.height != cos_h.height || sin_h.width != cos_h.width) {
    throw DimensionError("decode_angle: sin and cos channels differ in shape");
  }
  AngleEstimate best;
  double best_norm2 = 0.0;
  for (int r = 0; r < sin_h.height; ++r) {
    for (int c = 0; c < sin_h.width; ++c) {
      const double s = sin_h.at(r, c);
      const double co = cos_h.at(r, c);
      const double n2 = s * s + co * co;
      if (n2 > best_norm2) {
        best_norm2 = n2;
        best.pixel = Vec2(c, r);
        best.theta = std::atan2(s, co);
      }
    }
  }
  best.confidence = std::sqrt(best_norm2);
  return best;
}

}  // namespace ego3d
