#include "ego3d/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ego3d/errors.hpp"

namespace ego3d {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void save(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw FormatError("cannot write " + path.string());
}

}  // namespace

void write_svg_lines(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<LineSeries>& series) {
  const double W = 640, H = 420, L = 60, R = 150, T = 40, B = 50;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        first = false;
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title) << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + k * (xmax - xmin) / 4, yv = ymin + k * (ymax - ymin) / 4;
    o << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">" << xv << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << yv << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
    << ")\" text-anchor=\"middle\" font-size=\"12\">" << escape(y_label) << "</text>\n";
  for (size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < series[s].x.size(); ++i) o << px(series[s].x[i]) << ',' << py(series[s].y[i]) << ' ';
    o << "\"/>\n";
    o << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (s + 1) << "\" font-size=\"12\" fill=\"" << color << "\">"
      << escape(series[s].label) << "</text>\n";
  }
  o << "</svg>\n";
  save(path, o.str());
}

void write_svg_bars(const std::filesystem::path& path, const std::string& title, const std::string& y_label,
                    const std::vector<std::string>& labels, const std::vector<double>& values,
                    const std::vector<double>& errors) {
  const double W = 560, H = 400, L = 70, R = 20, T = 40, B = 50;
  double ymax = 1e-9;
  for (size_t i = 0; i < values.size(); ++i) {
    ymax = std::max(ymax, values[i] + (i < errors.size() ? errors[i] : 0.0));
  }
  ymax *= 1.1;
  auto py = [&](double y) { return H - B - y / ymax * (H - T - B); };
  const double slot = (W - L - R) / std::max<size_t>(1, values.size());
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title) << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
    << ")\" text-anchor=\"middle\" font-size=\"12\">" << escape(y_label) << "</text>\n";
  for (size_t i = 0; i < values.size(); ++i) {
    const double x = L + i * slot + 0.15 * slot;
    const double w = 0.7 * slot;
    o << "<rect x=\"" << x << "\" y=\"" << py(values[i]) << "\" width=\"" << w << "\" height=\""
      << (H - B) - py(values[i]) << "\" fill=\"" << kPalette[i % std::size(kPalette)] << "\"/>\n";
    if (i < errors.size() && errors[i] > 0.0) {
      const double cx = x + w / 2;
      o << "<line x1=\"" << cx << "\" y1=\"" << py(values[i] - errors[i]) << "\" x2=\"" << cx << "\" y2=\""
        << py(values[i] + errors[i]) << "\" stroke=\"black\"/>\n";
    }
    o << "<text x=\"" << x + w / 2 << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << escape(labels[i]) << "</text>\n";
    o << "<text x=\"" << x + w / 2 << "\" y=\"" << py(values[i]) - 4 << "\" text-anchor=\"middle\" font-size=\"11\">"
      << std::round(values[i] * 100) / 100 << "</text>\n";
  }
  o << "</svg>\n";
  save(path, o.str());
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary);
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  for (float v : image.pixels) {
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f))));
  }
  if (!out) throw FormatError("cannot write " + path.string());
}

RgbImage colorize(const Heatmap& h, int scale) {
  RgbImage img(h.width * scale, h.height * scale);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const double v = h.at(r / scale, c / scale);
      if (h.kind == ChannelKind::peh_sin) {
        img.at(r, c, 0) = static_cast<float>(std::max(0.0, v));
        img.at(r, c, 2) = static_cast<float>(std::max(0.0, -v));
      } else {
        for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

RgbImage colorize_peh(const Heatmap& sin_h, const Heatmap& cos_h, int scale) {
  RgbImage img(sin_h.width * scale, sin_h.height * scale);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const double s = sin_h.at(r / scale, c / scale);
      const double co = cos_h.at(r / scale, c / scale);
      const double conf = std::clamp(std::hypot(s, co), 0.0, 1.0);
      // theta in [-pi/2, pi/2] mapped onto blue -> green -> red.
      const double u = (std::atan2(s, co) + 0.5 * std::numbers::pi) / std::numbers::pi;
      img.at(r, c, 0) = static_cast<float>(conf * std::clamp(2.0 * u - 1.0, 0.0, 1.0));
      img.at(r, c, 1) = static_cast<float>(conf * (1.0 - std::fabs(2.0 * u - 1.0)));
      img.at(r, c, 2) = static_cast<float>(conf * std::clamp(1.0 - 2.0 * u, 0.0, 1.0));
    }
  }
  return img;
}

RgbImage overlay(const RgbImage& base, const RgbImage& layer, float alpha) {
  RgbImage out(layer.width, layer.height);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      const int br = r * base.height / out.height;
      const int bc = c * base.width / out.width;
      for (int ch = 0; ch < 3; ++ch) {
        out.at(r, c, ch) = (1.0f - alpha) * base.at(br, bc, ch) + alpha * layer.at(r, c, ch);
      }
    }
  }
  return out;
}

}  // namespace ego3d
