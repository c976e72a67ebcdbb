#include "ego3d/egocap.hpp"

#include <cmath>

#include "ego3d/errors.hpp"

namespace ego3d {

RgbImage egocap_crop_downsample(const RgbImage& image, double focal_center_x) {
  if (image.width != kEgoCapWidth || image.height != kEgoCapHeight) {
    throw DimensionError("egocap_crop_downsample: expected 1280x1024 input, got " +
                         std::to_string(image.width) + "x" + std::to_string(image.height));
  }
  constexpr int kCrop = 1024;
  constexpr int kOut = 256;
  constexpr int kFactor = kCrop / kOut;
  // Pixel centers are integers, so the window [x0, x0 + 1024) is centered on x0 + 511.5.
  const int x0 = static_cast<int>(std::lround(focal_center_x - 0.5 * kCrop));
  if (x0 < 0 || x0 + kCrop > image.width) {
    throw ParameterError("egocap_crop_downsample: crop window leaves the image");
  }
  RgbImage out(kOut, kOut);
  for (int r = 0; r < kOut; ++r) {
    for (int c = 0; c < kOut; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        double sum = 0.0;
        for (int dr = 0; dr < kFactor; ++dr) {
          for (int dc = 0; dc < kFactor; ++dc) sum += image.at(r * kFactor + dr, x0 + c * kFactor + dc, ch);
        }
        out.at(r, c, ch) = static_cast<float>(sum / (kFactor * kFactor));
      }
    }
  }
  return out;
}

Pose3D convert_units_mm_to_cm(const Pose3D& pose) {
  Pose3D out = pose;
  for (auto& p : out.joints) p /= 10.0;
  return out;
}

}  // namespace ego3d
