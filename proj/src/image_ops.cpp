#include "emorec/image_ops.hpp"

#include <algorithm>
#include <cmath>

namespace emorec {

nn::Tensor patch_to_tensor(const ImagePatch& patch) {
  patch.validate();
  return nn::Tensor({patch.channels, patch.height, patch.width}, patch.pixels);
}

ImagePatch tensor_to_patch(const nn::Tensor& t, PatchKind kind) {
  if (t.shape.size() != 3) {
    throw ShapeError("tensor_to_patch: expected [C,H,W], got " +
                     nn::shape_string(t.shape));
  }
  ImagePatch p;
  p.channels = t.extent(0);
  p.height = t.extent(1);
  p.width = t.extent(2);
  p.kind = kind;
  p.pixels = t.v;
  for (double& x : p.pixels) x = std::clamp(x, 0.0, 1.0);
  p.validate();
  return p;
}

nn::Tensor segment_to_tensor(const FrameSegment& segment) {
  segment.validate();
  const ImagePatch& f0 = segment.frames.front();
  const int t = segment.size();
  nn::Tensor out = nn::Tensor::zeros({f0.channels, t, f0.height, f0.width});
  const size_t plane = static_cast<size_t>(f0.height) * f0.width;
  for (int ti = 0; ti < t; ++ti) {
    const ImagePatch& frame = segment.frames[static_cast<size_t>(ti)];
    for (int c = 0; c < f0.channels; ++c) {
      std::copy(frame.pixels.begin() + static_cast<std::ptrdiff_t>(c * plane),
                frame.pixels.begin() + static_cast<std::ptrdiff_t>((c + 1) * plane),
                out.v.begin() +
                    static_cast<std::ptrdiff_t>(
                        (static_cast<size_t>(c) * t + ti) * plane));
    }
  }
  return out;
}

ImagePatch to_grayscale(const ImagePatch& patch) {
  patch.validate();
  if (patch.channels == 1) return patch;
  ImagePatch out = make_patch(1, patch.height, patch.width, patch.kind);
  const size_t plane = static_cast<size_t>(patch.height) * patch.width;
  for (size_t i = 0; i < plane; ++i) {
    double acc = 0.0;
    for (int c = 0; c < patch.channels; ++c) {
      acc += patch.pixels[static_cast<size_t>(c) * plane + i];
    }
    out.pixels[i] = acc / patch.channels;
  }
  return out;
}

ImagePatch resize_bilinear(const ImagePatch& patch, int out_height,
                           int out_width) {
  patch.validate();
  if (out_height <= 0 || out_width <= 0) {
    throw InvalidInputError("resize target extents must be positive");
  }
  ImagePatch out = make_patch(patch.channels, out_height, out_width, patch.kind);
  const double sy = static_cast<double>(patch.height) / out_height;
  const double sx = static_cast<double>(patch.width) / out_width;
  for (int c = 0; c < patch.channels; ++c) {
    for (int oy = 0; oy < out_height; ++oy) {
      const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0,
                                   static_cast<double>(patch.height - 1));
      const int y0 = static_cast<int>(fy);
      const int y1 = std::min(y0 + 1, patch.height - 1);
      const double wy = fy - y0;
      for (int ox = 0; ox < out_width; ++ox) {
        const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0,
                                     static_cast<double>(patch.width - 1));
        const int x0 = static_cast<int>(fx);
        const int x1 = std::min(x0 + 1, patch.width - 1);
        const double wx = fx - x0;
        const double top =
            patch.at(c, y0, x0) * (1.0 - wx) + patch.at(c, y0, x1) * wx;
        const double bot =
            patch.at(c, y1, x0) * (1.0 - wx) + patch.at(c, y1, x1) * wx;
        out.at(c, oy, ox) = top * (1.0 - wy) + bot * wy;
      }
    }
  }
  return out;
}

void mean_fill_rect(ImagePatch& patch, int x, int y, int w, int h) {
  patch.validate();
  const int x0 = std::clamp(x, 0, patch.width);
  const int y0 = std::clamp(y, 0, patch.height);
  const int x1 = std::clamp(x + w, 0, patch.width);
  const int y1 = std::clamp(y + h, 0, patch.height);
  if (x0 >= x1 || y0 >= y1) return;
  const size_t plane = static_cast<size_t>(patch.height) * patch.width;
  for (int c = 0; c < patch.channels; ++c) {
    double mean = 0.0;
    for (size_t i = 0; i < plane; ++i) {
      mean += patch.pixels[static_cast<size_t>(c) * plane + i];
    }
    mean /= static_cast<double>(plane);
    for (int yy = y0; yy < y1; ++yy) {
      for (int xx = x0; xx < x1; ++xx) patch.at(c, yy, xx) = mean;
    }
  }
}

}  // namespace emorec
