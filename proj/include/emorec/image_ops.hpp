#ifndef EMOREC_IMAGE_OPS_HPP
#define EMOREC_IMAGE_OPS_HPP

#include "emorec/autodiff.hpp"
#include "emorec/core.hpp"

namespace emorec {

/// [C,H,W] tensor from a patch.
nn::Tensor patch_to_tensor(const ImagePatch& patch);

/// Patch from a [C,H,W] tensor; values are clamped into [0,1].
ImagePatch tensor_to_patch(const nn::Tensor& t, PatchKind kind);

/// [C,T,H,W] tensor from a segment (frames become the time axis).
nn::Tensor segment_to_tensor(const FrameSegment& segment);

/// Channel-mean grayscale copy.
ImagePatch to_grayscale(const ImagePatch& patch);

/// Bilinear resample (half-pixel centers).
ImagePatch resize_bilinear(const ImagePatch& patch, int out_height,
                           int out_width);

/// Fills an axis-aligned rectangle with the per-channel mean of the whole
/// image; used to remove faces from body crops and subjects from
/// backgrounds. The rectangle is clipped to the image.
void mean_fill_rect(ImagePatch& patch, int x, int y, int w, int h);

}  // namespace emorec

#endif  // EMOREC_IMAGE_OPS_HPP
