#ifndef EMOREC_IMAGE_IO_HPP
#define EMOREC_IMAGE_IO_HPP

#include <string>

#include "emorec/core.hpp"

namespace emorec {

/// Reads a binary netpbm image (P5 grayscale or P6 color, maxval 255) and
/// scales values into [0,1].
ImagePatch read_netpbm(const std::string& path,
                       PatchKind kind = PatchKind::full);

/// Writes a patch as P5 (1 channel) or P6 (3 channels).
void write_netpbm(const ImagePatch& patch, const std::string& path);

}  // namespace emorec

#endif  // EMOREC_IMAGE_IO_HPP
