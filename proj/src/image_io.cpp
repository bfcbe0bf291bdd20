#include "emorec/image_io.hpp"

#include <cmath>
#include <fstream>

namespace emorec {

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
  std::string tok;
  while (in >> tok) {
    if (tok[0] == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    return tok;
  }
  throw ParseError("unexpected end of netpbm header");
}

}  // namespace

ImagePatch read_netpbm(const std::string& path, PatchKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open image '" + path + "'");
  const std::string magic = next_token(in);
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw ParseError("'" + path + "': unsupported netpbm magic '" + magic + "'");
  }
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token(in));
    height = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw ParseError("'" + path + "': malformed netpbm header");
  }
  if (width <= 0 || height <= 0 || maxval != 255) {
    throw ParseError("'" + path + "': unsupported netpbm geometry");
  }
  in.get();  // single whitespace after maxval

  const size_t count = static_cast<size_t>(channels) * width * height;
  std::vector<unsigned char> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(count));
  if (static_cast<size_t>(in.gcount()) != count) {
    throw IntegrityError("'" + path + "': truncated pixel data");
  }

  ImagePatch patch;
  patch.channels = channels;
  patch.height = height;
  patch.width = width;
  patch.kind = kind;
  patch.pixels.resize(count);
  // Interleaved on disk, channel-first in memory.
  const size_t plane = static_cast<size_t>(width) * height;
  for (size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < channels; ++c) {
      patch.pixels[static_cast<size_t>(c) * plane + i] =
          raw[i * static_cast<size_t>(channels) + static_cast<size_t>(c)] / 255.0;
    }
  }
  patch.validate();
  return patch;
}

void write_netpbm(const ImagePatch& patch, const std::string& path) {
  patch.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write image '" + path + "'");
  out << (patch.channels == 1 ? "P5" : "P6") << "\n"
      << patch.width << " " << patch.height << "\n255\n";
  const size_t plane = static_cast<size_t>(patch.width) * patch.height;
  std::vector<unsigned char> raw(plane * static_cast<size_t>(patch.channels));
  for (size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < patch.channels; ++c) {
      raw[i * static_cast<size_t>(patch.channels) + static_cast<size_t>(c)] =
          static_cast<unsigned char>(
              std::lround(patch.pixels[static_cast<size_t>(c) * plane + i] * 255.0));
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw IntegrityError("failed writing image '" + path + "'");
}

}  // namespace emorec
