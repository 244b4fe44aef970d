// Minimal image codecs: 8-bit non-interlaced PNG (gray or RGB, zlib-backed)
// and binary PGM (P5). Image tensors are [3,H,W] floats in [-1,1]; byte value
// p maps to 2p/255 - 1 and saving rounds half-up back to [0,255].
#pragma once

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "panforge/core/errors.hpp"
#include "panforge/core/tensor.hpp"

namespace panforge::data {

using ImageTensor = Tensor<float>;

/// 8-bit interleaved pixels, row-major; channels is 1 (gray) or 3 (RGB).
struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;
};

namespace detail {

inline constexpr std::uint8_t kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

inline void put_be32(std::string& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_be32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

inline void append_chunk(std::string& out, const char type[4], const std::string& payload) {
  put_be32(out, static_cast<std::uint32_t>(payload.size()));
  std::string body(type, 4);
  body += payload;
  out += body;
  const auto crc = ::crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                           static_cast<uInt>(body.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

inline std::uint8_t paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
  if (pb <= pc) return static_cast<std::uint8_t>(b);
  return static_cast<std::uint8_t>(c);
}

}  // namespace detail

inline std::string encode_png(const RawImage& img) {
  if (img.channels != 1 && img.channels != 3)
    throw IoError("png encoder supports 1 or 3 channels, got " + std::to_string(img.channels));
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * img.channels)
    throw IoError("png encoder: pixel buffer does not match declared size");

  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  std::vector<std::uint8_t> raw((stride + 1) * static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    raw[y * (stride + 1)] = 0;  // filter: None
    std::memcpy(raw.data() + y * (stride + 1) + 1, img.pixels.data() + y * stride, stride);
  }

  uLongf compressed_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(compressed_len);
  if (compress2(compressed.data(), &compressed_len, raw.data(), static_cast<uLong>(raw.size()), 6) !=
      Z_OK)
    throw IoError("png encoder: zlib compression failed");
  compressed.resize(compressed_len);

  std::string out(reinterpret_cast<const char*>(detail::kPngSignature), 8);
  std::string ihdr;
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);                                    // bit depth
  ihdr.push_back(img.channels == 3 ? char(2) : char(0));  // color type
  ihdr.push_back(0);                                    // compression
  ihdr.push_back(0);                                    // filter method
  ihdr.push_back(0);                                    // no interlace
  detail::append_chunk(out, "IHDR", ihdr);
  detail::append_chunk(out, "IDAT",
                       std::string(reinterpret_cast<const char*>(compressed.data()), compressed.size()));
  detail::append_chunk(out, "IEND", "");
  return out;
}

inline RawImage decode_png(const std::uint8_t* data, std::size_t size) {
  if (size < 8 || std::memcmp(data, detail::kPngSignature, 8) != 0)
    throw IoError("not a PNG file (bad signature)");

  RawImage img;
  int bit_depth = 0, color_type = 0, interlace = 0;
  std::string idat;
  bool saw_ihdr = false, saw_iend = false;
  std::size_t pos = 8;
  while (pos < size && !saw_iend) {
    if (pos + 8 > size) throw IoError("truncated PNG: chunk header cut short");
    const std::uint32_t len = detail::get_be32(data + pos);
    if (pos + 12 + len > size) throw IoError("truncated PNG: chunk payload cut short");
    const char* type = reinterpret_cast<const char*>(data + pos + 4);
    const std::uint8_t* payload = data + pos + 8;
    const std::uint32_t stored_crc = detail::get_be32(data + pos + 8 + len);
    const auto crc = ::crc32(0L, data + pos + 4, static_cast<uInt>(len + 4));
    if (static_cast<std::uint32_t>(crc) != stored_crc)
      throw IoError(std::string("corrupt PNG: bad CRC in chunk ") + std::string(type, 4));

    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw IoError("corrupt PNG: IHDR length");
      img.width = static_cast<int>(detail::get_be32(payload));
      img.height = static_cast<int>(detail::get_be32(payload + 4));
      bit_depth = payload[8];
      color_type = payload[9];
      interlace = payload[12];
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.append(reinterpret_cast<const char*>(payload), len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_iend = true;
    }
    pos += 12 + len;
  }
  if (!saw_ihdr) throw IoError("corrupt PNG: missing IHDR");
  if (!saw_iend) throw IoError("truncated PNG: missing IEND");
  if (bit_depth != 8)
    throw IoError("unsupported bit depth in PNG: " + std::to_string(bit_depth) + " (only 8-bit)");
  if (color_type != 0 && color_type != 2)
    throw IoError("unsupported PNG color type " + std::to_string(color_type) +
                  " (only grayscale and RGB)");
  if (interlace != 0) throw IoError("unsupported PNG: interlaced images");
  if (img.width <= 0 || img.height <= 0) throw IoError("corrupt PNG: bad dimensions");

  img.channels = color_type == 2 ? 3 : 1;
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  const std::size_t raw_size = (stride + 1) * static_cast<std::size_t>(img.height);
  std::vector<std::uint8_t> raw(raw_size);
  uLongf out_len = static_cast<uLongf>(raw_size);
  const int zres = uncompress(raw.data(), &out_len, reinterpret_cast<const Bytef*>(idat.data()),
                              static_cast<uLong>(idat.size()));
  if (zres != Z_OK || out_len != raw_size) throw IoError("truncated PNG: image data incomplete");

  img.pixels.resize(stride * static_cast<std::size_t>(img.height));
  const int bpp = img.channels;
  std::vector<std::uint8_t> prev(stride, 0);
  for (int y = 0; y < img.height; ++y) {
    const std::uint8_t filter = raw[y * (stride + 1)];
    const std::uint8_t* src = raw.data() + y * (stride + 1) + 1;
    std::uint8_t* dst = img.pixels.data() + y * stride;
    for (std::size_t i = 0; i < stride; ++i) {
      const int left = i >= static_cast<std::size_t>(bpp) ? dst[i - bpp] : 0;
      const int up = prev[i];
      const int ul = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
      int v = src[i];
      switch (filter) {
        case 0: break;
        case 1: v += left; break;
        case 2: v += up; break;
        case 3: v += (left + up) / 2; break;
        case 4: v += detail::paeth(left, up, ul); break;
        default: throw IoError("corrupt PNG: unknown filter type " + std::to_string(filter));
      }
      dst[i] = static_cast<std::uint8_t>(v & 0xff);
    }
    std::memcpy(prev.data(), dst, stride);
  }
  return img;
}

inline std::string encode_pgm(const RawImage& img) {
  if (img.channels != 1) throw IoError("pgm encoder needs a single-channel image");
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

inline RawImage decode_pgm(const std::uint8_t* data, std::size_t size) {
  std::size_t pos = 0;
  const auto skip_space = [&] {
    while (pos < size) {
      if (data[pos] == '#') {
        while (pos < size && data[pos] != '\n') ++pos;
      } else if (std::isspace(data[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  const auto read_int = [&]() -> long {
    skip_space();
    long v = 0;
    bool any = false;
    while (pos < size && std::isdigit(data[pos])) {
      v = v * 10 + (data[pos] - '0');
      ++pos;
      any = true;
    }
    if (!any) throw IoError("corrupt PGM: expected an integer in header");
    return v;
  };

  if (size < 2 || data[0] != 'P' || data[1] != '5') throw IoError("not a binary PGM (P5) file");
  pos = 2;
  const long w = read_int();
  const long h = read_int();
  const long maxval = read_int();
  if (maxval > 255)
    throw IoError("unsupported bit depth in PGM: maxval " + std::to_string(maxval) + " (only 8-bit)");
  if (maxval < 1 || w < 1 || h < 1) throw IoError("corrupt PGM: bad header values");
  ++pos;  // single whitespace after maxval
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (pos + need > size) throw IoError("truncated PGM: pixel data cut short");

  RawImage img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.channels = 1;
  img.pixels.assign(data + pos, data + pos + need);
  return img;
}

inline std::uint8_t to_byte(float v) {
  const float scaled = (v + 1.0f) * 127.5f;
  const float rounded = std::floor(scaled + 0.5f);  // round half up
  return static_cast<std::uint8_t>(std::min(255.0f, std::max(0.0f, rounded)));
}

inline float to_unit(std::uint8_t p) { return 2.0f * static_cast<float>(p) / 255.0f - 1.0f; }

/// Rec.601 luma weights; the project's single color-to-gray convention.
inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

inline ImageTensor raw_to_tensor(const RawImage& img) {
  ImageTensor t(Shape{3, img.height, img.width});
  const std::int64_t plane = static_cast<std::int64_t>(img.height) * img.width;
  for (std::int64_t i = 0; i < plane; ++i) {
    if (img.channels == 3) {
      for (int c = 0; c < 3; ++c) t.values()[c * plane + i] = to_unit(img.pixels[i * 3 + c]);
    } else {
      const float v = to_unit(img.pixels[i]);
      for (int c = 0; c < 3; ++c) t.values()[c * plane + i] = v;
    }
  }
  return t;
}

inline RawImage tensor_to_raw_rgb(const ImageTensor& t) {
  if (t.rank() != 3 || t.dim(0) != 3)
    throw ShapeError("expected an image tensor [3,H,W], got " + t.shape().to_string());
  RawImage img;
  img.height = t.dim(1);
  img.width = t.dim(2);
  img.channels = 3;
  const std::int64_t plane = static_cast<std::int64_t>(img.height) * img.width;
  img.pixels.resize(static_cast<std::size_t>(plane) * 3);
  for (std::int64_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) img.pixels[i * 3 + c] = to_byte(t.values()[c * plane + i]);
  return img;
}

inline ImageTensor load_image(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open image: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const std::uint8_t*>(bytes.data());
  if (bytes.size() >= 8 && std::memcmp(data, detail::kPngSignature, 8) == 0)
    return raw_to_tensor(decode_png(data, bytes.size()));
  if (bytes.size() >= 2 && data[0] == 'P' && data[1] == '5')
    return raw_to_tensor(decode_pgm(data, bytes.size()));
  throw IoError("unsupported image format (expected PNG or binary PGM): " + path.string());
}

inline void save_image(const ImageTensor& t, const std::filesystem::path& path) {
  std::string bytes;
  const std::string ext = path.extension().string();
  if (ext == ".png") {
    bytes = encode_png(tensor_to_raw_rgb(t));
  } else if (ext == ".pgm") {
    RawImage rgb = tensor_to_raw_rgb(t);
    RawImage gray;
    gray.width = rgb.width;
    gray.height = rgb.height;
    gray.channels = 1;
    gray.pixels.resize(static_cast<std::size_t>(gray.width) * gray.height);
    for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
      const double g =
          luma(rgb.pixels[i * 3], rgb.pixels[i * 3 + 1], rgb.pixels[i * 3 + 2]);
      gray.pixels[i] = static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, std::floor(g + 0.5))));
    }
    bytes = encode_pgm(gray);
  } else {
    throw IoError("unsupported image format for saving (use .png or .pgm): " + path.string());
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open image for writing: " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write while saving image: " + path.string());
}

}  // namespace panforge::data
