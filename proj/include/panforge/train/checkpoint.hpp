// Checkpoint file layout:
//   bytes 0..7   magic "PANCKPT1"
//   u64 LE       header byte count
//   header       text, key=value lines (specs, counters, seed, rng state)
//   u32 LE       tensor count
//   per tensor   u32 LE name length, name bytes, u32 LE rank,
//                u32 LE extents[rank], little-endian 32-bit floats
// Writes go to a temp file in the same directory and are renamed into place,
// so an interrupted save leaves any prior checkpoint intact.
#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "panforge/nn/layer.hpp"
#include "panforge/nn/transform_net.hpp"

namespace panforge {

inline constexpr char kCheckpointMagic[8] = {'P', 'A', 'N', 'C', 'K', 'P', 'T', '1'};
inline constexpr int kCheckpointVersion = 1;

template <typename Real>
struct CheckpointData {
  int format_version = kCheckpointVersion;
  int height = 0;
  int width = 0;
  WidthMult width_mult;
  std::int64_t iteration = 0;
  std::int64_t d_updates = 0;
  std::int64_t t_updates = 0;
  std::int64_t adam_t_T = 0;
  std::int64_t adam_t_D = 0;
  std::int64_t t_bn_batches = 0;
  std::int64_t d_bn_batches = 0;
  std::uint64_t seed = 0;
  std::string rng_state;
  std::vector<NamedTensor<Real>> tensors;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class ByteReader {
 public:
  ByteReader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size())
      throw IoError("truncated checkpoint file: " + path_);
  }

  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace detail

template <typename Real>
void write_checkpoint(const std::filesystem::path& path, const CheckpointData<Real>& data) {
  std::string header;
  header += "format_version=" + std::to_string(data.format_version) + "\n";
  header += "image_height=" + std::to_string(data.height) + "\n";
  header += "image_width=" + std::to_string(data.width) + "\n";
  header += "width_mult=" + data.width_mult.to_string() + "\n";
  header += "iteration=" + std::to_string(data.iteration) + "\n";
  header += "d_updates=" + std::to_string(data.d_updates) + "\n";
  header += "t_updates=" + std::to_string(data.t_updates) + "\n";
  header += "adam_t_T=" + std::to_string(data.adam_t_T) + "\n";
  header += "adam_t_D=" + std::to_string(data.adam_t_D) + "\n";
  header += "t_bn_batches=" + std::to_string(data.t_bn_batches) + "\n";
  header += "d_bn_batches=" + std::to_string(data.d_bn_batches) + "\n";
  header += "seed=" + std::to_string(data.seed) + "\n";
  header += "rng=" + data.rng_state + "\n";

  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_u64(out, header.size());
  out += header;
  detail::put_u32(out, static_cast<std::uint32_t>(data.tensors.size()));
  for (const auto& nt : data.tensors) {
    detail::put_u32(out, static_cast<std::uint32_t>(nt.name.size()));
    out += nt.name;
    detail::put_u32(out, static_cast<std::uint32_t>(nt.tensor.rank()));
    for (int d = 0; d < nt.tensor.rank(); ++d)
      detail::put_u32(out, static_cast<std::uint32_t>(nt.tensor.dim(d)));
    for (Real v : nt.tensor.values()) detail::put_f32(out, static_cast<float>(v));
  }

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open checkpoint temp file for writing: " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write to checkpoint temp file: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

template <typename Real>
CheckpointData<Real> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  detail::ByteReader r(bytes, path.string());

  const std::string magic = r.raw(sizeof(kCheckpointMagic));
  if (std::memcmp(magic.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw IoError("checkpoint version mismatch: bad magic in " + path.string());

  const std::uint64_t header_len = r.u64();
  const std::string header = r.raw(header_len);
  std::map<std::string, std::string> kv;
  std::size_t pos = 0;
  while (pos < header.size()) {
    const std::size_t eol = header.find('\n', pos);
    const std::string line = header.substr(pos, eol == std::string::npos ? eol : eol - pos);
    pos = eol == std::string::npos ? header.size() : eol + 1;
    const std::size_t eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }

  CheckpointData<Real> data;
  const auto want = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw IoError("checkpoint header missing key '" + key + "': " + path.string());
    return it->second;
  };
  data.format_version = std::stoi(want("format_version"));
  if (data.format_version != kCheckpointVersion)
    throw IoError("checkpoint version mismatch: file has format_version=" +
                  std::to_string(data.format_version) + ", expected " +
                  std::to_string(kCheckpointVersion));
  data.height = std::stoi(want("image_height"));
  data.width = std::stoi(want("image_width"));
  {
    const std::string& m = want("width_mult");
    const auto slash = m.find('/');
    data.width_mult.num = std::stoi(m.substr(0, slash));
    data.width_mult.den = slash == std::string::npos ? 1 : std::stoi(m.substr(slash + 1));
  }
  data.iteration = std::stoll(want("iteration"));
  data.d_updates = std::stoll(want("d_updates"));
  data.t_updates = std::stoll(want("t_updates"));
  data.adam_t_T = std::stoll(want("adam_t_T"));
  data.adam_t_D = std::stoll(want("adam_t_D"));
  data.t_bn_batches = std::stoll(want("t_bn_batches"));
  data.d_bn_batches = std::stoll(want("d_bn_batches"));
  data.seed = std::stoull(want("seed"));
  data.rng_state = want("rng");

  const std::uint32_t count = r.u32();
  data.tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    std::string name = r.raw(name_len);
    const std::uint32_t rank = r.u32();
    std::vector<int> dims(rank);
    for (auto& d : dims) d = static_cast<int>(r.u32());
    Shape shape(dims);
    std::vector<Real> vals(static_cast<std::size_t>(shape.numel()));
    for (auto& v : vals) v = static_cast<Real>(r.f32());
    data.tensors.push_back({std::move(name), Tensor<Real>::from(std::move(shape), std::move(vals))});
  }
  if (!r.exhausted()) throw IoError("trailing bytes after checkpoint payload: " + path.string());
  return data;
}

}  // namespace panforge
