#include "uve/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace uve {

namespace {

constexpr char kMagic[4] = {'U', 'V', 'E', 'W'};
constexpr uint32_t kVersion = 1;

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t n, const char* what) const {
    if (pos + n > buf.size())
      throw CheckpointError(std::string("checkpoint truncated while reading ") +
                            what);
  }
  uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<uint8_t>(buf[pos++]);
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = static_cast<uint8_t>(buf[pos]) |
                 (static_cast<uint16_t>(static_cast<uint8_t>(buf[pos + 1])) << 8);
    pos += 2;
    return v;
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  float f32(const char* what) {
    const uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string bytes(size_t n, const char* what) {
    need(n, what);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string out;
  out.reserve(checkpoint_byte_size(ckpt));
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  if (ckpt.meta.size() > std::numeric_limits<uint32_t>::max())
    throw CheckpointError("checkpoint meta too large");
  put_u32(out, static_cast<uint32_t>(ckpt.meta.size()));
  out += ckpt.meta;
  put_u32(out, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    if (t.name.size() > std::numeric_limits<uint16_t>::max())
      throw CheckpointError("tensor name too long: " + t.name);
    if (t.dims.empty() || t.dims.size() > 255)
      throw CheckpointError("tensor rank out of range: " + t.name);
    uint64_t numel = 1;
    for (uint32_t d : t.dims) numel *= d;
    if (numel != t.data.size())
      throw CheckpointError("tensor payload does not match dims: " + t.name);
    put_u16(out, static_cast<uint16_t>(t.name.size()));
    out += t.name;
    out.push_back(static_cast<char>(t.dims.size()));
    for (uint32_t d : t.dims) put_u32(out, d);
    for (float v : t.data) put_f32(out, v);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  Reader r{buf};

  const std::string magic = r.bytes(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw CheckpointError("bad magic in " + path);
  const uint32_t version = r.u32("version");
  if (version != kVersion)
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version));
  Checkpoint ckpt;
  const uint32_t meta_len = r.u32("meta length");
  ckpt.meta = r.bytes(meta_len, "meta");
  const uint32_t count = r.u32("tensor count");
  ckpt.tensors.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    const uint16_t name_len = r.u16("name length");
    t.name = r.bytes(name_len, "name");
    const uint8_t rank = r.u8("rank");
    if (rank == 0) throw CheckpointError("zero-rank tensor: " + t.name);
    uint64_t numel = 1;
    t.dims.resize(rank);
    for (uint8_t d = 0; d < rank; ++d) {
      t.dims[d] = r.u32("dims");
      numel *= t.dims[d];
    }
    r.need(numel * 4, "payload");
    t.data.resize(numel);
    for (uint64_t j = 0; j < numel; ++j) t.data[j] = r.f32("payload");
    ckpt.tensors.push_back(std::move(t));
  }
  if (r.pos != buf.size())
    throw CheckpointError("trailing bytes after checkpoint payload in " + path);
  return ckpt;
}

uint64_t checkpoint_byte_size(const Checkpoint& ckpt) {
  uint64_t size = 4 + 4 + 4 + ckpt.meta.size() + 4;
  for (const auto& t : ckpt.tensors)
    size += 2 + t.name.size() + 1 + 4 * t.dims.size() + 4 * t.data.size();
  return size;
}

}  // namespace uve
