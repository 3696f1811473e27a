#include "unemo/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace unemo {

namespace {

constexpr char kMagic[4] = {'U', 'N', 'M', 'O'};
constexpr std::uint32_t kVersion = 1;

// little-endian scalar writer; this code only targets little-endian hosts
template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size())
    throw IoError("checkpoint truncated at byte " + std::to_string(pos));
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::uint64_t config_digest(const std::string& serialized) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialized) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Checkpoint make_checkpoint(const ParamStore& params, const ModelDims& dims,
                           std::uint64_t digest) {
  Checkpoint ck;
  ck.config_digest = digest;
  ck.d_model = dims.mwm.d_model;
  ck.z_dim = dims.mwm.z_dim;
  ck.s_dim = dims.mwm.s_dim;
  ck.feature_dim = dims.mwm.feature_dim;
  ck.vocab_size = dims.vocab_size;
  for (const auto& name : params.names()) {
    CheckpointTensor t;
    t.name = name;
    t.f64 = params.get(name).value();
    ck.tensors.push_back(std::move(t));
  }
  return ck;
}

void restore_params(const Checkpoint& ckpt, ParamStore& params) {
  for (const CheckpointTensor& t : ckpt.tensors) {
    if (t.dtype == Dtype::F64)
      params.set_value(t.name, t.f64);
    else
      params.set_value(t.name, t.f32.cast<double>());
  }
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out;
  out.append(kMagic, 4);
  put<std::uint32_t>(out, ckpt.version);
  put<std::uint64_t>(out, ckpt.config_digest);
  put<std::int32_t>(out, ckpt.d_model);
  put<std::int32_t>(out, ckpt.z_dim);
  put<std::int32_t>(out, ckpt.s_dim);
  put<std::int32_t>(out, ckpt.feature_dim);
  put<std::int32_t>(out, ckpt.vocab_size);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const CheckpointTensor& t : ckpt.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dtype));
    put<std::uint8_t>(out, 2);  // rank
    const Eigen::Index rows = t.dtype == Dtype::F64 ? t.f64.rows() : t.f32.rows();
    const Eigen::Index cols = t.dtype == Dtype::F64 ? t.f64.cols() : t.f32.cols();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(rows));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cols));
    if (t.dtype == Dtype::F64) {
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) put<double>(out, t.f64(r, c));
    } else {
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) put<float>(out, t.f32(r, c));
    }
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  std::size_t pos = 0;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw IoError("not a checkpoint file (bad magic)");
  pos = 4;
  Checkpoint ck;
  ck.version = take<std::uint32_t>(bytes, pos);
  if (ck.version != kVersion)
    throw IoError("unsupported checkpoint version " +
                  std::to_string(ck.version));
  ck.config_digest = take<std::uint64_t>(bytes, pos);
  ck.d_model = take<std::int32_t>(bytes, pos);
  ck.z_dim = take<std::int32_t>(bytes, pos);
  ck.s_dim = take<std::int32_t>(bytes, pos);
  ck.feature_dim = take<std::int32_t>(bytes, pos);
  ck.vocab_size = take<std::int32_t>(bytes, pos);
  const std::uint32_t count = take<std::uint32_t>(bytes, pos);
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    const std::uint32_t name_len = take<std::uint32_t>(bytes, pos);
    if (pos + name_len > bytes.size())
      throw IoError("checkpoint truncated inside a tensor name");
    t.name = bytes.substr(pos, name_len);
    pos += name_len;
    const auto dtype = take<std::uint8_t>(bytes, pos);
    if (dtype > 1)
      throw IoError("unknown dtype tag " + std::to_string(dtype) + " for " +
                    t.name);
    t.dtype = static_cast<Dtype>(dtype);
    const auto rank = take<std::uint8_t>(bytes, pos);
    if (rank != 2)
      throw IoError("unsupported tensor rank " + std::to_string(rank));
    const auto rows = take<std::uint32_t>(bytes, pos);
    const auto cols = take<std::uint32_t>(bytes, pos);
    if (t.dtype == Dtype::F64) {
      t.f64.resize(rows, cols);
      for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c)
          t.f64(r, c) = take<double>(bytes, pos);
    } else {
      t.f32.resize(rows, cols);
      for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c)
          t.f32(r, c) = take<float>(bytes, pos);
    }
    ck.tensors.push_back(std::move(t));
  }
  if (pos != bytes.size())
    throw IoError("trailing bytes after checkpoint payload");
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace unemo
