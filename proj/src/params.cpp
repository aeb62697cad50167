#include "soe/params.hpp"

#include <fstream>

#include "soe/binio.hpp"

namespace soe {

Parameter* ParamStore::add(const std::string& name, Tensor init) {
  if (by_name_.count(name)) throw ValidationError("duplicate parameter name: " + name);
  params_.push_back(std::make_unique<Parameter>(name, std::move(init)));
  Parameter* p = params_.back().get();
  by_name_[name] = p;
  return p;
}

Buffer* ParamStore::add_buffer(const std::string& name, std::vector<double> init) {
  if (buf_by_name_.count(name)) throw ValidationError("duplicate buffer name: " + name);
  buffers_.push_back(std::make_unique<Buffer>(Buffer{name, std::move(init)}));
  Buffer* b = buffers_.back().get();
  buf_by_name_[name] = b;
  return b;
}

Parameter* ParamStore::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

Buffer* ParamStore::find_buffer(const std::string& name) {
  auto it = buf_by_name_.find(name);
  return it == buf_by_name_.end() ? nullptr : it->second;
}

size_t ParamStore::trainable_count() const {
  size_t n = 0;
  for (const auto& p : params_)
    if (p->trainable) n += p->value.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (const auto& p : params_) p->zero_grad();
}

namespace {

constexpr uint32_t kCkptMagic = 0x43454f53u; // "SOEC" little-endian
constexpr uint32_t kCkptVersion = 1;

void write_entry(std::ostream& os, const std::string& name, const std::vector<int>& shape,
                 const float* data, size_t n) {
  if (name.size() > UINT16_MAX) throw IoError("parameter name too long: " + name);
  write_le<uint16_t>(os, static_cast<uint16_t>(name.size()));
  write_bytes(os, name.data(), name.size());
  write_le<uint8_t>(os, static_cast<uint8_t>(shape.size()));
  for (int d : shape) write_le<uint32_t>(os, static_cast<uint32_t>(d));
  write_bytes(os, data, n * sizeof(float));
}

struct RawEntry {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

RawEntry read_entry(std::istream& is) {
  RawEntry e;
  const uint16_t name_len = read_le<uint16_t>(is, "name length");
  e.name.resize(name_len);
  read_bytes(is, e.name.data(), name_len, "name");
  const uint8_t rank = read_le<uint8_t>(is, "rank");
  e.shape.resize(rank);
  size_t n = 1;
  for (int i = 0; i < rank; ++i) {
    e.shape[i] = static_cast<int>(read_le<uint32_t>(is, "extent"));
    n *= static_cast<size_t>(e.shape[i]);
  }
  e.data.resize(n);
  read_bytes(is, e.data.data(), n * sizeof(float), "tensor data");
  return e;
}

} // namespace

void write_checkpoint(const std::string& path, const ParamStore& store) {
  AtomicFileWriter w(path);
  auto& os = w.stream();
  write_le<uint32_t>(os, kCkptMagic);
  write_le<uint32_t>(os, kCkptVersion);
  write_le<uint32_t>(os, static_cast<uint32_t>(store.params().size()));
  for (const auto& p : store.params())
    write_entry(os, p->name, p->value.shape(), p->value.data(), p->value.numel());
  for (const auto& b : store.buffers()) {
    std::vector<float> f32(b->value.begin(), b->value.end());
    write_entry(os, b->name, {static_cast<int>(f32.size())}, f32.data(), f32.size());
  }
  w.commit();
}

namespace {

std::ifstream open_checkpoint(const std::string& path, uint32_t* param_count) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  if (read_le<uint32_t>(is, "magic") != kCkptMagic)
    throw IoError("not a SOEC checkpoint: " + path);
  const uint32_t version = read_le<uint32_t>(is, "version");
  if (version != kCkptVersion)
    throw IoError("unsupported SOEC version " + std::to_string(version) + ": " + path);
  *param_count = read_le<uint32_t>(is, "param count");
  return is;
}

} // namespace

void read_checkpoint(const std::string& path, ParamStore& store, bool allow_missing) {
  uint32_t param_count = 0;
  std::ifstream is = open_checkpoint(path, &param_count);

  size_t params_seen = 0, buffers_seen = 0;
  for (uint32_t i = 0; i < param_count; ++i) {
    RawEntry e = read_entry(is);
    Parameter* p = store.find(e.name);
    if (!p) throw IoError("checkpoint parameter not in model: " + e.name);
    if (p->value.shape() != e.shape)
      throw IoError("shape mismatch for " + e.name + ": model " + shape_str(p->value.shape()) +
                    " vs checkpoint " + shape_str(e.shape));
    p->value.vec() = std::move(e.data);
    ++params_seen;
  }
  while (!at_eof(is)) {
    RawEntry e = read_entry(is);
    Buffer* b = store.find_buffer(e.name);
    if (!b) throw IoError("checkpoint buffer not in model: " + e.name);
    if (b->value.size() != e.data.size())
      throw IoError("size mismatch for buffer " + e.name);
    b->value.assign(e.data.begin(), e.data.end());
    ++buffers_seen;
  }
  if (!allow_missing) {
    if (params_seen != store.params().size())
      throw IoError("checkpoint is missing model parameters: " + path);
    if (buffers_seen != store.buffers().size())
      throw IoError("checkpoint is missing model buffers: " + path);
  }
}

std::vector<CheckpointEntry> list_checkpoint(const std::string& path) {
  uint32_t param_count = 0;
  std::ifstream is = open_checkpoint(path, &param_count);
  std::vector<CheckpointEntry> out;
  for (uint32_t i = 0; i < param_count; ++i) {
    RawEntry e = read_entry(is);
    out.push_back({e.name, e.shape, false});
  }
  while (!at_eof(is)) {
    RawEntry e = read_entry(is);
    out.push_back({e.name, e.shape, true});
  }
  return out;
}

} // namespace soe
