#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "soe/tensor.hpp"

namespace soe {

// Named trainable tensor plus its gradient accumulator.
template <typename T>
struct BasicParameter {
  std::string name;
  BasicTensor<T> value;
  BasicTensor<T> grad;
  bool trainable = true;

  BasicParameter() = default;
  BasicParameter(std::string name_, BasicTensor<T> value_)
      : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

  void zero_grad() { std::fill(grad.vec().begin(), grad.vec().end(), T(0)); }
};

using Parameter = BasicParameter<float>;

// Non-trainable named state (batchnorm running statistics). Stored in f64 to
// keep the accumulation drift-free; serialized as f32 like everything else.
struct Buffer {
  std::string name;
  std::vector<double> value;
};

// Owns a model's parameters and buffers. Pointers handed out stay valid for
// the life of the store.
class ParamStore {
public:
  Parameter* add(const std::string& name, Tensor init);
  Buffer* add_buffer(const std::string& name, std::vector<double> init);

  Parameter* find(const std::string& name);
  Buffer* find_buffer(const std::string& name);

  const std::vector<std::unique_ptr<Parameter>>& params() const { return params_; }
  const std::vector<std::unique_ptr<Buffer>>& buffers() const { return buffers_; }

  size_t trainable_count() const; // total scalar parameter count
  void zero_grad();

private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::vector<std::unique_ptr<Buffer>> buffers_;
  std::map<std::string, Parameter*> by_name_;
  std::map<std::string, Buffer*> buf_by_name_;
};

// SOEC checkpoint: magic "SOEC", u32 LE version = 1, u32 LE trainable
// parameter count, then per parameter u16 LE name length + UTF-8 name,
// u8 rank, u32 LE extents, f32 LE data. Buffers (".running_mean" /
// ".running_var") follow in the same layout until EOF.
void write_checkpoint(const std::string& path, const ParamStore& store);

// Loads by name into an existing store; every file entry must exist in the
// store with a matching shape. By default every store entry must also be
// present in the file; allow_missing permits loading a trunk-only checkpoint
// into a model that has extra (freshly initialized) parts.
void read_checkpoint(const std::string& path, ParamStore& store, bool allow_missing = false);

struct CheckpointEntry {
  std::string name;
  std::vector<int> shape;
  bool is_buffer = false;
};

// Listing for `inspect-ckpt`; validates structure without needing a model.
std::vector<CheckpointEntry> list_checkpoint(const std::string& path);

} // namespace soe
