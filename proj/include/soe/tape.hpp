#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "soe/params.hpp"
#include "soe/rng.hpp"
#include "soe/so3.hpp"
#include "soe/tensor.hpp"

namespace soe {

// Reverse-mode tape over dense tensors. Nodes are appended in execution
// order, which is a topological order by construction; backward() walks the
// record once in reverse. The closed op set is exactly what the encoder, VN
// stack and losses need.
//
// T = float for training (f32 storage, f64 accumulation in reductions);
// T = double instantiations back the finite-difference shadow checks.
template <typename T>
class BasicTape {
public:
  using TensorT = BasicTensor<T>;
  using ParamT = BasicParameter<T>;

  struct Node {
    TensorT value;
    TensorT grad; // allocated on first accumulation
    std::vector<int> parents;
    std::function<void(BasicTape&, int)> backward_fn;
    ParamT* bound = nullptr;
    bool needs_grad = false;
  };

  // ---- leaves ----

  int constant(TensorT v) { return push(std::move(v), {}, nullptr, "constant", false); }

  // Leaf bound to a parameter; repeated calls for the same parameter within
  // one tape reuse the node so the gradient flush never double-counts.
  int param(ParamT& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return it->second;
    int id = push(p.value, {}, nullptr, "param", true);
    nodes_[id].bound = &p;
    param_nodes_[&p] = id;
    return id;
  }

  const TensorT& value(int id) const { return nodes_[id].value; }
  const TensorT& grad(int id) const { return nodes_[id].grad; }
  size_t size() const { return nodes_.size(); }

  // ---- convolution stack ----

  // 3D convolution, kernel 3x3x3, stride 1, padding 1, with bias.
  // x [B,Cin,D,H,W], w [Cout,Cin,3,3,3], b [Cout] -> [B,Cout,D,H,W].
  int conv3d(int x, int w, int b);

  // Per-channel batch normalization over (B,D,H,W) with affine scale/shift.
  // Train mode uses batch statistics (f64 accumulation) and updates the
  // running buffers with momentum; eval mode reads the running buffers.
  int batchnorm3d(int x, int gamma, int beta, Buffer* running_mean, Buffer* running_var,
                  bool train, double momentum = 0.1, double eps = 1e-5);

  int leaky_relu(int x, double slope);

  // Kernel 2, stride 2; requires even spatial dims. Ties resolve to the
  // first element in scan order.
  int maxpool3d(int x);

  // Inverted-scaling dropout, train only. The mask is a pure function of
  // (seed, layer_id, step, element), so replays are exact.
  int dropout(int x, double p, uint64_t seed, uint64_t layer_id, uint64_t step, bool train);

  // ---- dense / matrix ops ----

  // x [B,din], w [dout,din], b [dout] -> [B,dout]
  int linear(int x, int w, int b);
  int matmul(int a, int b); // [m,k] x [k,n] -> [m,n]
  int transpose2d(int a);

  // ---- elementwise & reductions ----

  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int add_scalar(int a, double c);
  int mul_scalar(int a, double c);
  int reciprocal(int a);
  int sum(int a);          // -> scalar
  int mean(int a);         // -> scalar
  int frobenius_sq(int a); // sum of squares over all entries -> scalar
  int row_sumsq(int a);    // [B,...] -> [B], per-item sum of squares
  int reshape(int a, std::vector<int> shape);

  // ---- fused losses ----

  // logits [B,C], integer class targets; mean cross-entropy -> scalar.
  int softmax_cross_entropy(int logits, std::vector<int> targets);
  // mean squared error against a constant target of identical shape.
  int mse(int pred, TensorT target);

  // ---- vector-neuron ops ----

  // v [B,din,3], w [dout,din] -> [B,dout,3]; mixes rows, never the 3
  // spatial components.
  int mix_rows(int v, int w);

  // Per row r: q if <q,k> >= 0, else q - (<q,k>/||k||^2) k; passthrough when
  // ||k||^2 < 1e-12. q,k [B,d,3].
  int vn_gate(int q, int k);

  // Right-multiply each item's row matrix by its rotation (or its
  // transpose). Rotations are data, not differentiated.
  int rotate_vecs(int v, const std::vector<RotationMatrix>& rs, bool transposed);

  // ---- reverse pass ----

  // Seeds d(loss)/d(loss) = 1, walks the record in reverse, then adds leaf
  // gradients into their bound parameters' grad.
  void backward(int loss);

private:
  std::vector<Node> nodes_;
  std::map<ParamT*, int> param_nodes_;

  int push(TensorT value, std::vector<int> parents, std::function<void(BasicTape&, int)> fn,
           const char* opname, bool force_needs_grad = false) {
    if (!value.all_finite())
      throw NumericError(std::string(opname) + ": non-finite value in output");
    Node nd;
    nd.value = std::move(value);
    nd.parents = std::move(parents);
    nd.backward_fn = std::move(fn);
    nd.needs_grad = force_needs_grad;
    for (int p : nd.parents) nd.needs_grad = nd.needs_grad || nodes_[p].needs_grad;
    nodes_.push_back(std::move(nd));
    return static_cast<int>(nodes_.size()) - 1;
  }

  TensorT& grad_of(int id) {
    Node& nd = nodes_[id];
    if (nd.grad.vec().empty()) nd.grad = TensorT(nd.value.shape());
    return nd.grad;
  }

  // Gradient buffer of a parent, or nullptr when no gradient is needed.
  T* maybe_grad(int id) {
    if (!nodes_[id].needs_grad) return nullptr;
    return grad_of(id).data();
  }

  void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
  }
};

// ---------------------------------------------------------------------------
// implementation
// ---------------------------------------------------------------------------

namespace conv_detail {

// Patch matrix [K][S] for one item: row k = (ci, kd, kh, kw) flattened
// (matching the [Cout, Cin, 3, 3, 3] weight layout), column s = output
// voxel; zero-padded borders. Keeping S contiguous gives every kernel below
// a long unit-stride inner loop regardless of how small the volume is.
template <typename T>
void im2col(const T* xc, int Cin, int D, int H, int W, std::vector<T>& pt) {
  const int S = D * H * W;
  pt.resize(static_cast<size_t>(Cin) * 27 * S);
  T* dst = pt.data();
  for (int ci = 0; ci < Cin; ++ci) {
    const T* src_c = xc + static_cast<size_t>(ci) * S;
    for (int kd = 0; kd < 3; ++kd)
      for (int kh = 0; kh < 3; ++kh)
        for (int kw = 0; kw < 3; ++kw) {
          T* row = dst;
          dst += S;
          const int wlo = std::max(0, 1 - kw), whi = std::min(W, W + 1 - kw);
          for (int d = 0; d < D; ++d) {
            const int id = d + kd - 1;
            T* r1 = row + static_cast<size_t>(d) * H * W;
            if (id < 0 || id >= D) {
              std::fill(r1, r1 + static_cast<size_t>(H) * W, T(0));
              continue;
            }
            for (int h = 0; h < H; ++h) {
              const int ih = h + kh - 1;
              T* __restrict__ r2 = r1 + static_cast<size_t>(h) * W;
              if (ih < 0 || ih >= H) {
                std::fill(r2, r2 + W, T(0));
                continue;
              }
              const T* __restrict__ src =
                  src_c + (static_cast<size_t>(id) * H + ih) * W + (kw - 1);
              if (wlo > 0) r2[0] = T(0);
              for (int u = wlo; u < whi; ++u) r2[u] = src[u];
              if (whi < W) r2[W - 1] = T(0);
            }
          }
        }
  }
}

} // namespace conv_detail

template <typename T>
int BasicTape<T>::conv3d(int x, int w, int b) {
  const TensorT& xv = nodes_[x].value;
  const TensorT& wv = nodes_[w].value;
  const TensorT& bv = nodes_[b].value;
  require(xv.rank() == 5, "conv3d: input must be [B,Cin,D,H,W], got " + shape_str(xv.shape()));
  require(wv.rank() == 5 && wv.dim(2) == 3 && wv.dim(3) == 3 && wv.dim(4) == 3,
          "conv3d: weight must be [Cout,Cin,3,3,3], got " + shape_str(wv.shape()));
  require(wv.dim(1) == xv.dim(1), "conv3d: channel mismatch");
  require(bv.rank() == 1 && bv.dim(0) == wv.dim(0), "conv3d: bias shape mismatch");

  const int B = xv.dim(0), Cin = xv.dim(1), D = xv.dim(2), H = xv.dim(3), W = xv.dim(4);
  const int Cout = wv.dim(0);
  const int S = D * H * W;
  const int K = Cin * 27;

  TensorT out({B, Cout, D, H, W});
  const T* xp = xv.data();
  const T* wp = wv.data();
  const T* bp = bv.data();
  T* op = out.data();

  std::vector<T> pt;
  for (int n = 0; n < B; ++n) {
    conv_detail::im2col(xp + static_cast<size_t>(n) * Cin * S, Cin, D, H, W, pt);
    for (int co = 0; co < Cout; ++co) {
      T* __restrict__ orow = op + (static_cast<size_t>(n) * Cout + co) * S;
      std::fill(orow, orow + S, bp[co]);
      const T* wrow = wp + static_cast<size_t>(co) * K;
      for (int k = 0; k < K; ++k) {
        const T wk = wrow[k];
        const T* __restrict__ prow = pt.data() + static_cast<size_t>(k) * S;
#pragma omp simd
        for (int s = 0; s < S; ++s) orow[s] += wk * prow[s];
      }
    }
  }

  auto bw = [B, Cin, Cout, D, H, W, S, K](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    const int x = nd.parents[0], w = nd.parents[1], b = nd.parents[2];
    const T* go = nd.grad.data();
    const T* xp = t.nodes_[x].value.data();
    const T* wp = t.nodes_[w].value.data();
    T* gx = t.maybe_grad(x);
    T* gw = t.maybe_grad(w);
    T* gb = t.maybe_grad(b);

    std::vector<T> pt, gpt;
    if (gx) gpt.resize(static_cast<size_t>(K) * S);
    for (int n = 0; n < B; ++n) {
      const T* gc = go + static_cast<size_t>(n) * Cout * S;
      if (gb) {
        for (int co = 0; co < Cout; ++co) {
          const T* __restrict__ gr = gc + static_cast<size_t>(co) * S;
          double acc = 0.0;
#pragma omp simd reduction(+ : acc)
          for (int s = 0; s < S; ++s) acc += gr[s];
          gb[co] += static_cast<T>(acc);
        }
      }
      if (gw) {
        conv_detail::im2col(xp + static_cast<size_t>(n) * Cin * S, Cin, D, H, W, pt);
        for (int co = 0; co < Cout; ++co) {
          const T* __restrict__ gr = gc + static_cast<size_t>(co) * S;
          T* gwrow = gw + static_cast<size_t>(co) * K;
          for (int k = 0; k < K; ++k) {
            const T* __restrict__ prow = pt.data() + static_cast<size_t>(k) * S;
            T acc = 0;
#pragma omp simd reduction(+ : acc)
            for (int s = 0; s < S; ++s) acc += gr[s] * prow[s];
            gwrow[k] += acc;
          }
        }
      }
      if (gx) {
        // gpt = W^T . go, then scatter back through the patch mapping
        for (int k = 0; k < K; ++k) {
          T* __restrict__ gprow = gpt.data() + static_cast<size_t>(k) * S;
          std::fill(gprow, gprow + S, T(0));
          for (int co = 0; co < Cout; ++co) {
            const T wk = wp[static_cast<size_t>(co) * K + k];
            const T* __restrict__ gr = gc + static_cast<size_t>(co) * S;
#pragma omp simd
            for (int s = 0; s < S; ++s) gprow[s] += wk * gr[s];
          }
        }
        T* gxc = gx + static_cast<size_t>(n) * Cin * S;
        for (int ci = 0; ci < Cin; ++ci) {
          T* gx_c = gxc + static_cast<size_t>(ci) * S;
          for (int kd = 0; kd < 3; ++kd)
            for (int kh = 0; kh < 3; ++kh)
              for (int kw = 0; kw < 3; ++kw) {
                const int k = ((ci * 3 + kd) * 3 + kh) * 3 + kw;
                const T* gprow = gpt.data() + static_cast<size_t>(k) * S;
                const int wlo = std::max(0, 1 - kw), whi = std::min(W, W + 1 - kw);
                for (int d = 0; d < D; ++d) {
                  const int id = d + kd - 1;
                  if (id < 0 || id >= D) continue;
                  for (int h = 0; h < H; ++h) {
                    const int ih = h + kh - 1;
                    if (ih < 0 || ih >= H) continue;
                    T* __restrict__ dst = gx_c + (static_cast<size_t>(id) * H + ih) * W + (kw - 1);
                    const T* __restrict__ src = gprow + (static_cast<size_t>(d) * H + h) * W;
#pragma omp simd
                    for (int u = wlo; u < whi; ++u) dst[u] += src[u];
                  }
                }
              }
        }
      }
    }
  };
  return push(std::move(out), {x, w, b}, bw, "conv3d");
}

template <typename T>
int BasicTape<T>::batchnorm3d(int x, int gamma, int beta, Buffer* running_mean,
                              Buffer* running_var, bool train, double momentum, double eps) {
  const TensorT& xv = nodes_[x].value;
  require(xv.rank() == 5, "batchnorm3d: input must be [B,C,D,H,W]");
  const int B = xv.dim(0), C = xv.dim(1);
  const size_t plane = xv.numel() / (static_cast<size_t>(B) * C);
  const TensorT& gv = nodes_[gamma].value;
  const TensorT& bv = nodes_[beta].value;
  require(gv.rank() == 1 && gv.dim(0) == C && bv.rank() == 1 && bv.dim(0) == C,
          "batchnorm3d: affine parameter shape mismatch");
  require(running_mean && running_var && running_mean->value.size() == static_cast<size_t>(C) &&
              running_var->value.size() == static_cast<size_t>(C),
          "batchnorm3d: running statistic buffers must have C entries");
  const size_t count = static_cast<size_t>(B) * plane; // elements per channel
  if (train && count < 2) throw ShapeError("batchnorm3d: train mode needs >= 2 values per channel");

  std::vector<double> mean(C), inv_std(C);
  const T* xp = xv.data();
  if (train) {
    for (int c = 0; c < C; ++c) {
      double s = 0.0, ss = 0.0;
      for (int n = 0; n < B; ++n) {
        const T* __restrict__ p = xp + (static_cast<size_t>(n) * C + c) * plane;
#pragma omp simd reduction(+ : s, ss)
        for (size_t i = 0; i < plane; ++i) {
          const double v = p[i];
          s += v;
          ss += v * v;
        }
      }
      const double m = s / static_cast<double>(count);
      const double var = std::max(0.0, ss / static_cast<double>(count) - m * m);
      mean[c] = m;
      inv_std[c] = 1.0 / std::sqrt(var + eps);
      running_mean->value[c] = (1.0 - momentum) * running_mean->value[c] + momentum * m;
      const double unbiased = var * static_cast<double>(count) / static_cast<double>(count - 1);
      running_var->value[c] = (1.0 - momentum) * running_var->value[c] + momentum * unbiased;
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[c] = running_mean->value[c];
      inv_std[c] = 1.0 / std::sqrt(running_var->value[c] + eps);
    }
  }

  TensorT out(xv.shape());
  T* op = out.data();
  const T* gp = gv.data();
  const T* bp = bv.data();
  for (int n = 0; n < B; ++n) {
    for (int c = 0; c < C; ++c) {
      const T* p = xp + (static_cast<size_t>(n) * C + c) * plane;
      T* o = op + (static_cast<size_t>(n) * C + c) * plane;
      const T scale = static_cast<T>(gp[c] * inv_std[c]);
      const T shift = static_cast<T>(bp[c] - gp[c] * inv_std[c] * mean[c]);
      for (size_t i = 0; i < plane; ++i) o[i] = scale * p[i] + shift;
    }
  }

  auto bw = [B, C, plane, count, train, mean, inv_std](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    const int x = nd.parents[0], gamma = nd.parents[1], beta = nd.parents[2];
    const T* go = nd.grad.data();
    const T* xp = t.nodes_[x].value.data();
    const T* gp = t.nodes_[gamma].value.data();
    T* gx = t.maybe_grad(x);
    T* gg = t.maybe_grad(gamma);
    T* gb = t.maybe_grad(beta);

    for (int c = 0; c < C; ++c) {
      double sum_g = 0.0, sum_gx = 0.0; // sum g, sum g*xhat
      for (int n = 0; n < B; ++n) {
        const T* __restrict__ g = go + (static_cast<size_t>(n) * C + c) * plane;
        const T* __restrict__ p = xp + (static_cast<size_t>(n) * C + c) * plane;
#pragma omp simd reduction(+ : sum_g, sum_gx)
        for (size_t i = 0; i < plane; ++i) {
          const double xhat = (static_cast<double>(p[i]) - mean[c]) * inv_std[c];
          sum_g += g[i];
          sum_gx += static_cast<double>(g[i]) * xhat;
        }
      }
      if (gg) gg[c] += static_cast<T>(sum_gx);
      if (gb) gb[c] += static_cast<T>(sum_g);
      if (gx) {
        const double k = gp[c] * inv_std[c];
        const double mg = sum_g / static_cast<double>(count);
        const double mgx = sum_gx / static_cast<double>(count);
        for (int n = 0; n < B; ++n) {
          const T* g = go + (static_cast<size_t>(n) * C + c) * plane;
          const T* p = xp + (static_cast<size_t>(n) * C + c) * plane;
          T* gxc = gx + (static_cast<size_t>(n) * C + c) * plane;
          if (train) {
            for (size_t i = 0; i < plane; ++i) {
              const double xhat = (static_cast<double>(p[i]) - mean[c]) * inv_std[c];
              gxc[i] += static_cast<T>(k * (static_cast<double>(g[i]) - mg - xhat * mgx));
            }
          } else {
            for (size_t i = 0; i < plane; ++i) gxc[i] += static_cast<T>(k * g[i]);
          }
        }
      }
    }
  };
  return push(std::move(out), {x, gamma, beta}, bw, "batchnorm3d");
}

template <typename T>
int BasicTape<T>::leaky_relu(int x, double slope) {
  const TensorT& xv = nodes_[x].value;
  TensorT out(xv.shape());
  const T s = static_cast<T>(slope);
  for (size_t i = 0; i < xv.numel(); ++i) out[i] = xv[i] >= T(0) ? xv[i] : s * xv[i];

  auto bw = [s](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    const int x = nd.parents[0];
    T* gx = t.maybe_grad(x);
    if (!gx) return;
    const T* xp = t.nodes_[x].value.data();
    const T* go = nd.grad.data();
    for (size_t i = 0; i < nd.value.numel(); ++i) gx[i] += xp[i] >= T(0) ? go[i] : s * go[i];
  };
  return push(std::move(out), {x}, bw, "leaky_relu");
}

template <typename T>
int BasicTape<T>::maxpool3d(int x) {
  const TensorT& xv = nodes_[x].value;
  require(xv.rank() == 5, "maxpool3d: input must be [B,C,D,H,W]");
  const int B = xv.dim(0), C = xv.dim(1), D = xv.dim(2), H = xv.dim(3), W = xv.dim(4);
  require(D % 2 == 0 && H % 2 == 0 && W % 2 == 0 && D >= 2,
          "maxpool3d: spatial dims must be even, got " + shape_str(xv.shape()));
  const int Do = D / 2, Ho = H / 2, Wo = W / 2;

  TensorT out({B, C, Do, Ho, Wo});
  std::vector<int32_t> argmax(out.numel());
  const T* xp = xv.data();
  T* op = out.data();
  size_t oi = 0;
  for (int n = 0; n < B; ++n)
    for (int c = 0; c < C; ++c) {
      const size_t base = (static_cast<size_t>(n) * C + c) * D * H * W;
      for (int d = 0; d < Do; ++d)
        for (int h = 0; h < Ho; ++h)
          for (int w = 0; w < Wo; ++w) {
            T best{};
            int32_t best_at = -1;
            for (int dz = 0; dz < 2; ++dz)
              for (int hy = 0; hy < 2; ++hy)
                for (int wx = 0; wx < 2; ++wx) {
                  const size_t idx = base +
                                     (static_cast<size_t>(2 * d + dz) * H + (2 * h + hy)) * W +
                                     (2 * w + wx);
                  if (best_at < 0 || xp[idx] > best) {
                    best = xp[idx];
                    best_at = static_cast<int32_t>(idx);
                  }
                }
            op[oi] = best;
            argmax[oi] = best_at;
            ++oi;
          }
    }

  auto bw = [argmax = std::move(argmax)](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    T* gx = t.maybe_grad(nd.parents[0]);
    if (!gx) return;
    const T* go = nd.grad.data();
    for (size_t i = 0; i < nd.value.numel(); ++i) gx[argmax[i]] += go[i];
  };
  return push(std::move(out), {x}, bw, "maxpool3d");
}

template <typename T>
int BasicTape<T>::dropout(int x, double p, uint64_t seed, uint64_t layer_id, uint64_t step,
                          bool train) {
  if (!train || p == 0.0) return x;
  require(p > 0.0 && p < 1.0, "dropout: p must be in [0, 1)");
  const TensorT& xv = nodes_[x].value;
  const uint64_t key = hash_mix(hash_mix(seed, layer_id), step);
  const T scale = static_cast<T>(1.0 / (1.0 - p));

  std::vector<uint8_t> keep(xv.numel());
  TensorT out(xv.shape());
  for (size_t i = 0; i < xv.numel(); ++i) {
    keep[i] = hash_to_unit(hash_mix(key, i)) >= p ? 1 : 0;
    out[i] = keep[i] ? xv[i] * scale : T(0);
  }

  auto bw = [keep = std::move(keep), scale](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    T* gx = t.maybe_grad(nd.parents[0]);
    if (!gx) return;
    const T* go = nd.grad.data();
    for (size_t i = 0; i < nd.value.numel(); ++i)
      if (keep[i]) gx[i] += go[i] * scale;
  };
  return push(std::move(out), {x}, bw, "dropout");
}

template <typename T>
int BasicTape<T>::linear(int x, int w, int b) {
  const TensorT& xv = nodes_[x].value;
  const TensorT& wv = nodes_[w].value;
  const TensorT& bv = nodes_[b].value;
  require(xv.rank() == 2 && wv.rank() == 2 && bv.rank() == 1,
          "linear: expected x [B,din], w [dout,din], b [dout]");
  require(xv.dim(1) == wv.dim(1) && bv.dim(0) == wv.dim(0), "linear: dimension mismatch");
  const int B = xv.dim(0), din = xv.dim(1), dout = wv.dim(0);

  TensorT out({B, dout});
  for (int n = 0; n < B; ++n) {
    const T* xr = xv.data() + static_cast<size_t>(n) * din;
    T* orow = out.data() + static_cast<size_t>(n) * dout;
    for (int o = 0; o < dout; ++o) {
      const T* wr = wv.data() + static_cast<size_t>(o) * din;
      double acc = bv[o];
      for (int i = 0; i < din; ++i) acc += static_cast<double>(xr[i]) * wr[i];
      orow[o] = static_cast<T>(acc);
    }
  }

  auto bw = [B, din, dout](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    const int x = nd.parents[0], w = nd.parents[1], b = nd.parents[2];
    const T* go = nd.grad.data();
    const T* xp = t.nodes_[x].value.data();
    const T* wp = t.nodes_[w].value.data();
    T* gx = t.maybe_grad(x);
    T* gw = t.maybe_grad(w);
    T* gb = t.maybe_grad(b);
    for (int n = 0; n < B; ++n) {
      const T* g = go + static_cast<size_t>(n) * dout;
      const T* xr = xp + static_cast<size_t>(n) * din;
      for (int o = 0; o < dout; ++o) {
        const T gv = g[o];
        if (gv == T(0)) continue;
        const T* wr = wp + static_cast<size_t>(o) * din;
        if (gx) {
          T* gxr = gx + static_cast<size_t>(n) * din;
          for (int i = 0; i < din; ++i) gxr[i] += gv * wr[i];
        }
        if (gw) {
          T* gwr = gw + static_cast<size_t>(o) * din;
          for (int i = 0; i < din; ++i) gwr[i] += gv * xr[i];
        }
        if (gb) gb[o] += gv;
      }
    }
  };
  return push(std::move(out), {x, w, b}, bw, "linear");
}

template <typename T>
int BasicTape<T>::matmul(int a, int b) {
  const TensorT& av = nodes_[a].value;
  const TensorT& bv = nodes_[b].value;
  require(av.rank() == 2 && bv.rank() == 2 && av.dim(1) == bv.dim(0),
          "matmul: incompatible shapes " + shape_str(av.shape()) + " x " + shape_str(bv.shape()));
  const int m = av.dim(0), k = av.dim(1), n = bv.dim(1);

  TensorT out({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int l = 0; l < k; ++l)
        acc += static_cast<double>(av[static_cast<size_t>(i) * k + l]) *
               bv[static_cast<size_t>(l) * n + j];
      out[static_cast<size_t>(i) * n + j] = static_cast<T>(acc);
    }

  auto bw = [m, k, n](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    const int a = nd.parents[0], b = nd.parents[1];
    const T* go = nd.grad.data();
    const T* ap = t.nodes_[a].value.data();
    const T* bp = t.nodes_[b].value.data();
    T* ga = t.maybe_grad(a);
    T* gb = t.maybe_grad(b);
    if (ga) // ga += go . b^T
      for (int i = 0; i < m; ++i)
        for (int l = 0; l < k; ++l) {
          double acc = 0.0;
          for (int j = 0; j < n; ++j)
            acc += static_cast<double>(go[static_cast<size_t>(i) * n + j]) *
                   bp[static_cast<size_t>(l) * n + j];
          ga[static_cast<size_t>(i) * k + l] += static_cast<T>(acc);
        }
    if (gb) // gb += a^T . go
      for (int l = 0; l < k; ++l)
        for (int j = 0; j < n; ++j) {
          double acc = 0.0;
          for (int i = 0; i < m; ++i)
            acc += static_cast<double>(ap[static_cast<size_t>(i) * k + l]) *
                   go[static_cast<size_t>(i) * n + j];
          gb[static_cast<size_t>(l) * n + j] += static_cast<T>(acc);
        }
  };
  return push(std::move(out), {a, b}, bw, "matmul");
}

template <typename T>
int BasicTape<T>::transpose2d(int a) {
  const TensorT& av = nodes_[a].value;
  require(av.rank() == 2, "transpose2d: expected rank-2 tensor");
  const int m = av.dim(0), n = av.dim(1);
  TensorT out({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<size_t>(j) * m + i] = av[static_cast<size_t>(i) * n + j];

  auto bw = [m, n](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    T* ga = t.maybe_grad(nd.parents[0]);
    if (!ga) return;
    const T* go = nd.grad.data();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        ga[static_cast<size_t>(i) * n + j] += go[static_cast<size_t>(j) * m + i];
  };
  return push(std::move(out), {a}, bw, "transpose2d");
}

template <typename T>
int BasicTape<T>::add(int a, int b) {
  const TensorT& av = nodes_[a].value;
  const TensorT& bv = nodes_[b].value;
  require(av.same_shape(bv), "add: shape mismatch " + shape_str(av.shape()) + " vs " +
                                 shape_str(bv.shape()));
  TensorT out(av.shape());
  for (size_t i = 0; i < av.numel(); ++i) out[i] = av[i] + bv[i];
  auto bw = [](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    const T* go = nd.grad.data();
    for (int pi = 0; pi < 2; ++pi)
      if (T* g = t.maybe_grad(nd.parents[pi]))
        for (size_t i = 0; i < nd.value.numel(); ++i) g[i] += go[i];
  };
  return push(std::move(out), {a, b}, bw, "add");
}

template <typename T>
int BasicTape<T>::sub(int a, int b) {
  const TensorT& av = nodes_[a].value;
  const TensorT& bv = nodes_[b].value;
  require(av.same_shape(bv), "sub: shape mismatch " + shape_str(av.shape()) + " vs " +
                                 shape_str(bv.shape()));
  TensorT out(av.shape());
  for (size_t i = 0; i < av.numel(); ++i) out[i] = av[i] - bv[i];
  auto bw = [](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    const T* go = nd.grad.data();
    if (T* g = t.maybe_grad(nd.parents[0]))
      for (size_t i = 0; i < nd.value.numel(); ++i) g[i] += go[i];
    if (T* g = t.maybe_grad(nd.parents[1]))
      for (size_t i = 0; i < nd.value.numel(); ++i) g[i] -= go[i];
  };
  return push(std::move(out), {a, b}, bw, "sub");
}

template <typename T>
int BasicTape<T>::mul(int a, int b) {
  const TensorT& av = nodes_[a].value;
  const TensorT& bv = nodes_[b].value;
  require(av.same_shape(bv), "mul: shape mismatch");
  TensorT out(av.shape());
  for (size_t i = 0; i < av.numel(); ++i) out[i] = av[i] * bv[i];
  auto bw = [](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    const T* go = nd.grad.data();
    const T* ap = t.nodes_[nd.parents[0]].value.data();
    const T* bp = t.nodes_[nd.parents[1]].value.data();
    if (T* g = t.maybe_grad(nd.parents[0]))
      for (size_t i = 0; i < nd.value.numel(); ++i) g[i] += go[i] * bp[i];
    if (T* g = t.maybe_grad(nd.parents[1]))
      for (size_t i = 0; i < nd.value.numel(); ++i) g[i] += go[i] * ap[i];
  };
  return push(std::move(out), {a, b}, bw, "mul");
}

template <typename T>
int BasicTape<T>::add_scalar(int a, double c) {
  const TensorT& av = nodes_[a].value;
  TensorT out(av.shape());
  const T cc = static_cast<T>(c);
  for (size_t i = 0; i < av.numel(); ++i) out[i] = av[i] + cc;
  auto bw = [](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    if (T* g = t.maybe_grad(nd.parents[0])) {
      const T* go = nd.grad.data();
      for (size_t i = 0; i < nd.value.numel(); ++i) g[i] += go[i];
    }
  };
  return push(std::move(out), {a}, bw, "add_scalar");
}

template <typename T>
int BasicTape<T>::mul_scalar(int a, double c) {
  const TensorT& av = nodes_[a].value;
  TensorT out(av.shape());
  const T cc = static_cast<T>(c);
  for (size_t i = 0; i < av.numel(); ++i) out[i] = av[i] * cc;
  auto bw = [cc](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    if (T* g = t.maybe_grad(nd.parents[0])) {
      const T* go = nd.grad.data();
      for (size_t i = 0; i < nd.value.numel(); ++i) g[i] += go[i] * cc;
    }
  };
  return push(std::move(out), {a}, bw, "mul_scalar");
}

template <typename T>
int BasicTape<T>::reciprocal(int a) {
  const TensorT& av = nodes_[a].value;
  TensorT out(av.shape());
  for (size_t i = 0; i < av.numel(); ++i) out[i] = T(1) / av[i];
  auto bw = [](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    if (T* g = t.maybe_grad(nd.parents[0])) {
      const T* go = nd.grad.data();
      const T* y = nd.value.data(); // 1/x
      for (size_t i = 0; i < nd.value.numel(); ++i) g[i] -= go[i] * y[i] * y[i];
    }
  };
  return push(std::move(out), {a}, bw, "reciprocal");
}

template <typename T>
int BasicTape<T>::sum(int a) {
  const TensorT& av = nodes_[a].value;
  double acc = 0.0;
  for (size_t i = 0; i < av.numel(); ++i) acc += av[i];
  auto bw = [](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    if (T* g = t.maybe_grad(nd.parents[0])) {
      const T go = nd.grad[0];
      const size_t n = t.nodes_[nd.parents[0]].value.numel();
      for (size_t i = 0; i < n; ++i) g[i] += go;
    }
  };
  return push(TensorT::scalar(static_cast<T>(acc)), {a}, bw, "sum");
}

template <typename T>
int BasicTape<T>::mean(int a) {
  const TensorT& av = nodes_[a].value;
  require(av.numel() > 0, "mean: empty tensor");
  double acc = 0.0;
  for (size_t i = 0; i < av.numel(); ++i) acc += av[i];
  const double scale = 1.0 / static_cast<double>(av.numel());
  auto bw = [scale](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    if (T* g = t.maybe_grad(nd.parents[0])) {
      const T go = static_cast<T>(nd.grad[0] * scale);
      const size_t n = t.nodes_[nd.parents[0]].value.numel();
      for (size_t i = 0; i < n; ++i) g[i] += go;
    }
  };
  return push(TensorT::scalar(static_cast<T>(acc * scale)), {a}, bw, "mean");
}

template <typename T>
int BasicTape<T>::frobenius_sq(int a) {
  const TensorT& av = nodes_[a].value;
  double acc = 0.0;
  for (size_t i = 0; i < av.numel(); ++i) acc += static_cast<double>(av[i]) * av[i];
  auto bw = [](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    if (T* g = t.maybe_grad(nd.parents[0])) {
      const T go = nd.grad[0];
      const TensorT& x = t.nodes_[nd.parents[0]].value;
      for (size_t i = 0; i < x.numel(); ++i) g[i] += T(2) * go * x[i];
    }
  };
  return push(TensorT::scalar(static_cast<T>(acc)), {a}, bw, "frobenius_sq");
}

template <typename T>
int BasicTape<T>::row_sumsq(int a) {
  const TensorT& av = nodes_[a].value;
  require(av.rank() >= 1, "row_sumsq: need at least rank 1");
  const int B = av.dim(0);
  require(B > 0, "row_sumsq: empty batch");
  const size_t per = av.numel() / static_cast<size_t>(B);
  TensorT out({B});
  for (int n = 0; n < B; ++n) {
    double acc = 0.0;
    const T* p = av.data() + static_cast<size_t>(n) * per;
    for (size_t i = 0; i < per; ++i) acc += static_cast<double>(p[i]) * p[i];
    out[n] = static_cast<T>(acc);
  }
  auto bw = [B, per](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    if (T* g = t.maybe_grad(nd.parents[0])) {
      const T* go = nd.grad.data();
      const T* xp = t.nodes_[nd.parents[0]].value.data();
      for (int n = 0; n < B; ++n) {
        const T gn = go[n];
        const T* x = xp + static_cast<size_t>(n) * per;
        T* gr = g + static_cast<size_t>(n) * per;
        for (size_t i = 0; i < per; ++i) gr[i] += T(2) * gn * x[i];
      }
    }
  };
  return push(std::move(out), {a}, bw, "row_sumsq");
}

template <typename T>
int BasicTape<T>::reshape(int a, std::vector<int> shape) {
  const TensorT& av = nodes_[a].value;
  require(shape_numel(shape) == av.numel(),
          "reshape: element count mismatch " + shape_str(av.shape()) + " -> " + shape_str(shape));
  TensorT out(std::move(shape), av.vec());
  auto bw = [](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    if (T* g = t.maybe_grad(nd.parents[0])) {
      const T* go = nd.grad.data();
      for (size_t i = 0; i < nd.value.numel(); ++i) g[i] += go[i];
    }
  };
  return push(std::move(out), {a}, bw, "reshape");
}

template <typename T>
int BasicTape<T>::softmax_cross_entropy(int logits, std::vector<int> targets) {
  const TensorT& lv = nodes_[logits].value;
  require(lv.rank() == 2, "softmax_cross_entropy: logits must be [B,C]");
  const int B = lv.dim(0), C = lv.dim(1);
  require(static_cast<int>(targets.size()) == B, "softmax_cross_entropy: target count mismatch");
  for (int t : targets)
    require(t >= 0 && t < C, "softmax_cross_entropy: target class out of range");

  TensorT probs({B, C});
  double loss = 0.0;
  for (int n = 0; n < B; ++n) {
    const T* row = lv.data() + static_cast<size_t>(n) * C;
    double m = row[0];
    for (int c = 1; c < C; ++c) m = std::max(m, static_cast<double>(row[c]));
    double z = 0.0;
    for (int c = 0; c < C; ++c) z += std::exp(static_cast<double>(row[c]) - m);
    const double lse = m + std::log(z);
    loss += lse - static_cast<double>(row[targets[n]]);
    for (int c = 0; c < C; ++c)
      probs[static_cast<size_t>(n) * C + c] =
          static_cast<T>(std::exp(static_cast<double>(row[c]) - lse));
  }
  loss /= static_cast<double>(B);

  auto bw = [B, C, targets = std::move(targets), probs = std::move(probs)](BasicTape& t,
                                                                           int self) {
    Node& nd = t.nodes_[self];
    if (T* g = t.maybe_grad(nd.parents[0])) {
      const T go = static_cast<T>(nd.grad[0] / static_cast<T>(B));
      for (int n = 0; n < B; ++n)
        for (int c = 0; c < C; ++c) {
          const T p = probs[static_cast<size_t>(n) * C + c];
          g[static_cast<size_t>(n) * C + c] += go * (p - (c == targets[n] ? T(1) : T(0)));
        }
    }
  };
  return push(TensorT::scalar(static_cast<T>(loss)), {logits}, bw, "softmax_cross_entropy");
}

template <typename T>
int BasicTape<T>::mse(int pred, TensorT target) {
  const TensorT& pv = nodes_[pred].value;
  require(pv.same_shape(target), "mse: prediction/target shape mismatch");
  require(pv.numel() > 0, "mse: empty tensors");
  double acc = 0.0;
  for (size_t i = 0; i < pv.numel(); ++i) {
    const double d = static_cast<double>(pv[i]) - target[i];
    acc += d * d;
  }
  const double scale = 1.0 / static_cast<double>(pv.numel());
  auto bw = [target = std::move(target), scale](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    if (T* g = t.maybe_grad(nd.parents[0])) {
      const TensorT& p = t.nodes_[nd.parents[0]].value;
      const T go = nd.grad[0];
      for (size_t i = 0; i < p.numel(); ++i)
        g[i] += static_cast<T>(2.0 * scale * go * (p[i] - target[i]));
    }
  };
  return push(TensorT::scalar(static_cast<T>(acc * scale)), {pred}, bw, "mse");
}

template <typename T>
int BasicTape<T>::mix_rows(int v, int w) {
  const TensorT& vv = nodes_[v].value;
  const TensorT& wv = nodes_[w].value;
  require(vv.rank() == 3 && vv.dim(2) == 3, "mix_rows: input must be [B,din,3]");
  require(wv.rank() == 2 && wv.dim(1) == vv.dim(1),
          "mix_rows: weight must be [dout,din] with din = " + std::to_string(vv.dim(1)));
  const int B = vv.dim(0), din = vv.dim(1), dout = wv.dim(0);

  TensorT out({B, dout, 3});
  for (int n = 0; n < B; ++n) {
    const T* vb = vv.data() + static_cast<size_t>(n) * din * 3;
    T* ob = out.data() + static_cast<size_t>(n) * dout * 3;
    for (int o = 0; o < dout; ++o) {
      const T* wr = wv.data() + static_cast<size_t>(o) * din;
      double a0 = 0.0, a1 = 0.0, a2 = 0.0;
      for (int i = 0; i < din; ++i) {
        const double wi = wr[i];
        a0 += wi * vb[i * 3 + 0];
        a1 += wi * vb[i * 3 + 1];
        a2 += wi * vb[i * 3 + 2];
      }
      ob[o * 3 + 0] = static_cast<T>(a0);
      ob[o * 3 + 1] = static_cast<T>(a1);
      ob[o * 3 + 2] = static_cast<T>(a2);
    }
  }

  auto bw = [B, din, dout](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    const int v = nd.parents[0], w = nd.parents[1];
    const T* go = nd.grad.data();
    const T* vp = t.nodes_[v].value.data();
    const T* wp = t.nodes_[w].value.data();
    T* gv = t.maybe_grad(v);
    T* gw = t.maybe_grad(w);
    for (int n = 0; n < B; ++n) {
      const T* gb = go + static_cast<size_t>(n) * dout * 3;
      const T* vb = vp + static_cast<size_t>(n) * din * 3;
      T* gvb = gv ? gv + static_cast<size_t>(n) * din * 3 : nullptr;
      for (int o = 0; o < dout; ++o) {
        const T g0 = gb[o * 3 + 0], g1 = gb[o * 3 + 1], g2 = gb[o * 3 + 2];
        const T* wr = wp + static_cast<size_t>(o) * din;
        if (gvb)
          for (int i = 0; i < din; ++i) {
            gvb[i * 3 + 0] += wr[i] * g0;
            gvb[i * 3 + 1] += wr[i] * g1;
            gvb[i * 3 + 2] += wr[i] * g2;
          }
        if (gw) {
          T* gwr = gw + static_cast<size_t>(o) * din;
          for (int i = 0; i < din; ++i)
            gwr[i] += g0 * vb[i * 3 + 0] + g1 * vb[i * 3 + 1] + g2 * vb[i * 3 + 2];
        }
      }
    }
  };
  return push(std::move(out), {v, w}, bw, "mix_rows");
}

template <typename T>
int BasicTape<T>::vn_gate(int q, int k) {
  const TensorT& qv = nodes_[q].value;
  const TensorT& kv = nodes_[k].value;
  require(qv.rank() == 3 && qv.dim(2) == 3, "vn_gate: q must be [B,d,3]");
  require(qv.same_shape(kv), "vn_gate: q/k shape mismatch");
  const size_t rows = qv.numel() / 3;
  constexpr double kTinyNorm = 1e-12;

  TensorT out(qv.shape());
  for (size_t r = 0; r < rows; ++r) {
    const T* qr = qv.data() + r * 3;
    const T* kr = kv.data() + r * 3;
    T* o = out.data() + r * 3;
    const double s = static_cast<double>(qr[0]) * kr[0] + static_cast<double>(qr[1]) * kr[1] +
                     static_cast<double>(qr[2]) * kr[2];
    const double n2 = static_cast<double>(kr[0]) * kr[0] + static_cast<double>(kr[1]) * kr[1] +
                      static_cast<double>(kr[2]) * kr[2];
    if (s >= 0.0 || n2 < kTinyNorm) {
      o[0] = qr[0];
      o[1] = qr[1];
      o[2] = qr[2];
    } else {
      const double f = s / n2;
      o[0] = static_cast<T>(qr[0] - f * kr[0]);
      o[1] = static_cast<T>(qr[1] - f * kr[1]);
      o[2] = static_cast<T>(qr[2] - f * kr[2]);
    }
  }

  auto bw = [rows](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    const int q = nd.parents[0], k = nd.parents[1];
    const T* go = nd.grad.data();
    const T* qp = t.nodes_[q].value.data();
    const T* kp = t.nodes_[k].value.data();
    T* gq = t.maybe_grad(q);
    T* gk = t.maybe_grad(k);
    constexpr double kTinyNorm = 1e-12;
    for (size_t r = 0; r < rows; ++r) {
      const T* qr = qp + r * 3;
      const T* kr = kp + r * 3;
      const T* g = go + r * 3;
      const double s = static_cast<double>(qr[0]) * kr[0] + static_cast<double>(qr[1]) * kr[1] +
                       static_cast<double>(qr[2]) * kr[2];
      const double n2 = static_cast<double>(kr[0]) * kr[0] + static_cast<double>(kr[1]) * kr[1] +
                        static_cast<double>(kr[2]) * kr[2];
      if (s >= 0.0 || n2 < kTinyNorm) {
        if (gq) {
          gq[r * 3 + 0] += g[0];
          gq[r * 3 + 1] += g[1];
          gq[r * 3 + 2] += g[2];
        }
        continue;
      }
      const double gk_dot = static_cast<double>(g[0]) * kr[0] + static_cast<double>(g[1]) * kr[1] +
                            static_cast<double>(g[2]) * kr[2];
      if (gq)
        for (int c = 0; c < 3; ++c)
          gq[r * 3 + c] += static_cast<T>(g[c] - (gk_dot / n2) * kr[c]);
      if (gk)
        for (int c = 0; c < 3; ++c)
          gk[r * 3 + c] += static_cast<T>(-(gk_dot / n2) * qr[c] +
                                          (2.0 * s * gk_dot / (n2 * n2)) * kr[c] -
                                          (s / n2) * g[c]);
    }
  };
  return push(std::move(out), {q, k}, bw, "vn_gate");
}

template <typename T>
int BasicTape<T>::rotate_vecs(int v, const std::vector<RotationMatrix>& rs, bool transposed) {
  const TensorT& vv = nodes_[v].value;
  require(vv.rank() == 3 && vv.dim(2) == 3, "rotate_vecs: input must be [B,d,3]");
  require(static_cast<int>(rs.size()) == vv.dim(0), "rotate_vecs: rotation count mismatch");
  const int B = vv.dim(0), d = vv.dim(1);

  // Row convention: out_row = row . R (or row . R^T when transposed).
  auto apply = [d](const T* in, T* out_p, const std::array<double, 9>& m, bool tr) {
    for (int r = 0; r < d; ++r) {
      const double a = in[r * 3 + 0], b = in[r * 3 + 1], c = in[r * 3 + 2];
      if (!tr) {
        out_p[r * 3 + 0] = static_cast<T>(a * m[0] + b * m[3] + c * m[6]);
        out_p[r * 3 + 1] = static_cast<T>(a * m[1] + b * m[4] + c * m[7]);
        out_p[r * 3 + 2] = static_cast<T>(a * m[2] + b * m[5] + c * m[8]);
      } else {
        out_p[r * 3 + 0] = static_cast<T>(a * m[0] + b * m[1] + c * m[2]);
        out_p[r * 3 + 1] = static_cast<T>(a * m[3] + b * m[4] + c * m[5]);
        out_p[r * 3 + 2] = static_cast<T>(a * m[6] + b * m[7] + c * m[8]);
      }
    }
  };

  TensorT out(vv.shape());
  std::vector<std::array<double, 9>> mats(rs.size());
  for (size_t i = 0; i < rs.size(); ++i) mats[i] = rs[i].entries();
  for (int n = 0; n < B; ++n)
    apply(vv.data() + static_cast<size_t>(n) * d * 3, out.data() + static_cast<size_t>(n) * d * 3,
          mats[n], transposed);

  auto bw = [B, d, mats = std::move(mats), transposed, apply](BasicTape& t, int self) {
    Node& nd = t.nodes_[self];
    T* gv = t.maybe_grad(nd.parents[0]);
    if (!gv) return;
    const T* go = nd.grad.data();
    // d(row.R)/d(row) pulls the gradient back through R^T.
    std::vector<T> tmp(static_cast<size_t>(d) * 3);
    for (int n = 0; n < B; ++n) {
      apply(go + static_cast<size_t>(n) * d * 3, tmp.data(), mats[n], !transposed);
      T* g = gv + static_cast<size_t>(n) * d * 3;
      for (size_t i = 0; i < tmp.size(); ++i) g[i] += tmp[i];
    }
  };
  return push(std::move(out), {v}, bw, "rotate_vecs");
}

template <typename T>
void BasicTape<T>::backward(int loss) {
  Node& ln = nodes_[loss];
  if (ln.value.numel() != 1)
    throw ShapeError("backward: loss must be a scalar, got " + shape_str(ln.value.shape()));
  grad_of(loss)[0] = T(1);
  for (int i = loss; i >= 0; --i) {
    Node& nd = nodes_[i];
    if (nd.grad.vec().empty() || !nd.backward_fn || !nd.needs_grad) continue;
    nd.backward_fn(*this, i);
  }
  for (Node& nd : nodes_) {
    if (!nd.bound || nd.grad.vec().empty()) continue;
    T* g = nd.bound->grad.data();
    for (size_t i = 0; i < nd.grad.numel(); ++i) g[i] += nd.grad[i];
  }
}

using Tape = BasicTape<float>;

} // namespace soe
