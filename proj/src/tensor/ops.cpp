#include "dmae/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dmae/errors.hpp"
#include "dmae/kernels/kernels.hpp"

namespace dmae::tensor {

namespace {

struct MatrixView {
  std::size_t rows;
  std::size_t cols;
};

MatrixView as_matrix(const Shape& s) {
  if (s.empty()) return {1, 1};
  const std::size_t cols = s.back();
  return {cols == 0 ? 0 : numel(s) / cols, cols};
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

template <class T>
std::vector<T>* grad_of(Node<T>& out, std::size_t parent) {
  Node<T>& p = *out.parents[parent];
  return p.requires_grad ? &p.grad_buffer() : nullptr;
}

}  // namespace

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() < 2 || b.rank() < 2) throw DimensionError("matmul: operands must have rank >= 2");
  const std::size_t m = a.shape()[a.rank() - 2];
  const std::size_t k = a.shape().back();
  const std::size_t kb = b.shape()[b.rank() - 2];
  const std::size_t n = b.shape().back();
  if (k != kb) {
    throw DimensionError("matmul: inner dimensions differ " + shape_str(a.shape()) + " @ " + shape_str(b.shape()));
  }
  const bool shared_b = b.rank() == 2;
  Shape lead(a.shape().begin(), a.shape().end() - 2);
  if (!shared_b) {
    Shape lead_b(b.shape().begin(), b.shape().end() - 2);
    if (lead != lead_b) {
      throw DimensionError("matmul: batch dims differ " + shape_str(a.shape()) + " @ " + shape_str(b.shape()));
    }
  }
  const std::size_t batch = numel(lead);
  Shape out_shape = lead;
  out_shape.push_back(m);
  out_shape.push_back(n);

  std::vector<T> out(batch * m * n);
  const T* ad = a.data().data();
  const T* bd = b.data().data();
  if (shared_b) {
    kernels::gemm(false, false, batch * m, n, k, T(1), ad, k, bd, n, T(0), out.data(), n);
  } else {
    for (std::size_t i = 0; i < batch; ++i) {
      kernels::gemm(false, false, m, n, k, T(1), ad + i * m * k, k, bd + i * k * n, n, T(0), out.data() + i * m * n, n);
    }
  }

  return make_result<T>(std::move(out_shape), std::move(out), {a, b}, [=](Node<T>& self) {
    const T* g = self.grad.data();
    const Node<T>& an = *self.parents[0];
    const Node<T>& bn = *self.parents[1];
    if (auto* ga = grad_of(self, 0)) {
      if (shared_b) {
        kernels::gemm(false, true, batch * m, k, n, T(1), g, n, bn.data.data(), n, T(1), ga->data(), k);
      } else {
        for (std::size_t i = 0; i < batch; ++i) {
          kernels::gemm(false, true, m, k, n, T(1), g + i * m * n, n, bn.data.data() + i * k * n, n, T(1),
                        ga->data() + i * m * k, k);
        }
      }
    }
    if (auto* gb = grad_of(self, 1)) {
      if (shared_b) {
        kernels::gemm(true, false, k, n, batch * m, T(1), an.data.data(), k, g, n, T(1), gb->data(), n);
      } else {
        for (std::size_t i = 0; i < batch; ++i) {
          kernels::gemm(true, false, k, n, m, T(1), an.data.data() + i * m * k, k, g + i * m * n, n, T(1),
                        gb->data() + i * k * n, n);
        }
      }
    }
  });
}

template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (weight.rank() != 2) throw DimensionError("linear: weight must be [in, out]");
  const auto [rows, in] = as_matrix(x.shape());
  const std::size_t out_dim = weight.dim(1);
  if (x.rank() == 0 || in != weight.dim(0)) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " vs weight " + shape_str(weight.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != out_dim)) {
    throw DimensionError("linear: bias " + shape_str(bias.shape()) + " vs out " + std::to_string(out_dim));
  }
  std::vector<T> out(rows * out_dim);
  if (has_bias) {
    for (std::size_t r = 0; r < rows; ++r) std::copy(bias.data().begin(), bias.data().end(), out.begin() + r * out_dim);
  }
  kernels::gemm(false, false, rows, out_dim, in, T(1), x.data().data(), in, weight.data().data(), out_dim,
                has_bias ? T(1) : T(0), out.data(), out_dim);
  Shape out_shape = x.shape();
  out_shape.back() = out_dim;

  std::vector<Tensor<T>> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return make_result<T>(std::move(out_shape), std::move(out), std::move(parents), [=](Node<T>& self) {
    const T* g = self.grad.data();
    const Node<T>& xn = *self.parents[0];
    const Node<T>& wn = *self.parents[1];
    if (auto* gx = grad_of(self, 0)) {
      kernels::gemm(false, true, rows, in, out_dim, T(1), g, out_dim, wn.data.data(), out_dim, T(1), gx->data(), in);
    }
    if (auto* gw = grad_of(self, 1)) {
      kernels::gemm(true, false, in, out_dim, rows, T(1), xn.data.data(), in, g, out_dim, T(1), gw->data(), out_dim);
    }
    if (has_bias) {
      if (auto* gb = grad_of(self, 2)) {
        for (std::size_t r = 0; r < rows; ++r) kernels::axpy(out_dim, T(1), g + r * out_dim, gb->data());
      }
    }
  });
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (!is_suffix(b.shape(), a.shape())) {
    throw DimensionError("add: cannot broadcast " + shape_str(b.shape()) + " onto " + shape_str(a.shape()));
  }
  const std::size_t n = a.numel();
  const std::size_t bn = b.numel();
  const std::size_t repeats = bn == 0 ? 0 : n / bn;
  std::vector<T> out(n);
  for (std::size_t r = 0; r < repeats; ++r) {
    kernels::add(bn, a.data().data() + r * bn, b.data().data(), out.data() + r * bn);
  }
  return make_result<T>(a.shape(), std::move(out), {a, b}, [=](Node<T>& self) {
    const T* g = self.grad.data();
    if (auto* ga = grad_of(self, 0)) kernels::axpy(n, T(1), g, ga->data());
    if (auto* gb = grad_of(self, 1)) {
      for (std::size_t r = 0; r < repeats; ++r) kernels::axpy(bn, T(1), g + r * bn, gb->data());
    }
  });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  const std::size_t n = a.numel();
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] - b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [=](Node<T>& self) {
    const T* g = self.grad.data();
    if (auto* ga = grad_of(self, 0)) kernels::axpy(n, T(1), g, ga->data());
    if (auto* gb = grad_of(self, 1)) kernels::axpy(n, T(-1), g, gb->data());
  });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  const std::size_t n = a.numel();
  std::vector<T> out(n);
  kernels::mul(n, a.data().data(), b.data().data(), out.data());
  return make_result<T>(a.shape(), std::move(out), {a, b}, [=](Node<T>& self) {
    const T* g = self.grad.data();
    const T* ad = self.parents[0]->data.data();
    const T* bd = self.parents[1]->data.data();
    if (auto* ga = grad_of(self, 0)) {
      for (std::size_t i = 0; i < n; ++i) (*ga)[i] += g[i] * bd[i];
    }
    if (auto* gb = grad_of(self, 1)) {
      for (std::size_t i = 0; i < n; ++i) (*gb)[i] += g[i] * ad[i];
    }
  });
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  std::vector<T> out(x.data().begin(), x.data().end());
  kernels::scale(out.size(), factor, out.data());
  return make_result<T>(x.shape(), std::move(out), {x}, [factor](Node<T>& self) {
    if (auto* gx = grad_of(self, 0)) kernels::axpy(self.grad.size(), factor, self.grad.data(), gx->data());
  });
}

template <class T>
Tensor<T> square(const Tensor<T>& x) {
  const std::size_t n = x.numel();
  std::vector<T> out(n);
  kernels::mul(n, x.data().data(), x.data().data(), out.data());
  return make_result<T>(x.shape(), std::move(out), {x}, [n](Node<T>& self) {
    if (auto* gx = grad_of(self, 0)) {
      const T* xd = self.parents[0]->data.data();
      for (std::size_t i = 0; i < n; ++i) (*gx)[i] += T(2) * xd[i] * self.grad[i];
    }
  });
}

template <class T>
Tensor<T> gelu(const Tensor<T>& x) {
  const std::size_t n = x.numel();
  std::vector<T> out(n);
  const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  for (std::size_t i = 0; i < n; ++i) {
    const T v = x.data()[i];
    out[i] = T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2));
  }
  return make_result<T>(x.shape(), std::move(out), {x}, [n, inv_sqrt2](Node<T>& self) {
    if (auto* gx = grad_of(self, 0)) {
      const T* xd = self.parents[0]->data.data();
      const T inv_sqrt_2pi = std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
      for (std::size_t i = 0; i < n; ++i) {
        const T v = xd[i];
        const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
        const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
        (*gx)[i] += self.grad[i] * (cdf + v * pdf);
      }
    }
  });
}

template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  const auto [rows, cols] = as_matrix(x.shape());
  if (gamma.numel() != cols || beta.numel() != cols) {
    throw DimensionError("layer_norm: affine params must have " + std::to_string(cols) + " entries");
  }
  if (!(eps > T(0))) throw ConfigError("layer_norm: eps must be positive");
  std::vector<T> out(rows * cols);
  std::vector<T> xhat(rows * cols);
  std::vector<T> rstd(rows);
  const T* xd = x.data().data();
  const T* gd = gamma.data().data();
  const T* bd = beta.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xd + r * cols;
    T mu = 0;
    for (std::size_t c = 0; c < cols; ++c) mu += row[c];
    mu /= T(cols);
    T var = 0;
    for (std::size_t c = 0; c < cols; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= T(cols);
    const T rs = T(1) / std::sqrt(var + eps);
    rstd[r] = rs;
    for (std::size_t c = 0; c < cols; ++c) {
      const T h = (row[c] - mu) * rs;
      xhat[r * cols + c] = h;
      out[r * cols + c] = h * gd[c] + bd[c];
    }
  }
  return make_result<T>(x.shape(), std::move(out), {x, gamma, beta},
                        [rows, cols, xhat = std::move(xhat), rstd = std::move(rstd)](Node<T>& self) {
                          const T* g = self.grad.data();
                          const T* gd = self.parents[1]->data.data();
                          if (auto* gg = grad_of(self, 1)) {
                            for (std::size_t r = 0; r < rows; ++r)
                              for (std::size_t c = 0; c < cols; ++c) (*gg)[c] += g[r * cols + c] * xhat[r * cols + c];
                          }
                          if (auto* gb = grad_of(self, 2)) {
                            for (std::size_t r = 0; r < rows; ++r) kernels::axpy(cols, T(1), g + r * cols, gb->data());
                          }
                          if (auto* gx = grad_of(self, 0)) {
                            for (std::size_t r = 0; r < rows; ++r) {
                              T mean_dh = 0, mean_dh_h = 0;
                              for (std::size_t c = 0; c < cols; ++c) {
                                const T dh = g[r * cols + c] * gd[c];
                                mean_dh += dh;
                                mean_dh_h += dh * xhat[r * cols + c];
                              }
                              mean_dh /= T(cols);
                              mean_dh_h /= T(cols);
                              for (std::size_t c = 0; c < cols; ++c) {
                                const T dh = g[r * cols + c] * gd[c];
                                (*gx)[r * cols + c] += rstd[r] * (dh - mean_dh - xhat[r * cols + c] * mean_dh_h);
                              }
                            }
                          }
                        });
}

namespace {

template <class T>
void softmax_rows_inplace(T* data, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = data + r * cols;
    const T mx = *std::max_element(row, row + cols);
    T total = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      total += row[c];
    }
    const T inv = T(1) / total;
    for (std::size_t c = 0; c < cols; ++c) row[c] *= inv;
  }
}

// dx = y * (dy - <dy, y>) per row, accumulated into dx.
template <class T>
void softmax_rows_backward(const T* y, const T* dy, T* dx, std::size_t rows, std::size_t cols, T factor) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* yr = y + r * cols;
    const T* gr = dy + r * cols;
    const T inner = kernels::dot(cols, yr, gr);
    T* out = dx + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += factor * yr[c] * (gr[c] - inner);
  }
}

}  // namespace

template <class T>
Tensor<T> softmax(const Tensor<T>& x) {
  const auto [rows, cols] = as_matrix(x.shape());
  std::vector<T> out(x.data().begin(), x.data().end());
  softmax_rows_inplace(out.data(), rows, cols);
  return make_result<T>(x.shape(), std::move(out), {x}, [rows, cols](Node<T>& self) {
    if (auto* gx = grad_of(self, 0)) {
      softmax_rows_backward(self.data.data(), self.grad.data(), gx->data(), rows, cols, T(1));
    }
  });
}

template <class T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::size_t> labels) {
  if (logits.rank() != 2) throw DimensionError("softmax_cross_entropy: logits must be [n, k]");
  const std::size_t n = logits.dim(0);
  const std::size_t k = logits.dim(1);
  if (labels.size() != n) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " rows");
  }
  if (n == 0) throw DimensionError("softmax_cross_entropy: empty batch");
  std::vector<T> probs(logits.data().begin(), logits.data().end());
  T total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= k) {
      throw IndexError("softmax_cross_entropy: label " + std::to_string(labels[i]) + " outside [0, " +
                       std::to_string(k) + ")");
    }
    const T* row = logits.data().data() + i * k;
    const T mx = *std::max_element(row, row + k);
    T acc = 0;
    for (std::size_t c = 0; c < k; ++c) acc += std::exp(row[c] - mx);
    const T lse = mx + std::log(acc);
    total += lse - row[labels[i]];
  }
  softmax_rows_inplace(probs.data(), n, k);
  std::vector<std::size_t> saved_labels(labels.begin(), labels.end());
  return make_result<T>(Shape{}, std::vector<T>{total / T(n)}, {logits},
                        [n, k, probs = std::move(probs), saved_labels = std::move(saved_labels)](Node<T>& self) {
                          if (auto* gx = grad_of(self, 0)) {
                            const T g = self.grad[0] / T(n);
                            for (std::size_t i = 0; i < n; ++i) {
                              for (std::size_t c = 0; c < k; ++c) (*gx)[i * k + c] += g * probs[i * k + c];
                              (*gx)[i * k + saved_labels[i]] -= g;
                            }
                          }
                        });
}

template <class T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, std::size_t n_heads,
                    std::size_t seq_len) {
  require_same_shape(q.shape(), k.shape(), "attention");
  require_same_shape(q.shape(), v.shape(), "attention");
  const auto [rows, d_model] = as_matrix(q.shape());
  if (n_heads == 0 || d_model % n_heads != 0) {
    throw ConfigError("attention: model dim " + std::to_string(d_model) + " not divisible by " +
                      std::to_string(n_heads) + " heads");
  }
  if (seq_len == 0 || rows % seq_len != 0) {
    throw DimensionError("attention: " + std::to_string(rows) + " rows not a multiple of seq_len " +
                         std::to_string(seq_len));
  }
  const std::size_t batch = rows / seq_len;
  const std::size_t hd = d_model / n_heads;
  const T scale_factor = T(1) / std::sqrt(T(hd));
  const std::size_t tt = seq_len * seq_len;

  std::vector<T> probs(batch * n_heads * tt);
  std::vector<T> out(rows * d_model);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < n_heads; ++h) {
      const std::size_t off = b * seq_len * d_model + h * hd;
      T* p = probs.data() + (b * n_heads + h) * tt;
      kernels::gemm(false, true, seq_len, seq_len, hd, scale_factor, q.data().data() + off, d_model,
                    k.data().data() + off, d_model, T(0), p, seq_len);
      softmax_rows_inplace(p, seq_len, seq_len);
      kernels::gemm(false, false, seq_len, hd, seq_len, T(1), p, seq_len, v.data().data() + off, d_model, T(0),
                    out.data() + off, d_model);
    }
  }

  return make_result<T>(q.shape(), std::move(out), {q, k, v},
                        [=, probs = std::move(probs)](Node<T>& self) {
                          const T* qd = self.parents[0]->data.data();
                          const T* kd = self.parents[1]->data.data();
                          const T* vd = self.parents[2]->data.data();
                          auto* gq = grad_of(self, 0);
                          auto* gk = grad_of(self, 1);
                          auto* gv = grad_of(self, 2);
                          std::vector<T> dp(tt);
                          std::vector<T> ds(tt);
                          for (std::size_t b = 0; b < batch; ++b) {
                            for (std::size_t h = 0; h < n_heads; ++h) {
                              const std::size_t off = b * seq_len * d_model + h * hd;
                              const T* p = probs.data() + (b * n_heads + h) * tt;
                              const T* go = self.grad.data() + off;
                              if (gv) {
                                kernels::gemm(true, false, seq_len, hd, seq_len, T(1), p, seq_len, go, d_model, T(1),
                                              gv->data() + off, d_model);
                              }
                              if (!gq && !gk) continue;
                              kernels::gemm(false, true, seq_len, seq_len, hd, T(1), go, d_model, vd + off, d_model,
                                            T(0), dp.data(), seq_len);
                              std::fill(ds.begin(), ds.end(), T(0));
                              softmax_rows_backward(p, dp.data(), ds.data(), seq_len, seq_len, T(1));
                              if (gq) {
                                kernels::gemm(false, false, seq_len, hd, seq_len, scale_factor, ds.data(), seq_len,
                                              kd + off, d_model, T(1), gq->data() + off, d_model);
                              }
                              if (gk) {
                                kernels::gemm(true, false, seq_len, hd, seq_len, scale_factor, ds.data(), seq_len,
                                              qd + off, d_model, T(1), gk->data() + off, d_model);
                              }
                            }
                          }
                        });
}

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return make_result<T>(std::move(shape), std::move(out), {x}, [](Node<T>& self) {
    if (auto* gx = grad_of(self, 0)) kernels::axpy(self.grad.size(), T(1), self.grad.data(), gx->data());
  });
}

template <class T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> index) {
  if (x.rank() != 2) throw DimensionError("gather_rows: expected a matrix, got " + shape_str(x.shape()));
  const std::size_t rows = x.dim(0);
  const std::size_t cols = x.dim(1);
  std::vector<std::size_t> idx(index.begin(), index.end());
  std::vector<T> out(idx.size() * cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= rows) {
      throw IndexError("gather_rows: index " + std::to_string(idx[i]) + " >= " + std::to_string(rows));
    }
    std::copy_n(x.data().data() + idx[i] * cols, cols, out.data() + i * cols);
  }
  const std::size_t n_out = idx.size();
  return make_result<T>(Shape{n_out, cols}, std::move(out), {x}, [cols, idx = std::move(idx)](Node<T>& self) {
    if (auto* gx = grad_of(self, 0)) {
      for (std::size_t i = 0; i < idx.size(); ++i) {
        kernels::axpy(cols, T(1), self.grad.data() + i * cols, gx->data() + idx[i] * cols);
      }
    }
  });
}

template <class T>
Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
    throw DimensionError("concat_rows: " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  std::vector<T> out;
  out.reserve(a.numel() + b.numel());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  const std::size_t na = a.numel();
  const std::size_t nb = b.numel();
  return make_result<T>(Shape{a.dim(0) + b.dim(0), a.dim(1)}, std::move(out), {a, b}, [na, nb](Node<T>& self) {
    if (auto* ga = grad_of(self, 0)) kernels::axpy(na, T(1), self.grad.data(), ga->data());
    if (auto* gb = grad_of(self, 1)) kernels::axpy(nb, T(1), self.grad.data() + na, gb->data());
  });
}

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
  const T total = kernels::sum(x.numel(), x.data().data());
  return make_result<T>(Shape{}, std::vector<T>{total}, {x}, [](Node<T>& self) {
    if (auto* gx = grad_of(self, 0)) {
      const T g = self.grad[0];
      for (auto& v : *gx) v += g;
    }
  });
}

template <class T>
Tensor<T> mean(const Tensor<T>& x) {
  const std::size_t n = x.numel();
  if (n == 0) throw DimensionError("mean: empty tensor");
  const T total = kernels::sum(n, x.data().data());
  return make_result<T>(Shape{}, std::vector<T>{total / T(n)}, {x}, [n](Node<T>& self) {
    if (auto* gx = grad_of(self, 0)) {
      const T g = self.grad[0] / T(n);
      for (auto& v : *gx) v += g;
    }
  });
}

template <class T>
Tensor<T> mean_pool(const Tensor<T>& x, std::size_t group_size) {
  const auto [rows, cols] = as_matrix(x.shape());
  if (group_size == 0 || rows % group_size != 0) {
    throw DimensionError("mean_pool: " + std::to_string(rows) + " rows not divisible by " +
                         std::to_string(group_size));
  }
  const std::size_t groups = rows / group_size;
  const T inv = T(1) / T(group_size);
  std::vector<T> out(groups * cols, T(0));
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t r = 0; r < group_size; ++r) {
      kernels::axpy(cols, inv, x.data().data() + (g * group_size + r) * cols, out.data() + g * cols);
    }
  }
  return make_result<T>(Shape{groups, cols}, std::move(out), {x}, [=](Node<T>& self) {
    if (auto* gx = grad_of(self, 0)) {
      for (std::size_t g = 0; g < groups; ++g) {
        for (std::size_t r = 0; r < group_size; ++r) {
          kernels::axpy(cols, inv, self.grad.data() + g * cols, gx->data() + (g * group_size + r) * cols);
        }
      }
    }
  });
}

template <class T>
Tensor<T> dropout(const Tensor<T>& x, T p, std::uint64_t seed, bool train) {
  if (p < T(0) || p >= T(1)) throw ConfigError("dropout: probability must lie in [0, 1)");
  if (!train || p == T(0)) return x;
  const std::size_t n = x.numel();
  std::mt19937_64 rng(seed);
  const T keep_scale = T(1) / (T(1) - p);
  std::vector<T> mask(n);
  for (auto& m : mask) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u < static_cast<double>(p) ? T(0) : keep_scale;
  }
  std::vector<T> out(n);
  kernels::mul(n, x.data().data(), mask.data(), out.data());
  return make_result<T>(x.shape(), std::move(out), {x}, [n, mask = std::move(mask)](Node<T>& self) {
    if (auto* gx = grad_of(self, 0)) {
      for (std::size_t i = 0; i < n; ++i) (*gx)[i] += self.grad[i] * mask[i];
    }
  });
}

#define DMAE_INSTANTIATE_OPS(T)                                                                             \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                            \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                               \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                               \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                               \
  template Tensor<T> scale(const Tensor<T>&, T);                                                            \
  template Tensor<T> square(const Tensor<T>&);                                                              \
  template Tensor<T> gelu(const Tensor<T>&);                                                                \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);                   \
  template Tensor<T> softmax(const Tensor<T>&);                                                             \
  template Tensor<T> softmax_cross_entropy(const Tensor<T>&, std::span<const std::size_t>);                 \
  template Tensor<T> attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t); \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                                      \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::size_t>);                           \
  template Tensor<T> concat_rows(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> sum(const Tensor<T>&);                                                                 \
  template Tensor<T> mean(const Tensor<T>&);                                                                \
  template Tensor<T> mean_pool(const Tensor<T>&, std::size_t);                                              \
  template Tensor<T> dropout(const Tensor<T>&, T, std::uint64_t, bool);

DMAE_INSTANTIATE_OPS(float)
DMAE_INSTANTIATE_OPS(double)

#undef DMAE_INSTANTIATE_OPS

}  // namespace dmae::tensor
