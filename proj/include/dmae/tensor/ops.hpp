#pragma once

// Differentiable ops over dmae::tensor::Tensor. All ops are instantiated for
// float and double. Matrices are row-major; "rows" always means the
// product of every dimension but the last.

#include <cstdint>
#include <span>

#include "dmae/tensor/tensor.hpp"

namespace dmae::tensor {

// a: [..., m, k]; b: [k, n] (shared) or [..., k, n] with matching leading dims.
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// x: [..., in] @ weight [in, out] + bias [out]. bias may be undefined.
template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// Elementwise a + b. b may also be a trailing-suffix broadcast of a
// (e.g. a [R, C] + b [C], or a [B, N, C] + b [N, C]).
template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> scale(const Tensor<T>& x, T factor);
template <class T>
Tensor<T> square(const Tensor<T>& x);

// Exact (erf) GELU.
template <class T>
Tensor<T> gelu(const Tensor<T>& x);

// Normalizes over the last dimension with biased variance.
template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps = T(1e-6));

// Row-wise softmax over the last dimension.
template <class T>
Tensor<T> softmax(const Tensor<T>& x);

// Mean over rows of -log softmax(logits)[label]. logits: [n, k].
template <class T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::size_t> labels);

// Multi-head scaled dot-product attention. q, k, v: [batch * seq_len, d_model]
// where consecutive groups of seq_len rows form one sequence.
template <class T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, std::size_t n_heads,
                    std::size_t seq_len);

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

// out[i, :] = x[index[i], :] for 2-D x; backward scatter-adds.
template <class T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> index);

// Stacks two matrices with equal column counts.
template <class T>
Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b);

template <class T>
Tensor<T> sum(const Tensor<T>& x);
template <class T>
Tensor<T> mean(const Tensor<T>& x);

// [groups * group_size, C] -> [groups, C], averaging each consecutive group.
template <class T>
Tensor<T> mean_pool(const Tensor<T>& x, std::size_t group_size);

// Inverted dropout; identity when !train or p == 0.
template <class T>
Tensor<T> dropout(const Tensor<T>& x, T p, std::uint64_t seed, bool train);

}  // namespace dmae::tensor
