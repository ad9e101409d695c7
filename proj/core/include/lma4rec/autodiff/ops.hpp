#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "lma4rec/autodiff/tensor.hpp"

namespace lma4rec::ad {

// Per-entry 0/1 admission mask for the masked softmax variants. Shared so that
// the backward rule can hold on to it without copying.
using EntryMask = std::shared_ptr<const std::vector<std::uint8_t>>;

// Matrix product over the last two axes. Leading (batch) axes must match, or
// one operand may be a plain matrix that is broadcast across the other's batch.
Tensor matmul(const Tensor& a, const Tensor& b);

// Swaps the last two axes.
Tensor transpose(const Tensor& a);
// Arbitrary axis permutation: result axis i is input axis perm[i].
Tensor permute(const Tensor& a, const std::vector<std::size_t>& perm);
Tensor reshape(const Tensor& a, Shape shape);

// Elementwise. Binary ops accept equal shapes, or one operand with a single element.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
// Throws DomainError on non-positive entries.
Tensor log(const Tensor& a);
// log(1 + e^x), evaluated without overflow.
Tensor softplus(const Tensor& a);

// x[..., j] + bias[j]
Tensor add_bias(const Tensor& x, const Tensor& bias);
// x[..., j] * factors[j]; the factors are constants (no gradient).
Tensor scale_lastdim(const Tensor& x, std::span<const double> factors);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum_lastdim(const Tensor& a);

// Numerically stable softmax over the last axis. With a mask (same element
// count as `a`), masked entries get probability 0 and rows with no admitted
// entry are all zero.
Tensor softmax_lastdim(const Tensor& a, const EntryMask& mask = nullptr);
// Log-softmax over the last axis; masked entries are reported as 0.
Tensor log_softmax_lastdim(const Tensor& a, const EntryMask& mask = nullptr);

// Normalizes each row of the last axis to zero mean and unit variance, then
// applies gain and bias (both of length = last dim).
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps);

// Gathers rows of a [V, d] table. The result has shape index_shape + [d].
// Backward scatter-adds into the gathered rows.
Tensor embedding_lookup(const Tensor& table, std::span<const std::int64_t> indices,
                        const Shape& index_shape);

// Concatenation along axis 0; trailing shapes must agree.
Tensor concat_rows(const Tensor& a, const Tensor& b);

// out[r] = a[r, index[r]] treating `a` as [rows, last dim]. Result shape is a.shape minus the last axis.
Tensor gather_lastdim(const Tensor& a, std::span<const std::int64_t> index);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

namespace kernel {

// C[m,n] (+)= op(A) * op(B) on row-major buffers, with A stored as [m,k]
// (or [k,m] when trans_a) and B as [k,n] (or [n,k] when trans_b).
void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, bool trans_a, const double* b,
          bool trans_b, double* c, bool accumulate);

}  // namespace kernel

}  // namespace lma4rec::ad
