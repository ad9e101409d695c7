#include "lma4rec/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lma4rec/error.hpp"

namespace lma4rec::ad {

namespace kernel {

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, bool trans_a, const double* b,
          bool trans_b, double* c, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  if (!trans_a && !trans_b) {
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = c + i * n;
      const double* arow = a + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = arow[p];
        const double* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else if (!trans_a && trans_b) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = a + i * k;
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = b + j * k;
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
        c[i * n + j] += s;
      }
    }
  } else if (trans_a && !trans_b) {
    for (std::size_t p = 0; p < k; ++p) {
      const double* arow = a + p * m;
      const double* brow = b + p * n;
      for (std::size_t i = 0; i < m; ++i) {
        const double av = arow[i];
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += a[p * m + i] * b[j * k + p];
        c[i * n + j] += s;
      }
    }
  }
}

}  // namespace kernel

namespace {

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

bool wants(Node& self, std::size_t i) {
  return i < self.parents.size() && self.parents[i]->requires_grad;
}

Shape leading(const Shape& s, std::size_t drop) { return Shape(s.begin(), s.end() - static_cast<std::ptrdiff_t>(drop)); }

Shape without_last(const Shape& s) {
  if (s.size() <= 1) return {1};
  return leading(s, 1);
}

enum class Broadcast { kNone, kLeftScalar, kRightScalar };

Broadcast check_binary(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kNone;
  if (a.numel() == 1) return Broadcast::kLeftScalar;
  if (b.numel() == 1) return Broadcast::kRightScalar;
  throw DimensionError(std::string(op) + ": shapes " + to_string(a.shape()) + " and " +
                       to_string(b.shape()) + " are neither equal nor scalar-broadcastable");
}

template <typename Forward, typename GradA, typename GradB>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, Forward fwd, GradA ga, GradB gb) {
  const Broadcast mode = check_binary(a, b, name);
  const Shape out_shape = mode == Broadcast::kLeftScalar ? b.shape() : a.shape();
  const std::size_t n = numel(out_shape);
  const auto av = a.data();
  const auto bv = b.data();
  auto ai = [&](std::size_t i) { return mode == Broadcast::kLeftScalar ? av[0] : av[i]; };
  auto bi = [&](std::size_t i) { return mode == Broadcast::kRightScalar ? bv[0] : bv[i]; };
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(ai(i), bi(i));
  return Tensor::from_op(out_shape, std::move(out), {a, b}, [mode, ga, gb](Node& self) {
    const auto& g = self.grad;
    const auto& x = parent(self, 0).value;
    const auto& y = parent(self, 1).value;
    auto xv = [&](std::size_t i) { return mode == Broadcast::kLeftScalar ? x[0] : x[i]; };
    auto yv = [&](std::size_t i) { return mode == Broadcast::kRightScalar ? y[0] : y[i]; };
    if (wants(self, 0)) {
      auto& dx = parent(self, 0).ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        dx[mode == Broadcast::kLeftScalar ? 0 : i] += g[i] * ga(xv(i), yv(i));
      }
    }
    if (wants(self, 1)) {
      auto& dy = parent(self, 1).ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        dy[mode == Broadcast::kRightScalar ? 0 : i] += g[i] * gb(xv(i), yv(i));
      }
    }
  });
}

// Unary op whose derivative is expressed in terms of input x and output y.
template <typename Forward, typename Deriv>
Tensor unary(const Tensor& a, Forward fwd, Deriv deriv) {
  const auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  return Tensor::from_op(a.shape(), std::move(out), {a}, [deriv](Node& self) {
    const auto& x = parent(self, 0).value;
    auto& dx = parent(self, 0).ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += self.grad[i] * deriv(x[i], self.value[i]);
  });
}

void permute_buffer(const std::vector<double>& src, const Shape& in_shape,
                    const std::vector<std::size_t>& perm, std::vector<double>& dst, bool accumulate) {
  const std::size_t r = in_shape.size();
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * in_shape[i];
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = in_shape[perm[i]];
  std::vector<std::size_t> stride(r);
  for (std::size_t i = 0; i < r; ++i) stride[i] = in_stride[perm[i]];
  std::vector<std::size_t> idx(r, 0);
  const std::size_t n = src.size();
  std::size_t offset = 0;
  for (std::size_t o = 0; o < n; ++o) {
    if (accumulate) {
      dst[offset] += src[o];
    } else {
      dst[o] = src[offset];
    }
    for (std::size_t axis = r; axis-- > 0;) {
      if (++idx[axis] < out_shape[axis]) {
        offset += stride[axis];
        break;
      }
      offset -= stride[axis] * (out_shape[axis] - 1);
      idx[axis] = 0;
    }
  }
}

void check_mask(const Tensor& a, const EntryMask& mask, const char* op) {
  if (mask && mask->size() != a.numel()) {
    throw DimensionError(std::string(op) + ": mask has " + std::to_string(mask->size()) +
                         " entries for tensor of shape " + to_string(a.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  auto fail = [&](const char* why) {
    throw DimensionError(std::string("matmul: ") + why + ": " + to_string(sa) + " x " + to_string(sb));
  };
  if (sa.size() < 2 || sb.size() < 2) fail("operands must have rank >= 2");
  const std::size_t m = sa[sa.size() - 2];
  const std::size_t k = sa.back();
  const std::size_t n = sb.back();
  if (sb[sb.size() - 2] != k) fail("inner dimensions differ");

  if (sb.size() == 2) {
    // Fold the batch of `a` into its rows.
    const std::size_t rows = a.numel() / k;
    Shape out_shape = leading(sa, 1);
    out_shape.push_back(n);
    std::vector<double> out(rows * n);
    kernel::gemm(rows, n, k, a.data().data(), false, b.data().data(), false, out.data(), false);
    return Tensor::from_op(out_shape, std::move(out), {a, b}, [rows, n, k](Node& self) {
      Node& pa = parent(self, 0);
      Node& pb = parent(self, 1);
      if (pa.requires_grad) {
        kernel::gemm(rows, k, n, self.grad.data(), false, pb.value.data(), true, pa.ensure_grad().data(), true);
      }
      if (pb.requires_grad) {
        kernel::gemm(k, n, rows, pa.value.data(), true, self.grad.data(), false, pb.ensure_grad().data(), true);
      }
    });
  }

  const bool a_matrix = sa.size() == 2;
  if (!a_matrix && leading(sa, 2) != leading(sb, 2)) fail("batch dimensions are not broadcastable");
  const Shape batch_shape = leading(sb, 2);
  const std::size_t batch = numel(batch_shape);
  Shape out_shape = batch_shape;
  out_shape.push_back(m);
  out_shape.push_back(n);
  std::vector<double> out(batch * m * n);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  for (std::size_t t = 0; t < batch; ++t) {
    kernel::gemm(m, n, k, ad + (a_matrix ? 0 : t * m * k), false, bd + t * k * n, false, out.data() + t * m * n,
                 false);
  }
  return Tensor::from_op(out_shape, std::move(out), {a, b}, [batch, m, n, k, a_matrix](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    for (std::size_t t = 0; t < batch; ++t) {
      const double* dc = self.grad.data() + t * m * n;
      const std::size_t a_off = a_matrix ? 0 : t * m * k;
      if (pa.requires_grad) {
        kernel::gemm(m, k, n, dc, false, pb.value.data() + t * k * n, true, pa.ensure_grad().data() + a_off, true);
      }
      if (pb.requires_grad) {
        kernel::gemm(k, n, m, pa.value.data() + a_off, true, dc, false, pb.ensure_grad().data() + t * k * n, true);
      }
    }
  });
}

Tensor permute(const Tensor& a, const std::vector<std::size_t>& perm) {
  const Shape& s = a.shape();
  std::vector<std::size_t> check = perm;
  std::sort(check.begin(), check.end());
  for (std::size_t i = 0; i < check.size(); ++i) {
    if (check.size() != s.size() || check[i] != i) {
      throw DimensionError("permute: invalid permutation for shape " + to_string(s));
    }
  }
  Shape out_shape(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out_shape[i] = s[perm[i]];
  std::vector<double> out(a.numel());
  const std::vector<double>& src = a.node()->value;
  permute_buffer(src, s, perm, out, false);
  return Tensor::from_op(out_shape, std::move(out), {a}, [perm, in_shape = s](Node& self) {
    permute_buffer(self.grad, in_shape, perm, parent(self, 0).ensure_grad(), true);
  });
}

Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rank();
  if (r < 2) throw DimensionError("transpose: rank must be >= 2, got " + to_string(a.shape()));
  std::vector<std::size_t> perm(r);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::swap(perm[r - 1], perm[r - 2]);
  return permute(a, perm);
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.numel()) {
    throw DimensionError("reshape: cannot view " + to_string(a.shape()) + " as " + to_string(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return Tensor::from_op(std::move(shape), std::move(out), {a}, [](Node& self) {
    auto& dx = parent(self, 0).ensure_grad();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double v : a.data()) {
    if (!(v > 0.0)) throw DomainError("log of non-positive value " + std::to_string(v));
  }
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor softplus(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](double x, double) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const std::size_t d = x.shape().back();
  if (bias.rank() != 1 || bias.dim(0) != d) {
    throw DimensionError("add_bias: bias " + to_string(bias.shape()) + " does not match " + to_string(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto bv = bias.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % d];
  return Tensor::from_op(x.shape(), std::move(out), {x, bias}, [d](Node& self) {
    if (wants(self, 0)) {
      auto& dx = parent(self, 0).ensure_grad();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i];
    }
    if (wants(self, 1)) {
      auto& db = parent(self, 1).ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) db[i % d] += self.grad[i];
    }
  });
}

Tensor scale_lastdim(const Tensor& x, std::span<const double> factors) {
  const std::size_t d = x.shape().back();
  if (factors.size() != d) {
    throw DimensionError("scale_lastdim: " + std::to_string(factors.size()) + " factors for shape " +
                         to_string(x.shape()));
  }
  std::vector<double> f(factors.begin(), factors.end());
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= f[i % d];
  return Tensor::from_op(x.shape(), std::move(out), {x}, [f = std::move(f), d](Node& self) {
    auto& dx = parent(self, 0).ensure_grad();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i] * f[i % d];
  });
}

Tensor sum(const Tensor& a) {
  const auto av = a.data();
  const double s = std::accumulate(av.begin(), av.end(), 0.0);
  return Tensor::from_op({1}, {s}, {a}, [](Node& self) {
    auto& dx = parent(self, 0).ensure_grad();
    for (double& v : dx) v += self.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor sum_lastdim(const Tensor& a) {
  const std::size_t d = a.shape().back();
  const std::size_t rows = a.numel() / d;
  const auto av = a.data();
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += av[r * d + j];
    out[r] = s;
  }
  return Tensor::from_op(without_last(a.shape()), std::move(out), {a}, [d](Node& self) {
    auto& dx = parent(self, 0).ensure_grad();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i / d];
  });
}

Tensor softmax_lastdim(const Tensor& a, const EntryMask& mask) {
  check_mask(a, mask, "softmax_lastdim");
  const std::size_t d = a.shape().back();
  const std::size_t rows = a.numel() / d;
  const auto av = a.data();
  std::vector<double> out(av.size(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * d;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d; ++j) {
      if (!mask || (*mask)[base + j]) mx = std::max(mx, av[base + j]);
    }
    if (mx == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (!mask || (*mask)[base + j]) {
        out[base + j] = std::exp(av[base + j] - mx);
        z += out[base + j];
      }
    }
    for (std::size_t j = 0; j < d; ++j) out[base + j] /= z;
  }
  return Tensor::from_op(a.shape(), std::move(out), {a}, [d, rows](Node& self) {
    auto& dx = parent(self, 0).ensure_grad();
    const auto& y = self.value;
    const auto& g = self.grad;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * d;
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += g[base + j] * y[base + j];
      for (std::size_t j = 0; j < d; ++j) dx[base + j] += y[base + j] * (g[base + j] - dot);
    }
  });
}

Tensor log_softmax_lastdim(const Tensor& a, const EntryMask& mask) {
  check_mask(a, mask, "log_softmax_lastdim");
  const std::size_t d = a.shape().back();
  const std::size_t rows = a.numel() / d;
  const auto av = a.data();
  std::vector<double> out(av.size(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * d;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d; ++j) {
      if (!mask || (*mask)[base + j]) mx = std::max(mx, av[base + j]);
    }
    if (mx == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (!mask || (*mask)[base + j]) z += std::exp(av[base + j] - mx);
    }
    const double lz = mx + std::log(z);
    for (std::size_t j = 0; j < d; ++j) {
      if (!mask || (*mask)[base + j]) out[base + j] = av[base + j] - lz;
    }
  }
  return Tensor::from_op(a.shape(), std::move(out), {a}, [d, rows, mask](Node& self) {
    auto& dx = parent(self, 0).ensure_grad();
    const auto& y = self.value;
    const auto& g = self.grad;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * d;
      double gsum = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        if (!mask || (*mask)[base + j]) gsum += g[base + j];
      }
      for (std::size_t j = 0; j < d; ++j) {
        if (!mask || (*mask)[base + j]) dx[base + j] += g[base + j] - std::exp(y[base + j]) * gsum;
      }
    }
  });
}

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps) {
  if (!(eps > 0.0)) throw ContractError("layer_norm: eps must be positive");
  const std::size_t d = a.shape().back();
  if (gain.rank() != 1 || gain.dim(0) != d || bias.rank() != 1 || bias.dim(0) != d) {
    throw DimensionError("layer_norm: gain " + to_string(gain.shape()) + " / bias " + to_string(bias.shape()) +
                         " do not match input " + to_string(a.shape()));
  }
  const std::size_t rows = a.numel() / d;
  const auto av = a.data();
  const auto gv = gain.data();
  const auto bv = bias.data();
  auto xhat = std::make_shared<std::vector<double>>(av.size());
  auto rstd = std::make_shared<std::vector<double>>(rows);
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += av[base + j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = av[base + j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (av[base + j] - mu) * rs;
      (*xhat)[base + j] = h;
      out[base + j] = h * gv[j] + bv[j];
    }
  }
  return Tensor::from_op(a.shape(), std::move(out), {a, gain, bias}, [d, rows, xhat, rstd](Node& self) {
    const auto& g = self.grad;
    const auto& gainv = parent(self, 1).value;
    const auto& xh = *xhat;
    if (wants(self, 0)) {
      auto& dx = parent(self, 0).ensure_grad();
      std::vector<double> dxh(d);
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t base = r * d;
        double m1 = 0.0;
        double m2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          dxh[j] = g[base + j] * gainv[j];
          m1 += dxh[j];
          m2 += dxh[j] * xh[base + j];
        }
        m1 /= static_cast<double>(d);
        m2 /= static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) dx[base + j] += (*rstd)[r] * (dxh[j] - m1 - xh[base + j] * m2);
      }
    }
    if (wants(self, 1)) {
      auto& dg = parent(self, 1).ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) dg[i % d] += g[i] * xh[i];
    }
    if (wants(self, 2)) {
      auto& db = parent(self, 2).ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) db[i % d] += g[i];
    }
  });
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::int64_t> indices, const Shape& index_shape) {
  if (table.rank() != 2) throw DimensionError("embedding_lookup: table must be [V,d], got " + to_string(table.shape()));
  if (numel(index_shape) != indices.size()) {
    throw DimensionError("embedding_lookup: " + std::to_string(indices.size()) + " indices for index shape " +
                         to_string(index_shape));
  }
  const std::size_t vocab = table.dim(0);
  const std::size_t d = table.dim(1);
  const auto tv = table.data();
  std::vector<std::int64_t> idx(indices.begin(), indices.end());
  std::vector<double> out(idx.size() * d);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= vocab) {
      throw IndexError("embedding_lookup: index " + std::to_string(idx[i]) + " outside [0, " +
                       std::to_string(vocab) + ")");
    }
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(idx[i]) * d), d,
                out.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  Shape out_shape = index_shape;
  out_shape.push_back(d);
  return Tensor::from_op(out_shape, std::move(out), {table}, [idx = std::move(idx), d](Node& self) {
    auto& dt = parent(self, 0).ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const std::size_t row = static_cast<std::size_t>(idx[i]) * d;
      for (std::size_t j = 0; j < d; ++j) dt[row + j] += self.grad[i * d + j];
    }
  });
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != sb.size() || !std::equal(sa.begin() + 1, sa.end(), sb.begin() + 1)) {
    throw DimensionError("concat_rows: trailing shapes differ: " + to_string(sa) + " vs " + to_string(sb));
  }
  Shape out_shape = sa;
  out_shape[0] += sb[0];
  std::vector<double> out;
  out.reserve(a.numel() + b.numel());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  const std::size_t na = a.numel();
  return Tensor::from_op(out_shape, std::move(out), {a, b}, [na](Node& self) {
    if (wants(self, 0)) {
      auto& da = parent(self, 0).ensure_grad();
      for (std::size_t i = 0; i < na; ++i) da[i] += self.grad[i];
    }
    if (wants(self, 1)) {
      auto& db = parent(self, 1).ensure_grad();
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += self.grad[na + i];
    }
  });
}

Tensor gather_lastdim(const Tensor& a, std::span<const std::int64_t> index) {
  const std::size_t d = a.shape().back();
  const std::size_t rows = a.numel() / d;
  if (index.size() != rows) {
    throw DimensionError("gather_lastdim: " + std::to_string(index.size()) + " indices for " +
                         std::to_string(rows) + " rows of " + to_string(a.shape()));
  }
  std::vector<std::int64_t> idx(index.begin(), index.end());
  const auto av = a.data();
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    if (idx[r] < 0 || static_cast<std::size_t>(idx[r]) >= d) {
      throw IndexError("gather_lastdim: index " + std::to_string(idx[r]) + " outside [0, " + std::to_string(d) + ")");
    }
    out[r] = av[r * d + static_cast<std::size_t>(idx[r])];
  }
  return Tensor::from_op(without_last(a.shape()), std::move(out), {a}, [idx = std::move(idx), d](Node& self) {
    auto& dx = parent(self, 0).ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r) dx[r * d + static_cast<std::size_t>(idx[r])] += self.grad[r];
  });
}

}  // namespace lma4rec::ad
