#include "flowpat/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <string>

#include "flowpat/detail/gemm.hpp"
#include "flowpat/detail/vec_math.hpp"
#include "flowpat/errors.hpp"

namespace flowpat::nn {

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

Tensor make_op(Shape shape, std::vector<double> value,
               std::vector<NodePtr> parents,
               std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  if (grad_enabled()) {
    bool track = false;
    for (const auto& p : parents)
      if (p->requires_grad) track = true;
    if (track) {
      n->requires_grad = true;
      n->parents = std::move(parents);
      n->backward_fn = std::move(backward);
    }
  }
  return Tensor::wrap(n);
}

void check(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

struct ConvGeom {
  std::size_t batch, cin, lin, cout, k, stride, pad_l, lout;
};

// Valid output range [j_lo, j_hi) for kernel tap kk: indices where
// j*stride + kk - pad_l lands inside the input.
struct TapRange {
  std::size_t j_lo, j_hi;
  std::ptrdiff_t src_off;  // input index at j == 0
};

TapRange tap_range(const ConvGeom& g, std::size_t kk) {
  const auto off = static_cast<std::ptrdiff_t>(kk) -
                   static_cast<std::ptrdiff_t>(g.pad_l);
  std::size_t j_lo = 0;
  if (off < 0)
    j_lo = (static_cast<std::size_t>(-off) + g.stride - 1) / g.stride;
  // j*stride + off <= lin - 1
  const auto last = static_cast<std::ptrdiff_t>(g.lin) - 1 - off;
  std::size_t j_hi = 0;
  if (last >= 0)
    j_hi = std::min(g.lout, static_cast<std::size_t>(last) / g.stride + 1);
  if (j_lo > j_hi) j_lo = j_hi;
  return {j_lo, j_hi, off};
}

void im2col(const double* x, const ConvGeom& g, double* col) {
  const std::size_t bl = g.batch * g.lout;
  for (std::size_t ci = 0; ci < g.cin; ++ci)
    for (std::size_t kk = 0; kk < g.k; ++kk) {
      const TapRange r = tap_range(g, kk);
      double* crow = col + (ci * g.k + kk) * bl;
      for (std::size_t b = 0; b < g.batch; ++b) {
        const double* xrow = x + (b * g.cin + ci) * g.lin;
        double* cptr = crow + b * g.lout;
        std::fill(cptr, cptr + r.j_lo, 0.0);
        if (g.stride == 1) {
          if (r.j_hi > r.j_lo)
            std::memcpy(cptr + r.j_lo,
                        xrow + static_cast<std::ptrdiff_t>(r.j_lo) + r.src_off,
                        (r.j_hi - r.j_lo) * sizeof(double));
        } else {
          for (std::size_t j = r.j_lo; j < r.j_hi; ++j)
            cptr[j] = xrow[static_cast<std::ptrdiff_t>(j * g.stride) + r.src_off];
        }
        std::fill(cptr + r.j_hi, cptr + g.lout, 0.0);
      }
    }
}

void col2im_add(const double* col, const ConvGeom& g, double* dx) {
  const std::size_t bl = g.batch * g.lout;
  for (std::size_t ci = 0; ci < g.cin; ++ci)
    for (std::size_t kk = 0; kk < g.k; ++kk) {
      const TapRange r = tap_range(g, kk);
      const double* crow = col + (ci * g.k + kk) * bl;
      for (std::size_t b = 0; b < g.batch; ++b) {
        double* xrow = dx + (b * g.cin + ci) * g.lin;
        const double* cptr = crow + b * g.lout;
        if (g.stride == 1) {
          double* dst = xrow + static_cast<std::ptrdiff_t>(r.j_lo) + r.src_off;
          for (std::size_t j = r.j_lo; j < r.j_hi; ++j)
            dst[j - r.j_lo] += cptr[j];
        } else {
          for (std::size_t j = r.j_lo; j < r.j_hi; ++j)
            xrow[static_cast<std::ptrdiff_t>(j * g.stride) + r.src_off] +=
                cptr[j];
        }
      }
    }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
  std::vector<double> out(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  NodePtr an = a.node(), bn = b.node();
  return make_op(a.shape(), std::move(out), {an, bn}, [an, bn](Node& n) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] += n.grad[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * s;
  NodePtr an = a.node();
  return make_op(a.shape(), std::move(out), {an}, [an, s](Node& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      an->grad[i] += n.grad[i] * s;
  });
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
              std::size_t stride, std::size_t pad_left,
              std::size_t pad_right) {
  check(x.shape().size() == 3,
        "conv1d: input must be [B,Cin,L], got " + shape_str(x.shape()));
  check(w.shape().size() == 3,
        "conv1d: weights must be [Cout,Cin,K], got " + shape_str(w.shape()));
  check(stride >= 1, "conv1d: stride must be >= 1");
  ConvGeom g;
  g.batch = x.dim(0);
  g.cin = x.dim(1);
  g.lin = x.dim(2);
  g.cout = w.dim(0);
  g.k = w.dim(2);
  g.stride = stride;
  g.pad_l = pad_left;
  check(w.dim(1) == g.cin, "conv1d: weight Cin " + std::to_string(w.dim(1)) +
                               " != input Cin " + std::to_string(g.cin));
  check(b.shape() == Shape{g.cout},
        "conv1d: bias must be [Cout]=" + std::to_string(g.cout) + ", got " +
            shape_str(b.shape()));
  const std::size_t padded = g.lin + pad_left + pad_right;
  check(padded >= g.k, "conv1d: kernel " + std::to_string(g.k) +
                           " larger than padded input " +
                           std::to_string(padded));
  g.lout = (padded - g.k) / stride + 1;

  const std::size_t bl = g.batch * g.lout;
  auto col = std::make_shared<std::vector<double>>(g.cin * g.k * bl);
  im2col(x.values().data(), g, col->data());

  // Y[Cout, B*L'] = W * col, then fold bias while reordering to [B,Cout,L'].
  static thread_local std::vector<double> y_scratch;
  if (y_scratch.size() < g.cout * bl) y_scratch.resize(g.cout * bl);
  std::vector<double>& y_flat = y_scratch;
  std::fill(y_flat.begin(), y_flat.begin() + static_cast<std::ptrdiff_t>(g.cout * bl), 0.0);
  detail::gemm_accum(g.cout, bl, g.cin * g.k, w.values().data(), col->data(),
                     y_flat.data());
  std::vector<double> out(g.batch * g.cout * g.lout);
  const auto& bias = b.values();
  for (std::size_t bi = 0; bi < g.batch; ++bi)
    for (std::size_t co = 0; co < g.cout; ++co) {
      const double* src = y_flat.data() + co * bl + bi * g.lout;
      double* dst = out.data() + (bi * g.cout + co) * g.lout;
      const double add_b = bias[co];
      for (std::size_t j = 0; j < g.lout; ++j) dst[j] = src[j] + add_b;
    }

  NodePtr xn = x.node(), wn = w.node(), bn = b.node();
  return make_op(
      {g.batch, g.cout, g.lout}, std::move(out), {xn, wn, bn},
      [xn, wn, bn, col, g](Node& n) {
        const std::size_t bl = g.batch * g.lout;
        // Persistent scratch; these buffers recur every step.
        static thread_local std::vector<double> dy, dcol;
        if (dy.size() < g.cout * bl) dy.resize(g.cout * bl);
        // Reorder upstream grad to [Cout, B*L'].
        for (std::size_t bi = 0; bi < g.batch; ++bi)
          for (std::size_t co = 0; co < g.cout; ++co) {
            const double* src = n.grad.data() + (bi * g.cout + co) * g.lout;
            double* dst = dy.data() + co * bl + bi * g.lout;
            std::copy(src, src + g.lout, dst);
          }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t co = 0; co < g.cout; ++co) {
            double s = 0.0;
            const double* row = dy.data() + co * bl;
            for (std::size_t i = 0; i < bl; ++i) s += row[i];
            bn->grad[co] += s;
          }
        }
        if (wn->requires_grad) {
          wn->ensure_grad();
          detail::gemm_accum(g.cout, g.cin * g.k, bl, dy.data(), bl, false,
                             col->data(), bl, true, wn->grad.data(),
                             g.cin * g.k);
        }
        if (xn->requires_grad) {
          xn->ensure_grad();
          const std::size_t need = g.cin * g.k * bl;
          if (dcol.size() < need) dcol.resize(need);
          std::fill(dcol.begin(), dcol.begin() + static_cast<std::ptrdiff_t>(need), 0.0);
          detail::gemm_accum(g.cin * g.k, bl, g.cout, wn->value.data(),
                             g.cin * g.k, true, dy.data(), bl, false,
                             dcol.data(), bl);
          col2im_add(dcol.data(), g, xn->grad.data());
        }
      });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  check(x.shape().size() == 2,
        "linear: input must be [B,In], got " + shape_str(x.shape()));
  check(w.shape().size() == 2,
        "linear: weights must be [Out,In], got " + shape_str(w.shape()));
  const std::size_t batch = x.dim(0), in = x.dim(1), out_dim = w.dim(0);
  check(w.dim(1) == in, "linear: weight In " + std::to_string(w.dim(1)) +
                            " != input In " + std::to_string(in));
  check(b.shape() == Shape{out_dim},
        "linear: bias must be [Out]=" + std::to_string(out_dim) + ", got " +
            shape_str(b.shape()));

  std::vector<double> out(batch * out_dim, 0.0);
  detail::gemm_accum(batch, out_dim, in, x.values().data(), in, false,
                     w.values().data(), in, true, out.data(), out_dim);
  const auto& bias = b.values();
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t j = 0; j < out_dim; ++j) out[i * out_dim + j] += bias[j];

  NodePtr xn = x.node(), wn = w.node(), bn = b.node();
  return make_op(
      {batch, out_dim}, std::move(out), {xn, wn, bn},
      [xn, wn, bn, batch, in, out_dim](Node& n) {
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t i = 0; i < batch; ++i)
            for (std::size_t j = 0; j < out_dim; ++j)
              bn->grad[j] += n.grad[i * out_dim + j];
        }
        if (wn->requires_grad) {
          wn->ensure_grad();
          detail::gemm_accum(out_dim, in, batch, n.grad.data(), out_dim, true,
                             xn->value.data(), in, false, wn->grad.data(), in);
        }
        if (xn->requires_grad) {
          xn->ensure_grad();
          detail::gemm_accum(batch, in, out_dim, n.grad.data(), out_dim, false,
                             wn->value.data(), in, false, xn->grad.data(), in);
        }
      });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  NodePtr xn = x.node();
  return make_op(x.shape(), std::move(out), {xn}, [xn](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      if (xn->value[i] > 0.0) xn->grad[i] += n.grad[i];
  });
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.size());
  detail::sigmoid_forward(x.values().data(), out.data(), x.size());
  NodePtr xn = x.node();
  auto saved = std::make_shared<std::vector<double>>(out);
  return make_op(x.shape(), std::move(out), {xn}, [xn, saved](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const double s = (*saved)[i];
      xn->grad[i] += n.grad[i] * s * (1.0 - s);
    }
  });
}

Tensor swish(const Tensor& x) {
  std::vector<double> out(x.size());
  auto sig = std::make_shared<std::vector<double>>(x.size());
  detail::swish_forward(x.values().data(), sig->data(), out.data(), x.size());
  NodePtr xn = x.node();
  return make_op(x.shape(), std::move(out), {xn}, [xn, sig](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const double s = (*sig)[i];
      const double xval = xn->value[i];
      xn->grad[i] += n.grad[i] * (s + xval * s * (1.0 - s));
    }
  });
}

Tensor softmax(const Tensor& x) {
  check(x.shape().size() == 2,
        "softmax: input must be [B,C], got " + shape_str(x.shape()));
  const std::size_t batch = x.dim(0), c = x.dim(1);
  std::vector<double> out(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < batch; ++i) {
    const double* row = xv.data() + i * c;
    double m = row[0];
    for (std::size_t j = 1; j < c; ++j) m = std::max(m, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double e = std::exp(row[j] - m);
      out[i * c + j] = e;
      sum += e;
    }
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= sum;
  }
  NodePtr xn = x.node();
  auto saved = std::make_shared<std::vector<double>>(out);
  return make_op(x.shape(), std::move(out), {xn},
                 [xn, saved, batch, c](Node& n) {
                   if (!xn->requires_grad) return;
                   xn->ensure_grad();
                   for (std::size_t i = 0; i < batch; ++i) {
                     const double* y = saved->data() + i * c;
                     const double* gy = n.grad.data() + i * c;
                     double dot = 0.0;
                     for (std::size_t j = 0; j < c; ++j) dot += gy[j] * y[j];
                     double* gx = xn->grad.data() + i * c;
                     for (std::size_t j = 0; j < c; ++j)
                       gx[j] += y[j] * (gy[j] - dot);
                   }
                 });
}

Tensor max_pool1d(const Tensor& x, std::size_t k) {
  check(x.shape().size() == 3,
        "max_pool1d: input must be [B,C,L], got " + shape_str(x.shape()));
  check(k >= 1, "max_pool1d: k must be >= 1");
  const std::size_t batch = x.dim(0), c = x.dim(1), l = x.dim(2);
  const std::size_t lp = l / k;
  check(lp >= 1, "max_pool1d: pool window larger than input length");
  std::vector<double> out(batch * c * lp);
  auto arg = std::make_shared<std::vector<std::uint32_t>>(out.size());
  const auto& xv = x.values();
  for (std::size_t bc = 0; bc < batch * c; ++bc) {
    const double* row = xv.data() + bc * l;
    for (std::size_t j = 0; j < lp; ++j) {
      std::size_t best = j * k;
      for (std::size_t t = 1; t < k; ++t)
        if (row[j * k + t] > row[best]) best = j * k + t;
      out[bc * lp + j] = row[best];
      (*arg)[bc * lp + j] = static_cast<std::uint32_t>(bc * l + best);
    }
  }
  NodePtr xn = x.node();
  return make_op({batch, c, lp}, std::move(out), {xn}, [xn, arg](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      xn->grad[(*arg)[i]] += n.grad[i];
  });
}

Tensor global_avg_pool1d(const Tensor& x) {
  check(x.shape().size() == 3,
        "global_avg_pool1d: input must be [B,C,L], got " + shape_str(x.shape()));
  const std::size_t batch = x.dim(0), c = x.dim(1), l = x.dim(2);
  std::vector<double> out(batch * c, 0.0);
  const auto& xv = x.values();
  for (std::size_t bc = 0; bc < batch * c; ++bc) {
    const double* row = xv.data() + bc * l;
    double s = 0.0;
    for (std::size_t j = 0; j < l; ++j) s += row[j];
    out[bc] = s / static_cast<double>(l);
  }
  NodePtr xn = x.node();
  return make_op({batch, c}, std::move(out), {xn}, [xn, l](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const double inv = 1.0 / static_cast<double>(l);
    for (std::size_t bc = 0; bc < n.grad.size(); ++bc) {
      double* gx = xn->grad.data() + bc * l;
      const double g = n.grad[bc] * inv;
      for (std::size_t j = 0; j < l; ++j) gx[j] += g;
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  check(shape_size(shape) == x.size(),
        "reshape: size mismatch " + shape_str(x.shape()) + " -> " +
            shape_str(shape));
  std::vector<double> out = x.values();
  NodePtr xn = x.node();
  return make_op(std::move(shape), std::move(out), {xn}, [xn](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) xn->grad[i] += n.grad[i];
  });
}

Tensor flatten(const Tensor& x) {
  check(!x.shape().empty(), "flatten: undefined shape");
  const std::size_t batch = x.dim(0);
  return reshape(x, {batch, x.size() / batch});
}

Tensor channel_scale(const Tensor& x, const Tensor& gate) {
  check(x.shape().size() == 3,
        "channel_scale: input must be [B,C,L], got " + shape_str(x.shape()));
  check(gate.shape() == Shape({x.dim(0), x.dim(1)}),
        "channel_scale: gate must be [B,C]=" +
            shape_str({x.dim(0), x.dim(1)}) + ", got " +
            shape_str(gate.shape()));
  const std::size_t batch = x.dim(0), c = x.dim(1), l = x.dim(2);
  std::vector<double> out(x.size());
  const auto& xv = x.values();
  const auto& gv = gate.values();
  for (std::size_t bc = 0; bc < batch * c; ++bc) {
    const double g = gv[bc];
    const double* row = xv.data() + bc * l;
    double* dst = out.data() + bc * l;
    for (std::size_t j = 0; j < l; ++j) dst[j] = row[j] * g;
  }
  NodePtr xn = x.node(), gn = gate.node();
  return make_op(x.shape(), std::move(out), {xn, gn}, [xn, gn, l](Node& n) {
    const std::size_t bc_total = n.grad.size() / l;
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (std::size_t bc = 0; bc < bc_total; ++bc) {
        const double g = gn->value[bc];
        const double* gy = n.grad.data() + bc * l;
        double* gx = xn->grad.data() + bc * l;
        for (std::size_t j = 0; j < l; ++j) gx[j] += gy[j] * g;
      }
    }
    if (gn->requires_grad) {
      gn->ensure_grad();
      for (std::size_t bc = 0; bc < bc_total; ++bc) {
        const double* gy = n.grad.data() + bc * l;
        const double* xv2 = xn->value.data() + bc * l;
        double s = 0.0;
        for (std::size_t j = 0; j < l; ++j) s += gy[j] * xv2[j];
        gn->grad[bc] += s;
      }
    }
  });
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  check(rate >= 0.0 && rate < 1.0,
        "dropout: rate must lie in [0,1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(x.size());
  std::vector<double> out(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = rng.uniform() >= rate ? keep_scale : 0.0;
    (*mask)[i] = m;
    out[i] = xv[i] * m;
  }
  NodePtr xn = x.node();
  return make_op(x.shape(), std::move(out), {xn}, [xn, mask](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      xn->grad[i] += n.grad[i] * (*mask)[i];
  });
}

Tensor batch_norm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                    std::vector<double>& running_mean,
                    std::vector<double>& running_var, double momentum,
                    double eps, bool training) {
  check(x.shape().size() == 3,
        "batch_norm1d: input must be [B,C,L], got " + shape_str(x.shape()));
  const std::size_t batch = x.dim(0), c = x.dim(1), l = x.dim(2);
  check(gamma.shape() == Shape{c} && beta.shape() == Shape{c},
        "batch_norm1d: affine parameters must be [C]");
  check(running_mean.size() == c && running_var.size() == c,
        "batch_norm1d: running statistics must be [C]");
  const std::size_t m = batch * l;  // reduction size per channel

  std::vector<double> mean(c, 0.0), var(c, 0.0), inv_std(c, 0.0);
  const auto& xv = x.values();
  if (training) {
    check(m > 1, "batch_norm1d: training mode needs more than one value per channel");
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double* row = xv.data() + (b * c + ch) * l;
        double s = 0.0;
        for (std::size_t j = 0; j < l; ++j) s += row[j];
        mean[ch] += s;
      }
    for (double& v : mean) v /= static_cast<double>(m);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double* row = xv.data() + (b * c + ch) * l;
        double s = 0.0;
        for (std::size_t j = 0; j < l; ++j) {
          const double d = row[j] - mean[ch];
          s += d * d;
        }
        var[ch] += s;
      }
    for (double& v : var) v /= static_cast<double>(m);
    // Running estimates track the unbiased variance.
    const double unbias = static_cast<double>(m) / static_cast<double>(m - 1);
    for (std::size_t ch = 0; ch < c; ++ch) {
      running_mean[ch] = (1.0 - momentum) * running_mean[ch] + momentum * mean[ch];
      running_var[ch] =
          (1.0 - momentum) * running_var[ch] + momentum * var[ch] * unbias;
    }
  } else {
    mean = running_mean;
    var = running_var;
  }
  for (std::size_t ch = 0; ch < c; ++ch)
    inv_std[ch] = 1.0 / std::sqrt(var[ch] + eps);

  auto xhat = std::make_shared<std::vector<double>>(x.size());
  std::vector<double> out(x.size());
  const auto& gv = gamma.values();
  const auto& bv = beta.values();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* row = xv.data() + (b * c + ch) * l;
      double* xh = xhat->data() + (b * c + ch) * l;
      double* dst = out.data() + (b * c + ch) * l;
      const double mu = mean[ch], is = inv_std[ch], ga = gv[ch], be = bv[ch];
      for (std::size_t j = 0; j < l; ++j) {
        xh[j] = (row[j] - mu) * is;
        dst[j] = ga * xh[j] + be;
      }
    }

  NodePtr xn = x.node(), gn = gamma.node(), be_n = beta.node();
  auto inv_std_saved = std::make_shared<std::vector<double>>(inv_std);
  return make_op(
      x.shape(), std::move(out), {xn, gn, be_n},
      [xn, gn, be_n, xhat, inv_std_saved, batch, c, l, training](Node& n) {
        const std::size_t m = batch * l;
        // Per-channel reductions of g and g*xhat feed all three gradients.
        std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t ch = 0; ch < c; ++ch) {
            const double* gy = n.grad.data() + (b * c + ch) * l;
            const double* xh = xhat->data() + (b * c + ch) * l;
            double s = 0.0, sx = 0.0;
            for (std::size_t j = 0; j < l; ++j) {
              s += gy[j];
              sx += gy[j] * xh[j];
            }
            sum_g[ch] += s;
            sum_gx[ch] += sx;
          }
        if (gn->requires_grad) {
          gn->ensure_grad();
          for (std::size_t ch = 0; ch < c; ++ch) gn->grad[ch] += sum_gx[ch];
        }
        if (be_n->requires_grad) {
          be_n->ensure_grad();
          for (std::size_t ch = 0; ch < c; ++ch) be_n->grad[ch] += sum_g[ch];
        }
        if (xn->requires_grad) {
          xn->ensure_grad();
          const double inv_m = 1.0 / static_cast<double>(m);
          for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t ch = 0; ch < c; ++ch) {
              const double* gy = n.grad.data() + (b * c + ch) * l;
              const double* xh = xhat->data() + (b * c + ch) * l;
              double* gx = xn->grad.data() + (b * c + ch) * l;
              const double ga = gn->value[ch];
              const double is = (*inv_std_saved)[ch];
              if (training) {
                for (std::size_t j = 0; j < l; ++j)
                  gx[j] += ga * is *
                           (gy[j] - inv_m * sum_g[ch] -
                            xh[j] * inv_m * sum_gx[ch]);
              } else {
                // Eval mode normalizes with constants.
                for (std::size_t j = 0; j < l; ++j) gx[j] += ga * is * gy[j];
              }
            }
        }
      });
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets) {
  check(logits.shape().size() == 2,
        "cross_entropy: logits must be [B,C], got " + shape_str(logits.shape()));
  const std::size_t batch = logits.dim(0), c = logits.dim(1);
  check(targets.size() == batch, "cross_entropy: targets size " +
                                     std::to_string(targets.size()) +
                                     " != batch " + std::to_string(batch));
  for (int t : targets)
    check(t >= 0 && static_cast<std::size_t>(t) < c,
          "cross_entropy: target class " + std::to_string(t) +
              " outside [0," + std::to_string(c) + ")");
  const auto& xv = logits.values();
  for (double v : xv)
    if (!std::isfinite(v))
      throw NumericError("cross_entropy: non-finite logit");

  auto probs = std::make_shared<std::vector<double>>(logits.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const double* row = xv.data() + i * c;
    double m = row[0];
    for (std::size_t j = 1; j < c; ++j) m = std::max(m, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) sum += std::exp(row[j] - m);
    const double lse = m + std::log(sum);
    loss += lse - row[targets[i]];
    for (std::size_t j = 0; j < c; ++j)
      (*probs)[i * c + j] = std::exp(row[j] - lse);
  }
  loss /= static_cast<double>(batch);

  NodePtr xn = logits.node();
  auto tgt = std::make_shared<std::vector<int>>(targets);
  return make_op({1}, {loss}, {xn}, [xn, probs, tgt, batch, c](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const double g = n.grad[0] / static_cast<double>(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      double* gx = xn->grad.data() + i * c;
      const double* p = probs->data() + i * c;
      for (std::size_t j = 0; j < c; ++j) gx[j] += g * p[j];
      gx[(*tgt)[i]] -= g;
    }
  });
}

}  // namespace flowpat::nn
