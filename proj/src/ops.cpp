#include "gazelab/ops.hpp"

#include <cmath>
#include <cstring>

#include "gazelab/parallel.hpp"

namespace gazelab::ops {

namespace {

void require_feature_map(const Tensor& t, const char* who) {
  if (t.rank() != 3)
    throw ShapeError(std::string(who) + ": expected rank-3 h x w x c input");
}

}  // namespace

Tensor conv2d(const Tensor& input, const KernelSet& kernels) {
  require_feature_map(input, "conv2d");
  const std::size_t h = input.dim(0), w = input.dim(1), ci = input.dim(2);
  const std::size_t kh = kernels.kh(), kw = kernels.kw();
  const std::size_t co = kernels.out_channels();
  if (ci != kernels.in_channels())
    throw ShapeError("conv2d: input channels do not match kernel");
  if (kh % 2 == 0 || kw % 2 == 0)
    throw ShapeError("conv2d: same padding requires odd kernel extents");
  if (!input.all_finite() || !kernels.weights.all_finite())
    throw NumericError("conv2d: non-finite input");

  const std::size_t ph = kh / 2, pw = kw / 2;
  Tensor out(std::vector<std::size_t>{h, w, co});
  const double* in = input.data();
  const double* wgt = kernels.weights.data();
  double* o = out.data();

  parallel_for(h, [&](std::size_t y) {
    for (std::size_t x = 0; x < w; ++x) {
      double* orow = o + (y * w + x) * co;
      for (std::size_t c = 0; c < co; ++c) orow[c] = kernels.bias[c];
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) -
                                  static_cast<std::ptrdiff_t>(ph);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + kx) -
                                    static_cast<std::ptrdiff_t>(pw);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
          const double* ipix = in + (static_cast<std::size_t>(iy) * w +
                                     static_cast<std::size_t>(ix)) *
                                        ci;
          const double* wtap = wgt + (ky * kw + kx) * ci * co;
          for (std::size_t c = 0; c < ci; ++c) {
            const double a = ipix[c];
            const double* wrow = wtap + c * co;
            for (std::size_t oc = 0; oc < co; ++oc) orow[oc] += a * wrow[oc];
          }
        }
      }
    }
  });
  return out;
}

ConvGrads conv2d_backward(const Tensor& input, const KernelSet& kernels,
                          const Tensor& grad_out) {
  require_feature_map(input, "conv2d_backward");
  const std::size_t h = input.dim(0), w = input.dim(1), ci = input.dim(2);
  const std::size_t kh = kernels.kh(), kw = kernels.kw();
  const std::size_t co = kernels.out_channels();
  if (ci != kernels.in_channels())
    throw ShapeError("conv2d_backward: input channels do not match kernel");
  if (grad_out.rank() != 3 || grad_out.dim(0) != h || grad_out.dim(1) != w ||
      grad_out.dim(2) != co)
    throw ShapeError("conv2d_backward: grad_out extents do not match output");

  const std::size_t ph = kh / 2, pw = kw / 2;
  ConvGrads grads;
  grads.input = Tensor(std::vector<std::size_t>{h, w, ci});
  grads.kernels = KernelSet(kh, kw, ci, co);

  const double* in = input.data();
  const double* wgt = kernels.weights.data();
  const double* go = grad_out.data();

  // d loss / d input: gather over the kernel taps that touch each position.
  double* gi = grads.input.data();
  parallel_for(h, [&](std::size_t y) {
    for (std::size_t x = 0; x < w; ++x) {
      double* gpix = gi + (y * w + x) * ci;
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(y + ph) -
                                  static_cast<std::ptrdiff_t>(ky);
        if (oy < 0 || oy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(x + pw) -
                                    static_cast<std::ptrdiff_t>(kx);
          if (ox < 0 || ox >= static_cast<std::ptrdiff_t>(w)) continue;
          const double* gorow = go + (static_cast<std::size_t>(oy) * w +
                                      static_cast<std::size_t>(ox)) *
                                         co;
          const double* wtap = wgt + (ky * kw + kx) * ci * co;
          for (std::size_t c = 0; c < ci; ++c) {
            const double* wrow = wtap + c * co;
            double acc = 0.0;
            for (std::size_t oc = 0; oc < co; ++oc) acc += gorow[oc] * wrow[oc];
            gpix[c] += acc;
          }
        }
      }
    }
  });

  // d loss / d weights and bias: accumulate over all output positions in a
  // fixed scan order so results are bit-stable.
  double* gw = grads.kernels.weights.data();
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double* gorow = go + (y * w + x) * co;
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) -
                                  static_cast<std::ptrdiff_t>(ph);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + kx) -
                                    static_cast<std::ptrdiff_t>(pw);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
          const double* ipix = in + (static_cast<std::size_t>(iy) * w +
                                     static_cast<std::size_t>(ix)) *
                                        ci;
          double* gwtap = gw + (ky * kw + kx) * ci * co;
          for (std::size_t c = 0; c < ci; ++c) {
            const double a = ipix[c];
            double* gwrow = gwtap + c * co;
            for (std::size_t oc = 0; oc < co; ++oc) gwrow[oc] += a * gorow[oc];
          }
        }
      }
      for (std::size_t oc = 0; oc < co; ++oc)
        grads.kernels.bias[oc] += gorow[oc];
    }
  }
  return grads;
}

Tensor deconv2d(const Tensor& input, const KernelSet& kernels) {
  require_feature_map(input, "deconv2d");
  const std::size_t h = input.dim(0), w = input.dim(1), ci = input.dim(2);
  const std::size_t co = kernels.out_channels();
  if (kernels.kh() != 2 || kernels.kw() != 2)
    throw ShapeError("deconv2d: kernel must be 2x2");
  if (ci != kernels.in_channels())
    throw ShapeError("deconv2d: input channels do not match kernel");
  if (!input.all_finite() || !kernels.weights.all_finite())
    throw NumericError("deconv2d: non-finite input");

  const std::size_t oh = 2 * h, ow = 2 * w;
  Tensor out(std::vector<std::size_t>{oh, ow, co});
  const double* in = input.data();
  const double* wgt = kernels.weights.data();
  double* o = out.data();

  for (std::size_t i = 0; i < oh * ow; ++i) {
    double* opix = o + i * co;
    for (std::size_t oc = 0; oc < co; ++oc) opix[oc] = kernels.bias[oc];
  }
  // Stride equals kernel size, so each input site owns a disjoint 2x2 patch.
  parallel_for(h, [&](std::size_t y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double* ipix = in + (y * w + x) * ci;
      for (std::size_t ky = 0; ky < 2; ++ky) {
        for (std::size_t kx = 0; kx < 2; ++kx) {
          double* opix = o + ((2 * y + ky) * ow + (2 * x + kx)) * co;
          const double* wtap = wgt + (ky * 2 + kx) * ci * co;
          for (std::size_t c = 0; c < ci; ++c) {
            const double a = ipix[c];
            const double* wrow = wtap + c * co;
            for (std::size_t oc = 0; oc < co; ++oc) opix[oc] += a * wrow[oc];
          }
        }
      }
    }
  });
  return out;
}

ConvGrads deconv2d_backward(const Tensor& input, const KernelSet& kernels,
                            const Tensor& grad_out) {
  require_feature_map(input, "deconv2d_backward");
  const std::size_t h = input.dim(0), w = input.dim(1), ci = input.dim(2);
  const std::size_t co = kernels.out_channels();
  if (kernels.kh() != 2 || kernels.kw() != 2)
    throw ShapeError("deconv2d_backward: kernel must be 2x2");
  if (ci != kernels.in_channels())
    throw ShapeError("deconv2d_backward: input channels do not match kernel");
  if (grad_out.rank() != 3 || grad_out.dim(0) != 2 * h ||
      grad_out.dim(1) != 2 * w || grad_out.dim(2) != co)
    throw ShapeError("deconv2d_backward: grad_out extents do not match output");

  ConvGrads grads;
  grads.input = Tensor(std::vector<std::size_t>{h, w, ci});
  grads.kernels = KernelSet(2, 2, ci, co);

  const std::size_t ow = 2 * w;
  const double* in = input.data();
  const double* wgt = kernels.weights.data();
  const double* go = grad_out.data();
  double* gi = grads.input.data();

  parallel_for(h, [&](std::size_t y) {
    for (std::size_t x = 0; x < w; ++x) {
      double* gpix = gi + (y * w + x) * ci;
      for (std::size_t ky = 0; ky < 2; ++ky) {
        for (std::size_t kx = 0; kx < 2; ++kx) {
          const double* gorow = go + ((2 * y + ky) * ow + (2 * x + kx)) * co;
          const double* wtap = wgt + (ky * 2 + kx) * ci * co;
          for (std::size_t c = 0; c < ci; ++c) {
            const double* wrow = wtap + c * co;
            double acc = 0.0;
            for (std::size_t oc = 0; oc < co; ++oc) acc += gorow[oc] * wrow[oc];
            gpix[c] += acc;
          }
        }
      }
    }
  });

  double* gw = grads.kernels.weights.data();
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double* ipix = in + (y * w + x) * ci;
      for (std::size_t ky = 0; ky < 2; ++ky) {
        for (std::size_t kx = 0; kx < 2; ++kx) {
          const double* gorow = go + ((2 * y + ky) * ow + (2 * x + kx)) * co;
          double* gwtap = gw + (ky * 2 + kx) * ci * co;
          for (std::size_t c = 0; c < ci; ++c) {
            const double a = ipix[c];
            double* gwrow = gwtap + c * co;
            for (std::size_t oc = 0; oc < co; ++oc) gwrow[oc] += a * gorow[oc];
          }
        }
      }
    }
  }
  const std::size_t out_positions = 4 * h * w;
  for (std::size_t i = 0; i < out_positions; ++i) {
    const double* gorow = go + i * co;
    for (std::size_t oc = 0; oc < co; ++oc) grads.kernels.bias[oc] += gorow[oc];
  }
  return grads;
}

PoolResult maxpool2d(const Tensor& input) {
  require_feature_map(input, "maxpool2d");
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  if (h % 2 != 0 || w % 2 != 0)
    throw ShapeError("maxpool2d: height and width must be even");

  const std::size_t oh = h / 2, ow = w / 2;
  PoolResult result;
  result.output = Tensor(std::vector<std::size_t>{oh, ow, c});
  result.argmax.assign(oh * ow * c, 0);

  const double* in = input.data();
  double* o = result.output.data();
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double best = -1.0;
        std::size_t best_idx = 0;
        bool first = true;
        // Row-major window scan; strict > keeps the first maximal index.
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx =
                ((2 * y + dy) * w + (2 * x + dx)) * c + ch;
            if (first || in[idx] > best) {
              best = in[idx];
              best_idx = idx;
              first = false;
            }
          }
        }
        const std::size_t out_idx = (y * ow + x) * c + ch;
        o[out_idx] = best;
        result.argmax[out_idx] = best_idx;
      }
    }
  }
  return result;
}

Tensor maxpool2d_backward(const std::vector<std::size_t>& input_dims,
                          const PoolResult& pooled, const Tensor& grad_out) {
  if (!grad_out.same_dims(pooled.output))
    throw ShapeError("maxpool2d_backward: grad_out extents do not match");
  Tensor grad_in(input_dims);
  const double* go = grad_out.data();
  double* gi = grad_in.data();
  // Pool windows are disjoint, so each argmax target is written once.
  for (std::size_t i = 0; i < pooled.argmax.size(); ++i)
    gi[pooled.argmax[i]] += go[i];
  return grad_in;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.dims());
  const double* in = input.data();
  double* o = out.data();
  for (std::size_t i = 0; i < input.size(); ++i)
    o[i] = in[i] > 0.0 ? in[i] : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  if (!input.same_dims(grad_out))
    throw ShapeError("relu_backward: extents do not match");
  Tensor out(input.dims());
  const double* in = input.data();
  const double* go = grad_out.data();
  double* o = out.data();
  for (std::size_t i = 0; i < input.size(); ++i)
    o[i] = in[i] > 0.0 ? go[i] : 0.0;
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_dims(b)) throw ShapeError("add: extents do not match");
  Tensor out(a.dims());
  const double* pa = a.data();
  const double* pb = b.data();
  double* o = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) o[i] = pa[i] + pb[i];
  return out;
}

Tensor bilinear_resize(const Tensor& map, std::size_t target_h,
                       std::size_t target_w) {
  if (map.rank() != 2)
    throw ShapeError("bilinear_resize: expected rank-2 map");
  if (target_h == 0 || target_w == 0)
    throw ShapeError("bilinear_resize: zero target extent");

  const std::size_t sh = map.dim(0), sw = map.dim(1);
  Tensor out(std::vector<std::size_t>{target_h, target_w});
  const double sy_scale =
      (target_h > 1 && sh > 1)
          ? static_cast<double>(sh - 1) / static_cast<double>(target_h - 1)
          : 0.0;
  const double sx_scale =
      (target_w > 1 && sw > 1)
          ? static_cast<double>(sw - 1) / static_cast<double>(target_w - 1)
          : 0.0;

  for (std::size_t ty = 0; ty < target_h; ++ty) {
    const double sy = ty * sy_scale;
    const std::size_t y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = (y0 + 1 < sh) ? y0 + 1 : y0;
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t tx = 0; tx < target_w; ++tx) {
      const double sx = tx * sx_scale;
      const std::size_t x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = (x0 + 1 < sw) ? x0 + 1 : x0;
      const double fx = sx - static_cast<double>(x0);
      const double top = map.at(y0, x0) * (1.0 - fx) + map.at(y0, x1) * fx;
      const double bottom = map.at(y1, x0) * (1.0 - fx) + map.at(y1, x1) * fx;
      out.at(ty, tx) = top * (1.0 - fy) + bottom * fy;
    }
  }
  return out;
}

}  // namespace gazelab::ops
