// Copyright 2026 The rlclass Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rlclass/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "kernels.hpp"
#include "rlclass/errors.hpp"

namespace rlclass {
namespace {

const Tensor kEmptyTensor;

void require_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite values produced by ") + what);
  }
}

Tape* common_tape(std::initializer_list<Var> vars) {
  Tape* tape = nullptr;
  for (const Var& v : vars) {
    if (!v.valid()) throw ContractViolation("operation on an unbound Var");
    if (tape == nullptr) tape = v.tape();
    if (v.tape() != tape) {
      throw ContractViolation("operation mixes Vars from different tapes");
    }
  }
  return tape;
}

}  // namespace

const Tensor& Var::value() const {
  if (!tape_) throw ContractViolation("value() on an unbound Var");
  return *tape_->nodes_[id_].value;
}

const Tensor& Var::grad() const {
  if (!tape_) throw ContractViolation("grad() on an unbound Var");
  const auto& node = tape_->nodes_[id_];
  if (node.param) return node.param->grad;
  return node.grad.empty() ? kEmptyTensor : node.grad;
}

bool Var::requires_grad() const {
  return tape_ && tape_->nodes_[id_].requires_grad;
}

Var Tape::constant(Tensor value) {
  require_finite(value, "constant");
  Node node;
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  nodes_.back().value = &nodes_.back().owned;
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant_view(const Tensor& value) {
  Node node;
  node.value = &value;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::input(Tensor value) {
  require_finite(value, "input");
  Node node;
  node.owned = std::move(value);
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  nodes_.back().value = &nodes_.back().owned;
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& param) {
  if (param.grad.shape() != param.value.shape()) param.grad = Tensor(param.value.shape());
  Node node;
  node.value = &param.value;
  node.param = &param;
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  require_finite(value, "forward op");
  Node node;
  node.owned = std::move(value);
  node.leaf = false;
  for (const Var& in : inputs) {
    if (in.tape() != this) throw ContractViolation("input recorded on another tape");
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  nodes_.back().value = &nodes_.back().owned;
  return Var(this, nodes_.size() - 1);
}

Tensor* Tape::grad_buffer(Node& node) {
  if (!node.requires_grad) return nullptr;
  Tensor& buffer = node.leaf ? node.pass : node.grad;
  if (buffer.shape() != node.value->shape()) buffer = Tensor(node.value->shape());
  return &buffer;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractViolation("backward on a foreign Var");
  Node& root = nodes_[loss.id()];
  if (root.value->size() != 1) {
    throw ContractViolation("backward requires a scalar loss, got shape " +
                            shape_string(root.value->shape()));
  }
  last_visits_ = 0;
  if (!root.requires_grad) return;

  // Every call starts from fresh buffers. Leaves add the finished result of
  // the call to their running total at the end, so k identical calls give
  // exactly k times one call's gradient.
  std::vector<char> reached(loss.id() + 1, 0);
  for (std::size_t i = 0; i <= loss.id(); ++i) {
    Node& n = nodes_[i];
    if (n.leaf) {
      n.pass = Tensor();
    } else {
      n.grad = Tensor();
    }
  }
  Tensor* seed = grad_buffer(root);
  (*seed)[0] += 1.0f;
  reached[loss.id()] = 1;

  std::vector<Tensor*> grad_in;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.leaf || !reached[i] || !n.requires_grad) continue;
    grad_in.clear();
    for (std::size_t in : n.inputs) {
      Tensor* g = grad_buffer(nodes_[in]);
      grad_in.push_back(g);
      if (g) reached[in] = 1;
    }
    n.backward(n.grad, grad_in);
    ++last_visits_;
    for (Tensor* g : grad_in) {
      if (g) require_finite(*g, "backward op");
    }
  }
  for (std::size_t i = 0; i <= loss.id(); ++i) {
    Node& n = nodes_[i];
    if (!n.leaf || !reached[i] || n.pass.empty()) continue;
    Tensor& total = n.param ? n.param->grad : n.grad;
    if (total.shape() != n.pass.shape()) total = Tensor(n.pass.shape());
    auto dst = total.data();
    const auto src = n.pass.data();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    n.pass = Tensor();
  }
}

namespace ops {

Var conv2d(Var input, Var kernel, Var bias) {
  Tape* tape = common_tape({input, kernel, bias});
  const Tensor& x = input.value();
  const Tensor& k = kernel.value();
  const Tensor& b = bias.value();
  if (x.rank() != 4 || k.rank() != 4 || b.rank() != 1) {
    throw ShapeError("conv2d expects input [B,H,W,C], kernel [3,3,Cin,Cout], bias [Cout]");
  }
  if (k.dim(0) != 3 || k.dim(1) != 3) {
    throw ShapeError("conv2d kernel must be 3x3, got " + shape_string(k.shape()));
  }
  if (k.dim(2) != x.dim(3)) {
    throw ShapeError("conv2d channel mismatch: input " + shape_string(x.shape()) +
                     " kernel " + shape_string(k.shape()));
  }
  if (b.dim(0) != k.dim(3)) throw ShapeError("conv2d bias size mismatch");

  const std::size_t batch = x.dim(0), h = x.dim(1), w = x.dim(2), cin = x.dim(3),
                    cout = k.dim(3);
  const std::size_t pixels = h * w, patch = 9 * cin;
  Tensor out({x.dim(0), x.dim(1), x.dim(2), k.dim(3)});
  std::vector<float> cols(pixels * patch);
  for (std::size_t n = 0; n < batch; ++n) {
    float* o = out.data().data() + n * pixels * cout;
    kernels::im2col3x3(x.data().data() + n * pixels * cin, cols.data(), h, w, cin);
    kernels::matmul_acc(cols.data(), k.data().data(), o, pixels, patch, cout);
    for (std::size_t p = 0; p < pixels; ++p) {
      for (std::size_t c = 0; c < cout; ++c) o[p * cout + c] += b[c];
    }
  }

  const Tensor* xp = &x;
  const Tensor* kp = &k;
  return tape->record(
      std::move(out), {input, kernel, bias},
      [xp, kp, batch, h, w, cin, cout](const Tensor& g, std::span<Tensor* const> gin) {
        const std::size_t pixels = h * w, patch = 9 * cin;
        std::vector<float> cols(pixels * patch);
        std::vector<float> dcols;
        std::vector<float> kt;
        if (gin[0]) {
          dcols.resize(pixels * patch);
          kt.resize(patch * cout);
          kernels::transpose(kp->data().data(), kt.data(), patch, cout);
        }
        for (std::size_t n = 0; n < batch; ++n) {
          const float* gn = g.data().data() + n * pixels * cout;
          if (gin[1]) {
            kernels::im2col3x3(xp->data().data() + n * pixels * cin, cols.data(), h, w, cin);
            kernels::matmul_tn_acc(cols.data(), gn, gin[1]->data().data(), pixels, patch,
                                   cout);
          }
          if (gin[0]) {
            std::fill(dcols.begin(), dcols.end(), 0.0f);
            kernels::matmul_acc(gn, kt.data(), dcols.data(), pixels, cout, patch);
            kernels::col2im3x3_acc(dcols.data(), gin[0]->data().data() + n * pixels * cin,
                                   h, w, cin);
          }
          if (gin[2]) {
            float* db = gin[2]->data().data();
            for (std::size_t p = 0; p < pixels; ++p) {
              for (std::size_t c = 0; c < cout; ++c) db[c] += gn[p * cout + c];
            }
          }
        }
      });
}

Var max_pool2x2(Var input) {
  Tape* tape = common_tape({input});
  const Tensor& x = input.value();
  if (x.rank() != 4) throw ShapeError("max_pool2x2 expects [B,H,W,C]");
  if (x.dim(1) % 2 != 0 || x.dim(2) % 2 != 0) {
    throw ShapeError("max_pool2x2 needs even H and W, got " + shape_string(x.shape()));
  }
  const std::size_t batch = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out({x.dim(0), x.dim(1) / 2, x.dim(2) / 2, x.dim(3)});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  const float* xd = x.data().data();
  std::size_t o = 0;
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xx = 0; xx < ow; ++xx) {
        for (std::size_t ch = 0; ch < c; ++ch, ++o) {
          std::size_t best = ((n * h + 2 * y) * w + 2 * xx) * c + ch;
          for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t idx = ((n * h + 2 * y + dy) * w + 2 * xx + dx) * c + ch;
              if (xd[idx] > xd[best]) best = idx;
            }
          }
          (*argmax)[o] = best;
          out[o] = xd[best];
        }
      }
    }
  }
  return tape->record(std::move(out), {input},
                      [argmax](const Tensor& g, std::span<Tensor* const> gin) {
                        float* dx = gin[0]->data().data();
                        for (std::size_t i = 0; i < argmax->size(); ++i) {
                          dx[(*argmax)[i]] += g[i];
                        }
                      });
}

Var dense(Var input, Var weight, Var bias) {
  Tape* tape = common_tape({input, weight, bias});
  const Tensor& x = input.value();
  const Tensor& wt = weight.value();
  const Tensor& b = bias.value();
  if (x.rank() != 2 || wt.rank() != 2 || b.rank() != 1) {
    throw ShapeError("dense expects input [B,n], weight [n,m], bias [m]");
  }
  if (x.dim(1) != wt.dim(0) || wt.dim(1) != b.dim(0)) {
    throw ShapeError("dense dimension mismatch: input " + shape_string(x.shape()) +
                     " weight " + shape_string(wt.shape()) + " bias " +
                     shape_string(b.shape()));
  }
  const std::size_t batch = x.dim(0), n = x.dim(1), m = wt.dim(1);
  Tensor out({x.dim(0), wt.dim(1)});
  kernels::matmul_acc(x.data().data(), wt.data().data(), out.data().data(), batch, n, m);
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += b[j];
  }
  const Tensor* xp = &x;
  const Tensor* wp = &wt;
  return tape->record(
      std::move(out), {input, weight, bias},
      [xp, wp, batch, n, m](const Tensor& g, std::span<Tensor* const> gin) {
        if (gin[0]) {
          std::vector<float> wtr(n * m);
          kernels::transpose(wp->data().data(), wtr.data(), n, m);
          kernels::matmul_acc(g.data().data(), wtr.data(), gin[0]->data().data(), batch, m,
                              n);
        }
        if (gin[1]) {
          kernels::matmul_tn_acc(xp->data().data(), g.data().data(), gin[1]->data().data(),
                                 batch, n, m);
        }
        if (gin[2]) {
          float* db = gin[2]->data().data();
          for (std::size_t i = 0; i < batch; ++i) {
            for (std::size_t j = 0; j < m; ++j) db[j] += g[i * m + j];
          }
        }
      });
}

Var relu(Var input) {
  Tape* tape = common_tape({input});
  const Tensor& x = input.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
  const Tensor* xp = &x;
  return tape->record(std::move(out), {input},
                      [xp](const Tensor& g, std::span<Tensor* const> gin) {
                        float* dx = gin[0]->data().data();
                        for (std::size_t i = 0; i < g.size(); ++i) {
                          if ((*xp)[i] > 0.0f) dx[i] += g[i];
                        }
                      });
}

Var layer_norm(Var input, Var gain, Var shift, float epsilon) {
  Tape* tape = common_tape({input, gain, shift});
  const Tensor& x = input.value();
  const Tensor& gn = gain.value();
  const Tensor& sh = shift.value();
  if (x.rank() != 2) throw ShapeError("layer_norm expects [B,n]");
  const std::size_t rows = x.dim(0), n = x.dim(1);
  if (gn.size() != n || sh.size() != n) throw ShapeError("layer_norm gain/shift size mismatch");

  Tensor out(x.shape());
  auto z = std::make_shared<Tensor>(x.shape());
  auto inv_std = std::make_shared<std::vector<float>>(rows);
  const float inv_n = 1.0f / static_cast<float>(n);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* xr = x.data().data() + r * n;
    float mean = 0.0f;
    for (std::size_t j = 0; j < n; ++j) mean += xr[j];
    mean *= inv_n;
    float var = 0.0f;
    for (std::size_t j = 0; j < n; ++j) {
      const float d = xr[j] - mean;
      var += d * d;
    }
    var *= inv_n;
    const float is = 1.0f / std::sqrt(var + epsilon);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const float zj = (xr[j] - mean) * is;
      (*z)[r * n + j] = zj;
      out[r * n + j] = gn[j] * zj + sh[j];
    }
  }
  const Tensor* gp = &gn;
  return tape->record(
      std::move(out), {input, gain, shift},
      [z, inv_std, gp, rows, n, inv_n](const Tensor& g, std::span<Tensor* const> gin) {
        std::vector<float> dz(n);
        for (std::size_t r = 0; r < rows; ++r) {
          const float* gr = g.data().data() + r * n;
          const float* zr = z->data().data() + r * n;
          if (gin[1]) {
            float* dg = gin[1]->data().data();
            for (std::size_t j = 0; j < n; ++j) dg[j] += gr[j] * zr[j];
          }
          if (gin[2]) {
            float* dsh = gin[2]->data().data();
            for (std::size_t j = 0; j < n; ++j) dsh[j] += gr[j];
          }
          if (gin[0]) {
            float mean_dz = 0.0f, mean_dz_z = 0.0f;
            for (std::size_t j = 0; j < n; ++j) {
              dz[j] = gr[j] * (*gp)[j];
              mean_dz += dz[j];
              mean_dz_z += dz[j] * zr[j];
            }
            mean_dz *= inv_n;
            mean_dz_z *= inv_n;
            float* dx = gin[0]->data().data() + r * n;
            const float is = (*inv_std)[r];
            for (std::size_t j = 0; j < n; ++j) {
              dx[j] += is * (dz[j] - mean_dz - zr[j] * mean_dz_z);
            }
          }
        }
      });
}

Var softmax(Var logits) {
  Tape* tape = common_tape({logits});
  const Tensor& x = logits.value();
  if (x.rank() != 2) throw ShapeError("softmax expects [B,K]");
  const std::size_t rows = x.dim(0), k = x.dim(1);
  if (k < 2) throw ShapeError("softmax needs at least two classes");
  auto out = std::make_shared<Tensor>(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const float* xr = x.data().data() + r * k;
    float* pr = out->data().data() + r * k;
    const float mx = *std::max_element(xr, xr + k);
    float total = 0.0f;
    for (std::size_t j = 0; j < k; ++j) {
      pr[j] = std::exp(xr[j] - mx);
      total += pr[j];
    }
    const float inv = 1.0f / total;
    for (std::size_t j = 0; j < k; ++j) pr[j] *= inv;
  }
  Tensor value = *out;
  return tape->record(std::move(value), {logits},
                      [out, rows, k](const Tensor& g, std::span<Tensor* const> gin) {
                        float* dx = gin[0]->data().data();
                        for (std::size_t r = 0; r < rows; ++r) {
                          const float* pr = out->data().data() + r * k;
                          const float* gr = g.data().data() + r * k;
                          float dot = 0.0f;
                          for (std::size_t j = 0; j < k; ++j) dot += gr[j] * pr[j];
                          for (std::size_t j = 0; j < k; ++j) {
                            dx[r * k + j] += pr[j] * (gr[j] - dot);
                          }
                        }
                      });
}

Var flatten(Var input) {
  Tape* tape = common_tape({input});
  const Tensor& x = input.value();
  if (x.rank() < 1) throw ShapeError("flatten of a rank-0 tensor");
  const std::int64_t batch = x.dim(0);
  Tensor out = x.reshaped({batch, static_cast<std::int64_t>(x.size()) / batch});
  return tape->record(std::move(out), {input},
                      [](const Tensor& g, std::span<Tensor* const> gin) {
                        float* dx = gin[0]->data().data();
                        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
                      });
}

Var sum(Var input) {
  Tape* tape = common_tape({input});
  const Tensor& x = input.value();
  float total = 0.0f;
  for (float v : x.data()) total += v;
  return tape->record(Tensor::scalar(total), {input},
                      [](const Tensor& g, std::span<Tensor* const> gin) {
                        const float gv = g[0];
                        for (float& d : gin[0]->data()) d += gv;
                      });
}

Var weighted_sum(Var input, const Tensor& weights) {
  Tape* tape = common_tape({input});
  const Tensor& x = input.value();
  if (weights.shape() != x.shape()) throw ShapeError("weighted_sum weight shape mismatch");
  float total = 0.0f;
  for (std::size_t i = 0; i < x.size(); ++i) total += x[i] * weights[i];
  auto w = std::make_shared<Tensor>(weights);
  return tape->record(Tensor::scalar(total), {input},
                      [w](const Tensor& g, std::span<Tensor* const> gin) {
                        const float gv = g[0];
                        float* dx = gin[0]->data().data();
                        for (std::size_t i = 0; i < w->size(); ++i) dx[i] += gv * (*w)[i];
                      });
}

Var weighted_log_pick(Var probs, std::span<const int> index, std::span<const float> coeff,
                      float floor) {
  Tape* tape = common_tape({probs});
  const Tensor& p = probs.value();
  if (p.rank() != 2) throw ShapeError("weighted_log_pick expects probs [B,K]");
  const std::size_t rows = p.dim(0), k = p.dim(1);
  if (index.size() != rows || coeff.size() != rows) {
    throw ShapeError("weighted_log_pick: index/coefficient count does not match batch");
  }
  for (int i : index) {
    if (i < 0 || static_cast<std::size_t>(i) >= k) {
      throw InputError("class index " + std::to_string(i) + " out of range");
    }
  }
  float total = 0.0f;
  for (std::size_t t = 0; t < rows; ++t) {
    const float pt = p[t * k + index[t]];
    total += coeff[t] * std::log(std::max(pt, floor));
  }
  auto idx = std::make_shared<std::vector<int>>(index.begin(), index.end());
  auto cf = std::make_shared<std::vector<float>>(coeff.begin(), coeff.end());
  const Tensor* pp = &p;
  return tape->record(Tensor::scalar(total), {probs},
                      [idx, cf, pp, k, floor](const Tensor& g, std::span<Tensor* const> gin) {
                        const float gv = g[0];
                        float* dp = gin[0]->data().data();
                        for (std::size_t t = 0; t < idx->size(); ++t) {
                          const std::size_t at = t * k + (*idx)[t];
                          const float pt = (*pp)[at];
                          if (pt > floor) dp[at] += gv * (*cf)[t] / pt;
                        }
                      });
}

}  // namespace ops
}  // namespace rlclass
