#include "emorec/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace emorec::nn {

namespace {

constexpr double kProbClampLo = 1e-7;
constexpr double kProbClampHi = 1.0 - 1e-7;

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": expected " + shape_string(a.shape) +
                     ", got " + shape_string(b.shape));
  }
}

void check_rank(const Tensor& t, size_t rank, const char* op) {
  if (t.shape.size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " +
                     std::to_string(rank) + " tensor, got " +
                     shape_string(t.shape));
  }
}

}  // namespace

Tensor::Tensor(std::vector<int> shape_, std::vector<double> values)
    : shape(std::move(shape_)), v(std::move(values)) {
  if (shape_count(shape) != v.size()) {
    throw ShapeError("tensor value count " + std::to_string(v.size()) +
                     " does not match shape " + shape_string(shape));
  }
}

Tensor Tensor::zeros(std::vector<int> shape_) {
  Tensor t;
  t.shape = std::move(shape_);
  t.v.assign(shape_count(t.shape), 0.0);
  return t;
}

void Tensor::require_finite(const char* what) const {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericalError(std::string(what) + ": non-finite value");
    }
  }
}

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

size_t shape_count(const std::vector<int>& shape) {
  size_t n = 1;
  for (int e : shape) {
    if (e <= 0) throw ShapeError("non-positive extent in " + shape_string(shape));
    n *= static_cast<size_t>(e);
  }
  return n;
}

// ---------------------------------------------------------------------------
// Node plumbing
// ---------------------------------------------------------------------------

Tensor& Node::grad() {
  if (grad_.v.empty()) grad_ = Tensor::zeros(value.shape);
  return grad_;
}

void Node::zero_grad() {
  std::fill(grad_.v.begin(), grad_.v.end(), 0.0);
}

NodeRef constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = false;
  return n;
}

NodeRef parameter(Tensor value, std::string name) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->name = std::move(name);
  return n;
}

NodeRef make_node(Tensor value, std::vector<NodeRef> parents,
                  std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents_ = std::move(parents);
  for (const auto& p : n->parents_) {
    if (p->requires_grad) n->requires_grad = true;
  }
  if (n->requires_grad) n->backward_ = std::move(backward);
  return n;
}

void backward(const NodeRef& root) {
  if (root->value.size() != 1) {
    throw ShapeError("backward: root must be scalar, got " +
                     shape_string(root->value.shape));
  }
  static int epoch = 0;
  const int mark = ++epoch;

  // Iterative DFS post-order over parent edges; reversed it is a
  // topological order with the root first.
  std::vector<Node*> order;
  std::vector<std::pair<Node*, size_t>> stack;
  if (root->requires_grad) stack.push_back({root.get(), 0});
  root->visit_mark_ = mark;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents_.size()) {
      Node* parent = node->parents_[next++].get();
      if (parent->visit_mark_ != mark && parent->requires_grad) {
        parent->visit_mark_ = mark;
        stack.push_back({parent, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->grad().v[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_) node->backward_(*node);
  }
}

void zero_grads(const std::vector<NodeRef>& params) {
  for (const auto& p : params) p->zero_grad();
}

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

NodeRef add(const NodeRef& a, const NodeRef& b) {
  check_same_shape(a->value, b->value, "add");
  Tensor out = a->value;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += b->value.v[i];
  return make_node(std::move(out), {a, b}, [ap = a.get(), bp = b.get()](Node& self) {
    const auto& g = self.grad().v;
    if (ap->requires_grad) {
      auto& ga = ap->grad().v;
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (bp->requires_grad) {
      auto& gb = bp->grad().v;
      for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

NodeRef mul(const NodeRef& a, const NodeRef& b) {
  check_same_shape(a->value, b->value, "mul");
  Tensor out = a->value;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= b->value.v[i];
  return make_node(std::move(out), {a, b}, [ap = a.get(), bp = b.get()](Node& self) {
    const auto& g = self.grad().v;
    if (ap->requires_grad) {
      auto& ga = ap->grad().v;
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bp->value.v[i];
    }
    if (bp->requires_grad) {
      auto& gb = bp->grad().v;
      for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ap->value.v[i];
    }
  });
}

NodeRef scale(const NodeRef& a, double factor) {
  Tensor out = a->value;
  for (double& x : out.v) x *= factor;
  return make_node(std::move(out), {a}, [ap = a.get(), factor](Node& self) {
    const auto& g = self.grad().v;
    auto& ga = ap->grad().v;
    for (size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

NodeRef relu(const NodeRef& x) {
  Tensor out = x->value;
  for (double& v : out.v) v = v > 0.0 ? v : 0.0;
  return make_node(std::move(out), {x}, [xp = x.get()](Node& self) {
    const auto& g = self.grad().v;
    auto& gx = xp->grad().v;
    for (size_t i = 0; i < g.size(); ++i) {
      if (xp->value.v[i] > 0.0) gx[i] += g[i];
    }
  });
}

NodeRef sigmoid(const NodeRef& x) {
  Tensor out = x->value;
  for (double& v : out.v) v = 1.0 / (1.0 + std::exp(-v));
  return make_node(std::move(out), {x}, [xp = x.get()](Node& self) {
    const auto& g = self.grad().v;
    const auto& y = self.value.v;
    auto& gx = xp->grad().v;
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

NodeRef tanh_op(const NodeRef& x) {
  Tensor out = x->value;
  for (double& v : out.v) v = std::tanh(v);
  return make_node(std::move(out), {x}, [xp = x.get()](Node& self) {
    const auto& g = self.grad().v;
    const auto& y = self.value.v;
    auto& gx = xp->grad().v;
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

NodeRef softmax(const NodeRef& logits) {
  check_rank(logits->value, 1, "softmax");
  Tensor out = logits->value;
  const double m = *std::max_element(out.v.begin(), out.v.end());
  double sum = 0.0;
  for (double& v : out.v) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : out.v) v /= sum;
  return make_node(std::move(out), {logits}, [lp = logits.get()](Node& self) {
    const auto& g = self.grad().v;
    const auto& p = self.value.v;
    auto& gl = lp->grad().v;
    double dot = 0.0;
    for (size_t i = 0; i < g.size(); ++i) dot += g[i] * p[i];
    for (size_t i = 0; i < g.size(); ++i) gl[i] += p[i] * (g[i] - dot);
  });
}

NodeRef cross_entropy(const NodeRef& probs, int target) {
  check_rank(probs->value, 1, "cross_entropy");
  const int k = probs->value.extent(0);
  if (target < 0 || target >= k) {
    throw InvalidInputError("cross_entropy target " + std::to_string(target) +
                            " out of range for k=" + std::to_string(k));
  }
  const double p = probs->value.v[static_cast<size_t>(target)];
  const double clamped = std::clamp(p, kProbClampLo, kProbClampHi);
  Tensor out = Tensor::scalar(-std::log(clamped));
  return make_node(std::move(out), {probs}, [pp = probs.get(), target](Node& self) {
    const double g = self.grad().v[0];
    const double pv = pp->value.v[static_cast<size_t>(target)];
    if (pv > kProbClampLo && pv < kProbClampHi) {
      pp->grad().v[static_cast<size_t>(target)] += g * (-1.0 / pv);
    }
  });
}

NodeRef slice(const NodeRef& x, int offset, int length) {
  check_rank(x->value, 1, "slice");
  const int n = x->value.extent(0);
  if (offset < 0 || length <= 0 || offset + length > n) {
    throw InvalidInputError("slice [" + std::to_string(offset) + ", " +
                            std::to_string(offset + length) +
                            ") out of bounds for length " + std::to_string(n));
  }
  Tensor out({length}, std::vector<double>(
                           x->value.v.begin() + offset,
                           x->value.v.begin() + offset + length));
  return make_node(std::move(out), {x}, [xp = x.get(), offset](Node& self) {
    const auto& g = self.grad().v;
    auto& gx = xp->grad().v;
    for (size_t i = 0; i < g.size(); ++i) gx[static_cast<size_t>(offset) + i] += g[i];
  });
}

NodeRef concat(const std::vector<NodeRef>& parts) {
  if (parts.empty()) throw InvalidInputError("concat of zero tensors");
  std::vector<double> values;
  std::vector<NodeRef> parents;
  for (const auto& p : parts) {
    check_rank(p->value, 1, "concat");
    values.insert(values.end(), p->value.v.begin(), p->value.v.end());
    parents.push_back(p);
  }
  const int total = static_cast<int>(values.size());
  Tensor out({total}, std::move(values));
  std::vector<Node*> raw;
  for (const auto& p : parts) raw.push_back(p.get());
  return make_node(std::move(out), std::move(parents), [raw](Node& self) {
    const auto& g = self.grad().v;
    size_t off = 0;
    for (Node* p : raw) {
      const size_t n = p->value.size();
      if (p->requires_grad) {
        auto& gp = p->grad().v;
        for (size_t i = 0; i < n; ++i) gp[i] += g[off + i];
      }
      off += n;
    }
  });
}

NodeRef flatten(const NodeRef& x) {
  Tensor out({static_cast<int>(x->value.size())}, x->value.v);
  return make_node(std::move(out), {x}, [xp = x.get()](Node& self) {
    const auto& g = self.grad().v;
    auto& gx = xp->grad().v;
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

NodeRef affine(const NodeRef& weight, const NodeRef& bias, const NodeRef& x) {
  check_rank(weight->value, 2, "affine weight");
  check_rank(bias->value, 1, "affine bias");
  check_rank(x->value, 1, "affine input");
  const int out_dim = weight->value.extent(0);
  const int in_dim = weight->value.extent(1);
  if (x->value.extent(0) != in_dim) {
    throw ShapeError("affine: expected input [" + std::to_string(in_dim) +
                     "], got " + shape_string(x->value.shape));
  }
  if (bias->value.extent(0) != out_dim) {
    throw ShapeError("affine: expected bias [" + std::to_string(out_dim) +
                     "], got " + shape_string(bias->value.shape));
  }
  Tensor out = Tensor::zeros({out_dim});
  const double* wv = weight->value.v.data();
  const double* xv = x->value.v.data();
  for (int o = 0; o < out_dim; ++o) {
    double acc = bias->value.v[static_cast<size_t>(o)];
    const double* row = wv + static_cast<size_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) acc += row[i] * xv[i];
    out.v[static_cast<size_t>(o)] = acc;
  }
  return make_node(
      std::move(out), {weight, bias, x},
      [wp = weight.get(), bp = bias.get(), xp = x.get(), out_dim,
       in_dim](Node& self) {
        const auto& g = self.grad().v;
        if (wp->requires_grad) {
          auto& gw = wp->grad().v;
          for (int o = 0; o < out_dim; ++o) {
            double* row = gw.data() + static_cast<size_t>(o) * in_dim;
            const double go = g[static_cast<size_t>(o)];
            const double* xv = xp->value.v.data();
            for (int i = 0; i < in_dim; ++i) row[i] += go * xv[i];
          }
        }
        if (bp->requires_grad) {
          auto& gb = bp->grad().v;
          for (int o = 0; o < out_dim; ++o) gb[static_cast<size_t>(o)] += g[static_cast<size_t>(o)];
        }
        if (xp->requires_grad) {
          auto& gx = xp->grad().v;
          const double* wv = wp->value.v.data();
          for (int o = 0; o < out_dim; ++o) {
            const double go = g[static_cast<size_t>(o)];
            const double* row = wv + static_cast<size_t>(o) * in_dim;
            for (int i = 0; i < in_dim; ++i) gx[static_cast<size_t>(i)] += go * row[i];
          }
        }
      });
}

NodeRef broadcast_mul(const NodeRef& map, const NodeRef& x) {
  check_rank(map->value, 3, "broadcast_mul map");
  check_rank(x->value, 3, "broadcast_mul input");
  if (map->value.extent(0) != 1) {
    throw ShapeError("broadcast_mul: map must be single-channel, got " +
                     shape_string(map->value.shape));
  }
  if (map->value.extent(1) != x->value.extent(1) ||
      map->value.extent(2) != x->value.extent(2)) {
    throw ShapeError("broadcast_mul: map " + shape_string(map->value.shape) +
                     " does not cover input " + shape_string(x->value.shape));
  }
  const int channels = x->value.extent(0);
  const size_t plane = static_cast<size_t>(x->value.extent(1)) * x->value.extent(2);
  Tensor out = x->value;
  for (int c = 0; c < channels; ++c) {
    double* dst = out.v.data() + static_cast<size_t>(c) * plane;
    const double* m = map->value.v.data();
    for (size_t i = 0; i < plane; ++i) dst[i] *= m[i];
  }
  return make_node(
      std::move(out), {map, x},
      [mp = map.get(), xp = x.get(), channels, plane](Node& self) {
        const auto& g = self.grad().v;
        if (mp->requires_grad) {
          auto& gm = mp->grad().v;
          for (int c = 0; c < channels; ++c) {
            const double* gr = g.data() + static_cast<size_t>(c) * plane;
            const double* xr = xp->value.v.data() + static_cast<size_t>(c) * plane;
            for (size_t i = 0; i < plane; ++i) gm[i] += gr[i] * xr[i];
          }
        }
        if (xp->requires_grad) {
          auto& gx = xp->grad().v;
          const double* m = mp->value.v.data();
          for (int c = 0; c < channels; ++c) {
            double* gr = gx.data() + static_cast<size_t>(c) * plane;
            const double* go = g.data() + static_cast<size_t>(c) * plane;
            for (size_t i = 0; i < plane; ++i) gr[i] += go[i] * m[i];
          }
        }
      });
}

NodeRef concat_channels(const NodeRef& a, const NodeRef& b) {
  check_rank(a->value, 3, "concat_channels");
  check_rank(b->value, 3, "concat_channels");
  if (a->value.extent(1) != b->value.extent(1) ||
      a->value.extent(2) != b->value.extent(2)) {
    throw ShapeError("concat_channels: spatial mismatch " +
                     shape_string(a->value.shape) + " vs " +
                     shape_string(b->value.shape));
  }
  Tensor out = Tensor::zeros({a->value.extent(0) + b->value.extent(0),
                              a->value.extent(1), a->value.extent(2)});
  std::copy(a->value.v.begin(), a->value.v.end(), out.v.begin());
  std::copy(b->value.v.begin(), b->value.v.end(),
            out.v.begin() + static_cast<std::ptrdiff_t>(a->value.size()));
  return make_node(std::move(out), {a, b}, [ap = a.get(), bp = b.get()](Node& self) {
    const auto& g = self.grad().v;
    const size_t na = ap->value.size();
    if (ap->requires_grad) {
      auto& ga = ap->grad().v;
      for (size_t i = 0; i < na; ++i) ga[i] += g[i];
    }
    if (bp->requires_grad) {
      auto& gb = bp->grad().v;
      for (size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
    }
  });
}

// ---------------------------------------------------------------------------
// Convolutions
// ---------------------------------------------------------------------------

NodeRef conv2d(const NodeRef& x, const NodeRef& w, const NodeRef& b) {
  check_rank(x->value, 3, "conv2d input");
  check_rank(w->value, 4, "conv2d weight");
  check_rank(b->value, 1, "conv2d bias");
  const int in_c = x->value.extent(0);
  const int h = x->value.extent(1);
  const int width = x->value.extent(2);
  const int out_c = w->value.extent(0);
  const int kh = w->value.extent(2);
  const int kw = w->value.extent(3);
  if (w->value.extent(1) != in_c) {
    throw ShapeError("conv2d: weight expects " +
                     std::to_string(w->value.extent(1)) + " input channels, input has " +
                     std::to_string(in_c));
  }
  if (b->value.extent(0) != out_c) {
    throw ShapeError("conv2d: bias length " + std::to_string(b->value.extent(0)) +
                     " != out channels " + std::to_string(out_c));
  }
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw ConfigError("conv2d: same padding requires odd kernels, got " +
                      std::to_string(kh) + "x" + std::to_string(kw));
  }
  const int ph = kh / 2, pw = kw / 2;
  const size_t plane = static_cast<size_t>(h) * width;

  Tensor out = Tensor::zeros({out_c, h, width});
  for (int oc = 0; oc < out_c; ++oc) {
    double* ocp = out.v.data() + static_cast<size_t>(oc) * plane;
    const double bias_v = b->value.v[static_cast<size_t>(oc)];
    for (size_t i = 0; i < plane; ++i) ocp[i] = bias_v;
    for (int ic = 0; ic < in_c; ++ic) {
      const double* icp = x->value.v.data() + static_cast<size_t>(ic) * plane;
      const double* wrow = w->value.v.data() +
                           ((static_cast<size_t>(oc) * in_c + ic) * kh) * kw;
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          const double wv = wrow[static_cast<size_t>(ky) * kw + kx];
          const int dy = ky - ph, dx = kx - pw;
          const int oy_lo = std::max(0, -dy), oy_hi = std::min(h, h - dy);
          const int ox_lo = std::max(0, -dx), ox_hi = std::min(width, width - dx);
          for (int oy = oy_lo; oy < oy_hi; ++oy) {
            double* orow = ocp + static_cast<size_t>(oy) * width;
            const double* irow = icp + static_cast<size_t>(oy + dy) * width + dx;
            for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * irow[ox];
          }
        }
      }
    }
  }

  return make_node(
      std::move(out), {x, w, b},
      [xp = x.get(), wp = w.get(), bp = b.get(), in_c, out_c, h, width, kh, kw,
       ph, pw, plane](Node& self) {
        const double* g = self.grad().v.data();
        if (bp->requires_grad) {
          auto& gb = bp->grad().v;
          for (int oc = 0; oc < out_c; ++oc) {
            const double* gp = g + static_cast<size_t>(oc) * plane;
            double acc = 0.0;
            for (size_t i = 0; i < plane; ++i) acc += gp[i];
            gb[static_cast<size_t>(oc)] += acc;
          }
        }
        for (int oc = 0; oc < out_c; ++oc) {
          const double* gp = g + static_cast<size_t>(oc) * plane;
          for (int ic = 0; ic < in_c; ++ic) {
            const double* icp = xp->value.v.data() + static_cast<size_t>(ic) * plane;
            double* gx = xp->requires_grad
                             ? xp->grad().v.data() + static_cast<size_t>(ic) * plane
                             : nullptr;
            const size_t wbase = ((static_cast<size_t>(oc) * in_c + ic) * kh) * kw;
            for (int ky = 0; ky < kh; ++ky) {
              for (int kx = 0; kx < kw; ++kx) {
                const int dy = ky - ph, dx = kx - pw;
                const int oy_lo = std::max(0, -dy), oy_hi = std::min(h, h - dy);
                const int ox_lo = std::max(0, -dx), ox_hi = std::min(width, width - dx);
                double wacc = 0.0;
                const double wv = wp->value.v[wbase + static_cast<size_t>(ky) * kw + kx];
                for (int oy = oy_lo; oy < oy_hi; ++oy) {
                  const double* grow = gp + static_cast<size_t>(oy) * width;
                  const double* irow = icp + static_cast<size_t>(oy + dy) * width + dx;
                  double* gxrow = gx ? gx + static_cast<size_t>(oy + dy) * width + dx
                                     : nullptr;
                  for (int ox = ox_lo; ox < ox_hi; ++ox) {
                    wacc += grow[ox] * irow[ox];
                    if (gxrow) gxrow[ox] += grow[ox] * wv;
                  }
                }
                if (wp->requires_grad) {
                  wp->grad().v[wbase + static_cast<size_t>(ky) * kw + kx] += wacc;
                }
              }
            }
          }
        }
      });
}

NodeRef conv3d(const NodeRef& x, const NodeRef& w, const NodeRef& b) {
  check_rank(x->value, 4, "conv3d input");
  check_rank(w->value, 5, "conv3d weight");
  check_rank(b->value, 1, "conv3d bias");
  const int in_c = x->value.extent(0);
  const int t = x->value.extent(1);
  const int h = x->value.extent(2);
  const int width = x->value.extent(3);
  const int out_c = w->value.extent(0);
  const int kt = w->value.extent(2);
  const int kh = w->value.extent(3);
  const int kw = w->value.extent(4);
  if (w->value.extent(1) != in_c) {
    throw ShapeError("conv3d: weight expects " +
                     std::to_string(w->value.extent(1)) +
                     " input channels, input has " + std::to_string(in_c));
  }
  if (b->value.extent(0) != out_c) {
    throw ShapeError("conv3d: bias length " + std::to_string(b->value.extent(0)) +
                     " != out channels " + std::to_string(out_c));
  }
  if (kt % 2 == 0 || kh % 2 == 0 || kw % 2 == 0) {
    throw ConfigError("conv3d: same padding requires odd kernels");
  }
  const int pt = kt / 2, ph = kh / 2, pw = kw / 2;
  const size_t plane = static_cast<size_t>(h) * width;
  const size_t vol = static_cast<size_t>(t) * plane;

  Tensor out = Tensor::zeros({out_c, t, h, width});
  for (int oc = 0; oc < out_c; ++oc) {
    double* ocp = out.v.data() + static_cast<size_t>(oc) * vol;
    const double bias_v = b->value.v[static_cast<size_t>(oc)];
    for (size_t i = 0; i < vol; ++i) ocp[i] = bias_v;
    for (int ic = 0; ic < in_c; ++ic) {
      const double* icp = x->value.v.data() + static_cast<size_t>(ic) * vol;
      const double* wbase =
          w->value.v.data() +
          (((static_cast<size_t>(oc) * in_c + ic) * kt) * kh) * kw;
      for (int kz = 0; kz < kt; ++kz) {
        for (int ky = 0; ky < kh; ++ky) {
          for (int kx = 0; kx < kw; ++kx) {
            const double wv =
                wbase[(static_cast<size_t>(kz) * kh + ky) * kw + kx];
            const int dz = kz - pt, dy = ky - ph, dx = kx - pw;
            const int ot_lo = std::max(0, -dz), ot_hi = std::min(t, t - dz);
            const int oy_lo = std::max(0, -dy), oy_hi = std::min(h, h - dy);
            const int ox_lo = std::max(0, -dx), ox_hi = std::min(width, width - dx);
            for (int ot = ot_lo; ot < ot_hi; ++ot) {
              double* tplane = ocp + static_cast<size_t>(ot) * plane;
              const double* iplane = icp + static_cast<size_t>(ot + dz) * plane;
              for (int oy = oy_lo; oy < oy_hi; ++oy) {
                double* orow = tplane + static_cast<size_t>(oy) * width;
                const double* irow = iplane + static_cast<size_t>(oy + dy) * width + dx;
                for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * irow[ox];
              }
            }
          }
        }
      }
    }
  }

  return make_node(
      std::move(out), {x, w, b},
      [xp = x.get(), wp = w.get(), bp = b.get(), in_c, out_c, t, h, width, kt,
       kh, kw, pt, ph, pw, plane, vol](Node& self) {
        const double* g = self.grad().v.data();
        if (bp->requires_grad) {
          auto& gb = bp->grad().v;
          for (int oc = 0; oc < out_c; ++oc) {
            const double* gp = g + static_cast<size_t>(oc) * vol;
            double acc = 0.0;
            for (size_t i = 0; i < vol; ++i) acc += gp[i];
            gb[static_cast<size_t>(oc)] += acc;
          }
        }
        for (int oc = 0; oc < out_c; ++oc) {
          const double* gp = g + static_cast<size_t>(oc) * vol;
          for (int ic = 0; ic < in_c; ++ic) {
            const double* icp = xp->value.v.data() + static_cast<size_t>(ic) * vol;
            double* gx = xp->requires_grad
                             ? xp->grad().v.data() + static_cast<size_t>(ic) * vol
                             : nullptr;
            const size_t wb =
                (((static_cast<size_t>(oc) * in_c + ic) * kt) * kh) * kw;
            for (int kz = 0; kz < kt; ++kz) {
              for (int ky = 0; ky < kh; ++ky) {
                for (int kx = 0; kx < kw; ++kx) {
                  const double wv =
                      wp->value.v[wb + (static_cast<size_t>(kz) * kh + ky) * kw + kx];
                  const int dz = kz - pt, dy = ky - ph, dx = kx - pw;
                  const int ot_lo = std::max(0, -dz), ot_hi = std::min(t, t - dz);
                  const int oy_lo = std::max(0, -dy), oy_hi = std::min(h, h - dy);
                  const int ox_lo = std::max(0, -dx), ox_hi = std::min(width, width - dx);
                  double wacc = 0.0;
                  for (int ot = ot_lo; ot < ot_hi; ++ot) {
                    const double* gplane = gp + static_cast<size_t>(ot) * plane;
                    const double* iplane = icp + static_cast<size_t>(ot + dz) * plane;
                    double* gxplane =
                        gx ? gx + static_cast<size_t>(ot + dz) * plane : nullptr;
                    for (int oy = oy_lo; oy < oy_hi; ++oy) {
                      const double* grow = gplane + static_cast<size_t>(oy) * width;
                      const double* irow =
                          iplane + static_cast<size_t>(oy + dy) * width + dx;
                      double* gxrow =
                          gxplane ? gxplane + static_cast<size_t>(oy + dy) * width + dx
                                  : nullptr;
                      for (int ox = ox_lo; ox < ox_hi; ++ox) {
                        wacc += grow[ox] * irow[ox];
                        if (gxrow) gxrow[ox] += grow[ox] * wv;
                      }
                    }
                  }
                  if (wp->requires_grad) {
                    wp->grad().v[wb + (static_cast<size_t>(kz) * kh + ky) * kw + kx] +=
                        wacc;
                  }
                }
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Pooling
// ---------------------------------------------------------------------------

int pool_out_extent(int in, int kernel, int stride) {
  if (in <= 0) throw ShapeError("pool_out_extent: non-positive extent");
  (void)kernel;
  if (stride == 1) return in;                    // same padding
  return (in + stride - 1) / stride;             // ceil, windows clipped
}

namespace {

int window_start(int out_pos, int kernel, int stride) {
  if (stride == 1) return out_pos - (kernel - 1) / 2;
  return out_pos * stride;
}

}  // namespace

PoolResult maxpool2d(const NodeRef& x, int kernel, int stride) {
  check_rank(x->value, 3, "maxpool2d");
  if (kernel < 1 || (stride != 1 && stride != kernel)) {
    throw ConfigError("maxpool2d: stride must be 1 or equal to the kernel");
  }
  const int c = x->value.extent(0);
  const int h = x->value.extent(1);
  const int w = x->value.extent(2);
  const int oh = pool_out_extent(h, kernel, stride);
  const int ow = pool_out_extent(w, kernel, stride);

  auto idx = std::make_shared<PoolIndices>();
  idx->input_shape = x->value.shape;
  idx->argmax.resize(static_cast<size_t>(c) * oh * ow);
  Tensor out = Tensor::zeros({c, oh, ow});

  const double* xv = x->value.v.data();
  size_t o = 0;
  for (int ch = 0; ch < c; ++ch) {
    const size_t base = static_cast<size_t>(ch) * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      const int y0 = std::max(0, window_start(oy, kernel, stride));
      const int y1 = std::min(h, window_start(oy, kernel, stride) + kernel);
      for (int ox = 0; ox < ow; ++ox, ++o) {
        const int x0 = std::max(0, window_start(ox, kernel, stride));
        const int x1 = std::min(w, window_start(ox, kernel, stride) + kernel);
        double best = -std::numeric_limits<double>::infinity();
        size_t best_at = base + static_cast<size_t>(y0) * w + x0;
        for (int yy = y0; yy < y1; ++yy) {
          for (int xx = x0; xx < x1; ++xx) {
            const size_t at = base + static_cast<size_t>(yy) * w + xx;
            if (xv[at] > best) {
              best = xv[at];
              best_at = at;
            }
          }
        }
        out.v[o] = best;
        idx->argmax[o] = static_cast<int>(best_at);
      }
    }
  }

  NodeRef node = make_node(std::move(out), {x}, [xp = x.get(), idx](Node& self) {
    const auto& g = self.grad().v;
    auto& gx = xp->grad().v;
    for (size_t i = 0; i < g.size(); ++i) {
      gx[static_cast<size_t>(idx->argmax[i])] += g[i];
    }
  });
  return {node, idx};
}

PoolResult maxpool3d(const NodeRef& x, int kt, int kh, int kw) {
  check_rank(x->value, 4, "maxpool3d");
  if (kt < 1 || kh < 1 || kw < 1) throw ConfigError("maxpool3d: bad kernel");
  const int c = x->value.extent(0);
  const int t = x->value.extent(1);
  const int h = x->value.extent(2);
  const int w = x->value.extent(3);
  const int ot_n = pool_out_extent(t, kt, kt);
  const int oh = pool_out_extent(h, kh, kh);
  const int ow = pool_out_extent(w, kw, kw);

  auto idx = std::make_shared<PoolIndices>();
  idx->input_shape = x->value.shape;
  idx->argmax.resize(static_cast<size_t>(c) * ot_n * oh * ow);
  Tensor out = Tensor::zeros({c, ot_n, oh, ow});

  const double* xv = x->value.v.data();
  size_t o = 0;
  for (int ch = 0; ch < c; ++ch) {
    const size_t base = static_cast<size_t>(ch) * t * h * w;
    for (int oz = 0; oz < ot_n; ++oz) {
      const int z0 = oz * kt;
      const int z1 = std::min(t, z0 + kt);
      for (int oy = 0; oy < oh; ++oy) {
        const int y0 = oy * kh;
        const int y1 = std::min(h, y0 + kh);
        for (int ox = 0; ox < ow; ++ox, ++o) {
          const int x0 = ox * kw;
          const int x1 = std::min(w, x0 + kw);
          double best = -std::numeric_limits<double>::infinity();
          size_t best_at =
              base + (static_cast<size_t>(z0) * h + y0) * w + x0;
          for (int zz = z0; zz < z1; ++zz) {
            for (int yy = y0; yy < y1; ++yy) {
              for (int xx = x0; xx < x1; ++xx) {
                const size_t at =
                    base + (static_cast<size_t>(zz) * h + yy) * w + xx;
                if (xv[at] > best) {
                  best = xv[at];
                  best_at = at;
                }
              }
            }
          }
          out.v[o] = best;
          idx->argmax[o] = static_cast<int>(best_at);
        }
      }
    }
  }

  NodeRef node = make_node(std::move(out), {x}, [xp = x.get(), idx](Node& self) {
    const auto& g = self.grad().v;
    auto& gx = xp->grad().v;
    for (size_t i = 0; i < g.size(); ++i) {
      gx[static_cast<size_t>(idx->argmax[i])] += g[i];
    }
  });
  return {node, idx};
}

NodeRef unpool2d(const NodeRef& x, const std::shared_ptr<PoolIndices>& idx) {
  if (!idx) throw InvalidInputError("unpool2d: missing index record");
  if (x->value.size() != idx->argmax.size()) {
    throw ShapeError("unpool2d: expected " + std::to_string(idx->argmax.size()) +
                     " values, got " + shape_string(x->value.shape));
  }
  Tensor out = Tensor::zeros(idx->input_shape);
  for (size_t i = 0; i < x->value.v.size(); ++i) {
    out.v[static_cast<size_t>(idx->argmax[i])] += x->value.v[i];
  }
  return make_node(std::move(out), {x}, [xp = x.get(), idx](Node& self) {
    const auto& g = self.grad().v;
    auto& gx = xp->grad().v;
    for (size_t i = 0; i < gx.size(); ++i) {
      gx[i] += g[static_cast<size_t>(idx->argmax[i])];
    }
  });
}

}  // namespace emorec::nn
