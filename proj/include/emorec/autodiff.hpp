#ifndef EMOREC_AUTODIFF_HPP
#define EMOREC_AUTODIFF_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "emorec/errors.hpp"

namespace emorec::nn {

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

/// Dense row-major tensor of doubles. All arithmetic in this project runs in
/// 64-bit precision.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  Tensor(std::vector<int> shape_, std::vector<double> values);
  static Tensor zeros(std::vector<int> shape_);
  static Tensor scalar(double x) { return Tensor({1}, {x}); }

  size_t size() const { return v.size(); }
  int extent(int dim) const { return shape.at(static_cast<size_t>(dim)); }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  /// Throws NumericalError if any element is non-finite.
  void require_finite(const char* what) const;
};

std::string shape_string(const std::vector<int>& shape);
size_t shape_count(const std::vector<int>& shape);

// ---------------------------------------------------------------------------
// Graph nodes
// ---------------------------------------------------------------------------

class Node;
using NodeRef = std::shared_ptr<Node>;

/// One vertex of a define-by-run computation graph. Parameters are persistent
/// nodes reused across graph builds; everything else is rebuilt per forward.
class Node {
 public:
  Tensor value;
  bool requires_grad = false;
  std::string name;  // set for parameters

  /// Gradient buffer, same shape as value; allocated on first use and
  /// accumulated (+=) across backward passes until zeroed.
  Tensor& grad();
  bool has_grad() const { return !grad_.v.empty(); }
  void zero_grad();

  const std::vector<NodeRef>& parents() const { return parents_; }

 private:
  friend NodeRef make_node(Tensor value, std::vector<NodeRef> parents,
                           std::function<void(Node&)> backward);
  friend NodeRef constant(Tensor value);
  friend NodeRef parameter(Tensor value, std::string name);
  friend void backward(const NodeRef& root);

  Tensor grad_;
  std::vector<NodeRef> parents_;
  std::function<void(Node&)> backward_;
  int visit_mark_ = 0;
};

NodeRef constant(Tensor value);
NodeRef parameter(Tensor value, std::string name);
NodeRef make_node(Tensor value, std::vector<NodeRef> parents,
                  std::function<void(Node&)> backward);

/// Reverse-mode sweep from a scalar root; accumulates into every reachable
/// node's grad buffer.
void backward(const NodeRef& root);

void zero_grads(const std::vector<NodeRef>& params);

// ---------------------------------------------------------------------------
// Elementwise and vector ops
// ---------------------------------------------------------------------------

NodeRef add(const NodeRef& a, const NodeRef& b);
NodeRef mul(const NodeRef& a, const NodeRef& b);
NodeRef scale(const NodeRef& a, double factor);
NodeRef relu(const NodeRef& x);
NodeRef sigmoid(const NodeRef& x);
NodeRef tanh_op(const NodeRef& x);

/// Softmax over a 1-D tensor, computed with max subtraction.
NodeRef softmax(const NodeRef& logits);

/// Cross-entropy -log(p[target]) with p clamped to [1e-7, 1 - 1e-7].
NodeRef cross_entropy(const NodeRef& probs, int target);

/// Copies a contiguous range out of a 1-D tensor.
NodeRef slice(const NodeRef& x, int offset, int length);

/// Concatenates 1-D tensors.
NodeRef concat(const std::vector<NodeRef>& parts);

/// Flattens any tensor into 1-D.
NodeRef flatten(const NodeRef& x);

/// y = W x + b with W [out,in], x [in], b [out].
NodeRef affine(const NodeRef& weight, const NodeRef& bias, const NodeRef& x);

/// Multiplies a single-channel map [1,H,W] across every channel of x [C,H,W].
NodeRef broadcast_mul(const NodeRef& map, const NodeRef& x);

/// Concatenates along the channel dimension of [C,H,W] tensors.
NodeRef concat_channels(const NodeRef& a, const NodeRef& b);

// ---------------------------------------------------------------------------
// Convolution and pooling
// ---------------------------------------------------------------------------

/// 2-D convolution, stride 1, same padding (odd kernels).
/// x [C,H,W], w [O,C,kh,kw], b [O] -> [O,H,W].
NodeRef conv2d(const NodeRef& x, const NodeRef& w, const NodeRef& b);

/// 3-D convolution, stride 1, same padding (odd kernels).
/// x [C,T,H,W], w [O,C,kt,kh,kw], b [O] -> [O,T,H,W].
NodeRef conv3d(const NodeRef& x, const NodeRef& w, const NodeRef& b);

/// Output extent of one pooled axis: stride 1 keeps the extent (same
/// padding); stride == kernel covers the whole input (ceil, clipped windows).
int pool_out_extent(int in, int kernel, int stride);

/// Max-pool argmax record: flat input positions chosen per output element,
/// plus the pre-pool shape needed by unpooling.
struct PoolIndices {
  std::vector<int> argmax;
  std::vector<int> input_shape;
};

struct PoolResult {
  NodeRef out;
  std::shared_ptr<PoolIndices> indices;
};

/// 2-D max pooling over [C,H,W].
/// stride == kernel pools cover the input (ceil semantics, windows clipped);
/// stride 1 keeps the spatial size (same padding, windows clipped).
PoolResult maxpool2d(const NodeRef& x, int kernel, int stride);

/// 3-D max pooling over [C,T,H,W] with per-axis kernel (kt,kh,kw); stride
/// equals the kernel per axis.
PoolResult maxpool3d(const NodeRef& x, int kt, int kh, int kw);

/// Places each value of x at its memorized pre-pool position, zeros
/// elsewhere. x must have exactly one value per recorded index.
NodeRef unpool2d(const NodeRef& x, const std::shared_ptr<PoolIndices>& idx);

}  // namespace emorec::nn

#endif  // EMOREC_AUTODIFF_HPP
