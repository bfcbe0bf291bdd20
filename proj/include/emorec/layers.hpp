#ifndef EMOREC_LAYERS_HPP
#define EMOREC_LAYERS_HPP

#include <memory>
#include <string>
#include <vector>

#include "emorec/autodiff.hpp"
#include "emorec/rng.hpp"

namespace emorec::nn {

struct NamedParam {
  std::string name;
  NodeRef node;
};

/// Anything that owns trainable parameters.
class Module {
 public:
  virtual ~Module() = default;
  /// Parameters with stable names, prefixed by the module's own name.
  virtual std::vector<NamedParam> parameters() const = 0;
};

std::vector<NodeRef> param_nodes(const std::vector<NamedParam>& named);

// Weight init: Kaiming-uniform for conv/dense weights, orthogonal for
// recurrent weights, zeros for biases.
Tensor kaiming_uniform(std::vector<int> shape, int fan_in, Rng& rng);
Tensor orthogonal(int rows, int cols, Rng& rng);

/// Dense layer y = Wx + b.
class Dense : public Module {
 public:
  Dense(std::string name, int in_dim, int out_dim, Rng& rng);

  NodeRef apply(const NodeRef& x) const { return affine(weight_, bias_, x); }
  std::vector<NamedParam> parameters() const override;

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  NodeRef weight() const { return weight_; }
  NodeRef bias() const { return bias_; }

 private:
  std::string name_;
  int in_dim_, out_dim_;
  NodeRef weight_, bias_;
};

/// 3x3-style 2-D convolution, stride 1, same padding.
class Conv2d : public Module {
 public:
  Conv2d(std::string name, int in_channels, int out_channels, int kernel,
         Rng& rng);

  NodeRef apply(const NodeRef& x) const { return conv2d(x, weight_, bias_); }
  std::vector<NamedParam> parameters() const override;

  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }

 private:
  std::string name_;
  int in_channels_, out_channels_, kernel_;
  NodeRef weight_, bias_;
};

/// 3x3x3-style 3-D convolution, stride 1, same padding.
class Conv3d : public Module {
 public:
  Conv3d(std::string name, int in_channels, int out_channels, int kernel,
         Rng& rng);

  NodeRef apply(const NodeRef& x) const { return conv3d(x, weight_, bias_); }
  std::vector<NamedParam> parameters() const override;

  int out_channels() const { return out_channels_; }

 private:
  std::string name_;
  int in_channels_, out_channels_, kernel_;
  NodeRef weight_, bias_;
};

/// Single LSTM cell (standard gate equations, merged bias).
class LstmCell : public Module {
 public:
  LstmCell(std::string name, int input_size, int hidden_size, Rng& rng);

  struct State {
    NodeRef h;
    NodeRef c;
  };
  State initial_state() const;
  State step(const NodeRef& x, const State& prev) const;

  std::vector<NamedParam> parameters() const override;
  int hidden_size() const { return hidden_; }
  int input_size() const { return input_; }

 private:
  std::string name_;
  int input_, hidden_;
  NodeRef w_ih_, w_hh_, bias_;
};

/// Stack of LSTM layers; layer i feeds layer i+1 at every step.
class LstmStack : public Module {
 public:
  LstmStack(std::string name, int layers, int input_size, int hidden_size,
            Rng& rng);

  /// Runs the whole sequence and returns the final hidden state of the top
  /// layer. Throws InvalidInputError on an empty sequence.
  NodeRef apply(const std::vector<NodeRef>& sequence) const;

  std::vector<NamedParam> parameters() const override;
  int hidden_size() const { return cells_.empty() ? 0 : cells_.front().hidden_size(); }
  int layer_count() const { return static_cast<int>(cells_.size()); }

 private:
  std::vector<LstmCell> cells_;
};

/// Conv+ReLU+maxpool(2, stride 2) stages followed by flatten and one dense
/// layer; the plain CNN feature extractor shared by the posture and context
/// modules.
class Conv2dStack : public Module {
 public:
  Conv2dStack(std::string name, int in_channels, int height, int width,
              std::vector<int> stage_channels, int feature_dim, Rng& rng);

  /// Raw dense output of length feature_dim.
  NodeRef apply(const NodeRef& x) const;

  std::vector<NamedParam> parameters() const override;
  int feature_dim() const { return fc_->out_dim(); }

 private:
  std::vector<Conv2d> stages_;
  std::unique_ptr<Dense> fc_;
};

/// Two dense layers with a ReLU between, softmax on top; the stand-alone
/// classification head used by every module and by the fusion stage.
class ClassifierHead : public Module {
 public:
  ClassifierHead(std::string name, int in_dim, int hidden_dim, int classes,
                 Rng& rng);

  /// Returns softmax probabilities over the classes.
  NodeRef apply(const NodeRef& features) const;

  std::vector<NamedParam> parameters() const override;
  int in_dim() const { return fc1_.in_dim(); }
  int classes() const { return fc2_.out_dim(); }

 private:
  Dense fc1_;
  Dense fc2_;
};

}  // namespace emorec::nn

#endif  // EMOREC_LAYERS_HPP
