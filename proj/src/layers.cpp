#include "emorec/layers.hpp"

#include <cmath>

namespace emorec::nn {

std::vector<NodeRef> param_nodes(const std::vector<NamedParam>& named) {
  std::vector<NodeRef> out;
  out.reserve(named.size());
  for (const auto& p : named) out.push_back(p.node);
  return out;
}

Tensor kaiming_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& x : t.v) x = rng.uniform(-bound, bound);
  return t;
}

Tensor orthogonal(int rows, int cols, Rng& rng) {
  // Gram-Schmidt on random Gaussian rows (columns when cols > rows).
  const int n = std::max(rows, cols);
  const int m = std::min(rows, cols);
  std::vector<std::vector<double>> basis(static_cast<size_t>(m),
                                         std::vector<double>(static_cast<size_t>(n)));
  for (int i = 0; i < m; ++i) {
    auto& row = basis[static_cast<size_t>(i)];
    for (double& x : row) x = rng.normal();
    for (int j = 0; j < i; ++j) {
      const auto& prev = basis[static_cast<size_t>(j)];
      double dot = 0.0;
      for (int k2 = 0; k2 < n; ++k2) dot += row[static_cast<size_t>(k2)] * prev[static_cast<size_t>(k2)];
      for (int k2 = 0; k2 < n; ++k2) row[static_cast<size_t>(k2)] -= dot * prev[static_cast<size_t>(k2)];
    }
    double norm = 0.0;
    for (double x : row) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      // Degenerate draw; fall back to a unit vector.
      std::fill(row.begin(), row.end(), 0.0);
      row[static_cast<size_t>(i % n)] = 1.0;
    } else {
      for (double& x : row) x /= norm;
    }
  }
  Tensor t = Tensor::zeros({rows, cols});
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double x = rows <= cols ? basis[static_cast<size_t>(r)][static_cast<size_t>(c)]
                                    : basis[static_cast<size_t>(c)][static_cast<size_t>(r)];
      t.v[static_cast<size_t>(r) * cols + c] = x;
    }
  }
  return t;
}

Dense::Dense(std::string name, int in_dim, int out_dim, Rng& rng)
    : name_(std::move(name)), in_dim_(in_dim), out_dim_(out_dim) {
  if (in_dim <= 0 || out_dim <= 0) {
    throw ConfigError("dense '" + name_ + "': extents must be positive");
  }
  weight_ = parameter(kaiming_uniform({out_dim, in_dim}, in_dim, rng),
                      name_ + ".weight");
  bias_ = parameter(Tensor::zeros({out_dim}), name_ + ".bias");
}

std::vector<NamedParam> Dense::parameters() const {
  return {{weight_->name, weight_}, {bias_->name, bias_}};
}

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel,
               Rng& rng)
    : name_(std::move(name)),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel) {
  if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || kernel % 2 == 0) {
    throw ConfigError("conv2d '" + name_ + "': bad channel plan or kernel");
  }
  const int fan_in = in_channels * kernel * kernel;
  weight_ = parameter(
      kaiming_uniform({out_channels, in_channels, kernel, kernel}, fan_in, rng),
      name_ + ".weight");
  bias_ = parameter(Tensor::zeros({out_channels}), name_ + ".bias");
}

std::vector<NamedParam> Conv2d::parameters() const {
  return {{weight_->name, weight_}, {bias_->name, bias_}};
}

Conv3d::Conv3d(std::string name, int in_channels, int out_channels, int kernel,
               Rng& rng)
    : name_(std::move(name)),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel) {
  if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || kernel % 2 == 0) {
    throw ConfigError("conv3d '" + name_ + "': bad channel plan or kernel");
  }
  const int fan_in = in_channels * kernel * kernel * kernel;
  weight_ = parameter(
      kaiming_uniform({out_channels, in_channels, kernel, kernel, kernel},
                      fan_in, rng),
      name_ + ".weight");
  bias_ = parameter(Tensor::zeros({out_channels}), name_ + ".bias");
}

std::vector<NamedParam> Conv3d::parameters() const {
  return {{weight_->name, weight_}, {bias_->name, bias_}};
}

LstmCell::LstmCell(std::string name, int input_size, int hidden_size, Rng& rng)
    : name_(std::move(name)), input_(input_size), hidden_(hidden_size) {
  if (input_size <= 0 || hidden_size <= 0) {
    throw ConfigError("lstm '" + name_ + "': extents must be positive");
  }
  w_ih_ = parameter(kaiming_uniform({4 * hidden_size, input_size}, input_size, rng),
                    name_ + ".w_ih");
  // Recurrent weight: four orthogonal blocks stacked.
  Tensor whh = Tensor::zeros({4 * hidden_size, hidden_size});
  for (int gate = 0; gate < 4; ++gate) {
    Tensor block = orthogonal(hidden_size, hidden_size, rng);
    std::copy(block.v.begin(), block.v.end(),
              whh.v.begin() + static_cast<std::ptrdiff_t>(gate) * hidden_size * hidden_size);
  }
  w_hh_ = parameter(std::move(whh), name_ + ".w_hh");
  bias_ = parameter(Tensor::zeros({4 * hidden_size}), name_ + ".bias");
}

LstmCell::State LstmCell::initial_state() const {
  return {constant(Tensor::zeros({hidden_})), constant(Tensor::zeros({hidden_}))};
}

LstmCell::State LstmCell::step(const NodeRef& x, const State& prev) const {
  NodeRef gates = add(affine(w_ih_, bias_, x),
                      affine(w_hh_, constant(Tensor::zeros({4 * hidden_})), prev.h));
  NodeRef i = sigmoid(slice(gates, 0, hidden_));
  NodeRef f = sigmoid(slice(gates, hidden_, hidden_));
  NodeRef g = tanh_op(slice(gates, 2 * hidden_, hidden_));
  NodeRef o = sigmoid(slice(gates, 3 * hidden_, hidden_));
  NodeRef c = add(mul(f, prev.c), mul(i, g));
  NodeRef h = mul(o, tanh_op(c));
  return {h, c};
}

std::vector<NamedParam> LstmCell::parameters() const {
  return {{w_ih_->name, w_ih_}, {w_hh_->name, w_hh_}, {bias_->name, bias_}};
}

LstmStack::LstmStack(std::string name, int layers, int input_size,
                     int hidden_size, Rng& rng) {
  if (layers <= 0) throw ConfigError("lstm stack '" + name + "': no layers");
  cells_.reserve(static_cast<size_t>(layers));
  for (int i = 0; i < layers; ++i) {
    cells_.emplace_back(name + ".l" + std::to_string(i),
                        i == 0 ? input_size : hidden_size, hidden_size, rng);
  }
}

NodeRef LstmStack::apply(const std::vector<NodeRef>& sequence) const {
  if (sequence.empty()) {
    throw InvalidInputError("lstm: empty input sequence");
  }
  std::vector<LstmCell::State> states;
  states.reserve(cells_.size());
  for (const auto& cell : cells_) states.push_back(cell.initial_state());
  for (const auto& x : sequence) {
    NodeRef layer_in = x;
    for (size_t l = 0; l < cells_.size(); ++l) {
      states[l] = cells_[l].step(layer_in, states[l]);
      layer_in = states[l].h;
    }
  }
  return states.back().h;
}

std::vector<NamedParam> LstmStack::parameters() const {
  std::vector<NamedParam> out;
  for (const auto& cell : cells_) {
    auto p = cell.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

Conv2dStack::Conv2dStack(std::string name, int in_channels, int height,
                         int width, std::vector<int> stage_channels,
                         int feature_dim, Rng& rng) {
  if (stage_channels.empty()) {
    throw ConfigError("conv stack '" + name + "': no stages");
  }
  int c = in_channels, h = height, w = width;
  for (size_t i = 0; i < stage_channels.size(); ++i) {
    stages_.emplace_back(name + ".conv" + std::to_string(i), c,
                         stage_channels[i], 3, rng);
    c = stage_channels[i];
    h = pool_out_extent(h, 2, 2);
    w = pool_out_extent(w, 2, 2);
  }
  fc_ = std::make_unique<Dense>(name + ".fc", c * h * w, feature_dim, rng);
}

NodeRef Conv2dStack::apply(const NodeRef& x) const {
  NodeRef t = x;
  for (const auto& conv : stages_) {
    t = maxpool2d(relu(conv.apply(t)), 2, 2).out;
  }
  return fc_->apply(flatten(t));
}

std::vector<NamedParam> Conv2dStack::parameters() const {
  std::vector<NamedParam> out;
  for (const auto& s : stages_) {
    auto p = s.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  auto p = fc_->parameters();
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

ClassifierHead::ClassifierHead(std::string name, int in_dim, int hidden_dim,
                               int classes, Rng& rng)
    : fc1_(name + ".fc1", in_dim, hidden_dim, rng),
      fc2_(name + ".fc2", hidden_dim, classes, rng) {}

NodeRef ClassifierHead::apply(const NodeRef& features) const {
  return softmax(fc2_.apply(relu(fc1_.apply(features))));
}

std::vector<NamedParam> ClassifierHead::parameters() const {
  auto out = fc1_.parameters();
  auto p2 = fc2_.parameters();
  out.insert(out.end(), p2.begin(), p2.end());
  return out;
}

}  // namespace emorec::nn
