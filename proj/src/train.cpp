#include "emorec/train.hpp"

#include <algorithm>
#include <cmath>

#include "emorec/metrics.hpp"
#include "emorec/rng.hpp"

namespace emorec {

using nn::NodeRef;

void TrainConfig::validate() const {
  // Zero is allowed: a no-op run that must leave parameters bit-identical.
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be nonnegative");
  if (batch_size <= 0) throw ConfigError("batch size must be positive");
  if (epochs <= 0) throw ConfigError("epoch count must be positive");
  if (optimizer != "adam" && optimizer != "sgd") {
    throw ConfigError("unknown optimizer '" + optimizer + "'");
  }
}

const PhaseReport& TrainReport::phase(const std::string& name) const {
  for (const auto& p : phases) {
    if (p.phase == name) return p;
  }
  throw InvalidInputError("no training phase named '" + name + "'");
}

namespace {

/// Adaptive-moment estimation over a fixed parameter set.
class AdamState {
 public:
  AdamState(const std::vector<NodeRef>& params, double lr)
      : params_(params), lr_(lr) {
    for (const auto& p : params) {
      m_.push_back(std::vector<double>(p->value.size(), 0.0));
      v_.push_back(std::vector<double>(p->value.size(), 0.0));
    }
  }

  void step(double grad_scale) {
    ++t_;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double bc1 = 1.0 - std::pow(b1, t_);
    const double bc2 = 1.0 - std::pow(b2, t_);
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& value = params_[i]->value.v;
      const auto& grad = params_[i]->grad().v;
      auto& m = m_[i];
      auto& v = v_[i];
      for (size_t j = 0; j < value.size(); ++j) {
        const double g = grad[j] * grad_scale;
        m[j] = b1 * m[j] + (1.0 - b1) * g;
        v[j] = b2 * v[j] + (1.0 - b2) * g * g;
        value[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps);
      }
    }
  }

 private:
  std::vector<NodeRef> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_;
  int t_ = 0;
};

void sgd_step(const std::vector<NodeRef>& params, double lr, double grad_scale) {
  for (const auto& p : params) {
    auto& value = p->value.v;
    const auto& grad = p->grad().v;
    for (size_t j = 0; j < value.size(); ++j) {
      value[j] -= lr * grad[j] * grad_scale;
    }
  }
}

void preflight(const Pipeline& pipeline, const DatasetManifest& manifest,
               const std::vector<size_t>& train_idx) {
  if (!(manifest.taxonomy == pipeline.taxonomy())) {
    throw TaxonomyError("manifest taxonomy does not match the pipeline's");
  }
  if (train_idx.empty()) {
    throw InvalidInputError("train split is empty");
  }
  for (size_t i : train_idx) {
    const SubjectObservation& obs = manifest.samples[i].obs;
    for (Modality m : pipeline.config().active) {
      switch (m) {
        case Modality::face:
          if (!obs.face) {
            throw MissingModalityError("sample " + std::to_string(i) +
                                       " lacks face input");
          }
          break;
        case Modality::posture:
          if (!obs.body || !obs.landmarks || obs.landmarks->empty()) {
            throw MissingModalityError("sample " + std::to_string(i) +
                                       " lacks posture input");
          }
          break;
        case Modality::gait:
          if (!obs.segment) {
            throw MissingModalityError("sample " + std::to_string(i) +
                                       " lacks gait input");
          }
          break;
        case Modality::context:
          if (!obs.background) {
            throw MissingModalityError("sample " + std::to_string(i) +
                                       " lacks context input");
          }
          break;
      }
    }
  }
}

struct Phase {
  std::string name;
  std::vector<NodeRef> params;
  std::function<NodeRef(const SubjectObservation&)> probs;
};

PhaseReport run_phase(const Phase& phase, const DatasetManifest& manifest,
                      const std::vector<size_t>& train_idx,
                      const TrainConfig& config) {
  PhaseReport report;
  report.phase = phase.name;

  AdamState adam(phase.params, config.learning_rate);
  Rng shuffle_rng(derive_seed(config.seed, "train:" + phase.name));
  std::vector<size_t> order = train_idx;

  const auto train_accuracy = [&]() {
    std::vector<int> preds, labels;
    for (size_t i : train_idx) {
      const Sample& s = manifest.samples[i];
      NodeRef probs = phase.probs(s.obs);
      preds.push_back(
          EmotionDistribution::validated(manifest.taxonomy, probs->value.v)
              .argmax());
      labels.push_back(s.label);
    }
    return accuracy(preds, labels);
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.next_u64() % i]);
    }
    double epoch_loss = 0.0;
    size_t cursor = 0;
    while (cursor < order.size()) {
      const size_t batch_end =
          std::min(order.size(), cursor + static_cast<size_t>(config.batch_size));
      nn::zero_grads(phase.params);
      for (size_t b = cursor; b < batch_end; ++b) {
        const Sample& s = manifest.samples[order[b]];
        NodeRef probs = phase.probs(s.obs);
        NodeRef loss = nn::cross_entropy(probs, s.label);
        loss->value.require_finite("training loss");
        nn::backward(loss);
        epoch_loss += loss->value.v[0];
      }
      const double scale = 1.0 / static_cast<double>(batch_end - cursor);
      if (config.optimizer == "adam") {
        adam.step(scale);
      } else {
        sgd_step(phase.params, config.learning_rate, scale);
      }
      cursor = batch_end;
    }
    report.losses.push_back(epoch_loss / static_cast<double>(order.size()));
    report.epochs_run = epoch + 1;
    if (config.target_accuracy > 0.0 &&
        train_accuracy() >= config.target_accuracy) {
      break;
    }
  }
  report.final_train_accuracy = train_accuracy();
  return report;
}

}  // namespace

TrainReport train(Pipeline& pipeline, const DatasetManifest& manifest,
                  const TrainConfig& config) {
  config.validate();
  const std::vector<size_t> train_idx = manifest.indices_of(Split::train);
  preflight(pipeline, manifest, train_idx);

  TrainReport report;
  for (Modality m : pipeline.config().active) {
    Phase phase;
    phase.name = to_string(m);
    phase.params = nn::param_nodes(pipeline.parameters_of(phase.name));
    phase.probs = [&pipeline, m](const SubjectObservation& obs) {
      return pipeline.modality_probs_node(m, obs);
    };
    report.phases.push_back(run_phase(phase, manifest, train_idx, config));
  }
  if (pipeline.config().active.size() > 1) {
    Phase phase;
    phase.name = "fused";
    phase.params = nn::param_nodes(pipeline.parameters());
    phase.probs = [&pipeline](const SubjectObservation& obs) {
      return pipeline.fused_probs_node(obs);
    };
    report.phases.push_back(run_phase(phase, manifest, train_idx, config));
  }
  return report;
}

EvalResult evaluate(const Pipeline& pipeline, const DatasetManifest& manifest,
                    Split split) {
  if (!(manifest.taxonomy == pipeline.taxonomy())) {
    throw TaxonomyError("manifest taxonomy does not match the pipeline's");
  }
  const auto idx = manifest.indices_of(split);
  if (idx.empty()) {
    throw InvalidInputError(std::string("no samples in the ") +
                            to_string(split) + " split");
  }
  EvalResult result;
  for (size_t i : idx) {
    const Sample& s = manifest.samples[i];
    NodeRef probs = pipeline.fused_probs_node(s.obs);
    const auto dist =
        EmotionDistribution::validated(manifest.taxonomy, probs->value.v);
    result.predictions.push_back(dist.argmax());
    result.labels.push_back(s.label);
    result.scores.push_back(dist.probs());
  }
  result.accuracy = accuracy(result.predictions, result.labels);
  result.confusion =
      confusion_matrix(result.predictions, result.labels, manifest.taxonomy);
  result.map =
      mean_average_precision(result.scores, result.labels, manifest.taxonomy);
  return result;
}

double evaluate_modality(const Pipeline& pipeline,
                         const DatasetManifest& manifest, Split split,
                         Modality modality) {
  const auto idx = manifest.indices_of(split);
  if (idx.empty()) {
    throw InvalidInputError(std::string("no samples in the ") +
                            to_string(split) + " split");
  }
  std::vector<int> preds, labels;
  for (size_t i : idx) {
    const Sample& s = manifest.samples[i];
    NodeRef probs = pipeline.modality_probs_node(modality, s.obs);
    preds.push_back(
        EmotionDistribution::validated(manifest.taxonomy, probs->value.v)
            .argmax());
    labels.push_back(s.label);
  }
  return accuracy(preds, labels);
}

}  // namespace emorec
