#include "emorec/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace emorec {

double accuracy(const std::vector<int>& predictions,
                const std::vector<int>& labels) {
  if (predictions.empty() || predictions.size() != labels.size()) {
    throw InvalidInputError("accuracy needs equal-length nonempty inputs");
  }
  size_t correct = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::vector<std::vector<double>> confusion_matrix(
    const std::vector<int>& predictions, const std::vector<int>& labels,
    const LabelTaxonomy& taxonomy) {
  if (predictions.empty() || predictions.size() != labels.size()) {
    throw InvalidInputError("confusion matrix needs equal-length nonempty inputs");
  }
  const int k = taxonomy.k();
  std::vector<std::vector<double>> m(static_cast<size_t>(k),
                                     std::vector<double>(static_cast<size_t>(k), 0.0));
  std::vector<size_t> row_total(static_cast<size_t>(k), 0);
  for (size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i], p = predictions[i];
    if (t < 0 || t >= k || p < 0 || p >= k) {
      throw TaxonomyError("label outside taxonomy in confusion matrix");
    }
    m[static_cast<size_t>(t)][static_cast<size_t>(p)] += 1.0;
    ++row_total[static_cast<size_t>(t)];
  }
  for (int r = 0; r < k; ++r) {
    if (row_total[static_cast<size_t>(r)] == 0) continue;
    for (double& x : m[static_cast<size_t>(r)]) {
      x /= static_cast<double>(row_total[static_cast<size_t>(r)]);
    }
  }
  return m;
}

std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<bool>& positives) {
  if (scores.empty() || scores.size() != positives.size()) {
    throw InvalidInputError("average precision needs equal-length nonempty inputs");
  }
  const size_t n_pos =
      static_cast<size_t>(std::count(positives.begin(), positives.end(), true));
  if (n_pos == 0) return std::nullopt;

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return scores[a] > scores[b];
  });

  // One PR point per distinct threshold (ties grouped).
  std::vector<std::pair<double, double>> pr;  // (recall, precision)
  size_t tp = 0, fp = 0, i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (positives[order[j]]) {
        ++tp;
      } else {
        ++fp;
      }
      ++j;
    }
    pr.emplace_back(static_cast<double>(tp) / static_cast<double>(n_pos),
                    static_cast<double>(tp) / static_cast<double>(tp + fp));
    i = j;
  }

  // All-point interpolation: precision at recall r is the best precision at
  // any recall >= r.
  double best = 0.0;
  for (size_t p = pr.size(); p-- > 0;) {
    best = std::max(best, pr[p].second);
    pr[p].second = best;
  }
  double ap = 0.0, prev_recall = 0.0;
  for (const auto& [recall, precision] : pr) {
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

double mean_average_precision(const std::vector<std::vector<double>>& scores,
                              const std::vector<int>& labels,
                              const LabelTaxonomy& taxonomy) {
  if (scores.empty() || scores.size() != labels.size()) {
    throw InvalidInputError("mAP needs equal-length nonempty inputs");
  }
  const int k = taxonomy.k();
  for (const auto& row : scores) {
    if (static_cast<int>(row.size()) != k) {
      throw ShapeError("mAP score rows must have k=" + std::to_string(k) +
                       " entries");
    }
  }
  double sum = 0.0;
  int classes_counted = 0;
  for (int c = 0; c < k; ++c) {
    std::vector<double> class_scores(scores.size());
    std::vector<bool> positives(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) {
      class_scores[i] = scores[i][static_cast<size_t>(c)];
      positives[i] = labels[i] == c;
    }
    if (auto ap = average_precision(class_scores, positives)) {
      sum += *ap;
      ++classes_counted;
    }
  }
  if (classes_counted == 0) {
    throw InvalidInputError("mAP: no class has a positive sample");
  }
  return sum / classes_counted;
}

}  // namespace emorec
