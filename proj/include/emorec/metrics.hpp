#ifndef EMOREC_METRICS_HPP
#define EMOREC_METRICS_HPP

#include <vector>

#include "emorec/core.hpp"

namespace emorec {

/// Fraction of predictions equal to their label. Throws InvalidInputError
/// on empty or mismatched inputs.
double accuracy(const std::vector<int>& predictions,
                const std::vector<int>& labels);

/// k x k row-normalized confusion matrix: entry (i, j) is the fraction of
/// samples with true label i predicted as j. Rows without samples are zero.
std::vector<std::vector<double>> confusion_matrix(
    const std::vector<int>& predictions, const std::vector<int>& labels,
    const LabelTaxonomy& taxonomy);

/// One-vs-rest average precision for one class: scores ranked descending,
/// ties grouped per threshold, all-point interpolation over the
/// precision-recall curve. Returns nullopt when the class has no positives.
std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<bool>& positives);

/// Mean of the per-class average precisions over classes with at least one
/// positive; throws InvalidInputError when no class has positives.
/// `scores[i]` holds one score per class for sample i.
double mean_average_precision(const std::vector<std::vector<double>>& scores,
                              const std::vector<int>& labels,
                              const LabelTaxonomy& taxonomy);

}  // namespace emorec

#endif  // EMOREC_METRICS_HPP
