#ifndef ADPROG_METRICS_HPP
#define ADPROG_METRICS_HPP

#include "adprog/cohort.hpp"

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

namespace adprog {

// One prediction to score: class probabilities plus the actual diagnosis.
struct ScoredSample {
    Eigen::Vector3d probs; // (NL, MCI, DEMENTIA), sums to 1 within 1e-6
    Diagnosis actual;
};

struct BinarySample {
    double score;
    bool positive;
};

// Rank-based AUC with mid-rank tie handling:
//   A = (S_pos - n_pos(n_pos+1)/2) / (n_pos * n_neg)
// where S_pos is the rank-sum of positives under ascending-score mid-ranks.
// Requires at least one positive and one negative.
double auc_binary(std::span<const BinarySample> samples);

// Multiclass AUC per Hand & Till: for every unordered pair of present
// classes (i, j), A(i,j) = [A(i|j) + A(j|i)] / 2 where A(i|j) restricts to
// samples of classes i and j scored by the probability of class i; the
// result is the mean of the A(i,j) over all pairs. Requires >= 2 classes.
double mauc(std::span<const ScoredSample> samples);

// Threshold sweep over distinct scores, descending. Starts at (0,0), ends
// at (1,1). Trapezoid area equals auc_binary.
std::vector<std::pair<double, double>> roc_curve(std::span<const BinarySample> samples);

// Predicted class = argmax probability; ties break toward the lower
// ordinal (NL first).
int argmax_class(const Eigen::Vector3d& probs);

struct ConfusionMatrix {
    Eigen::Matrix3i counts = Eigen::Matrix3i::Zero(); // rows actual, cols predicted
    int total() const { return counts.sum(); }
};

ConfusionMatrix confusion(std::span<const ScoredSample> samples);

// Binary restriction of scored samples: class `positive_class` one-vs-rest,
// scored by that class's probability. Used for the per-class ROC outputs.
std::vector<BinarySample> one_vs_rest(std::span<const ScoredSample> samples,
                                      Diagnosis positive_class);

} // namespace adprog

#endif
