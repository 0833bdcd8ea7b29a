#include "adprog/metrics.hpp"

#include "adprog/errors.hpp"

#include <algorithm>
#include <array>
#include <numeric>

namespace adprog {

double auc_binary(std::span<const BinarySample> samples) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& s : samples) (s.positive ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw DataError("auc_binary requires at least one positive and one negative sample");

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].score < samples[b].score;
    });

    // Mid-rank assignment over tie blocks, ranks are 1-based.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && samples[order[j]].score == samples[order[i]].score) ++j;
        const double mid_rank = 0.5 * static_cast<double>((i + 1) + j); // mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k)
            if (samples[order[k]].positive) rank_sum_pos += mid_rank;
        i = j;
    }

    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

namespace {

// A(i|j): samples of classes i and j, scored by probability of class i,
// class i positive.
double pairwise_auc(std::span<const ScoredSample> samples, int cls_i, int cls_j) {
    std::vector<BinarySample> restricted;
    for (const auto& s : samples) {
        const int a = ordinal(s.actual);
        if (a != cls_i && a != cls_j) continue;
        restricted.push_back({s.probs[cls_i], a == cls_i});
    }
    return auc_binary(restricted);
}

} // namespace

double mauc(std::span<const ScoredSample> samples) {
    std::array<bool, 3> present{false, false, false};
    for (const auto& s : samples) present[static_cast<std::size_t>(ordinal(s.actual))] = true;
    std::vector<int> classes;
    for (int c = 0; c < 3; ++c)
        if (present[static_cast<std::size_t>(c)]) classes.push_back(c);
    if (classes.size() < 2)
        throw DataError("mauc requires samples from at least two classes");

    double sum = 0.0;
    std::size_t n_pairs = 0;
    for (std::size_t a = 0; a < classes.size(); ++a) {
        for (std::size_t b = a + 1; b < classes.size(); ++b) {
            const double a_ij = pairwise_auc(samples, classes[a], classes[b]);
            const double a_ji = pairwise_auc(samples, classes[b], classes[a]);
            sum += 0.5 * (a_ij + a_ji);
            ++n_pairs;
        }
    }
    return sum / static_cast<double>(n_pairs);
}

std::vector<std::pair<double, double>> roc_curve(std::span<const BinarySample> samples) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& s : samples) (s.positive ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw DataError("roc_curve requires at least one positive and one negative sample");

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].score > samples[b].score;
    });

    std::vector<std::pair<double, double>> curve;
    curve.emplace_back(0.0, 0.0);
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        // Consume a whole tie block per threshold so equal scores move the
        // curve diagonally in one step.
        std::size_t j = i;
        while (j < order.size() && samples[order[j]].score == samples[order[i]].score) ++j;
        for (std::size_t k = i; k < j; ++k)
            (samples[order[k]].positive ? tp : fp)++;
        curve.emplace_back(static_cast<double>(fp) / static_cast<double>(n_neg),
                           static_cast<double>(tp) / static_cast<double>(n_pos));
        i = j;
    }
    return curve;
}

int argmax_class(const Eigen::Vector3d& probs) {
    int best = 0;
    for (int c = 1; c < 3; ++c)
        if (probs[c] > probs[best]) best = c;
    return best;
}

ConfusionMatrix confusion(std::span<const ScoredSample> samples) {
    ConfusionMatrix cm;
    for (const auto& s : samples)
        cm.counts(ordinal(s.actual), argmax_class(s.probs))++;
    return cm;
}

std::vector<BinarySample> one_vs_rest(std::span<const ScoredSample> samples,
                                      Diagnosis positive_class) {
    std::vector<BinarySample> out;
    out.reserve(samples.size());
    for (const auto& s : samples)
        out.push_back({s.probs[ordinal(positive_class)], s.actual == positive_class});
    return out;
}

} // namespace adprog
