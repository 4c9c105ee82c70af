#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "supernorm/common.hpp"
#include "supernorm/matrix.hpp"

namespace supernorm {

// Area under the ROC curve via the Mann-Whitney U statistic, ties counted
// as half a concordant pair.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw DataError("roc_auc: size mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) {
        if (y == 1) ++n_pos;
        else if (y == 0) ++n_neg;
        else throw DataError("roc_auc: labels must be 0 or 1");
    }
    if (n_pos == 0 || n_neg == 0)
        throw DataError("roc_auc: both classes must be present");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // rank positives with tie-averaged ranks
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size() || predicted.empty())
        throw DataError("accuracy: size mismatch or empty");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

// Centroid-based cluster separation summary:
//   intra: mean Euclidean distance of samples to their class centroid
//   inter: mean pairwise Euclidean distance between class centroids
inline std::pair<double, double> class_distances(const Matrix& embeddings,
                                                 const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != embeddings.rows)
        throw DataError("class_distances: label count mismatch");
    int num_classes = 0;
    for (int y : labels) {
        if (y < 0) throw DataError("class_distances: negative label");
        num_classes = std::max(num_classes, y + 1);
    }
    if (num_classes < 2) throw DataError("class_distances: need at least two classes");
    Matrix centroids(num_classes, embeddings.cols);
    std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
    for (int i = 0; i < embeddings.rows; ++i) {
        int c = labels[static_cast<std::size_t>(i)];
        ++counts[static_cast<std::size_t>(c)];
        for (int j = 0; j < embeddings.cols; ++j) centroids(c, j) += embeddings(i, j);
    }
    for (int c = 0; c < num_classes; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0)
            throw DataError("class_distances: class " + std::to_string(c) + " has no samples");
        for (int j = 0; j < embeddings.cols; ++j)
            centroids(c, j) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
    double intra = 0.0;
    for (int i = 0; i < embeddings.rows; ++i) {
        int c = labels[static_cast<std::size_t>(i)];
        double s = 0.0;
        for (int j = 0; j < embeddings.cols; ++j) {
            double d = embeddings(i, j) - centroids(c, j);
            s += d * d;
        }
        intra += std::sqrt(s);
    }
    intra /= static_cast<double>(embeddings.rows);
    double inter = 0.0;
    int pairs = 0;
    for (int a = 0; a < num_classes; ++a) {
        for (int b = a + 1; b < num_classes; ++b) {
            double s = 0.0;
            for (int j = 0; j < embeddings.cols; ++j) {
                double d = centroids(a, j) - centroids(b, j);
                s += d * d;
            }
            inter += std::sqrt(s);
            ++pairs;
        }
    }
    inter /= static_cast<double>(pairs);
    return {intra, inter};
}

}  // namespace supernorm
