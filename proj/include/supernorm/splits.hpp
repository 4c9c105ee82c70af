#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "supernorm/common.hpp"
#include "supernorm/graph.hpp"

namespace supernorm {

struct SplitResult {
    std::vector<int> train;
    std::vector<int> valid;
    std::vector<int> test;
};

// Deterministic structure-aware split. Graphs are bucketed by edge density
// into [0,0.1), ..., [0.9,1.0), {1.0}, each bucket is sorted by average
// degree, and held-out samples are picked with a per-bucket stride sized to
// hit valid_frac + test_frac. The held-out stream is then dealt to valid and
// test proportionally.
inline SplitResult hierarchical_split(const std::vector<Graph>& dataset, double valid_frac,
                                      double test_frac) {
    if (dataset.empty()) throw DataError("hierarchical_split: empty dataset");
    if (valid_frac < 0.0 || test_frac < 0.0 || valid_frac + test_frac >= 1.0)
        throw DataError("hierarchical_split: fractions must be non-negative and sum below 1");

    constexpr int kBuckets = 11;  // [0,0.1) .. [0.9,1.0) plus {1.0}
    std::vector<std::vector<int>> buckets(kBuckets);
    for (int i = 0; i < static_cast<int>(dataset.size()); ++i) {
        double d = density(dataset[static_cast<std::size_t>(i)]);
        int b = d >= 1.0 ? kBuckets - 1 : static_cast<int>(d * 10.0);
        b = std::clamp(b, 0, kBuckets - 1);
        buckets[static_cast<std::size_t>(b)].push_back(i);
    }
    auto average_degree = [&](int idx) {
        const Graph& g = dataset[static_cast<std::size_t>(idx)];
        return g.num_nodes == 0 ? 0.0
                                : 2.0 * static_cast<double>(g.num_edges()) /
                                      static_cast<double>(g.num_nodes);
    };
    double held_frac = valid_frac + test_frac;
    std::vector<int> held;
    std::vector<char> is_held(dataset.size(), 0);
    for (auto& bucket : buckets) {
        if (bucket.empty()) continue;
        std::stable_sort(bucket.begin(), bucket.end(), [&](int a, int b) {
            return average_degree(a) < average_degree(b);
        });
        int target = static_cast<int>(std::llround(static_cast<double>(bucket.size()) * held_frac));
        if (target == 0) continue;
        int step = std::max(1, static_cast<int>(bucket.size()) / target);
        for (int k = step - 1; k < static_cast<int>(bucket.size()) && target > 0; k += step) {
            held.push_back(bucket[static_cast<std::size_t>(k)]);
            is_held[static_cast<std::size_t>(bucket[static_cast<std::size_t>(k)])] = 1;
            --target;
        }
    }
    SplitResult out;
    // deal held-out items to valid/test proportionally
    double vshare = held_frac > 0.0 ? valid_frac / held_frac : 0.0;
    int nv = 0;
    for (int i = 0; i < static_cast<int>(held.size()); ++i) {
        int idx = held[static_cast<std::size_t>(i)];
        if (nv < std::llround(static_cast<double>(i + 1) * vshare)) {
            out.valid.push_back(idx);
            ++nv;
        } else {
            out.test.push_back(idx);
        }
    }
    for (int i = 0; i < static_cast<int>(dataset.size()); ++i)
        if (!is_held[static_cast<std::size_t>(i)]) out.train.push_back(i);
    std::sort(out.valid.begin(), out.valid.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

}  // namespace supernorm
