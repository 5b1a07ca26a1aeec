#include "vsum/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

VSUM_NS_BEGIN

namespace {

// floor() guarded against the product landing a hair below an integer.
int budget_floor(double fraction, int n) {
    return static_cast<int>(std::floor(fraction * n + 1e-9));
}

}  // namespace

SummaryMask top_fraction_select(const std::vector<Real>& scores, double fraction) {
    const int n = static_cast<int>(scores.size());
    if (n < 1) {
        throw ValidationError("top_fraction_select: empty score vector");
    }
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ValidationError("top_fraction_select: fraction must be in (0, 1]");
    }
    const int k = std::max(1, budget_floor(fraction, n));

    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    // stable sort keeps index order within equal scores, so ties pick the
    // earlier frame
    std::stable_sort(order.begin(), order.end(),
                     [&scores](int a, int b) { return scores[a] > scores[b]; });

    SummaryMask mask(scores.size(), 0);
    for (int i = 0; i < k; ++i) {
        mask[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
    }
    return mask;
}

std::vector<Real> fragment_scores(const std::vector<Real>& scores,
                                  const std::vector<Fragment>& fragments) {
    const int n = static_cast<int>(scores.size());
    std::vector<Real> values;
    values.reserve(fragments.size());
    for (std::size_t i = 0; i < fragments.size(); ++i) {
        const Fragment& f = fragments[i];
        if (f.first < 0 || f.last < f.first || f.last >= n) {
            throw ValidationError("fragment_scores: fragment " + std::to_string(i) + " [" +
                                  std::to_string(f.first) + ", " + std::to_string(f.last) +
                                  "] outside " + std::to_string(n) + " frames");
        }
        double sum = 0;
        for (int j = f.first; j <= f.last; ++j) {
            sum += scores[static_cast<std::size_t>(j)];
        }
        values.push_back(static_cast<Real>(sum / (f.last - f.first + 1)));
    }
    return values;
}

std::vector<int> knapsack_choose(const std::vector<Real>& values, const std::vector<int>& weights,
                                 int capacity) {
    const int n = static_cast<int>(values.size());
    if (weights.size() != values.size()) {
        throw ValidationError("knapsack: " + std::to_string(values.size()) + " values vs " +
                              std::to_string(weights.size()) + " weights");
    }
    for (int w : weights) {
        if (w < 1) {
            throw ValidationError("knapsack: weights must be positive integers");
        }
    }
    if (capacity < 0) {
        throw ValidationError("knapsack: negative capacity");
    }
    if (n == 0 || capacity == 0) {
        return {};
    }

    const std::size_t width = static_cast<std::size_t>(capacity) + 1;
    std::vector<double> best(width, 0.0);
    std::vector<std::uint8_t> take(static_cast<std::size_t>(n) * width, 0);
    for (int i = 0; i < n; ++i) {
        const int w = weights[static_cast<std::size_t>(i)];
        const double v = values[static_cast<std::size_t>(i)];
        // descending capacity keeps each item usable at most once; strict
        // improvement required, so equal-value optima drop the later item
        for (int c = capacity; c >= w; --c) {
            const double with = best[static_cast<std::size_t>(c - w)] + v;
            if (with > best[static_cast<std::size_t>(c)]) {
                best[static_cast<std::size_t>(c)] = with;
                take[static_cast<std::size_t>(i) * width + static_cast<std::size_t>(c)] = 1;
            }
        }
    }

    std::vector<int> chosen;
    int c = capacity;
    for (int i = n - 1; i >= 0; --i) {
        if (take[static_cast<std::size_t>(i) * width + static_cast<std::size_t>(c)]) {
            chosen.push_back(i);
            c -= weights[static_cast<std::size_t>(i)];
        }
    }
    std::reverse(chosen.begin(), chosen.end());
    if (!chosen.empty()) {
        return chosen;
    }

    // nothing improved zero: fall back to a single fragment so summaries
    // are never empty
    int pick = -1;
    for (int i = 0; i < n; ++i) {
        if (weights[static_cast<std::size_t>(i)] > capacity) continue;
        if (pick < 0 || values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(pick)]) {
            pick = i;
        }
    }
    if (pick < 0) {
        // none fits; take the highest value among the lightest fragments
        for (int i = 0; i < n; ++i) {
            if (pick < 0 || weights[static_cast<std::size_t>(i)] < weights[static_cast<std::size_t>(pick)] ||
                (weights[static_cast<std::size_t>(i)] == weights[static_cast<std::size_t>(pick)] &&
                 values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(pick)])) {
                pick = i;
            }
        }
    }
    return {pick};
}

SummaryMask knapsack_select(const std::vector<Real>& values, const std::vector<int>& weights,
                            int capacity) {
    const std::vector<int> chosen = knapsack_choose(values, weights, capacity);
    std::vector<int> offset(weights.size() + 1, 0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        offset[i + 1] = offset[i] + weights[i];
    }
    SummaryMask mask(static_cast<std::size_t>(offset.back()), 0);
    for (int i : chosen) {
        for (int j = offset[static_cast<std::size_t>(i)]; j < offset[static_cast<std::size_t>(i) + 1]; ++j) {
            mask[static_cast<std::size_t>(j)] = 1;
        }
    }
    return mask;
}

int summary_capacity(int n_frames, double fraction) {
    if (n_frames < 1) {
        throw ValidationError("summary_capacity: need at least one frame");
    }
    return std::max(1, budget_floor(fraction, n_frames));
}

VSUM_NS_END
