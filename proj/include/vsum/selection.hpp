#pragma once

#include "vsum/corpus.hpp"

VSUM_NS_BEGIN

// Marks the k = max(1, floor(fraction * N)) highest-scoring frames; ties
// prefer the lower frame index.
SummaryMask top_fraction_select(const std::vector<Real>& scores, double fraction);

// Fragment value = arithmetic mean of its frame scores, so length alone
// does not favor long fragments; the knapsack weights carry the length.
std::vector<Real> fragment_scores(const std::vector<Real>& scores,
                                  const std::vector<Fragment>& fragments);

// Exact 0/1 knapsack over fragments, returning the chosen fragment
// indices in ascending order. Among equal-value optima the canonical DP
// backtrack prefers excluding higher-index fragments. Degenerate inputs:
// capacity 0 selects nothing; if the optimum is empty but capacity > 0,
// the best fragment that fits is selected, and if none fits at all, the
// highest-value fragment among those of minimal weight.
std::vector<int> knapsack_choose(const std::vector<Real>& values, const std::vector<int>& weights,
                                 int capacity);

// knapsack_choose, expanded to a frame mask over the concatenated
// fragments (fragment i covers the next weights[i] frames).
SummaryMask knapsack_select(const std::vector<Real>& values, const std::vector<int>& weights,
                            int capacity);

// Summary budget in frames: floor(fraction * n_frames), minimum 1.
int summary_capacity(int n_frames, double fraction = 0.15);

VSUM_NS_END
