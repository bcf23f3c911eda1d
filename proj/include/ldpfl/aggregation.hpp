#pragma once

#include <vector>

#include "ldpfl/params.hpp"

namespace ldpfl {

enum class AggregationRule { fedavg, multikrum, trimmedmean };

struct AggregationConfig {
    AggregationRule rule = AggregationRule::fedavg;
    int f = 0;     // Byzantine tolerance (multikrum)
    int k = 1;     // selection count (multikrum)
    int beta = 0;  // trim count per side (trimmedmean)

    void validate(int n_updates) const;
};

ParamVector fedavg(const std::vector<ParamVector>& updates);

// score(i) = sum of squared L2 distances from update i to its N-f-2 nearest
// other updates.
std::vector<double> multikrum_scores(const std::vector<ParamVector>& updates,
                                     int f);

struct MultikrumResult {
    ParamVector aggregate;
    std::vector<int> selected;  // ascending indices; ties broken by lowest index
};

MultikrumResult multikrum(const std::vector<ParamVector>& updates, int f, int k);

// Per coordinate: drop the beta smallest and beta largest values, average
// the rest.
ParamVector trimmed_mean(const std::vector<ParamVector>& updates, int beta);

// Weiszfeld iteration for the point minimizing the sum of L2 distances.
ParamVector geometric_median(const std::vector<ParamVector>& points,
                             double tol = 1e-7, int max_iter = 100);

// Sum of distances from x to every point; the geometric-median objective.
double distance_sum(const ParamVector& x, const std::vector<ParamVector>& points);

// Dispatch on config; selected_out (may be null) receives the Multi-Krum
// selection set.
ParamVector aggregate(const std::vector<ParamVector>& updates,
                      const AggregationConfig& cfg,
                      std::vector<int>* selected_out = nullptr);

}  // namespace ldpfl
