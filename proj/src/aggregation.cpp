#include "ldpfl/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ldpfl/common.hpp"

namespace ldpfl {

void AggregationConfig::validate(int n_updates) const {
    switch (rule) {
        case AggregationRule::fedavg:
            break;
        case AggregationRule::multikrum:
            if (n_updates - f - 2 < 1) {
                throw config_error("multikrum: requires N - f - 2 >= 1");
            }
            if (k < 1 || k > n_updates) {
                throw config_error("multikrum: requires 1 <= k <= N");
            }
            break;
        case AggregationRule::trimmedmean:
            if (beta < 0 || 2 * beta >= n_updates) {
                throw config_error("trimmed_mean: requires 0 <= 2*beta < N");
            }
            break;
    }
}

ParamVector fedavg(const std::vector<ParamVector>& updates) {
    return mean(updates);
}

std::vector<double> multikrum_scores(const std::vector<ParamVector>& updates,
                                     int f) {
    const int n = static_cast<int>(updates.size());
    const int n_closest = n - f - 2;
    if (n_closest < 1) throw config_error("multikrum_scores: N - f - 2 must be >= 1");

    std::vector<double> sq(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d = l2_distance(updates[static_cast<std::size_t>(i)],
                                         updates[static_cast<std::size_t>(j)]);
            sq[static_cast<std::size_t>(i) * n + j] = d * d;
            sq[static_cast<std::size_t>(j) * n + i] = d * d;
        }
    }
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<double> row;
    for (int i = 0; i < n; ++i) {
        row.clear();
        for (int j = 0; j < n; ++j) {
            if (j != i) row.push_back(sq[static_cast<std::size_t>(i) * n + j]);
        }
        std::nth_element(row.begin(), row.begin() + (n_closest - 1), row.end());
        scores[static_cast<std::size_t>(i)] =
            std::accumulate(row.begin(), row.begin() + n_closest, 0.0);
    }
    return scores;
}

MultikrumResult multikrum(const std::vector<ParamVector>& updates, int f, int k) {
    const int n = static_cast<int>(updates.size());
    if (k < 1 || k > n) throw config_error("multikrum: requires 1 <= k <= N");
    const auto scores = multikrum_scores(updates, f);

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    // Stable on equal scores: ties go to the lowest index.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return scores[static_cast<std::size_t>(a)] < scores[static_cast<std::size_t>(b)];
    });
    std::vector<int> selected(order.begin(), order.begin() + k);
    std::sort(selected.begin(), selected.end());

    std::vector<ParamVector> chosen;
    chosen.reserve(selected.size());
    for (int i : selected) chosen.push_back(updates[static_cast<std::size_t>(i)]);
    return {mean(chosen), std::move(selected)};
}

ParamVector trimmed_mean(const std::vector<ParamVector>& updates, int beta) {
    if (updates.empty()) throw usage_error("trimmed_mean: empty input list");
    const int n = static_cast<int>(updates.size());
    if (beta < 0 || 2 * beta >= n) {
        throw config_error("trimmed_mean: requires 0 <= 2*beta < N");
    }
    for (const auto& u : updates) require_same_shapes(updates.front(), u);

    const std::size_t dim = updates.front().dim();
    std::vector<double> out(dim);
    std::vector<double> column(static_cast<std::size_t>(n));
    const int kept = n - 2 * beta;
    for (std::size_t j = 0; j < dim; ++j) {
        for (int i = 0; i < n; ++i) {
            column[static_cast<std::size_t>(i)] =
                updates[static_cast<std::size_t>(i)].values()[j];
        }
        std::sort(column.begin(), column.end());
        double sum = 0.0;
        for (int i = beta; i < n - beta; ++i) sum += column[static_cast<std::size_t>(i)];
        out[j] = sum / static_cast<double>(kept);
    }
    return updates.front().with_values(std::move(out));
}

double distance_sum(const ParamVector& x, const std::vector<ParamVector>& points) {
    double sum = 0.0;
    for (const auto& p : points) sum += l2_distance(x, p);
    return sum;
}

ParamVector geometric_median(const std::vector<ParamVector>& points,
                             double tol, int max_iter) {
    if (points.empty()) throw usage_error("geometric_median: empty input list");
    for (const auto& p : points) require_same_shapes(points.front(), p);

    ParamVector current = mean(points);
    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<double> next(current.dim(), 0.0);
        double weight_sum = 0.0;
        for (const auto& p : points) {
            // Regularized denominator keeps the iterate defined when it lands
            // on a data point.
            const double w = 1.0 / std::max(l2_distance(current, p), 1e-12);
            weight_sum += w;
            for (std::size_t j = 0; j < next.size(); ++j) {
                next[j] += w * p.values()[j];
            }
        }
        for (double& v : next) v /= weight_sum;
        ParamVector candidate = current.with_values(std::move(next));
        const double shift = l2_distance(candidate, current);
        current = std::move(candidate);
        if (shift < tol) break;
    }
    return current;
}

ParamVector aggregate(const std::vector<ParamVector>& updates,
                      const AggregationConfig& cfg,
                      std::vector<int>* selected_out) {
    cfg.validate(static_cast<int>(updates.size()));
    if (selected_out) selected_out->clear();
    switch (cfg.rule) {
        case AggregationRule::fedavg:
            return fedavg(updates);
        case AggregationRule::multikrum: {
            auto result = multikrum(updates, cfg.f, cfg.k);
            if (selected_out) *selected_out = result.selected;
            return result.aggregate;
        }
        case AggregationRule::trimmedmean:
            return trimmed_mean(updates, cfg.beta);
    }
    throw config_error("aggregate: unknown rule");
}

}  // namespace ldpfl
