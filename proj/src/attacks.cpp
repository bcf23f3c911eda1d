#include "ldpfl/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace ldpfl {

void AttackPlan::validate() const {
    if (ate < 1) throw config_error("AttackPlan: ate must be >= 1");
    if (!(scal > 0.0)) throw config_error("AttackPlan: scal must be > 0");
    if (t_scale < 0.0) throw config_error("AttackPlan: t_scale must be >= 0");
    if ((kind == AttackKind::tmma || kind == AttackKind::adapa) &&
        knowledge == Knowledge::local) {
        throw config_error("AttackPlan: tmma/adapa require partial knowledge or more");
    }
    if (kind == AttackKind::adapa && knowledge != Knowledge::global) {
        throw config_error("AttackPlan: adapa requires global knowledge");
    }
    if (kind == AttackKind::tmma && n_malicious < 1) {
        throw usage_error("AttackPlan: tmma requires n_malicious >= 1");
    }
    if (n_malicious > n_total) {
        throw config_error("AttackPlan: n_malicious exceeds n_total");
    }
    if (use_eavesdropped_estimate && knowledge != Knowledge::global) {
        throw config_error("AttackPlan: eavesdropped estimate needs global knowledge");
    }
}

namespace {

ProtocolConfig with_epochs(const ProtocolConfig& cfg, int epochs) {
    ProtocolConfig out = cfg;
    out.epochs = epochs;
    return out;
}

void require_ldpfl_ranges(const LayerRanges* ranges) {
    if (!ranges) throw usage_error("ldpfl attack requires layer ranges");
}

// One local round in the protocol's own style.
ParamVector protocol_round(const ModelSpec& spec, const ParamVector& theta_g,
                           const Dataset& ds, const ProtocolConfig& cfg,
                           bool malicious, bool apply_ldp,
                           TransformLayer* transform, Rng& rng,
                           bool persist_transform) {
    switch (cfg.protocol) {
        case Protocol::ldpsgd:
            return ldpsgd_local_round(spec, theta_g, ds, cfg, malicious,
                                      apply_ldp, rng);
        case Protocol::privatefl: {
            if (!transform) {
                throw usage_error("privatefl attack requires a transform layer");
            }
            auto result = privatefl_local_round(spec, theta_g, *transform, ds,
                                                cfg, malicious, apply_ldp, rng);
            if (persist_transform) *transform = std::move(result.transform);
            return std::move(result.theta);
        }
        case Protocol::ldpfl:
            return ldpfl_local_round(spec, theta_g, ds, cfg, malicious);
    }
    throw config_error("protocol_round: unknown protocol");
}

}  // namespace

ParamVector rpa_update(const ParamVector& theta_g, const ProtocolConfig& cfg,
                       const AttackPlan& plan, const LayerRanges* ranges,
                       Rng& rng) {
    plan.validate();
    if (cfg.protocol == Protocol::ldpfl) {
        require_ldpfl_ranges(ranges);
        const double gap = two_point_gap(cfg.epsilon);
        std::vector<double> out(theta_g.dim());
        for (std::size_t l = 0; l < ranges->size(); ++l) {
            const auto& layer = theta_g.shapes()[l];
            const double high = (*ranges)[l].center + (*ranges)[l].half_width * gap;
            const double low = (*ranges)[l].center - (*ranges)[l].half_width * gap;
            for (std::size_t i = 0; i < layer.length; ++i) {
                out[layer.offset + i] = (rng.next_u64() & 1u) ? high : low;
            }
        }
        return theta_g.with_values(std::move(out));
    }

    const double target_norm = plan.t_scale * cfg.clip_c * plan.ate;
    std::vector<double> g(theta_g.dim());
    for (double& v : g) v = rng.normal();
    double norm = 0.0;
    for (double v : g) norm += v * v;
    norm = std::sqrt(norm);
    const double s = norm > 0.0 ? target_norm / norm : 0.0;
    std::vector<double> out(theta_g.dim());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = theta_g.values()[i] - cfg.eta * s * g[i];
    }
    return theta_g.with_values(std::move(out));
}

ParamVector llra_update(const ModelSpec& spec, const ParamVector& theta_g,
                        const Dataset& ds, const ProtocolConfig& cfg,
                        const AttackPlan& plan, const LayerRanges* ranges,
                        TransformLayer* transform, Rng& rng) {
    plan.validate();
    if (plan.kind != AttackKind::llra) {
        throw usage_error("llra_update: plan kind is not llra");
    }
    const auto round_cfg = with_epochs(cfg, plan.ate);
    if (cfg.protocol == Protocol::ldpfl) {
        require_ldpfl_ranges(ranges);
        const ParamVector raw =
            ldpfl_local_round(spec, theta_g, ds, round_cfg, /*malicious=*/true);
        return plan.mode == AttackMode::input
                   ? data_perturbation(raw, *ranges, cfg.epsilon, rng)
                   : clip2val(raw, *ranges, cfg.epsilon);
    }
    const bool apply_ldp = plan.mode == AttackMode::input;
    return protocol_round(spec, theta_g, ds, round_cfg, /*malicious=*/true,
                          apply_ldp, transform, rng, /*persist_transform=*/true);
}

ParamVector tmma_update(const ModelSpec& spec, const ParamVector& theta_g,
                        const Dataset& ds, const ProtocolConfig& cfg,
                        const AttackPlan& plan, const LayerRanges* ranges,
                        TransformLayer* transform, const EavesdropView* view,
                        Rng& rng) {
    plan.validate();
    if (plan.kind != AttackKind::tmma) {
        throw usage_error("tmma_update: plan kind is not tmma");
    }
    const bool apply_ldp = plan.mode == AttackMode::input;

    ParamVector theta_est =
        [&]() -> ParamVector {
        if (plan.use_eavesdropped_estimate) {
            if (!view || view->benign_uploads.empty()) {
                throw usage_error("tmma_update: eavesdropped estimate needs uploads");
            }
            return mean(view->benign_uploads);
        }
        // Benign-style proxy round on the attacker's own data; the attacker's
        // transform must not drift here, so it is not persisted.
        return protocol_round(spec, theta_g, ds, cfg, /*malicious=*/false,
                              /*apply_ldp=*/true, transform, rng,
                              /*persist_transform=*/false);
    }();

    const ParamVector theta_target =
        protocol_round(spec, theta_g, ds, with_epochs(cfg, plan.ate),
                       /*malicious=*/true, apply_ldp, transform, rng,
                       /*persist_transform=*/true);

    const double n = plan.n_malicious;
    const double big_n = plan.n_total;
    std::vector<double> adv(theta_g.dim());
    for (std::size_t i = 0; i < adv.size(); ++i) {
        adv[i] = (big_n * theta_target.values()[i] -
                  (big_n - n) * theta_est.values()[i]) /
                 n;
    }
    ParamVector theta_adv = theta_g.with_values(std::move(adv));

    if (cfg.protocol == Protocol::ldpfl) {
        require_ldpfl_ranges(ranges);
        return plan.mode == AttackMode::input
                   ? data_perturbation(theta_adv, *ranges, cfg.epsilon, rng)
                   : clip2val(theta_adv, *ranges, cfg.epsilon);
    }
    return theta_adv;
}

ParamVector adapa_init(const ParamVector& theta_g, const EavesdropView& view,
                       const AggregationConfig& agg, Protocol protocol) {
    if (protocol == Protocol::ldpfl) return theta_g;
    switch (agg.rule) {
        case AggregationRule::multikrum:
            if (view.benign_uploads.empty()) {
                throw usage_error("adapa_init: multikrum branch needs benign uploads");
            }
            return geometric_median(view.benign_uploads);
        case AggregationRule::trimmedmean:
            if (view.benign_uploads.empty()) {
                throw usage_error("adapa_init: trimmedmean branch needs benign uploads");
            }
            return mean(view.benign_uploads);
        case AggregationRule::fedavg:
            return theta_g;
    }
    throw config_error("adapa_init: unknown rule");
}

ParamVector fit_on_def(const ParamVector& theta_adv, const EavesdropView& view,
                       const AggregationConfig& agg, double scal,
                       Protocol protocol) {
    if (protocol == Protocol::ldpfl || agg.rule == AggregationRule::fedavg) {
        return theta_adv;
    }
    if (view.benign_uploads.empty()) {
        throw usage_error("fit_on_def: needs benign uploads");
    }
    if (agg.rule == AggregationRule::multikrum) {
        const ParamVector geo = geometric_median(view.benign_uploads);
        double min_dist = std::numeric_limits<double>::infinity();
        for (const auto& u : view.benign_uploads) {
            min_dist = std::min(min_dist, l2_distance(u, geo));
        }
        const double bound = scal * min_dist;
        const ParamVector delta = sub(theta_adv, geo);
        const double norm = l2_norm(delta);
        if (norm <= bound) return theta_adv;
        if (bound == 0.0) return geo;
        return add(geo, scale(delta, bound / norm));
    }

    // Trimmed mean: clamp into the benign survivor range per coordinate,
    // 1-based order statistics [(beta+1)-th smallest, (N-n-beta)-th smallest].
    const int n_benign = static_cast<int>(view.benign_uploads.size());
    if (n_benign - 2 * agg.beta < 1) {
        throw config_error("fit_on_def: beta leaves no benign survivors");
    }
    std::vector<double> out(theta_adv.dim());
    std::vector<double> column(static_cast<std::size_t>(n_benign));
    for (std::size_t j = 0; j < out.size(); ++j) {
        for (int i = 0; i < n_benign; ++i) {
            column[static_cast<std::size_t>(i)] =
                view.benign_uploads[static_cast<std::size_t>(i)].values()[j];
        }
        std::sort(column.begin(), column.end());
        const double lo = column[static_cast<std::size_t>(agg.beta)];
        const double hi = column[static_cast<std::size_t>(n_benign - agg.beta - 1)];
        out[j] = std::clamp(theta_adv.values()[j], lo, hi);
    }
    return theta_adv.with_values(std::move(out));
}

ParamVector restricted_median(const std::vector<ParamVector>& uploads,
                              const LayerRanges& ranges, double epsilon) {
    if (uploads.empty()) throw usage_error("restricted_median: empty upload list");
    const ParamVector& first = uploads.front();
    if (ranges.size() != first.shapes().size()) {
        throw shape_error("restricted_median: ranges do not match layer table");
    }
    const double gap = two_point_gap(epsilon);
    std::vector<double> out(first.dim());
    for (std::size_t l = 0; l < ranges.size(); ++l) {
        const auto& layer = first.shapes()[l];
        const double high = ranges[l].center + ranges[l].half_width * gap;
        const double low = ranges[l].center - ranges[l].half_width * gap;
        for (std::size_t i = 0; i < layer.length; ++i) {
            const std::size_t j = layer.offset + i;
            std::size_t high_votes = 0;
            for (const auto& u : uploads) {
                require_same_shapes(first, u);
                const double v = u.values()[j];
                if (v == high) {
                    ++high_votes;
                } else if (v != low) {
                    throw usage_error("restricted_median: upload is not two-point valued");
                }
            }
            out[j] = 2 * high_votes > uploads.size() ? high : low;
        }
    }
    return first.with_values(std::move(out));
}

ParamVector ldpfl_dimension_merge(const ParamVector& theta_adv_2pt,
                                  const ParamVector& theta_res,
                                  const std::vector<ParamVector>& uploads,
                                  double scal, Rng& rng) {
    require_same_shapes(theta_adv_2pt, theta_res);
    if (!(scal > 0.0 && scal <= 1.0)) {
        throw config_error("ldpfl_dimension_merge: scal must be in (0,1]");
    }
    std::size_t max_diff = theta_res.dim();
    for (const auto& u : uploads) {
        require_same_shapes(theta_res, u);
        std::size_t hamming = 0;
        for (std::size_t j = 0; j < u.dim(); ++j) {
            if (u.values()[j] != theta_res.values()[j]) ++hamming;
        }
        max_diff = std::min(max_diff, hamming);
    }

    std::vector<std::size_t> differing;
    for (std::size_t j = 0; j < theta_res.dim(); ++j) {
        if (theta_adv_2pt.values()[j] != theta_res.values()[j]) {
            differing.push_back(j);
        }
    }
    const std::size_t want = static_cast<std::size_t>(
        std::floor(scal * static_cast<double>(max_diff)));
    const std::size_t take = std::min(want, differing.size());

    // Partial Fisher-Yates picks `take` coordinates without replacement.
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t pick = i + rng.uniform_index(differing.size() - i);
        std::swap(differing[i], differing[pick]);
    }
    std::vector<double> out = theta_res.values();
    for (std::size_t i = 0; i < take; ++i) {
        out[differing[i]] = theta_adv_2pt.values()[differing[i]];
    }
    return theta_res.with_values(std::move(out));
}

ParamVector adapa_generate(const ModelSpec& spec, const ParamVector& theta_g,
                           const EavesdropView& view, const Dataset& ds,
                           const ProtocolConfig& cfg, const AttackPlan& plan,
                           const AggregationConfig& agg,
                           const LayerRanges* ranges, Rng& rng) {
    plan.validate();
    if (plan.kind != AttackKind::adapa) {
        throw usage_error("adapa_generate: plan kind is not adapa");
    }
    if (agg.rule == AggregationRule::fedavg) {
        throw config_error("adapa_generate: requires a robust aggregation rule");
    }
    if (agg.rule == AggregationRule::trimmedmean &&
        cfg.protocol == Protocol::ldpfl) {
        throw config_error("adapa_generate: trimmed mean is not applicable to ldpfl");
    }

    ParamVector theta = adapa_init(theta_g, view, agg, cfg.protocol);
    const Batch batch = ds.as_batch();
    for (int r = 0; r < plan.ate; ++r) {
        // Reverse-gradient step: theta - eta * grad(-L) = theta + eta * grad(L).
        const ParamVector ascent = add(theta, scale(grad(spec, theta, batch), cfg.eta));
        theta = fit_on_def(ascent, view, agg, plan.scal, cfg.protocol);
    }

    if (cfg.protocol == Protocol::ldpfl) {
        require_ldpfl_ranges(ranges);
        if (view.benign_uploads.empty()) {
            throw usage_error("adapa_generate: ldpfl branch needs benign uploads");
        }
        const ParamVector theta_res =
            restricted_median(view.benign_uploads, *ranges, cfg.epsilon);
        const ParamVector theta_adv = clip2val(theta, *ranges, cfg.epsilon);
        return ldpfl_dimension_merge(theta_adv, theta_res, view.benign_uploads,
                                     plan.scal, rng);
    }
    return theta;
}

}  // namespace ldpfl
