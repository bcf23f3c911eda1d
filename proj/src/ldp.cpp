#include "ldpfl/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace ldpfl {

void ProtocolConfig::validate() const {
    if (!(eta > 0.0)) throw config_error("ProtocolConfig: eta must be > 0");
    if (epochs < 1) throw config_error("ProtocolConfig: epochs must be >= 1");
    if (protocol == Protocol::ldpsgd || protocol == Protocol::privatefl) {
        if (!(sample_prob > 0.0 && sample_prob <= 1.0)) {
            throw config_error("ProtocolConfig: sample_prob must be in (0,1]");
        }
        if (!(clip_c > 0.0)) throw config_error("ProtocolConfig: clip_c must be > 0");
        if (!(sigma >= 0.0)) throw config_error("ProtocolConfig: sigma must be >= 0");
    }
    if (protocol == Protocol::ldpfl && !(epsilon > 0.0)) {
        throw config_error("ProtocolConfig: epsilon must be > 0");
    }
}

TransformLayer TransformLayer::identity(int input_dim) {
    TransformLayer t;
    t.scale.assign(static_cast<std::size_t>(input_dim), 1.0);
    t.shift.assign(static_cast<std::size_t>(input_dim), 0.0);
    return t;
}

void TransformLayer::validate(int input_dim) const {
    const auto n = static_cast<std::size_t>(input_dim);
    if (scale.size() != n || shift.size() != n) {
        throw shape_error("TransformLayer: dimension mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(scale[i]) || !std::isfinite(shift[i])) {
            throw numeric_error("TransformLayer: non-finite entry");
        }
    }
}

LayerRanges layer_ranges(const ParamVector& theta_g, double min_half_width) {
    LayerRanges ranges;
    ranges.reserve(theta_g.shapes().size());
    for (const auto& layer : theta_g.shapes()) {
        double lo = theta_g.values()[layer.offset];
        double hi = lo;
        for (std::size_t i = 0; i < layer.length; ++i) {
            const double v = theta_g.values()[layer.offset + i];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        ranges.push_back({0.5 * (lo + hi),
                          std::max(0.5 * (hi - lo), min_half_width)});
    }
    return ranges;
}

double two_point_gap(double epsilon) {
    if (!(epsilon > 0.0)) throw config_error("two_point_gap: epsilon must be > 0");
    const double e = std::exp(epsilon);
    return (e + 1.0) / (e - 1.0);
}

double high_value_probability(double w, double center, double half_width,
                              double epsilon) {
    if (!(half_width > 0.0)) throw config_error("high_value_probability: r must be > 0");
    const double e = std::exp(epsilon);
    return ((w - center) * (e - 1.0) + half_width * (e + 1.0)) /
           (2.0 * half_width * (e + 1.0));
}

namespace {

double vec_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Shared DP-SGD iteration core over a flat (possibly joint) parameter space.
// `per_sample_grad(i, out)` must write (not accumulate) the i-th sample's
// gradient into `out`.
template <typename GradFn>
void noisy_sgd_epochs(std::vector<double>& theta, std::size_t n_samples,
                      const ProtocolConfig& cfg, bool apply_ldp, Rng& rng,
                      LocalRoundDiag* diag, const ClipObserver& observer,
                      GradFn&& per_sample_grad) {
    std::vector<double> g_sum(theta.size());
    std::vector<double> g_sample(theta.size());
    std::vector<std::size_t> batch;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        batch.clear();
        for (std::size_t i = 0; i < n_samples; ++i) {
            if (rng.uniform() < cfg.sample_prob) batch.push_back(i);
        }
        if (batch.empty()) {
            if (diag) ++diag->skipped_batches;
            continue;
        }
        std::fill(g_sum.begin(), g_sum.end(), 0.0);
        for (std::size_t i : batch) {
            std::fill(g_sample.begin(), g_sample.end(), 0.0);
            per_sample_grad(i, g_sample);
            if (apply_ldp) {
                const double norm = vec_norm(g_sample);
                if (norm > cfg.clip_c) {
                    const double s = cfg.clip_c / norm;
                    for (double& x : g_sample) x *= s;
                }
                if (observer) observer(std::min(norm, cfg.clip_c));
            }
            for (std::size_t j = 0; j < g_sum.size(); ++j) g_sum[j] += g_sample[j];
        }
        if (apply_ldp && cfg.sigma > 0.0) {
            const double noise_std = cfg.sigma * cfg.clip_c;
            for (double& x : g_sum) x += rng.normal(0.0, noise_std);
        }
        const double step = cfg.eta / static_cast<double>(batch.size());
        for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= step * g_sum[j];
    }
}

}  // namespace

ParamVector ldpsgd_local_round(const ModelSpec& spec, const ParamVector& theta_g,
                               const Dataset& ds, const ProtocolConfig& cfg,
                               bool malicious, bool apply_ldp, Rng& rng,
                               LocalRoundDiag* diag, const ClipObserver& observer) {
    cfg.validate();
    if (cfg.protocol != Protocol::ldpsgd) {
        throw usage_error("ldpsgd_local_round: wrong protocol in config");
    }
    ds.validate();
    std::vector<double> theta = theta_g.values();
    const double sign = malicious ? -1.0 : 1.0;
    const Batch batch = ds.as_batch();
    noisy_sgd_epochs(theta, ds.size(), cfg, apply_ldp, rng, diag, observer,
                     [&](std::size_t i, std::vector<double>& out) {
                         detail::accumulate_sample_grad(spec, theta,
                                                        batch.row(i),
                                                        ds.labels[i], sign, out);
                     });
    return theta_g.with_values(std::move(theta));
}

PrivateflRound privatefl_local_round(const ModelSpec& spec,
                                     const ParamVector& theta_g,
                                     const TransformLayer& transform,
                                     const Dataset& ds, const ProtocolConfig& cfg,
                                     bool malicious, bool apply_ldp, Rng& rng,
                                     LocalRoundDiag* diag,
                                     const ClipObserver& observer) {
    cfg.validate();
    if (cfg.protocol != Protocol::privatefl) {
        throw usage_error("privatefl_local_round: wrong protocol in config");
    }
    ds.validate();
    transform.validate(ds.input_dim);

    const std::size_t d = theta_g.dim();
    const auto in = static_cast<std::size_t>(ds.input_dim);
    // Joint space: [model params | transform scale | transform shift].
    std::vector<double> joint(d + 2 * in);
    std::copy(theta_g.values().begin(), theta_g.values().end(), joint.begin());
    std::copy(transform.scale.begin(), transform.scale.end(), joint.begin() + static_cast<std::ptrdiff_t>(d));
    std::copy(transform.shift.begin(), transform.shift.end(), joint.begin() + static_cast<std::ptrdiff_t>(d + in));

    const double sign = malicious ? -1.0 : 1.0;
    std::vector<double> x_transformed(in);
    std::vector<double> input_grad(in);
    const Batch batch = ds.as_batch();

    noisy_sgd_epochs(
        joint, ds.size(), cfg, apply_ldp, rng, diag, observer,
        [&](std::size_t i, std::vector<double>& out) {
            const auto x = batch.row(i);
            const double* a = joint.data() + d;
            const double* b = joint.data() + d + in;
            for (std::size_t j = 0; j < in; ++j) {
                x_transformed[j] = a[j] * x[j] + b[j];
            }
            detail::accumulate_sample_grad(
                spec, {joint.data(), d}, x_transformed, ds.labels[i], sign,
                {out.data(), d}, input_grad.data());
            for (std::size_t j = 0; j < in; ++j) {
                out[d + j] = input_grad[j] * x[j];  // d/d scale
                out[d + in + j] = input_grad[j];    // d/d shift
            }
        });

    PrivateflRound result{
        theta_g.with_values({joint.begin(), joint.begin() + static_cast<std::ptrdiff_t>(d)}),
        TransformLayer{}};
    result.transform.scale.assign(joint.begin() + static_cast<std::ptrdiff_t>(d),
                                  joint.begin() + static_cast<std::ptrdiff_t>(d + in));
    result.transform.shift.assign(joint.begin() + static_cast<std::ptrdiff_t>(d + in),
                                  joint.end());
    return result;
}

ParamVector ldpfl_local_round(const ModelSpec& spec, const ParamVector& theta_g,
                              const Dataset& ds, const ProtocolConfig& cfg,
                              bool malicious) {
    cfg.validate();
    if (cfg.protocol != Protocol::ldpfl) {
        throw usage_error("ldpfl_local_round: wrong protocol in config");
    }
    ds.validate();
    std::vector<double> theta = theta_g.values();
    std::vector<double> g(theta.size());
    const double sign = malicious ? -1.0 : 1.0;
    const Batch batch = ds.as_batch();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < ds.size(); ++i) {
            std::fill(g.begin(), g.end(), 0.0);
            detail::accumulate_sample_grad(spec, theta, batch.row(i),
                                           ds.labels[i], sign, g);
            for (std::size_t j = 0; j < theta.size(); ++j) {
                theta[j] -= cfg.eta * g[j];
            }
        }
    }
    return theta_g.with_values(std::move(theta));
}

namespace {

void require_ranges(const ParamVector& theta, const LayerRanges& ranges) {
    if (ranges.size() != theta.shapes().size()) {
        throw shape_error("LayerRanges do not match parameter layer table");
    }
    for (const auto& r : ranges) {
        if (!(r.half_width > 0.0)) {
            throw config_error("LayerRanges: half_width must be > 0");
        }
    }
}

}  // namespace

ParamVector data_perturbation(const ParamVector& theta, const LayerRanges& ranges,
                              double epsilon, Rng& rng) {
    require_ranges(theta, ranges);
    const double gap = two_point_gap(epsilon);
    std::vector<double> out(theta.dim());
    for (std::size_t l = 0; l < ranges.size(); ++l) {
        const auto& layer = theta.shapes()[l];
        const double c = ranges[l].center;
        const double r = ranges[l].half_width;
        const double high = c + r * gap;
        const double low = c - r * gap;
        for (std::size_t i = 0; i < layer.length; ++i) {
            const double w =
                std::clamp(theta.values()[layer.offset + i], c - r, c + r);
            const double p = high_value_probability(w, c, r, epsilon);
            out[layer.offset + i] = rng.uniform() < p ? high : low;
        }
    }
    return theta.with_values(std::move(out));
}

ParamVector clip2val(const ParamVector& theta, const LayerRanges& ranges,
                     double epsilon) {
    require_ranges(theta, ranges);
    const double gap = two_point_gap(epsilon);
    std::vector<double> out(theta.dim());
    for (std::size_t l = 0; l < ranges.size(); ++l) {
        const auto& layer = theta.shapes()[l];
        const double c = ranges[l].center;
        const double r = ranges[l].half_width;
        for (std::size_t i = 0; i < layer.length; ++i) {
            const double w = theta.values()[layer.offset + i];
            out[layer.offset + i] = w > c ? c + r * gap : c - r * gap;
        }
    }
    return theta.with_values(std::move(out));
}

}  // namespace ldpfl
