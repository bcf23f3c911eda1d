#include "ldpfl/models.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ldpfl/rng.hpp"

namespace ldpfl {

void ModelSpec::validate() const {
    if (input_dim <= 0) throw config_error("ModelSpec: input_dim must be positive");
    if (num_classes < 2) throw config_error("ModelSpec: num_classes must be >= 2");
    if (kind == ModelKind::mlp2 && hidden_dim <= 0) {
        throw config_error("ModelSpec: mlp2 requires positive hidden_dim");
    }
}

std::size_t ModelSpec::param_dim() const {
    const auto in = static_cast<std::size_t>(input_dim);
    const auto h = static_cast<std::size_t>(hidden_dim);
    const auto c = static_cast<std::size_t>(num_classes);
    if (kind == ModelKind::logistic_regression) return in * c + c;
    return in * h + h + h * c + c;
}

std::vector<LayerShape> ModelSpec::layer_shapes() const {
    const auto in = static_cast<std::size_t>(input_dim);
    const auto h = static_cast<std::size_t>(hidden_dim);
    const auto c = static_cast<std::size_t>(num_classes);
    if (kind == ModelKind::logistic_regression) {
        return {{"weight", 0, in * c}, {"bias", in * c, c}};
    }
    std::vector<LayerShape> shapes;
    std::size_t off = 0;
    auto push = [&](const char* name, std::size_t len) {
        shapes.push_back({name, off, len});
        off += len;
    };
    push("fc1.weight", in * h);
    push("fc1.bias", h);
    push("fc2.weight", h * c);
    push("fc2.bias", c);
    return shapes;
}

void Batch::validate(int num_classes) const {
    if (labels.empty()) throw usage_error("Batch: empty batch");
    if (inputs.size() != labels.size() * static_cast<std::size_t>(input_dim)) {
        throw shape_error("Batch: inputs size does not match labels x input_dim");
    }
    for (int y : labels) {
        if (y < 0 || y >= num_classes) {
            throw config_error("Batch: label out of range");
        }
    }
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    std::vector<double> values(spec.param_dim(), 0.0);
    const auto shapes = spec.layer_shapes();
    for (const auto& layer : shapes) {
        if (layer.name.find("bias") != std::string::npos) continue;
        // fan_in: columns of the weight matrix feeding this layer.
        const std::size_t fan_in =
            (layer.name == "fc2.weight")
                ? static_cast<std::size_t>(spec.hidden_dim)
                : static_cast<std::size_t>(spec.input_dim);
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < layer.length; ++i) {
            values[layer.offset + i] = rng.normal(0.0, scale);
        }
    }
    return ParamVector(std::move(values), shapes);
}

namespace detail {

void logits(const ModelSpec& spec, std::span<const double> theta,
            std::span<const double> x, std::span<double> out) {
    const int in = spec.input_dim;
    const int nc = spec.num_classes;
    if (spec.kind == ModelKind::logistic_regression) {
        const double* w = theta.data();
        const double* b = theta.data() + static_cast<std::size_t>(in) * nc;
        for (int c = 0; c < nc; ++c) {
            double z = b[c];
            const double* wc = w + static_cast<std::size_t>(c) * in;
            for (int j = 0; j < in; ++j) z += wc[j] * x[j];
            out[c] = z;
        }
        return;
    }
    const int h = spec.hidden_dim;
    const double* w1 = theta.data();
    const double* b1 = w1 + static_cast<std::size_t>(in) * h;
    const double* w2 = b1 + h;
    const double* b2 = w2 + static_cast<std::size_t>(h) * nc;
    std::vector<double> hidden(static_cast<std::size_t>(h));
    for (int k = 0; k < h; ++k) {
        double z = b1[k];
        const double* wk = w1 + static_cast<std::size_t>(k) * in;
        for (int j = 0; j < in; ++j) z += wk[j] * x[j];
        hidden[static_cast<std::size_t>(k)] = z > 0.0 ? z : 0.0;
    }
    for (int c = 0; c < nc; ++c) {
        double z = b2[c];
        const double* wc = w2 + static_cast<std::size_t>(c) * h;
        for (int k = 0; k < h; ++k) z += wc[k] * hidden[static_cast<std::size_t>(k)];
        out[c] = z;
    }
}

namespace {

// softmax probabilities in place of the logits buffer
void softmax_inplace(std::span<double> z) {
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

}  // namespace

double sample_loss(const ModelSpec& spec, std::span<const double> theta,
                   std::span<const double> x, int label) {
    std::vector<double> z(static_cast<std::size_t>(spec.num_classes));
    logits(spec, theta, x, z);
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - m);
    return m + std::log(sum) - z[static_cast<std::size_t>(label)];
}

void accumulate_sample_grad(const ModelSpec& spec,
                            std::span<const double> theta,
                            std::span<const double> x, int label, double weight,
                            std::span<double> grad_out,
                            double* input_grad_out) {
    const int in = spec.input_dim;
    const int nc = spec.num_classes;
    std::vector<double> delta(static_cast<std::size_t>(nc));

    if (spec.kind == ModelKind::logistic_regression) {
        logits(spec, theta, x, delta);
        softmax_inplace(delta);
        delta[static_cast<std::size_t>(label)] -= 1.0;
        const double* w = theta.data();
        double* gw = grad_out.data();
        double* gb = grad_out.data() + static_cast<std::size_t>(in) * nc;
        if (input_grad_out) std::fill(input_grad_out, input_grad_out + in, 0.0);
        for (int c = 0; c < nc; ++c) {
            const double dc = weight * delta[static_cast<std::size_t>(c)];
            double* gwc = gw + static_cast<std::size_t>(c) * in;
            const double* wc = w + static_cast<std::size_t>(c) * in;
            for (int j = 0; j < in; ++j) {
                gwc[j] += dc * x[j];
                if (input_grad_out) input_grad_out[j] += dc * wc[j];
            }
            gb[c] += dc;
        }
        return;
    }

    const int h = spec.hidden_dim;
    const double* w1 = theta.data();
    const double* b1 = w1 + static_cast<std::size_t>(in) * h;
    const double* w2 = b1 + h;
    const double* b2 = w2 + static_cast<std::size_t>(h) * nc;

    std::vector<double> pre(static_cast<std::size_t>(h));
    std::vector<double> hidden(static_cast<std::size_t>(h));
    for (int k = 0; k < h; ++k) {
        double z = b1[k];
        const double* wk = w1 + static_cast<std::size_t>(k) * in;
        for (int j = 0; j < in; ++j) z += wk[j] * x[j];
        pre[static_cast<std::size_t>(k)] = z;
        hidden[static_cast<std::size_t>(k)] = z > 0.0 ? z : 0.0;
    }
    for (int c = 0; c < nc; ++c) {
        double z = b2[c];
        const double* wc = w2 + static_cast<std::size_t>(c) * h;
        for (int k = 0; k < h; ++k) z += wc[k] * hidden[static_cast<std::size_t>(k)];
        delta[static_cast<std::size_t>(c)] = z;
    }
    softmax_inplace(delta);
    delta[static_cast<std::size_t>(label)] -= 1.0;

    double* gw1 = grad_out.data();
    double* gb1 = gw1 + static_cast<std::size_t>(in) * h;
    double* gw2 = gb1 + h;
    double* gb2 = gw2 + static_cast<std::size_t>(h) * nc;

    std::vector<double> dhidden(static_cast<std::size_t>(h), 0.0);
    for (int c = 0; c < nc; ++c) {
        const double dc = delta[static_cast<std::size_t>(c)];
        const double* wc = w2 + static_cast<std::size_t>(c) * h;
        double* gwc = gw2 + static_cast<std::size_t>(c) * h;
        for (int k = 0; k < h; ++k) {
            gwc[k] += weight * dc * hidden[static_cast<std::size_t>(k)];
            dhidden[static_cast<std::size_t>(k)] += dc * wc[k];
        }
        gb2[c] += weight * dc;
    }
    if (input_grad_out) std::fill(input_grad_out, input_grad_out + in, 0.0);
    for (int k = 0; k < h; ++k) {
        // ReLU subgradient at 0 is pinned to 0.
        if (!(pre[static_cast<std::size_t>(k)] > 0.0)) continue;
        const double dk = dhidden[static_cast<std::size_t>(k)];
        double* gwk = gw1 + static_cast<std::size_t>(k) * in;
        const double* wk = w1 + static_cast<std::size_t>(k) * in;
        for (int j = 0; j < in; ++j) {
            gwk[j] += weight * dk * x[j];
            if (input_grad_out) input_grad_out[j] += weight * dk * wk[j];
        }
        gb1[k] += weight * dk;
    }
}

}  // namespace detail

namespace {

void require_theta(const ModelSpec& spec, const ParamVector& theta) {
    if (theta.dim() != spec.param_dim()) {
        throw shape_error("parameter vector does not match model spec");
    }
}

void require_batch(const ModelSpec& spec, const Batch& batch) {
    batch.validate(spec.num_classes);
    if (batch.input_dim != spec.input_dim) {
        throw shape_error("batch input_dim does not match model spec");
    }
}

}  // namespace

double loss(const ModelSpec& spec, const ParamVector& theta, const Batch& batch) {
    spec.validate();
    require_theta(spec, theta);
    require_batch(spec, batch);
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        total += detail::sample_loss(spec, theta.values(), batch.row(i),
                                     batch.labels[i]);
    }
    return total / static_cast<double>(batch.size());
}

ParamVector grad(const ModelSpec& spec, const ParamVector& theta,
                 const Batch& batch) {
    spec.validate();
    require_theta(spec, theta);
    require_batch(spec, batch);
    std::vector<double> g(theta.dim(), 0.0);
    const double w = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        detail::accumulate_sample_grad(spec, theta.values(), batch.row(i),
                                       batch.labels[i], w, g);
    }
    return theta.with_values(std::move(g));
}

ParamVector reverse_grad(const ModelSpec& spec, const ParamVector& theta,
                         const Batch& batch) {
    return scale(grad(spec, theta, batch), -1.0);
}

double error_rate(const ModelSpec& spec, const ParamVector& theta,
                  const Batch& test) {
    spec.validate();
    require_theta(spec, theta);
    test.validate(spec.num_classes);
    std::vector<double> z(static_cast<std::size_t>(spec.num_classes));
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        detail::logits(spec, theta.values(), test.row(i), z);
        int best = 0;
        for (int c = 1; c < spec.num_classes; ++c) {
            if (z[static_cast<std::size_t>(c)] > z[static_cast<std::size_t>(best)]) {
                best = c;
            }
        }
        if (best != test.labels[i]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(test.size());
}

}  // namespace ldpfl
