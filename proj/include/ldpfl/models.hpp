#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ldpfl/common.hpp"
#include "ldpfl/params.hpp"

namespace ldpfl {

enum class ModelKind { logistic_regression, mlp2 };

// Architecture of a client model. The two kinds are a softmax linear model
// and a one-hidden-layer ReLU network with hand-written gradients.
struct ModelSpec {
    ModelKind kind = ModelKind::logistic_regression;
    int input_dim = 0;
    int hidden_dim = 0;  // mlp2 only
    int num_classes = 0;

    void validate() const;
    std::size_t param_dim() const;
    std::vector<LayerShape> layer_shapes() const;
};

// A mini-batch: row-major inputs [size x input_dim] plus integer labels.
struct Batch {
    std::vector<double> inputs;
    std::vector<int> labels;
    int input_dim = 0;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return {inputs.data() + i * static_cast<std::size_t>(input_dim),
                static_cast<std::size_t>(input_dim)};
    }
    void validate(int num_classes) const;
};

// Deterministic initialization: per-layer N(0, 1/fan_in) weights, zero biases.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

// Mean cross-entropy over the batch.
double loss(const ModelSpec& spec, const ParamVector& theta, const Batch& batch);

ParamVector grad(const ModelSpec& spec, const ParamVector& theta,
                 const Batch& batch);

// Gradient of the negated loss; equals scale(grad(...), -1) bitwise.
ParamVector reverse_grad(const ModelSpec& spec, const ParamVector& theta,
                         const Batch& batch);

// 1 - accuracy; argmax ties broken by lowest class index.
double error_rate(const ModelSpec& spec, const ParamVector& theta,
                  const Batch& test);

// Internals shared with the ldp module: single-sample gradient accumulation
// on raw storage, optionally also producing the gradient w.r.t. the input
// (needed for PrivateFL's preprocessing layer).
namespace detail {

// Adds weight * dLoss/dtheta for one sample into grad_out (size param_dim).
// If input_grad_out is non-null it receives dLoss/dx (size input_dim),
// overwritten rather than accumulated.
void accumulate_sample_grad(const ModelSpec& spec,
                            std::span<const double> theta,
                            std::span<const double> x, int label, double weight,
                            std::span<double> grad_out,
                            double* input_grad_out = nullptr);

double sample_loss(const ModelSpec& spec, std::span<const double> theta,
                   std::span<const double> x, int label);

void logits(const ModelSpec& spec, std::span<const double> theta,
            std::span<const double> x, std::span<double> out);

}  // namespace detail

}  // namespace ldpfl
