#pragma once

#include <functional>
#include <vector>

#include "ldpfl/data.hpp"
#include "ldpfl/models.hpp"
#include "ldpfl/params.hpp"
#include "ldpfl/rng.hpp"

namespace ldpfl {

enum class Protocol { ldpsgd, privatefl, ldpfl };

// Per-round client protocol parameters.
struct ProtocolConfig {
    Protocol protocol = Protocol::ldpsgd;
    double eta = 0.1;        // learning rate
    int epochs = 1;          // local iterations per round
    double sample_prob = 1.0;  // Poisson sampling probability P (ldpsgd/privatefl)
    double clip_c = 1.0;     // per-sample gradient norm bound C (ldpsgd/privatefl)
    double sigma = 0.0;      // Gaussian noise multiplier (ldpsgd/privatefl)
    double epsilon = 1.0;    // privacy budget (ldpfl)

    void validate() const;
};

// Per-client input preprocessing x -> scale * x + shift (PrivateFL). Trained
// locally and never uploaded.
struct TransformLayer {
    std::vector<double> scale;
    std::vector<double> shift;

    static TransformLayer identity(int input_dim);
    void validate(int input_dim) const;
};

// Per-layer (center, half_width) pair for LDP-FL perturbation, aligned with
// the parameter vector's layer table.
struct LayerRange {
    double center = 0.0;
    double half_width = 1.0;
};
using LayerRanges = std::vector<LayerRange>;

// Server-side range derivation: midpoint and half-width of each layer of the
// global model, with the half-width floored at min_half_width.
LayerRanges layer_ranges(const ParamVector& theta_g, double min_half_width = 1e-3);

// The two-point gap factor K = (e^eps + 1) / (e^eps - 1).
double two_point_gap(double epsilon);

// Probability that a (clamped) weight w maps to the high value c + r*K.
double high_value_probability(double w, double center, double half_width,
                              double epsilon);

struct LocalRoundDiag {
    int skipped_batches = 0;
};

// Observer for test instrumentation of per-sample clipped gradient norms.
using ClipObserver = std::function<void(double clipped_norm)>;

// One LDPSGD round: `epochs` iterations of Poisson sampling, per-sample
// gradients of L (or -L when malicious), per-sample clipping to C, noisy
// averaging g = (sum g_t + N(0, sigma^2 C^2 I)) / |B| when apply_ldp, and a
// step theta <- theta - eta * g. apply_ldp=false skips clipping and noise.
ParamVector ldpsgd_local_round(const ModelSpec& spec, const ParamVector& theta_g,
                               const Dataset& ds, const ProtocolConfig& cfg,
                               bool malicious, bool apply_ldp, Rng& rng,
                               LocalRoundDiag* diag = nullptr,
                               const ClipObserver& observer = {});

struct PrivateflRound {
    ParamVector theta;        // upload (transform excluded)
    TransformLayer transform; // retained client-side
};

// As ldpsgd_local_round, with gradients taken jointly over (transform, theta)
// and inputs passed through the transform before the model.
PrivateflRound privatefl_local_round(const ModelSpec& spec,
                                     const ParamVector& theta_g,
                                     const TransformLayer& transform,
                                     const Dataset& ds, const ProtocolConfig& cfg,
                                     bool malicious, bool apply_ldp, Rng& rng,
                                     LocalRoundDiag* diag = nullptr,
                                     const ClipObserver& observer = {});

// LDP-FL local training: per-sample SGD over the full dataset, `epochs`
// passes. Returns raw parameters; the caller applies data_perturbation or
// clip2val.
ParamVector ldpfl_local_round(const ModelSpec& spec, const ParamVector& theta_g,
                              const Dataset& ds, const ProtocolConfig& cfg,
                              bool malicious);

// Randomized two-point mapping: each coordinate goes to c + r*K with
// probability p(w) and to c - r*K otherwise; E[output] = w for in-range w.
// Out-of-range coordinates are clamped to [c-r, c+r] first.
ParamVector data_perturbation(const ParamVector& theta, const LayerRanges& ranges,
                              double epsilon, Rng& rng);

// Deterministic bypass mapping: w > c -> c + r*K, else c - r*K.
ParamVector clip2val(const ParamVector& theta, const LayerRanges& ranges,
                     double epsilon);

}  // namespace ldpfl
