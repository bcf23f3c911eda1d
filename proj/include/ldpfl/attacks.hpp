#pragma once

#include <vector>

#include "ldpfl/aggregation.hpp"
#include "ldpfl/ldp.hpp"

namespace ldpfl {

enum class AttackKind { rpa, llra, tmma, adapa };
enum class AttackMode { input, output };
enum class Knowledge { local, partial, global };

struct AttackPlan {
    AttackKind kind = AttackKind::llra;
    AttackMode mode = AttackMode::input;  // llra/tmma
    Knowledge knowledge = Knowledge::local;
    int ate = 1;          // adversarial training epochs
    double scal = 1.0;    // zoom factor for defense fitting / dimension merge
    double t_scale = 1.0; // RPA norm scale factor t
    int n_malicious = 1;
    int n_total = 2;
    // TMMA only: estimate benign behavior from eavesdropped uploads instead
    // of the attacker's own local training. Requires global knowledge.
    bool use_eavesdropped_estimate = false;

    void validate() const;
};

// What the attacker sees of the benign side. benign_uploads is populated only
// at global knowledge.
struct EavesdropView {
    std::vector<ParamVector> benign_uploads;
    int n_total = 0;
    int n_malicious = 0;
};

// Random poisoning baseline. ldpsgd/privatefl: Gaussian direction rescaled to
// norm t*C*ATE, uploaded as theta_g - eta*g. ldpfl: uniformly random
// two-point vector (ranges required).
ParamVector rpa_update(const ParamVector& theta_g, const ProtocolConfig& cfg,
                       const AttackPlan& plan, const LayerRanges* ranges,
                       Rng& rng);

// Loss-reversal attack: the protocol's local round with inverted loss for ATE
// epochs. mode=input keeps the LDP perturbation; mode=output bypasses it
// (clip2val for ldpfl). `transform` is the attacker's PrivateFL preprocessing
// layer, updated in place; required for privatefl, ignored otherwise.
ParamVector llra_update(const ModelSpec& spec, const ParamVector& theta_g,
                        const Dataset& ds, const ProtocolConfig& cfg,
                        const AttackPlan& plan, const LayerRanges* ranges,
                        TransformLayer* transform, Rng& rng);

// Targeted manipulation: upload (N*theta_target - (N-n)*theta_est) / n so the
// plain average lands on theta_target. theta_est comes from one benign-style
// round on the attacker's data (or the eavesdropped mean when the plan says
// so and `view` carries uploads).
ParamVector tmma_update(const ModelSpec& spec, const ParamVector& theta_g,
                        const Dataset& ds, const ProtocolConfig& cfg,
                        const AttackPlan& plan, const LayerRanges* ranges,
                        TransformLayer* transform, const EavesdropView* view,
                        Rng& rng);

// Starting point for adaptive adversarial training: geometric median of
// benign uploads under Multi-Krum, their mean under trimmed mean, the global
// model otherwise and for ldpfl.
ParamVector adapa_init(const ParamVector& theta_g, const EavesdropView& view,
                       const AggregationConfig& agg, Protocol protocol);

// Projects an adversarial iterate into the defense's acceptance region:
// Multi-Krum: clip the offset from the benign geometric median to
//   scal * (min benign distance to the median).
// Trimmed mean: per-coordinate clamp into the benign survivor range
//   [(beta+1)-th smallest, (N-n-beta)-th smallest].
// Otherwise identity.
ParamVector fit_on_def(const ParamVector& theta_adv, const EavesdropView& view,
                       const AggregationConfig& agg, double scal,
                       Protocol protocol);

// Per-coordinate majority vote over two-point uploads; ties take the low
// value.
ParamVector restricted_median(const std::vector<ParamVector>& uploads,
                              const LayerRanges& ranges, double epsilon);

// Starts from theta_res and copies floor(scal * max_diff) coordinates of
// theta_adv into it, chosen seeded-uniformly among differing coordinates;
// max_diff is the minimum Hamming distance from any upload to theta_res.
ParamVector ldpfl_dimension_merge(const ParamVector& theta_adv_2pt,
                                  const ParamVector& theta_res,
                                  const std::vector<ParamVector>& uploads,
                                  double scal, Rng& rng);

// Full adaptive attack: Init, then ATE rounds of reverse-gradient ascent each
// followed by FitOnDef; for ldpfl, Clip2Val plus the restricted-median
// dimension merge at the end.
ParamVector adapa_generate(const ModelSpec& spec, const ParamVector& theta_g,
                           const EavesdropView& view, const Dataset& ds,
                           const ProtocolConfig& cfg, const AttackPlan& plan,
                           const AggregationConfig& agg,
                           const LayerRanges* ranges, Rng& rng);

}  // namespace ldpfl
