#include <doctest.h>

#include <cmath>

#include "ldpfl/ldp.hpp"

using namespace ldpfl;

namespace {

Dataset two_class_data(int n_per_class) {
    Dataset ds;
    ds.input_dim = 2;
    ds.num_classes = 2;
    Rng rng(404);
    for (int k = 0; k < 2; ++k) {
        const double cx = k == 0 ? -2.0 : 2.0;
        for (int i = 0; i < n_per_class; ++i) {
            ds.inputs.push_back(cx + rng.normal() * 0.3);
            ds.inputs.push_back(rng.normal() * 0.3);
            ds.labels.push_back(k);
        }
    }
    return ds;
}

const ModelSpec kSpec{ModelKind::logistic_regression, 2, 0, 2};

}  // namespace

TEST_CASE("two_point_gap matches the closed form") {
    const double eps = 1.0;
    const double k = two_point_gap(eps);
    CHECK(k == doctest::Approx((std::exp(eps) + 1.0) / (std::exp(eps) - 1.0)));
    // Large budgets shrink the gap toward 1.
    CHECK(two_point_gap(10.0) < two_point_gap(1.0));
    CHECK(two_point_gap(10.0) > 1.0);
}

TEST_CASE("high_value_probability hits the analytic boundary values") {
    const double eps = 1.0;
    const double e = std::exp(eps);
    // w = c: p = 1/2 regardless of eps.
    CHECK(high_value_probability(0.0, 0.0, 1.0, eps) == doctest::Approx(0.5));
    // w = c + r: p = e / (e + 1).
    CHECK(high_value_probability(1.0, 0.0, 1.0, eps) ==
          doctest::Approx(e / (e + 1.0)));
    // w = c - r: p = 1 / (e + 1).
    CHECK(high_value_probability(-1.0, 0.0, 1.0, eps) ==
          doctest::Approx(1.0 / (e + 1.0)));
}

TEST_CASE("data_perturbation outputs exactly the two point values") {
    const ParamVector theta(std::vector<double>(100, 0.3), {{"w", 0, 100}});
    const LayerRanges ranges{{0.0, 1.0}};
    const double eps = 1.0;
    const double k = two_point_gap(eps);
    Rng rng(5);
    const auto out = data_perturbation(theta, ranges, eps, rng);
    for (double v : out.values()) {
        const bool high = std::abs(v - k) < 1e-12;
        const bool low = std::abs(v + k) < 1e-12;
        CHECK((high || low));
    }
}

TEST_CASE("data_perturbation is unbiased for in-range weights") {
    const double w = 0.4;
    const double eps = 1.0;
    const ParamVector theta(std::vector<double>(20000, w), {{"w", 0, 20000}});
    const LayerRanges ranges{{0.0, 1.0}};
    Rng rng(99);
    const auto out = data_perturbation(theta, ranges, eps, rng);
    double sum = 0.0;
    for (double v : out.values()) sum += v;
    const double mean = sum / 20000.0;
    // std of a single draw is about k; 20000 draws give se ~ 0.015.
    CHECK(std::abs(mean - w) < 0.05);
}

TEST_CASE("clip2val maps by sign of the offset from the center") {
    const ParamVector theta({0.7, -0.7, 0.0}, {{"w", 0, 3}});
    const LayerRanges ranges{{0.0, 1.0}};
    const double eps = 1.0;
    const double k = two_point_gap(eps);
    const auto out = clip2val(theta, ranges, eps);
    CHECK(out.values()[0] == doctest::Approx(k));
    CHECK(out.values()[1] == doctest::Approx(-k));
    CHECK(out.values()[2] == doctest::Approx(-k));  // w == c goes low
}

TEST_CASE("layer_ranges derives midpoint and floored half-width per layer") {
    const ParamVector theta({-1.0, 3.0, 0.5, 0.5}, {{"a", 0, 2}, {"b", 2, 2}});
    const auto ranges = layer_ranges(theta);
    REQUIRE(ranges.size() == 2);
    CHECK(ranges[0].center == doctest::Approx(1.0));
    CHECK(ranges[0].half_width == doctest::Approx(2.0));
    CHECK(ranges[1].center == doctest::Approx(0.5));
    CHECK(ranges[1].half_width == doctest::Approx(1e-3));  // degenerate layer
}

TEST_CASE("ldpsgd round with sigma=0 P=1 matches plain clipped SGD") {
    const auto ds = two_class_data(10);
    const auto theta = init_params(kSpec, 1);
    ProtocolConfig cfg;
    cfg.eta = 0.1;
    cfg.epochs = 1;
    cfg.sample_prob = 1.0;
    cfg.clip_c = 100.0;  // never binds on this data
    cfg.sigma = 0.0;
    Rng rng(2);
    const auto out = ldpsgd_local_round(kSpec, theta, ds, cfg, false, true, rng);

    const auto g = grad(kSpec, theta, ds.as_batch());
    const auto expected = sub(theta, scale(g, cfg.eta));
    for (std::size_t j = 0; j < out.dim(); ++j)
        CHECK(out.values()[j] == doctest::Approx(expected.values()[j]).epsilon(1e-12));
}

TEST_CASE("apply_ldp=false is bitwise identical to sigma=0 P=1 with slack clip") {
    const auto ds = two_class_data(8);
    const auto theta = init_params(kSpec, 3);
    ProtocolConfig cfg;
    cfg.eta = 0.05;
    cfg.epochs = 2;
    cfg.sample_prob = 1.0;
    cfg.clip_c = 1e6;
    cfg.sigma = 0.0;
    Rng rng_a(7), rng_b(7);
    const auto with_ldp =
        ldpsgd_local_round(kSpec, theta, ds, cfg, false, true, rng_a);
    const auto without =
        ldpsgd_local_round(kSpec, theta, ds, cfg, false, false, rng_b);
    CHECK(with_ldp.values() == without.values());
}

TEST_CASE("per-sample clipping is observable and bounded") {
    const auto ds = two_class_data(10);
    // Inflate parameters so per-sample gradients exceed the bound.
    auto theta = scale(init_params(kSpec, 4), 50.0);
    ProtocolConfig cfg;
    cfg.sample_prob = 1.0;
    cfg.clip_c = 0.01;
    cfg.sigma = 0.0;
    Rng rng(8);
    int observed = 0;
    ldpsgd_local_round(kSpec, theta, ds, cfg, false, true, rng, nullptr,
                       [&](double norm) {
                           CHECK(norm <= cfg.clip_c + 1e-12);
                           ++observed;
                       });
    CHECK(observed == 20);
}

TEST_CASE("malicious flag reverses the training direction") {
    const auto ds = two_class_data(10);
    const auto theta = init_params(kSpec, 5);
    ProtocolConfig cfg;
    cfg.sample_prob = 1.0;
    cfg.clip_c = 1e6;
    cfg.sigma = 0.0;
    Rng rng_a(6), rng_b(6);
    const auto benign =
        ldpsgd_local_round(kSpec, theta, ds, cfg, false, true, rng_a);
    const auto evil =
        ldpsgd_local_round(kSpec, theta, ds, cfg, true, true, rng_b);
    // Steps are exact mirrors around theta.
    for (std::size_t j = 0; j < theta.dim(); ++j) {
        const double d_benign = benign.values()[j] - theta.values()[j];
        const double d_evil = evil.values()[j] - theta.values()[j];
        CHECK(d_evil == doctest::Approx(-d_benign).epsilon(1e-12));
    }
}

TEST_CASE("empty Poisson batches are skipped and counted") {
    const auto ds = two_class_data(1);
    const auto theta = init_params(kSpec, 9);
    ProtocolConfig cfg;
    cfg.epochs = 50;
    cfg.sample_prob = 1e-9;  // batches will be empty
    cfg.clip_c = 1.0;
    cfg.sigma = 0.0;
    Rng rng(10);
    LocalRoundDiag diag;
    const auto out =
        ldpsgd_local_round(kSpec, theta, ds, cfg, false, true, rng, &diag);
    CHECK(diag.skipped_batches == 50);
    CHECK(out.values() == theta.values());
}

TEST_CASE("privatefl trains the transform but uploads only theta") {
    const auto ds = two_class_data(10);
    const auto theta = init_params(kSpec, 11);
    const auto transform = TransformLayer::identity(2);
    ProtocolConfig cfg;
    cfg.protocol = Protocol::privatefl;
    cfg.sample_prob = 1.0;
    cfg.clip_c = 1e6;
    cfg.sigma = 0.0;
    Rng rng(12);
    const auto round = privatefl_local_round(kSpec, theta, transform, ds, cfg,
                                             false, true, rng);
    CHECK(round.theta.dim() == theta.dim());
    CHECK(round.theta.values() != theta.values());
    // The transform moved away from identity.
    bool moved = false;
    for (std::size_t j = 0; j < round.transform.scale.size(); ++j) {
        if (round.transform.scale[j] != 1.0 || round.transform.shift[j] != 0.0)
            moved = true;
    }
    CHECK(moved);
}

TEST_CASE("privatefl with identity transform matches ldpsgd at sigma=0") {
    const auto ds = two_class_data(10);
    const auto theta = init_params(kSpec, 13);
    ProtocolConfig cfg;
    cfg.sample_prob = 1.0;
    cfg.clip_c = 1e6;
    cfg.sigma = 0.0;
    cfg.epochs = 1;
    Rng rng_a(14), rng_b(14);
    const auto sgd = ldpsgd_local_round(kSpec, theta, ds, cfg, false, false, rng_a);
    cfg.protocol = Protocol::privatefl;
    const auto pfl = privatefl_local_round(kSpec, theta, TransformLayer::identity(2),
                                           ds, cfg, false, false, rng_b);
    // Same model gradient; joint clipping is off (apply_ldp=false), so the
    // theta block must coincide to rounding.
    for (std::size_t j = 0; j < theta.dim(); ++j)
        CHECK(pfl.theta.values()[j] ==
              doctest::Approx(sgd.values()[j]).epsilon(1e-12));
}

TEST_CASE("ldpfl local round does one plain SGD pass per epoch") {
    Dataset ds;
    ds.input_dim = 2;
    ds.num_classes = 2;
    ds.inputs = {1.0, 0.0};
    ds.labels = {0};
    const auto theta = init_params(kSpec, 15);
    ProtocolConfig cfg;
    cfg.protocol = Protocol::ldpfl;
    cfg.eta = 0.1;
    cfg.epochs = 1;
    cfg.epsilon = 1.0;
    const auto out = ldpfl_local_round(kSpec, theta, ds, cfg, false);
    const auto g = grad(kSpec, theta, ds.as_batch());
    const auto expected = sub(theta, scale(g, cfg.eta));
    for (std::size_t j = 0; j < out.dim(); ++j)
        CHECK(out.values()[j] == doctest::Approx(expected.values()[j]).epsilon(1e-12));
}

TEST_CASE("protocol config validation") {
    ProtocolConfig cfg;
    cfg.eta = -1.0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg = {};
    cfg.sample_prob = 1.5;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg = {};
    cfg.protocol = Protocol::ldpfl;
    cfg.epsilon = 0.0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
}
