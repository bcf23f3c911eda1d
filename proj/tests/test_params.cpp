#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ldpfl/params.hpp"
#include "ldpfl/rng.hpp"

using namespace ldpfl;

namespace {

ParamVector pv(std::vector<double> v) {
    return ParamVector(std::move(v), {{"w", 0, 2}});
}

ParamVector random_pv(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal();
    return ParamVector(std::move(v), {{"w", 0, dim}});
}

}  // namespace

TEST_CASE("shape table must be contiguous and cover the storage") {
    CHECK_THROWS_AS(ParamVector({1.0, 2.0}, {{"a", 0, 1}}), shape_error);
    CHECK_THROWS_AS(ParamVector({1.0, 2.0}, {{"a", 1, 1}}), shape_error);
    CHECK_NOTHROW(ParamVector({1.0, 2.0}, {{"a", 0, 1}, {"b", 1, 1}}));
}

TEST_CASE("clip_norm keeps in-bound vectors bit-identical") {
    const auto v = pv({3.0, 4.0});
    const auto clipped = clip_norm(v, 5.0);  // norm exactly 5
    CHECK(clipped.values() == v.values());
}

TEST_CASE("clip_norm rescales to the bound") {
    const auto clipped = clip_norm(pv({3.0, 4.0}), 1.0);
    CHECK(clipped.values()[0] == doctest::Approx(0.6));
    CHECK(clipped.values()[1] == doctest::Approx(0.8));
    CHECK(l2_norm(clipped) == doctest::Approx(1.0));
}

TEST_CASE("l2_norm of zero vector is zero") {
    CHECK(l2_norm(pv({0.0, 0.0})) == 0.0);
}

TEST_CASE("clip_norm is idempotent to rounding") {
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        const auto v = random_pv(rng, 16);
        const double c = 0.1 + rng.uniform() * 3.0;
        const auto once = clip_norm(v, c);
        const auto twice = clip_norm(once, c);
        CHECK(l2_norm(once) <= c * (1.0 + 1e-12));
        for (std::size_t j = 0; j < once.dim(); ++j) {
            CHECK(twice.values()[j] ==
                  doctest::Approx(once.values()[j]).epsilon(1e-14));
        }
    }
}

TEST_CASE("mean of simple vectors") {
    const auto m = mean({pv({0.0, 0.0}), pv({2.0, 4.0})});
    CHECK(m.values()[0] == 1.0);
    CHECK(m.values()[1] == 2.0);
}

TEST_CASE("mean of a single vector is the identity") {
    const auto v = pv({1.5, -2.5});
    CHECK(mean({v}).values() == v.values());
}

TEST_CASE("mean matches a naive per-coordinate oracle") {
    Rng rng(11);
    std::vector<ParamVector> vs;
    for (int i = 0; i < 4; ++i) {
        std::vector<double> v(3);
        for (auto& x : v) x = rng.normal();
        vs.emplace_back(std::move(v), std::vector<LayerShape>{{"w", 0, 3}});
    }
    const auto m = mean(vs);
    for (std::size_t j = 0; j < 3; ++j) {
        double sum = 0.0;
        for (const auto& v : vs) sum += v.values()[j];
        CHECK(m.values()[j] == doctest::Approx(sum / 4.0).epsilon(1e-15));
    }
}

TEST_CASE("mean rejects the empty list") {
    CHECK_THROWS_AS(mean({}), usage_error);
}

TEST_CASE("binary ops reject mismatched shapes") {
    const ParamVector a({1.0, 2.0}, {{"a", 0, 2}});
    const ParamVector b({1.0, 2.0}, {{"b", 0, 2}});
    CHECK_THROWS_AS(add(a, b), shape_error);
}

TEST_CASE("non-finite inputs raise numeric errors") {
    const auto inf = pv({std::numeric_limits<double>::infinity(), 0.0});
    CHECK_THROWS_AS(add(inf, pv({0.0, 0.0})), numeric_error);
    CHECK_THROWS_AS(clip_norm(inf, 1.0), numeric_error);
}

TEST_CASE("linearity of scale over add") {
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const auto a = random_pv(rng, 8);
        const auto b = random_pv(rng, 8);
        const double s = rng.normal();
        const auto lhs = scale(add(a, b), s);
        const auto rhs = add(scale(a, s), scale(b, s));
        for (std::size_t j = 0; j < 8; ++j) {
            CHECK(lhs.values()[j] ==
                  doctest::Approx(rhs.values()[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("serialization round-trips exactly") {
    Rng rng(5);
    std::vector<double> v(10);
    for (auto& x : v) x = rng.normal();
    const ParamVector original(std::move(v), {{"weight", 0, 6}, {"bias", 6, 4}});
    std::stringstream buf;
    serialize(original, buf);
    const auto restored = deserialize(buf);
    CHECK(restored == original);
}

TEST_CASE("deserialize rejects bad magic and truncation") {
    std::stringstream bad("XXXXgarbage");
    CHECK_THROWS_AS(deserialize(bad), ingest_error);

    std::stringstream buf;
    serialize(pv({1.0, 2.0}), buf);
    std::string bytes = buf.str();
    bytes.resize(bytes.size() - 4);
    std::stringstream truncated(bytes);
    CHECK_THROWS_AS(deserialize(truncated), ingest_error);
}
