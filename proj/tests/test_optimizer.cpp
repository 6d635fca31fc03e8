#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chausim/config.hpp"
#include "chausim/optimizer.hpp"

using namespace chausim;
using namespace chausim::opt;

TEST_CASE("simplex search recovers a known analytic maximum") {
    // peak 3.5 at (0.3, -0.2, 1.1)
    auto objective = [](const std::vector<double>& x) {
        double a = x[0] - 0.3, b = x[1] + 0.2, c = x[2] - 1.1;
        return 3.5 - (a * a + 2.0 * b * b + 0.5 * c * c);
    };
    auto res = nelder_mead(objective, {0.0, 0.0, 0.0});
    CHECK(res.converged);
    CHECK(res.value == doctest::Approx(3.5).epsilon(1e-6));
    CHECK(std::abs(res.x[0] - 0.3) < 1e-4);
    CHECK(std::abs(res.x[1] + 0.2) < 1e-4);
    CHECK(std::abs(res.x[2] - 1.1) < 1e-4);
}

TEST_CASE("simplex handles a curved valley") {
    auto rosenbrock = [](const std::vector<double>& x) {
        double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        return -(a * a + 100.0 * b * b);
    };
    SimplexOptions opt;
    opt.max_iterations = 20000;
    auto res = nelder_mead(rosenbrock, {-1.2, 1.0}, opt);
    CHECK(res.value == doctest::Approx(0.0).epsilon(1e-8));
}

namespace {

OptimizationSpec spec_for(const std::string& preset, std::vector<double> lengths) {
    auto cfg = config::preset(preset);
    OptimizationSpec spec;
    spec.lengths_km = std::move(lengths);
    spec.base_params = cfg.params;
    spec.base_devices = cfg.devices;
    spec.keyrate.f_ec = 1.16;
    spec.keyrate.convention = security::SiftConvention::folded;
    spec.multistarts = 4;
    spec.seed = 11;
    return spec;
}

}  // namespace

TEST_CASE("optimized 50 km point beats the measured operating point") {
    auto spec = spec_for("fifty_km", {50.0});
    // the measured source settings as the baseline
    SourcePoint measured{0.66, 0.05, 0.0016, 0.9781, 0.0140};
    const double baseline = evaluate_rate(spec, 50.0, measured);
    CHECK(baseline > 0.0);

    auto result = optimize(spec);
    REQUIRE(result.per_length.size() == 1);
    const auto& lr = result.per_length[0];
    CHECK(lr.feasible);
    CHECK(lr.rate >= baseline - 1e-6);
    CHECK(lr.best.mu >= 0.3);
    CHECK(lr.best.mu <= 1.0);
}

TEST_CASE("optimizer output satisfies the decoy ordering constraints") {
    auto spec = spec_for("fifty_km", {100.0});
    auto result = optimize(spec);
    for (const auto& lr : result.per_length) {
        CHECK(lr.best.mu > lr.best.nu1);
        CHECK(lr.best.nu1 > lr.best.nu2);
        CHECK(lr.best.nu2 >= spec.nu2_min);
        CHECK(lr.best.nu1 + lr.best.nu2 < lr.best.mu);
        CHECK(lr.best.p_mu > 0.0);
        CHECK(lr.best.p_nu1 > 0.0);
        CHECK(lr.best.p_nu2() > 0.0);
        CHECK(lr.best.p_mu + lr.best.p_nu1 + lr.best.p_nu2() == doctest::Approx(1.0));
    }
}

TEST_CASE("no regression against the multistart initial points") {
    auto spec = spec_for("fifty_km", {80.0});
    auto result = optimize(spec);
    const auto& lr = result.per_length[0];
    for (const auto& tr : lr.trace) {
        double at_start;
        try {
            at_start = evaluate_rate(spec, 80.0, tr.start);
        } catch (const std::exception&) {
            continue;
        }
        CHECK(lr.rate_raw >= at_start - 1e-9);
    }
}

TEST_CASE("lossless channel without darks outrates 50 km") {
    auto spec = spec_for("fifty_km", {0.0, 50.0});
    spec.base_devices.detector.dark_per_gate = 0.0;
    auto result = optimize(spec);
    REQUIRE(result.per_length.size() == 2);
    CHECK(result.per_length[0].length_km == 0.0);
    CHECK(result.per_length[0].rate > result.per_length[1].rate);
}

TEST_CASE("optimized rate curve is nonincreasing in length") {
    auto spec = spec_for("fifty_km", {40.0, 80.0, 120.0, 160.0});
    auto result = optimize(spec);
    REQUIRE(result.per_length.size() == 4);
    for (std::size_t i = 1; i < result.per_length.size(); ++i)
        CHECK(result.per_length[i].rate <= result.per_length[i - 1].rate + 1e-12);
}

TEST_CASE("fixed-parameter rate curve is nonincreasing over a distance sweep") {
    // the computation behind `scan`: same source point, 0..160 km in 10 km
    // steps, 17 points
    auto spec = spec_for("fifty_km", {50.0});
    SourcePoint point{0.66, 0.05, 0.0016, 0.9781, 0.0140};
    double prev = 1e9;
    int points = 0;
    for (double len = 0.0; len <= 160.0 + 1e-9; len += 10.0) {
        double rate = std::max(evaluate_rate(spec, len, point), 0.0);
        CHECK(rate <= prev + 1e-15);
        prev = rate;
        ++points;
    }
    CHECK(points == 17);
}

TEST_CASE("infeasible specs are rejected") {
    auto spec = spec_for("fifty_km", {});
    CHECK_THROWS_AS(optimize(spec), std::invalid_argument);
    auto spec2 = spec_for("fifty_km", {50.0});
    spec2.mu_max = -1.0;
    CHECK_THROWS_AS(optimize(spec2), std::invalid_argument);
}
