#include "chausim/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "chausim/analytic.hpp"
#include "chausim/errors.hpp"

namespace chausim::opt {

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                          std::vector<double> start, const SimplexOptions& opt) {
    const std::size_t n = start.size();
    if (n == 0) throw std::invalid_argument("empty start point");

    int evaluations = 0;
    auto f = [&](const std::vector<double>& x) {
        ++evaluations;
        return -objective(x);  // minimize internally
    };

    std::vector<std::vector<double>> simplex(n + 1, start);
    for (std::size_t i = 0; i < n; ++i) {
        double step = start[i] != 0.0 ? opt.initial_step * std::abs(start[i]) : opt.initial_step * 0.1;
        simplex[i + 1][i] += step;
    }
    std::vector<double> value(n + 1);
    for (std::size_t i = 0; i <= n; ++i) value[i] = f(simplex[i]);

    constexpr double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    std::vector<std::size_t> order(n + 1);

    SimplexResult result;
    int iter = 0;
    for (; iter < opt.max_iterations; ++iter) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return value[a] < value[b]; });
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];

        if (std::abs(value[worst] - value[best]) <=
            opt.tolerance * (1.0 + std::abs(value[best]))) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d] / n;
        }

        auto blend = [&](double coef) {
            std::vector<double> x(n);
            for (std::size_t d = 0; d < n; ++d)
                x[d] = centroid[d] + coef * (centroid[d] - simplex[worst][d]);
            return x;
        };

        auto reflected = blend(alpha);
        double fr = f(reflected);
        if (fr < value[best]) {
            auto expanded = blend(gamma);
            double fe = f(expanded);
            if (fe < fr) {
                simplex[worst] = std::move(expanded);
                value[worst] = fe;
            } else {
                simplex[worst] = std::move(reflected);
                value[worst] = fr;
            }
        } else if (fr < value[second]) {
            simplex[worst] = std::move(reflected);
            value[worst] = fr;
        } else {
            auto contracted = blend(fr < value[worst] ? rho : -rho);
            double fc = f(contracted);
            if (fc < std::min(fr, value[worst])) {
                simplex[worst] = std::move(contracted);
                value[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t d = 0; d < n; ++d)
                        simplex[i][d] = simplex[best][d] + sigma * (simplex[i][d] - simplex[best][d]);
                    value[i] = f(simplex[i]);
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (value[i] < value[best]) best = i;
    result.x = simplex[best];
    result.value = -value[best];
    result.iterations = iter;
    result.evaluations = evaluations;
    return result;
}

void OptimizationSpec::validate() const {
    if (lengths_km.empty()) throw std::invalid_argument("no sweep lengths given");
    for (double l : lengths_km)
        if (!(l >= 0.0)) throw std::invalid_argument("lengths must be >= 0");
    if (!(mu_max > 0.0 && mu_max <= 2.0)) throw std::invalid_argument("mu_max out of range");
    double floor = allow_vacuum_decoy ? 0.0 : nu2_min;
    if (!(floor >= 0.0 && floor < mu_max)) throw std::invalid_argument("nu2 floor out of range");
    if (multistarts < 1) throw std::invalid_argument("multistarts must be >= 1");
    base_devices.validate();
}

namespace {

constexpr double kProbFloor = 1e-3;

double violation(const OptimizationSpec& spec, const SourcePoint& p) {
    const double nu2_floor = spec.allow_vacuum_decoy ? 0.0 : spec.nu2_min;
    double v = 0.0;
    auto need = [&](double cond) {
        if (cond < 0.0) v -= cond;
    };
    need(spec.mu_max - p.mu);
    need(p.mu - p.nu1 - 1e-9);
    need(p.nu1 - p.nu2 - 1e-9);
    need(p.nu2 - nu2_floor);
    need(p.mu - (p.nu1 + p.nu2) - 1e-9);  // two-decoy validity
    need(p.p_mu - kProbFloor);
    need(p.p_nu1 - kProbFloor);
    need(p.p_nu2() - kProbFloor);
    return v;
}

SourcePoint from_vector(const OptimizationSpec& spec, const std::vector<double>& x) {
    SourcePoint p;
    p.mu = x[0];
    p.nu1 = x[1];
    p.nu2 = x[2];
    if (spec.optimize_probabilities && x.size() >= 5) {
        p.p_mu = x[3];
        p.p_nu1 = x[4];
    }
    return p;
}

std::vector<double> to_vector(const OptimizationSpec& spec, const SourcePoint& p) {
    if (spec.optimize_probabilities) return {p.mu, p.nu1, p.nu2, p.p_mu, p.p_nu1};
    return {p.mu, p.nu1, p.nu2};
}

}  // namespace

double evaluate_rate(const OptimizationSpec& spec, double length_km, const SourcePoint& point) {
    protocol::ProtocolParams params = spec.base_params;
    params.intensities = {{"mu", point.mu, point.p_mu},
                          {"nu1", point.nu1, point.p_nu1},
                          {"nu2", point.nu2, point.p_nu2()}};
    params.validate_and_normalize();
    devices::DeviceChain dev = spec.base_devices;
    dev.channel.length_km = length_km;

    auto stats = analytic::expected_stats(params, dev);
    security::DecoyInputs in;
    auto fill = [&](security::IntensityPoint& ip, int idx) {
        const auto& ie = stats.per_intensity[static_cast<std::size_t>(idx)];
        ip.label = ie.label;
        ip.intensity = ie.mean_photons;
        ip.probability = params.intensities[static_cast<std::size_t>(idx)].probability;
        ip.Q = ie.Q;
        ip.Q_prime = ie.Q_prime;
        ip.E = ie.E;
    };
    fill(in.signal, 0);
    fill(in.decoy1, 1);
    fill(in.decoy2, 2);

    auto est = security::decoy_bounds(in);
    auto kr = security::keyrate_packet(in, est, params.L, spec.keyrate);
    return kr.R_packet_raw;
}

OptimizeResult optimize(const OptimizationSpec& spec) {
    spec.validate();

    CounterRng rng(spec.seed, 0x0a71);
    auto random_start = [&] {
        SourcePoint p;
        const double floor = spec.allow_vacuum_decoy ? 0.0 : spec.nu2_min;
        p.mu = std::min(0.2 + 0.7 * rng.next_unit(), spec.mu_max * 0.98);
        p.nu1 = p.mu * (0.05 + 0.3 * rng.next_unit());
        p.nu2 = floor + (p.nu1 - floor) * 0.05 * rng.next_unit();
        p.p_mu = 0.4 + 0.55 * rng.next_unit();
        p.p_nu1 = (1.0 - p.p_mu) * (0.3 + 0.4 * rng.next_unit());
        return p;
    };

    // longest first: each length is warm-started from the previous optimum,
    // which keeps the reported curve monotone even if one search stalls
    std::vector<double> lengths = spec.lengths_km;
    std::sort(lengths.begin(), lengths.end(), std::greater<>());

    OptimizeResult out;
    std::vector<SourcePoint> warm;
    for (double length : lengths) {
        std::vector<SourcePoint> starts;
        starts.push_back(SourcePoint{});  // canonical start
        for (const auto& w : warm) starts.push_back(w);
        while (static_cast<int>(starts.size()) < spec.multistarts) starts.push_back(random_start());

        // best feasible point actually evaluated, whatever the simplex does
        bool seen = false;
        SourcePoint best_point;
        double best_value = -1e30;
        auto objective = [&](const std::vector<double>& x) {
            SourcePoint p = from_vector(spec, x);
            double v = violation(spec, p);
            if (v > 0.0) return -1e3 * (1.0 + v);  // steer back into the box
            double rate;
            try {
                rate = evaluate_rate(spec, length, p);
            } catch (const InfeasibleStatistics&) {
                return -1e3;
            } catch (const std::invalid_argument&) {
                return -1e3;
            }
            if (!seen || rate > best_value) {
                seen = true;
                best_value = rate;
                best_point = p;
            }
            return rate;
        };

        LengthResult lr;
        lr.length_km = length;
        for (const auto& s : starts) {
            auto res = nelder_mead(objective, to_vector(spec, s), spec.simplex);
            lr.trace.push_back({s, from_vector(spec, res.x), res.value, res.evaluations});
        }
        if (!seen) throw std::runtime_error("optimizer never reached a feasible point");
        lr.best = best_point;
        lr.rate_raw = best_value;
        lr.feasible = best_value > 0.0;
        lr.rate = std::max(best_value, 0.0);
        out.any_key = out.any_key || lr.feasible;
        out.per_length.push_back(lr);
        warm = {best_point};
    }

    std::sort(out.per_length.begin(), out.per_length.end(),
              [](const auto& a, const auto& b) { return a.length_km < b.length_km; });
    return out;
}

}  // namespace chausim::opt
