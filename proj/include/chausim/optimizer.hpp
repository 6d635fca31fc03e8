#pragma once

#include <functional>
#include <vector>

#include "chausim/devices.hpp"
#include "chausim/protocol.hpp"
#include "chausim/rng.hpp"
#include "chausim/security.hpp"

namespace chausim::opt {

// Downhill-simplex maximizer (derivative-free). Objective is maximized.
struct SimplexOptions {
    int max_iterations = 4000;
    double tolerance = 1e-10;  // simplex value spread at convergence
    double initial_step = 0.15;
};

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                          std::vector<double> start, const SimplexOptions& options = {});

// Source parameters under optimization: intensities and class probabilities
// (the vacuum-ish decoy probability is the simplex remainder).
struct SourcePoint {
    double mu = 0.6;
    double nu1 = 0.08;
    double nu2 = 0.002;
    double p_mu = 0.95;
    double p_nu1 = 0.03;

    double p_nu2() const { return 1.0 - p_mu - p_nu1; }
};

struct OptimizationSpec {
    std::vector<double> lengths_km;
    protocol::ProtocolParams base_params;  // intensities replaced per evaluation
    devices::DeviceChain base_devices;     // channel length replaced per sweep point
    security::KeyRateOptions keyrate;

    double mu_max = 1.0;
    double nu2_min = 1e-4;  // floor keeping the decoy estimators conditioned
    bool allow_vacuum_decoy = false;
    bool optimize_probabilities = true;
    int multistarts = 6;
    std::uint64_t seed = 1;
    SimplexOptions simplex;

    void validate() const;
};

struct StartTrace {
    SourcePoint start;
    SourcePoint end;
    double value = 0.0;
    int evaluations = 0;
};

struct LengthResult {
    double length_km = 0.0;
    SourcePoint best;
    double rate = 0.0;       // clamped at 0
    double rate_raw = 0.0;
    bool feasible = false;   // true when some start produced a positive rate
    std::vector<StartTrace> trace;
};

struct OptimizeResult {
    std::vector<LengthResult> per_length;  // ascending in length
    bool any_key = false;
};

// Analytic per-packet key rate for one candidate point; the optimizer's
// objective. Returns the raw (possibly negative) rate.
double evaluate_rate(const OptimizationSpec& spec, double length_km, const SourcePoint& point);

// Multi-start simplex over (mu, nu1, nu2, p_mu, p_nu1), swept longest length
// first with warm starts so the reported curve is nonincreasing in length.
OptimizeResult optimize(const OptimizationSpec& spec);

}  // namespace chausim::opt
