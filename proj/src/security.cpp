#include "chausim/security.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "chausim/errors.hpp"
#include "chausim/protocol.hpp"

namespace chausim::security {

using qmath::clip;
using qmath::h2;

double iae_bound(double Q, double Q_prime) {
    if (!(Q > 0.0)) throw std::domain_error("iae_bound undefined for Q <= 0");
    if (!(Q_prime >= 0.0)) throw std::domain_error("iae_bound requires Q' >= 0");
    return h2(clip(Q_prime / (2.0 * Q), 0.0, 0.5));
}

double keyrate_sifted(double E, double iae_bits, double f_ec) {
    if (!(E >= 0.0 && E <= 1.0)) throw std::domain_error("error rate outside [0,1]");
    if (!(f_ec >= 1.0)) throw std::domain_error("error-correction factor must be >= 1");
    return 1.0 - f_ec * h2(E) - iae_bits;
}

double rrdps_keyrate(double e_bit, int L) {
    if (L < 3) throw std::domain_error("rrdps rate requires L >= 3");
    return 1.0 - h2(e_bit) - h2(1.0 / (L - 1));
}

void DecoyInputs::validate() const {
    const double mu = signal.intensity, nu1 = decoy1.intensity, nu2 = decoy2.intensity;
    if (!(mu > nu1 && nu1 > nu2 && nu2 >= 0.0))
        throw std::invalid_argument("decoy intensities must satisfy mu > nu1 > nu2 >= 0");
    if (!(nu1 + nu2 < mu))
        throw std::invalid_argument("two-decoy validity requires nu1 + nu2 < mu");
    for (const IntensityPoint* p : {&signal, &decoy1, &decoy2}) {
        if (!(p->Q >= 0.0 && p->Q <= 1.0) || !(p->Q_prime >= 0.0 && p->Q_prime <= 1.0))
            throw std::invalid_argument("gains must lie in [0,1]");
        if (p->E && !(*p->E >= 0.0 && *p->E <= 1.0))
            throw std::invalid_argument("error rates must lie in [0,1]");
    }
    if (!signal.E) throw std::invalid_argument("signal error rate E_mu is required");
}

DecoyEstimate decoy_bounds(const DecoyInputs& in) {
    in.validate();
    const double mu = in.signal.intensity, nu1 = in.decoy1.intensity, nu2 = in.decoy2.intensity;
    const double g_mu = in.signal.Q * std::exp(mu);
    const double g1 = in.decoy1.Q * std::exp(nu1);
    const double g2 = in.decoy2.Q * std::exp(nu2);

    DecoyEstimate est;

    // vacuum yield: nu1*g2 - nu2*g1 <= (nu1-nu2) Y0
    est.Y0_lower = std::max((nu1 * g2 - nu2 * g1) / (nu1 - nu2), 0.0);
    if (est.Y0_lower > 1.0)
        throw InfeasibleStatistics("decoy gains imply a vacuum yield above 1");

    // single-photon yield
    double y1 = mu / ((nu1 - nu2) * (mu - nu1 - nu2)) *
                (g1 - g2 - (nu1 * nu1 - nu2 * nu2) / (mu * mu) * (g_mu - est.Y0_lower));
    if (y1 > 1.0 + 1e-12)
        throw InfeasibleStatistics("decoy gains imply a single-photon yield above 1");
    est.Y1_lower = clip(y1, 0.0, 1.0);
    est.Q1_lower = mu * std::exp(-mu) * est.Y1_lower;

    // disjoint single-photon yield, upper: (nu1-nu2) Y1' <= g1' - g2'
    const double gp1 = in.decoy1.Q_prime * std::exp(nu1);
    const double gp2 = in.decoy2.Q_prime * std::exp(nu2);
    double y1p = (gp1 - gp2) / (nu1 - nu2);
    if (y1p < -1e-12)
        throw InfeasibleStatistics(
            "disjoint gains decrease with intensity; not Poisson-consistent");
    // a single intensity also bounds it: nu1 Y1' <= g1'
    y1p = std::min(y1p, gp1 / nu1);
    est.Y1p_upper = clip(y1p, 0.0, 1.0);

    // single-photon error upper bound, best available candidate
    if (est.Y1_lower > 0.0) {
        double best = 1.0;
        const double e0_y0 = 0.5 * est.Y0_lower;  // vacuum events error half the time
        if (in.signal.E)
            best = std::min(best, (*in.signal.E * g_mu - e0_y0) / (mu * est.Y1_lower));
        if (in.decoy1.E) {
            best = std::min(best, (*in.decoy1.E * g1 - e0_y0) / (nu1 * est.Y1_lower));
            if (in.decoy2.E)
                best = std::min(best, (*in.decoy1.E * g1 - *in.decoy2.E * g2) /
                                          ((nu1 - nu2) * est.Y1_lower));
        }
        if (best < -1e-12)
            throw InfeasibleStatistics("error statistics below the vacuum floor");
        est.e1_upper = clip(best, 0.0, 1.0);
    }
    return est;
}

KeyRateResult keyrate_packet(const DecoyInputs& in, const DecoyEstimate& est, int L,
                             const KeyRateOptions& opt) {
    in.validate();
    if (L < 4) throw std::domain_error("L must be >= 4");
    if (!(opt.f_ec >= 1.0)) throw std::domain_error("f_ec must be >= 1");

    KeyRateResult out;
    out.decoy = est;
    out.f_ec = opt.f_ec;
    out.sift_factor = opt.convention == SiftConvention::conditional
                          ? 1.0 / static_cast<double>(protocol::pair_count(L))
                          : 1.0;

    // information bound at the single-photon level: Q1'/(2 Q1) = Y1'/(2 Y1)
    out.iae_single_photon =
        est.Y1_lower > 0.0 ? iae_bound(est.Y1_lower, est.Y1p_upper) : h2(0.5);
    out.iae_signal = in.signal.Q > 0.0 ? iae_bound(in.signal.Q, in.signal.Q_prime) : 0.0;
    out.ec_term = opt.f_ec * in.signal.Q * h2(*in.signal.E);
    out.single_photon_gain = est.Q1_lower;
    out.single_photon_fraction = in.signal.Q > 0.0 ? est.Q1_lower / in.signal.Q : 0.0;

    const double bracket = est.Q1_lower * (1.0 - out.iae_single_photon) - out.ec_term;
    out.R_packet_raw = in.signal.probability * out.sift_factor * bracket;
    out.R_packet = std::max(out.R_packet_raw, 0.0);

    out.R_sifted_raw = keyrate_sifted(*in.signal.E, out.iae_signal, opt.f_ec);
    out.R_sifted = std::max(out.R_sifted_raw, 0.0);
    return out;
}

}  // namespace chausim::security
