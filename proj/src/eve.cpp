#include "chausim/eve.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "chausim/qmath.hpp"
#include "chausim/security.hpp"

namespace chausim::eve {

using protocol::SlotPair;

CollectiveAttack::CollectiveAttack(int L, Eigen::MatrixXd coeff, Eigen::MatrixXd ancilla_rows)
    : L_(L), c_(std::move(coeff)), anc_(std::move(ancilla_rows)) {
    if (L_ < 2) throw std::invalid_argument("attack needs L >= 2");
    if (c_.rows() != L_ || c_.cols() != L_ + 1)
        throw std::invalid_argument("coefficient matrix must be L x (L+1)");
    if (anc_.rows() != static_cast<Eigen::Index>(L_) * (L_ + 1))
        throw std::invalid_argument("ancilla row count must be L*(L+1)");
    validate();
}

void CollectiveAttack::validate() const {
    constexpr double tol = 1e-9;
    for (int i = 1; i <= L_; ++i) {
        double norm = 0.0;
        for (int t = 0; t <= L_; ++t) {
            double c = c_(i - 1, t);
            if (!(c >= 0.0)) throw std::invalid_argument("attack coefficients must be >= 0");
            norm += c * c;
            if (c > 0.0 && std::abs(ancilla(i, t).squaredNorm() - 1.0) > tol)
                throw std::invalid_argument("ancilla vectors must be unit norm");
        }
        if (std::abs(norm - 1.0) > tol)
            throw std::invalid_argument("attack rows must have unit square norm");
        // ancillas of one input slot are orthonormal
        for (int t = 0; t <= L_; ++t)
            for (int u = t + 1; u <= L_; ++u)
                if (c_(i - 1, t) > 0.0 && c_(i - 1, u) > 0.0 &&
                    std::abs(ancilla(i, t).dot(ancilla(i, u))) > tol)
                    throw std::invalid_argument("same-slot ancillas must be orthogonal");
    }
    // isometry across input slots
    for (int i = 1; i <= L_; ++i)
        for (int j = i + 1; j <= L_; ++j) {
            double overlap = 0.0;
            for (int t = 0; t <= L_; ++t)
                if (c_(i - 1, t) > 0.0 && c_(j - 1, t) > 0.0)
                    overlap += c_(i - 1, t) * c_(j - 1, t) * ancilla(i, t).dot(ancilla(j, t));
            if (std::abs(overlap) > tol)
                throw std::invalid_argument("attack is not an isometry");
        }
}

CollectiveAttack CollectiveAttack::identity(int L) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(L, L + 1);
    for (int i = 1; i <= L; ++i) c(i - 1, i) = 1.0;
    return with_displacement_ancillas(L, c);  // shared ancilla f_0 on the diagonal
}

CollectiveAttack CollectiveAttack::depolarizing(int L) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(L, L + 1);
    for (int i = 1; i <= L; ++i)
        for (int t = 1; t <= L; ++t) c(i - 1, t) = 1.0 / std::sqrt(static_cast<double>(L));
    return with_orthogonal_ancillas(L, c);
}

CollectiveAttack CollectiveAttack::with_orthogonal_ancillas(int L, const Eigen::MatrixXd& coeff) {
    const int rows = L * (L + 1);
    return CollectiveAttack(L, coeff, Eigen::MatrixXd::Identity(rows, rows));
}

CollectiveAttack CollectiveAttack::with_displacement_ancillas(int L, const Eigen::MatrixXd& coeff) {
    std::vector<std::vector<int>> latin(L, std::vector<int>(L + 1));
    for (int i = 1; i <= L; ++i)
        for (int t = 0; t <= L; ++t) latin[i - 1][t] = ((t - i) % (L + 1) + (L + 1)) % (L + 1);
    return with_latin_ancillas(L, coeff, latin);
}

CollectiveAttack CollectiveAttack::with_latin_ancillas(int L, const Eigen::MatrixXd& coeff,
                                                       const std::vector<std::vector<int>>& latin) {
    if (static_cast<int>(latin.size()) < L)
        throw std::invalid_argument("latin square needs at least L rows");
    Eigen::MatrixXd anc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(L) * (L + 1), L + 1);
    for (int i = 1; i <= L; ++i) {
        if (static_cast<int>(latin[i - 1].size()) != L + 1)
            throw std::invalid_argument("latin square rows must have L+1 entries");
        for (int t = 0; t <= L; ++t) {
            int s = latin[i - 1][t];
            if (s < 0 || s > L) throw std::invalid_argument("latin entries must be in [0,L]");
            anc((i - 1) * (L + 1) + t, s) = 1.0;
        }
    }
    return CollectiveAttack(L, coeff, anc);
}

CollectiveAttack CollectiveAttack::mixture(const CollectiveAttack& a, const CollectiveAttack& b,
                                           double q) {
    if (a.L_ != b.L_) throw std::invalid_argument("mixture requires equal L");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("mixture weight outside [0,1]");
    const int L = a.L_;
    const int da = a.ancilla_dim(), db = b.ancilla_dim();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(L, L + 1);
    Eigen::MatrixXd anc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(L) * (L + 1), da + db);
    for (int i = 1; i <= L; ++i)
        for (int t = 0; t <= L; ++t) {
            double ca = a.coeff(i, t), cb = b.coeff(i, t);
            double cm = std::sqrt(q * ca * ca + (1.0 - q) * cb * cb);
            c(i - 1, t) = cm;
            if (cm > 0.0) {
                Eigen::RowVectorXd row(da + db);
                row << std::sqrt(q) * ca * a.ancilla(i, t), std::sqrt(1.0 - q) * cb * b.ancilla(i, t);
                anc.row((i - 1) * (L + 1) + t) = row / cm;
            }
        }
    return CollectiveAttack(L, c, anc);
}

JointState apply_collective(const CollectiveAttack& attack, SlotPair pair, int key_bit) {
    const int L = attack.L();
    if (pair.j > L) throw std::invalid_argument("pair exceeds attack dimension");
    const double sign = key_bit ? -1.0 : 1.0;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    JointState st;
    st.L = L;
    st.amp = Eigen::MatrixXd::Zero(L + 1, attack.ancilla_dim());
    for (int t = 0; t <= L; ++t) {
        if (attack.coeff(pair.i, t) > 0.0)
            st.amp.row(t) += inv_sqrt2 * attack.coeff(pair.i, t) * attack.ancilla(pair.i, t);
        if (attack.coeff(pair.j, t) > 0.0)
            st.amp.row(t) += sign * inv_sqrt2 * attack.coeff(pair.j, t) * attack.ancilla(pair.j, t);
    }
    if (std::abs(st.norm_sq() - 1.0) > 1e-9)
        throw std::runtime_error("attacked state is not normalized");
    return st;
}

std::vector<std::array<double, 2>> bob_port_probabilities(const CollectiveAttack& attack,
                                                          SlotPair alice, int key_bit) {
    const int L = attack.L();
    const int P = protocol::pair_count(L);
    JointState st = apply_collective(attack, alice, key_bit);
    std::vector<std::array<double, 2>> out(static_cast<std::size_t>(P));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int b = 0; b < P; ++b) {
        SlotPair bp = protocol::pair_from_index(b, L);
        Eigen::RowVectorXd plus = inv_sqrt2 * (st.amp.row(bp.i) + st.amp.row(bp.j));
        Eigen::RowVectorXd minus = inv_sqrt2 * (st.amp.row(bp.i) - st.amp.row(bp.j));
        out[b] = {plus.squaredNorm(), minus.squaredNorm()};
        if (out[b][0] + out[b][1] > 1.0 + 1e-9)
            throw std::runtime_error("projection probabilities exceed 1");
    }
    return out;
}

double vn_entropy_bits(const Eigen::MatrixXd& rho) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(rho, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigensolver failed on a density matrix");
    double entropy = 0.0;
    for (double lambda : solver.eigenvalues()) {
        if (lambda < -1e-9)
            throw std::runtime_error("density matrix has a significantly negative eigenvalue");
        if (lambda > 1e-15) entropy -= lambda * std::log2(lambda);
    }
    return entropy;
}

namespace {

struct Aggregates {
    double q_sum = 0.0;
    double qp_sum = 0.0;
    int qp_cells = 0;
    double err_w = 0.0, det_w = 0.0, keep = 0.0;
};

}  // namespace

AttackOutcome induced_statistics(const CollectiveAttack& attack,
                                 const protocol::ProtocolParams& params) {
    const int L = attack.L();
    if (params.L != L) throw std::invalid_argument("params and attack disagree on L");
    const int P = protocol::pair_count(L);

    auto settings = protocol::setting_distribution(params);
    std::vector<double> wb(static_cast<std::size_t>(P), 0.0);
    for (const auto& [ms, w] : settings)
        wb[static_cast<std::size_t>(protocol::pair_index(ms.pair(), L))] += w;

    AttackOutcome out;
    out.L = L;
    out.p_matrix.assign(static_cast<std::size_t>(P) * P, 0.0);

    Aggregates agg;
    double chi_sum = 0.0, chi_weight = 0.0;

    for (int a = 0; a < P; ++a) {
        SlotPair ap = protocol::pair_from_index(a, L);
        const double wa = params.pair_weights[a];

        // Eve's post-sifting conditional states for the two key bits
        Eigen::MatrixXd tau[2];
        double p_keep[2] = {0.0, 0.0};

        for (int k = 0; k < 2; ++k) {
            JointState st = apply_collective(attack, ap, k);
            const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
            tau[k] = Eigen::MatrixXd::Zero(attack.ancilla_dim(), attack.ancilla_dim());
            for (int b = 0; b < P; ++b) {
                SlotPair bp = protocol::pair_from_index(b, L);
                Eigen::RowVectorXd plus = inv_sqrt2 * (st.amp.row(bp.i) + st.amp.row(bp.j));
                Eigen::RowVectorXd minus = inv_sqrt2 * (st.amp.row(bp.i) - st.amp.row(bp.j));
                const double pp = plus.squaredNorm(), pm = minus.squaredNorm();
                if (pp + pm > 1.0 + 1e-9)
                    throw std::runtime_error("projection probabilities exceed 1");
                out.p_matrix[static_cast<std::size_t>(a) * P + b] += 0.5 * (pp + pm);
                if (b == a) {
                    // sifted: Eve keeps her ancilla, Bob's outcome unannounced
                    tau[k] += plus.transpose() * plus + minus.transpose() * minus;
                    p_keep[k] = pp + pm;
                    const double p_err = k == 0 ? pm : pp;
                    agg.err_w += wa * wb[a] * 0.5 * p_err;
                    agg.det_w += wa * wb[a] * 0.5 * (pp + pm);
                }
            }
        }

        const double keep_total = p_keep[0] + p_keep[1];
        agg.keep += wa * wb[a] * 0.5 * keep_total;
        if (keep_total > 1e-15) {
            Eigen::MatrixXd mean = (tau[0] + tau[1]) / keep_total;
            double chi = vn_entropy_bits(mean);
            for (int k = 0; k < 2; ++k)
                if (p_keep[k] > 1e-15)
                    chi -= p_keep[k] / keep_total * vn_entropy_bits(tau[k] / p_keep[k]);
            const double w = wa * wb[a] * keep_total;
            chi_sum += w * std::max(chi, 0.0);
            chi_weight += w;
        }
    }

    for (int a = 0; a < P; ++a) {
        SlotPair ap = protocol::pair_from_index(a, L);
        for (int b = 0; b < P; ++b) {
            SlotPair bp = protocol::pair_from_index(b, L);
            double p = out.p_matrix[static_cast<std::size_t>(a) * P + b];
            auto ov = protocol::classify_overlap(ap, bp);
            if (ov == protocol::PairOverlap::matched) agg.q_sum += p;
            else if (ov == protocol::PairOverlap::disjoint) {
                agg.qp_sum += p;
                ++agg.qp_cells;
            }
        }
    }

    out.Q = agg.q_sum / P;
    out.Q_prime = agg.qp_cells > 0 ? agg.qp_sum / agg.qp_cells : 0.0;
    out.E = agg.det_w > 0.0 ? agg.err_w / agg.det_w : 0.0;
    out.keep_rate = agg.keep;
    out.bound_bits = out.Q > 0.0 ? security::iae_bound(out.Q, out.Q_prime) : 0.0;
    out.eve_bits = chi_weight > 0.0 ? chi_sum / chi_weight : 0.0;
    return out;
}

AttackOutcome intercept_resend_statistics(const protocol::ProtocolParams& params) {
    const int L = params.L;
    const int P = protocol::pair_count(L);
    auto settings = protocol::setting_distribution(params);
    std::vector<double> wb(static_cast<std::size_t>(P), 0.0);
    for (const auto& [ms, w] : settings)
        wb[static_cast<std::size_t>(protocol::pair_index(ms.pair(), L))] += w;

    AttackOutcome out;
    out.L = L;
    out.p_matrix.assign(static_cast<std::size_t>(P) * P, 0.0);

    double q_sum = 0.0, qp_sum = 0.0;
    int qp_cells = 0;
    double err_w = 0.0, det_w = 0.0, keep = 0.0;

    // Eve measures the slot index t (each pulse slot equally likely, blind to
    // the key bit) and resends |t>. Bob's projection onto (|m> +- |n>)/sqrt(2)
    // then clicks with probability 1/4 per port when t is one of his slots.
    // Joint distribution over (key bit, Eve outcome, Bob outcome) per pair:
    std::vector<double> joint(2 * 2 * 2);  // k x (t == first slot) x bob bit

    for (int a = 0; a < P; ++a) {
        SlotPair ap = protocol::pair_from_index(a, L);
        for (int b = 0; b < P; ++b) {
            SlotPair bp = protocol::pair_from_index(b, L);
            int common = (ap.i == bp.i || ap.i == bp.j) + (ap.j == bp.i || ap.j == bp.j);
            out.p_matrix[static_cast<std::size_t>(a) * P + b] = common * 0.25;
        }
        double p_match = out.p_matrix[static_cast<std::size_t>(a) * P + a];
        // kept events: each (k, t, bob bit) combination equally likely
        std::fill(joint.begin(), joint.end(), 0.0);
        for (int k = 0; k < 2; ++k)
            for (int t = 0; t < 2; ++t)
                for (int bob = 0; bob < 2; ++bob)
                    joint[(k * 2 + t) * 2 + bob] = 0.5 * 0.5 * 0.25;
        double kept = std::accumulate(joint.begin(), joint.end(), 0.0);
        double err = 0.0;
        for (int k = 0; k < 2; ++k)
            for (int t = 0; t < 2; ++t) err += joint[(k * 2 + t) * 2 + (1 - k)];
        err_w += params.pair_weights[a] * wb[a] * err;
        det_w += params.pair_weights[a] * wb[a] * kept;
        keep += params.pair_weights[a] * wb[a] * p_match;

        // Eve's information: mutual information between k and t given kept
        double mi = 0.0;
        for (int k = 0; k < 2; ++k)
            for (int t = 0; t < 2; ++t) {
                double pkt = (joint[(k * 2 + t) * 2 + 0] + joint[(k * 2 + t) * 2 + 1]) / kept;
                double pk = 0.5, pt = 0.5;
                if (pkt > 0.0) mi += pkt * std::log2(pkt / (pk * pt));
            }
        out.eve_bits += params.pair_weights[a] * mi;  // 0 for every pair, computed anyway
    }

    for (int a = 0; a < P; ++a) {
        SlotPair ap = protocol::pair_from_index(a, L);
        for (int b = 0; b < P; ++b) {
            SlotPair bp = protocol::pair_from_index(b, L);
            double p = out.p_matrix[static_cast<std::size_t>(a) * P + b];
            auto ov = protocol::classify_overlap(ap, bp);
            if (ov == protocol::PairOverlap::matched) q_sum += p;
            else if (ov == protocol::PairOverlap::disjoint) {
                qp_sum += p;
                ++qp_cells;
            }
        }
    }
    out.Q = q_sum / P;
    out.Q_prime = qp_cells > 0 ? qp_sum / qp_cells : 0.0;
    out.E = det_w > 0.0 ? err_w / det_w : 0.0;
    out.keep_rate = keep;
    out.bound_bits = out.Q > 0.0 ? security::iae_bound(out.Q, out.Q_prime) : 0.0;
    return out;
}

std::vector<std::vector<int>> random_latin_square(CounterRng& rng, int n) {
    auto permutation = [&](int m) {
        std::vector<int> p(m);
        std::iota(p.begin(), p.end(), 0);
        for (int i = m - 1; i > 0; --i)
            std::swap(p[i], p[rng.next_below(static_cast<std::uint32_t>(i + 1))]);
        return p;
    };
    auto rows = permutation(n), cols = permutation(n), syms = permutation(n);
    std::vector<std::vector<int>> latin(n, std::vector<int>(n));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) latin[r][c] = syms[(rows[r] + cols[c]) % n];
    return latin;
}

namespace {

Eigen::MatrixXd random_coeffs(CounterRng& rng, int L) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(L, L + 1);
    const int style = static_cast<int>(rng.next_below(3));
    for (int i = 1; i <= L; ++i) {
        if (style == 0) {
            // near-identity: dominant diagonal plus a weak random sideband
            c(i - 1, i) = 1.0;
            int t = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(L + 1)));
            double eps = 0.5 * rng.next_unit();
            c(i - 1, t) += eps;  // may reinforce the diagonal; fine
        } else {
            // dense or sparse nonnegative row
            const bool sparse = style == 2;
            for (int t = 0; t <= L; ++t) {
                if (t == 0 && !rng.bernoulli(0.3)) continue;  // loss mode sometimes
                if (sparse && !rng.bernoulli(0.4)) continue;
                double g = rng.next_unit();
                c(i - 1, t) = g * g;
            }
            if (c.row(i - 1).sum() == 0.0) c(i - 1, i) = 1.0;
        }
        c.row(i - 1) /= c.row(i - 1).norm();
    }
    return c;
}

}  // namespace

CollectiveAttack random_attack(CounterRng& rng, int L) {
    Eigen::MatrixXd c = random_coeffs(rng, L);
    switch (rng.next_below(4)) {
        case 0:
            return CollectiveAttack::with_orthogonal_ancillas(L, c);
        case 1:
            return CollectiveAttack::with_displacement_ancillas(L, c);
        case 2:
            return CollectiveAttack::with_latin_ancillas(L, c, random_latin_square(rng, L + 1));
        default: {
            auto a = CollectiveAttack::with_displacement_ancillas(L, c);
            auto b = CollectiveAttack::with_orthogonal_ancillas(L, random_coeffs(rng, L));
            return CollectiveAttack::mixture(a, b, 0.1 + 0.8 * rng.next_unit());
        }
    }
}

}  // namespace chausim::eve
