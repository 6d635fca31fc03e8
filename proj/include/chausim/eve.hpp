#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "chausim/protocol.hpp"
#include "chausim/rng.hpp"

namespace chausim::eve {

// Collective attack acting on the single-photon subspace: a photon in slot i
// is mapped to sum_t c(i,t) |t> |a(i,t)>, t = 0..L with t = 0 a loss mode
// (photon removed from Bob's packet). Constraints:
//   - c >= 0, each row has unit square-norm,
//   - ancilla vectors attached to the same input slot are orthonormal,
//   - sum_t c(i,t) c(j,t) <a(i,t), a(j,t)> = 0 for i != j (isometry).
// Cross-slot ancilla overlaps such as <a(i,i), a(j,j)> are free; they carry
// whatever coherence the attack leaves Bob.
class CollectiveAttack {
public:
    // coeff: L x (L+1); ancilla_rows: L*(L+1) x D, row (i-1)*(L+1)+t
    CollectiveAttack(int L, Eigen::MatrixXd coeff, Eigen::MatrixXd ancilla_rows);

    static CollectiveAttack identity(int L);
    // c(i,t)^2 = 1/L over t = 1..L, mutually orthogonal ancillas
    static CollectiveAttack depolarizing(int L);
    // every ancilla vector its own basis direction ("which-path recorder")
    static CollectiveAttack with_orthogonal_ancillas(int L, const Eigen::MatrixXd& coeff);
    // ancilla records only the slot displacement: a(i,t) = f_{(t-i) mod (L+1)};
    // valid for any nonnegative row-normalized coeff, includes the identity
    static CollectiveAttack with_displacement_ancillas(int L, const Eigen::MatrixXd& coeff);
    // ancilla a(i,t) = f_{latin[i-1][t]} for an arbitrary Latin square on
    // {0..L}; per-row injectivity and column-disjointness keep it an isometry
    static CollectiveAttack with_latin_ancillas(int L, const Eigen::MatrixXd& coeff,
                                                const std::vector<std::vector<int>>& latin);
    // Eve applies `a` with probability q, `b` otherwise (classical flag kept)
    static CollectiveAttack mixture(const CollectiveAttack& a, const CollectiveAttack& b,
                                    double q);

    int L() const { return L_; }
    int ancilla_dim() const { return static_cast<int>(anc_.cols()); }
    double coeff(int slot, int t) const { return c_(slot - 1, t); }
    const Eigen::MatrixXd& coeffs() const { return c_; }
    const Eigen::MatrixXd& ancilla_rows() const { return anc_; }
    Eigen::RowVectorXd ancilla(int slot, int t) const { return anc_.row((slot - 1) * (L_ + 1) + t); }

    // throws std::invalid_argument when the constraints are violated
    void validate() const;

private:
    int L_;
    Eigen::MatrixXd c_;
    Eigen::MatrixXd anc_;
};

// Joint pure state over (slot mode 0..L) x ancilla after the attack on
// (|i> + (-1)^k |j>)/sqrt(2). amp(t, e) is the amplitude of |t>|e>.
struct JointState {
    int L = 0;
    Eigen::MatrixXd amp;  // (L+1) x D

    double norm_sq() const { return amp.squaredNorm(); }
};

JointState apply_collective(const CollectiveAttack& attack, protocol::SlotPair pair, int key_bit);

// Probabilities of Bob's two projection outcomes for every setting pair,
// for one prepared (pair, key bit). Entry [b] = {p(+), p(-)}. The residual
// 1 - p(+) - p(-) for Bob's actual setting is a no-detection.
std::vector<std::array<double, 2>> bob_port_probabilities(const CollectiveAttack& attack,
                                                          protocol::SlotPair alice, int key_bit);

struct AttackOutcome {
    int L = 0;
    // k-averaged p(bob pair | alice pair), alice-major, pair_count^2
    std::vector<double> p_matrix;
    double Q = 0.0;
    double Q_prime = 0.0;
    double E = 0.0;          // error rate among sifted detections
    double keep_rate = 0.0;  // sifted-and-detected probability per photon
    double bound_bits = 0.0; // h2 bound from Q, Q'
    double eve_bits = 0.0;   // Holevo (collective) or mutual information (IR)
};

// Exact induced statistics and Eve's Holevo information on the sifted key
// (announced pair indices handled as classical side information, Bob's
// outcome not announced). Ideal single-photon source and detection: this is
// the regime the information bound is stated in.
AttackOutcome induced_statistics(const CollectiveAttack& attack,
                                 const protocol::ProtocolParams& params);

// Intercept-resend in the time basis: Eve measures the slot index and resends
// that slot state. Classical baseline; eve_bits is her mutual information
// with the sifted key bit, computed by enumerating her outcomes.
AttackOutcome intercept_resend_statistics(const protocol::ProtocolParams& params);

// Von Neumann entropy in bits. Throws std::runtime_error on eigensolver
// failure or an eigenvalue below -1e-9; tiny negative values are zeroed.
double vn_entropy_bits(const Eigen::MatrixXd& rho);

// Random attacks for bound validation: random nonnegative row-normalized
// coefficients (occasionally sparse, occasionally with a loss column, often
// near-identity) paired with orthogonal / displacement / random-Latin /
// mixture ancilla structures.
CollectiveAttack random_attack(CounterRng& rng, int L);

std::vector<std::vector<int>> random_latin_square(CounterRng& rng, int n);

}  // namespace chausim::eve
