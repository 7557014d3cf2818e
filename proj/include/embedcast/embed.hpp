#pragma once

// The two embedding paradigms behind a common interface: a driven contraction
// (reservoir, implicit Phi) and delay coordinates (explicit Phi). Both expose
// the update map g and embedded states y_n = Phi(omega_n).

#include "embedcast/dynsys.hpp"

namespace embedcast {

enum class Paradigm { Reservoir, Delay };

struct ReservoirParams {
    Index L = 0;  // reservoir dimension
    Index d = 0;  // input dimension
    Mat W_in;     // L x d, rescaled to operator norm 1
    Mat W_Y;      // L x L, rescaled to operator norm lambda
    Vec v_bias;   // uniform in [-1, 1]^L
    double lambda = 0.9;
    std::uint64_t seed = 0;
};

// Gaussian W_in/W_Y rescaled in the 2-norm; ||W_Y||_2 = lambda < 1 makes
// g a lambda-contraction in y, ||W_in||_2 = 1 keeps it non-expansive in u.
ReservoirParams reservoir_init(Index L, Index d, double lambda, std::uint64_t seed);

// g(u, y) = tanh(W_in u + W_Y y + v_bias)
Vec reservoir_g(const ReservoirParams& p, const Vec& u, const Vec& y);

struct DelayParams {
    int Q = 1;  // number of delays
    int d = 1;  // observation dimension
    Index L() const { return static_cast<Index>(Q) * d; }
};

// Shift-and-insert: output = (u, y^(1), ..., y^(Q-1)). Block 1 is the newest
// observation, block Q (dropped) the oldest.
Vec delay_g(const Vec& u, const Vec& y, const DelayParams& p);

Mat delay_g_jac_u(const DelayParams& p);  // [I_d; 0], L x d
Mat delay_g_jac_y(const DelayParams& p);  // block subdiagonal shift, L x L

// Embedded states aligned to a source bundle: entry j pairs with the base
// point of bundle index j + align_offset.
//
// Delay paradigm: entry j stacks the Q observations before base index j+Q,
// newest block first: (obs[j+Q-1], ..., obs[j]); align_offset = Q. With this
// layout Phi(f w) = g(phi(w), Phi(w)) holds exactly on consecutive entries.
//
// Reservoir paradigm: entry j is the driven state y_{washout+j};
// align_offset = washout.
struct EmbeddedOrbit {
    Paradigm paradigm = Paradigm::Delay;
    Mat Y;  // n_entries x L
    Index align_offset = 0;
    Index washout = 0;

    Index size() const { return Y.rows(); }
    Index dim() const { return Y.cols(); }
    Index base_index(Index j) const { return j + align_offset; }
};

// Drives y_{n+1} = g(u_n, y_n) from y0 over the input rows and discards the
// first `washout` states. Entry j then pairs with input row washout + j.
EmbeddedOrbit drive(const ReservoirParams& p, const Mat& inputs, const Vec& y0, Index washout);

EmbeddedOrbit delay_embed(const TrajectoryBundle& bundle, const DelayParams& p);

// Scans embedded pairs closer than tol and reports how many hide a large
// state-space separation (false neighbors, the empirical injectivity check).
struct InjectivityReport {
    Index n_pairs_checked = 0;
    Index n_close = 0;          // ||y_i - y_j|| < tol
    Index n_false = 0;          // close in embedding, farther than state_tol in state
    double false_fraction = 0;  // n_false / max(n_close, 1)
    double max_state_gap = 0;   // largest state distance among close pairs
};

InjectivityReport injectivity_diagnostic(const EmbeddedOrbit& orbit,
                                         const TrajectoryBundle& bundle, double tol,
                                         double state_tol, Index stride = 1);

}  // namespace embedcast
