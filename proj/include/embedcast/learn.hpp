#pragma once

// Finite-dimensional hypothesis spaces and the regularized least-squares fit
// of the feedback maps w_k, with the projection error delta measured on a
// held-out tail split.

#include "embedcast/embed.hpp"

#include <nlohmann/json_fwd.hpp>

namespace embedcast {

enum class FeatureKind { Affine, Fourier, Rbf };

// Fourier phase handling. Direct treats every input coordinate as an angle;
// PhasePairs reads consecutive (cos, sin) coordinate pairs as one phase via
// atan2, so |k| = 1 harmonics reproduce the pair coordinates exactly.
enum class FourierMode { Direct, PhasePairs };

// Feature 0 is always the constant function 1.
class FeatureMap {
public:
    FeatureKind kind = FeatureKind::Affine;
    Index input_dim = 0;

    // fourier
    FourierMode fourier_mode = FourierMode::Direct;
    Eigen::MatrixXi freqs;  // n_harmonics x n_phases, canonical half-space, no zero row

    // rbf
    Mat centers;  // n_centers x L
    double bandwidth = 1.0;

    Index n_features() const;
    Vec eval(const Vec& y) const;
    Mat jac(const Vec& y) const;  // n_features x input_dim

    Mat eval_rows(const Mat& Y) const;  // n x n_features

    nlohmann::json describe() const;
    static FeatureMap from_json(const nlohmann::json& j);
};

FeatureMap make_affine_features(Index L);

// All integer frequency vectors with 0 < ||k||_inf <= kmax, one per +-k pair.
FeatureMap make_fourier_features(Index L, int kmax, FourierMode mode = FourierMode::Direct);
FeatureMap make_fourier_features_from(Index L, Eigen::MatrixXi freqs,
                                      FourierMode mode = FourierMode::Direct);

// Centers are every ceil(n/n_centers)-th orbit point; bandwidth is the median
// pairwise center distance.
FeatureMap make_rbf_features(const EmbeddedOrbit& orbit, Index n_centers);

struct FitDiagnostics {
    double train_rms = 0;
    double condition = 0;  // |r_11 / r_MM| from the pivoted QR
    Index rank = 0;
    Index n_train = 0;
    Index n_test = 0;
};

struct FeedbackModel {
    FeatureMap fmap;
    Mat coeffs;  // n_features x d
    int horizon = 1;
    double ridge = 0;
    double delta = 0;  // held-out RMS residual
    FitDiagnostics diag;

    Vec predict(const Vec& y) const { return coeffs.transpose() * fmap.eval(y); }
    Mat predict_rows(const Mat& Y) const { return fmap.eval_rows(Y) * coeffs; }
    // d x L Jacobian of the prediction, the W-hat block of the error cocycle.
    Mat prediction_jacobian(const Vec& y) const { return coeffs.transpose() * fmap.jac(y); }
};

// Minimizes sum_n |targets_n - C^T f(y_n)|^2 + ridge |C|_F^2 on the leading
// (1 - holdout) fraction of rows; delta is the RMS residual on the tail.
// ridge == 0 with rank-deficient features throws RankDeficiencyError.
FeedbackModel fit_feedback(const Mat& Y, const Mat& targets, const FeatureMap& fmap,
                           double ridge, int k, double holdout_fraction = 0.2);

// Rows of (embedded state, target phi(omega_{t+k})) pairs, t the aligned base
// index of each usable orbit entry. max_k reserves room so several horizons
// share identical rows.
struct TrainingSet {
    Mat Y;        // n x L
    Mat targets;  // n x d
};
TrainingSet make_training_set(const TrajectoryBundle& bundle, const EmbeddedOrbit& orbit, int k,
                              int max_k = -1);

// Least-squares projection of values onto the feature span at the sample
// points; returns fitted values and the RMS residual.
std::pair<Mat, double> project_empirical(const FeatureMap& fmap, const Mat& Y, const Mat& values);

inline double projection_error(const FeedbackModel& m) { return m.delta; }

// Default ridge floor: 1e-8 * trace(Gram) / n_features.
double auto_ridge(const Mat& features);

nlohmann::json model_to_json(const FeedbackModel& m);
FeedbackModel model_from_json(const nlohmann::json& j);

}  // namespace embedcast
