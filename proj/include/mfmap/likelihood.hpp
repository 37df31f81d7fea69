#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "mfmap/model.hpp"
#include "mfmap/ordering.hpp"
#include "mfmap/spatial.hpp"

namespace mfmap {

// Conditioning data for one ordered location, cached at the cap sizes: each
// row is one replicate's values at the conditioning points, columns ascending
// by distance so truncation keeps the nearest ones.
struct LocationDesign {
    Eigen::MatrixXd same;   // n x |c_i|
    Eigen::MatrixXd cross;  // n x |c'_i|
    Eigen::VectorXd y;      // n targets
    double ell = 0.0;       // floored lengthscale
};

struct FidelityDesign {
    int r = 0;
    std::vector<LocationDesign> locations;  // by ordered rank
};

// Values of fidelity r with columns permuted into ordered-rank order.
Eigen::MatrixXd ordered_values(const Ensemble& ens, const MaximinOrdering& ord,
                               int r);

std::vector<FidelityDesign> build_designs(const Ensemble& ens,
                                          const MultiFidelityLocations& locs,
                                          const MaximinOrdering& ord,
                                          const ConditioningSets& sets);

// Scalar parameters entering one location's integrated likelihood.
struct LocationParams {
    Eigen::VectorXd q;
    double sigma2 = 0.0;
    double gamma = 1.0;
    double alpha = 0.0;
    double beta = 0.0;
    RhoFamily rho_family = RhoFamily::kMatern32;
    bool linear_only = false;
    int m = 0;
    int mp = 0;
};

// m_i/mp_i are the truncated block sizes for this location (already reduced
// to what the conditioning sets actually hold).
LocationParams location_params(const HyperParams& theta, const ModelConfig& cfg,
                               int r, double ell, int m_i, int mp_i);

// [same.leftCols(m), cross.leftCols(mp)], the active conditioning columns.
Eigen::MatrixXd truncated_design(const LocationDesign& d, int m, int mp);

// Per-location caches retained for prediction and for the d1/d2 fast path of
// the finite-difference gradient (G does not depend on the prior scale).
struct LocationTerm {
    double value = 0.0;
    double logdet = 0.0;
    double quad = 0.0;  // y' G^-1 y
    double alpha = 0.0;
    double beta = 0.0;
    double alpha_tilde = 0.0;
    double beta_tilde = 0.0;
    Eigen::MatrixXd chol;    // lower Cholesky factor of G (kept on request)
    Eigen::VectorXd ginv_y;  // G^-1 y (kept on request)
};

// Log of the fully normalized integrated likelihood of this location's n
// replicate targets: the GP weights and the variance d^2 are integrated out
// under the NIG prior, leaving
//   -(n/2) log 2pi - log|G|/2 + alpha log beta - alpha~ log beta~
//   + lgamma(alpha~) - lgamma(alpha)
// with G = K + I (+ jitter) and beta~ = beta + y' G^-1 y / 2.
double location_log_marginal(const LocationParams& p, const LocationDesign& d,
                             LocationTerm* term = nullptr,
                             bool keep_factor = false);

// Same value from cached logdet/quad with a new prior (alpha, beta): used
// when a hyperparameter perturbation leaves the Gram matrix unchanged.
double location_log_marginal_cheap(Eigen::Index n, double logdet, double quad,
                                   double alpha, double beta);

// Active truncation sizes (m_r, mp_r) per fidelity, from adaptive_sizes at
// the given theta. Frozen across an epoch so the FD gradient differentiates
// a function that is smooth in theta.
std::vector<std::pair<int, int>> active_sizes(const HyperParams& theta,
                                              const ModelConfig& cfg);

struct TotalLogMarginal {
    double total = 0.0;
    Eigen::VectorXd per_fidelity;
};

TotalLogMarginal total_log_marginal(
    const HyperParams& theta, const std::vector<FidelityDesign>& designs,
    const ModelConfig& cfg, const std::vector<std::pair<int, int>>& sizes,
    int threads = 1);

TotalLogMarginal total_log_marginal(const HyperParams& theta,
                                    const std::vector<FidelityDesign>& designs,
                                    const ModelConfig& cfg, int threads = 1);

// Unscaled sum of location terms over `batch` (indices into design.locations).
// When `caches` is non-null it receives per-batch-entry (logdet, quad).
double batch_sum(const HyperParams& theta, const FidelityDesign& design,
                 const ModelConfig& cfg, std::pair<int, int> sizes,
                 const std::vector<Eigen::Index>& batch, int threads,
                 std::vector<std::pair<double, double>>* caches = nullptr);

// Central finite-difference gradient of the minibatch objective
// (N_r / B) * batch_sum for fidelity r's unconstrained coordinates, relative
// step h = 1e-4. Coordinates d1/d2 reuse the base Gram caches. Throws
// NumericalError naming the coordinate if any estimate is non-finite.
// When base_value is non-null it receives the unscaled batch_sum at theta.
Eigen::VectorXd batch_gradient(const HyperParams& theta, int r,
                               const FidelityDesign& design,
                               const ModelConfig& cfg,
                               std::pair<int, int> sizes,
                               const std::vector<Eigen::Index>& batch,
                               int threads, double* base_value = nullptr,
                               double h_rel = 1e-4);

// Full-parameter gradient across all fidelities (cross-fidelity blocks are
// exactly zero by the likelihood's factorization); returned as one vector per
// fidelity.
std::vector<Eigen::VectorXd> grad_log_marginal(
    const HyperParams& theta, const std::vector<FidelityDesign>& designs,
    const ModelConfig& cfg, const std::vector<std::pair<int, int>>& sizes,
    int threads = 1, double h_rel = 1e-4);

}  // namespace mfmap
