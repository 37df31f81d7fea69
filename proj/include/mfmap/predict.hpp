#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mfmap/spatial.hpp"
#include "mfmap/train.hpp"

namespace mfmap {

// Student-t posterior predictive for one ordered location given a target
// conditioning vector.
struct PredictiveComponent {
    double location = 0.0;
    double scale = 0.0;  // > 0
    double dof = 0.0;    // 2 * alpha_tilde, always > 2 here
};

// Conjugate posterior predictive at conditioning vector xstar (length m + mp
// for the location's active sizes):
//   location = kstar' G^-1 y,
//   scale^2  = (beta~/alpha~) (1 + K(xstar, xstar) - kstar' G^-1 kstar).
// A tiny negative spread inside machine tolerance is clamped at 1e-12 with a
// warning; anything worse throws NumericalError.
PredictiveComponent predictive_component(
    const TrainedMap& map, int r, Eigen::Index rank,
    const Eigen::Ref<const Eigen::VectorXd>& xstar);

// Log density of the component at target value y.
double component_log_density(const PredictiveComponent& pc, double y);

// Negative log predictive densities of held-out replicates, each conditioned
// on its own observed values (teacher forcing).
struct ScoreReport {
    Eigen::MatrixXd per_replicate_fidelity;  // n_test x R, negative log
    Eigen::VectorXd per_replicate;           // row sums
    Eigen::VectorXd per_fidelity_mean;       // column means
    double mean = 0.0;
};

ScoreReport log_score(const TrainedMap& map, const Ensemble& test,
                      int threads = 1);

// Score CSV: replicate,fidelity,neg_log_score (1-based ids).
void write_scores(const std::string& path, const ScoreReport& report);

// Plug-in triangular map: z_{r,i} = (y_{r,i} - location) / dhat with
// dhat^2 = beta~/(alpha~ - 1), the posterior mean of d^2. Input is one
// replicate as per-fidelity vectors in original location order; the output
// is one flat vector in global map order (fidelity-major, rank-minor).
Eigen::VectorXd forward_map(const TrainedMap& map,
                            const std::vector<Eigen::VectorXd>& replicate);

// Sequential joint draw in global map order; replicate k uses its own
// counter-based stream derived from (seed, k), so output is reproducible
// across runs and thread counts.
Ensemble sample_joint(const TrainedMap& map, Eigen::Index count,
                      std::uint64_t seed, int threads = 1);

// Joint draw with fidelities 1..given.size() pinned to the supplied values
// (original location order, one conditioning replicate). The returned
// ensemble echoes the pinned fidelities and samples the rest; given r0 = 0
// this is sample_joint draw for draw.
Ensemble sample_conditional(const TrainedMap& map,
                            const std::vector<Eigen::VectorXd>& given,
                            Eigen::Index count, std::uint64_t seed,
                            int threads = 1);

}  // namespace mfmap
