#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mfmap/likelihood.hpp"
#include "mfmap/model.hpp"
#include "mfmap/ordering.hpp"
#include "mfmap/spatial.hpp"

namespace mfmap {

// Settings for the per-fidelity Adam ascent on the integrated likelihood.
struct TrainConfig {
    int epochs = 200;
    int batch_size = 0;         // locations per update; 0 picks min(128, N_r)
    double learning_rate = 0.01;
    double beta1 = 0.9;         // first-moment decay
    double beta2 = 0.999;       // second-moment decay
    std::uint64_t seed = 0;
    double tolerance = 1e-4;    // relative epoch improvement counted as progress
    int patience = 10;          // stagnant epochs before a fidelity stops early
    std::vector<char> enabled;  // per-fidelity flags; empty trains all
    int threads = 1;

    void validate(int num_fidelities) const;
    bool trains(int r) const {
        return enabled.empty() || enabled[static_cast<std::size_t>(r)] != 0;
    }
};

// Everything prediction needs for one ordered location, cached at the fitted
// hyperparameters: kernel scalars, active conditioning values, targets, and
// the factorized Gram term.
struct TrainedLocation {
    LocationParams params;
    Eigen::MatrixXd design;  // n x (m + mp) active conditioning values
    Eigen::VectorXd y;       // n targets
    LocationTerm term;       // includes the Cholesky factor and G^-1 y
};

struct TrainedMap {
    HyperParams theta;
    ModelConfig model;
    MultiFidelityLocations locs;
    MaximinOrdering ordering;
    ConditioningSets sets;
    std::vector<std::pair<int, int>> sizes;  // (m_r, mp_r) at the fitted theta
    std::vector<std::vector<TrainedLocation>> locations;  // [r][rank]
    TrainConfig config;
    Eigen::Index ensemble_size = 0;
    Eigen::VectorXd initial_objectives;  // full-data, at the initialization
    Eigen::VectorXd final_objectives;    // full-data, at the fitted theta
    // trace[r][e]: epoch objective, the sum of that epoch's raw batch sums.
    // A fidelity that stops early carries its last value forward so every
    // trained fidelity has exactly `epochs` entries; disabled fidelities stay
    // empty.
    std::vector<std::vector<double>> trace;
    // batch_values[r]: raw per-update batch sums in evaluation order.
    std::vector<std::vector<double>> batch_values;
    std::vector<std::string> diagnostics;  // per fidelity; empty when clean
};

// Orders the locations, builds conditioning sets and designs, then runs
// minibatch Adam ascent on each fidelity's subtotal independently.
// Conditioning-set truncation is re-derived from the current theta at every
// epoch boundary and frozen within the epoch. A non-finite objective or
// gradient aborts that fidelity at its last finite theta with a diagnostic.
TrainedMap fit(const Ensemble& ens, const MultiFidelityLocations& locs,
               const ModelConfig& model, const TrainConfig& config);

// Builds ordering, conditioning sets, and prediction caches at a fixed theta
// without optimizing (checkpoint loading, fixed-parameter experiments).
TrainedMap assemble_map(const Ensemble& ens,
                        const MultiFidelityLocations& locs,
                        const ModelConfig& model, const HyperParams& theta);

// Monotone (running-maximum) smoothing of the per-epoch trace.
std::vector<std::vector<double>> objective_trace(const TrainedMap& map);

// Trace CSV: fidelity,epoch,objective (1-based ids, smoothed values).
void write_trace(const std::string& path, const TrainedMap& map);

}  // namespace mfmap
