#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace mfmap {

// Spatial fields observed at several resolutions. Fidelity r (1-based in file
// formats, 0-based in code) holds N_r locations of common dimension D; the
// convention throughout is coarse fidelities first.
struct MultiFidelityLocations {
    int dim = 0;
    std::vector<Eigen::MatrixXd> fidelities;  // each N_r x D, original order
    Eigen::VectorXd bbox_min;
    Eigen::VectorXd bbox_max;

    int num_fidelities() const { return static_cast<int>(fidelities.size()); }
    Eigen::Index size(int r) const { return fidelities[r].rows(); }
    Eigen::Index total() const;
    double bbox_diameter() const;

    // Throws DataError on any structural violation (empty fidelity, dimension
    // mismatch, duplicate location within a fidelity, non-finite coordinate).
    void validate() const;
};

MultiFidelityLocations make_locations(std::vector<Eigen::MatrixXd> fidelities);

// Replicated field values paired with a MultiFidelityLocations: one n x N_r
// matrix per fidelity, rows aligned across fidelities (same replicate).
struct Ensemble {
    Eigen::Index n = 0;
    std::vector<Eigen::MatrixXd> values;

    void validate(const MultiFidelityLocations& locs) const;
};

// Per-column affine transform captured by standardize(), enabling the exact
// inverse map.
struct StandardizeTable {
    std::vector<Eigen::VectorXd> mean;  // per fidelity, length N_r
    std::vector<Eigen::VectorXd> sd;
};

MultiFidelityLocations load_locations(const std::string& path);

// One CSV per fidelity, coarse first; replicate id sequences must agree
// across files.
Ensemble load_ensemble(const std::vector<std::string>& paths,
                       const MultiFidelityLocations& locs);

void write_locations(const std::string& path,
                     const MultiFidelityLocations& locs);
void write_ensemble(const std::string& path, const Eigen::MatrixXd& values,
                    const std::vector<std::int64_t>& rep_ids = {});

// Rescales every column to mean 0, sd 1 (divisor n-1). Throws DataError on a
// column with sd below 1e-12.
std::pair<Ensemble, StandardizeTable> standardize(const Ensemble& ens);
Ensemble unstandardize(const Ensemble& ens, const StandardizeTable& table);

// Indices of the k pool rows closest to query in Euclidean distance,
// ascending; ties broken by smallest index. k must not exceed the pool size.
std::vector<Eigen::Index> nearest_neighbors(
    const Eigen::Ref<const Eigen::RowVectorXd>& query,
    const Eigen::Ref<const Eigen::MatrixXd>& pool, Eigen::Index k);

}  // namespace mfmap
