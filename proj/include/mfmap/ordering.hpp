#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mfmap/spatial.hpp"

namespace mfmap {

// Conditional maximin ordering: all of fidelity r precedes fidelity r+1, and
// within a fidelity each point maximizes the distance to everything ordered
// before it (lower fidelities included). The maximized distance becomes the
// point's lengthscale.
struct MaximinOrdering {
    // perm[r][rank] = original index within fidelity r; rank_of inverts it.
    std::vector<std::vector<Eigen::Index>> perm;
    std::vector<std::vector<Eigen::Index>> rank_of;
    // lengthscales[r][rank]; raw values, may be 0 when grids share points.
    std::vector<Eigen::VectorXd> lengthscales;
    // Floor applied before the lengthscale enters any power law.
    double lengthscale_floor = 0.0;

    double floored(int r, Eigen::Index rank) const {
        double l = lengthscales[static_cast<std::size_t>(r)][rank];
        return l < lengthscale_floor ? lengthscale_floor : l;
    }
};

MaximinOrdering conditional_maximin(const MultiFidelityLocations& locs);

// Locations of fidelity r permuted into ordered-rank order.
Eigen::MatrixXd ordered_locations(const MultiFidelityLocations& locs,
                                  const MaximinOrdering& ord, int r);

// Per ordered location (r, i): up to m_max previously ordered same-fidelity
// ranks and up to mp_max fidelity-(r-1) ranks, both ascending by distance
// (ties to the earlier rank).
struct ConditioningSets {
    std::vector<std::vector<std::vector<Eigen::Index>>> same;
    std::vector<std::vector<std::vector<Eigen::Index>>> prev;
};

ConditioningSets build_conditioning_sets(const MaximinOrdering& ord,
                                         const MultiFidelityLocations& locs,
                                         int m_max, int mp_max);

// Diagnostics export: fidelity,orig_index,rank,lengthscale (1-based ids).
void write_ordering(const std::string& path, const MaximinOrdering& ord);

}  // namespace mfmap
