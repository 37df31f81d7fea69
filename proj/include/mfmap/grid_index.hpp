#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace mfmap {

// Uniform-grid bucketing for repeated k-nearest-neighbor queries against a
// fixed pool. Cells are expanded in Chebyshev rings around the query cell
// until the conservative bound (ring-1) * min_cell_extent exceeds the current
// k-th distance, which preserves exact results including the smallest-index
// tie rule. Degenerate pools (zero extent, tiny size) fall back to a brute
// force scan.
class GridIndex {
public:
    explicit GridIndex(const Eigen::Ref<const Eigen::MatrixXd>& pool);

    // k smallest (distance, index) pairs in lexicographic order.
    std::vector<Eigen::Index> query(
        const Eigen::Ref<const Eigen::RowVectorXd>& point,
        Eigen::Index k) const;

    Eigen::Index size() const { return pool_.rows(); }

private:
    std::vector<Eigen::Index> brute_force(
        const Eigen::Ref<const Eigen::RowVectorXd>& point,
        Eigen::Index k) const;

    Eigen::MatrixXd pool_;
    bool use_grid_ = false;
    Eigen::VectorXd origin_;
    Eigen::VectorXd cell_extent_;
    std::vector<int> cells_per_dim_;
    double min_extent_ = 0.0;
    std::vector<std::vector<Eigen::Index>> buckets_;

    int cell_of(const Eigen::Ref<const Eigen::RowVectorXd>& point,
                std::vector<int>& coords) const;
    int flat_index(const std::vector<int>& coords) const;
};

}  // namespace mfmap
