#include "mfmap/grid_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "mfmap/errors.hpp"

namespace mfmap {

namespace {

using Entry = std::pair<double, Eigen::Index>;  // (squared distance, index)

// Max-heap keeping the k lexicographically smallest entries.
class BestK {
public:
    explicit BestK(Eigen::Index k) : k_(static_cast<std::size_t>(k)) {}

    void offer(Entry e) {
        if (heap_.size() < k_) {
            heap_.push_back(e);
            std::push_heap(heap_.begin(), heap_.end());
        } else if (e < heap_.front()) {
            std::pop_heap(heap_.begin(), heap_.end());
            heap_.back() = e;
            std::push_heap(heap_.begin(), heap_.end());
        }
    }

    bool full() const { return heap_.size() == k_; }
    double worst_sq() const {
        return full() ? heap_.front().first
                      : std::numeric_limits<double>::infinity();
    }

    std::vector<Eigen::Index> sorted_indices() {
        std::sort(heap_.begin(), heap_.end());
        std::vector<Eigen::Index> out;
        out.reserve(heap_.size());
        for (const auto& e : heap_) out.push_back(e.second);
        return out;
    }

private:
    std::size_t k_;
    std::vector<Entry> heap_;
};

}  // namespace

GridIndex::GridIndex(const Eigen::Ref<const Eigen::MatrixXd>& pool)
    : pool_(pool) {
    const Eigen::Index n = pool_.rows();
    const Eigen::Index d = pool_.cols();
    if (n < 32 || d == 0) return;

    origin_ = pool_.colwise().minCoeff().transpose();
    Eigen::VectorXd extent =
        pool_.colwise().maxCoeff().transpose() - origin_;
    if ((extent.array() <= 0.0).all()) return;

    // Aim for about two points per cell along occupied dimensions.
    double target = std::pow(static_cast<double>(n) / 2.0,
                             1.0 / static_cast<double>(d));
    int per_dim = std::max(1, static_cast<int>(std::floor(target)));

    cells_per_dim_.assign(static_cast<std::size_t>(d), 1);
    cell_extent_ = Eigen::VectorXd::Ones(d);
    min_extent_ = std::numeric_limits<double>::infinity();
    std::int64_t total_cells = 1;
    for (Eigen::Index j = 0; j < d; ++j) {
        int nj = extent[j] > 0.0 ? per_dim : 1;
        cells_per_dim_[static_cast<std::size_t>(j)] = nj;
        total_cells *= nj;
        if (total_cells > 8 * n) return;  // grid unhelpfully fine, fall back
        double h = extent[j] > 0.0 ? extent[j] / nj : 1.0;
        cell_extent_[j] = h;
        if (extent[j] > 0.0) min_extent_ = std::min(min_extent_, h);
    }
    if (!std::isfinite(min_extent_) || min_extent_ <= 0.0) return;

    buckets_.assign(static_cast<std::size_t>(total_cells), {});
    std::vector<int> coords(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
        int cell = cell_of(pool_.row(i), coords);
        buckets_[static_cast<std::size_t>(cell)].push_back(i);
    }
    use_grid_ = true;
}

int GridIndex::cell_of(const Eigen::Ref<const Eigen::RowVectorXd>& point,
                       std::vector<int>& coords) const {
    const Eigen::Index d = pool_.cols();
    for (Eigen::Index j = 0; j < d; ++j) {
        int nj = cells_per_dim_[static_cast<std::size_t>(j)];
        double rel = (point[j] - origin_[j]) / cell_extent_[j];
        int c = static_cast<int>(std::floor(rel));
        coords[static_cast<std::size_t>(j)] = std::clamp(c, 0, nj - 1);
    }
    return flat_index(coords);
}

int GridIndex::flat_index(const std::vector<int>& coords) const {
    int idx = 0;
    for (std::size_t j = 0; j < coords.size(); ++j) {
        idx = idx * cells_per_dim_[j] + coords[j];
    }
    return idx;
}

std::vector<Eigen::Index> GridIndex::brute_force(
    const Eigen::Ref<const Eigen::RowVectorXd>& point, Eigen::Index k) const {
    BestK best(k);
    for (Eigen::Index i = 0; i < pool_.rows(); ++i) {
        best.offer({(pool_.row(i) - point).squaredNorm(), i});
    }
    return best.sorted_indices();
}

std::vector<Eigen::Index> GridIndex::query(
    const Eigen::Ref<const Eigen::RowVectorXd>& point, Eigen::Index k) const {
    if (k > pool_.rows()) {
        throw DataError("nearest_neighbors: k exceeds pool size");
    }
    if (k == 0) return {};
    if (!use_grid_) return brute_force(point, k);

    const std::size_t d = cells_per_dim_.size();
    std::vector<int> center(d);
    cell_of(point, center);

    int max_ring = 0;
    for (std::size_t j = 0; j < d; ++j) {
        max_ring = std::max(
            max_ring, std::max(center[j], cells_per_dim_[j] - 1 - center[j]));
    }

    BestK best(k);
    std::vector<int> coords(d);
    for (int ring = 0; ring <= max_ring; ++ring) {
        double bound = ring > 0 ? (ring - 1) * min_extent_ : 0.0;
        if (best.full() && bound * bound > best.worst_sq()) break;

        // Enumerate cells at Chebyshev distance exactly `ring` from center.
        auto visit = [&](auto&& self, std::size_t dim, bool pinned) -> void {
            if (dim == d) {
                if (ring > 0 && !pinned) return;
                int cell = flat_index(coords);
                for (Eigen::Index i : buckets_[static_cast<std::size_t>(cell)]) {
                    best.offer({(pool_.row(i) - point).squaredNorm(), i});
                }
                return;
            }
            int lo = std::max(0, center[dim] - ring);
            int hi = std::min(cells_per_dim_[dim] - 1, center[dim] + ring);
            for (int c = lo; c <= hi; ++c) {
                coords[dim] = c;
                bool at_ring = std::abs(c - center[dim]) == ring;
                self(self, dim + 1, pinned || at_ring);
            }
        };
        visit(visit, 0, ring == 0);
    }
    return best.sorted_indices();
}

}  // namespace mfmap
