#include "mfmap/ordering.hpp"

#include <algorithm>
#include <limits>

#include "mfmap/csv.hpp"
#include "mfmap/grid_index.hpp"

namespace mfmap {

MaximinOrdering conditional_maximin(const MultiFidelityLocations& locs) {
    locs.validate();
    const int R = locs.num_fidelities();
    MaximinOrdering ord;
    ord.perm.resize(static_cast<std::size_t>(R));
    ord.rank_of.resize(static_cast<std::size_t>(R));
    ord.lengthscales.resize(static_cast<std::size_t>(R));
    double diameter = locs.bbox_diameter();
    ord.lengthscale_floor = diameter > 0.0 ? 1e-9 * diameter : 1e-9;

    Eigen::Index lower_count = 0;
    for (int r = 0; r < R; ++r) {
        const Eigen::MatrixXd& pts = locs.fidelities[static_cast<std::size_t>(r)];
        const Eigen::Index n = pts.rows();
        auto& perm = ord.perm[static_cast<std::size_t>(r)];
        auto& rank_of = ord.rank_of[static_cast<std::size_t>(r)];
        auto& ell = ord.lengthscales[static_cast<std::size_t>(r)];
        perm.reserve(static_cast<std::size_t>(n));
        rank_of.assign(static_cast<std::size_t>(n), -1);
        ell.resize(n);

        // Distance from each candidate to everything already ordered.
        Eigen::VectorXd dist(n);
        Eigen::Index first;
        if (r == 0) {
            Eigen::RowVectorXd centroid = pts.colwise().mean();
            first = 0;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < n; ++i) {
                double d = (pts.row(i) - centroid).norm();
                if (d < best) {
                    best = d;
                    first = i;
                }
            }
            dist.setConstant(std::numeric_limits<double>::infinity());
            ell[0] = diameter;
        } else {
            Eigen::MatrixXd lower(lower_count, locs.dim);
            Eigen::Index row = 0;
            for (int q = 0; q < r; ++q) {
                const auto& f = locs.fidelities[static_cast<std::size_t>(q)];
                lower.middleRows(row, f.rows()) = f;
                row += f.rows();
            }
            GridIndex index(lower);
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::Index nn = index.query(pts.row(i), 1)[0];
                dist[i] = (pts.row(i) - lower.row(nn)).norm();
            }
            first = 0;
            for (Eigen::Index i = 1; i < n; ++i) {
                if (dist[i] > dist[first]) first = i;
            }
            ell[0] = dist[first];
        }

        perm.push_back(first);
        rank_of[static_cast<std::size_t>(first)] = 0;
        dist[first] = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i == first) continue;
            dist[i] = std::min(dist[i], (pts.row(i) - pts.row(first)).norm());
        }

        for (Eigen::Index k = 1; k < n; ++k) {
            Eigen::Index pick = 0;
            double best = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (rank_of[static_cast<std::size_t>(i)] >= 0) continue;
                if (dist[i] > best) {
                    best = dist[i];
                    pick = i;
                }
            }
            ell[k] = best;
            perm.push_back(pick);
            rank_of[static_cast<std::size_t>(pick)] = k;
            dist[pick] = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (rank_of[static_cast<std::size_t>(i)] >= 0) continue;
                dist[i] = std::min(dist[i], (pts.row(i) - pts.row(pick)).norm());
            }
        }
        lower_count += n;
    }
    return ord;
}

Eigen::MatrixXd ordered_locations(const MultiFidelityLocations& locs,
                                  const MaximinOrdering& ord, int r) {
    const auto& pts = locs.fidelities[static_cast<std::size_t>(r)];
    const auto& perm = ord.perm[static_cast<std::size_t>(r)];
    Eigen::MatrixXd out(pts.rows(), pts.cols());
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        out.row(i) = pts.row(perm[static_cast<std::size_t>(i)]);
    }
    return out;
}

ConditioningSets build_conditioning_sets(const MaximinOrdering& ord,
                                         const MultiFidelityLocations& locs,
                                         int m_max, int mp_max) {
    const int R = locs.num_fidelities();
    ConditioningSets sets;
    sets.same.resize(static_cast<std::size_t>(R));
    sets.prev.resize(static_cast<std::size_t>(R));

    Eigen::MatrixXd prev_ordered;
    for (int r = 0; r < R; ++r) {
        Eigen::MatrixXd pts = ordered_locations(locs, ord, r);
        const Eigen::Index n = pts.rows();
        auto& same_r = sets.same[static_cast<std::size_t>(r)];
        auto& prev_r = sets.prev[static_cast<std::size_t>(r)];
        same_r.resize(static_cast<std::size_t>(n));
        prev_r.resize(static_cast<std::size_t>(n));

        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index m = std::min<Eigen::Index>(i, m_max);
            if (m > 0) {
                same_r[static_cast<std::size_t>(i)] =
                    nearest_neighbors(pts.row(i), pts.topRows(i), m);
            }
        }
        if (r > 0) {
            GridIndex index(prev_ordered);
            Eigen::Index mp = std::min<Eigen::Index>(prev_ordered.rows(), mp_max);
            for (Eigen::Index i = 0; i < n; ++i) {
                prev_r[static_cast<std::size_t>(i)] = index.query(pts.row(i), mp);
            }
        }
        prev_ordered = std::move(pts);
    }
    return sets;
}

void write_ordering(const std::string& path, const MaximinOrdering& ord) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t r = 0; r < ord.perm.size(); ++r) {
        for (std::size_t i = 0; i < ord.perm[r].size(); ++i) {
            rows.push_back({format_int(static_cast<std::int64_t>(r) + 1),
                            format_int(ord.perm[r][i] + 1),
                            format_int(static_cast<std::int64_t>(i) + 1),
                            format_double(ord.lengthscales[r][
                                static_cast<Eigen::Index>(i)])});
        }
    }
    write_csv(path, {"fidelity", "orig_index", "rank", "lengthscale"}, rows);
}

}  // namespace mfmap
