#include "mfmap/predict.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "mfmap/csv.hpp"
#include "mfmap/errors.hpp"
#include "mfmap/likelihood.hpp"
#include "mfmap/parallel.hpp"
#include "mfmap/rng.hpp"

namespace mfmap {

namespace {

// Kernel vector between xstar and the n cached training conditioning rows.
Eigen::VectorXd kernel_vector(const TrainedLocation& tl,
                              const Eigen::Ref<const Eigen::VectorXd>& xstar) {
    const LocationParams& p = tl.params;
    Eigen::VectorXd qx = p.q.cwiseProduct(xstar);
    Eigen::VectorXd lin = tl.design * qx;
    if (p.linear_only || p.sigma2 == 0.0) return lin;

    Eigen::VectorXd row_sq = tl.design.array().square().matrix() * p.q;
    double self = xstar.dot(qx);
    Eigen::ArrayXd dist =
        (row_sq.array() + self - 2.0 * lin.array()).max(0.0).sqrt() / p.gamma;
    Eigen::VectorXd out = lin;
    for (Eigen::Index j = 0; j < out.size(); ++j) {
        out[j] += p.sigma2 * rho(p.rho_family, dist[j]);
    }
    return out;
}

double self_kernel(const TrainedLocation& tl,
                   const Eigen::Ref<const Eigen::VectorXd>& xstar) {
    const LocationParams& p = tl.params;
    double value = xstar.dot(p.q.cwiseProduct(xstar));
    if (!p.linear_only) value += p.sigma2;
    return value;
}

// Conditioning vector for ordered location (r, rank) assembled from values
// already laid out in rank order per fidelity.
Eigen::VectorXd conditioning_vector(
    const TrainedMap& map, int r, Eigen::Index rank,
    const std::vector<Eigen::VectorXd>& ordered) {
    const TrainedLocation& tl =
        map.locations[static_cast<std::size_t>(r)][static_cast<std::size_t>(
            rank)];
    const auto& same =
        map.sets.same[static_cast<std::size_t>(r)][static_cast<std::size_t>(
            rank)];
    const auto& prev =
        map.sets.prev[static_cast<std::size_t>(r)][static_cast<std::size_t>(
            rank)];
    Eigen::VectorXd x(tl.params.m + tl.params.mp);
    for (int j = 0; j < tl.params.m; ++j) {
        x[j] = ordered[static_cast<std::size_t>(r)][same[static_cast<
            std::size_t>(j)]];
    }
    for (int j = 0; j < tl.params.mp; ++j) {
        x[tl.params.m + j] = ordered[static_cast<std::size_t>(r - 1)][prev[
            static_cast<std::size_t>(j)]];
    }
    return x;
}

std::vector<Eigen::VectorXd> replicate_in_rank_order(
    const TrainedMap& map, const std::vector<Eigen::VectorXd>& replicate) {
    const int R = map.locs.num_fidelities();
    if (static_cast<int>(replicate.size()) != R) {
        throw DataError("replicate has " + std::to_string(replicate.size()) +
                        " fidelities, expected " + std::to_string(R));
    }
    std::vector<Eigen::VectorXd> ordered(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) {
        const Eigen::VectorXd& values = replicate[static_cast<std::size_t>(r)];
        const auto& perm = map.ordering.perm[static_cast<std::size_t>(r)];
        if (values.size() != static_cast<Eigen::Index>(perm.size())) {
            throw DataError("replicate fidelity " + std::to_string(r + 1) +
                            " has " + std::to_string(values.size()) +
                            " values, expected " +
                            std::to_string(perm.size()));
        }
        Eigen::VectorXd v(values.size());
        for (std::size_t rank = 0; rank < perm.size(); ++rank) {
            v[static_cast<Eigen::Index>(rank)] = values[perm[rank]];
        }
        ordered[static_cast<std::size_t>(r)] = std::move(v);
    }
    return ordered;
}

// One replicate of a sequential draw; fidelities below r0 are already filled
// in `ordered` and are left untouched.
void draw_replicate(const TrainedMap& map, int r0, Rng& rng,
                    std::vector<Eigen::VectorXd>& ordered) {
    const int R = map.locs.num_fidelities();
    for (int r = r0; r < R; ++r) {
        const auto& cache = map.locations[static_cast<std::size_t>(r)];
        Eigen::VectorXd& values = ordered[static_cast<std::size_t>(r)];
        values.resize(static_cast<Eigen::Index>(cache.size()));
        for (Eigen::Index rank = 0;
             rank < static_cast<Eigen::Index>(cache.size()); ++rank) {
            Eigen::VectorXd x = conditioning_vector(map, r, rank, ordered);
            PredictiveComponent pc = predictive_component(map, r, rank, x);
            values[rank] = pc.location + pc.scale * rng.student_t(pc.dof);
        }
    }
}

Ensemble sample_impl(const TrainedMap& map,
                     const std::vector<Eigen::VectorXd>& given,
                     Eigen::Index count, std::uint64_t seed, int threads) {
    const int R = map.locs.num_fidelities();
    const int r0 = static_cast<int>(given.size());
    if (r0 > R) {
        throw DataError("conditioning on " + std::to_string(r0) +
                        " fidelities, model has " + std::to_string(R));
    }
    if (count < 1) throw DataError("sample count must be >= 1");
    std::vector<Eigen::VectorXd> base(static_cast<std::size_t>(R));
    for (int r = 0; r < r0; ++r) {
        const Eigen::VectorXd& g = given[static_cast<std::size_t>(r)];
        if (g.size() != map.locs.size(r)) {
            throw DataError("conditioning fidelity " + std::to_string(r + 1) +
                            " has " + std::to_string(g.size()) +
                            " values, expected " +
                            std::to_string(map.locs.size(r)));
        }
        if (!g.allFinite()) {
            throw DataError("conditioning fidelity " + std::to_string(r + 1) +
                            " contains non-finite values");
        }
        const auto& perm = map.ordering.perm[static_cast<std::size_t>(r)];
        Eigen::VectorXd v(g.size());
        for (std::size_t rank = 0; rank < perm.size(); ++rank) {
            v[static_cast<Eigen::Index>(rank)] = g[perm[rank]];
        }
        base[static_cast<std::size_t>(r)] = std::move(v);
    }

    Ensemble out;
    out.n = count;
    for (int r = 0; r < R; ++r) {
        out.values.emplace_back(count, map.locs.size(r));
    }

    int use = resolve_threads(threads);
    parallel_for(count, use, [&](Eigen::Index k) {
        std::vector<Eigen::VectorXd> ordered = base;
        Rng rng(Rng::derive(seed, stream::kSampling,
                            static_cast<std::uint64_t>(k)));
        draw_replicate(map, r0, rng, ordered);
        for (int r = 0; r < R; ++r) {
            const auto& perm = map.ordering.perm[static_cast<std::size_t>(r)];
            for (std::size_t rank = 0; rank < perm.size(); ++rank) {
                out.values[static_cast<std::size_t>(r)](
                    k, perm[rank]) =
                    ordered[static_cast<std::size_t>(r)][static_cast<
                        Eigen::Index>(rank)];
            }
        }
    });
    return out;
}

}  // namespace

PredictiveComponent predictive_component(
    const TrainedMap& map, int r, Eigen::Index rank,
    const Eigen::Ref<const Eigen::VectorXd>& xstar) {
    const TrainedLocation& tl =
        map.locations[static_cast<std::size_t>(r)][static_cast<std::size_t>(
            rank)];
    if (xstar.size() != tl.params.m + tl.params.mp) {
        throw DataError("conditioning vector has " +
                        std::to_string(xstar.size()) + " entries, expected " +
                        std::to_string(tl.params.m + tl.params.mp));
    }
    Eigen::VectorXd kstar = kernel_vector(tl, xstar);
    double location = kstar.dot(tl.term.ginv_y);
    Eigen::VectorXd half =
        tl.term.chol.triangularView<Eigen::Lower>().solve(kstar);
    double kss = self_kernel(tl, xstar);
    double spread = 1.0 + kss - half.squaredNorm();
    if (spread < 1e-12) {
        if (spread < -1e-6 * (1.0 + kss)) {
            throw NumericalError("negative predictive variance at fidelity " +
                                 std::to_string(r + 1) + ", rank " +
                                 std::to_string(rank + 1));
        }
        std::fprintf(stderr,
                     "warning: predictive variance clamped at fidelity %d, "
                     "rank %lld\n",
                     r + 1, static_cast<long long>(rank + 1));
        spread = 1e-12;
    }
    PredictiveComponent pc;
    pc.location = location;
    pc.scale =
        std::sqrt(tl.term.beta_tilde / tl.term.alpha_tilde * spread);
    pc.dof = 2.0 * tl.term.alpha_tilde;
    return pc;
}

double component_log_density(const PredictiveComponent& pc, double y) {
    double z = (y - pc.location) / pc.scale;
    return std::lgamma(0.5 * (pc.dof + 1.0)) - std::lgamma(0.5 * pc.dof) -
           0.5 * std::log(pc.dof * M_PI) - std::log(pc.scale) -
           0.5 * (pc.dof + 1.0) * std::log1p(z * z / pc.dof);
}

ScoreReport log_score(const TrainedMap& map, const Ensemble& test,
                      int threads) {
    test.validate(map.locs);
    const int R = map.locs.num_fidelities();

    std::vector<Eigen::MatrixXd> ordered(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) {
        ordered[static_cast<std::size_t>(r)] =
            ordered_values(test, map.ordering, r);
    }

    ScoreReport report;
    report.per_replicate_fidelity = Eigen::MatrixXd::Zero(test.n, R);

    int use = resolve_threads(threads);
    parallel_for(test.n, use, [&](Eigen::Index k) {
        std::vector<Eigen::VectorXd> values(static_cast<std::size_t>(R));
        for (int r = 0; r < R; ++r) {
            values[static_cast<std::size_t>(r)] =
                ordered[static_cast<std::size_t>(r)].row(k).transpose();
        }
        for (int r = 0; r < R; ++r) {
            const auto& cache = map.locations[static_cast<std::size_t>(r)];
            double total = 0.0;
            for (Eigen::Index rank = 0;
                 rank < static_cast<Eigen::Index>(cache.size()); ++rank) {
                Eigen::VectorXd x = conditioning_vector(map, r, rank, values);
                PredictiveComponent pc =
                    predictive_component(map, r, rank, x);
                double logp = component_log_density(
                    pc, values[static_cast<std::size_t>(r)][rank]);
                if (!std::isfinite(logp)) {
                    throw NumericalError(
                        "non-finite predictive density at fidelity " +
                        std::to_string(r + 1) + ", rank " +
                        std::to_string(rank + 1));
                }
                total -= logp;
            }
            report.per_replicate_fidelity(k, r) = total;
        }
    });

    report.per_replicate = report.per_replicate_fidelity.rowwise().sum();
    report.per_fidelity_mean =
        report.per_replicate_fidelity.colwise().mean().transpose();
    report.mean = report.per_replicate.mean();
    return report;
}

void write_scores(const std::string& path, const ScoreReport& report) {
    std::vector<std::vector<std::string>> rows;
    for (Eigen::Index k = 0; k < report.per_replicate_fidelity.rows(); ++k) {
        for (Eigen::Index r = 0; r < report.per_replicate_fidelity.cols();
             ++r) {
            rows.push_back({format_int(k + 1), format_int(r + 1),
                            format_double(report.per_replicate_fidelity(
                                k, r))});
        }
    }
    write_csv(path, {"replicate", "fidelity", "neg_log_score"}, rows);
}

Eigen::VectorXd forward_map(const TrainedMap& map,
                            const std::vector<Eigen::VectorXd>& replicate) {
    std::vector<Eigen::VectorXd> ordered =
        replicate_in_rank_order(map, replicate);
    const int R = map.locs.num_fidelities();
    Eigen::VectorXd z(map.locs.total());
    Eigen::Index offset = 0;
    for (int r = 0; r < R; ++r) {
        const auto& cache = map.locations[static_cast<std::size_t>(r)];
        for (Eigen::Index rank = 0;
             rank < static_cast<Eigen::Index>(cache.size()); ++rank) {
            const TrainedLocation& tl =
                cache[static_cast<std::size_t>(rank)];
            Eigen::VectorXd x = conditioning_vector(map, r, rank, ordered);
            double location = kernel_vector(tl, x).dot(tl.term.ginv_y);
            double dhat =
                std::sqrt(tl.term.beta_tilde / (tl.term.alpha_tilde - 1.0));
            z[offset + rank] =
                (ordered[static_cast<std::size_t>(r)][rank] - location) /
                dhat;
        }
        offset += static_cast<Eigen::Index>(cache.size());
    }
    return z;
}

Ensemble sample_joint(const TrainedMap& map, Eigen::Index count,
                      std::uint64_t seed, int threads) {
    return sample_impl(map, {}, count, seed, threads);
}

Ensemble sample_conditional(const TrainedMap& map,
                            const std::vector<Eigen::VectorXd>& given,
                            Eigen::Index count, std::uint64_t seed,
                            int threads) {
    return sample_impl(map, given, count, seed, threads);
}

}  // namespace mfmap
