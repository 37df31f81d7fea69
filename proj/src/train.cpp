#include "mfmap/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>

#include "mfmap/csv.hpp"
#include "mfmap/errors.hpp"
#include "mfmap/rng.hpp"

namespace mfmap {

namespace {

constexpr double kAdamEps = 1e-8;

// Pooled variance of all values at one fidelity, floored so the log-variance
// initialization stays finite on degenerate (constant) data.
double fidelity_variance(const Eigen::MatrixXd& values) {
    double mean = values.mean();
    double ss = (values.array() - mean).square().sum();
    double count = static_cast<double>(values.size());
    double var = count > 1.0 ? ss / (count - 1.0) : 0.0;
    return std::max(var, 1e-12);
}

void train_fidelity(HyperParams& theta, const FidelityDesign& design,
                    const ModelConfig& model, const TrainConfig& config,
                    std::vector<double>& epoch_trace,
                    std::vector<double>& batch_values,
                    std::string& diagnostic) {
    const int r = design.r;
    const Eigen::Index n_loc =
        static_cast<Eigen::Index>(design.locations.size());
    const int dim = HyperParams::params_for(r);

    Eigen::VectorXd first_moment = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd second_moment = Eigen::VectorXd::Zero(dim);
    long updates = 0;
    Eigen::VectorXd last_finite = theta.to_vector(r);

    Eigen::Index requested =
        config.batch_size == 0 ? 128 : config.batch_size;
    const Eigen::Index batch = std::min(requested, n_loc);

    double prev_epoch = 0.0;
    int stagnant = 0;
    bool stopped = false;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (stopped) {
            epoch_trace.push_back(epoch_trace.back());
            continue;
        }
        std::pair<int, int> sizes = adaptive_sizes(
            theta, r, model.epsilon, model.m_max, model.mp_max);

        Rng rng(Rng::derive(config.seed, stream::kBatching,
                            static_cast<std::uint64_t>(r),
                            static_cast<std::uint64_t>(epoch)));
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n_loc));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        for (Eigen::Index i = n_loc - 1; i > 0; --i) {
            std::uint64_t j =
                rng.uniform_index(static_cast<std::uint64_t>(i) + 1);
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(j)]);
        }

        double epoch_obj = 0.0;
        for (Eigen::Index start = 0; start < n_loc; start += batch) {
            Eigen::Index stop = std::min(n_loc, start + batch);
            std::vector<Eigen::Index> chunk(
                order.begin() + start, order.begin() + stop);
            double base = 0.0;
            Eigen::VectorXd grad;
            bool finite = true;
            try {
                grad = batch_gradient(theta, r, design, model, sizes, chunk,
                                      config.threads, &base);
            } catch (const NumericalError& err) {
                diagnostic = err.what();
                finite = false;
            }
            if (finite) {
                batch_values.push_back(base);
                epoch_obj += base;
                if (!std::isfinite(base) || !grad.allFinite()) {
                    diagnostic = "non-finite objective or gradient";
                    finite = false;
                }
            }
            if (!finite) {
                theta.from_vector(r, last_finite);
                double fill =
                    epoch_trace.empty() ? epoch_obj : epoch_trace.back();
                epoch_trace.push_back(fill);
                stopped = true;
                break;
            }

            last_finite = theta.to_vector(r);
            ++updates;
            first_moment = config.beta1 * first_moment +
                           (1.0 - config.beta1) * grad;
            second_moment =
                (config.beta2 * second_moment.array() +
                 (1.0 - config.beta2) * grad.array().square())
                    .matrix();
            double bias1 =
                1.0 - std::pow(config.beta1, static_cast<double>(updates));
            double bias2 =
                1.0 - std::pow(config.beta2, static_cast<double>(updates));
            Eigen::VectorXd step =
                ((first_moment / bias1).array() /
                 ((second_moment / bias2).array().sqrt() + kAdamEps))
                    .matrix();
            Eigen::VectorXd current = theta.to_vector(r);
            current += config.learning_rate * step;
            theta.from_vector(r, current);
        }
        if (stopped) continue;

        epoch_trace.push_back(epoch_obj);
        if (epoch > 0) {
            double denom = std::max(std::abs(prev_epoch), 1e-12);
            double improve = (epoch_obj - prev_epoch) / denom;
            if (improve < config.tolerance) {
                ++stagnant;
            } else {
                stagnant = 0;
            }
            if (stagnant >= config.patience) stopped = true;
        }
        prev_epoch = epoch_obj;
    }
}

// Rebuilds map.sizes, the per-location caches, and the final objectives from
// map.theta and the full-cap designs.
void fill_caches(TrainedMap& map,
                 const std::vector<FidelityDesign>& designs) {
    const int R = static_cast<int>(designs.size());
    map.sizes = active_sizes(map.theta, map.model);
    map.locations.assign(static_cast<std::size_t>(R), {});
    for (int r = 0; r < R; ++r) {
        const FidelityDesign& design = designs[static_cast<std::size_t>(r)];
        auto& cache = map.locations[static_cast<std::size_t>(r)];
        cache.resize(design.locations.size());
        for (std::size_t i = 0; i < design.locations.size(); ++i) {
            const LocationDesign& d = design.locations[i];
            int m_i = std::min(map.sizes[static_cast<std::size_t>(r)].first,
                               static_cast<int>(d.same.cols()));
            int mp_i = std::min(map.sizes[static_cast<std::size_t>(r)].second,
                                static_cast<int>(d.cross.cols()));
            TrainedLocation& tl = cache[i];
            tl.params =
                location_params(map.theta, map.model, r, d.ell, m_i, mp_i);
            tl.design = truncated_design(d, m_i, mp_i);
            tl.y = d.y;
            location_log_marginal(tl.params, d, &tl.term,
                                  /*keep_factor=*/true);
        }
    }
    map.final_objectives =
        total_log_marginal(map.theta, designs, map.model, map.sizes,
                           map.config.threads)
            .per_fidelity;
}

}  // namespace

void TrainConfig::validate(int num_fidelities) const {
    if (epochs < 1) throw UsageError("epochs must be >= 1");
    if (batch_size < 0) throw UsageError("batch size must be >= 1 (or 0 for automatic)");
    if (!(learning_rate >= 0.0)) throw UsageError("learning rate must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
        throw UsageError("moment decays must lie in [0, 1)");
    if (!(tolerance >= 0.0)) throw UsageError("tolerance must be >= 0");
    if (patience < 1) throw UsageError("patience must be >= 1");
    if (!enabled.empty() &&
        static_cast<int>(enabled.size()) != num_fidelities)
        throw UsageError("per-fidelity enable flags must cover every fidelity");
    if (threads < 0) throw UsageError("threads must be >= 0");
}

TrainedMap fit(const Ensemble& ens, const MultiFidelityLocations& locs,
               const ModelConfig& model, const TrainConfig& config) {
    locs.validate();
    ens.validate(locs);
    const int R = locs.num_fidelities();
    config.validate(R);
    if (ens.n == 1) {
        std::fprintf(stderr,
                     "warning: training on a single replicate; variance "
                     "estimates lean almost entirely on the prior\n");
    }

    TrainedMap map;
    map.model = model;
    map.config = config;
    map.ensemble_size = ens.n;
    map.locs = locs;
    map.ordering = conditional_maximin(locs);
    map.sets =
        build_conditioning_sets(map.ordering, locs, model.m_max, model.mp_max);
    std::vector<FidelityDesign> designs =
        build_designs(ens, locs, map.ordering, map.sets);

    std::vector<double> variances(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) {
        variances[static_cast<std::size_t>(r)] =
            fidelity_variance(ens.values[static_cast<std::size_t>(r)]);
    }
    map.theta = default_init(variances);

    map.initial_objectives =
        total_log_marginal(map.theta, designs, model, config.threads)
            .per_fidelity;

    map.trace.resize(static_cast<std::size_t>(R));
    map.batch_values.resize(static_cast<std::size_t>(R));
    map.diagnostics.assign(static_cast<std::size_t>(R), std::string());

    for (int r = 0; r < R; ++r) {
        if (!config.trains(r)) continue;
        train_fidelity(map.theta, designs[static_cast<std::size_t>(r)], model,
                       config, map.trace[static_cast<std::size_t>(r)],
                       map.batch_values[static_cast<std::size_t>(r)],
                       map.diagnostics[static_cast<std::size_t>(r)]);
    }

    fill_caches(map, designs);
    return map;
}

TrainedMap assemble_map(const Ensemble& ens,
                        const MultiFidelityLocations& locs,
                        const ModelConfig& model, const HyperParams& theta) {
    locs.validate();
    ens.validate(locs);
    const int R = locs.num_fidelities();
    if (theta.num_fidelities() != R) {
        throw DataError("hyperparameters cover " +
                        std::to_string(theta.num_fidelities()) +
                        " fidelities, data has " + std::to_string(R));
    }
    TrainedMap map;
    map.model = model;
    map.ensemble_size = ens.n;
    map.locs = locs;
    map.ordering = conditional_maximin(locs);
    map.sets =
        build_conditioning_sets(map.ordering, locs, model.m_max, model.mp_max);
    map.theta = theta;
    map.trace.resize(static_cast<std::size_t>(R));
    map.batch_values.resize(static_cast<std::size_t>(R));
    map.diagnostics.assign(static_cast<std::size_t>(R), std::string());
    std::vector<FidelityDesign> designs =
        build_designs(ens, locs, map.ordering, map.sets);
    fill_caches(map, designs);
    map.initial_objectives = map.final_objectives;
    return map;
}

std::vector<std::vector<double>> objective_trace(const TrainedMap& map) {
    std::vector<std::vector<double>> out = map.trace;
    for (auto& fidelity_trace : out) {
        double best = -std::numeric_limits<double>::infinity();
        for (double& value : fidelity_trace) {
            best = std::max(best, value);
            value = best;
        }
    }
    return out;
}

void write_trace(const std::string& path, const TrainedMap& map) {
    std::vector<std::vector<double>> smoothed = objective_trace(map);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t r = 0; r < smoothed.size(); ++r) {
        for (std::size_t e = 0; e < smoothed[r].size(); ++e) {
            rows.push_back({format_int(static_cast<long long>(r) + 1),
                            format_int(static_cast<long long>(e) + 1),
                            format_double(smoothed[r][e])});
        }
    }
    write_csv(path, {"fidelity", "epoch", "objective"}, rows);
}

}  // namespace mfmap
