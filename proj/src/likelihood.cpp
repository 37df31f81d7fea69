#include "mfmap/likelihood.hpp"

#include <cmath>
#include <string>

#include "mfmap/errors.hpp"
#include "mfmap/parallel.hpp"

namespace mfmap {

Eigen::MatrixXd ordered_values(const Ensemble& ens, const MaximinOrdering& ord,
                               int r) {
    const auto& v = ens.values[static_cast<std::size_t>(r)];
    const auto& perm = ord.perm[static_cast<std::size_t>(r)];
    Eigen::MatrixXd out(v.rows(), v.cols());
    for (Eigen::Index rank = 0; rank < v.cols(); ++rank) {
        out.col(rank) = v.col(perm[static_cast<std::size_t>(rank)]);
    }
    return out;
}

std::vector<FidelityDesign> build_designs(const Ensemble& ens,
                                          const MultiFidelityLocations& locs,
                                          const MaximinOrdering& ord,
                                          const ConditioningSets& sets) {
    ens.validate(locs);
    std::vector<FidelityDesign> designs;
    Eigen::MatrixXd prev_ordered;
    for (int r = 0; r < locs.num_fidelities(); ++r) {
        Eigen::MatrixXd Y = ordered_values(ens, ord, r);
        FidelityDesign design;
        design.r = r;
        const Eigen::Index n_loc = Y.cols();
        design.locations.resize(static_cast<std::size_t>(n_loc));
        for (Eigen::Index i = 0; i < n_loc; ++i) {
            auto& d = design.locations[static_cast<std::size_t>(i)];
            const auto& c_same =
                sets.same[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)];
            const auto& c_prev =
                sets.prev[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)];
            d.same.resize(Y.rows(), static_cast<Eigen::Index>(c_same.size()));
            for (std::size_t j = 0; j < c_same.size(); ++j) {
                d.same.col(static_cast<Eigen::Index>(j)) = Y.col(c_same[j]);
            }
            d.cross.resize(Y.rows(), static_cast<Eigen::Index>(c_prev.size()));
            for (std::size_t j = 0; j < c_prev.size(); ++j) {
                d.cross.col(static_cast<Eigen::Index>(j)) =
                    prev_ordered.col(c_prev[j]);
            }
            d.y = Y.col(i);
            d.ell = ord.floored(r, i);
        }
        designs.push_back(std::move(design));
        prev_ordered = std::move(Y);
    }
    return designs;
}

LocationParams location_params(const HyperParams& theta, const ModelConfig& cfg,
                               int r, double ell, int m_i, int mp_i) {
    LocationParams p;
    p.m = m_i;
    p.mp = mp_i;
    p.q = relevance_weights(theta, r, m_i, mp_i);
    p.linear_only = cfg.linear_only;
    if (!cfg.linear_only) {
        p.sigma2 = sigma2(theta, ell, r);
        p.gamma = std::exp(theta.fid[static_cast<std::size_t>(r)].gamma);
    }
    p.rho_family = cfg.rho_family;
    auto prior = prior_params(theta, ell, r, cfg.g);
    p.alpha = prior.alpha;
    p.beta = prior.beta;
    return p;
}

Eigen::MatrixXd truncated_design(const LocationDesign& d, int m, int mp) {
    Eigen::MatrixXd X(d.y.size(), m + mp);
    X.leftCols(m) = d.same.leftCols(m);
    X.rightCols(mp) = d.cross.leftCols(mp);
    return X;
}

namespace {

Eigen::MatrixXd rho_matrix(RhoFamily family, Eigen::MatrixXd t) {
    switch (family) {
        case RhoFamily::kExponential:
            return (-t.array()).exp().matrix();
        case RhoFamily::kMatern32: {
            Eigen::ArrayXXd s = std::sqrt(3.0) * t.array();
            return ((1.0 + s) * (-s).exp()).matrix();
        }
        case RhoFamily::kSquaredExponential:
            return (-0.5 * t.array().square()).exp().matrix();
    }
    return t;
}

}  // namespace

double location_log_marginal(const LocationParams& p, const LocationDesign& d,
                             LocationTerm* term, bool keep_factor) {
    const Eigen::Index n = d.y.size();
    const int k = p.m + p.mp;

    Eigen::MatrixXd G;
    if (k > 0) {
        Eigen::MatrixXd Xw = truncated_design(d, p.m, p.mp) *
                             p.q.cwiseSqrt().asDiagonal();
        G = Eigen::MatrixXd::Zero(n, n);
        G.selfadjointView<Eigen::Lower>().rankUpdate(Xw);
        G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
    } else {
        G = Eigen::MatrixXd::Zero(n, n);
    }

    if (!p.linear_only && p.sigma2 > 0.0) {
        Eigen::VectorXd diag = G.diagonal();
        Eigen::MatrixXd t2 =
            ((diag.replicate(1, n) + diag.transpose().replicate(n, 1)) - 2.0 * G);
        t2 = t2.cwiseMax(0.0);
        Eigen::MatrixXd t = t2.cwiseSqrt() / p.gamma;
        G.noalias() += p.sigma2 * rho_matrix(p.rho_family, std::move(t));
    }

    G.diagonal().array() += 1.0;  // unit noise variance relative to d^2
    double jitter = 1e-8 * (1.0 + G.diagonal().maxCoeff());
    G.diagonal().array() += jitter;

    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) {
        throw NumericalError(
            "degenerate kernel: Cholesky failed for a location term");
    }
    double logdet =
        2.0 * llt.matrixLLT().diagonal().array().log().sum();
    Eigen::VectorXd w = llt.matrixL().solve(d.y);
    double quad = w.squaredNorm();

    double alpha_tilde = p.alpha + 0.5 * static_cast<double>(n);
    double beta_tilde = p.beta + 0.5 * quad;
    double value = -0.5 * static_cast<double>(n) * std::log(2.0 * M_PI) -
                   0.5 * logdet + p.alpha * std::log(p.beta) -
                   alpha_tilde * std::log(beta_tilde) + std::lgamma(alpha_tilde) -
                   std::lgamma(p.alpha);

    if (term != nullptr) {
        term->value = value;
        term->logdet = logdet;
        term->quad = quad;
        term->alpha = p.alpha;
        term->beta = p.beta;
        term->alpha_tilde = alpha_tilde;
        term->beta_tilde = beta_tilde;
        if (keep_factor) {
            term->chol = llt.matrixL();
            term->ginv_y = llt.solve(d.y);
        }
    }
    return value;
}

double location_log_marginal_cheap(Eigen::Index n, double logdet, double quad,
                                   double alpha, double beta) {
    double alpha_tilde = alpha + 0.5 * static_cast<double>(n);
    double beta_tilde = beta + 0.5 * quad;
    return -0.5 * static_cast<double>(n) * std::log(2.0 * M_PI) - 0.5 * logdet +
           alpha * std::log(beta) - alpha_tilde * std::log(beta_tilde) +
           std::lgamma(alpha_tilde) - std::lgamma(alpha);
}

std::vector<std::pair<int, int>> active_sizes(const HyperParams& theta,
                                              const ModelConfig& cfg) {
    std::vector<std::pair<int, int>> sizes;
    for (int r = 0; r < theta.num_fidelities(); ++r) {
        sizes.push_back(
            adaptive_sizes(theta, r, cfg.epsilon, cfg.m_max, cfg.mp_max));
    }
    return sizes;
}

namespace {

// Location sizes are reduced to what the conditioning sets hold.
std::pair<int, int> clamp_sizes(const LocationDesign& d,
                                std::pair<int, int> sizes) {
    return {std::min<int>(sizes.first, static_cast<int>(d.same.cols())),
            std::min<int>(sizes.second, static_cast<int>(d.cross.cols()))};
}

}  // namespace

double batch_sum(const HyperParams& theta, const FidelityDesign& design,
                 const ModelConfig& cfg, std::pair<int, int> sizes,
                 const std::vector<Eigen::Index>& batch, int threads,
                 std::vector<std::pair<double, double>>* caches) {
    std::vector<double> values(batch.size());
    if (caches != nullptr) caches->resize(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t b) {
        const auto& d = design.locations[static_cast<std::size_t>(batch[b])];
        auto [m_i, mp_i] = clamp_sizes(d, sizes);
        LocationParams p =
            location_params(theta, cfg, design.r, d.ell, m_i, mp_i);
        LocationTerm term;
        values[b] = location_log_marginal(p, d, &term);
        if (caches != nullptr) {
            (*caches)[b] = {term.logdet, term.quad};
        }
    });
    double total = 0.0;
    for (double v : values) total += v;
    return total;
}

Eigen::VectorXd batch_gradient(const HyperParams& theta, int r,
                               const FidelityDesign& design,
                               const ModelConfig& cfg,
                               std::pair<int, int> sizes,
                               const std::vector<Eigen::Index>& batch,
                               int threads, double* base_value, double h_rel) {
    const int n_par = HyperParams::params_for(r);
    const double scale = static_cast<double>(design.locations.size()) /
                         static_cast<double>(batch.size());
    const Eigen::Index n = design.locations.empty()
                               ? 0
                               : design.locations.front().y.size();

    std::vector<std::pair<double, double>> caches;
    double base = batch_sum(theta, design, cfg, sizes, batch, threads, &caches);
    if (base_value != nullptr) *base_value = base;

    // Prior-scale coordinates leave G untouched: re-evaluate from caches.
    auto cheap_sum = [&](const HyperParams& perturbed) {
        double total = 0.0;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const auto& d =
                design.locations[static_cast<std::size_t>(batch[b])];
            auto prior = prior_params(perturbed, d.ell, r, cfg.g);
            total += location_log_marginal_cheap(n, caches[b].first,
                                                 caches[b].second, prior.alpha,
                                                 prior.beta);
        }
        return total;
    };

    Eigen::VectorXd base_vec = theta.to_vector(r);
    Eigen::VectorXd grad(n_par);
    for (int c = 0; c < n_par; ++c) {
        double h = h_rel * std::max(1.0, std::abs(base_vec[c]));
        HyperParams up = theta;
        HyperParams down = theta;
        Eigen::VectorXd v = base_vec;
        v[c] = base_vec[c] + h;
        up.from_vector(r, v);
        v[c] = base_vec[c] - h;
        down.from_vector(r, v);

        double f_up, f_down;
        if (c == 0 || c == 1) {
            f_up = cheap_sum(up);
            f_down = cheap_sum(down);
        } else {
            f_up = batch_sum(up, design, cfg, sizes, batch, threads);
            f_down = batch_sum(down, design, cfg, sizes, batch, threads);
        }
        grad[c] = scale * (f_up - f_down) / (2.0 * h);
        if (!std::isfinite(grad[c])) {
            throw NumericalError("non-finite gradient for fidelity " +
                                 std::to_string(r + 1) + " coordinate " +
                                 std::to_string(c));
        }
    }
    return grad;
}

TotalLogMarginal total_log_marginal(
    const HyperParams& theta, const std::vector<FidelityDesign>& designs,
    const ModelConfig& cfg, const std::vector<std::pair<int, int>>& sizes,
    int threads) {
    TotalLogMarginal out;
    out.per_fidelity = Eigen::VectorXd::Zero(
        static_cast<Eigen::Index>(designs.size()));
    for (std::size_t r = 0; r < designs.size(); ++r) {
        std::vector<Eigen::Index> all(designs[r].locations.size());
        for (std::size_t i = 0; i < all.size(); ++i) {
            all[i] = static_cast<Eigen::Index>(i);
        }
        out.per_fidelity[static_cast<Eigen::Index>(r)] =
            batch_sum(theta, designs[r], cfg, sizes[r], all, threads);
    }
    out.total = out.per_fidelity.sum();
    return out;
}

TotalLogMarginal total_log_marginal(const HyperParams& theta,
                                    const std::vector<FidelityDesign>& designs,
                                    const ModelConfig& cfg, int threads) {
    return total_log_marginal(theta, designs, cfg, active_sizes(theta, cfg),
                              threads);
}

std::vector<Eigen::VectorXd> grad_log_marginal(
    const HyperParams& theta, const std::vector<FidelityDesign>& designs,
    const ModelConfig& cfg, const std::vector<std::pair<int, int>>& sizes,
    int threads, double h_rel) {
    std::vector<Eigen::VectorXd> grads;
    for (std::size_t r = 0; r < designs.size(); ++r) {
        std::vector<Eigen::Index> all(designs[r].locations.size());
        for (std::size_t i = 0; i < all.size(); ++i) {
            all[i] = static_cast<Eigen::Index>(i);
        }
        grads.push_back(batch_gradient(theta, static_cast<int>(r), designs[r],
                                       cfg, sizes[r], all, threads, nullptr,
                                       h_rel));
    }
    return grads;
}

}  // namespace mfmap
