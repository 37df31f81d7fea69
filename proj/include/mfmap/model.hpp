#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace mfmap {

double softplus(double x);
double softplus_inv(double y);

enum class RhoFamily { kExponential, kMatern32, kSquaredExponential };

RhoFamily parse_rho_family(const std::string& name);
std::string rho_family_name(RhoFamily family);

// Correlation at scaled distance t >= 0; rho(0) = 1 for every family.
double rho(RhoFamily family, double t);

// Unconstrained per-fidelity hyperparameters. Positivity-constrained entries
// (d2, s2, q1, qp1) pass through softplus wherever a constrained value is
// needed. Fidelity 1 has no cross-fidelity block, so qp0/qp1 are unused there
// and excluded from its optimizer vector.
struct FidelityParams {
    double d1 = 0.0;
    double d2 = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    double gamma = 0.0;
    double q0 = 0.0;
    double q1 = 0.0;
    double qp0 = 0.0;
    double qp1 = 0.0;
};

struct HyperParams {
    std::vector<FidelityParams> fid;

    int num_fidelities() const { return static_cast<int>(fid.size()); }
    // 9 per fidelity except the first, which has 7.
    int total_params() const { return 9 * num_fidelities() - 2; }
    static int params_for(int r) { return r == 0 ? 7 : 9; }

    Eigen::VectorXd to_vector(int r) const;
    void from_vector(int r, const Eigen::Ref<const Eigen::VectorXd>& v);
};

// Data-scaled defaults: d1 from the per-fidelity sample variance, moderate
// decay elsewhere (constrained d2 = 1, s2 = q1 = qp1 = 0.5).
HyperParams default_init(const std::vector<double>& sample_variance);

struct ModelConfig {
    double g = 4.0;
    double epsilon = 0.01;
    RhoFamily rho_family = RhoFamily::kMatern32;
    int m_max = 30;
    int mp_max = 30;
    // Drops the nonlinear kernel term entirely (sigma^2 = 0), turning the map
    // into the Gaussian special case used by the linear baseline.
    bool linear_only = false;
};

// Normal-inverse-gamma prior for one map component at lengthscale ell:
// alpha = 2 + 1/g^2, beta = exp(d1) * ell^softplus(d2) * (1 + 1/g^2), so the
// prior mean of d^2 is exp(d1) * ell^softplus(d2) and its sd is g times that.
struct PriorParams {
    double alpha = 0.0;
    double beta = 0.0;
};

PriorParams prior_params(const HyperParams& theta, double ell, int r, double g);

// Nonlinearity variance sigma^2_{r,i} = exp(s1) * ell^softplus(s2).
double sigma2(const HyperParams& theta, double ell, int r);

// Exponentially decaying weights: same-fidelity block exp(q0 - q1*j) for
// j = 1..m, cross block exp(qp0 - qp1*(j - m)) for j = m+1..m+mp.
Eigen::VectorXd relevance_weights(const HyperParams& theta, int r, int m,
                                  int mp);

// Largest k with weight >= epsilon, capped; 0 when even k = 1 falls below.
// Fidelity 1 always gets mp = 0.
std::pair<int, int> adaptive_sizes(const HyperParams& theta, int r,
                                   double epsilon, int m_max, int mp_max);

// Eq.-style kernel on conditioning vectors: x' diag(q) x'' plus
// sigma2 * rho(weighted distance / gamma).
double kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
              const Eigen::Ref<const Eigen::VectorXd>& xp,
              const Eigen::Ref<const Eigen::VectorXd>& q, double sigma2,
              double gamma, RhoFamily family);

}  // namespace mfmap
