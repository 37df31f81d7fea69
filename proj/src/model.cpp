#include "mfmap/model.hpp"

#include <cmath>

#include "mfmap/errors.hpp"

namespace mfmap {

double softplus(double x) {
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

double softplus_inv(double y) {
    if (y > 30.0) return y;
    if (y <= 0.0) throw DataError("softplus_inv requires a positive argument");
    return y + std::log1p(-std::exp(-y));
}

RhoFamily parse_rho_family(const std::string& name) {
    if (name == "exponential") return RhoFamily::kExponential;
    if (name == "matern32") return RhoFamily::kMatern32;
    if (name == "squared-exponential") return RhoFamily::kSquaredExponential;
    throw UsageError("unknown correlation family '" + name +
                     "' (expected exponential, matern32, or "
                     "squared-exponential)");
}

std::string rho_family_name(RhoFamily family) {
    switch (family) {
        case RhoFamily::kExponential: return "exponential";
        case RhoFamily::kMatern32: return "matern32";
        case RhoFamily::kSquaredExponential: return "squared-exponential";
    }
    return "matern32";
}

double rho(RhoFamily family, double t) {
    switch (family) {
        case RhoFamily::kExponential: return std::exp(-t);
        case RhoFamily::kMatern32: {
            double s = std::sqrt(3.0) * t;
            return (1.0 + s) * std::exp(-s);
        }
        case RhoFamily::kSquaredExponential: return std::exp(-0.5 * t * t);
    }
    return 0.0;
}

Eigen::VectorXd HyperParams::to_vector(int r) const {
    const auto& f = fid[static_cast<std::size_t>(r)];
    Eigen::VectorXd v(params_for(r));
    v[0] = f.d1;
    v[1] = f.d2;
    v[2] = f.s1;
    v[3] = f.s2;
    v[4] = f.gamma;
    v[5] = f.q0;
    v[6] = f.q1;
    if (r > 0) {
        v[7] = f.qp0;
        v[8] = f.qp1;
    }
    return v;
}

void HyperParams::from_vector(int r, const Eigen::Ref<const Eigen::VectorXd>& v) {
    auto& f = fid[static_cast<std::size_t>(r)];
    f.d1 = v[0];
    f.d2 = v[1];
    f.s1 = v[2];
    f.s2 = v[3];
    f.gamma = v[4];
    f.q0 = v[5];
    f.q1 = v[6];
    if (r > 0) {
        f.qp0 = v[7];
        f.qp1 = v[8];
    }
}

HyperParams default_init(const std::vector<double>& sample_variance) {
    HyperParams theta;
    for (double var : sample_variance) {
        FidelityParams f;
        f.d1 = std::log(var);
        f.d2 = softplus_inv(1.0);
        f.s1 = -1.0;
        f.s2 = softplus_inv(0.5);
        f.gamma = 0.0;
        f.q0 = 0.0;
        f.q1 = softplus_inv(0.5);
        f.qp0 = 0.0;
        f.qp1 = softplus_inv(0.5);
        theta.fid.push_back(f);
    }
    return theta;
}

PriorParams prior_params(const HyperParams& theta, double ell, int r,
                         double g) {
    if (ell <= 0.0) {
        throw DataError("prior_params requires a positive lengthscale");
    }
    const auto& f = theta.fid[static_cast<std::size_t>(r)];
    PriorParams p;
    double inv_g2 = 1.0 / (g * g);
    p.alpha = 2.0 + inv_g2;
    p.beta = std::exp(f.d1) * std::pow(ell, softplus(f.d2)) * (1.0 + inv_g2);
    return p;
}

double sigma2(const HyperParams& theta, double ell, int r) {
    const auto& f = theta.fid[static_cast<std::size_t>(r)];
    return std::exp(f.s1) * std::pow(ell, softplus(f.s2));
}

Eigen::VectorXd relevance_weights(const HyperParams& theta, int r, int m,
                                  int mp) {
    const auto& f = theta.fid[static_cast<std::size_t>(r)];
    Eigen::VectorXd q(m + mp);
    double decay = softplus(f.q1);
    for (int j = 1; j <= m; ++j) {
        q[j - 1] = std::exp(f.q0 - decay * j);
    }
    double cross_decay = softplus(f.qp1);
    for (int j = 1; j <= mp; ++j) {
        q[m + j - 1] = std::exp(f.qp0 - cross_decay * j);
    }
    return q;
}

namespace {

int scan_size(double level, double decay, double epsilon, int cap) {
    if (epsilon <= 0.0) return cap;
    int m = 0;
    for (int k = 1; k <= cap; ++k) {
        if (std::exp(level - decay * k) >= epsilon) {
            m = k;
        } else {
            break;
        }
    }
    return m;
}

}  // namespace

std::pair<int, int> adaptive_sizes(const HyperParams& theta, int r,
                                   double epsilon, int m_max, int mp_max) {
    const auto& f = theta.fid[static_cast<std::size_t>(r)];
    int m = scan_size(f.q0, softplus(f.q1), epsilon, m_max);
    int mp = r == 0 ? 0 : scan_size(f.qp0, softplus(f.qp1), epsilon, mp_max);
    return {m, mp};
}

double kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
              const Eigen::Ref<const Eigen::VectorXd>& xp,
              const Eigen::Ref<const Eigen::VectorXd>& q, double sigma2,
              double gamma, RhoFamily family) {
    if (x.size() != q.size() || xp.size() != q.size()) {
        throw DataError("kernel: conditioning vector length mismatch");
    }
    double linear = x.cwiseProduct(q).dot(xp);
    double dist2 = (x - xp).cwiseProduct(q).dot(x - xp);
    double t = std::sqrt(std::max(dist2, 0.0)) / gamma;
    return linear + sigma2 * rho(family, t);
}

}  // namespace mfmap
