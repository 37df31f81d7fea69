#pragma once

// Numeric oracles shared by the unit suites and the acceptance harness:
// adaptive quadrature plus closed-form reference densities. Everything here
// is deliberately independent of the library's internals.

#include <Eigen/Dense>
#include <cmath>
#include <functional>

namespace oracles {

namespace detail {

inline double simpson(double fa, double fm, double fb, double h) {
    return h / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adapt(const std::function<double(double)>& f, double a, double fa,
                    double m, double fm, double b, double fb, double whole,
                    double tol, int depth) {
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = f(lm);
    double frm = f(rm);
    double left = simpson(fa, flm, fm, m - a);
    double right = simpson(fm, frm, fb, b - m);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adapt(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
           adapt(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol, int depth = 48) {
    double m = 0.5 * (a + b);
    double fa = f(a);
    double fm = f(m);
    double fb = f(b);
    double whole = detail::simpson(fa, fm, fb, b - a);
    return detail::adapt(f, a, fa, m, fm, b, fb, whole, tol, depth);
}

// Integral of f over the whole real line via x = tan(u).
inline double integrate_line(const std::function<double(double)>& f,
                             double tol) {
    auto g = [&](double u) {
        double x = std::tan(u);
        double sec2 = 1.0 + x * x;
        double v = f(x) * sec2;
        return std::isfinite(v) ? v : 0.0;
    };
    const double half_pi = std::asin(1.0);
    return adaptive_simpson(g, -half_pi + 1e-12, half_pi - 1e-12, tol);
}

// Integral of f over (0, inf) via x = tan(u).
inline double integrate_half_line(const std::function<double(double)>& f,
                                  double tol) {
    auto g = [&](double u) {
        double x = std::tan(u);
        double sec2 = 1.0 + x * x;
        double v = f(x) * sec2;
        return std::isfinite(v) ? v : 0.0;
    };
    const double half_pi = std::asin(1.0);
    return adaptive_simpson(g, 1e-14, half_pi - 1e-12, tol);
}

inline double mvn_logpdf(const Eigen::VectorXd& y, const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    Eigen::VectorXd w = llt.matrixL().solve(y);
    return -0.5 * static_cast<double>(y.size()) * std::log(2.0 * M_PI) -
           0.5 * logdet - 0.5 * w.squaredNorm();
}

inline double inverse_gamma_pdf(double x, double alpha, double beta) {
    if (x <= 0.0) return 0.0;
    return std::exp(alpha * std::log(beta) - std::lgamma(alpha) -
                    (alpha + 1.0) * std::log(x) - beta / x);
}

inline double student_t_logpdf(double x, double dof, double loc, double scale) {
    double z = (x - loc) / scale;
    return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
           0.5 * std::log(dof * M_PI) - std::log(scale) -
           0.5 * (dof + 1.0) * std::log1p(z * z / dof);
}

}  // namespace oracles
