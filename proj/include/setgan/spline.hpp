#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace setgan {

/// Natural cubic spline interpolating (knots, values); second derivatives are
/// zero at the end knots and evaluation extrapolates linearly outside the knot
/// range. With two knots this degenerates to a straight line.
class NaturalCubicSpline {
public:
    NaturalCubicSpline() = default;

    NaturalCubicSpline(std::vector<double> knots, std::vector<double> values)
        : t_(std::move(knots)), y_(std::move(values)) {
        const std::size_t k = t_.size();
        if (k < 2) throw std::invalid_argument("NaturalCubicSpline: needs >= 2 knots");
        if (y_.size() != k)
            throw std::invalid_argument("NaturalCubicSpline: knot/value count mismatch");
        for (std::size_t i = 1; i < k; ++i)
            if (!(t_[i] > t_[i - 1]))
                throw std::invalid_argument("NaturalCubicSpline: knots must be strictly increasing");

        m2_.assign(k, 0.0);
        if (k > 2) solve_second_derivatives();
    }

    double operator()(double x) const {
        const std::size_t k = t_.size();
        if (x <= t_.front()) {
            const double h = t_[1] - t_[0];
            const double slope = (y_[1] - y_[0]) / h - h * m2_[1] / 6.0;
            return y_[0] + slope * (x - t_[0]);
        }
        if (x >= t_.back()) {
            const double h = t_[k - 1] - t_[k - 2];
            const double slope = (y_[k - 1] - y_[k - 2]) / h + h * m2_[k - 2] / 6.0;
            return y_[k - 1] + slope * (x - t_[k - 1]);
        }
        const std::size_t i = interval_of(x);
        const double h = t_[i + 1] - t_[i];
        const double a = (t_[i + 1] - x) / h;
        const double b = (x - t_[i]) / h;
        return a * y_[i] + b * y_[i + 1] +
               ((a * a * a - a) * m2_[i] + (b * b * b - b) * m2_[i + 1]) * h * h / 6.0;
    }

    const std::vector<double>& knots() const { return t_; }
    const std::vector<double>& knot_values() const { return y_; }

private:
    std::size_t interval_of(double x) const {
        const auto it = std::upper_bound(t_.begin(), t_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - t_.begin());
        return std::clamp<std::size_t>(i, 1, t_.size() - 1) - 1;
    }

    void solve_second_derivatives() {
        const std::size_t k = t_.size();
        const std::size_t n = k - 2;  // interior unknowns
        std::vector<double> diag(n), lower(n), upper(n), rhs(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double h0 = t_[i + 1] - t_[i];
            const double h1 = t_[i + 2] - t_[i + 1];
            lower[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            upper[i] = h1 / 6.0;
            rhs[i] = (y_[i + 2] - y_[i + 1]) / h1 - (y_[i + 1] - y_[i]) / h0;
        }
        // Thomas algorithm
        for (std::size_t i = 1; i < n; ++i) {
            const double w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        m2_[n] = rhs[n - 1] / diag[n - 1];
        for (std::size_t i = n - 1; i-- > 0;)
            m2_[i + 1] = (rhs[i] - upper[i] * m2_[i + 2]) / diag[i];
    }

    std::vector<double> t_;
    std::vector<double> y_;
    std::vector<double> m2_;
};

/// Evenly spaced knot vector over [lo, hi], endpoints included.
inline std::vector<double> uniform_knots(double lo, double hi, std::size_t count) {
    if (count < 2) throw std::invalid_argument("uniform_knots: count must be >= 2");
    if (!(hi > lo)) throw std::invalid_argument("uniform_knots: hi must exceed lo");
    std::vector<double> t(count);
    for (std::size_t i = 0; i < count; ++i)
        t[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return t;
}

/// Least-squares fit of a natural cubic spline with the given knots to sample
/// points (xs, ys). Because the fit is a projection onto the spline space it is
/// idempotent, and it reproduces constants and straight lines exactly.
inline NaturalCubicSpline fit_natural_spline_ls(const std::vector<double>& xs,
                                                const std::vector<double>& ys,
                                                const std::vector<double>& knots) {
    if (xs.size() != ys.size())
        throw std::invalid_argument("fit_natural_spline_ls: sample length mismatch");
    const std::size_t m = xs.size();
    const std::size_t k = knots.size();
    if (m < k)
        throw std::invalid_argument("fit_natural_spline_ls: more basis functions than samples");

    // cardinal basis: column j is the natural spline through the j-th unit vector
    std::vector<NaturalCubicSpline> basis;
    basis.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> e(k, 0.0);
        e[j] = 1.0;
        basis.emplace_back(knots, std::move(e));
    }

    Eigen::MatrixXd a(m, k);
    Eigen::VectorXd y(m);
    for (std::size_t i = 0; i < m; ++i) {
        y(static_cast<Eigen::Index>(i)) = ys[i];
        for (std::size_t j = 0; j < k; ++j)
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = basis[j](xs[i]);
    }

    // normal equations with a tiny scale-relative ridge; keeps clustered-sample
    // fits solvable without measurably biasing well-posed ones
    Eigen::MatrixXd ata = a.transpose() * a;
    const double ridge = 1e-12 * (ata.trace() / static_cast<double>(k) + 1.0);
    ata.diagonal().array() += ridge;
    Eigen::VectorXd g = ata.ldlt().solve(a.transpose() * y);

    std::vector<double> fitted(k);
    for (std::size_t j = 0; j < k; ++j) fitted[j] = g(static_cast<Eigen::Index>(j));
    return NaturalCubicSpline(knots, std::move(fitted));
}

}  // namespace setgan
