#include "homsim/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "homsim/common.hpp"
#include "homsim/rng.hpp"

namespace homsim {

double FitResult::param(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return params[static_cast<Eigen::Index>(i)];
    throw InternalError("FitResult: unknown parameter " + name);
}

double FitResult::sigma(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return sigmas[static_cast<Eigen::Index>(i)];
    throw InternalError("FitResult: unknown parameter " + name);
}

namespace {

struct Problem {
    const ModelFn* model;
    const FitData* data;
    std::vector<double> lo, hi;
    const ModelJacFn* jac;
};

Eigen::VectorXd residuals(const Problem& pr, const Eigen::VectorXd& p) {
    const auto& d = *pr.data;
    const int m = static_cast<int>(d.x.size());
    Eigen::VectorXd r(m);
    const std::span<const double> ps(p.data(), static_cast<std::size_t>(p.size()));
    for (int i = 0; i < m; ++i) {
        const std::size_t si = static_cast<std::size_t>(i);
        r[i] = (d.y[si] - (*pr.model)(d.x[si], ps)) / d.sigma[si];
    }
    return r;
}

// Weighted model Jacobian: J(i, j) = (d model(x_i) / d p_j) / sigma_i.
Eigen::MatrixXd jacobian(const Problem& pr, const Eigen::VectorXd& p, const Eigen::VectorXd& r0) {
    const auto& d = *pr.data;
    const int m = static_cast<int>(d.x.size());
    const int k = static_cast<int>(p.size());
    Eigen::MatrixXd j(m, k);
    if (*pr.jac) {
        const std::span<const double> ps(p.data(), static_cast<std::size_t>(p.size()));
        for (int i = 0; i < m; ++i)
            for (int c = 0; c < k; ++c)
                j(i, c) = (*pr.jac)(d.x[static_cast<std::size_t>(i)], ps, c) / d.sigma[static_cast<std::size_t>(i)];
        return j;
    }
    for (int c = 0; c < k; ++c) {
        const double h = std::max(1e-6, 1e-6 * std::abs(p[c]));
        Eigen::VectorXd ph = p;
        // Step inward when the forward point would leave the box.
        const bool forward = ph[c] + h <= pr.hi[static_cast<std::size_t>(c)];
        ph[c] += forward ? h : -h;
        const Eigen::VectorXd rh = residuals(pr, ph);
        // d residual / d p = (rh - r0) / step; the model derivative flips sign.
        j.col(c) = -(rh - r0) / (ph[c] - p[c]);
    }
    return j;
}

Eigen::VectorXd clamp_to_box(Eigen::VectorXd p, const std::vector<double>& lo, const std::vector<double>& hi) {
    for (Eigen::Index i = 0; i < p.size(); ++i)
        p[i] = std::clamp(p[i], lo[static_cast<std::size_t>(i)], hi[static_cast<std::size_t>(i)]);
    return p;
}

struct CoreResult {
    Eigen::VectorXd params;
    double chi2 = 0.0;
    int n_iter = 0;
    bool converged = false;
};

CoreResult lm_minimize(const Problem& pr, Eigen::VectorXd p, const FitOptions& opt) {
    p = clamp_to_box(std::move(p), pr.lo, pr.hi);
    Eigen::VectorXd r = residuals(pr, p);
    double chi2 = r.squaredNorm();
    if (!std::isfinite(chi2)) throw ConvergenceError("weighted_least_squares: non-finite chi^2 at start");

    double lambda = 1e-3;
    CoreResult out;
    int iter = 0;
    bool converged = false;
    for (; iter < opt.max_iter && !converged; ++iter) {
        const Eigen::MatrixXd j = jacobian(pr, p, r);
        const Eigen::MatrixXd jtj = j.transpose() * j;
        const Eigen::VectorXd g = j.transpose() * r;

        bool stepped = false;
        for (int tries = 0; tries < 40; ++tries) {
            Eigen::MatrixXd a = jtj;
            for (Eigen::Index c = 0; c < a.rows(); ++c)
                a(c, c) += lambda * std::max(jtj(c, c), 1e-12);
            const Eigen::VectorXd delta = a.ldlt().solve(g);
            if (!delta.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd trial = clamp_to_box(p + delta, pr.lo, pr.hi);
            const Eigen::VectorXd rt = residuals(pr, trial);
            const double chi2_t = rt.squaredNorm();
            if (std::isfinite(chi2_t) && chi2_t <= chi2) {
                const double step = (trial - p).norm();
                const double dchi2 = chi2 - chi2_t;
                p = trial;
                r = rt;
                const double prev = chi2;
                chi2 = chi2_t;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (step < opt.step_tol * (p.norm() + 1e-30) ||
                    dchi2 < opt.chi2_tol * std::max(prev, 1e-300))
                    converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) {
            // No descent direction left at the damping cap: stationary
            // (possibly at a bound), treat as converged.
            converged = true;
        }
    }
    out.params = p;
    out.chi2 = chi2;
    out.n_iter = iter;
    out.converged = converged;
    return out;
}

}  // namespace

FitResult weighted_least_squares(const ModelFn& model, const std::vector<ParamSpec>& params,
                                 const FitData& data, const FitOptions& options) {
    if (!model) throw std::invalid_argument("weighted_least_squares: null model");
    if (params.empty()) throw std::invalid_argument("weighted_least_squares: no parameters");
    const std::size_t m = data.x.size();
    if (m != data.y.size() || m != data.sigma.size())
        throw DataError("weighted_least_squares: x/y/sigma size mismatch");
    if (m < params.size()) throw DataError("weighted_least_squares: under-determined (fewer points than parameters)");
    for (double s : data.sigma)
        if (!(s > 0.0)) throw DataError("weighted_least_squares: sigmas must be > 0");

    Problem pr;
    pr.model = &model;
    pr.data = &data;
    pr.jac = &options.jacobian;
    Eigen::VectorXd p0(static_cast<Eigen::Index>(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& spec = params[i];
        if (!std::isfinite(spec.init)) throw std::invalid_argument("weighted_least_squares: non-finite initial value");
        if (!(spec.lo <= spec.hi)) throw std::invalid_argument("weighted_least_squares: invalid bounds");
        pr.lo.push_back(spec.lo);
        pr.hi.push_back(spec.hi);
        p0[static_cast<Eigen::Index>(i)] = spec.init;
    }

    const CoreResult core = lm_minimize(pr, p0, options);

    FitResult res;
    for (const auto& spec : params) res.names.push_back(spec.name);
    res.params = core.params;
    res.chi2 = core.chi2;
    res.n_iter = core.n_iter;
    res.converged = core.converged;

    const Eigen::VectorXd r = residuals(pr, core.params);
    const Eigen::MatrixXd j = jacobian(pr, core.params, r);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    if (lu.isInvertible()) {
        res.covariance = lu.inverse();
    } else {
        // Flat valley: report the pseudoinverse instead of failing, so a
        // parameter pinned against a bound still gets a finite sigma.
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jtj, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const double tol = 1e-12 * svd.singularValues().maxCoeff();
        Eigen::VectorXd inv = svd.singularValues();
        for (Eigen::Index i = 0; i < inv.size(); ++i) inv[i] = inv[i] > tol ? 1.0 / inv[i] : 0.0;
        res.covariance = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
        res.degenerate = true;
    }
    res.sigmas = res.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    res.at_bound.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double v = core.params[static_cast<Eigen::Index>(i)];
        res.at_bound[i] = (v <= pr.lo[i]) || (v >= pr.hi[i]);
    }

    if (options.bootstrap_resamples > 0) {
        const std::span<const double> ps(core.params.data(), static_cast<std::size_t>(core.params.size()));
        std::vector<double> fitted(m);
        for (std::size_t i = 0; i < m; ++i) fitted[i] = model(data.x[i], ps);
        Eigen::MatrixXd draws(options.bootstrap_resamples, core.params.size());
        for (int b = 0; b < options.bootstrap_resamples; ++b) {
            rng::Stream stream(rng::derive_seed(options.bootstrap_seed, static_cast<std::uint64_t>(b)));
            FitData resampled = data;
            for (std::size_t i = 0; i < m; ++i)
                resampled.y[i] = fitted[i] + data.sigma[i] * stream.normal();
            Problem prb = pr;
            prb.data = &resampled;
            FitOptions inner = options;
            inner.bootstrap_resamples = 0;
            draws.row(b) = lm_minimize(prb, core.params, inner).params.transpose();
        }
        Eigen::VectorXd bs(core.params.size());
        for (Eigen::Index c = 0; c < core.params.size(); ++c) {
            const double mean = draws.col(c).mean();
            bs[c] = std::sqrt((draws.col(c).array() - mean).square().sum() /
                              std::max(1, options.bootstrap_resamples - 1));
        }
        res.bootstrap_sigmas = bs;
    }
    return res;
}

}  // namespace homsim
