#pragma once

// Shared weighted nonlinear least-squares engine: damped Gauss-Newton
// (Levenberg-Marquardt) with box bounds by projection. Convergence when the
// relative parameter step drops below 1e-8 or the relative chi^2 change below
// 1e-10; iteration cap 200 (a capped run returns flagged, not silent).
// Jacobian by forward finite differences with step max(1e-6, 1e-6 |p|) unless
// an analytic Jacobian is supplied.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace homsim {

struct FitData {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sigma;  // 1-sigma uncertainties, > 0 (inverse-variance weights)
};

using ModelFn = std::function<double(double x, std::span<const double> p)>;
// Optional analytic Jacobian: derivative of the model at x w.r.t. parameter j.
using ModelJacFn = std::function<double(double x, std::span<const double> p, int j)>;

struct ParamSpec {
    std::string name;
    double init = 0.0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

struct FitOptions {
    int max_iter = 200;
    double step_tol = 1e-8;
    double chi2_tol = 1e-10;
    int bootstrap_resamples = 0;  // 0 disables; parametric resampling with the data sigmas
    std::uint64_t bootstrap_seed = 1;
    ModelJacFn jacobian;  // empty -> forward differences
};

struct FitResult {
    std::vector<std::string> names;
    Eigen::VectorXd params;
    Eigen::VectorXd sigmas;          // 1-sigma from (J^T W J)^-1
    Eigen::MatrixXd covariance;
    double chi2 = 0.0;
    int n_iter = 0;
    bool converged = false;
    std::vector<bool> at_bound;      // parameter pinned at a box bound
    // Solution sits in a degenerate chi^2 valley (singular normal matrix);
    // covariance is then the pseudoinverse and sigmas are lower bounds.
    bool degenerate = false;
    std::optional<Eigen::VectorXd> bootstrap_sigmas;

    double param(const std::string& name) const;
    double sigma(const std::string& name) const;
};

FitResult weighted_least_squares(const ModelFn& model, const std::vector<ParamSpec>& params,
                                 const FitData& data, const FitOptions& options = {});

}  // namespace homsim
