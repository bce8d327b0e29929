#include "homsim/noise_phase.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "homsim/common.hpp"
#include "homsim/rng.hpp"

namespace homsim {

void PhaseWindow::validate() const {
    if (!(elapsed >= 0.0)) throw std::domain_error("PhaseWindow: elapsed must be >= 0");
    if (!std::isfinite(anchor)) throw std::domain_error("PhaseWindow: anchor must be finite");
}

void NoiseKernelParams::validate() const {
    if (!(gamma_ph >= 0.0)) throw std::domain_error("NoiseKernelParams: gamma_ph must be >= 0");
    if (!(gamma_sd_max >= 0.0)) throw std::domain_error("NoiseKernelParams: gamma_sd_max must be >= 0");
    if (gamma_sd_max > 0.0 && !(tau_c > 0.0))
        throw std::domain_error("NoiseKernelParams: tau_c must be > 0 when gamma_sd_max > 0");
}

void SignedPhaseCombo::validate() const {
    if (terms.empty()) throw std::domain_error("SignedPhaseCombo: must be nonempty");
    for (const auto& t : terms) {
        t.window.validate();
        if (t.sign != 1 && t.sign != -1) throw std::domain_error("SignedPhaseCombo: signs must be +-1");
    }
}

double phase_covariance(const PhaseWindow& w1, const PhaseWindow& w2, const NoiseKernelParams& k) {
    w1.validate();
    w2.validate();
    k.validate();
    const double overlap = std::min(w1.elapsed, w2.elapsed);
    const double da = w1.anchor - w2.anchor;
    double cov = 0.0;
    if (k.gamma_sd_max > 0.0) {
        const double u = da / k.tau_c;
        cov += k.gamma_sd_max * std::exp(-u * u) * overlap;
    }
    if (k.gamma_ph > 0.0 && da == 0.0) cov += k.gamma_ph * overlap;
    return cov;
}

CovarianceMatrix build_covariance_matrix(std::span<const PhaseWindow> windows, const NoiseKernelParams& k) {
    if (windows.empty()) throw std::domain_error("build_covariance_matrix: need at least one window");
    const int n = static_cast<int>(windows.size());
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double c = phase_covariance(windows[i], windows[j], k);
            m(i, j) = c;
            m(j, i) = c;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double floor = -1e-10 * m.trace();
    if (es.eigenvalues().minCoeff() < floor)
        throw InternalError("build_covariance_matrix: covariance not PSD within tolerance");
    return CovarianceMatrix{std::move(m)};
}

namespace {

// Symmetric factor F with F F^T = cov, after clamping slightly negative
// eigenvalues. Eigenvalues below -1e-10 * trace are an error, not repaired.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success)
        throw InternalError("sample_joint_phases: eigendecomposition failed");
    Eigen::VectorXd evals = es.eigenvalues();
    const double floor = -1e-10 * cov.trace();
    for (int i = 0; i < evals.size(); ++i) {
        if (evals[i] < floor)
            throw InternalError("sample_joint_phases: covariance not PSD within repair tolerance");
        if (evals[i] < 0.0) evals[i] = 0.0;
    }
    return es.eigenvectors() * evals.cwiseSqrt().asDiagonal();
}

}  // namespace

Eigen::MatrixXd sample_joint_phases(const CovarianceMatrix& cov, std::uint64_t seed, int n) {
    if (n < 1) throw std::domain_error("sample_joint_phases: n must be >= 1");
    const int dim = cov.dim();
    const Eigen::MatrixXd f = psd_factor(cov.entries);
    rng::Stream stream(seed);
    Eigen::MatrixXd out(n, dim);
    Eigen::VectorXd z(dim);
    for (int s = 0; s < n; ++s) {
        for (int c = 0; c < dim; ++c) z[c] = stream.normal();
        out.row(s) = (f * z).transpose();
    }
    return out;
}

double interference_factor_analytic(const SignedPhaseCombo& combo, const NoiseKernelParams& k) {
    combo.validate();
    k.validate();
    double var = 0.0;
    for (const auto& a : combo.terms)
        for (const auto& b : combo.terms)
            var += a.sign * b.sign * phase_covariance(a.window, b.window, k);
    // Var(X) >= 0 analytically; cancellation can leave a tiny negative residue.
    if (var < 0.0) var = 0.0;
    return std::exp(-0.5 * var);
}

McFactor interference_factor_mc(const SignedPhaseCombo& combo, const NoiseKernelParams& k,
                                std::uint64_t seed, long n) {
    combo.validate();
    if (n < 100) throw std::domain_error("interference_factor_mc: n must be >= 100");
    std::vector<PhaseWindow> windows;
    windows.reserve(combo.terms.size());
    for (const auto& t : combo.terms) windows.push_back(t.window);
    const CovarianceMatrix cov = build_covariance_matrix(windows, k);
    const Eigen::MatrixXd samples = sample_joint_phases(cov, seed, static_cast<int>(n));
    double sum = 0.0, sum2 = 0.0;
    for (long s = 0; s < n; ++s) {
        double x = 0.0;
        for (std::size_t i = 0; i < combo.terms.size(); ++i)
            x += combo.terms[i].sign * samples(s, static_cast<int>(i));
        const double c = std::cos(x);
        sum += c;
        sum2 += c * c;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, (sum2 - sum * sum / static_cast<double>(n)) / static_cast<double>(n - 1));
    return McFactor{mean, std::sqrt(var / static_cast<double>(n)), n, seed};
}

SignedPhaseCombo hom_phase_combo(double t_d, double tau, double delta_t) {
    SignedPhaseCombo combo;
    combo.terms = {
        {{0.0, t_d}, +1},
        {{0.0, t_d + tau}, -1},
        {{delta_t, t_d + tau}, +1},
        {{delta_t, t_d}, -1},
    };
    return combo;
}

}  // namespace homsim
