#pragma once

// Time-integrated stochastic phases of a dephasing emitter, as jointly
// Gaussian variables. A phase window is the integral of the frequency noise
// from an anchor (pulse) time over an elapsed span; this module builds the
// covariance of any set of windows for the white (phonon) plus colored
// (spectral diffusion) kernels, samples them, and evaluates interference
// factors <e^{iX}> by the Gaussian moment theorem.
//
// Kernel reading: Cov(w1, w2) = K(anchor1 - anchor2) * min(elapsed1, elapsed2)
// with K_colored(d) = gamma_sd_max * e^{-d^2/tau_c^2} and K_white(d) =
// gamma_ph * [d == 0]. Anchors are compared in window-relative time, which is
// the unique reading that reproduces the published gamma' for the four-window
// interference combination (the literal min/max overlap goes negative for
// disjoint lab-time windows).

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace homsim {

struct PhaseWindow {
    double anchor = 0.0;   // window start t0 (ns); the pulse defining the phase
    double elapsed = 0.0;  // integration span s >= 0 (ns)

    void validate() const;
};

struct NoiseKernelParams {
    double gamma_ph = 0.0;      // white-noise strength (1/ns)
    double gamma_sd_max = 0.0;  // colored-noise strength (1/ns)
    double tau_c = 1.0;         // correlation time (ns); required if colored strength > 0

    void validate() const;
};

struct CovarianceMatrix {
    Eigen::MatrixXd entries;  // symmetric, PSD up to the repair tolerance (rad^2)

    int dim() const { return static_cast<int>(entries.rows()); }
};

// X = sum_i sign_i * phase(window_i); signs are +1/-1.
struct SignedPhaseCombo {
    struct Term {
        PhaseWindow window;
        int sign = 1;
    };
    std::vector<Term> terms;

    void validate() const;
};

double phase_covariance(const PhaseWindow& w1, const PhaseWindow& w2, const NoiseKernelParams& k);

// Entry (i,j) = phase_covariance(w_i, w_j). PSD by construction (tensor
// product of a PSD anchor kernel with the Brownian min kernel); an eigenvalue
// below -1e-10 * trace signals a kernel bug and throws InternalError.
CovarianceMatrix build_covariance_matrix(std::span<const PhaseWindow> windows, const NoiseKernelParams& k);

// n x dim matrix of zero-mean jointly Gaussian draws with the given
// covariance, deterministic per seed. Eigenvalues in [-1e-10 * trace, 0) are
// clamped to zero before the symmetric factorization; lower ones throw.
// Row-major draw order (sample by sample, component by component) is part of
// the stream-stability contract.
Eigen::MatrixXd sample_joint_phases(const CovarianceMatrix& cov, std::uint64_t seed, int n);

// <e^{iX}> = e^{-Var(X)/2} with Var(X) from the pairwise covariances.
double interference_factor_analytic(const SignedPhaseCombo& combo, const NoiseKernelParams& k);

struct McFactor {
    double estimate = 0.0;
    double std_err = 0.0;
    long n = 0;
    std::uint64_t seed = 0;
};

// Monte-Carlo mean of cos(X) over sampled joint phases; the independent
// oracle for interference_factor_analytic.
McFactor interference_factor_mc(const SignedPhaseCombo& combo, const NoiseKernelParams& k,
                                std::uint64_t seed, long n);

// The four-window combination entering the two-photon coincidence at first
// detection time t_d and detector delay tau, for pulses separated by delta_t:
// X = phase(0, t_d) - phase(0, t_d + tau) + phase(delta_t, t_d + tau) - phase(delta_t, t_d).
SignedPhaseCombo hom_phase_combo(double t_d, double tau, double delta_t);

}  // namespace homsim
