#pragma once

// Two-photon correlation and interference visibility: the closed forms for a
// dephasing emitter behind a beamsplitter, plus a Monte-Carlo estimator that
// serves as an independent oracle for the closed-form visibility.

#include <cstdint>

#include "homsim/model.hpp"

namespace homsim {

struct G2Point {
    double t_d = 0.0;   // first detection time (ns)
    double tau = 0.0;   // detector delay >= 0 (ns)
    double value = 0.0; // arbitrary common scale
};

struct McEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    long n = 0;
    std::uint64_t seed = 0;
};

// Unnormalized coincidence rate e^{-2 Gamma t_d} [ (T^2+R^2) e^{-Gamma tau}
// - 2 R T e^{-(gamma'+Gamma) tau} ], on a common arbitrary scale.
double g2_unnormalized(double t_d, double tau, double gamma_rad, double gamma_prime,
                       const BeamsplitterParams& bs);

// Time-integrated normalized coincidence probability
//   g2bar = 1 - (2RT / (1 - 2RT)) * Gamma / (gamma' + Gamma),
// which reduces to gamma' / (gamma' + Gamma) for a balanced splitter.
double g2_time_integrated(double gamma_rad, double gamma_prime, const BeamsplitterParams& bs);

// V = (2RT / (1 - 2RT)) * Gamma / (gamma' + Gamma); equals 1 - g2bar.
// Returns 0 (no interference) when either splitter port is closed.
double visibility_general_bs(double gamma_rad, double gamma_prime, const BeamsplitterParams& bs);

// Monte-Carlo visibility estimate for a balanced splitter, distribution-exact
// for the model: emission delays are iid exponential in Gamma, the accumulated
// phase difference over the detector delay is Gaussian with variance
// 2 gamma' tau (the four-window combination's variance, asserted equal by the
// noise-phase cumulant test). E[estimate] = Gamma / (gamma' + Gamma).
//
// Work is split into fixed-size shards with seeds derived per shard, so the
// result depends only on (seed, n), not on the worker count.
McEstimate mc_visibility(const EmitterParams& params, const PulseSequence& seq, double temp,
                         const BeamsplitterParams& bs, std::uint64_t seed, long n, int workers = 1);

}  // namespace homsim
