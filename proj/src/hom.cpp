#include "homsim/hom.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

#include "homsim/common.hpp"
#include "homsim/rng.hpp"

namespace homsim {

double g2_unnormalized(double t_d, double tau, double gamma_rad, double gamma_prime,
                       const BeamsplitterParams& bs) {
    bs.validate();
    if (!(t_d >= 0.0) || !(tau >= 0.0)) throw std::domain_error("g2_unnormalized: t_d, tau must be >= 0");
    if (!(gamma_rad >= 0.0) || !(gamma_prime >= 0.0))
        throw std::domain_error("g2_unnormalized: rates must be >= 0");
    const double r = bs.refl, t = bs.trans;
    return std::exp(-2.0 * gamma_rad * t_d) *
           ((t * t + r * r) * std::exp(-gamma_rad * tau) -
            2.0 * r * t * std::exp(-(gamma_prime + gamma_rad) * tau));
}

double g2_time_integrated(double gamma_rad, double gamma_prime, const BeamsplitterParams& bs) {
    bs.validate();
    if (!(gamma_rad > 0.0)) throw std::domain_error("g2_time_integrated: gamma_rad must be > 0");
    if (!(gamma_prime >= 0.0)) throw std::domain_error("g2_time_integrated: gamma_prime must be >= 0");
    const double two_rt = 2.0 * bs.refl * bs.trans;  // in [0, 1/2] given R + T = 1
    return 1.0 - two_rt / (1.0 - two_rt) * gamma_rad / (gamma_prime + gamma_rad);
}

double visibility_general_bs(double gamma_rad, double gamma_prime, const BeamsplitterParams& bs) {
    bs.validate();
    if (!(gamma_rad > 0.0)) throw std::domain_error("visibility_general_bs: gamma_rad must be > 0");
    if (!(gamma_prime >= 0.0)) throw std::domain_error("visibility_general_bs: gamma_prime must be >= 0");
    const double two_rt = 2.0 * bs.refl * bs.trans;
    if (two_rt == 0.0) return 0.0;  // single-path routing, no interference
    return two_rt / (1.0 - two_rt) * gamma_rad / (gamma_prime + gamma_rad);
}

namespace {

constexpr long kShardSize = 1 << 16;

struct ShardMoments {
    double sum = 0.0;
    double sum2 = 0.0;
};

// One shard of the estimator. Draw order per sample: two emission delays,
// then the Gaussian phase difference; this order is part of the determinism
// contract.
ShardMoments run_shard(std::uint64_t shard_seed, long count, double gamma_rad, double gamma_prime) {
    rng::Stream stream(shard_seed);
    ShardMoments m;
    for (long i = 0; i < count; ++i) {
        const double s1 = stream.exponential(gamma_rad);
        const double s2 = stream.exponential(gamma_rad);
        const double tau = std::abs(s1 - s2);
        double x = 0.0;
        if (gamma_prime > 0.0) x = stream.normal() * std::sqrt(2.0 * gamma_prime * tau);
        const double p = 0.5 - 0.5 * std::cos(x);
        m.sum += p;
        m.sum2 += p * p;
    }
    return m;
}

}  // namespace

McEstimate mc_visibility(const EmitterParams& params, const PulseSequence& seq, double temp,
                         const BeamsplitterParams& bs, std::uint64_t seed, long n, int workers) {
    params.validate();
    bs.validate();
    if (!bs.is_balanced())
        throw ConfigError("mc_visibility: estimator requires a balanced beamsplitter (R = T = 1/2)");
    if (n < 1000) throw std::domain_error("mc_visibility: n must be >= 1000");
    if (!(params.gamma_rad > 0.0)) throw std::domain_error("mc_visibility: gamma_rad must be > 0");

    const DephasingRates rates = dephasing_rates(seq, temp, params);
    const long n_shards = (n + kShardSize - 1) / kShardSize;
    std::vector<ShardMoments> moments(static_cast<std::size_t>(n_shards));

    const int used = std::max(1, std::min<int>(workers, static_cast<int>(n_shards)));
    auto work = [&](int worker) {
        for (long s = worker; s < n_shards; s += used) {
            const long count = std::min(kShardSize, n - s * kShardSize);
            moments[static_cast<std::size_t>(s)] =
                run_shard(rng::derive_seed(seed, static_cast<std::uint64_t>(s)), count, params.gamma_rad,
                          rates.gamma_prime);
        }
    };
    if (used == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(used));
        for (int w = 0; w < used; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }

    // Combine in shard order so the reduction is independent of scheduling.
    double sum = 0.0, sum2 = 0.0;
    for (const auto& m : moments) {
        sum += m.sum;
        sum2 += m.sum2;
    }
    const double nd = static_cast<double>(n);
    const double mean_p = sum / nd;
    const double var_p = n > 1 ? std::max(0.0, (sum2 - sum * sum / nd) / (nd - 1.0)) : 0.0;
    McEstimate est;
    est.mean = 1.0 - 2.0 * mean_p;
    est.std_err = 2.0 * std::sqrt(var_p / nd);
    est.n = n;
    est.seed = seed;
    return est;
}

}  // namespace homsim
