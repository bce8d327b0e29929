#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "homsim/common.hpp"
#include "homsim/hom.hpp"
#include "homsim/model.hpp"

using namespace homsim;

namespace {

const BeamsplitterParams kBalanced = BeamsplitterParams::balanced();

EmitterParams x0_7k() {
    EmitterParams p;
    p.gamma_rad = 0.85;
    p.gamma_sd_max = 1.02;
    p.tau_c = 12.0;
    p.phonon = PhononModel::fixed_rate(0.0);
    return p;
}

EmitterParams xp_30k() {
    EmitterParams p;
    p.gamma_rad = 0.96;
    p.gamma_sd_max = 1.55;
    p.tau_c = 3.1;
    p.phonon = PhononModel::fixed_rate(0.29);
    return p;
}

}  // namespace

TEST_CASE("unnormalized two-photon correlation") {
    // Perfect coalescence: zero for all times.
    for (double t_d : {0.0, 0.4, 2.0})
        for (double tau : {0.0, 0.5, 3.0})
            CHECK(g2_unnormalized(t_d, tau, 0.85, 0.0, kBalanced) == 0.0);

    // The two exponentials cancel at tau = 0 regardless of dephasing.
    CHECK(g2_unnormalized(1.0, 0.0, 0.85, 0.7, kBalanced) == 0.0);

    const double gp = diffusion_dephasing_rate(12.5, 1.02, 12.0);
    CHECK(g2_unnormalized(0.0, 1.0, 0.85, gp, kBalanced) ==
          doctest::Approx(0.10493654957778698).epsilon(1e-13));

    // Nonnegative for a balanced splitter.
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    for (int i = 0; i < 500; ++i)
        CHECK(g2_unnormalized(u(gen), u(gen), 0.3 + u(gen), u(gen), kBalanced) >= 0.0);
}

TEST_CASE("time-integrated correlation") {
    CHECK(g2_time_integrated(0.85, 0.0, kBalanced) == 0.0);
    CHECK(g2_time_integrated(0.85, 1e9, kBalanced) == doctest::Approx(1.0).epsilon(1e-8));
    const double gp = diffusion_dephasing_rate(12.5, 1.02, 12.0);
    CHECK(g2_time_integrated(0.85, gp, kBalanced) == doctest::Approx(0.4427559995906912).epsilon(1e-13));
    CHECK_THROWS_AS(g2_time_integrated(0.0, 1.0, kBalanced), std::domain_error);
}

TEST_CASE("general-splitter visibility") {
    CHECK(visibility_general_bs(0.85, 0.0, kBalanced) == doctest::Approx(1.0).epsilon(1e-15));
    const BeamsplitterParams mirror{1.0, 0.0};
    CHECK(visibility_general_bs(0.85, 0.3, mirror) == 0.0);  // single-path routing
    const BeamsplitterParams skew{0.6, 0.4};
    CHECK(visibility_general_bs(1.0, 1.0, skew) == doctest::Approx(0.46153846153846154).epsilon(1e-13));
}

TEST_CASE("identity V = 1 - g2bar for random parameters") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> rate(0.05, 4.0), refl(0.05, 0.95);
    for (int i = 0; i < 1000; ++i) {
        const double g = rate(gen), gp = rate(gen), r = refl(gen);
        const BeamsplitterParams bs{r, 1.0 - r};
        CHECK(std::abs(visibility_general_bs(g, gp, bs) - (1.0 - g2_time_integrated(g, gp, bs))) <= 1e-12);
    }
}

TEST_CASE("quadrature over the correlation reproduces the integrated form") {
    // Composite Simpson over t_d, tau in [0, 40/Gamma]^2, scaled by the
    // normalization constant 2 Gamma^2 / (T^2 + R^2) of the integrated form.
    const double gamma_rad = 0.85;
    const double gp = diffusion_dephasing_rate(12.5, 1.02, 12.0);
    for (const BeamsplitterParams& bs : {kBalanced, BeamsplitterParams{0.6, 0.4}}) {
        const double upper = 40.0 / gamma_rad;
        const int n = 800;  // even panel count per axis
        const double h = upper / n;
        auto weight = [n](int i) { return i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0); };
        double sum = 0.0;
        for (int i = 0; i <= n; ++i) {
            double row = 0.0;
            for (int j = 0; j <= n; ++j)
                row += weight(j) * g2_unnormalized(i * h, j * h, gamma_rad, gp, bs);
            sum += weight(i) * row;
        }
        sum *= h * h / 9.0;
        const double norm = 2.0 * gamma_rad * gamma_rad / (bs.trans * bs.trans + bs.refl * bs.refl);
        CHECK(norm * sum == doctest::Approx(g2_time_integrated(gamma_rad, gp, bs)).epsilon(1e-4));
    }
}

TEST_CASE("monte-carlo visibility against the closed form") {
    const PulseSequence seq{12.5, 12.5};

    EmitterParams clean = x0_7k();
    clean.gamma_sd_max = 0.0;
    const McEstimate ideal = mc_visibility(clean, seq, 7.0, kBalanced, 5, 2000);
    CHECK(ideal.mean == 1.0);
    CHECK(ideal.std_err == 0.0);

    const McEstimate est = mc_visibility(x0_7k(), seq, 7.0, kBalanced, 42, 100000);
    const double analytic = tpi_visibility(seq, 7.0, x0_7k());
    CHECK(analytic == doctest::Approx(0.5572440004093088).epsilon(1e-13));
    CHECK(std::abs(est.mean - analytic) < 3.0 * est.std_err);
    CHECK(est.std_err < 0.01);

    const PulseSequence short_seq{2.0, 12.5};
    const McEstimate xp = mc_visibility(xp_30k(), short_seq, 30.0, kBalanced, 43, 100000);
    const double xp_analytic = tpi_visibility(short_seq, 30.0, xp_30k());
    CHECK(xp_analytic == doctest::Approx(0.5400133315234597).epsilon(1e-13));
    CHECK(std::abs(xp.mean - xp_analytic) < 3.0 * xp.std_err);
}

TEST_CASE("monte-carlo visibility contracts") {
    const PulseSequence seq{8.0, 12.5};
    const BeamsplitterParams skew{0.6, 0.4};
    CHECK_THROWS_AS(mc_visibility(x0_7k(), seq, 7.0, skew, 1, 2000), ConfigError);
    CHECK_THROWS_AS(mc_visibility(x0_7k(), seq, 7.0, kBalanced, 1, 10), std::domain_error);

    // Worker count must not change the result (fixed-size shards).
    const McEstimate w1 = mc_visibility(x0_7k(), seq, 7.0, kBalanced, 321, 200000, 1);
    const McEstimate w4 = mc_visibility(x0_7k(), seq, 7.0, kBalanced, 321, 200000, 4);
    CHECK(w1.mean == w4.mean);
    CHECK(w1.std_err == w4.std_err);

    // Determinism per seed.
    const McEstimate again = mc_visibility(x0_7k(), seq, 7.0, kBalanced, 321, 200000, 2);
    CHECK(again.mean == w1.mean);
}

TEST_CASE("monte-carlo visibility is unbiased over seeds") {
    const PulseSequence seq{8.0, 12.5};
    const double analytic = tpi_visibility(seq, 7.0, x0_7k());
    const int n_seeds = 100;
    const long n = 20000;
    double acc = 0.0, se_acc = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
        const McEstimate est = mc_visibility(x0_7k(), seq, 7.0, kBalanced, 9000 + static_cast<std::uint64_t>(s), n);
        acc += est.mean;
        se_acc += est.std_err;
    }
    const double mean_of_means = acc / n_seeds;
    const double typical_se = se_acc / n_seeds;
    CHECK(std::abs(mean_of_means - analytic) < 4.0 * typical_se / std::sqrt(static_cast<double>(n_seeds)));
}
