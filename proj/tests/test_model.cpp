#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "homsim/model.hpp"

using namespace homsim;

namespace {

// Table I working points.
EmitterParams x0_7k() {
    EmitterParams p;
    p.gamma_rad = 0.85;
    p.gamma_sd_max = 1.02;
    p.tau_c = 12.0;
    p.phonon = PhononModel::fixed_rate(0.0);
    return p;
}

}  // namespace

TEST_CASE("mean phonon number") {
    // Frozen from a 50-digit evaluation of the Bose-Einstein formula.
    CHECK(mean_phonon_number(44.0, 44.0) == doctest::Approx(0.5819767068693264).epsilon(1e-13));
    CHECK(mean_phonon_number(10.0, 44.0) == doctest::Approx(0.012429946582235531).epsilon(1e-13));
    CHECK(mean_phonon_number(1e-3, 44.0) == 0.0);  // frozen bath underflows to exactly zero

    double prev = 0.0;
    for (double t = 2.0; t <= 80.0; t += 2.0) {
        const double n = mean_phonon_number(t, 44.0);
        CHECK(n > prev);
        prev = n;
    }

    CHECK_THROWS_AS(mean_phonon_number(0.0, 44.0), std::domain_error);
    CHECK_THROWS_AS(mean_phonon_number(-5.0, 44.0), std::domain_error);
    CHECK_THROWS_AS(mean_phonon_number(10.0, 0.0), std::domain_error);
}

TEST_CASE("phonon dephasing rate") {
    const PhononModel law = PhononModel::temperature_law(3.75, 44.0);
    CHECK(phonon_dephasing_rate(10.0, law) == doctest::Approx(0.047191688078522848).epsilon(1e-13));
    CHECK(phonon_dephasing_rate(40.0, law) == doctest::Approx(2.8047089931605986).epsilon(1e-13));

    const PhononModel fixed = PhononModel::fixed_rate(0.0);
    for (double t : {1.0, 10.0, 300.0}) CHECK(phonon_dephasing_rate(t, fixed) == 0.0);
    CHECK(phonon_dephasing_rate(7.0, PhononModel::fixed_rate(0.29)) == 0.29);

    CHECK_THROWS_AS(phonon_dephasing_rate(0.0, law), std::domain_error);
    CHECK_THROWS_AS(PhononModel::temperature_law(-1.0, 44.0), std::domain_error);
    CHECK_THROWS_AS(PhononModel::fixed_rate(-0.1), std::domain_error);
}

TEST_CASE("diffusion dephasing rate") {
    CHECK(diffusion_dephasing_rate(0.0, 1.02, 12.0) == 0.0);
    CHECK(diffusion_dephasing_rate(4.0, 1.02, 12.0) == doctest::Approx(0.10726389684934283).epsilon(1e-13));
    CHECK(diffusion_dephasing_rate(1e6, 1.02, 12.0) == doctest::Approx(1.02).epsilon(1e-15));

    // Monotone nondecreasing, asymptote never exceeded.
    double prev = -1.0;
    for (double dt = 0.0; dt <= 60.0; dt += 0.5) {
        const double g = diffusion_dephasing_rate(dt, 1.02, 12.0);
        CHECK(g >= prev);
        CHECK(g <= 1.02);
        prev = g;
    }

    CHECK_THROWS_AS(diffusion_dephasing_rate(4.0, 1.02, 0.0), std::domain_error);
    CHECK_THROWS_AS(diffusion_dephasing_rate(-1.0, 1.02, 12.0), std::domain_error);
}

TEST_CASE("tpi visibility at the Table I working points") {
    const EmitterParams p = x0_7k();
    CHECK(tpi_visibility({12.5, 12.5}, 7.0, p) == doctest::Approx(0.5572440004093088).epsilon(1e-13));
    CHECK(tpi_visibility({4.0, 12.5}, 7.0, p) == doctest::Approx(0.8879474122001445).epsilon(1e-13));

    // Fourier-limited photons: no dephasing at all.
    EmitterParams clean = p;
    clean.gamma_sd_max = 0.0;
    CHECK(tpi_visibility({1e-12, 12.5}, 7.0, clean) == 1.0);

    EmitterParams zero_rad = p;
    zero_rad.gamma_rad = 0.0;
    CHECK_THROWS_AS(tpi_visibility({12.5, 12.5}, 7.0, zero_rad), std::domain_error);
}

TEST_CASE("tpi visibility monotone in pulse separation, limits") {
    const EmitterParams p = x0_7k();
    double prev = 2.0;
    for (double dt = 0.25; dt <= 12.5; dt += 0.25) {
        const double v = tpi_visibility({dt, 12.5}, 7.0, p);
        CHECK(v <= prev);
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
        prev = v;
    }

    // Limit identities at delta_t -> 0 and delta_t = 100 tau_c.
    const double gamma_ph = 0.29;
    EmitterParams q = p;
    q.phonon = PhononModel::fixed_rate(gamma_ph);
    const double v0 = q.gamma_rad / (gamma_ph + q.gamma_rad);
    const double vinf = q.gamma_rad / (q.gamma_sd_max + gamma_ph + q.gamma_rad);
    CHECK(std::abs(tpi_visibility({1e-14, 12.5}, 7.0, q) - v0) < 1e-9);
    PulseSequence far{100.0 * q.tau_c, 100.0 * q.tau_c};
    CHECK(std::abs(tpi_visibility(far, 7.0, q) - vinf) < 1e-9);
}

TEST_CASE("coherence time") {
    CHECK(coherence_time(0.85, 1.02, 0.0) == doctest::Approx(0.6920415224913495).epsilon(1e-13));
    CHECK(coherence_time(0.91, 1.03, 0.0) == doctest::Approx(0.6734006734006734).epsilon(1e-13));
    CHECK(coherence_time(0.96, 1.55, 0.29) == doctest::Approx(0.4310344827586207).epsilon(1e-13));
    CHECK(coherence_time(0.85, 0.0, 0.0) == doctest::Approx(2.0 / 0.85).epsilon(1e-15));

    // Reciprocal identity to floating precision.
    for (double g : {0.2, 0.85, 1.7}) {
        const double t2 = coherence_time(g, 1.02, 0.29);
        CHECK(std::abs(t2 * (0.5 * g + 1.02 + 0.29) - 1.0) <= 4e-16);
    }

    CHECK_THROWS_AS(coherence_time(0.0, 1.0, 0.0), std::domain_error);
}

TEST_CASE("temperature visibility curve") {
    CHECK(visibility_temperature_curve(10.0, 3.75, 44.0) == doctest::Approx(0.9549350051038753).epsilon(1e-13));
    CHECK(visibility_temperature_curve(40.0, 3.75, 44.0) == doctest::Approx(0.262832190792414).epsilon(1e-13));
    CHECK(visibility_temperature_curve(1e-3, 3.75, 44.0) == 1.0);  // no phonons

    double prev = 2.0;
    for (double t = 2.0; t <= 60.0; t += 1.0) {
        const double v = visibility_temperature_curve(t, 3.75, 44.0);
        CHECK(v < prev);
        prev = v;
    }

    // Algebraic identity against the full law at Gamma = 1, Gamma' = 0.
    EmitterParams unit;
    unit.gamma_rad = 1.0;
    unit.gamma_sd_max = 0.0;
    unit.tau_c = 1.0;
    unit.phonon = PhononModel::temperature_law(3.75, 44.0);
    for (double t : {5.0, 10.0, 25.0, 40.0})
        CHECK(tpi_visibility({2.0, 12.5}, t, unit) == visibility_temperature_curve(t, 3.75, 44.0));
}

TEST_CASE("operations are pure") {
    const EmitterParams p = x0_7k();
    CHECK(tpi_visibility({8.0, 12.5}, 7.0, p) == tpi_visibility({8.0, 12.5}, 7.0, p));
    CHECK(mean_phonon_number(17.3, 44.0) == mean_phonon_number(17.3, 44.0));
    CHECK(diffusion_dephasing_rate(3.3, 1.02, 12.0) == diffusion_dephasing_rate(3.3, 1.02, 12.0));
}

TEST_CASE("parameter invariants") {
    EmitterParams bad_tau = x0_7k();
    bad_tau.tau_c = 0.0;
    CHECK_THROWS_AS(bad_tau.validate(), std::domain_error);
    const PulseSequence zero_dt{0.0, 12.5};
    const PulseSequence long_dt{13.0, 12.5};
    CHECK_THROWS_AS(zero_dt.validate(), std::domain_error);
    CHECK_THROWS_AS(long_dt.validate(), std::domain_error);
    const BeamsplitterParams lossy{0.6, 0.5};
    const BeamsplitterParams unbalanced{0.6, 0.4};
    CHECK_THROWS_AS(lossy.validate(), std::domain_error);
    CHECK_NOTHROW(unbalanced.validate());
    CHECK(BeamsplitterParams::balanced().is_balanced());
    CHECK_FALSE(unbalanced.is_balanced());
}
