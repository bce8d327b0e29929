#pragma once

// Physical parameters of a pulsed single-photon emitter subject to pure
// dephasing, and the closed-form rate/visibility formulas built on them.
//
// Unit system: rates in 1/ns (numerically equal to GHz), times in ns,
// temperatures in K. Angular frequencies in rad/ns.

namespace homsim {

// Phonon-induced pure dephasing: either a fixed rate, or the temperature law
// gamma(T) = gamma0 * nbar(T) * (nbar(T) + 1) with nbar the Bose-Einstein
// occupation of one effective phonon mode at energy alpha (in K).
struct PhononModel {
    enum class Kind { FixedRate, TemperatureLaw };

    Kind kind = Kind::FixedRate;
    double gamma_ph = 0.0;  // 1/ns, FixedRate only
    double gamma0 = 0.0;    // dimensionless, TemperatureLaw only
    double alpha = 0.0;     // K, TemperatureLaw only

    static PhononModel fixed_rate(double gamma_ph);
    static PhononModel temperature_law(double gamma0, double alpha);

    void validate() const;
};

struct EmitterParams {
    double gamma_rad = 0.0;     // radiative decay rate (1/ns)
    double gamma_sd_max = 0.0;  // maximal spectral-diffusion dephasing (1/ns)
    double tau_c = 1.0;         // noise correlation time (ns)
    PhononModel phonon;
    // Transition angular frequency (rad/ns). Phase reference only: it cancels
    // in every squared amplitude and never enters a magnitude.
    double omega_e = 0.0;

    void validate() const;
};

struct PulseSequence {
    double delta_t = 12.5;     // pulse separation (ns)
    double rep_period = 12.5;  // laser repetition period (ns)

    void validate() const;
};

struct BeamsplitterParams {
    double refl = 0.5;   // R
    double trans = 0.5;  // T, with R + T = 1

    static BeamsplitterParams balanced() { return {0.5, 0.5}; }
    bool is_balanced() const;
    void validate() const;
};

// Dephasing rates at one working point (pulse separation + temperature).
struct DephasingRates {
    double gamma_sd = 0.0;     // spectral diffusion Gamma' (1/ns)
    double gamma_ph = 0.0;     // phonon dephasing gamma(T) (1/ns)
    double gamma_prime = 0.0;  // gamma' = gamma_sd + gamma_ph, exactly
};

// Bose-Einstein occupation 1/(e^(alpha/temp) - 1). Strictly increasing in
// temp; underflows to exactly 0 for temp << alpha.
double mean_phonon_number(double temp, double alpha);

// gamma0 * nbar * (nbar + 1) for the temperature law; the stored rate for the
// fixed-rate variant (temp is then ignored).
double phonon_dephasing_rate(double temp, const PhononModel& model);

// Gamma'(dt) = gamma_sd_max * (1 - e^(-(dt/tau_c)^2)). Monotone nondecreasing
// in dt, saturating at gamma_sd_max once the noise memory has decayed.
double diffusion_dephasing_rate(double delta_t, double gamma_sd_max, double tau_c);

DephasingRates dephasing_rates(const PulseSequence& seq, double temp, const EmitterParams& params);

// Two-photon-interference visibility of consecutively emitted photons,
// V = Gamma / (Gamma'(dt) + gamma(T) + Gamma), in (0, 1].
double tpi_visibility(const PulseSequence& seq, double temp, const EmitterParams& params);

// T2 = 1 / (Gamma/2 + Gamma' + gamma). With Gamma' at its saturation value
// this is the coherence time in the infinite-pulse-separation limit.
double coherence_time(double gamma_rad, double gamma_sd, double gamma_ph);

// Temperature-only visibility approximation with all other dephasing
// normalized out: V(T) = 1 / (1 + gamma0 * nbar * (nbar + 1)).
double visibility_temperature_curve(double temp, double gamma0, double alpha);

}  // namespace homsim
