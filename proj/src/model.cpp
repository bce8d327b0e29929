#include "homsim/model.hpp"

#include <cmath>
#include <stdexcept>

#include "homsim/common.hpp"

namespace homsim {

PhononModel PhononModel::fixed_rate(double gamma_ph) {
    PhononModel m;
    m.kind = Kind::FixedRate;
    m.gamma_ph = gamma_ph;
    m.validate();
    return m;
}

PhononModel PhononModel::temperature_law(double gamma0, double alpha) {
    PhononModel m;
    m.kind = Kind::TemperatureLaw;
    m.gamma0 = gamma0;
    m.alpha = alpha;
    m.validate();
    return m;
}

void PhononModel::validate() const {
    if (kind == Kind::FixedRate) {
        if (!(gamma_ph >= 0.0)) throw std::domain_error("PhononModel: gamma_ph must be >= 0");
    } else {
        if (!(gamma0 >= 0.0)) throw std::domain_error("PhononModel: gamma0 must be >= 0");
        if (!(alpha > 0.0)) throw std::domain_error("PhononModel: alpha must be > 0");
    }
}

void EmitterParams::validate() const {
    if (!(gamma_rad >= 0.0)) throw std::domain_error("EmitterParams: gamma_rad must be >= 0");
    if (!(gamma_sd_max >= 0.0)) throw std::domain_error("EmitterParams: gamma_sd_max must be >= 0");
    if (!(tau_c > 0.0)) throw std::domain_error("EmitterParams: tau_c must be > 0");
    if (!std::isfinite(omega_e)) throw std::domain_error("EmitterParams: omega_e must be finite");
    phonon.validate();
}

void PulseSequence::validate() const {
    if (!(delta_t > 0.0)) throw std::domain_error("PulseSequence: delta_t must be > 0");
    if (!(delta_t <= rep_period)) throw std::domain_error("PulseSequence: delta_t must be <= rep_period");
}

bool BeamsplitterParams::is_balanced() const {
    return std::abs(refl - 0.5) <= 1e-12 && std::abs(trans - 0.5) <= 1e-12;
}

void BeamsplitterParams::validate() const {
    if (!(refl >= 0.0) || !(trans >= 0.0)) throw std::domain_error("BeamsplitterParams: R, T must be >= 0");
    if (std::abs(refl + trans - 1.0) > 1e-12) throw std::domain_error("BeamsplitterParams: R + T must equal 1");
}

double mean_phonon_number(double temp, double alpha) {
    if (!(temp > 0.0)) throw std::domain_error("mean_phonon_number: temp must be > 0");
    if (!(alpha > 0.0)) throw std::domain_error("mean_phonon_number: alpha must be > 0");
    // expm1 keeps precision for temp >> alpha, where e^(alpha/temp) - 1 is small.
    return 1.0 / std::expm1(alpha / temp);
}

double phonon_dephasing_rate(double temp, const PhononModel& model) {
    model.validate();
    if (model.kind == PhononModel::Kind::FixedRate) return model.gamma_ph;
    const double n = mean_phonon_number(temp, model.alpha);
    return model.gamma0 * n * (n + 1.0);
}

double diffusion_dephasing_rate(double delta_t, double gamma_sd_max, double tau_c) {
    if (!(delta_t >= 0.0)) throw std::domain_error("diffusion_dephasing_rate: delta_t must be >= 0");
    if (!(tau_c > 0.0)) throw std::domain_error("diffusion_dephasing_rate: tau_c must be > 0");
    if (!(gamma_sd_max >= 0.0)) throw std::domain_error("diffusion_dephasing_rate: gamma_sd_max must be >= 0");
    const double u = delta_t / tau_c;
    return gamma_sd_max * -std::expm1(-u * u);
}

DephasingRates dephasing_rates(const PulseSequence& seq, double temp, const EmitterParams& params) {
    params.validate();
    seq.validate();
    DephasingRates r;
    r.gamma_sd = diffusion_dephasing_rate(seq.delta_t, params.gamma_sd_max, params.tau_c);
    r.gamma_ph = phonon_dephasing_rate(temp, params.phonon);
    r.gamma_prime = r.gamma_sd + r.gamma_ph;
    return r;
}

double tpi_visibility(const PulseSequence& seq, double temp, const EmitterParams& params) {
    params.validate();
    if (!(params.gamma_rad > 0.0))
        throw std::domain_error("tpi_visibility: undefined for gamma_rad = 0");
    const DephasingRates r = dephasing_rates(seq, temp, params);
    return params.gamma_rad / (r.gamma_prime + params.gamma_rad);
}

double coherence_time(double gamma_rad, double gamma_sd, double gamma_ph) {
    if (!(gamma_rad > 0.0)) throw std::domain_error("coherence_time: gamma_rad must be > 0");
    if (!(gamma_sd >= 0.0) || !(gamma_ph >= 0.0))
        throw std::domain_error("coherence_time: dephasing rates must be >= 0");
    return 1.0 / (0.5 * gamma_rad + gamma_sd + gamma_ph);
}

double visibility_temperature_curve(double temp, double gamma0, double alpha) {
    if (!(gamma0 >= 0.0)) throw std::domain_error("visibility_temperature_curve: gamma0 must be >= 0");
    const double n = mean_phonon_number(temp, alpha);
    return 1.0 / (1.0 + gamma0 * n * (n + 1.0));
}

}  // namespace homsim
