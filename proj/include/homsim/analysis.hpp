#pragma once

// Visibility recovery from coincidence histograms (fixed-width Lorentzian
// area fits plus the three peak-area estimators) and model-parameter fits to
// visibility and fringe-contrast datasets.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "homsim/histogram.hpp"
#include "homsim/least_squares.hpp"

namespace homsim {

// Fitted areas of the zero-delay cluster plus the cluster-averaged
// normalizations. Central areas are the raw fitted group totals (merged blob
// totals where peaks overlap, signed: a noisy absent peak may fit slightly
// negative). The composites a_bar / overlap_mean / side_mean are scaled from
// the pooled per-unit-weight area of all clean non-central peaks, which is
// the lower-variance normalization the area estimators divide by.
struct PeakAreas {
    std::array<double, 5> central{};        // A2', A1', A0, A1, A2
    std::array<double, 5> central_sigma{};
    double a_bar = 0.0;                     // expected A1-peak area
    double a_bar_sigma = 0.0;
    double overlap_mean = 0.0;              // expected merged A1+satellite area
    double overlap_sigma = 0.0;
    double side_mean = 0.0;                 // expected side-peak area beyond one period
    double side_sigma = 0.0;
    double unit = 0.0;                      // counts per unit enumerated pattern weight
    double unit_sigma = 0.0;
    double zero_weight_dist = 0.0;          // distinguishable zero-delay pattern weight
    double fitted_width = 0.0;              // Lorentzian FWHM used by the area fit (ns)
    double chi2 = 0.0;
    int dof = 0;
};

struct WidthPolicy {
    enum class Mode {
        FitAtReference,  // fit one shared width from this histogram (reference layout)
        Fixed,           // reuse a width obtained elsewhere
    };
    Mode mode = Mode::FitAtReference;
    double width = 0.0;      // ns, Fixed only
    double merge_tol = 1.5;  // peaks closer than this fit as one blob (ns)

    static WidthPolicy fit_at_reference(double merge_tol = 1.5) { return {Mode::FitAtReference, 0.0, merge_tol}; }
    static WidthPolicy fixed(double width, double merge_tol = 1.5) { return {Mode::Fixed, width, merge_tol}; }
};

// Weighted least-squares fit of fixed-width Lorentzians at the pattern
// delays (expected-ratio mixtures for merged groups); Poisson weights
// sigma_i^2 = max(count_i, 1). The incoming pattern supplies the layout; the
// reference weights are re-enumerated at v = 0.
PeakAreas fit_peak_areas(const CoincidenceHistogram& h, const ClusterPattern& pattern,
                         const WidthPolicy& policy);

struct VisibilityPoint {
    double x = 0.0;      // pulse separation (ns) or temperature (K), per dataset kind
    double v = 0.0;
    double sigma = 0.0;  // 1-sigma uncertainty, > 0
};

enum class VisibilityRegime {
    NoOverlap,        // V = 1 - A0 / Abar
    MergedNeighbors,  // V = 1 - A0 / (2 Atilde / 3)
    FullPeriod,       // V = 1 - A0 / (Abar_S / 2)
};

// Estimator selection from the peak layout; throws DataError (naming the
// supported layouts) when the zero-delay peak itself is unresolvable.
VisibilityRegime select_regime(double delta_t, double rep_period, double merge_tol = 1.5);

VisibilityPoint visibility_estimate(const PeakAreas& areas, VisibilityRegime regime, double x = 0.0);

// Returns human-readable flags for marginal points (v outside [0,1] by up to
// 3 sigma is accepted, beyond is a DataError).
std::vector<std::string> validate_visibility_points(const std::vector<VisibilityPoint>& points);

// Weighted fit of the visibility-vs-pulse-separation law at fixed gamma_rad;
// gamma_ph is either held fixed (pass a value) or fitted (pass nullopt).
// Free parameters: gamma_sd_max >= 0, tau_c > 0 [, gamma_ph >= 0].
FitResult fit_visibility_vs_dt(const std::vector<VisibilityPoint>& points, double gamma_rad,
                               std::optional<double> gamma_ph_fixed, const FitOptions& options = {});

// Weighted fit of V(T) = 1 / (1 + gamma0 nbar (nbar + 1)) for (gamma0, alpha).
FitResult fit_visibility_vs_temperature(const std::vector<VisibilityPoint>& points,
                                        const FitOptions& options = {});

struct ContrastPoint {
    double delay = 0.0;     // interferometer path delay (ns)
    double contrast = 0.0;  // fringe contrast
    double sigma = 0.0;
};

// Exponential fringe-contrast decay c(tau) = c0 e^{-tau/T2}; parameters
// ("c0", "t2_ns").
FitResult fit_exponential_contrast(const std::vector<ContrastPoint>& points,
                                   const FitOptions& options = {});

struct ProfileInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_at_bound = false;  // interval truncated by the parameter's box bound
    bool hi_at_bound = false;
};

// Profile-likelihood interval for parameter `index`: the range where the
// chi^2 with all other parameters re-optimized stays within delta_chi2 of the
// minimum. The honest uncertainty report for flat chi^2 valleys.
ProfileInterval profile_likelihood_interval(const ModelFn& model, const std::vector<ParamSpec>& params,
                                            const FitData& data, const FitResult& fit, int index,
                                            double delta_chi2 = 1.0, const FitOptions& options = {});

// CSV datasets. Visibility files carry the header "x,v,sigma", contrast files
// "delay_ns,contrast,sigma"; '#' lines are comments. Errors cite line numbers.
std::vector<VisibilityPoint> read_visibility_csv(const std::string& path);
std::vector<ContrastPoint> read_contrast_csv(const std::string& path);

// FitResult as a JSON document (params/sigmas/covariance/chi2/converged/...),
// loss-free for round-tripping.
std::string fit_result_to_json(const FitResult& fit);
FitResult fit_result_from_json(const std::string& text);

}  // namespace homsim
