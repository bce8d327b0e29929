#include "homsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "homsim/common.hpp"
#include "homsim/model.hpp"

namespace homsim {

namespace {

constexpr double kDelayEps = 1e-9;
// Peaks centered up to this far outside the histogram still enter the fit
// model: Lorentzian tails leak across the range edge.
constexpr double kEdgePad = 5.0;

struct PeakGroup {
    std::vector<std::size_t> members;  // indices into the reference pattern entries
    double ref_weight = 0.0;           // summed enumerated weight (v = 0)
    double delay = 0.0;                // weight-averaged center
    bool has_central = false;          // touches the zero-delay cluster
};

double lorentzian_cdf(double x, double fwhm) {
    return 0.5 + std::atan(2.0 * x / fwhm) / std::numbers::pi;
}

std::vector<double> central_delays(const ClusterPattern& pattern) {
    const double s = pattern.single_pulse_layout ? pattern.rep_period : pattern.delta_t;
    return {-2.0 * s, -s, 0.0, s, 2.0 * s};
}

// Peaks excluded from the pooled normalization: the zero-delay cluster, or
// in the single-pulse layout the zero peak and the reduced-weight peaks at
// +-T (the side-peak average runs over |delay| > T there).
std::vector<double> non_poolable_delays(const ClusterPattern& pattern) {
    if (pattern.single_pulse_layout) return {-pattern.rep_period, 0.0, pattern.rep_period};
    return central_delays(pattern);
}

bool near(double a, double b) { return std::abs(a - b) <= kDelayEps; }

}  // namespace

PeakAreas fit_peak_areas(const CoincidenceHistogram& h, const ClusterPattern& pattern,
                         const WidthPolicy& policy) {
    h.validate();
    if (policy.mode == WidthPolicy::Mode::Fixed && !(policy.width > 0.0))
        throw std::domain_error("fit_peak_areas: fixed width must be > 0");
    if (!(policy.merge_tol > 0.0)) throw std::domain_error("fit_peak_areas: merge_tol must be > 0");

    double total = 0.0;
    for (double c : h.counts) total += c;
    if (!(total > 0.0)) throw DataError("fit_peak_areas: empty histogram");

    // Reference layout at v = 0: enumerated weights independent of the
    // injected visibility, used for mixture ratios and normalization.
    const ClusterPattern ref = enumerate_coincidence_pattern(
        pattern.delta_t, pattern.rep_period, pattern.n_periods, 0.0, pattern.bs);
    const std::vector<double> centrals = central_delays(pattern);

    const double t_lo = h.t_min;
    const double t_hi = h.t_min + h.n_bins() * h.bin_width;

    // Group reference peaks within the padded histogram range by the merge
    // tolerance.
    std::vector<PeakGroup> groups;
    for (std::size_t i = 0; i < ref.entries.size(); ++i) {
        const auto& e = ref.entries[i];
        if (e.delay < t_lo - kEdgePad || e.delay > t_hi + kEdgePad) continue;
        if (!groups.empty()) {
            const auto& last = ref.entries[groups.back().members.back()];
            if (e.delay - last.delay <= policy.merge_tol) {
                groups.back().members.push_back(i);
                continue;
            }
        }
        groups.push_back(PeakGroup{{i}, 0.0, 0.0, false});
    }
    const std::vector<double> excluded = non_poolable_delays(pattern);
    for (auto& g : groups) {
        double wd = 0.0;
        for (std::size_t i : g.members) {
            const auto& e = ref.entries[i];
            g.ref_weight += e.weight;
            wd += e.weight * e.delay;
            for (double c : excluded) g.has_central = g.has_central || near(e.delay, c);
        }
        g.delay = wd / g.ref_weight;
    }

    // Locate the zero-delay group and require it to be clean: an unresolvable
    // zero peak has no area estimator.
    int zero_group = -1;
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (std::size_t i : groups[g].members)
            if (near(ref.entries[i].delay, 0.0)) zero_group = static_cast<int>(g);
    if (zero_group < 0) throw DataError("fit_peak_areas: histogram does not cover the zero-delay peak");
    if (groups[static_cast<std::size_t>(zero_group)].members.size() > 1)
        throw DataError(
            "fit_peak_areas: zero-delay peak overlaps its neighbors; supported layouts keep it resolvable "
            "(pulse separations of 2, 4, 8 ns or one repetition period at T = 12.5 ns)");

    const int n_bins = h.n_bins();
    const int n_groups = static_cast<int>(groups.size());
    if (n_groups < 2) throw DataError("fit_peak_areas: need at least one side peak in range");

    Eigen::VectorXd inv_sigma(n_bins);
    for (int i = 0; i < n_bins; ++i)
        inv_sigma[i] = 1.0 / std::sqrt(std::max(h.counts[static_cast<std::size_t>(i)], 1.0));

    // Weighted design matrix for one shared width; columns are unit-area
    // Lorentzian mixtures at the member delays with enumerated ratios.
    const auto build_design = [&](double width) {
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n_bins, n_groups);
        std::vector<double> edge(static_cast<std::size_t>(n_bins) + 1);
        for (int g = 0; g < n_groups; ++g) {
            const auto& grp = groups[static_cast<std::size_t>(g)];
            for (std::size_t i : grp.members) {
                const double frac = ref.entries[i].weight / grp.ref_weight;
                const double d = ref.entries[i].delay;
                for (int b = 0; b <= n_bins; ++b)
                    edge[static_cast<std::size_t>(b)] = lorentzian_cdf(h.bin_left(b) - d, width);
                for (int b = 0; b < n_bins; ++b)
                    x(b, g) += frac * (edge[static_cast<std::size_t>(b) + 1] - edge[static_cast<std::size_t>(b)]);
            }
        }
        return x;
    };

    Eigen::VectorXd y(n_bins);
    for (int i = 0; i < n_bins; ++i) y[i] = h.counts[static_cast<std::size_t>(i)] * inv_sigma[i];

    Eigen::VectorXd areas;
    Eigen::MatrixXd wx;
    const auto solve_areas = [&](double width) {
        wx = build_design(width);
        wx.array().colwise() *= inv_sigma.array();
        areas = wx.colPivHouseholderQr().solve(y);
        return (y - wx * areas).squaredNorm();
    };

    double width = policy.width;
    double chi2;
    if (policy.mode == WidthPolicy::Mode::Fixed) {
        chi2 = solve_areas(width);
    } else {
        // Golden-section profile over the shared width, areas solved linearly.
        const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = std::max(2.0 * h.bin_width, 1e-3);
        double b = 0.5 * pattern.rep_period;
        double c = b - phi * (b - a), d = a + phi * (b - a);
        double fc = solve_areas(c), fd = solve_areas(d);
        for (int it = 0; it < 80; ++it) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = solve_areas(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = solve_areas(d);
            }
        }
        width = 0.5 * (a + b);
        chi2 = solve_areas(width);
    }

    // Covariance of the areas, conditional on the fitted width.
    const Eigen::MatrixXd normal = wx.transpose() * wx;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
    if (!lu.isInvertible())
        throw ConvergenceError("fit_peak_areas: singular normal matrix (peaks unresolvable at this width)");
    const Eigen::MatrixXd cov = lu.inverse();

    PeakAreas out;
    out.fitted_width = width;
    out.chi2 = chi2;
    out.dof = n_bins - n_groups;

    const auto group_of = [&](double delay) -> int {
        for (std::size_t g = 0; g < groups.size(); ++g)
            for (std::size_t i : groups[g].members)
                if (near(ref.entries[i].delay, delay)) return static_cast<int>(g);
        return -1;
    };
    const auto ref_weight_at = [&](double delay) -> double {
        for (const auto& e : ref.entries)
            if (near(e.delay, delay)) return e.weight;
        return 0.0;
    };

    for (int c = 0; c < 5; ++c) {
        const int g = group_of(centrals[static_cast<std::size_t>(c)]);
        if (g < 0) {
            out.central[static_cast<std::size_t>(c)] = std::numeric_limits<double>::quiet_NaN();
            out.central_sigma[static_cast<std::size_t>(c)] = std::numeric_limits<double>::quiet_NaN();
        } else {
            out.central[static_cast<std::size_t>(c)] = areas[g];
            out.central_sigma[static_cast<std::size_t>(c)] = std::sqrt(std::max(0.0, cov(g, g)));
        }
    }

    // Pooled normalization: counts per unit enumerated weight over the clean
    // groups (no zero-cluster member; beyond one period in the single-pulse
    // layout). Tail-only edge groups are fitted but carry no normalization
    // weight.
    std::vector<int> pool;
    for (int g = 0; g < n_groups; ++g) {
        const auto& grp = groups[static_cast<std::size_t>(g)];
        if (!grp.has_central && grp.delay >= t_lo && grp.delay <= t_hi) pool.push_back(g);
    }
    if (pool.empty()) throw DataError("fit_peak_areas: no clean side peaks to normalize against");
    double pooled_area = 0.0, pooled_weight = 0.0, pooled_var = 0.0;
    for (int g : pool) {
        pooled_area += areas[g];
        pooled_weight += groups[static_cast<std::size_t>(g)].ref_weight;
        for (int g2 : pool) pooled_var += cov(g, g2);
    }
    out.unit = pooled_area / pooled_weight;
    out.unit_sigma = std::sqrt(std::max(0.0, pooled_var)) / pooled_weight;

    out.zero_weight_dist = ref_weight_at(0.0);
    const double w_a1_peak = ref_weight_at(centrals[3]);
    const int a1_group = group_of(centrals[3]);
    const double w_a1_group = a1_group >= 0 ? groups[static_cast<std::size_t>(a1_group)].ref_weight : 0.0;

    out.a_bar = w_a1_peak * out.unit;
    out.a_bar_sigma = w_a1_peak * out.unit_sigma;
    out.overlap_mean = w_a1_group * out.unit;
    out.overlap_sigma = w_a1_group * out.unit_sigma;
    out.side_mean = 2.0 * out.zero_weight_dist * out.unit;
    out.side_sigma = 2.0 * out.zero_weight_dist * out.unit_sigma;
    return out;
}

VisibilityRegime select_regime(double delta_t, double rep_period, double merge_tol) {
    if (std::abs(delta_t - rep_period) <= 1e-12 * rep_period) return VisibilityRegime::FullPeriod;
    const auto overlaps = cluster_overlap_map(delta_t, rep_period, merge_tol);
    bool a1_overlapped = false;
    for (const auto& p : overlaps) {
        if (p.central.k == 0)
            throw DataError(
                "select_regime: zero-delay peak overlaps a neighboring cluster; supported layouts are "
                "pulse separations with a resolvable zero peak (e.g. 2, 4, 8 ns) or one repetition period");
        if (std::abs(p.central.k) == 1) a1_overlapped = true;
    }
    return a1_overlapped ? VisibilityRegime::MergedNeighbors : VisibilityRegime::NoOverlap;
}

VisibilityPoint visibility_estimate(const PeakAreas& areas, VisibilityRegime regime, double x) {
    double denom, denom_sigma;
    switch (regime) {
        case VisibilityRegime::NoOverlap:
            denom = areas.a_bar;
            denom_sigma = areas.a_bar_sigma;
            break;
        case VisibilityRegime::MergedNeighbors:
            denom = 2.0 * areas.overlap_mean / 3.0;
            denom_sigma = 2.0 * areas.overlap_sigma / 3.0;
            break;
        case VisibilityRegime::FullPeriod:
            denom = 0.5 * areas.side_mean;
            denom_sigma = 0.5 * areas.side_sigma;
            break;
        default:
            throw InternalError("visibility_estimate: bad regime");
    }
    if (!(denom > 0.0)) throw DataError("visibility_estimate: zero normalization area");
    const double a0 = areas.central[2];
    const double a0_sigma = areas.central_sigma[2];
    if (!std::isfinite(a0)) throw DataError("visibility_estimate: zero-delay area missing");
    VisibilityPoint p;
    p.x = x;
    p.v = 1.0 - a0 / denom;
    // First-order propagation, cross-covariance neglected.
    p.sigma = std::sqrt((a0 / (denom * denom)) * (a0 / (denom * denom)) * denom_sigma * denom_sigma +
                        (1.0 / denom) * (1.0 / denom) * a0_sigma * a0_sigma);
    return p;
}

std::vector<std::string> validate_visibility_points(const std::vector<VisibilityPoint>& points) {
    std::vector<std::string> flags;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        if (!(p.sigma > 0.0))
            throw DataError("visibility point " + std::to_string(i + 1) + ": sigma must be > 0");
        if (p.v < 0.0 - 3.0 * p.sigma || p.v > 1.0 + 3.0 * p.sigma)
            throw DataError("visibility point " + std::to_string(i + 1) + ": v = " + format_double(p.v) +
                            " is outside [0,1] by more than 3 sigma");
        if (p.v < 0.0 || p.v > 1.0)
            flags.push_back("point " + std::to_string(i + 1) + " (x=" + format_double(p.x) +
                            "): v = " + format_double(p.v) + " marginally outside [0,1]");
    }
    return flags;
}

namespace {

FitData to_fit_data(const std::vector<VisibilityPoint>& points) {
    FitData d;
    for (const auto& p : points) {
        d.x.push_back(p.x);
        d.y.push_back(p.v);
        d.sigma.push_back(p.sigma);
    }
    return d;
}

}  // namespace

FitResult fit_visibility_vs_dt(const std::vector<VisibilityPoint>& points, double gamma_rad,
                               std::optional<double> gamma_ph_fixed, const FitOptions& options) {
    const bool gamma_free = !gamma_ph_fixed.has_value();
    const std::size_t min_points = gamma_free ? 4 : 3;
    if (points.size() < min_points)
        throw DataError("fit_visibility_vs_dt: under-determined (need >= " + std::to_string(min_points) +
                        " points)");
    if (!(gamma_rad > 0.0)) throw std::domain_error("fit_visibility_vs_dt: gamma_rad must be > 0");
    if (!gamma_free && !(*gamma_ph_fixed >= 0.0))
        throw std::domain_error("fit_visibility_vs_dt: fixed gamma_ph must be >= 0");
    validate_visibility_points(points);

    std::vector<VisibilityPoint> sorted = points;
    std::sort(sorted.begin(), sorted.end(),
              [](const VisibilityPoint& a, const VisibilityPoint& b) { return a.x < b.x; });

    // Initial guesses: invert the law at the largest separation for the
    // diffusion strength; take the separation where v crosses midway between
    // its extremes for the correlation time.
    const double g_fix = gamma_ph_fixed.value_or(0.0);
    const double v_last = std::clamp(sorted.back().v, 1e-3, 1.0);
    const double g0p_init =
        std::clamp(gamma_rad * (1.0 - v_last) / v_last - g_fix, 1e-3, 1e3);
    double v_max = sorted.front().v, v_min = sorted.front().v;
    for (const auto& p : sorted) {
        v_max = std::max(v_max, p.v);
        v_min = std::min(v_min, p.v);
    }
    const double v_mid = 0.5 * (v_max + v_min);
    double x_mid = sorted[sorted.size() / 2].x;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const double v0 = sorted[i].v, v1 = sorted[i + 1].v;
        if ((v0 - v_mid) * (v1 - v_mid) <= 0.0 && v0 != v1) {
            x_mid = sorted[i].x + (v_mid - v0) / (v1 - v0) * (sorted[i + 1].x - sorted[i].x);
            break;
        }
    }
    const double tau_init = std::clamp(x_mid / std::sqrt(std::numbers::ln2), 0.2, 200.0);

    std::vector<ParamSpec> specs = {
        {"gamma_sd_max", g0p_init, 0.0, std::numeric_limits<double>::infinity()},
        {"tau_c", tau_init, 1e-6, std::numeric_limits<double>::infinity()},
    };
    if (gamma_free) specs.push_back({"gamma_ph", 1e-2, 0.0, std::numeric_limits<double>::infinity()});

    const ModelFn model = [gamma_rad, gamma_free, g_fix](double x, std::span<const double> p) {
        const double g0p = p[0], tc = p[1];
        const double g = gamma_free ? p[2] : g_fix;
        const double u = x / tc;
        return gamma_rad / (g0p * -std::expm1(-u * u) + g + gamma_rad);
    };
    return weighted_least_squares(model, specs, to_fit_data(points), options);
}

FitResult fit_visibility_vs_temperature(const std::vector<VisibilityPoint>& points,
                                        const FitOptions& options) {
    if (points.size() < 3) throw DataError("fit_visibility_vs_temperature: under-determined (need >= 3 points)");
    validate_visibility_points(points);
    int distinct = 1;
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i].x != points[0].x) distinct = 2;
    if (distinct < 2)
        throw DataError("fit_visibility_vs_temperature: degenerate dataset (single temperature)");
    for (const auto& p : points)
        if (!(p.x > 0.0)) throw DataError("fit_visibility_vs_temperature: temperatures must be > 0");

    const std::vector<ParamSpec> specs = {
        {"gamma0", 1.0, 0.0, std::numeric_limits<double>::infinity()},
        {"alpha", 50.0, 1e-3, std::numeric_limits<double>::infinity()},
    };
    const ModelFn model = [](double x, std::span<const double> p) {
        return visibility_temperature_curve(x, p[0], p[1]);
    };
    return weighted_least_squares(model, specs, to_fit_data(points), options);
}

FitResult fit_exponential_contrast(const std::vector<ContrastPoint>& points, const FitOptions& options) {
    if (points.size() < 2) throw DataError("fit_exponential_contrast: need >= 2 points");
    FitData d;
    bool any_nonzero = false;
    for (const auto& p : points) {
        if (!(p.delay >= 0.0)) throw DataError("fit_exponential_contrast: delays must be >= 0");
        if (!(p.sigma > 0.0)) throw DataError("fit_exponential_contrast: sigmas must be > 0");
        any_nonzero = any_nonzero || p.contrast != 0.0;
        d.x.push_back(p.delay);
        d.y.push_back(p.contrast);
        d.sigma.push_back(p.sigma);
    }
    if (!any_nonzero) throw DataError("fit_exponential_contrast: all contrasts are zero");

    // Log-linear regression over the positive contrasts seeds the fit.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& p : points)
        if (p.contrast > 0.0) {
            const double ly = std::log(p.contrast);
            sx += p.delay;
            sy += ly;
            sxx += p.delay * p.delay;
            sxy += p.delay * ly;
            ++n;
        }
    double c0_init = 1.0, t2_init = 0.3;
    if (n >= 2 && n * sxx - sx * sx > 0.0) {
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        const double intercept = (sy - slope * sx) / n;
        if (slope < 0.0) t2_init = std::clamp(-1.0 / slope, 1e-6, 1e6);
        c0_init = std::clamp(std::exp(intercept), 1e-9, 1e9);
    }

    const std::vector<ParamSpec> specs = {
        {"c0", c0_init, 0.0, std::numeric_limits<double>::infinity()},
        {"t2_ns", t2_init, 1e-9, std::numeric_limits<double>::infinity()},
    };
    const ModelFn model = [](double x, std::span<const double> p) { return p[0] * std::exp(-x / p[1]); };
    return weighted_least_squares(model, specs, d, options);
}

ProfileInterval profile_likelihood_interval(const ModelFn& model, const std::vector<ParamSpec>& params,
                                            const FitData& data, const FitResult& fit, int index,
                                            double delta_chi2, const FitOptions& options) {
    if (index < 0 || index >= static_cast<int>(params.size()))
        throw std::invalid_argument("profile_likelihood_interval: bad parameter index");
    const double target = fit.chi2 + delta_chi2;
    const double center = fit.params[index];
    const double scale = std::max({fit.sigmas[index], 0.1 * std::abs(center), 1e-3});

    const auto profile_chi2 = [&](double value) {
        std::vector<ParamSpec> specs = params;
        for (std::size_t i = 0; i < specs.size(); ++i) specs[i].init = fit.params[static_cast<Eigen::Index>(i)];
        specs[static_cast<std::size_t>(index)] = {params[static_cast<std::size_t>(index)].name, value, value, value};
        FitOptions inner = options;
        inner.bootstrap_resamples = 0;
        return weighted_least_squares(model, specs, data, inner).chi2;
    };

    ProfileInterval out;
    for (int dir = -1; dir <= 1; dir += 2) {
        const double bound = dir < 0 ? params[static_cast<std::size_t>(index)].lo
                                     : params[static_cast<std::size_t>(index)].hi;
        double inside = center, step = scale, outside = center;
        bool crossed = false, hit_bound = false;
        for (int it = 0; it < 60; ++it) {
            double trial = center + dir * step;
            if ((dir < 0 && trial <= bound) || (dir > 0 && trial >= bound)) {
                trial = bound;
                hit_bound = true;
            }
            if (profile_chi2(trial) > target) {
                outside = trial;
                crossed = true;
                break;
            }
            inside = trial;
            if (hit_bound) break;
            step *= 1.6;
        }
        double edge;
        bool at_bound;
        if (crossed) {
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (inside + outside);
                if (profile_chi2(mid) > target)
                    outside = mid;
                else
                    inside = mid;
                if (std::abs(outside - inside) < 1e-9 * (std::abs(outside) + 1.0)) break;
            }
            edge = 0.5 * (inside + outside);
            at_bound = false;
        } else {
            edge = inside;
            at_bound = true;  // interval truncated by the box or the scan cap
        }
        if (dir < 0) {
            out.lo = edge;
            out.lo_at_bound = at_bound;
        } else {
            out.hi = edge;
            out.hi_at_bound = at_bound;
        }
    }
    return out;
}

namespace {

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path, const std::string& header,
                                                    std::size_t n_cols) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            std::string squashed = line;
            std::erase_if(squashed, [](char c) { return c == ' ' || c == '\t'; });
            if (squashed != header)
                throw DataError(path + ":" + std::to_string(line_no) + ": expected header '" + header + "'");
            header_seen = true;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != n_cols)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(n_cols) +
                            " comma-separated values");
        try {
            rows.push_back(std::move(fields));
            for (const auto& f : rows.back()) parse_double(f);
        } catch (const DataError& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!header_seen) throw DataError(path + ": missing header line '" + header + "'");
    if (rows.empty()) throw DataError(path + ": no data rows");
    return rows;
}

}  // namespace

std::vector<VisibilityPoint> read_visibility_csv(const std::string& path) {
    std::vector<VisibilityPoint> points;
    for (const auto& row : read_csv_rows(path, "x,v,sigma", 3))
        points.push_back({parse_double(row[0]), parse_double(row[1]), parse_double(row[2])});
    return points;
}

std::vector<ContrastPoint> read_contrast_csv(const std::string& path) {
    std::vector<ContrastPoint> points;
    for (const auto& row : read_csv_rows(path, "delay_ns,contrast,sigma", 3))
        points.push_back({parse_double(row[0]), parse_double(row[1]), parse_double(row[2])});
    return points;
}

std::string fit_result_to_json(const FitResult& fit) {
    nlohmann::ordered_json j;
    for (std::size_t i = 0; i < fit.names.size(); ++i)
        j["params"][fit.names[i]] = fit.params[static_cast<Eigen::Index>(i)];
    for (std::size_t i = 0; i < fit.names.size(); ++i)
        j["sigmas"][fit.names[i]] = fit.sigmas[static_cast<Eigen::Index>(i)];
    j["covariance"] = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) row.push_back(fit.covariance(r, c));
        j["covariance"].push_back(row);
    }
    j["chi2"] = fit.chi2;
    j["n_iter"] = fit.n_iter;
    j["converged"] = fit.converged;
    j["degenerate"] = fit.degenerate;
    for (std::size_t i = 0; i < fit.names.size(); ++i)
        j["at_bound"][fit.names[i]] = static_cast<bool>(fit.at_bound[i]);
    if (fit.bootstrap_sigmas)
        for (std::size_t i = 0; i < fit.names.size(); ++i)
            j["bootstrap_sigmas"][fit.names[i]] = (*fit.bootstrap_sigmas)[static_cast<Eigen::Index>(i)];
    return j.dump(2) + "\n";
}

FitResult fit_result_from_json(const std::string& text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("fit_result_from_json: ") + e.what());
    }
    FitResult fit;
    const auto& params = j.at("params");
    fit.params.resize(static_cast<Eigen::Index>(params.size()));
    fit.sigmas.resize(static_cast<Eigen::Index>(params.size()));
    Eigen::Index i = 0;
    for (const auto& [name, value] : params.items()) {
        fit.names.push_back(name);
        fit.params[i] = value.get<double>();
        fit.sigmas[i] = j.at("sigmas").at(name).get<double>();
        ++i;
    }
    const auto& cov = j.at("covariance");
    fit.covariance.resize(static_cast<Eigen::Index>(cov.size()), static_cast<Eigen::Index>(cov.size()));
    for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r)
        for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c)
            fit.covariance(r, c) = cov.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
    fit.chi2 = j.at("chi2").get<double>();
    fit.n_iter = j.at("n_iter").get<int>();
    fit.converged = j.at("converged").get<bool>();
    fit.degenerate = j.value("degenerate", false);
    for (const auto& name : fit.names) fit.at_bound.push_back(j.at("at_bound").at(name).get<bool>());
    if (j.contains("bootstrap_sigmas")) {
        Eigen::VectorXd bs(static_cast<Eigen::Index>(fit.names.size()));
        for (std::size_t k = 0; k < fit.names.size(); ++k)
            bs[static_cast<Eigen::Index>(k)] = j.at("bootstrap_sigmas").at(fit.names[k]).get<double>();
        fit.bootstrap_sigmas = bs;
    }
    return fit;
}

}  // namespace homsim
