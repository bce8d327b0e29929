#include "homsim/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "homsim/common.hpp"
#include "homsim/rng.hpp"

namespace homsim {

namespace {

constexpr double kCoincidenceEps = 1e-12;  // arrival times closer than this interfere
constexpr double kMergeEps = 1e-9;         // pattern delays closer than this are one peak

struct RawPeak {
    double delay;
    double weight;
};

// Detector routing probabilities for the final splitter: a short-arm photon
// reaches A with probability T, B with R; a long-arm photon the reverse.
struct Routing {
    double a_short, a_long, b_short, b_long;
};

// Delays come from the integer pathway coefficients (dm, k) so that mirrored
// pathways negate bit-exactly for any pulse separation.
void push_pathway(int dm, int k, double delta_t, double rep_period, double window, double v, double w,
                  std::vector<RawPeak>& raw) {
    double delay = dm * rep_period + k * delta_t;
    if (std::abs(delay) > window) return;
    if (std::abs(delay) < kCoincidenceEps) {
        delay = 0.0;
        w *= 1.0 - v;  // simultaneous arrivals interfere
    }
    raw.push_back({delay, w});
}

void collect_two_pulse(double delta_t, double rep_period, int n_periods, double v, const Routing& rt,
                       std::vector<RawPeak>& raw) {
    const double window = n_periods * rep_period + 2.0 * delta_t + kMergeEps;
    const int dm_max = n_periods + 4;
    for (int dm = -dm_max; dm <= dm_max; ++dm)
        for (int p1 = 0; p1 < 2; ++p1)
            for (int p2 = 0; p2 < 2; ++p2) {
                if (dm == 0 && p1 == p2) continue;  // a photon cannot coincide with itself
                for (int a1 = 0; a1 < 2; ++a1)
                    for (int a2 = 0; a2 < 2; ++a2) {
                        const double w =
                            0.25 * (a1 ? rt.a_long : rt.a_short) * (a2 ? rt.b_long : rt.b_short);
                        push_pathway(dm, p2 + a2 - p1 - a1, delta_t, rep_period, window, v, w, raw);
                    }
            }
}

void collect_single_pulse(double rep_period, int n_periods, double v, const Routing& rt,
                          std::vector<RawPeak>& raw) {
    const double window = n_periods * rep_period + kMergeEps;
    const int dm_max = n_periods + 2;
    for (int dm = -dm_max; dm <= dm_max; ++dm) {
        if (dm == 0) continue;  // one photon per period
        for (int a1 = 0; a1 < 2; ++a1)
            for (int a2 = 0; a2 < 2; ++a2) {
                const double w = 0.25 * (a1 ? rt.a_long : rt.a_short) * (a2 ? rt.b_long : rt.b_short);
                push_pathway(dm + a2 - a1, 0, rep_period, rep_period, window, v, w, raw);
            }
    }
}

}  // namespace

double ClusterPattern::total_weight() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.weight;
    return s;
}

ClusterPattern enumerate_coincidence_pattern(double delta_t, double rep_period, int n_periods,
                                             double v, const BeamsplitterParams& bs) {
    bs.validate();
    PulseSequence{delta_t, rep_period}.validate();
    if (n_periods < 1) throw std::domain_error("enumerate_coincidence_pattern: n_periods must be >= 1");
    if (!(v >= 0.0 && v <= 1.0))
        throw std::domain_error("enumerate_coincidence_pattern: v must be in [0, 1]");

    const Routing rt{bs.trans, bs.refl, bs.refl, bs.trans};
    const bool single = std::abs(delta_t - rep_period) <= 1e-12 * rep_period;

    std::vector<RawPeak> raw;
    if (single)
        collect_single_pulse(rep_period, n_periods, v, rt, raw);
    else
        collect_two_pulse(delta_t, rep_period, n_periods, v, rt, raw);

    // Merge pathway delays that coincide, keyed by the group mean (the raw
    // multiset is exactly reflection-symmetric, so means negate exactly).
    std::sort(raw.begin(), raw.end(), [](const RawPeak& a, const RawPeak& b) { return a.delay < b.delay; });
    std::vector<PatternEntry> merged;
    std::size_t i = 0;
    while (i < raw.size()) {
        std::size_t j = i;
        double wsum = 0.0, dsum = 0.0;
        while (j < raw.size() && raw[j].delay - raw[i].delay <= kMergeEps) {
            wsum += raw[j].weight;
            dsum += raw[j].delay;
            ++j;
        }
        merged.push_back({dsum / static_cast<double>(j - i), wsum});
        i = j;
    }

    // Start/stop symmetrization of the A-B correlator; for an unbalanced
    // splitter the one-sided pattern is asymmetric at the outer satellites.
    const std::size_t n = merged.size();
    for (std::size_t a = 0; a < n / 2; ++a) {
        const std::size_t b = n - 1 - a;
        const double w = 0.5 * (merged[a].weight + merged[b].weight);
        merged[a].weight = w;
        merged[b].weight = w;
    }

    ClusterPattern pat;
    pat.entries = std::move(merged);
    pat.delta_t = delta_t;
    pat.rep_period = rep_period;
    pat.n_periods = n_periods;
    pat.visibility = v;
    pat.bs = bs;
    pat.single_pulse_layout = single;
    return pat;
}

void PeakShape::validate() const {
    if (!(width > 0.0)) throw std::domain_error("PeakShape: width must be > 0");
    if (!(irf_fwhm >= 0.0)) throw std::domain_error("PeakShape: irf_fwhm must be >= 0");
}

void CoincidenceHistogram::validate() const {
    if (!(bin_width > 0.0)) throw std::domain_error("CoincidenceHistogram: bin_width must be > 0");
    if (counts.empty()) throw std::domain_error("CoincidenceHistogram: no bins");
    for (double c : counts)
        if (!(c >= 0.0)) throw std::domain_error("CoincidenceHistogram: counts must be >= 0");
}

namespace shape_detail {

double lorentzian_cdf(double x, double fwhm) {
    return 0.5 + std::atan(2.0 * x / fwhm) / std::numbers::pi;
}

double two_sided_exp_cdf(double x, double decay) {
    return x < 0.0 ? 0.5 * std::exp(x / decay) : 1.0 - 0.5 * std::exp(-x / decay);
}

double base_cdf(const PeakShape& s, double x) {
    return s.kind == PeakShape::Kind::Lorentzian ? lorentzian_cdf(x, s.width)
                                                 : two_sided_exp_cdf(x, s.width);
}

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on the
// recurrence (deterministic, computed once per order).
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

// CDF of the base shape convolved with the Gaussian IRF, by composite
// Gauss-Legendre over the kernel's +-8 sigma support.
class ConvolvedCdf {
public:
    explicit ConvolvedCdf(const PeakShape& s) : shape_(s) {
        sigma_ = s.irf_fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
        if (sigma_ > 0.0) {
            constexpr int kPanels = 32;
            constexpr int kNodesPerPanel = 12;
            std::vector<double> gx, gw;
            gauss_legendre(kNodesPerPanel, gx, gw);
            const double lo = -9.0 * sigma_, hi = 9.0 * sigma_;
            const double step = (hi - lo) / kPanels;
            const double inv_norm = 1.0 / (sigma_ * std::sqrt(2.0 * std::numbers::pi));
            for (int p = 0; p < kPanels; ++p) {
                const double a = lo + p * step, b = a + step;
                for (int q = 0; q < kNodesPerPanel; ++q) {
                    const double u = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
                    const double wq = 0.5 * (b - a) * gw[q] * inv_norm * std::exp(-u * u / (2.0 * sigma_ * sigma_));
                    nodes_.push_back(u);
                    weights_.push_back(wq);
                }
            }
            // Renormalize so the quadrature integrates the kernel to exactly 1
            // and the convolved CDF keeps its limits.
            double wsum = 0.0;
            for (double wq : weights_) wsum += wq;
            for (double& wq : weights_) wq /= wsum;
        }
    }

    double operator()(double t) const {
        if (sigma_ == 0.0) return base_cdf(shape_, t);
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            acc += weights_[i] * base_cdf(shape_, t - nodes_[i]);
        return acc;
    }

private:
    PeakShape shape_;
    double sigma_ = 0.0;
    std::vector<double> nodes_, weights_;
};

}  // namespace shape_detail

std::vector<double> expected_bin_contents(const ClusterPattern& pattern, const PeakShape& shape,
                                          double total_counts, double bin_width,
                                          std::pair<double, double> range) {
    shape.validate();
    if (!(total_counts >= 0.0)) throw std::domain_error("expected_bin_contents: total_counts must be >= 0");
    if (!(bin_width > 0.0)) throw std::domain_error("expected_bin_contents: bin_width must be > 0");
    if (!(range.second > range.first)) throw std::domain_error("expected_bin_contents: empty range");
    if (pattern.entries.empty()) throw std::domain_error("expected_bin_contents: empty pattern");

    const int n_bins = static_cast<int>(std::ceil((range.second - range.first) / bin_width - 1e-9));
    const double norm = pattern.total_weight();
    if (!(norm > 0.0)) throw std::domain_error("expected_bin_contents: pattern has zero total weight");

    const shape_detail::ConvolvedCdf cdf(shape);
    std::vector<double> expected(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<double> edge(static_cast<std::size_t>(n_bins) + 1);
    for (const auto& peak : pattern.entries) {
        const double scale = total_counts * peak.weight / norm;
        for (int i = 0; i <= n_bins; ++i) edge[static_cast<std::size_t>(i)] = cdf(range.first + i * bin_width - peak.delay);
        for (int i = 0; i < n_bins; ++i) {
            const double mass = edge[static_cast<std::size_t>(i) + 1] - edge[static_cast<std::size_t>(i)];
            expected[static_cast<std::size_t>(i)] += scale * std::max(0.0, mass);
        }
    }
    return expected;
}

namespace {

CoincidenceHistogram make_histogram_frame(const ClusterPattern& pattern, double bin_width,
                                          std::pair<double, double> range, int n_bins) {
    CoincidenceHistogram h;
    h.bin_width = bin_width;
    h.t_min = range.first;
    h.counts.assign(static_cast<std::size_t>(n_bins), 0.0);
    std::string clipped;
    for (const auto& e : pattern.entries)
        if (e.delay < range.first || e.delay > range.second) {
            if (!clipped.empty()) clipped += ' ';
            clipped += format_double(e.delay);
        }
    if (!clipped.empty()) h.meta.emplace_back("warning_clipped_peaks", clipped);
    return h;
}

}  // namespace

CoincidenceHistogram synthesize_histogram(const ClusterPattern& pattern, const PeakShape& shape,
                                          long total_counts, double bin_width,
                                          std::pair<double, double> range, std::uint64_t seed) {
    if (total_counts < 1) throw std::domain_error("synthesize_histogram: total_counts must be >= 1");
    const auto expected =
        expected_bin_contents(pattern, shape, static_cast<double>(total_counts), bin_width, range);
    CoincidenceHistogram h = make_histogram_frame(pattern, bin_width, range, static_cast<int>(expected.size()));
    rng::Stream stream(seed);
    for (std::size_t i = 0; i < expected.size(); ++i)
        h.counts[i] = static_cast<double>(stream.poisson(expected[i]));
    return h;
}

CoincidenceHistogram synthesize_expected(const ClusterPattern& pattern, const PeakShape& shape,
                                         double total_counts, double bin_width,
                                         std::pair<double, double> range) {
    const auto expected = expected_bin_contents(pattern, shape, total_counts, bin_width, range);
    CoincidenceHistogram h = make_histogram_frame(pattern, bin_width, range, static_cast<int>(expected.size()));
    h.counts = expected;
    return h;
}

namespace {

std::string peak_label(int dm, int k, double delay) {
    std::string s;
    s += static_cast<char>('A' + std::abs(dm));
    s += static_cast<char>('0' + std::abs(k));
    if (delay < 0.0) s += '\'';
    return s;
}

}  // namespace

std::vector<OverlapPair> cluster_overlap_map(double delta_t, double rep_period, double merge_tol) {
    PulseSequence{delta_t, rep_period}.validate();
    if (!(merge_tol > 0.0)) throw std::domain_error("cluster_overlap_map: merge_tol must be > 0");
    std::vector<OverlapPair> pairs;
    if (std::abs(delta_t - rep_period) <= 1e-12 * rep_period) return pairs;  // single-pulse layout

    for (int kc = -2; kc <= 2; ++kc) {
        const double dc = kc * delta_t;
        for (int dm = -5; dm <= 5; ++dm) {
            if (dm == 0) continue;
            for (int ks = -2; ks <= 2; ++ks) {
                const double ds = dm * rep_period + ks * delta_t;
                const double gap = std::abs(ds - dc);
                if (gap <= merge_tol) {
                    pairs.push_back({PeakRef{0, kc, dc, peak_label(0, kc, dc)},
                                     PeakRef{dm, ks, ds, peak_label(dm, ks, ds)}, gap});
                }
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const OverlapPair& a, const OverlapPair& b) {
        return a.central.delay < b.central.delay;
    });
    return pairs;
}

void write_histogram(const std::string& path, const CoincidenceHistogram& h) {
    h.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("write_histogram: cannot open " + path);
    out << "#bin_width_ns=" << format_double(h.bin_width) << '\n';
    out << "#t_min_ns=" << format_double(h.t_min) << '\n';
    for (const auto& [key, value] : h.meta) {
        if (key == "bin_width_ns" || key == "t_min_ns") continue;
        out << '#' << key << '=' << value << '\n';
    }
    for (int i = 0; i < h.n_bins(); ++i)
        out << format_double(h.bin_center(i)) << ',' << format_double(h.counts[static_cast<std::size_t>(i)])
            << '\n';
    if (!out) throw DataError("write_histogram: write failed for " + path);
}

CoincidenceHistogram read_histogram(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("read_histogram: cannot open " + path);
    CoincidenceHistogram h;
    bool have_bw = false, have_tmin = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw DataError("read_histogram: " + path + ":" + std::to_string(line_no) +
                                ": malformed metadata line");
            const std::string key = line.substr(1, eq - 1);
            const std::string value = line.substr(eq + 1);
            if (key == "bin_width_ns") {
                h.bin_width = parse_double(value);
                have_bw = true;
            } else if (key == "t_min_ns") {
                h.t_min = parse_double(value);
                have_tmin = true;
            } else {
                h.meta.emplace_back(key, value);
            }
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError("read_histogram: " + path + ":" + std::to_string(line_no) +
                            ": expected 'delay,counts'");
        double delay, counts;
        try {
            delay = parse_double(line.substr(0, comma));
            counts = parse_double(line.substr(comma + 1));
        } catch (const DataError&) {
            throw DataError("read_histogram: " + path + ":" + std::to_string(line_no) +
                            ": malformed number");
        }
        if (!have_bw || !have_tmin)
            throw DataError("read_histogram: " + path + ":" + std::to_string(line_no) +
                            ": data before bin_width_ns/t_min_ns metadata");
        const int i = h.n_bins();
        if (std::abs(delay - h.bin_center(i)) > 1e-9 + 1e-9 * std::abs(delay))
            throw DataError("read_histogram: " + path + ":" + std::to_string(line_no) +
                            ": bin center inconsistent with metadata");
        h.counts.push_back(counts);
    }
    if (h.counts.empty()) throw DataError("read_histogram: " + path + ": no data lines");
    h.validate();
    return h;
}

}  // namespace homsim
