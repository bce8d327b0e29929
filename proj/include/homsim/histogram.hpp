#pragma once

// Coincidence-peak patterns from brute-force pathway enumeration, and
// synthesis of binned coincidence histograms (peak shapes, Gaussian
// instrument response, Poisson counting noise).
//
// Geometry: a two-pulse excitation sequence (separation delta_t, period T)
// behind a delay-matched unbalanced interferometer produces five-peak
// clusters at every multiple of T, with satellites at +-delta_t, +-2 delta_t.
// At delta_t == T the double-pulse train degenerates to the plain laser
// train; the enumeration then switches to one photon per period with arm
// delay T, which yields the classic ... 4 : 4 : 3 : 2(1-V) : 3 : 4 : 4 ...
// peak sequence.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "homsim/model.hpp"

namespace homsim {

struct PatternEntry {
    double delay = 0.0;   // ns
    double weight = 0.0;  // relative coincidence area, >= 0
};

struct ClusterPattern {
    std::vector<PatternEntry> entries;  // unique delays, ascending, reflection-symmetric
    double delta_t = 0.0;
    double rep_period = 0.0;
    int n_periods = 0;
    double visibility = 0.0;
    BeamsplitterParams bs;
    bool single_pulse_layout = false;  // delta_t == rep_period degeneracy

    double total_weight() const;
};

// All coincidence pathways (pulse x period) x (short/long arm) x (detector
// routing with weights R, T), accumulated by arrival-time difference over the
// window +-(n_periods * T + 2 delta_t). The input coupler is taken as
// balanced; the A-B correlator is start/stop symmetrized. Pathways with
// coinciding arrival times interfere: their weight is scaled by (1 - v).
ClusterPattern enumerate_coincidence_pattern(double delta_t, double rep_period, int n_periods,
                                             double v, const BeamsplitterParams& bs);

struct PeakShape {
    enum class Kind { Lorentzian, TwoSidedExponential };

    Kind kind = Kind::TwoSidedExponential;
    double width = 1.0;      // FWHM for Lorentzian; decay time 1/Gamma for exponential (ns)
    double irf_fwhm = 0.35;  // Gaussian instrument response FWHM (ns); 0 disables

    void validate() const;
};

struct CoincidenceHistogram {
    double bin_width = 0.0;  // ns, uniform
    double t_min = 0.0;      // left edge of bin 0 (ns)
    std::vector<double> counts;
    // Free-form provenance, order-preserving; written as '#key=value' lines.
    std::vector<std::pair<std::string, std::string>> meta;

    int n_bins() const { return static_cast<int>(counts.size()); }
    double bin_center(int i) const { return t_min + (i + 0.5) * bin_width; }
    double bin_left(int i) const { return t_min + i * bin_width; }
    void validate() const;
};

// Expected bin contents of the noiseless forward model: total_counts times
// the weight-normalized, IRF-convolved peak shape integrated over each bin.
std::vector<double> expected_bin_contents(const ClusterPattern& pattern, const PeakShape& shape,
                                          double total_counts, double bin_width,
                                          std::pair<double, double> range);

// Poisson-realized histogram, deterministic per seed. Peaks whose centers
// fall outside the range are clipped into it (warning metadata, not an error).
CoincidenceHistogram synthesize_histogram(const ClusterPattern& pattern, const PeakShape& shape,
                                          long total_counts, double bin_width,
                                          std::pair<double, double> range, std::uint64_t seed);

// Infinite-statistics variant: bins carry the expected contents directly.
CoincidenceHistogram synthesize_expected(const ClusterPattern& pattern, const PeakShape& shape,
                                         double total_counts, double bin_width,
                                         std::pair<double, double> range);

// Peak labels: cluster letter by period offset (A = central, B = +-1, ...),
// satellite index |k| in 0..2, prime for negative delay. The paper-style
// names come out as A0, A1, A1', A2, A2', B2, B2', C2, C2', ...
struct PeakRef {
    int dm = 0;          // signed period offset of the owning cluster
    int k = 0;           // signed satellite index within the cluster
    double delay = 0.0;  // ns
    std::string label;
};

struct OverlapPair {
    PeakRef central;    // member of the zero-delay cluster
    PeakRef satellite;  // member of a neighboring cluster
    double gap = 0.0;   // |delay difference| (ns)
};

// Which labeled peaks of neighboring clusters land within merge_tol of
// central-cluster peaks. The default tolerance is the resolvability floor of
// the area fits (about one fitted peak FWHM), which reproduces the standard
// overlap assignments: none at delta_t = 2 ns, B2/B2' at 4 ns, C2/C2' at
// 8 ns (T = 12.5 ns). Empty in the single-pulse layout.
std::vector<OverlapPair> cluster_overlap_map(double delta_t, double rep_period,
                                             double merge_tol = 1.5);

// Histogram file format: '#key=value' metadata lines (bin_width_ns and
// t_min_ns always present), then one "delay,counts" line per bin with the
// bin-center delay. Numbers are shortest round-trip decimals, so
// write -> read -> write is byte-identical.
void write_histogram(const std::string& path, const CoincidenceHistogram& h);
CoincidenceHistogram read_histogram(const std::string& path);

}  // namespace homsim
