#pragma once

// Finite-horizon surrogates for the connectivity (phi), proximality (psi) and
// recurrence (rho) gauges, discrepancy, tau-entropy and Monte Carlo diagnostics.
// Nothing here claims a limit: every estimate is tied to an explicit horizon.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ietlab/iet.hpp"
#include "ietlab/induce.hpp"
#include "ietlab/scale.hpp"

namespace ietlab {

enum class GaugeKind { Phi, Psi, Rho };
enum class Metric { Interval, Circle };

GaugeKind parse_gauge_kind(const std::string& s);
std::string to_string(GaugeKind k);
Metric parse_metric(const std::string& s);
std::string to_string(Metric m);

struct Thresholds {
  double low = 1e-3;
  double high = 1e3;
  double delta = 0.05;
};

/// Orbit of one point with an exact shadow: the double position plus the visit
/// counts c_k, so that T^n(x0) = x0 + sum c_k h_k can be recovered exactly.
class OrbitTracker {
 public:
  OrbitTracker(const Iet& t, ExactReal x0);

  void step();
  std::uint64_t time() const { return n_; }
  double value() const { return x_; }
  /// Bound on |value() - exact()|.
  double error() const { return err_; }
  ExactReal exact() const;
  std::uint64_t exact_fallbacks() const { return fallbacks_; }
  /// Interval index used by the latest step (-1 before the first).
  int last_interval() const { return last_; }

 private:
  void resync();

  const Iet* t_;
  ExactReal x0_;
  std::vector<std::int64_t> visits_;
  double x_ = 0.0;
  double err_ = 0.0;
  std::uint64_t n_ = 0;
  std::uint64_t fallbacks_ = 0;
  int last_ = -1;
};

double distance(double a, double b, Metric m);
ExactReal distance(const ExactReal& a, const ExactReal& b, Metric m);

struct TraceOptions {
  Metric metric = Metric::Interval;
  enum class Mode { Auto, Exact, Float } mode = Mode::Auto;
  std::uint64_t exact_limit = 100000;  // Auto: exact up to this horizon
};

struct GaugeTrace {
  GaugeKind kind = GaugeKind::Rho;
  ExactReal x;
  std::optional<ExactReal> y;
  std::vector<std::uint64_t> horizons;
  std::vector<double> running_min;
  std::vector<std::uint64_t> argmin;
  /// Exact running minima, present when the orbit and s_n are both exact.
  std::vector<std::optional<ExactReal>> exact_min;
  bool exact = false;
  double error_bound = 0.0;  // float mode: bound on |running_min - true running minimum|
};

/// min over first_index <= n <= N of s_n d(.,.) for each horizon N.
GaugeTrace gauge_trace(GaugeKind kind, const Iet& t, const ScaleSequence& s, const ExactReal& x,
                       const std::optional<ExactReal>& y, const std::vector<std::uint64_t>& horizons,
                       const TraceOptions& opt = {});

/// 2, 4, 8, ... below N, then N.
std::vector<std::uint64_t> dyadic_ladder(std::uint64_t N, std::uint64_t start = 2);

struct SampleSpec {
  std::uint64_t samples = 1000;
  std::uint64_t seed = 42;
  unsigned threads = 0;  // 0: LAB_THREADS or hardware
};

/// Running minima of n^alpha d(.,.) for one sample, indexed [alpha][horizon].
std::vector<std::vector<double>> power_gauge_minima(GaugeKind kind, const Iet& t, const ExactReal& x,
                                                    const ExactReal& y, const std::vector<double>& alphas,
                                                    const std::vector<std::uint64_t>& horizons, Metric metric);

struct AlphaRow {
  double alpha = 0.0;
  double below = 0.0;       // fraction with running min < low at the horizon
  double above = 0.0;       // fraction with running min > high
  double trending_down = 0.0;  // fraction whose log running min falls with log horizon
};

struct ConstantEstimate {
  GaugeKind kind = GaugeKind::Phi;
  std::vector<AlphaRow> rows;
  std::optional<double> c_hat;        // largest alpha with below >= 1 - delta
  std::optional<double> c_hat_trend;  // largest alpha whose median sample trends down (fraction >= 1/2)
};

struct ConstantsReport {
  std::uint64_t horizon = 0;
  Thresholds thresholds;
  std::vector<ConstantEstimate> kinds;  // phi, psi, rho
};

ConstantsReport estimate_constants(const Iet& t, const std::vector<double>& alpha_grid, std::uint64_t horizon,
                                   const SampleSpec& samples, const Thresholds& th = {},
                                   Metric metric = Metric::Interval);

struct Histogram {
  std::vector<std::uint64_t> horizons;
  std::vector<double> edges;                       // log10 bin edges; first and last bins are open
  std::vector<std::vector<std::uint64_t>> counts;  // [horizon][bin]
  std::vector<double> below;                       // fraction < thresholds.low
  std::vector<double> above;                       // fraction > thresholds.high
  bool scale_two_jumpy = true;
};

/// Histograms of the block minima of s_n d(.,.) over (N_{i-1}, N_i], so that mass
/// drifting to infinity stays visible.
Histogram polarization_histogram(GaugeKind kind, const Iet& t, const ScaleSequence& s,
                                 const std::vector<std::uint64_t>& horizons, const SampleSpec& samples,
                                 const Thresholds& th = {}, Metric metric = Metric::Interval);

struct DiscrepancyResult {
  ExactReal value;
  double approx = 0.0;
  long min_count = 0;
  long max_count = 0;
  std::size_t cells = 0;
  bool exact_in_x = true;
};

/// sup over x of |(1/n) card{k < n : T^k x in J} - |J||, exactly.
DiscrepancyResult discrepancy(const Iet& t, std::uint64_t n, const Interval& J);
/// Max of the above over the grid intervals [i/g, j/g); an under-approximation of the sup over all J.
DiscrepancyResult discrepancy_grid(const Iet& t, std::uint64_t n, int grid);
/// Max over sampled x only.
double discrepancy_sampled(const Iet& t, std::uint64_t n, const Interval& J, const SampleSpec& samples);

struct OmegaEstimate {
  std::vector<std::uint64_t> n;
  std::vector<double> D;
  double slope = 0.0;
  double omega = 0.0;  // 1 + slope of log D_n against log n, clamped to [0,1]
  int grid = 4;
};

OmegaEstimate omega_discrepancy(const Iet& t, const std::vector<std::uint64_t>& n_list, int grid = 4);

struct TauReport {
  std::vector<int> ladder;
  std::vector<std::size_t> cards;
  double tau_hat = 0.0;  // max of ln card / ln n over the upper half of the ladder
  double slope = 0.0;    // least-squares slope of ln card against ln n over [n_max/8, n_max]
};

TauReport tau_entropy(const Iet& t, int n_max);

/// Least-squares slope of ln y against ln x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct BcEstimate {
  std::uint64_t n = 0;
  double c = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t hits = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;   // estimate - 3 sigma
  double ci_high = 0.0;  // estimate + 3 sigma
  double bound = 0.0;    // 4(r-1)/n^{2c}
  bool respects_bound = false;  // ci_low <= bound
  std::uint64_t exact_fallbacks = 0;
};

/// Monte Carlo measure of U_n = {(x,y) : d(T^n x, T^n y) < min(d(T^{n-1} x, T^{n-1} y), n^{-c})}.
BcEstimate proximality_bc_measure(const Iet& t, std::uint64_t n, double c, const SampleSpec& samples,
                                  Metric metric = Metric::Interval);

/// x_n for the contact gauge.
struct PointSequence {
  enum class Kind { Constant, Rotation, IetOrbit } kind = Kind::Constant;
  ExactReal start;
  ExactReal alpha;             // Rotation
  Iet iet = Iet::identity();   // IetOrbit

  static PointSequence parse(const std::string& text);  // "const:0", "rot:golden", "iet:<literal>@x0"
};

struct DecisiveReport {
  std::vector<std::uint64_t> horizons;
  std::vector<double> middle;  // fraction of y with block minimum in (low, high)
  std::vector<double> below;
  std::vector<double> above;
  Thresholds thresholds;
};

/// Block minima of s_n |x_n - y| over (N_{i-1}, N_i] stand in for the liminf.
DecisiveReport decisiveness_diagnostic(const PointSequence& points, const ScaleSequence& s,
                                       const std::vector<std::uint64_t>& horizons, const SampleSpec& samples,
                                       const Thresholds& th = {});

}  // namespace ietlab
