#include "ietlab/gauges.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "ietlab/error.hpp"
#include "ietlab/parallel.hpp"
#include "ietlab/rng.hpp"

namespace ietlab {

namespace {

constexpr double kUlp = 0x1.0p-52;
constexpr double kResync = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

unsigned threads_of(const SampleSpec& s) { return s.threads ? s.threads : lab_threads(); }

void check_horizons(const std::vector<std::uint64_t>& h, std::uint64_t first) {
  if (h.empty()) throw Error(ErrorKind::Domain, "no horizons");
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] < first) throw Error(ErrorKind::Domain, "horizon below the first index of the scale");
    if (i > 0 && h[i] <= h[i - 1]) throw Error(ErrorKind::Domain, "horizons must be strictly increasing");
  }
}

// x and y of sample i, uniform dyadic in [0,1).
std::pair<ExactReal, ExactReal> sample_pair(std::uint64_t seed, std::uint64_t i) {
  CounterRng rng(seed, i);
  const auto kx = rng.next_dyadic53();
  const auto ky = rng.next_dyadic53();
  return {CounterRng::exact_of(kx), CounterRng::exact_of(ky)};
}

}  // namespace

GaugeKind parse_gauge_kind(const std::string& s) {
  if (s == "phi") return GaugeKind::Phi;
  if (s == "psi") return GaugeKind::Psi;
  if (s == "rho") return GaugeKind::Rho;
  throw Error(ErrorKind::Config, "unknown gauge kind '" + s + "' (phi, psi, rho)");
}

std::string to_string(GaugeKind k) {
  switch (k) {
    case GaugeKind::Phi: return "phi";
    case GaugeKind::Psi: return "psi";
    case GaugeKind::Rho: return "rho";
  }
  return "?";
}

Metric parse_metric(const std::string& s) {
  if (s == "interval") return Metric::Interval;
  if (s == "circle") return Metric::Circle;
  throw Error(ErrorKind::Config, "unknown metric '" + s + "' (interval, circle)");
}

std::string to_string(Metric m) { return m == Metric::Interval ? "interval" : "circle"; }

// ---------------------------------------------------------------------------

OrbitTracker::OrbitTracker(const Iet& t, ExactReal x0) : t_(&t), x0_(std::move(x0)), visits_(t.size(), 0) {
  if (x0_.sign() < 0 || x0_ >= ExactReal(1)) throw Error(ErrorKind::Domain, "orbit start must lie in [0,1)");
  x_ = x0_.to_double();
  err_ = 8 * kUlp;
}

ExactReal OrbitTracker::exact() const {
  ExactReal out = x0_;
  const auto& h = t_->translations();
  for (std::size_t k = 0; k < visits_.size(); ++k) {
    if (visits_[k] != 0) out += ExactReal(static_cast<long>(visits_[k])) * h[k];
  }
  return out;
}

void OrbitTracker::resync() {
  x_ = exact().to_double();
  err_ = 8 * kUlp;
}

void OrbitTracker::step() {
  const auto& bp = t_->breakpoints_d();
  const auto& h = t_->translations_d();
  const int r = t_->size();
  int k = 0;
  while (k + 1 < r && x_ >= bp[k + 1]) ++k;
  const double tol = err_ + kUlp;
  const bool ambiguous = (k > 0 && x_ - bp[k] <= tol) || (k + 1 < r && bp[k + 1] - x_ <= tol);
  ++n_;
  if (ambiguous) {
    ++fallbacks_;
    k = t_->interval_of(exact());
    ++visits_[k];
    last_ = k;
    resync();
    return;
  }
  ++visits_[k];
  last_ = k;
  x_ += h[k];
  err_ += kUlp;
  if (err_ > kResync) resync();
}

double distance(double a, double b, Metric m) {
  double d = std::fabs(a - b);
  if (m == Metric::Circle) d = std::min(d, 1.0 - d);
  return d;
}

ExactReal distance(const ExactReal& a, const ExactReal& b, Metric m) {
  ExactReal d = (a - b).abs();
  if (m == Metric::Circle) d = min(d, ExactReal(1) - d);
  return d;
}

// ---------------------------------------------------------------------------

std::vector<std::uint64_t> dyadic_ladder(std::uint64_t N, std::uint64_t start) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t n = std::max<std::uint64_t>(start, 1); n < N; n *= 2) out.push_back(n);
  out.push_back(N);
  return out;
}

GaugeTrace gauge_trace(GaugeKind kind, const Iet& t, const ScaleSequence& s, const ExactReal& x,
                       const std::optional<ExactReal>& y, const std::vector<std::uint64_t>& horizons,
                       const TraceOptions& opt) {
  const std::uint64_t first = s.first_index();
  check_horizons(horizons, first);
  if (kind != GaugeKind::Rho && !y) throw Error(ErrorKind::Domain, "phi and psi traces need a second point y");
  if (kind == GaugeKind::Rho && y) throw Error(ErrorKind::Domain, "rho trace takes no second point");
  const std::uint64_t N = horizons.back();

  GaugeTrace out;
  out.kind = kind;
  out.x = x;
  out.y = y;
  out.horizons = horizons;

  bool exact = opt.mode == TraceOptions::Mode::Exact ||
               (opt.mode == TraceOptions::Mode::Auto && N <= opt.exact_limit);
  exact = exact && s.exact_at(first).has_value();
  out.exact = exact;

  OrbitTracker tx(t, x);
  std::optional<OrbitTracker> ty;
  if (kind == GaugeKind::Psi) ty.emplace(t, *y);
  const double xd = x.to_double();
  const double yd = y ? y->to_double() : 0.0;

  auto exact_value = [&](std::uint64_t n) {
    const ExactReal sn(*s.exact_at(n));
    const ExactReal other = kind == GaugeKind::Phi ? *y : kind == GaugeKind::Psi ? ty->exact() : x;
    return sn * distance(tx.exact(), other, opt.metric);
  };

  double best = kInf;
  double best_err = 0.0;
  std::optional<ExactReal> best_exact;
  std::uint64_t arg = 0;
  std::size_t next_h = 0;

  for (std::uint64_t n = 1; n <= N; ++n) {
    tx.step();
    if (ty) ty->step();
    if (n < first) continue;
    double d;
    double err = tx.error() + 4 * kUlp;
    switch (kind) {
      case GaugeKind::Phi: d = distance(tx.value(), yd, opt.metric); break;
      case GaugeKind::Psi:
        d = distance(tx.value(), ty->value(), opt.metric);
        err += ty->error();
        break;
      default: d = distance(tx.value(), xd, opt.metric); break;
    }
    const double sn = s(n);
    const double v = sn * d;
    const double tol = sn * err + 4 * kUlp * v;
    if (exact) {
      if (v <= best + tol) {
        ExactReal e = exact_value(n);
        if (!best_exact || e < *best_exact) {
          best = e.to_double();
          best_exact = std::move(e);
          arg = n;
        }
      }
    } else {
      best_err = std::max(best_err, tol);
      if (v < best) {
        best = v;
        arg = n;
      }
    }
    if (n == horizons[next_h]) {
      out.running_min.push_back(best);
      out.argmin.push_back(arg);
      out.exact_min.push_back(best_exact);
      out.error_bound = std::max(out.error_bound, best_err);
      ++next_h;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Power gauges for many exponents at once.

namespace {

struct KindMask {
  bool phi = false, psi = false, rho = false;
};

// out[kind][alpha][horizon]; kinds not requested stay empty.
using MinTable = std::array<std::vector<std::vector<double>>, 3>;

MinTable power_minima(const Iet& t, const ExactReal& x, const ExactReal& y, const std::vector<double>& alphas,
                      const std::vector<std::uint64_t>& horizons, Metric metric, KindMask mask) {
  check_horizons(horizons, 1);
  const std::size_t A = alphas.size();
  const std::uint64_t N = horizons.back();
  const bool want[3] = {mask.phi, mask.psi, mask.rho};
  MinTable out;
  std::array<std::vector<double>, 3> m;
  std::array<double, 3> thr{};
  for (int g = 0; g < 3; ++g) {
    if (!want[g]) continue;
    out[g].assign(A, {});
    m[g].assign(A, kInf);
    thr[g] = kInf;
  }
  OrbitTracker tx(t, x);
  std::optional<OrbitTracker> ty;
  if (mask.psi) ty.emplace(t, y);
  const double xd = x.to_double();
  const double yd = y.to_double();

  // n^{-alpha} at the start of the current block bounds n^{-alpha} inside it.
  std::vector<double> inv_pow(A, 1.0);
  std::uint64_t block_end = 0;
  auto refresh = [&](int g) {
    double t_max = 0.0;
    for (std::size_t a = 0; a < A; ++a) t_max = std::max(t_max, m[g][a] * inv_pow[a]);
    thr[g] = t_max;
  };

  std::size_t next_h = 0;
  for (std::uint64_t n = 1; n <= N; ++n) {
    tx.step();
    if (ty) ty->step();
    if (n > block_end) {
      for (std::size_t a = 0; a < A; ++a) inv_pow[a] = std::pow(static_cast<double>(n), -alphas[a]);
      block_end = n + n / 32;
      for (int g = 0; g < 3; ++g) {
        if (want[g]) refresh(g);
      }
    }
    double d[3] = {0, 0, 0};
    if (mask.phi) d[0] = distance(tx.value(), yd, metric);
    if (mask.psi) d[1] = distance(tx.value(), ty->value(), metric);
    if (mask.rho) d[2] = distance(tx.value(), xd, metric);
    for (int g = 0; g < 3; ++g) {
      if (!want[g] || !(d[g] < thr[g])) continue;
      bool changed = false;
      for (std::size_t a = 0; a < A; ++a) {
        const double v = std::pow(static_cast<double>(n), alphas[a]) * d[g];
        if (v < m[g][a]) {
          m[g][a] = v;
          changed = true;
        }
      }
      if (changed) refresh(g);
    }
    if (n == horizons[next_h]) {
      for (int g = 0; g < 3; ++g) {
        if (!want[g]) continue;
        for (std::size_t a = 0; a < A; ++a) out[g][a].push_back(m[g][a]);
      }
      ++next_h;
    }
  }
  return out;
}

int kind_index(GaugeKind k) { return k == GaugeKind::Phi ? 0 : k == GaugeKind::Psi ? 1 : 2; }

}  // namespace

std::vector<std::vector<double>> power_gauge_minima(GaugeKind kind, const Iet& t, const ExactReal& x,
                                                    const ExactReal& y, const std::vector<double>& alphas,
                                                    const std::vector<std::uint64_t>& horizons, Metric metric) {
  KindMask mask;
  mask.phi = kind == GaugeKind::Phi;
  mask.psi = kind == GaugeKind::Psi;
  mask.rho = kind == GaugeKind::Rho;
  return power_minima(t, x, y, alphas, horizons, metric, mask)[kind_index(kind)];
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::Domain, "slope needs two or more points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = k * sxx - sx * sx;
  return den == 0.0 ? 0.0 : (k * sxy - sx * sy) / den;
}

ConstantsReport estimate_constants(const Iet& t, const std::vector<double>& alpha_grid, std::uint64_t horizon,
                                   const SampleSpec& samples, const Thresholds& th, Metric metric) {
  if (alpha_grid.empty()) throw Error(ErrorKind::Domain, "empty alpha grid");
  for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
    if (!(alpha_grid[i] > 0) || (i > 0 && alpha_grid[i] <= alpha_grid[i - 1]))
      throw Error(ErrorKind::Domain, "alpha grid must be positive and increasing");
  }
  const auto ladder = dyadic_ladder(horizon, 2);
  // trend over roughly the last ten doublings
  std::size_t trend_from = 0;
  while (trend_from + 1 < ladder.size() && ladder[trend_from] < std::max<std::uint64_t>(2, horizon >> 10)) ++trend_from;

  const std::size_t A = alpha_grid.size();
  const std::uint64_t S = samples.samples;
  // flags[i][g][a]: bit 0 below, bit 1 above, bit 2 trending down
  std::vector<std::array<std::vector<unsigned char>, 3>> flags(S);
  parallel_for(S, threads_of(samples), [&](std::uint64_t i) {
    const auto [x, y] = sample_pair(samples.seed, i);
    const MinTable mt = power_minima(t, x, y, alpha_grid, ladder, metric, {true, true, true});
    for (int g = 0; g < 3; ++g) {
      flags[i][g].assign(A, 0);
      for (std::size_t a = 0; a < A; ++a) {
        const auto& row = mt[g][a];
        const double last = row.back();
        unsigned char f = 0;
        if (last < th.low) f |= 1;
        if (last > th.high) f |= 2;
        bool down = last == 0.0;
        if (!down && ladder.size() - trend_from >= 2) {
          std::vector<double> hx, hy;
          for (std::size_t j = trend_from; j < ladder.size(); ++j) {
            hx.push_back(static_cast<double>(ladder[j]));
            hy.push_back(row[j]);
          }
          down = loglog_slope(hx, hy) < -0.02;
        }
        if (down) f |= 4;
        flags[i][g][a] = f;
      }
    }
  });

  ConstantsReport rep;
  rep.horizon = horizon;
  rep.thresholds = th;
  const GaugeKind kinds[3] = {GaugeKind::Phi, GaugeKind::Psi, GaugeKind::Rho};
  for (int g = 0; g < 3; ++g) {
    ConstantEstimate ce;
    ce.kind = kinds[g];
    for (std::size_t a = 0; a < A; ++a) {
      std::uint64_t below = 0, above = 0, down = 0;
      for (std::uint64_t i = 0; i < S; ++i) {
        const auto f = flags[i][g][a];
        below += f & 1;
        above += (f >> 1) & 1;
        down += (f >> 2) & 1;
      }
      const double den = static_cast<double>(std::max<std::uint64_t>(S, 1));
      AlphaRow row{alpha_grid[a], below / den, above / den, down / den};
      if (row.below >= 1 - th.delta) ce.c_hat = row.alpha;
      if (row.trending_down >= 0.5) ce.c_hat_trend = row.alpha;
      ce.rows.push_back(row);
    }
    rep.kinds.push_back(std::move(ce));
  }
  return rep;
}

// ---------------------------------------------------------------------------

Histogram polarization_histogram(GaugeKind kind, const Iet& t, const ScaleSequence& s,
                                 const std::vector<std::uint64_t>& horizons, const SampleSpec& samples,
                                 const Thresholds& th, Metric metric) {
  const std::uint64_t first = s.first_index();
  check_horizons(horizons, first);
  const std::uint64_t N = horizons.back();
  std::vector<double> sv(N + 1, 0.0);
  for (std::uint64_t n = first; n <= N; ++n) sv[n] = s(n);

  Histogram h;
  h.horizons = horizons;
  for (int e = -6; e <= 6; ++e) h.edges.push_back(e);
  h.scale_two_jumpy = classify_scale(s).two_jumpy;
  const std::size_t H = horizons.size();
  const std::size_t bins = h.edges.size() + 1;

  std::vector<std::vector<double>> mins(samples.samples);
  parallel_for(samples.samples, threads_of(samples), [&](std::uint64_t i) {
    const auto [x, y] = sample_pair(samples.seed, i);
    OrbitTracker tx(t, x);
    std::optional<OrbitTracker> ty;
    if (kind == GaugeKind::Psi) ty.emplace(t, y);
    const double xd = x.to_double(), yd = y.to_double();
    double best = kInf;
    std::size_t next_h = 0;
    auto& out = mins[i];
    for (std::uint64_t n = 1; n <= N; ++n) {
      tx.step();
      if (ty) ty->step();
      if (n >= first) {
        const double other = kind == GaugeKind::Phi ? yd : kind == GaugeKind::Psi ? ty->value() : xd;
        best = std::min(best, sv[n] * distance(tx.value(), other, metric));
      }
      if (n == horizons[next_h]) {
        out.push_back(best);
        best = kInf;
        ++next_h;
      }
    }
  });

  h.counts.assign(H, std::vector<std::uint64_t>(bins, 0));
  h.below.assign(H, 0.0);
  h.above.assign(H, 0.0);
  const double den = static_cast<double>(std::max<std::uint64_t>(samples.samples, 1));
  for (std::size_t j = 0; j < H; ++j) {
    for (const auto& m : mins) {
      const double v = m[j];
      std::size_t b = 0;
      if (v > 0) {
        const double l = std::log10(v);
        b = static_cast<std::size_t>(std::upper_bound(h.edges.begin(), h.edges.end(), l) - h.edges.begin());
      }
      ++h.counts[j][b];
      if (v < th.low) h.below[j] += 1 / den;
      if (v > th.high) h.above[j] += 1 / den;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Discrepancy.

namespace {

// For cut points c_0 < ... < c_m and every pair i < j, the least and largest value over
// x of card{k < n : T^k x in [c_i, c_j)}. The count is constant between consecutive
// points of {T^{-k} c} and the discontinuities of T^k, so one orbit per piece suffices.
std::vector<std::pair<long, long>> count_ranges(const Iet& t, std::uint64_t n, const std::vector<ExactReal>& cuts) {
  const Iet tinv = invert(t);
  const ExactReal one(1);
  std::vector<ExactReal> pts{ExactReal(0)};
  auto push_orbit = [&](ExactReal p, std::uint64_t steps) {
    for (std::uint64_t k = 0; k < steps; ++k) {
      if (k > 0) p = tinv(p);
      pts.push_back(p);
    }
  };
  for (const auto& c : cuts) {
    if (c < one) push_orbit(c, n);
  }
  for (int i = 1; i < t.size(); ++i) push_orbit(t.breakpoints()[i], n - 1);
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) keyed.emplace_back(pts[i].to_double(), i);
  std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
    if (std::fabs(a.first - b.first) > 1e-12) return a.first < b.first;
    return pts[a.second] < pts[b.second];
  });
  std::vector<ExactReal> sorted;
  for (const auto& [d, i] : keyed) {
    if (sorted.empty() || !(sorted.back() == pts[i])) sorted.push_back(pts[i]);
  }
  sorted.push_back(one);

  const std::size_t m = cuts.size();
  std::vector<double> cd;
  for (const auto& c : cuts) cd.push_back(c.to_double());
  const std::size_t pieces = sorted.size() - 1;
  // tally[p][c]: visits of the piece-p orbit to [c_c, c_{c+1})
  std::vector<std::vector<long>> tally(pieces, std::vector<long>(m > 0 ? m - 1 : 0, 0));
  parallel_for(pieces, lab_threads(), [&](std::uint64_t p) {
    const ExactReal mid = (sorted[p] + sorted[p + 1]) / ExactReal(2);
    OrbitTracker tr(t, mid);
    for (std::uint64_t k = 0; k < n; ++k) {
      if (k > 0) tr.step();
      const double v = tr.value();
      const double tol = tr.error() + 4 * kUlp;
      bool near = false;
      for (double c : cd) near = near || std::fabs(v - c) <= tol;
      int cell = -1;
      if (near) {
        const ExactReal x = tr.exact();
        for (std::size_t c = 0; c + 1 < m; ++c) {
          if (cuts[c] <= x && x < cuts[c + 1]) cell = static_cast<int>(c);
        }
      } else {
        for (std::size_t c = 0; c + 1 < m; ++c) {
          if (cd[c] <= v && v < cd[c + 1]) cell = static_cast<int>(c);
        }
      }
      if (cell >= 0) ++tally[p][cell];
    }
  });

  std::vector<std::pair<long, long>> out;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      long lo = std::numeric_limits<long>::max(), hi = std::numeric_limits<long>::min();
      for (const auto& tl : tally) {
        long c = 0;
        for (std::size_t k = i; k < j; ++k) c += tl[k];
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
      out.emplace_back(lo, hi);
    }
  }
  return out;
}

DiscrepancyResult from_counts(long cmin, long cmax, std::uint64_t n, const ExactReal& len) {
  DiscrepancyResult r;
  const ExactReal nn(static_cast<long>(n));
  const ExactReal a = (ExactReal(cmax) / nn - len).abs();
  const ExactReal b = (ExactReal(cmin) / nn - len).abs();
  r.value = max(a, b);
  r.approx = r.value.to_double();
  r.min_count = cmin;
  r.max_count = cmax;
  r.cells = 1;
  return r;
}

}  // namespace

DiscrepancyResult discrepancy(const Iet& t, std::uint64_t n, const Interval& J) {
  if (n < 1) throw Error(ErrorKind::Domain, "n must be >= 1");
  if (J.lo.sign() < 0 || J.hi > ExactReal(1) || !(J.lo < J.hi)) throw Error(ErrorKind::Domain, "J must be a nonempty subinterval of [0,1)");
  const auto r = count_ranges(t, n, {J.lo, J.hi});
  return from_counts(r[0].first, r[0].second, n, J.length());
}

DiscrepancyResult discrepancy_grid(const Iet& t, std::uint64_t n, int grid) {
  if (n < 1 || grid < 1) throw Error(ErrorKind::Domain, "n and grid must be >= 1");
  std::vector<ExactReal> cuts;
  for (int i = 0; i <= grid; ++i) cuts.push_back(ExactReal::rational(i, grid));
  const auto ranges = count_ranges(t, n, cuts);
  DiscrepancyResult best;
  std::size_t idx = 0;
  for (int i = 0; i < grid; ++i) {
    for (int j = i + 1; j <= grid; ++j, ++idx) {
      auto r = from_counts(ranges[idx].first, ranges[idx].second, n, ExactReal::rational(j - i, grid));
      if (idx == 0 || best.value < r.value) best = r;
    }
  }
  best.cells = ranges.size();
  return best;
}

double discrepancy_sampled(const Iet& t, std::uint64_t n, const Interval& J, const SampleSpec& samples) {
  if (n < 1) throw Error(ErrorKind::Domain, "n must be >= 1");
  const double a = J.lo.to_double(), b = J.hi.to_double();
  const double len = J.length().to_double();
  std::vector<double> dev(samples.samples, 0.0);
  parallel_for(samples.samples, threads_of(samples), [&](std::uint64_t i) {
    CounterRng rng(samples.seed, i);
    OrbitTracker tx(t, CounterRng::exact_of(rng.next_dyadic53()));
    long count = 0;
    for (std::uint64_t k = 0; k < n; ++k) {
      if (k > 0) tx.step();
      const double v = tx.value();
      const double tol = tx.error() + 4 * kUlp;
      bool in;
      if (std::fabs(v - a) <= tol || std::fabs(v - b) <= tol) {
        in = J.contains(tx.exact());
      } else {
        in = a <= v && v < b;
      }
      count += in;
    }
    dev[i] = std::fabs(static_cast<double>(count) / static_cast<double>(n) - len);
  });
  double best = 0.0;
  for (double d : dev) best = std::max(best, d);
  return best;
}

OmegaEstimate omega_discrepancy(const Iet& t, const std::vector<std::uint64_t>& n_list, int grid) {
  if (n_list.size() < 2) throw Error(ErrorKind::Domain, "need at least two horizons");
  OmegaEstimate o;
  o.grid = grid;
  std::vector<double> xs, ys;
  for (auto n : n_list) {
    const double D = discrepancy_grid(t, n, grid).approx;
    o.n.push_back(n);
    o.D.push_back(D);
    if (D > 0) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(D);
    }
  }
  o.slope = xs.size() >= 2 ? loglog_slope(xs, ys) : -1.0;
  o.omega = std::clamp(1.0 + o.slope, 0.0, 1.0);
  return o;
}

TauReport tau_entropy(const Iet& t, int n_max) {
  if (n_max < 2) throw Error(ErrorKind::Domain, "n_max must be >= 2");
  TauReport r;
  for (auto n : dyadic_ladder(static_cast<std::uint64_t>(n_max), 2)) r.ladder.push_back(static_cast<int>(n));
  r.cards = delta_prime_cards(t, r.ladder);
  const std::size_t L = r.ladder.size();
  for (std::size_t i = L / 2; i < L; ++i) {
    r.tau_hat = std::max(r.tau_hat, std::log(static_cast<double>(r.cards[i])) / std::log(r.ladder[i]));
  }
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < L; ++i) {
    if (r.ladder[i] * 8 >= n_max) {
      xs.push_back(r.ladder[i]);
      ys.push_back(static_cast<double>(r.cards[i]));
    }
  }
  r.slope = xs.size() >= 2 ? loglog_slope(xs, ys) : 0.0;
  return r;
}

// ---------------------------------------------------------------------------

BcEstimate proximality_bc_measure(const Iet& t, std::uint64_t n, double c, const SampleSpec& samples, Metric metric) {
  if (n < 2) throw Error(ErrorKind::Domain, "n must be >= 2");
  const double cap = std::pow(static_cast<double>(n), -c);
  const std::uint64_t S = samples.samples;
  std::vector<unsigned char> hit(S, 0);
  std::vector<std::uint64_t> fallbacks(S, 0);
  parallel_for(S, threads_of(samples), [&](std::uint64_t i) {
    const auto [x, y] = sample_pair(samples.seed, i);
    OrbitTracker tx(t, x), ty(t, y);
    for (std::uint64_t k = 0; k + 1 < n; ++k) {
      tx.step();
      ty.step();
    }
    const double prev = distance(tx.value(), ty.value(), metric);
    const double prev_err = tx.error() + ty.error();
    const ExactReal px = tx.exact(), py = ty.exact();  // only used on ties
    tx.step();
    ty.step();
    fallbacks[i] = tx.exact_fallbacks() + ty.exact_fallbacks();
    // same interval: same translation, same distance
    if (tx.last_interval() == ty.last_interval()) return;
    const double cur = distance(tx.value(), ty.value(), metric);
    const double tol = prev_err + tx.error() + ty.error() + 8 * kUlp;
    const double bound = std::min(prev, cap);
    if (cur < bound - tol) {
      hit[i] = 1;
    } else if (cur <= bound + tol) {
      ++fallbacks[i];
      const ExactReal dc = distance(tx.exact(), ty.exact(), metric);
      const ExactReal dp = distance(px, py, metric);
      hit[i] = dc < dp && dc.to_double() < cap;
    }
  });
  BcEstimate r;
  r.n = n;
  r.c = c;
  r.samples = S;
  r.hits = std::accumulate(hit.begin(), hit.end(), std::uint64_t{0});
  r.exact_fallbacks = std::accumulate(fallbacks.begin(), fallbacks.end(), std::uint64_t{0});
  const double N = static_cast<double>(std::max<std::uint64_t>(S, 1));
  r.estimate = r.hits / N;
  r.std_error = std::sqrt(r.estimate * (1 - r.estimate) / N);
  r.ci_low = r.estimate - 3 * r.std_error;
  r.ci_high = r.estimate + 3 * r.std_error;
  r.bound = 4.0 * (t.size() - 1) / std::pow(static_cast<double>(n), 2 * c);
  r.respects_bound = r.ci_low <= r.bound;
  return r;
}

// ---------------------------------------------------------------------------

PointSequence PointSequence::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw Error(ErrorKind::Parse, "point sequence needs a kind prefix: '" + text + "'");
  const std::string kind = text.substr(0, colon);
  std::string rest = text.substr(colon + 1);
  PointSequence p;
  if (kind == "const") {
    p.kind = Kind::Constant;
    p.start = ExactReal::parse(rest);
    return p;
  }
  std::string start = "0";
  if (const auto at = rest.rfind('@'); at != std::string::npos) {
    start = rest.substr(at + 1);
    rest = rest.substr(0, at);
  }
  p.start = mod1(ExactReal::parse(start));
  if (kind == "rot") {
    p.kind = Kind::Rotation;
    p.alpha = ExactReal::parse(rest);
    p.iet = Iet::rotation(p.alpha);
  } else if (kind == "iet") {
    p.kind = Kind::IetOrbit;
    p.iet = Iet::parse(rest);
  } else {
    throw Error(ErrorKind::Parse, "unknown point sequence kind '" + kind + "' (const, rot, iet)");
  }
  return p;
}

DecisiveReport decisiveness_diagnostic(const PointSequence& points, const ScaleSequence& s,
                                       const std::vector<std::uint64_t>& horizons, const SampleSpec& samples,
                                       const Thresholds& th) {
  const std::uint64_t first = s.first_index();
  check_horizons(horizons, first);
  const std::uint64_t N = horizons.back();
  std::vector<double> xs(N + 1, 0.0), sv(N + 1, 0.0);
  if (points.kind == PointSequence::Kind::Constant) {
    std::fill(xs.begin(), xs.end(), points.start.to_double());
  } else {
    OrbitTracker tr(points.iet, points.start);
    for (std::uint64_t n = 1; n <= N; ++n) {
      tr.step();
      xs[n] = tr.value();
    }
  }
  for (std::uint64_t n = first; n <= N; ++n) sv[n] = s(n);

  const std::size_t H = horizons.size();
  // 0 below, 1 middle, 2 above, per horizon
  std::vector<std::vector<unsigned char>> cls(samples.samples);
  parallel_for(samples.samples, threads_of(samples), [&](std::uint64_t i) {
    CounterRng rng(samples.seed, i);
    const double y = rng.uniform();
    auto& out = cls[i];
    std::uint64_t lo = first;
    for (std::size_t j = 0; j < H; ++j) {
      double m = kInf;
      for (std::uint64_t n = lo; n <= horizons[j]; ++n) m = std::min(m, sv[n] * std::fabs(xs[n] - y));
      out.push_back(m < th.low ? 0 : m > th.high ? 2 : 1);
      lo = horizons[j] + 1;
    }
  });

  DecisiveReport r;
  r.horizons = horizons;
  r.thresholds = th;
  r.below.assign(H, 0.0);
  r.middle.assign(H, 0.0);
  r.above.assign(H, 0.0);
  const double den = static_cast<double>(std::max<std::uint64_t>(samples.samples, 1));
  for (const auto& c : cls) {
    for (std::size_t j = 0; j < H; ++j) {
      (c[j] == 0 ? r.below : c[j] == 1 ? r.middle : r.above)[j] += 1 / den;
    }
  }
  return r;
}

}  // namespace ietlab
