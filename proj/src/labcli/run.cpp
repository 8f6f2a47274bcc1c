#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "ietlab/dioph.hpp"
#include "ietlab/error.hpp"
#include "ietlab/gauges.hpp"
#include "ietlab/induce.hpp"
#include "ietlab/labcli.hpp"
#include "ietlab/parallel.hpp"
#include "ietlab/rng.hpp"

namespace ietlab::lab {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string big(const mpz_class& z) { return z.get_str(); }

json big_list(const std::vector<mpz_class>& v, std::size_t count = SIZE_MAX) {
  json a = json::array();
  for (std::size_t i = 0; i < v.size() && i < count; ++i) a.push_back(big(v[i]));
  return a;
}

json opt_bool(const std::optional<bool>& b) { return b ? json(*b) : json(nullptr); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    const auto b = cur.find_first_not_of(' ');
    const auto e = cur.find_last_not_of(' ');
    out.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
  }
  return out;
}

// Typed access to the parameter map. Every value read (default or given) is echoed.
class Params {
 public:
  Params(const ExperimentConfig& cfg, json& echo) : cfg_(cfg), echo_(echo) {}

  std::string str(const std::string& key, const std::string& def) { return take(key, def); }

  std::optional<std::string> maybe(const std::string& key) {
    const auto it = cfg_.params.find(key);
    if (it == cfg_.params.end()) return std::nullopt;
    return take(key, "");
  }

  std::string required(const std::string& key) {
    if (!cfg_.params.count(key)) throw Error(ErrorKind::Config, "parameter '" + key + "' is required for " + cfg_.experiment);
    return take(key, "");
  }

  double real(const std::string& key, double def) {
    const std::string v = take(key, fmt(def));
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, "parameter '" + key + "': not a number: '" + v + "'");
    }
  }

  std::uint64_t count(const std::string& key, std::uint64_t def) { return to_count(key, take(key, std::to_string(def))); }

  int integer(const std::string& key, int def) {
    const auto v = count(key, static_cast<std::uint64_t>(def));
    if (v > 1'000'000'000ULL) throw Error(ErrorKind::Config, "parameter '" + key + "' too large");
    return static_cast<int>(v);
  }

  bool flag(const std::string& key, bool def) {
    const std::string v = take(key, def ? "true" : "false");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorKind::Config, "parameter '" + key + "': expected true or false, got '" + v + "'");
  }

  std::vector<std::uint64_t> counts(const std::string& key, const std::string& def) {
    std::vector<std::uint64_t> out;
    for (const auto& s : split(take(key, def), ',')) out.push_back(to_count(key, s));
    return out;
  }

  std::vector<double> reals(const std::string& key, const std::string& def) {
    std::vector<double> out;
    for (const auto& s : split(take(key, def), ',')) {
      try {
        out.push_back(std::stod(s));
      } catch (const std::exception&) {
        throw Error(ErrorKind::Config, "parameter '" + key + "': not a number: '" + s + "'");
      }
    }
    return out;
  }

  /// Unknown parameters are configuration errors.
  void finish() const {
    for (const auto& [k, v] : cfg_.params) {
      if (!seen_.count(k)) throw Error(ErrorKind::Config, "unknown parameter '" + k + "' for experiment " + cfg_.experiment);
    }
  }

 private:
  std::string take(const std::string& key, const std::string& def) {
    seen_.insert(key);
    const auto it = cfg_.params.find(key);
    const std::string v = it == cfg_.params.end() ? def : it->second;
    echo_[key] = v;
    return v;
  }

  static std::uint64_t to_count(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size() || d < 0 || d != std::floor(d) || d > 1e18) throw std::invalid_argument(v);
      return static_cast<std::uint64_t>(d);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, "parameter '" + key + "': expected a non-negative integer, got '" + v + "'");
    }
  }

  const ExperimentConfig& cfg_;
  json& echo_;
  std::set<std::string> seen_;
};

Iet target_iet(const ExperimentConfig& cfg) {
  if (cfg.target.empty()) throw Error(ErrorKind::Config, cfg.experiment + " needs a target IET (--iet)");
  const std::string& t = cfg.target;
  // "rot:golden" is shorthand for "rot: alpha=golden"
  if (t.rfind("rot:", 0) == 0 && t.find('=') == std::string::npos) return Iet::rotation(ExactReal::parse(t.substr(4)));
  if (t.rfind("iet:", 0) == 0 || t.rfind("rot:", 0) == 0) return Iet::parse(t);
  return Iet::rotation(ExactReal::parse(t));
}

ExactReal target_alpha(const ExperimentConfig& cfg, const char* def) {
  return ExactReal::parse(cfg.target.empty() ? def : cfg.target);
}

std::vector<std::uint64_t> horizon_ladder(const ExperimentConfig& cfg, std::uint64_t N, std::uint64_t first,
                                          const std::string& def) {
  const std::string spec = cfg.horizons.empty() ? def : cfg.horizons;
  std::vector<std::uint64_t> out;
  if (spec == "dyadic") {
    out = dyadic_ladder(N, std::max<std::uint64_t>(2, first));
  } else if (spec == "decade") {
    for (std::uint64_t n = 10; n < N; n *= 10) {
      if (n >= first) out.push_back(n);
    }
    out.push_back(N);
  } else {
    for (const auto& s : split(spec, ',')) {
      try {
        const double d = std::stod(s);
        if (d < 1 || d != std::floor(d)) throw std::invalid_argument(s);
        out.push_back(static_cast<std::uint64_t>(d));
      } catch (const std::exception&) {
        throw Error(ErrorKind::Config, "horizons: bad entry '" + s + "' (dyadic, decade, or a list of integers)");
      }
    }
    for (std::size_t i = 1; i < out.size(); ++i) {
      if (out[i] <= out[i - 1]) throw Error(ErrorKind::Config, "horizons must be strictly increasing");
    }
  }
  return out;
}

Thresholds thresholds(Params& p) {
  Thresholds th;
  th.low = p.real("low", th.low);
  th.high = p.real("high", th.high);
  th.delta = p.real("delta", th.delta);
  return th;
}

json thresholds_json(const Thresholds& th) { return {{"low", th.low}, {"high", th.high}, {"delta", th.delta}}; }

Interval parse_interval(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 2) throw Error(ErrorKind::Config, "interval must be 'a,b', got '" + s + "'");
  return {ExactReal::parse(parts[0]), ExactReal::parse(parts[1])};
}

struct Out {
  json result = json::object();
  std::ostringstream csv;
  std::string failure;
};

void fail_check(Out& o, const std::string& what) {
  if (o.failure.empty()) o.failure = what;
}

// ---------------------------------------------------------------------------

void run_gauge(const ExperimentConfig& cfg, Params& p, Out& o) {
  const Iet t = target_iet(cfg);
  const GaugeKind kind = parse_gauge_kind(p.str("kind", "phi"));
  const ScaleSequence s = ScaleSequence::parse(p.str("scale", "pow:1"));
  const std::uint64_t N = p.count("horizon", 1000000);
  const Metric metric = parse_metric(p.str("metric", "interval"));
  const std::string mode = p.str("mode", "auto");
  const bool exact_out = p.flag("exact", false);
  const std::string table = p.str("table", "trace");
  const Thresholds th = thresholds(p);
  const auto x_lit = p.maybe("x");
  const auto y_lit = p.maybe("y");
  const std::uint64_t pairs = x_lit ? 1 : p.count("pairs", 1000);
  const auto H = horizon_ladder(cfg, N, s.first_index(), "dyadic");

  TraceOptions opt;
  opt.metric = metric;
  if (mode == "exact") opt.mode = TraceOptions::Mode::Exact;
  else if (mode == "float") opt.mode = TraceOptions::Mode::Float;
  else if (mode != "auto") throw Error(ErrorKind::Config, "parameter 'mode': auto, exact or float");

  o.result["kind"] = to_string(kind);
  o.result["iet"] = t.to_string();
  o.result["scale"] = s.to_string();
  o.result["metric"] = to_string(metric);
  o.result["horizons"] = H;
  o.result["thresholds"] = thresholds_json(th);
  o.result["label"] = "running minima over finite horizons; not a liminf";

  if (table == "histogram") {
    const Histogram h = polarization_histogram(kind, t, s, H, {pairs, cfg.seed, 0}, th, metric);
    o.csv << "horizon,bin_lo,bin_hi,count\n";
    for (std::size_t j = 0; j < H.size(); ++j) {
      for (std::size_t b = 0; b < h.counts[j].size(); ++b) {
        const std::string lo = b == 0 ? "-inf" : fmt(h.edges[b - 1]);
        const std::string hi = b == h.edges.size() ? "inf" : fmt(h.edges[b]);
        o.csv << H[j] << "," << lo << "," << hi << "," << h.counts[j][b] << "\n";
      }
    }
    o.result["histogram"] = {{"edges_log10", h.edges}, {"counts", h.counts}, {"below", h.below}, {"above", h.above},
                             {"statistic", "block minima over (N_{i-1}, N_i]"}};
    o.result["scale_two_jumpy"] = h.scale_two_jumpy;
    if (!h.scale_two_jumpy) o.result["warning"] = "scale is not two-jumpy; polarization need not occur";
    return;
  }
  if (table != "trace") throw Error(ErrorKind::Config, "parameter 'table': trace or histogram");

  std::vector<GaugeTrace> traces(pairs);
  parallel_for(pairs, lab_threads(), [&](std::uint64_t i) {
    ExactReal x, y;
    if (x_lit) {
      x = mod1(ExactReal::parse(*x_lit));
      y = y_lit ? mod1(ExactReal::parse(*y_lit)) : x;
    } else {
      CounterRng rng(cfg.seed, i);
      const auto kx = rng.next_dyadic53();
      const auto ky = rng.next_dyadic53();
      x = CounterRng::exact_of(kx);
      y = CounterRng::exact_of(ky);
    }
    std::optional<ExactReal> yy;
    if (kind != GaugeKind::Rho) yy = y;
    traces[i] = gauge_trace(kind, t, s, x, yy, H, opt);
  });

  o.csv << "sample_id,x,y,horizon,running_min,argmin\n";
  for (std::uint64_t i = 0; i < pairs; ++i) {
    const auto& tr = traces[i];
    const std::string xs = exact_out ? tr.x.to_string() : fmt(tr.x.to_double());
    const std::string ys = !tr.y ? "" : exact_out ? tr.y->to_string() : fmt(tr.y->to_double());
    for (std::size_t j = 0; j < H.size(); ++j) {
      const std::string v = exact_out && tr.exact_min[j] ? tr.exact_min[j]->to_string() : fmt(tr.running_min[j]);
      o.csv << i << "," << csv_field(xs) << "," << csv_field(ys) << "," << H[j] << "," << csv_field(v) << "," << tr.argmin[j]
            << "\n";
    }
  }
  json per = json::array();
  for (std::size_t j = 0; j < H.size(); ++j) {
    std::vector<double> v;
    for (const auto& tr : traces) v.push_back(tr.running_min[j]);
    std::sort(v.begin(), v.end());
    const double below = std::count_if(v.begin(), v.end(), [&](double a) { return a < th.low; }) / double(v.size());
    const double above = std::count_if(v.begin(), v.end(), [&](double a) { return a > th.high; }) / double(v.size());
    per.push_back({{"horizon", H[j]}, {"median", v[v.size() / 2]}, {"below", below}, {"above", above}});
  }
  o.result["per_horizon"] = per;
  o.result["samples"] = pairs;
  o.result["exact"] = traces.front().exact;
  if (pairs == 1) {
    const auto& tr = traces.front();
    json rows = json::array();
    for (std::size_t j = 0; j < H.size(); ++j) {
      json r{{"horizon", H[j]}, {"running_min", tr.running_min[j]}, {"argmin", tr.argmin[j]}};
      if (tr.exact_min[j]) r["exact"] = tr.exact_min[j]->to_string();
      rows.push_back(r);
    }
    o.result["trace"] = rows;
    if (!tr.exact) o.result["error_bound"] = tr.error_bound;
  }
}

void run_constants(const ExperimentConfig& cfg, Params& p, Out& o) {
  const Iet t = target_iet(cfg);
  const auto alphas = p.reals("alphas", "0.25,0.5,0.75,1,1.25,1.5");
  const std::uint64_t N = p.count("horizon", 1000000);
  const std::uint64_t samples = p.count("samples", 1000);
  const Metric metric = parse_metric(p.str("metric", "interval"));
  const Thresholds th = thresholds(p);
  const ConstantsReport rep = estimate_constants(t, alphas, N, {samples, cfg.seed, 0}, th, metric);
  o.csv << "kind,alpha,below,above,trending_down\n";
  json kinds = json::object();
  for (const auto& k : rep.kinds) {
    json rows = json::array();
    for (const auto& r : k.rows) {
      o.csv << to_string(k.kind) << "," << fmt(r.alpha) << "," << fmt(r.below) << "," << fmt(r.above) << ","
            << fmt(r.trending_down) << "\n";
      rows.push_back({{"alpha", r.alpha}, {"below", r.below}, {"above", r.above}, {"trending_down", r.trending_down}});
    }
    kinds[to_string(k.kind)] = {{"c_hat", k.c_hat ? json(*k.c_hat) : json(nullptr)},
                                {"c_hat_trend", k.c_hat_trend ? json(*k.c_hat_trend) : json(nullptr)},
                                {"rows", rows}};
  }
  o.result["iet"] = t.to_string();
  o.result["horizon"] = N;
  o.result["samples"] = samples;
  o.result["thresholds"] = thresholds_json(th);
  o.result["metric"] = to_string(metric);
  o.result["constants"] = kinds;
  o.result["label"] = "finite-horizon estimate; null c_hat means no alpha in the grid qualified";
}

void run_tau(const ExperimentConfig& cfg, Params& p, Out& o) {
  const Iet t = target_iet(cfg);
  const int n_max = p.integer("n_max", 512);
  const TauReport r = tau_entropy(t, n_max);
  o.csv << "n,card\n";
  for (std::size_t i = 0; i < r.ladder.size(); ++i) o.csv << r.ladder[i] << "," << r.cards[i] << "\n";
  o.result["iet"] = t.to_string();
  o.result["ladder"] = r.ladder;
  o.result["cards"] = r.cards;
  o.result["tau_hat"] = r.tau_hat;
  o.result["slope"] = r.slope;
  o.result["label"] = "finite-horizon estimate";
}

void run_discrepancy(const ExperimentConfig& cfg, Params& p, Out& o) {
  const Iet t = target_iet(cfg);
  const auto ns = p.counts("n", "64,128,256,512,1024");
  const auto interval = p.maybe("interval");
  const std::string mode = p.str("mode", interval ? "exact" : "grid");
  const int grid = p.integer("grid", 4);
  const std::uint64_t samples = p.count("samples", 10000);
  o.result["iet"] = t.to_string();
  o.result["mode"] = mode;
  json rows = json::array();
  std::vector<double> xs, ys;
  o.csv << "n,D\n";
  for (auto n : ns) {
    json r{{"n", n}};
    double D;
    if (mode == "grid") {
      const auto d = discrepancy_grid(t, n, grid);
      D = d.approx;
      r["exact"] = d.value.to_string();
      r["intervals"] = d.cells;
    } else {
      if (!interval) throw Error(ErrorKind::Config, "mode " + mode + " needs parameter 'interval'");
      const Interval J = parse_interval(*interval);
      if (mode == "exact") {
        const auto d = discrepancy(t, n, J);
        D = d.approx;
        r["exact"] = d.value.to_string();
        r["min_count"] = d.min_count;
        r["max_count"] = d.max_count;
      } else if (mode == "sampled") {
        D = discrepancy_sampled(t, n, J, {samples, cfg.seed, 0});
      } else {
        throw Error(ErrorKind::Config, "parameter 'mode': exact, sampled or grid");
      }
    }
    r["D"] = D;
    rows.push_back(r);
    o.csv << n << "," << fmt(D) << "\n";
    if (D > 0) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(D);
    }
  }
  o.result["rows"] = rows;
  if (mode == "grid") {
    o.result["grid"] = grid;
    o.result["note"] = "sup over grid intervals only; an under-approximation of the sup over all intervals";
  }
  if (xs.size() >= 2) {
    const double slope = loglog_slope(xs, ys);
    o.result["omega"] = {{"slope", slope}, {"omega_hat", std::clamp(1.0 + slope, 0.0, 1.0)},
                         {"label", "finite-horizon estimate"}};
  }
}

void run_cf(const ExperimentConfig& cfg, Params& p, Out& o) {
  const ExactReal alpha = target_alpha(cfg, "golden");
  const int depth = p.integer("depth", 30);
  const int td = p.integer("three_distance", std::min(depth, 12));
  const ContinuedFraction cf = cf_expand(alpha, depth);
  const auto ok = check_convergent_ineq(cf, alpha);
  o.result["alpha"] = alpha.to_string();
  o.result["depth"] = depth;
  o.result["a"] = big_list(cf.a);
  // q_n and p_n for n = 0..depth-1: the denominators whose inequality is certified
  o.result["p"] = big_list(cf.p, depth);
  o.result["q"] = big_list(cf.q, depth);
  o.result["period"] = cf.period ? json{{"start", cf.period->first}, {"length", cf.period->second}} : json(nullptr);
  const bool all_ok = std::all_of(ok.begin(), ok.end(), [](bool b) { return b; });
  o.result["convergent_inequality"] = all_ok;
  if (!all_ok) fail_check(o, "convergent inequality violated");
  json tdj = json::array();
  for (int m = 1; m <= std::min(td, depth); ++m) {
    const bool pass = three_distance_check(alpha, m);
    tdj.push_back({{"m", m}, {"pass", pass}});
    if (!pass) fail_check(o, "three-distance check failed at m = " + std::to_string(m));
  }
  o.result["three_distance"] = tdj;
  o.csv << "k,a,p,q,inequality\n";
  for (int k = 0; k < depth; ++k) {
    o.csv << k << "," << big(cf.a[k]) << "," << big(cf.p[k]) << "," << big(cf.q[k]) << "," << (ok[k] ? "true" : "false")
          << "\n";
  }
}

void run_liouville(const ExperimentConfig&, Params& p, Out& o) {
  const ScaleSequence s = ScaleSequence::parse(p.str("scale", "pow:2"));
  const int K = p.integer("k", 5);
  const double max_digits = p.real("max_digits", 1e5);
  const LiouvilleConstruction lc = liouville_from_scale(s, K, max_digits);
  json N = json::array();
  for (std::size_t i = 0; i < lc.N.size(); ++i) N.push_back(lc.feasible[i] ? json(big(lc.N[i])) : json(nullptr));
  o.result["scale"] = s.to_string();
  o.result["K"] = K;
  o.result["N"] = N;
  o.result["log10_N"] = lc.log10_N;
  o.result["feasible"] = lc.feasible;
  o.result["a"] = big_list(lc.a);
  o.result["q"] = big_list(lc.cf.q);
  o.result["m"] = big_list(lc.m);
  o.result["chain_ok"] = lc.chain_ok;
  o.result["certified_closed_form"] = lc.certified_closed_form;
  o.result["alpha_tail"] = "alpha = [0; a_1, ..., a_K, 1, 1, 1, ...]";
  if (lc.alpha) o.result["alpha"] = lc.alpha->to_string();
  for (std::size_t i = 0; i < lc.chain_ok.size(); ++i) {
    if (!lc.chain_ok[i]) fail_check(o, "chain q_{k+1} >= m_k >= 3 q_k fails at k = " + std::to_string(i + 1));
  }
  o.csv << "k,N,log10_N,feasible,a\n";
  for (std::size_t i = 0; i < lc.N.size(); ++i) {
    o.csv << i + 1 << "," << (lc.feasible[i] ? big(lc.N[i]) : "") << "," << fmt(lc.log10_N[i]) << ","
          << (lc.feasible[i] ? "true" : "false") << "," << (i < lc.a.size() ? big(lc.a[i]) : "") << "\n";
  }
}

void run_akc(const ExperimentConfig&, Params& p, Out& o) {
  const ScaleSequence s = ScaleSequence::parse(p.str("scale", "pow:2"));
  const int K = p.integer("K", 4);
  const auto ks = p.counts("k", "1,2,3");
  const mpq_class c(p.str("c", "1"));
  const std::uint64_t budget = p.count("budget", 4000000);
  const LiouvilleConstruction lc = liouville_from_scale(s, K);
  if (!lc.alpha) throw Error(ErrorKind::Config, "the construction is not feasible for every k <= K");
  o.result["scale"] = s.to_string();
  o.result["alpha"] = lc.alpha->to_string();
  json rows = json::array();
  o.csv << "k,measure,bound,within_bound,balls\n";
  for (auto k : ks) {
    const AkcResult r = akc_measure(*lc.alpha, lc.cf, static_cast<int>(k), c, s, budget);
    const std::string ex = r.measure.to_string();
    json row{{"k", k},
             {"measure", r.measure.to_double()},
             {"bound", big(r.bound.get_num()) + "/" + big(r.bound.get_den())},
             {"within_bound", r.within_bound},
             {"union_bound", r.union_bound.to_double()},
             {"balls", r.balls},
             {"exact_radii", r.exact_radii}};
    if (ex.size() <= 4096) row["measure_exact"] = ex;
    else row["measure_exact_chars"] = ex.size();
    rows.push_back(row);
    o.csv << k << "," << fmt(r.measure.to_double()) << "," << fmt(r.bound.get_d()) << "," << (r.within_bound ? "true" : "false")
          << "," << r.balls << "\n";
    if (!r.within_bound) fail_check(o, "measure above the bound at k = " + std::to_string(k));
  }
  o.result["rows"] = rows;
}

bool disjoint(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i].lo < v[i - 1].hi) return false;
  }
  return true;
}

void run_induce(const ExperimentConfig& cfg, Params& p, Out& o) {
  const Iet t = target_iet(cfg);
  const Interval base = parse_interval(p.str("interval", "0,1/2"));
  const std::uint64_t max_steps = p.count("max_steps", kMaxSteps);
  const FirstReturn fr = first_return(t, base, max_steps);
  o.result["iet"] = t.to_string();
  o.result["base"] = {base.lo.to_string(), base.hi.to_string()};
  o.result["induced"] = fr.induced.to_string();
  json pieces = json::array();
  o.csv << "lo,hi,time,translation\n";
  for (const auto& pc : fr.pieces) {
    pieces.push_back({{"lo", pc.domain.lo.to_string()},
                      {"hi", pc.domain.hi.to_string()},
                      {"time", pc.time},
                      {"translation", pc.translation.to_string()}});
    o.csv << csv_field(pc.domain.lo.to_string()) << "," << csv_field(pc.domain.hi.to_string()) << "," << pc.time << ","
          << csv_field(pc.translation.to_string()) << "\n";
  }
  o.result["pieces"] = pieces;
  const auto floors = all_floors(t, fr);
  ExactReal total(0);
  for (const auto& f : floors) total += f.length();
  o.result["floor_count"] = floors.size();
  o.result["floor_measure"] = total.to_string();
  o.result["floors_disjoint"] = disjoint(floors);
}

void run_tower(const ExperimentConfig& cfg, Params& p, Out& o) {
  const Iet t = target_iet(cfg);
  const ExactReal eps = ExactReal::parse(p.str("eps", "1/10"));
  const std::uint64_t max_steps = p.count("max_steps", kMaxSteps);
  const int depth = p.integer("keane_depth", 200);
  const KeaneVerdict kv = keane_certificate(t, depth);
  o.result["iet"] = t.to_string();
  o.result["keane"] = to_string(kv);
  const Tower tw = find_tower(t, eps, max_steps);
  const ExactReal r(static_cast<long>(t.size()));
  const bool mass_ok = !(tw.measure() * r < ExactReal(1));
  const bool disj = disjoint(tw.floors);
  const FirstReturn fr = first_return(t, {ExactReal(0), eps}, max_steps);
  const auto floors = all_floors(t, fr);
  ExactReal total(0);
  for (const auto& f : floors) total += f.length();
  o.result["base"] = {tw.base.lo.to_string(), tw.base.hi.to_string()};
  o.result["height"] = tw.height;
  o.result["columns"] = tw.columns;
  o.result["measure"] = tw.measure().to_string();
  o.result["measure_at_least_1_over_r"] = mass_ok;
  o.result["floors_disjoint"] = disj;
  o.result["decomposition_measure"] = total.to_string();
  o.csv << "floor,lo,hi\n";
  for (std::size_t i = 0; i < tw.floors.size(); ++i) {
    o.csv << i << "," << csv_field(tw.floors[i].lo.to_string()) << "," << csv_field(tw.floors[i].hi.to_string()) << "\n";
  }
  if (!mass_ok) fail_check(o, "tower measure below 1/r");
  if (!disj) fail_check(o, "tower floors overlap");
  if (!(total == ExactReal(1))) fail_check(o, "first-return floors do not have total measure 1");
}

void run_towerbook(const ExperimentConfig&, Params& p, Out& o) {
  const auto seed_s = split(p.str("seed_row", "1,1,1,1"), ',');
  if (seed_s.size() != 4) throw Error(ErrorKind::Config, "parameter 'seed_row': four integers b_{1,1..4}");
  TowerRow seed{0, mpz_class(seed_s[0]), mpz_class(seed_s[1]), mpz_class(seed_s[2]), mpz_class(seed_s[3])};
  const int r = p.integer("r", 4);
  const auto m_s = p.maybe("m");
  const auto n_s = p.maybe("n");
  std::vector<mpz_class> m, n;
  if (m_s || n_s) {
    if (!m_s || !n_s) throw Error(ErrorKind::Config, "give both 'm' and 'n', or neither (greedy generation)");
    for (const auto& v : split(*m_s, ',')) m.emplace_back(v);
    for (const auto& v : split(*n_s, ',')) n.emplace_back(v);
  } else {
    std::tie(m, n) = tower_sequence_greedy(p.integer("k", 4), seed);
  }
  const TowerBook b = tower_book(m, n, seed, default_tower_rule(), r);
  o.result["rule"] = "heuristic default: b3' = b4 + n b2 + m b3, b4' = b2 + b3 + b4";
  o.result["m"] = big_list(b.m);
  o.result["n"] = big_list(b.n);
  json rows = json::array();
  for (const auto& row : b.b) rows.push_back({big(row[1]), big(row[2]), big(row[3]), big(row[4])});
  o.result["b"] = rows;
  json flags = json::array();
  o.csv << "k,cond1,cond2,cond3,cons1,cons2\n";
  auto cell = [](const std::optional<bool>& v) { return v ? (*v ? "true" : "false") : ""; };
  for (const auto& f : b.flags) {
    flags.push_back({{"k", f.k},
                     {"cond1", f.cond1},
                     {"cond2", opt_bool(f.cond2)},
                     {"cond3", opt_bool(f.cond3)},
                     {"cons1", f.cons1},
                     {"cons2", opt_bool(f.cons2)}});
    o.csv << f.k << "," << (f.cond1 ? "true" : "false") << "," << cell(f.cond2) << "," << cell(f.cond3) << ","
          << (f.cons1 ? "true" : "false") << "," << cell(f.cons2) << "\n";
  }
  o.result["flags"] = flags;
  auto series = [](const std::vector<mpq_class>& terms) {
    json t = json::array(), partial = json::array();
    mpq_class sum = 0;
    bool halving = true;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      sum += terms[i];
      t.push_back(terms[i].get_str());
      partial.push_back(sum.get_d());
      if (i > 0 && terms[i] * 2 > terms[i - 1]) halving = false;
    }
    return json{{"terms", t}, {"partial_sums", partial}, {"terms_halve", halving}};
  };
  o.result["series_a"] = series(b.series_a_terms);
  o.result["series_b"] = series(b.series_b_terms);
  o.result["conv_bound_terms"] = b.conv_bound_terms;
  o.result["all_conditions"] = b.all_conditions();
  o.result["all_consequences"] = b.all_consequences();
  if (!b.all_conditions()) fail_check(o, "conditions 1-3 not all satisfied");
  if (!b.all_consequences()) fail_check(o, "consequences 1-2 not all satisfied");
  if (!o.result["series_a"]["terms_halve"].get<bool>() || !o.result["series_b"]["terms_halve"].get<bool>())
    fail_check(o, "series terms do not halve");
}

void run_mix3(const ExperimentConfig& cfg, Params& p, Out& o) {
  const ExactReal alpha = target_alpha(cfg, "golden");
  const ExactReal t = ExactReal::parse(p.required("t"));
  const auto mr = split(p.str("mrange", "6:14"), ':');
  if (mr.size() != 2) throw Error(ErrorKind::Config, "parameter 'mrange': lo:hi");
  const int lo = std::stoi(mr[0]), hi = std::stoi(mr[1]);
  const int cells = p.integer("cells", 20);
  const int need = p.integer("min_missed", 6);
  const MixingReport rep = mixing_falsifier(alpha, t, lo, hi, cells);
  o.result["alpha"] = alpha.to_string();
  o.result["t"] = t.to_string();
  o.result["iet"] = rep.iet.to_string();
  o.result["cells"] = cells;
  json rows = json::array(), missed = json::array();
  o.csv << "m,q,b,tau,min_missed,displacements,at_most_seven\n";
  for (const auto& mt : rep.times) {
    json disp = json::array();
    for (const auto& d : mt.displacements) disp.push_back(d.to_string());
    rows.push_back({{"m", mt.m},
                    {"q", big(mt.q)},
                    {"b", mt.b},
                    {"tau", mt.tau},
                    {"missed", mt.missed},
                    {"min_missed", mt.min_missed},
                    {"rotation_steps", std::vector<long>(mt.rotation_steps.begin(), mt.rotation_steps.end())},
                    {"displacements", disp},
                    {"at_most_seven", mt.at_most_seven}});
    missed.push_back(mt.min_missed);
    o.csv << mt.m << "," << big(mt.q) << "," << mt.b << "," << mt.tau << "," << mt.min_missed << "," << mt.displacements.size()
          << "," << (mt.at_most_seven ? "true" : "false") << "\n";
    if (mt.min_missed < need) fail_check(o, "fewer than " + std::to_string(need) + " cells missed at m = " + std::to_string(mt.m));
    if (!mt.at_most_seven) fail_check(o, "more than seven displacements at m = " + std::to_string(mt.m));
  }
  o.result["times"] = rows;
  o.result["missed_counts"] = missed;
}

void run_bc(const ExperimentConfig& cfg, Params& p, Out& o) {
  const Iet t = target_iet(cfg);
  const auto ns = p.counts("n", "50,100,200");
  const double c = p.real("c", 0.6);
  const std::uint64_t samples = p.count("samples", 1000000);
  const Metric metric = parse_metric(p.str("metric", "interval"));
  o.result["iet"] = t.to_string();
  json rows = json::array();
  o.csv << "n,c,samples,hits,estimate,std_error,ci_low,ci_high,bound,respects_bound\n";
  for (auto n : ns) {
    const BcEstimate b = proximality_bc_measure(t, n, c, {samples, cfg.seed, 0}, metric);
    rows.push_back({{"n", n}, {"hits", b.hits}, {"estimate", b.estimate}, {"std_error", b.std_error}, {"ci_low", b.ci_low},
                    {"ci_high", b.ci_high}, {"bound", b.bound}, {"respects_bound", b.respects_bound},
                    {"exact_fallbacks", b.exact_fallbacks}});
    o.csv << n << "," << fmt(c) << "," << samples << "," << b.hits << "," << fmt(b.estimate) << "," << fmt(b.std_error) << ","
          << fmt(b.ci_low) << "," << fmt(b.ci_high) << "," << fmt(b.bound) << "," << (b.respects_bound ? "true" : "false")
          << "\n";
    if (!b.respects_bound) fail_check(o, "estimate exceeds the bound by more than 3 sigma at n = " + std::to_string(n));
  }
  o.result["rows"] = rows;
}

void run_decisive(const ExperimentConfig& cfg, Params& p, Out& o) {
  const PointSequence pts = PointSequence::parse(cfg.target.empty() ? "rot:golden" : cfg.target);
  const ScaleSequence s = ScaleSequence::parse(p.str("scale", "pow:1"));
  const std::uint64_t N = p.count("horizon", 100000);
  const std::uint64_t samples = p.count("samples", 1000);
  const Thresholds th = thresholds(p);
  const auto H = horizon_ladder(cfg, N, s.first_index(), "decade");
  const DecisiveReport r = decisiveness_diagnostic(pts, s, H, {samples, cfg.seed, 0}, th);
  o.result["points"] = cfg.target.empty() ? "rot:golden" : cfg.target;
  o.result["scale"] = s.to_string();
  o.result["horizons"] = H;
  o.result["below"] = r.below;
  o.result["middle"] = r.middle;
  o.result["above"] = r.above;
  o.result["thresholds"] = thresholds_json(th);
  o.result["statistic"] = "block minima of s_n |x_n - y| over (N_{i-1}, N_i]";
  o.csv << "horizon,below,middle,above\n";
  for (std::size_t j = 0; j < H.size(); ++j) {
    o.csv << H[j] << "," << fmt(r.below[j]) << "," << fmt(r.middle[j]) << "," << fmt(r.above[j]) << "\n";
  }
}

}  // namespace

Report run(const ExperimentConfig& cfg) {
  if (!is_experiment(cfg.experiment)) throw Error(ErrorKind::Config, "unknown experiment '" + cfg.experiment + "'");
  const auto start = std::chrono::steady_clock::now();
  json params = json::object();
  Params p(cfg, params);
  Out o;
  const std::string& e = cfg.experiment;
  try {
    if (e == "gauge") run_gauge(cfg, p, o);
    else if (e == "constants") run_constants(cfg, p, o);
    else if (e == "tau") run_tau(cfg, p, o);
    else if (e == "discrepancy") run_discrepancy(cfg, p, o);
    else if (e == "cf") run_cf(cfg, p, o);
    else if (e == "liouville") run_liouville(cfg, p, o);
    else if (e == "akc") run_akc(cfg, p, o);
    else if (e == "induce") run_induce(cfg, p, o);
    else if (e == "tower") run_tower(cfg, p, o);
    else if (e == "towerbook") run_towerbook(cfg, p, o);
    else if (e == "mix3") run_mix3(cfg, p, o);
    else if (e == "bc-measure") run_bc(cfg, p, o);
    else if (e == "decisive") run_decisive(cfg, p, o);
  } catch (const Error& err) {
    // malformed literals inside parameters are configuration errors
    if (err.kind() == ErrorKind::Parse) throw Error(ErrorKind::Config, err.what());
    throw;
  }
  p.finish();

  Report r;
  r.json["artifact"] = "ietlab";
  r.json["version"] = kArtifactVersion;
  r.json["experiment"] = e;
  r.json["config"] = {{"target", cfg.target}, {"seed", cfg.seed}, {"horizons", cfg.horizons}, {"params", params}};
  r.json["result"] = std::move(o.result);
  r.csv = o.csv.str();
  if (!o.failure.empty()) {
    r.exit_code = 2;
    r.failure = o.failure;
    r.json["failure"] = o.failure;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.json["timing"] = {{"wall_seconds", secs}};
  return r;
}

std::string payload_bytes(const Report& r) {
  json j = r.json;
  j.erase("timing");
  return j.dump(2) + "\n";
}

}  // namespace ietlab::lab
