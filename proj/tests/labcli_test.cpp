#include <cmath>
#include <cstdlib>
#include <random>
#include <regex>

#include "doctest.h"
#include "ietlab/error.hpp"
#include "ietlab/gauges.hpp"
#include "ietlab/labcli.hpp"

using namespace ietlab;
using namespace ietlab::lab;

namespace {

ExperimentConfig random_config(std::mt19937_64& rng) {
  const auto& names = experiment_names();
  std::uniform_int_distribution<std::size_t> pick(0, names.size() - 1);
  std::uniform_int_distribution<int> len(0, 5);
  const char* alphabet = "abcxyz0123456789/.,:_-+*()[] ";
  std::uniform_int_distribution<int> ch(0, 28);
  auto word = [&](bool spaces) {
    std::string s;
    const int n = 1 + len(rng);
    for (int i = 0; i < n; ++i) {
      char c = alphabet[ch(rng)];
      if (!spaces && (c == ' ' || c == ',' || c == ':' || c == '(' || c == ')' || c == '[' || c == ']')) c = 'k';
      s += c;
    }
    // surrounding blanks do not survive INI trimming
    while (!s.empty() && s.back() == ' ') s.pop_back();
    while (!s.empty() && s.front() == ' ') s.erase(0, 1);
    return s.empty() ? std::string("v") : s;
  };
  ExperimentConfig cfg;
  cfg.experiment = names[pick(rng)];
  if (len(rng) > 1) cfg.target = word(true);
  cfg.seed = rng();
  if (len(rng) > 2) cfg.horizons = "10,100,1000";
  const int np = len(rng);
  for (int i = 0; i < np; ++i) cfg.params[word(false)] = word(true);
  if (len(rng) > 3) cfg.outputs["csv"] = "out.csv";
  if (len(rng) > 3) cfg.outputs["json"] = "out.json";
  return cfg;
}

std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config round trip INI and JSON") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const ExperimentConfig cfg = random_config(rng);
    CHECK(parse_ini(to_ini(cfg)) == cfg);
    CHECK(parse_config_json(to_json(cfg)) == cfg);
    CHECK(to_ini(parse_ini(to_ini(cfg))) == to_ini(cfg));
  }
}

TEST_CASE("INI parsing details") {
  const auto cfg = parse_ini(
      "# comment\n"
      "[experiment]\n"
      "name = gauge\n"
      "target = rot: alpha=golden\n"
      "seed = 7\n"
      "\n"
      "[params]\n"
      "kind = rho\n"
      "interval = 0,1/2\n"
      "[output]\n"
      "csv = trace.csv\n");
  CHECK(cfg.experiment == "gauge");
  CHECK(cfg.target == "rot: alpha=golden");
  CHECK(cfg.seed == 7);
  CHECK(cfg.params.at("kind") == "rho");
  CHECK(cfg.params.at("interval") == "0,1/2");
  CHECK(cfg.outputs.at("csv") == "trace.csv");
}

TEST_CASE("config errors carry line and field diagnostics") {
  CHECK(error_text([] { parse_ini("[experiment]\nname = nope\n"); }).find("line 2") != std::string::npos);
  CHECK(error_text([] { parse_ini("[experiment]\nname = cf\nseed = -3\n"); }).find("line 3") != std::string::npos);
  CHECK(error_text([] { parse_ini("[experiment]\nname = cf\n[extra]\n"); }).find("line 3") != std::string::npos);
  CHECK(error_text([] { parse_ini("[experiment]\nname = cf\njunk\n"); }).find("line 3") != std::string::npos);
  CHECK(error_text([] { parse_ini("[params]\nk = 1\n"); }).find("name") != std::string::npos);
  CHECK(error_text([] { parse_config_json(R"({"experiment":"cf","seed":-1})"); }).find("seed") != std::string::npos);
  CHECK(error_text([] { parse_config_json(R"({"experiment":"cf","color":1})"); }).find("color") != std::string::npos);
  CHECK_THROWS_AS(parse_config_json("{"), Error);
  try {
    parse_ini("[experiment]\nname = nope\n");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("unknown or malformed parameters are rejected") {
  ExperimentConfig cfg{.experiment = "cf", .target = "golden", .params = {{"depht", "10"}}};
  CHECK(error_text([&] { run(cfg); }).find("depht") != std::string::npos);
  cfg.params = {{"depth", "ten"}};
  CHECK_THROWS_AS(run(cfg), Error);
  cfg.experiment = "gauge";
  cfg.params = {};
  cfg.target = "";
  CHECK_THROWS_AS(run(cfg), Error);
  cfg = ExperimentConfig{.experiment = "mix3", .target = "golden"};
  CHECK(error_text([&] { run(cfg); }).find("'t'") != std::string::npos);
}

TEST_CASE("cf experiment on the golden mean") {
  const Report r = run({.experiment = "cf", .target = "golden", .params = {{"depth", "10"}}});
  CHECK(r.exit_code == 0);
  std::vector<std::string> q;
  for (const auto& v : r.json["result"]["q"]) q.push_back(v.get<std::string>());
  CHECK(q == std::vector<std::string>{"1", "1", "2", "3", "5", "8", "13", "21", "34", "55"});
  CHECK(r.json["result"]["convergent_inequality"] == true);
  CHECK(r.json["result"]["three_distance"].size() == 10);
  // defaults actually used are echoed
  CHECK(r.json["config"]["params"]["three_distance"] == "10");
  CHECK(r.json["artifact"] == "ietlab");
  CHECK(r.json["version"] == kArtifactVersion);
  CHECK(r.json.contains("timing"));
  CHECK(payload_bytes(r).find("timing") == std::string::npos);
}

TEST_CASE("gauge trace CSV contract") {
  const Report r = run({.experiment = "gauge",
                        .target = "rot:golden",
                        .params = {{"kind", "rho"}, {"pairs", "4"}, {"horizon", "1000"}, {"exact", "true"}}});
  CHECK(r.csv.substr(0, r.csv.find('\n')) == "sample_id,x,y,horizon,running_min,argmin");
  CHECK(r.csv.find('\r') == std::string::npos);
  const CsvTable t = parse_csv(r.csv);
  const auto H = dyadic_ladder(1000);
  REQUIRE(t.rows.size() == 4 * H.size());
  // each sample's rows agree with a direct trace from the echoed exact x
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& first = t.rows[i * H.size()];
    const GaugeTrace tr = gauge_trace(GaugeKind::Rho, Iet::rotation(ExactReal::parse("golden")),
                                      ScaleSequence::parse("pow:1"), ExactReal::parse(first[1]), std::nullopt, H);
    for (std::size_t j = 0; j < H.size(); ++j) {
      const auto& row = t.rows[i * H.size() + j];
      CHECK(row[0] == std::to_string(i));
      CHECK(std::stoull(row[3]) == H[j]);
      REQUIRE(tr.exact_min[j]);
      CHECK(ExactReal::parse(row[4]) == *tr.exact_min[j]);
      CHECK(std::stoull(row[5]) == tr.argmin[j]);
    }
  }
}

TEST_CASE("gauge exact output writes p/q values") {
  const Report r = run({.experiment = "gauge",
                        .target = "rot:golden",
                        .params = {{"kind", "phi"}, {"x", "1/3"}, {"y", "1/5"}, {"horizon", "100"}, {"exact", "true"}}});
  const CsvTable t = parse_csv(r.csv);
  REQUIRE(!t.rows.empty());
  CHECK(t.rows[0][1] == "1/3");
  CHECK(t.rows[0][2] == "1/5");
  for (std::size_t j = 0; j < t.rows.size(); ++j) {
    CHECK(ExactReal::parse(t.rows[j][4]).to_string() == r.json["result"]["trace"][j]["exact"].get<std::string>());
  }
}

TEST_CASE("gauge histogram CSV contract") {
  const Report r = run({.experiment = "gauge",
                        .target = "rot:golden",
                        .params = {{"kind", "psi"}, {"pairs", "10"}, {"table", "histogram"}},
                        .horizons = "100,1000"});
  const CsvTable t = parse_csv(r.csv);
  CHECK(t.header == std::vector<std::string>{"horizon", "bin_lo", "bin_hi", "count"});
  long total = 0;
  for (const auto& row : t.rows) {
    if (row[0] == "1000") total += std::stol(row[3]);
  }
  CHECK(total == 10);
}

TEST_CASE("mix3 experiment") {
  const Report r = run({.experiment = "mix3", .target = "golden", .params = {{"t", "2/5"}}});
  CHECK(r.exit_code == 0);
  CHECK(r.json["result"]["missed_counts"].size() == 9);
  for (const auto& m : r.json["result"]["missed_counts"]) CHECK(m.get<int>() >= 6);
}

TEST_CASE("property failures give exit code 2") {
  // a required number of missed cells above the cell count cannot be met
  const Report r = run({.experiment = "mix3", .target = "golden", .params = {{"t", "2/5"}, {"mrange", "6:7"}, {"min_missed", "21"}}});
  CHECK(r.exit_code == 2);
  CHECK(!r.failure.empty());
  CHECK(r.json["failure"] == r.failure);
}

TEST_CASE("reports are deterministic across reruns and thread counts") {
  const ExperimentConfig cfg{.experiment = "gauge",
                             .target = "iet: lengths=[1/3,1/4,5/12] perm=[3,1,2]",
                             .params = {{"kind", "psi"}, {"pairs", "24"}, {"horizon", "2000"}}};
  setenv("LAB_THREADS", "1", 1);
  const Report a = run(cfg);
  setenv("LAB_THREADS", "3", 1);
  const Report b = run(cfg);
  unsetenv("LAB_THREADS");
  const Report c = run(cfg);
  CHECK(payload_bytes(a) == payload_bytes(b));
  CHECK(payload_bytes(a) == payload_bytes(c));
  CHECK(a.csv == b.csv);
  CHECK(a.csv == c.csv);
  ExperimentConfig other = cfg;
  other.seed = 43;
  CHECK(run(other).csv != a.csv);
}

TEST_CASE("CSV quoting and parsing") {
  CHECK(csv_field("1/2") == "1/2");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  const CsvTable t = parse_csv("a,b\n\"x,1\",\"q\"\"\"\n3,\n");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "x,1");
  CHECK(t.rows[0][1] == "q\"");
  CHECK(t.rows[1][1] == "");
  CHECK_THROWS_AS(parse_csv(""), Error);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), Error);
  CHECK_THROWS_AS(parse_csv("a\n\"open\n"), Error);
}

TEST_CASE("plots") {
  SUBCASE("empty CSV is BadCsv") {
    try {
      emit_plot(parse_csv(""), PlotKind::Trace);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::BadCsv);
    }
    CHECK_THROWS_AS(emit_plot(parse_csv("horizon,count\n1,2\n"), PlotKind::Trace), Error);
  }
  SUBCASE("golden trace with asymptote") {
    const Report r = run({.experiment = "gauge", .target = "rot:golden", .params = {{"kind", "rho"}, {"x", "0"}, {"horizon", "1e4"}}});
    PlotOptions opt;
    opt.hline = 1 / std::sqrt(5.0);
    opt.hline_label = "1/sqrt(5)";
    const std::string svg = emit_plot(parse_csv(r.csv), PlotKind::Trace, opt);
    CHECK(svg.find("viewBox=\"0 0 640 400\"") != std::string::npos);
    CHECK(svg.find("1/sqrt(5)") != std::string::npos);
    CHECK(svg == emit_plot(parse_csv(r.csv), PlotKind::Trace, opt));
  }
  SUBCASE("loglog legend slope matches a regression over the table") {
    const Report r = run({.experiment = "tau",
                          .target = "iet: lengths=[1/2-1/10*sqrt(2),1/5*sqrt(2),1/2-1/10*sqrt(2)] perm=[3,2,1]",
                          .params = {{"n_max", "128"}}});
    const CsvTable t = parse_csv(r.csv);
    std::vector<double> x, y;
    for (const auto& row : t.rows) {
      x.push_back(std::stod(row[0]));
      y.push_back(std::stod(row[1]));
    }
    // independent least squares on (ln x, ln y)
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += std::log(x[i]) / x.size();
      my += std::log(y[i]) / y.size();
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
      sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    const std::string svg = emit_plot(t, PlotKind::LogLog);
    std::smatch m;
    const std::regex re("fitted slope (-?[0-9.]+)");
    REQUIRE(std::regex_search(svg, m, re));
    CHECK(std::stod(m[1]) == doctest::Approx(sxy / sxx).epsilon(1e-3));
  }
  SUBCASE("histogram") {
    const Report r = run({.experiment = "gauge",
                          .target = "rot:golden",
                          .params = {{"kind", "psi"}, {"pairs", "10"}, {"horizon", "1000"}, {"table", "histogram"}}});
    const std::string svg = emit_plot(parse_csv(r.csv), PlotKind::Histogram);
    CHECK(svg.find("<rect") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_plot_kind("pie"), Error);
}
