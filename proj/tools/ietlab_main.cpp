#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ietlab/error.hpp"
#include "ietlab/labcli.hpp"

namespace fs = std::filesystem;
using namespace ietlab;
using namespace ietlab::lab;

namespace {

struct Common {
  std::string iet, alpha, target, points, out, config, horizons;
  std::optional<std::uint64_t> seed;
  bool exact = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--iet", c.iet, "IET or rotation literal");
  sub->add_option("--alpha", c.alpha, "rotation number");
  sub->add_option("--target", c.target, "experiment target literal");
  sub->add_option("--points", c.points, "point sequence: const:y, rot:alpha@x0, iet:<literal>@x0");
  sub->add_option("--out", c.out, "output file (.csv also writes a .json sibling)");
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--horizons", c.horizons, "dyadic, decade, or N1,N2,...");
  sub->add_option("--config", c.config, "INI or JSON config; flags override it");
  sub->add_flag("--exact", c.exact, "exact values in the output");
  sub->allow_extras();
}

// Leftover "--key value" or "--key=value" pairs become experiment parameters.
void absorb_extras(const std::vector<std::string>& extras, ExperimentConfig& cfg) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (a.rfind("--", 0) != 0 || a.size() < 3) throw Error(ErrorKind::Config, "unexpected argument '" + a + "'");
    std::string key = a.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw Error(ErrorKind::Config, "option --" + key + " needs a value");
      value = extras[++i];
    }
    std::replace(key.begin(), key.end(), '-', '_');
    cfg.params[key] = value;
  }
}

ExperimentConfig build_config(const std::string& experiment, const Common& c, const std::vector<std::string>& extras) {
  ExperimentConfig cfg;
  if (!c.config.empty()) {
    cfg = load_config(c.config);
    if (cfg.experiment != experiment)
      throw Error(ErrorKind::Config, "config is for '" + cfg.experiment + "', not '" + experiment + "'");
  }
  cfg.experiment = experiment;
  int targets = 0;
  for (const std::string* t : {&c.iet, &c.alpha, &c.target, &c.points}) {
    if (!t->empty()) {
      cfg.target = *t;
      ++targets;
    }
  }
  if (targets > 1) throw Error(ErrorKind::Config, "give only one of --iet, --alpha, --target, --points");
  if (c.seed) cfg.seed = *c.seed;
  if (!c.horizons.empty()) cfg.horizons = c.horizons;
  if (c.exact) cfg.params["exact"] = "true";
  absorb_extras(extras, cfg);
  if (!c.out.empty()) {
    const std::string ext = fs::path(c.out).extension().string();
    if (ext == ".csv") {
      cfg.outputs["csv"] = c.out;
      cfg.outputs["json"] = fs::path(c.out).replace_extension(".json").string();
    } else {
      cfg.outputs.erase("csv");
      cfg.outputs["json"] = c.out;
    }
  }
  return cfg;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Config, "cannot write '" + path + "'");
  out << text;
}

int execute(const ExperimentConfig& cfg) {
  const Report r = run(cfg);
  const std::string json = r.json.dump(2) + "\n";
  if (const auto it = cfg.outputs.find("csv"); it != cfg.outputs.end() && !r.csv.empty()) write_file(it->second, r.csv);
  if (const auto it = cfg.outputs.find("json"); it != cfg.outputs.end()) {
    write_file(it->second, json);
  } else {
    std::cout << json;
  }
  if (r.exit_code != 0) std::cerr << "property failure: " << r.failure << "\n";
  return r.exit_code;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::BadCsv, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ietlab: interval exchange experiments"};
  app.require_subcommand(1);

  Common common;
  std::vector<std::pair<std::string, CLI::App*>> experiments;
  for (const auto& name : experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    add_common(sub, common);
    experiments.emplace_back(name, sub);
  }

  std::string run_what;
  auto* run_cmd = app.add_subcommand("run", "run a config file, or an experiment by name with flags");
  run_cmd->add_option("what", run_what, "config path or experiment name")->required();
  add_common(run_cmd, common);

  std::string plot_csv, plot_kind = "trace", plot_out, plot_title, hline_label;
  std::optional<double> hline;
  auto* plot = app.add_subcommand("plot", "SVG from a CSV table");
  plot->add_option("csv", plot_csv, "input CSV")->required();
  plot->add_option("--kind", plot_kind, "trace, histogram or loglog");
  plot->add_option("--out", plot_out, "output SVG (default stdout)");
  plot->add_option("--title", plot_title);
  plot->add_option("--hline", hline, "horizontal reference line");
  plot->add_option("--hline-label", hline_label);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (plot->parsed()) {
      PlotOptions opt;
      opt.hline = hline;
      opt.hline_label = hline_label;
      opt.title = plot_title;
      const std::string svg = emit_plot(parse_csv(read_file(plot_csv)), parse_plot_kind(plot_kind), opt);
      if (plot_out.empty()) std::cout << svg;
      else write_file(plot_out, svg);
      return 0;
    }
    if (run_cmd->parsed()) {
      if (is_experiment(run_what)) return execute(build_config(run_what, common, run_cmd->remaining()));
      Common c = common;
      c.config = run_what;
      const std::string name = load_config(run_what).experiment;
      return execute(build_config(name, c, run_cmd->remaining()));
    }
    for (const auto& [name, sub] : experiments) {
      if (sub->parsed()) return execute(build_config(name, common, sub->remaining()));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
