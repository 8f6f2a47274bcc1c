#include <algorithm>
#include <fstream>
#include <sstream>

#include "ietlab/error.hpp"
#include "ietlab/labcli.hpp"

namespace ietlab::lab {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw Error(ErrorKind::Config, "line " + std::to_string(line) + ": " + what);
}

std::uint64_t parse_seed(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != s.size() || s.empty() || s[0] == '-') throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(line, "seed must be a non-negative 64-bit integer, got '" + s + "'");
  }
}

void check_value(const std::string& key, const std::string& v) {
  if (v.find('\n') != std::string::npos) throw Error(ErrorKind::Config, "value of '" + key + "' contains a newline");
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"gauge", "constants", "tau",      "discrepancy", "cf",         "liouville", "akc",
                                              "induce", "tower",   "towerbook", "mix3",        "bc-measure", "decisive"};
  return names;
}

bool is_experiment(std::string_view name) {
  const auto& n = experiment_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

ExperimentConfig parse_ini(std::string_view text) {
  ExperimentConfig cfg;
  std::string section;
  bool have_name = false;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "unterminated section header");
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      if (section != "experiment" && section != "params" && section != "output")
        fail(line, "unknown section [" + section + "] (experiment, params, output)");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(std::string_view(s).substr(0, eq));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    if (key.empty()) fail(line, "empty key");
    if (section.empty()) fail(line, "key '" + key + "' outside a section");
    if (section == "experiment") {
      if (key == "name") {
        if (!is_experiment(value)) fail(line, "unknown experiment '" + value + "'");
        cfg.experiment = value;
        have_name = true;
      } else if (key == "target") {
        cfg.target = value;
      } else if (key == "seed") {
        cfg.seed = parse_seed(value, line);
      } else if (key == "horizons") {
        cfg.horizons = value;
      } else {
        fail(line, "unknown key '" + key + "' in [experiment] (name, target, seed, horizons)");
      }
    } else if (section == "params") {
      if (cfg.params.count(key)) fail(line, "duplicate parameter '" + key + "'");
      cfg.params[key] = value;
    } else {
      if (key != "csv" && key != "json") fail(line, "unknown key '" + key + "' in [output] (csv, json)");
      cfg.outputs[key] = value;
    }
  }
  if (!have_name) throw Error(ErrorKind::Config, "missing [experiment] name");
  return cfg;
}

std::string to_ini(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "[experiment]\n";
  os << "name = " << cfg.experiment << "\n";
  if (!cfg.target.empty()) os << "target = " << cfg.target << "\n";
  os << "seed = " << cfg.seed << "\n";
  if (!cfg.horizons.empty()) os << "horizons = " << cfg.horizons << "\n";
  if (!cfg.params.empty()) {
    os << "\n[params]\n";
    for (const auto& [k, v] : cfg.params) {
      check_value(k, v);
      os << k << " = " << v << "\n";
    }
  }
  if (!cfg.outputs.empty()) {
    os << "\n[output]\n";
    for (const auto& [k, v] : cfg.outputs) os << k << " = " << v << "\n";
  }
  return os.str();
}

ExperimentConfig parse_config_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Config, std::string("JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::Config, "JSON config must be an object");
  ExperimentConfig cfg;
  auto as_text = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  for (const auto& [key, v] : j.items()) {
    if (key == "experiment") {
      cfg.experiment = as_text(v);
      if (!is_experiment(cfg.experiment)) throw Error(ErrorKind::Config, "field experiment: unknown '" + cfg.experiment + "'");
    } else if (key == "target") {
      cfg.target = as_text(v);
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) throw Error(ErrorKind::Config, "field seed: must be a non-negative integer");
      cfg.seed = v.get<std::uint64_t>();
    } else if (key == "horizons") {
      cfg.horizons = as_text(v);
    } else if (key == "params" || key == "output") {
      if (!v.is_object()) throw Error(ErrorKind::Config, "field " + key + ": must be an object");
      auto& dst = key == "params" ? cfg.params : cfg.outputs;
      for (const auto& [k, pv] : v.items()) dst[k] = as_text(pv);
    } else {
      throw Error(ErrorKind::Config, "unknown field '" + key + "'");
    }
  }
  if (cfg.experiment.empty()) throw Error(ErrorKind::Config, "field experiment: missing");
  return cfg;
}

std::string to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["experiment"] = cfg.experiment;
  if (!cfg.target.empty()) j["target"] = cfg.target;
  j["seed"] = cfg.seed;
  if (!cfg.horizons.empty()) j["horizons"] = cfg.horizons;
  j["params"] = nlohmann::json::object();
  for (const auto& [k, v] : cfg.params) j["params"][k] = v;
  if (!cfg.outputs.empty()) {
    for (const auto& [k, v] : cfg.outputs) j["output"][k] = v;
  }
  return j.dump(2) + "\n";
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Config, "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  return json ? parse_config_json(ss.str()) : parse_ini(ss.str());
}

// ---------------------------------------------------------------------------

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, any = false;
  int line = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      rec.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        rec.push_back(std::move(field));
        records.push_back(std::move(rec));
      }
      rec.clear();
      field.clear();
      any = false;
      ++line;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw Error(ErrorKind::BadCsv, "unterminated quote at line " + std::to_string(line));
  if (any || !field.empty()) {
    rec.push_back(std::move(field));
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw Error(ErrorKind::BadCsv, "empty CSV");
  CsvTable t;
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size())
      throw Error(ErrorKind::BadCsv, "row " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                                         " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

}  // namespace ietlab::lab
