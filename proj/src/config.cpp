#include "renewal/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "renewal/errors.hpp"

namespace renewal {

namespace {

using nlohmann::json;

json node_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    json out = json::object();
    for (const auto& [key, value] : *t) out[std::string(key.str())] = node_to_json(value);
    return out;
  }
  if (const auto* a = node.as_array()) {
    json out = json::array();
    for (const auto& value : *a) out.push_back(node_to_json(value));
    return out;
  }
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  if (const auto* v = node.as_string()) return v->get();
  throw ConfigError("config", "dates and times are not supported");
}

// Field readers. Each takes the enclosing table and its dotted path.
class Reader {
 public:
  Reader(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "must be a table");
  }

  bool has(const char* key) const { return doc_.contains(key); }
  const json& raw(const char* key) const { return doc_.at(key); }
  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  Reader table(const char* key) const {
    static const json empty = json::object();
    return Reader(has(key) ? raw(key) : empty, field(key));
  }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(field(key), "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key), "must be finite");
    return x;
  }

  double nonnegative(const char* key, double fallback) const {
    const double x = number(key, fallback);
    if (!(x >= 0.0)) throw ConfigError(field(key), "must be >= 0");
    return x;
  }

  double positive(const char* key, double fallback) const {
    const double x = number(key, fallback);
    if (!(x > 0.0)) throw ConfigError(field(key), "must be > 0");
    return x;
  }

  std::uint64_t count(const char* key, std::uint64_t fallback, bool allow_zero = false) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "must be an integer");
    if (v.is_number_unsigned()) {
      const auto n = v.get<std::uint64_t>();
      if (n == 0 && !allow_zero) throw ConfigError(field(key), "must be positive");
      return n;
    }
    const auto n = v.get<std::int64_t>();
    if (n < 0 || (n == 0 && !allow_zero)) throw ConfigError(field(key), allow_zero ? "must be >= 0" : "must be positive");
    return static_cast<std::uint64_t>(n);
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!raw(key).is_boolean()) throw ConfigError(field(key), "must be true or false");
    return raw(key).get<bool>();
  }

  std::string string(const char* key, std::string fallback) const {
    if (!has(key)) return fallback;
    if (!raw(key).is_string()) throw ConfigError(field(key), "must be a string");
    return raw(key).get<std::string>();
  }

  std::vector<double> positive_list(const char* key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    std::vector<double> out;
    if (v.is_number()) {
      out.push_back(v.get<double>());
    } else if (v.is_array()) {
      for (const json& x : v) {
        if (!x.is_number()) throw ConfigError(field(key), "must be a list of numbers");
        out.push_back(x.get<double>());
      }
    } else {
      throw ConfigError(field(key), "must be a number or a list of numbers");
    }
    if (out.empty()) throw ConfigError(field(key), "must not be empty");
    for (double x : out) {
      if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(field(key), "entries must be positive and finite");
    }
    return out;
  }

 private:
  const json& doc_;
  std::string path_;
};

void reject_unknown(const json& doc, const std::string& path, std::initializer_list<const char*> known) {
  for (const auto& [key, value] : doc.items()) {
    bool found = false;
    for (const char* k : known) found = found || key == k;
    if (!found) throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
  }
}

}  // namespace

std::string_view to_string(ThresholdMode mode) {
  switch (mode) {
    case ThresholdMode::fixed:
      return "fixed";
    case ThresholdMode::automatic:
      return "auto";
    case ThresholdMode::optimize:
      return "optimize";
  }
  return "?";
}

std::string_view to_string(TvColumn column) {
  switch (column) {
    case TvColumn::best:
      return "best";
    case TvColumn::poly:
      return "poly";
    case TvColumn::exp:
      return "exp";
  }
  return "?";
}

json toml_to_json(std::string_view text, std::string_view source) {
  try {
    const toml::table table = toml::parse(text, source);
    return node_to_json(table);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << e.description() << " (line " << e.source().begin.line << ", column " << e.source().begin.column << ")";
    throw ConfigError(std::string(source), msg.str());
  }
}

RunConfig config_from_json(const json& doc) {
  const Reader root(doc, "");
  reject_unknown(doc, "", {"seed", "law", "initial", "coupling", "bounds", "simulation", "tv", "lorden", "output"});
  RunConfig c;

  if (!root.has("law")) throw ConfigError("law", "missing");
  c.law = root.raw("law");
  if (c.law.is_object()) reject_unknown(c.law, "law", {"family", "params"});

  c.seed = root.count("seed", c.seed, true);

  const Reader initial = root.table("initial");
  if (root.has("initial")) reject_unknown(root.raw("initial"), "initial", {"b", "b_prime"});
  c.b = initial.nonnegative("b", c.b);
  c.b_prime = initial.nonnegative("b_prime", c.b_prime);

  const Reader coupling = root.table("coupling");
  if (root.has("coupling")) reject_unknown(root.raw("coupling"), "coupling", {"theta"});
  if (coupling.has("theta") && coupling.raw("theta").is_string()) {
    const std::string mode = coupling.raw("theta").get<std::string>();
    if (mode == "auto") {
      c.threshold_mode = ThresholdMode::automatic;
    } else if (mode == "optimize") {
      c.threshold_mode = ThresholdMode::optimize;
    } else {
      throw ConfigError("coupling.theta", "must be a positive number, \"auto\" or \"optimize\"");
    }
  } else if (coupling.has("theta")) {
    c.threshold_mode = ThresholdMode::fixed;
    c.threshold = coupling.positive("theta", 0.0);
  }

  const Reader bounds = root.table("bounds");
  if (root.has("bounds")) {
    reject_unknown(root.raw("bounds"), "bounds", {"ell", "beta", "rel_tol", "abs_tol", "tv_column"});
  }
  c.ell = bounds.positive_list("ell", c.ell);
  if (bounds.has("beta") && bounds.raw("beta").is_string()) {
    if (bounds.raw("beta").get<std::string>() != "auto") {
      throw ConfigError("bounds.beta", "must be \"auto\" or a list of positive rates");
    }
  } else if (bounds.has("beta")) {
    c.beta = bounds.positive_list("beta", {});
  }
  c.quad.rel_tol = bounds.positive("rel_tol", c.quad.rel_tol);
  c.quad.abs_tol = bounds.positive("abs_tol", c.quad.abs_tol);
  const std::string column = bounds.string("tv_column", "best");
  if (column == "best") {
    c.tv_column = TvColumn::best;
  } else if (column == "poly") {
    c.tv_column = TvColumn::poly;
  } else if (column == "exp") {
    c.tv_column = TvColumn::exp;
  } else {
    throw ConfigError("bounds.tv_column", "must be \"best\", \"poly\" or \"exp\"");
  }

  const Reader sim = root.table("simulation");
  if (root.has("simulation")) reject_unknown(root.raw("simulation"), "simulation", {"replicas", "event_cap", "tau_csv"});
  c.replicas = sim.count("replicas", c.replicas);
  c.event_cap = sim.count("event_cap", c.event_cap);
  c.tau_csv = sim.boolean("tau_csv", c.tau_csv);

  const Reader tv = root.table("tv");
  if (root.has("tv")) reject_unknown(root.raw("tv"), "tv", {"t_grid", "replicas", "bins"});
  c.t_grid = tv.positive_list("t_grid", c.t_grid);
  c.tv_replicas = tv.count("replicas", c.tv_replicas, true);
  c.tv_bins = tv.count("bins", c.tv_bins, true);

  const Reader lorden = root.table("lorden");
  if (root.has("lorden")) reject_unknown(root.raw("lorden"), "lorden", {"replicas", "horizon"});
  c.lorden_replicas = lorden.count("replicas", c.lorden_replicas);
  if (lorden.has("horizon")) c.lorden_horizon = lorden.positive("horizon", 1.0);

  const Reader output = root.table("output");
  if (root.has("output")) reject_unknown(root.raw("output"), "output", {"dir"});
  c.output_dir = output.string("dir", c.output_dir);
  return c;
}

json config_to_json(const RunConfig& c) {
  json doc;
  doc["seed"] = c.seed;
  doc["law"] = c.law;
  doc["initial"] = {{"b", c.b}, {"b_prime", c.b_prime}};
  if (c.threshold_mode == ThresholdMode::fixed) {
    doc["coupling"]["theta"] = c.threshold;
  } else {
    doc["coupling"]["theta"] = std::string(to_string(c.threshold_mode));
  }
  doc["bounds"]["ell"] = c.ell;
  if (c.beta) {
    doc["bounds"]["beta"] = *c.beta;
  } else {
    doc["bounds"]["beta"] = "auto";
  }
  doc["bounds"]["rel_tol"] = c.quad.rel_tol;
  doc["bounds"]["abs_tol"] = c.quad.abs_tol;
  doc["bounds"]["tv_column"] = std::string(to_string(c.tv_column));
  doc["simulation"] = {{"replicas", c.replicas}, {"event_cap", c.event_cap}, {"tau_csv", c.tau_csv}};
  doc["tv"] = {{"t_grid", c.t_grid}, {"replicas", c.tv_replicas}, {"bins", c.tv_bins}};
  doc["lorden"]["replicas"] = c.lorden_replicas;
  if (c.lorden_horizon) doc["lorden"]["horizon"] = *c.lorden_horizon;
  if (!c.output_dir.empty()) doc["output"]["dir"] = c.output_dir;
  return doc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (path.extension() == ".json") {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(path.string(), e.what());
    }
    return config_from_json(doc);
  }
  return config_from_json(toml_to_json(text, path.string()));
}

}  // namespace renewal
