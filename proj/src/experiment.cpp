#include "renewal/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "renewal/errors.hpp"

namespace renewal {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;
constexpr int kResidualGrid = 128;

// Shortest round-trip form, for names and messages.
std::string short_number(double x) { return json(x).dump(); }

std::string label(const char* name, double order) { return std::string(name) + "=" + short_number(order); }

json to_json(const TvCurve& c) {
  json points = json::array();
  for (const auto& [t, v] : c.points) points.push_back({t, v});
  return {{"mode", c.mode == TvMode::poly ? "poly" : "exp"},
          {"order", c.order},
          {"integral", c.integral},
          {"points", points}};
}

json to_json(const Estimate& e) { return {{"value", e.value}, {"std_error", e.std_error}}; }

std::vector<double> analytic_column(const BoundReport& b) {
  std::vector<double> out(b.config.t_grid.size(), 1.0);
  bool used = false;
  for (const TvCurve& c : b.tv_curves) {
    const bool wanted = b.config.tv_column == TvColumn::best ||
                        (b.config.tv_column == TvColumn::poly && c.mode == TvMode::poly) ||
                        (b.config.tv_column == TvColumn::exp && c.mode == TvMode::exp);
    // poly/exp columns show the first curve of that kind; best is the pointwise minimum.
    if (!wanted || (used && b.config.tv_column != TvColumn::best)) continue;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(out[i], c.points[i].second);
    used = true;
  }
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

BoundReport compute_bounds(const RunConfig& config) {
  BoundReport r;
  r.config = config;
  r.threshold_source = config.threshold_mode;
  r.beta_auto = !config.beta.has_value();
  r.law = make_law(config.law);
  const quad::Options& opt = config.quad;
  r.xi_mean = moment(*r.law, 1.0, opt);

  double threshold = config.threshold;
  if (config.threshold_mode == ThresholdMode::automatic) {
    threshold = 2.0 * moment(*r.law, 2.0, opt) / r.xi_mean;
  } else if (config.threshold_mode == ThresholdMode::optimize) {
    threshold = optimize_threshold(r.law, {}, opt);
  }
  try {
    r.kappa = kappa_theta(r.law, threshold);
    r.params = coupling_params(r.law, threshold, {}, opt);
  } catch (const ThresholdTooSmallError& e) {
    throw ConfigError("coupling.theta", "Theta = " + short_number(threshold) + " must exceed R = " +
                                            short_number(e.lorden_ratio()));
  } catch (const NoCouplingError& e) {
    throw ConfigError("coupling.theta", e.what());
  }
  r.config.threshold_mode = ThresholdMode::fixed;
  r.config.threshold = threshold;

  for (double ell : config.ell) {
    try {
      r.poly.push_back(poly_bound(r.law, config.b, config.b_prime, r.params, ell, opt));
    } catch (const DivergenceError& e) {
      throw ConfigError("bounds.ell", label("ell", ell) + ": " + e.what());
    }
  }

  const ResidualMgf table(r.law, threshold, kResidualGrid, opt);
  try {
    r.beta_search = beta_search(table, r.params.q);
  } catch (const NoExponentialRateError& e) {
    r.beta_note = e.what();
  }
  std::vector<double> betas;
  if (config.beta) {
    betas = *config.beta;
  } else if (r.beta_search) {
    betas = {0.5 * r.beta_search->beta0};
  }
  r.config.beta = betas;
  for (double beta : betas) {
    try {
      r.mgf.push_back(residual_mgf_bound(table, beta));
      r.exp.push_back(exp_bound(r.law, config.b, config.b_prime, r.params, table, beta, opt));
    } catch (const DivergenceError& e) {
      throw ConfigError("bounds.beta", label("beta", beta) + ": " + e.what());
    } catch (const RateInadmissibleError& e) {
      throw ConfigError("bounds.beta", label("beta", beta) + ": " + e.what());
    }
  }

  if (const auto* ex = dynamic_cast<const ExampleLaw*>(r.law.get())) {
    r.example = example_diagnostics(ex->c(), ex->k(), threshold, opt);
  }

  for (double ell : config.ell) {
    try {
      r.tv_curves.push_back(tv_bound_curve(r.law, config.b, r.params, TvMode::poly, ell, config.t_grid, nullptr, opt));
    } catch (const DivergenceError& e) {
      throw ConfigError("bounds.ell", label("ell", ell) + ": " + e.what());
    }
  }
  for (double beta : betas) {
    try {
      r.tv_curves.push_back(tv_bound_curve(r.law, config.b, r.params, TvMode::exp, beta, config.t_grid, &table, opt));
    } catch (const DivergenceError& e) {
      throw ConfigError("bounds.beta", label("beta", beta) + ": " + e.what());
    }
  }
  if (config.tv_column == TvColumn::exp && betas.empty()) {
    throw ConfigError("bounds.tv_column", "\"exp\" needs an admissible beta: " + r.beta_note);
  }
  return r;
}

SimReport run_simulation(const BoundReport& b, const SimulationParts& parts) {
  const RunConfig& c = b.config;
  SimReport s;
  s.seed = c.seed;
  s.replicas = c.replicas;
  if (parts.tau) {
    PairOptions opt;
    opt.event_cap = c.event_cap;
    TauBatch batch = simulate_tau(b.law, c.b, c.b_prime, c.threshold, c.replicas, c.seed, opt);
    s.tau_samples = std::move(batch.samples);
    s.stats = batch.stats;
    for (double ell : c.ell) {
      s.moments.push_back({Functional::power, ell, estimate_tau_functional(s.tau_samples, Functional::power, ell)});
    }
    for (double beta : *c.beta) {
      s.moments.push_back(
          {Functional::exponential, beta, estimate_tau_functional(s.tau_samples, Functional::exponential, beta)});
    }
  }
  if (parts.tv) {
    const std::size_t n = c.tv_replicas == 0 ? c.replicas : c.tv_replicas;
    s.empirical_tv = empirical_tv(b.law, c.b, c.t_grid, n, c.tv_bins, c.seed);
  }
  if (parts.lorden) {
    s.lorden = lorden_check(b.law, c.lorden_horizon.value_or(50.0 * b.xi_mean), c.lorden_replicas, c.seed);
  }
  return s;
}

std::vector<Verdict> dominance_verdicts(const BoundReport& b, const SimReport& s) {
  std::vector<Verdict> out;
  std::size_t poly_index = 0;
  std::size_t exp_index = 0;
  for (const MomentEstimate& m : s.moments) {
    const bool power = m.kind == Functional::power;
    const double bound = power ? b.poly.at(poly_index++).value : b.exp.at(exp_index++).value;
    const Estimate& e = m.estimate;
    out.push_back({power ? "E tau^ell <= Poly, " + label("ell", m.order)
                         : "E exp(beta tau) <= Exp, " + label("beta", m.order),
                   e.value, e.std_error, bound, 3.0 * e.std_error, e.value <= bound + 3.0 * e.std_error, true});
  }

  if (!s.empirical_tv.empty()) {
    for (const TvCurve& curve : b.tv_curves) {
      const std::string name = curve.mode == TvMode::poly ? "empirical TV <= poly curve, " + label("ell", curve.order)
                                                          : "empirical TV <= exp curve, " + label("beta", curve.order);
      for (std::size_t i = 0; i < s.empirical_tv.size(); ++i) {
        const double bound = curve.points[i].second;
        // The estimator cannot resolve distances below its own noise floor.
        const TvEstimate& e = s.empirical_tv[i];
        const double margin = std::max(0.0, e.noise_floor - bound);
        out.push_back({name + ", " + label("t", e.t), e.value, 0.0, bound, margin, e.value <= bound + margin, true});
      }
    }
  }

  if (s.lorden) {
    const LordenCheck& l = *s.lorden;
    out.push_back({"sup_t E B_t <= R", l.sup_mean, l.sup_std_error, l.ratio, 3.0 * l.sup_std_error, l.pass, true});
  }

  if (s.stats.lead_renewals > 0) {
    const AttemptStats& st = s.stats;
    const double p0 = b.params.p0;
    const double n = static_cast<double>(st.lead_renewals);
    const double se = std::sqrt(p0 * (1.0 - p0) / n);
    out.push_back({"fraction of lead renewals with age <= Theta >= p0", st.window_rate(), se, p0, 3.0 * se,
                   st.window_rate() >= p0 - 3.0 * se, false});
    const double sigma = std::sqrt(st.kappa_variance);
    const double hits = static_cast<double>(st.coincided);
    out.push_back({"coincidences match sum of kappa", hits, sigma, st.kappa_sum, 3.0 * sigma,
                   std::abs(hits - st.kappa_sum) <= 3.0 * sigma + 1e-9 * std::max(1.0, st.kappa_sum), false});
  }
  return out;
}

bool all_gating_pass(const std::vector<Verdict>& verdicts) {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return !v.gating || v.pass; });
}

ExperimentReport run_experiment(const RunConfig& config) {
  ExperimentReport r;
  r.bounds = compute_bounds(config);
  r.sim = run_simulation(r.bounds);
  r.verdicts = dominance_verdicts(r.bounds, r.sim);
  return r;
}

json to_json(const BoundReport& r) {
  json doc;
  doc["kind"] = "bounds";
  doc["schema_version"] = kSchemaVersion;
  doc["config"] = config_to_json(r.config);
  // Where the files land is not part of the experiment; reports must not depend on it.
  doc["config"].erase("output");
  doc["resolved_from"] = {{"theta", std::string(to_string(r.threshold_source))},
                          {"beta", r.beta_auto ? "auto" : "given"}};
  doc["law"] = r.law->spec();
  doc["xi_mean"] = r.xi_mean;
  doc["coupling"] = {{"theta", r.params.threshold},
                     {"lorden_ratio", r.params.lorden_ratio},
                     {"p0", r.params.p0},
                     {"kappa_theta", r.params.kappa_theta},
                     {"kappa_grid_min", r.kappa.grid_min},
                     {"kappa_argmin", r.kappa.argmin},
                     {"kappa_margin", r.kappa.margin},
                     {"kappa_evaluations", r.kappa.evaluations},
                     {"pi", r.params.pi},
                     {"q", r.params.q}};
  json poly = json::array();
  for (const PolyBound& p : r.poly) {
    poly.push_back({{"ell", p.ell},
                    {"s_ell", p.s_ell},
                    {"forward_moment", p.forward_moment},
                    {"xi_moment", p.xi_moment},
                    {"value", p.value}});
  }
  doc["poly"] = poly;
  if (r.beta_search) {
    doc["beta_search"] = {{"beta0", r.beta_search->beta0},
                          {"beta_max", r.beta_search->beta_max},
                          {"epsilon", r.beta_search->epsilon},
                          {"margin", r.beta_search->margin}};
  } else {
    doc["beta_search"] = {{"note", r.beta_note}};
  }
  json exp = json::array();
  for (std::size_t i = 0; i < r.exp.size(); ++i) {
    const ExpBound& e = r.exp[i];
    const MgfBound& m = r.mgf[i];
    json entry = {{"beta", e.beta},
                  {"forward_mgf_first", e.forward_mgf_first},
                  {"forward_mgf_second", e.forward_mgf_second},
                  {"xi_mgf", e.xi_mgf},
                  {"m", e.m},
                  {"m_fresh", m.fresh},
                  {"m_residual", m.residual},
                  {"value", e.value}};
    if (m.analytic) entry["m_analytic"] = *m.analytic;
    exp.push_back(entry);
  }
  doc["exp"] = exp;
  if (r.example) {
    json ex = {{"gamma1", r.example->gamma1}};
    if (r.example->gamma2) ex["gamma2"] = *r.example->gamma2;
    if (r.example->r_hat) ex["r_hat"] = *r.example->r_hat;
    if (r.example->q_theta) ex["q_theta"] = *r.example->q_theta;
    doc["example_diagnostics"] = ex;
  }
  json curves = json::array();
  for (const TvCurve& c : r.tv_curves) curves.push_back(to_json(c));
  doc["tv_curves"] = curves;
  return doc;
}

json to_json(const SimReport& s, const std::vector<Verdict>& verdicts) {
  json doc;
  doc["kind"] = "sim";
  doc["schema_version"] = kSchemaVersion;
  doc["seed"] = s.seed;
  doc["replicas"] = s.replicas;
  if (!s.tau_samples.empty()) {
    const auto [lo, hi] = std::minmax_element(s.tau_samples.begin(), s.tau_samples.end());
    doc["tau"] = {{"count", s.tau_samples.size()}, {"min", *lo}, {"max", *hi}};
    const AttemptStats& st = s.stats;
    doc["attempts"] = {{"lead_renewals", st.lead_renewals},
                       {"in_window", st.in_window},
                       {"blocked", st.blocked},
                       {"attempts", st.attempts},
                       {"coincided", st.coincided},
                       {"kappa_sum", st.kappa_sum},
                       {"window_rate", st.window_rate()},
                       {"attempt_success_rate", st.success_rate()}};
  }
  json moments = json::array();
  for (const MomentEstimate& m : s.moments) {
    json entry = to_json(m.estimate);
    entry["functional"] = m.kind == Functional::power ? "power" : "exponential";
    entry["order"] = m.order;
    moments.push_back(entry);
  }
  doc["moments"] = moments;
  json tv = json::array();
  for (const TvEstimate& e : s.empirical_tv) {
    tv.push_back({{"t", e.t},
                  {"value", e.value},
                  {"bins", e.bins},
                  {"bin_width", e.bin_width},
                  {"noise_floor", e.noise_floor}});
  }
  doc["empirical_tv"] = tv;
  if (!s.empirical_tv.empty()) {
    doc["empirical_tv_note"] = "histogram estimate over the listed bins; values below noise_floor are indistinguishable from 0";
  }
  if (s.lorden) {
    const LordenCheck& l = *s.lorden;
    doc["lorden"] = {{"sup_mean", l.sup_mean},
                     {"sup_time", l.sup_time},
                     {"sup_std_error", l.sup_std_error},
                     {"ratio", l.ratio},
                     {"pass", l.pass}};
  }
  json v = json::array();
  for (const Verdict& x : verdicts) {
    v.push_back({{"name", x.name},
                 {"estimate", x.estimate},
                 {"std_error", x.std_error},
                 {"bound", x.bound},
                 {"margin", x.margin},
                 {"pass", x.pass},
                 {"gating", x.gating}});
  }
  doc["verdicts"] = v;
  return doc;
}

std::string tv_curve_csv(const BoundReport& b, const SimReport* sim) {
  const std::vector<double> analytic = analytic_column(b);
  std::ostringstream out;
  out << "t,analytic_bound,empirical_tv\n";
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    out << format_double(b.config.t_grid[i]) << ',' << format_double(analytic[i]) << ',';
    if (sim != nullptr && i < sim->empirical_tv.size()) out << format_double(sim->empirical_tv[i].value);
    out << '\n';
  }
  return out.str();
}

std::string tau_csv(const SimReport& sim) {
  std::string out = "tau\n";
  for (double tau : sim.tau_samples) {
    out += format_double(tau);
    out += '\n';
  }
  return out;
}

namespace {

void check_unit(std::vector<std::string>& problems, const std::string& what, double x) {
  if (!(x >= 0.0 && x <= 1.0)) problems.push_back(what + " outside [0, 1]");
}

void check_nonincreasing(std::vector<std::string>& problems, const std::string& what,
                         const std::vector<double>& values) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[i - 1]) problems.push_back(what + " increases at row " + std::to_string(i));
  }
}

std::vector<std::string> check_bounds_json(const json& doc) {
  std::vector<std::string> problems;
  const RunConfig config = config_from_json(doc.at("config"));
  if (config.threshold_mode != ThresholdMode::fixed) problems.push_back("config.coupling.theta is not resolved");
  const json& c = doc.at("coupling");
  const double p0 = c.at("p0").get<double>();
  const double kappa = c.at("kappa_theta").get<double>();
  const double q = c.at("q").get<double>();
  const double ratio = c.at("lorden_ratio").get<double>();
  if (!(c.at("theta").get<double>() > ratio)) problems.push_back("coupling.theta does not exceed R");
  if (std::abs(p0 - (1.0 - ratio / c.at("theta").get<double>())) > 1e-12) problems.push_back("p0 != 1 - R / Theta");
  check_unit(problems, "coupling.p0", p0);
  check_unit(problems, "coupling.kappa_theta", kappa);
  if (std::abs(q - (1.0 - p0 * kappa)) > 1e-12) problems.push_back("q != 1 - p0 kappa_Theta");
  const double geo = 1.0 / ((1.0 - q) * (1.0 - q)) + 1.0 / (1.0 - q);
  for (const json& p : doc.at("poly")) {
    const double expect = p.at("forward_moment").get<double>() * p.at("s_ell").get<double>() +
                          p.at("xi_moment").get<double>() * geo;
    if (std::abs(p.at("value").get<double>() - expect) > 1e-9 * std::abs(expect)) {
      problems.push_back("poly value inconsistent with its parts at ell = " + format_double(p.at("ell").get<double>()));
    }
  }
  for (const json& e : doc.at("exp")) {
    const double m = e.at("m").get<double>();
    if (!(q * m < 1.0)) problems.push_back("exp entry with q M >= 1");
    const double expect = e.at("forward_mgf_first").get<double>() * e.at("forward_mgf_second").get<double>() *
                          e.at("xi_mgf").get<double>() / (1.0 - q * m);
    if (std::abs(e.at("value").get<double>() - expect) > 1e-9 * std::abs(expect)) {
      problems.push_back("exp value inconsistent with its parts at beta = " + format_double(e.at("beta").get<double>()));
    }
  }
  for (const json& curve : doc.at("tv_curves")) {
    std::vector<double> values;
    for (const json& pt : curve.at("points")) {
      values.push_back(pt.at(1).get<double>());
      check_unit(problems, "tv curve value", values.back());
    }
    if (values.size() != config.t_grid.size()) problems.push_back("tv curve length differs from t_grid");
    check_nonincreasing(problems, "tv curve", values);
  }
  return problems;
}

std::vector<std::string> check_sim_json(const json& doc) {
  std::vector<std::string> problems;
  if (!(doc.at("replicas").get<std::size_t>() > 0)) problems.push_back("replicas must be positive");
  if (doc.contains("tau") && !(doc.at("tau").at("min").get<double>() >= 0.0)) {
    problems.push_back("negative coupling epoch");
  }
  for (const json& m : doc.at("moments")) {
    const double se = m.at("std_error").get<double>();
    if (!std::isfinite(m.at("value").get<double>()) || !(se >= 0.0) || !std::isfinite(se)) {
      problems.push_back("moment estimate without a finite std-error");
    }
  }
  for (const json& e : doc.at("empirical_tv")) check_unit(problems, "empirical TV", e.at("value").get<double>());
  for (const json& v : doc.at("verdicts")) {
    if (!v.at("pass").is_boolean() || !v.at("gating").is_boolean()) problems.push_back("malformed verdict");
  }
  return problems;
}

std::vector<std::string> check_tv_csv(const std::string& text) {
  std::vector<std::string> problems;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "t,analytic_bound,empirical_tv") {
    return {"header must be t,analytic_bound,empirical_tv"};
  }
  std::vector<double> ts;
  std::vector<double> bounds;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 3) {
      problems.push_back("row " + std::to_string(ts.size() + 1) + " does not have 3 columns");
      continue;
    }
    try {
      ts.push_back(std::stod(cells[0]));
      bounds.push_back(std::stod(cells[1]));
      if (!cells[2].empty()) check_unit(problems, "empirical_tv", std::stod(cells[2]));
    } catch (const std::exception&) {
      problems.push_back("row " + std::to_string(ts.size() + 1) + " is not numeric");
    }
  }
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(ts[i] > 0.0)) problems.push_back("t must be positive");
    check_unit(problems, "analytic_bound", bounds[i]);
  }
  std::vector<std::size_t> order(ts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ts[a] < ts[b]; });
  std::vector<double> sorted;
  for (std::size_t i : order) sorted.push_back(bounds[i]);
  check_nonincreasing(problems, "analytic_bound", sorted);
  return problems;
}

}  // namespace

std::vector<std::string> check_report(const std::string& kind, const std::string& text) {
  if (kind == "tv_curve") return check_tv_csv(text);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    return {std::string("not valid JSON: ") + e.what()};
  }
  try {
    if (!doc.is_object() || doc.value("kind", "") != kind) return {"expected a report of kind '" + kind + "'"};
    if (doc.value("schema_version", 0) != kSchemaVersion) return {"unsupported schema_version"};
    return kind == "bounds" ? check_bounds_json(doc) : check_sim_json(doc);
  } catch (const json::exception& e) {
    return {std::string("missing or mistyped field: ") + e.what()};
  } catch (const ConfigError& e) {
    return {std::string("embedded config invalid: ") + e.what()};
  }
}

}  // namespace renewal
