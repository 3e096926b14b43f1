// coupling_bounds: certified coupling-epoch and TV-convergence bounds for a
// renewal law, checked against a simulation of the coupled pair.
//
// Exit status: 0 success, 1 internal error, 2 invalid config or report,
// 3 a gating dominance verdict failed (verify only).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "renewal/errors.hpp"
#include "renewal/experiment.hpp"

namespace fs = std::filesystem;
using namespace renewal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitVerdict = 3;

constexpr const char* kOutEnv = "COUPLING_BOUNDS_OUT";

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("-c,--config", common.config, "run config (.toml or .json)")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", common.seed, "override the config seed");
  sub->add_option("-o,--out", common.out, std::string("output directory (default: config output.dir, $") + kOutEnv + ", .)");
}

RunConfig resolve_config(const Common& common) {
  RunConfig config = load_config(common.config);
  if (common.seed) config.seed = *common.seed;
  if (!common.out.empty()) {
    config.output_dir = common.out;
  } else if (config.output_dir.empty()) {
    const char* env = std::getenv(kOutEnv);
    config.output_dir = env != nullptr && *env != '\0' ? env : ".";
  }
  return config;
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  std::cout << "wrote " << path.string() << '\n';
}

void print_resolved(const BoundReport& b) {
  const CouplingParams& p = b.params;
  std::printf("law: %s\n", b.law->spec().dump().c_str());
  std::printf("Theta = %.10g (%s)  R = %.10g  p0 = %.10g  kappa_Theta = %.10g  q = %.10g\n", p.threshold,
              std::string(to_string(b.threshold_source)).c_str(), p.lorden_ratio, p.p0, p.kappa_theta, p.q);
  for (const PolyBound& x : b.poly) std::printf("Poly(ell = %g) = %.10g\n", x.ell, x.value);
  if (b.beta_search) {
    std::printf("beta0 = %.10g\n", b.beta_search->beta0);
  } else {
    std::printf("beta0: none (%s)\n", b.beta_note.c_str());
  }
  for (const ExpBound& x : b.exp) {
    std::printf("Exp(beta = %.10g%s) = %.10g  M = %.10g\n", x.beta, b.beta_auto ? ", auto" : "", x.value, x.m);
  }
}

int print_verdicts(const std::vector<Verdict>& verdicts) {
  for (const Verdict& v : verdicts) {
    std::printf("%s %s%s: estimate %.6g vs bound %.6g (margin %.3g)\n", v.pass ? "PASS" : "FAIL",
                v.gating ? "" : "[diagnostic] ", v.name.c_str(), v.estimate, v.bound, v.margin);
  }
  return all_gating_pass(verdicts) ? kExitOk : kExitVerdict;
}

std::string dump(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

int check_file(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open " << file << '\n';
    return kExitInvalid;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::string kind = "tv_curve";
  if (fs::path(file).extension() != ".csv") {
    try {
      kind = nlohmann::json::parse(text).value("kind", "");
    } catch (const nlohmann::json::exception&) {
      kind = "";
    }
    if (kind != "bounds" && kind != "sim") {
      std::cerr << "error: " << file << " is not a bounds or sim report\n";
      return kExitInvalid;
    }
  }
  const std::vector<std::string> problems = check_report(kind, text);
  for (const std::string& p : problems) std::cerr << "invalid: " << p << '\n';
  if (!problems.empty()) return kExitInvalid;
  std::cout << file << ": valid " << kind << " report\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified coupling-epoch and TV-convergence bounds for renewal processes"};
  app.require_subcommand(0, 1);
  std::string check;
  app.add_option("--check", check, "re-validate an emitted report (bounds.json, sim.json or tv_curve.csv)");

  Common common;
  CLI::App* bounds = app.add_subcommand("bounds", "compute bounds, write bounds.json");
  CLI::App* simulate = app.add_subcommand("simulate", "simulate the coupled pair, write sim.json");
  CLI::App* verify = app.add_subcommand("verify", "bounds + simulation + dominance verdicts");
  CLI::App* tv = app.add_subcommand("tv-curve", "analytic and empirical TV curves, write tv_curve.csv");
  for (CLI::App* sub : {bounds, simulate, verify, tv}) add_common(sub, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  if (!check.empty()) return check_file(check);
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kExitInvalid;
  }

  try {
    const RunConfig config = resolve_config(common);
    const fs::path out = config.output_dir;
    const BoundReport b = compute_bounds(config);
    print_resolved(b);

    if (*bounds) {
      write_file(out / "bounds.json", dump(to_json(b)));
      return kExitOk;
    }
    if (*tv) {
      const SimReport sim = run_simulation(b, {.tau = false, .tv = true, .lorden = false});
      write_file(out / "tv_curve.csv", tv_curve_csv(b, &sim));
      return kExitOk;
    }
    if (*simulate) {
      const SimReport sim = run_simulation(b);
      write_file(out / "sim.json", dump(to_json(sim)));
      if (config.tau_csv) write_file(out / "tau.csv", tau_csv(sim));
      return kExitOk;
    }
    const SimReport sim = run_simulation(b);
    const std::vector<Verdict> verdicts = dominance_verdicts(b, sim);
    write_file(out / "bounds.json", dump(to_json(b)));
    write_file(out / "sim.json", dump(to_json(sim, verdicts)));
    write_file(out / "tv_curve.csv", tv_curve_csv(b, &sim));
    if (config.tau_csv) write_file(out / "tau.csv", tau_csv(sim));
    return print_verdicts(verdicts);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}
