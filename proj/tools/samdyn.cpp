// samdyn: command-line driver for SAM dynamics experiments.
//
//   samdyn constants --lambdas 1,0.5 --eta 0.2 --rho 0.1
//   samdyn cycle --lambdas ... --eta ... --rho ... --seed N --trials K --epsilon E --steps S --out DIR
//   samdyn bounds --lambdas ... --eta ... --rho ... --R ... --q ... --A ... --delta ... --epsilon ...
//   samdyn drift --loss {quadratic|cubic|quartic} --c ... --q4 ... --lambdas ... --eta ... --rho ...
//   samdyn potential-check --lambdas ... --eta ... --rho ... --samples N --seed N
//
// Any subcommand also takes --config FILE with `key = value` lines; keys are
// option names without the leading dashes, and command-line flags win.
//
// Exit status: 0 success, 1 invariant failure, 2 configuration or I/O error.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "samdyn/samdyn.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_invariant = 1;
constexpr int exit_config = 2;

struct CommonArgs {
  std::string lambdas;
  double eta = samdyn::SamConfig{}.eta;
  double rho = samdyn::SamConfig{}.rho;
  std::string config;
  std::string out;

  samdyn::SamConfig sam() const {
    samdyn::SamConfig cfg{eta, rho};
    try {
      cfg.validate();
    } catch (const samdyn::Error& e) {
      throw samdyn::ConfigError(eta > 0.0 ? "rho" : "eta", e.what());
    }
    return cfg;
  }
  std::vector<double> lambda_list() const { return samdyn::parse_double_list("lambdas", lambdas); }
};

void add_common(CLI::App* sub, CommonArgs& a, bool want_out) {
  sub->add_option("--lambdas", a.lambdas, "Hessian eigenvalues, comma-separated, non-increasing")->required();
  sub->add_option("--eta", a.eta, "step size")->capture_default_str();
  sub->add_option("--rho", a.rho, "ascent radius")->capture_default_str();
  sub->add_option("--config", a.config, "key = value file; flags override it");
  if (want_out) sub->add_option("--out", a.out, "output directory");
}

samdyn::Spectrum positive_spectrum(const std::vector<double>& lambdas) {
  try {
    return samdyn::Spectrum::positive(lambdas);
  } catch (const samdyn::Error& e) {
    throw samdyn::ConfigError("lambdas", e.what());
  }
}

void write_file(const std::string& dir, const std::string& name, const std::string& text) {
  const std::filesystem::path path = std::filesystem::path(dir) / name;
  auto out = samdyn::open_output(path);
  out << text;
  samdyn::finish_output(out, path);
}

/// Finds --config in argv, reads it, and returns argv with `--key=value`
/// tokens inserted right after the subcommand name so later flags override.
std::vector<std::string> inject_config(const std::vector<std::string>& args, CLI::App& app) {
  std::size_t sub_pos = 0;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (!args[i].empty() && args[i][0] != '-') {
      sub_pos = i;
      break;
    }
  }
  std::optional<std::string> file;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) file = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) file = args[i].substr(9);
  }
  if (!file || sub_pos == 0) return args;

  std::ifstream in(*file);
  if (!in) throw samdyn::ConfigError("config", "cannot read " + *file);
  const auto cfg = samdyn::KeyValueConfig::parse(in);
  CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args[sub_pos]);
  } catch (const CLI::OptionNotFound&) {
    return args;  // let the parser report the unknown subcommand
  }
  std::vector<std::string> injected;
  for (const auto& [key, value] : cfg.entries()) {
    if (key == "config") continue;
    if (sub->get_option_no_throw("--" + key) == nullptr) {
      throw samdyn::ConfigError(key, "unknown key for '" + args[sub_pos] + "'");
    }
    injected.push_back("--" + key + "=" + value);
  }
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, args.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAM dynamics on quadratic and valley losses"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  // constants
  CommonArgs ca;
  samdyn::BoundInputs cin;
  auto* constants_cmd = app.add_subcommand("constants", "fixed-point constants and the iteration bound terms");
  add_common(constants_cmd, ca, true);
  constants_cmd->add_option("--R", cin.R)->capture_default_str();
  constants_cmd->add_option("--q", cin.q)->capture_default_str();
  constants_cmd->add_option("--A", cin.A)->capture_default_str();
  constants_cmd->add_option("--delta", cin.delta)->capture_default_str();
  constants_cmd->add_option("--epsilon", cin.epsilon)->capture_default_str();

  // cycle
  CommonArgs cy;
  samdyn::CycleSettings cs;
  std::string init_kind = "gaussian";
  bool save_traj = false;
  std::uint64_t thin_every = cs.run.thin_every;
  auto* cycle_cmd = app.add_subcommand("cycle", "multi-trial two-cycle convergence sweep");
  add_common(cycle_cmd, cy, false);
  cycle_cmd->add_option("--out", cy.out, "output directory")->required();
  cycle_cmd->add_option("--seed", cs.init.seed)->capture_default_str();
  cycle_cmd->add_option("--trials", cs.init.trials)->capture_default_str();
  cycle_cmd->add_option("--epsilon", cs.epsilon, "cycle tolerance")->capture_default_str();
  cycle_cmd->add_option("--steps", cs.steps)->capture_default_str();
  cycle_cmd->add_option("--window", cs.window, "verification window")->capture_default_str();
  cycle_cmd->add_option("--delta", cs.delta, "failure probability")->capture_default_str();
  cycle_cmd->add_option("--init", init_kind, "gaussian or ball")->capture_default_str();
  cycle_cmd->add_option("--sigma", cs.init.sigma)->capture_default_str();
  cycle_cmd->add_option("--ball-radius", cs.init.ball_radius)->capture_default_str();
  cycle_cmd->add_option("--R", cs.init.R, "radius of the bounded-initialization event")->capture_default_str();
  cycle_cmd->add_option("--q", cs.init.q, "floor for the squared first coordinate")->capture_default_str();
  cycle_cmd->add_option("--workers", cs.workers)->capture_default_str();
  cycle_cmd->add_option("--thin-every", thin_every)->capture_default_str();
  cycle_cmd->add_flag("--save-trajectories", save_traj, "write traj_NNNN.csv per trial");

  // bounds
  CommonArgs bo;
  samdyn::BoundInputs bin;
  auto* bounds_cmd = app.add_subcommand("bounds", "early-descent, breakaway, Delta and iteration bounds");
  add_common(bounds_cmd, bo, true);
  bounds_cmd->add_option("--R", bin.R)->capture_default_str();
  bounds_cmd->add_option("--q", bin.q)->capture_default_str();
  bounds_cmd->add_option("--A", bin.A)->capture_default_str();
  bounds_cmd->add_option("--delta", bin.delta)->capture_default_str();
  bounds_cmd->add_option("--epsilon", bin.epsilon)->capture_default_str();

  // drift
  CommonArgs dr;
  std::string loss_name = "cubic";
  double c = 0.3;
  double q4 = 0.0;
  int phase = 1;
  std::string center;
  auto* drift_cmd = app.add_subcommand("drift", "one SAM step from the oscillation point of a minimum");
  add_common(drift_cmd, dr, true);
  drift_cmd->add_option("--loss", loss_name, "quadratic, cubic or quartic")->capture_default_str();
  drift_cmd->add_option("--c", c)->capture_default_str();
  drift_cmd->add_option("--q4", q4)->capture_default_str();
  drift_cmd->add_option("--s", phase, "phase, +1 or -1")->capture_default_str();
  drift_cmd->add_option("--center", center, "minimizer, comma-separated (default origin)");

  // potential-check
  CommonArgs pc;
  std::uint64_t samples = 200;
  std::uint64_t pc_seed = 0;
  auto* potential_cmd = app.add_subcommand("potential-check", "cross-validate the potential J");
  add_common(potential_cmd, pc, true);
  potential_cmd->add_option("--samples", samples)->capture_default_str();
  potential_cmd->add_option("--seed", pc_seed)->capture_default_str();

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = inject_config(args, app);
  } catch (const samdyn::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return exit_config;
  }
  std::vector<char*> cargs;
  for (auto& s : args) cargs.push_back(s.data());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_config;
  }

  try {
    if (*constants_cmd) {
      const auto spectrum = positive_spectrum(ca.lambda_list());
      const auto tc = samdyn::constants(spectrum, ca.sam());
      std::optional<samdyn::Theorem3Bound> bound;
      std::string note;
      try {
        bound = samdyn::theorem3_bound(tc, cin);
      } catch (const samdyn::Error& e) {
        note = e.what();
      }
      std::ostringstream os;
      samdyn::write_constants_csv(os, tc, bound, note);
      std::cout << os.str();
      if (!ca.out.empty()) write_file(ca.out, "constants.csv", os.str());
      if (tc.degenerate_gap) std::cerr << "warning: lambda1 == lambda2, mu uses eta*lambda_d only\n";
      return samdyn::ordering_chain_holds(tc) ? exit_ok : exit_invariant;
    }

    if (*cycle_cmd) {
      cs.lambdas = cy.lambda_list();
      if (!positive_spectrum(cs.lambdas).has_gap()) {
        throw samdyn::ConfigError("lambdas", "the two-cycle sweep requires lambda1 > lambda2");
      }
      cs.cfg = cy.sam();
      if (init_kind == "gaussian") {
        cs.init.distribution = samdyn::InitDistribution::gaussian;
      } else if (init_kind == "ball") {
        cs.init.distribution = samdyn::InitDistribution::ball_uniform;
      } else {
        throw samdyn::ConfigError("init", "expected gaussian or ball");
      }
      if (!(cs.epsilon > 0.0)) throw samdyn::ConfigError("epsilon", "must be positive");
      if (cs.window < 2) throw samdyn::ConfigError("window", "must be at least 2");
      if (cs.steps < 1) throw samdyn::ConfigError("steps", "must be at least 1");
      if (thin_every < 1) throw samdyn::ConfigError("thin-every", "must be at least 1");
      if (!(cs.delta > 0.0)) throw samdyn::ConfigError("delta", "must be positive");
      cs.run.thin_every = thin_every;
      const auto result = samdyn::run_cycle_experiment(cs, save_traj);

      std::ostringstream trials, summary;
      samdyn::write_trials_csv(trials, result);
      samdyn::write_cycle_summary(summary, result);
      write_file(cy.out, "trials.csv", trials.str());
      write_file(cy.out, "summary.txt", summary.str());
      for (std::size_t k = 0; k < result.trajectories.size(); ++k) {
        std::ostringstream os;
        samdyn::write_csv(os, result.trajectories[k]);
        char name[32];
        std::snprintf(name, sizeof name, "traj_%04zu.csv", k);
        write_file(cy.out, name, os.str());
      }
      std::cout << summary.str();
      return result.ok() ? exit_ok : exit_invariant;
    }

    if (*bounds_cmd) {
      const auto spectrum = positive_spectrum(bo.lambda_list());
      const auto rep = samdyn::compute_bounds(spectrum, bo.sam(), bin);
      std::ostringstream os;
      samdyn::write_bounds_csv(os, rep);
      std::cout << os.str();
      if (!bo.out.empty()) write_file(bo.out, "bounds.csv", os.str());
      return exit_ok;
    }

    if (*drift_cmd) {
      samdyn::LossSpec spec;
      spec.family = samdyn::parse_loss_family("loss", loss_name);
      spec.lambdas = dr.lambda_list();
      spec.c = c;
      spec.q4 = q4;
      if (!center.empty()) spec.center = samdyn::parse_double_list("center", center);
      const auto loss = samdyn::make_loss(spec);
      if (phase != 1 && phase != -1) throw samdyn::ConfigError("s", "must be +1 or -1");
      const auto rep = samdyn::measure_drift(loss, loss.center(), dr.sam(), phase);
      std::ostringstream os;
      samdyn::write_drift_csv(os, rep, loss.family());
      std::cout << os.str();
      if (!dr.out.empty()) write_file(dr.out, "drift.csv", os.str());
      return rep.within_budget ? exit_ok : exit_invariant;
    }

    if (*potential_cmd) {
      const auto spectrum = positive_spectrum(pc.lambda_list());
      const auto rep = samdyn::potential_check(spectrum, pc.sam(), samples, pc_seed);
      std::ostringstream os;
      samdyn::write_potential_check_csv(os, rep);
      std::cout << os.str();
      if (!pc.out.empty()) write_file(pc.out, "potential_check.csv", os.str());
      return rep.ok() ? exit_ok : exit_invariant;
    }
  } catch (const samdyn::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return exit_config;
  } catch (const samdyn::Error& e) {
    std::cerr << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_invariant;
  }
  return exit_ok;
}
