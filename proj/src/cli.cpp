#include "sepmdp/cli.hpp"

#include "sepmdp/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <thread>

namespace sepmdp::cli {

namespace {

struct Options {
  std::string model;
  std::uint64_t seed = 0;
  long long states = 0;
  long long actions = 0;
  double perturb_scale = 1.0;
  std::string eps_grid;
  std::string policy;
  std::uint64_t horizon = 1'000'000;
  std::uint64_t batches = kDefaultBatches;
  std::string out;
  std::string format = "json";
};

struct Loaded {
  SeparableSpec<double> spec;
  io::json input;
};

Loaded load(const Options& o) {
  if (!o.model.empty()) return {io::load_model(o.model), io::json{{"model", o.model}}};
  if (o.states < 1 || o.actions < 1)
    throw io::ModelError({"either --model or sampler mode (--states and --actions, both positive) is required"});
  io::json sampler{{"seed", o.seed}, {"states", o.states}, {"actions", o.actions}, {"perturb_scale", o.perturb_scale}};
  return {sample_instance<double>(o.seed, o.states, o.actions, o.perturb_scale), io::json{{"sampler", sampler}}};
}

unsigned thread_budget() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SEPMDP_THREADS"); env && *env) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw Error("cannot write " + o.out);
  f << text;
}

void require_json(const Options& o) {
  if (o.format != "json") throw io::ModelError({"--format " + o.format + " is only available for sweep"});
}

int cmd_solve(const Options& o, std::ostream& out) {
  require_json(o);
  const Loaded in = load(o);
  const SeparableSpec<double> base = in.spec.with_epsilon(0.0);
  const BaselineSolution<double> baseline = solve_baseline(base);
  const Mdp<double> m0 = assemble(base);
  const double acoe = max_norm(acoe_residual(m0, baseline.gain, baseline.bias));
  const Policy profile = maximizer_profile(m0, baseline.bias);

  std::optional<PolicySolution<double>> brute;
  if (policy_count(m0.n_states(), m0.n_actions(), kDefaultEnumerationCap)) brute = brute_force(m0);

  io::RunManifest manifest{"solve", in.input, io::json{{"enumeration_cap", kDefaultEnumerationCap}},
                           io::current_timestamp()};
  emit(o, io::dump(io::baseline_report(manifest, in.spec, baseline, acoe, profile, brute)), out);
  if (brute && std::abs(brute->gain - baseline.gain) > 1e-9) return kInternal;
  return kOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  if (o.format != "json" && o.format != "csv") throw io::ModelError({"--format must be json or csv"});
  const Loaded in = load(o);
  const std::string grid_text = o.eps_grid.empty() ? "log:1e-4:1e-1:7" : o.eps_grid;
  const std::vector<double> grid = io::parse_eps_grid(grid_text);

  SweepOptions opts;
  opts.threads = thread_budget();
  const SweepReport<double> report = sweep(in.spec, grid, opts);

  if (o.format == "csv") {
    emit(o, io::sweep_csv(report), out);
  } else {
    io::RunManifest manifest{"sweep", in.input,
                             io::json{{"eps_grid", grid_text},
                                      {"enumeration_cap", opts.enumeration_cap},
                                      {"policy_sample", opts.policy_sample},
                                      {"sample_seed", opts.sample_seed}},
                             io::current_timestamp()};
    emit(o, io::dump(io::sweep_report(manifest, report)), out);
  }
  return kOk;
}

Policy resolve_policy(const Options& o, const SeparableSpec<double>& spec) {
  if (!o.policy.empty()) return io::parse_policy(o.policy, spec.n_states(), spec.n_actions());
  return solve_baseline(spec.with_epsilon(0.0)).policy;
}

std::string policy_text(const Policy& pi) {
  std::string s;
  for (int a : pi.actions()) s += (s.empty() ? "" : ",") + std::to_string(a);
  return s;
}

int cmd_expand(const Options& o, std::ostream& out) {
  require_json(o);
  const Loaded in = load(o);
  const std::string grid_text = o.eps_grid.empty() ? "log:1e-4:1e-2:5" : o.eps_grid;
  const std::vector<double> grid = io::parse_eps_grid(grid_text);
  detail::require_feasible<double>(in.spec, grid);
  const Policy pi = resolve_policy(o, in.spec);
  const ExpansionReport<double> report = first_order_expansion(in.spec, pi, grid);

  io::RunManifest manifest{"expand", in.input, io::json{{"eps_grid", grid_text}, {"policy", policy_text(pi)}},
                           io::current_timestamp()};
  emit(o, io::dump(io::expansion_report(manifest, report)), out);
  return kOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  require_json(o);
  const Loaded in = load(o);
  const Policy pi = resolve_policy(o, in.spec);
  const Mdp<double> m = assemble(in.spec);
  const SimEstimate<double> est = simulate_gain(m, pi, o.horizon, o.batches, o.seed);

  io::RunManifest manifest{"simulate", in.input,
                           io::json{{"policy", policy_text(pi)},
                                    {"horizon", o.horizon},
                                    {"batches", o.batches},
                                    {"seed", o.seed},
                                    {"epsilon", in.spec.epsilon}},
                           io::current_timestamp()};
  emit(o, io::dump(io::simulation_report(manifest, pi, est)), out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact analysis of nearly separable average-reward MDPs", "sepmdp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(io::kVersion));

  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--model", o.model, "Model JSON file");
    sub->add_option("--seed", o.seed, "Sampler seed (and simulation seed)");
    sub->add_option("--states", o.states, "Sampler: number of states");
    sub->add_option("--actions", o.actions, "Sampler: number of actions");
    sub->add_option("--perturb-scale", o.perturb_scale, "Sampler: scale of the transition perturbation");
    sub->add_option("--out", o.out, "Write the report to FILE instead of stdout");
    sub->add_option("--format", o.format, "json or csv (sweep only)");
  };

  CLI::App* solve = app.add_subcommand("solve", "Closed-form baseline policy with brute-force cross-check");
  add_common(solve);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Optimality gap of the baseline policy over an epsilon grid");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--eps-grid", o.eps_grid, "log:A:B:K or lin:A:B:K (default log:1e-4:1e-1:7)");
  CLI::App* expand = app.add_subcommand("expand", "First-order expansion of a policy's gain");
  add_common(expand);
  expand->add_option("--policy", o.policy, "const:a or a comma-separated action list (default: baseline)");
  expand->add_option("--eps-grid", o.eps_grid, "log:A:B:K or lin:A:B:K (default log:1e-4:1e-2:5)");
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo estimate of a policy's average reward");
  add_common(simulate);
  simulate->add_option("--policy", o.policy, "const:a or a comma-separated action list (default: baseline)");
  simulate->add_option("--horizon", o.horizon, "Recorded steps (default 1000000)");
  simulate->add_option("--batches", o.batches, "Batch count for the confidence interval (default 20)");

  std::vector<std::string> argv_store{"sepmdp"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kValidation;
  }

  try {
    if (solve->parsed()) return cmd_solve(o, out);
    if (sweep_cmd->parsed()) return cmd_sweep(o, out);
    if (expand->parsed()) return cmd_expand(o, out);
    if (simulate->parsed()) return cmd_simulate(o, out);
  } catch (const io::ModelError& e) {
    for (const auto& p : e.problems()) err << "error: " << p << '\n';
    return kValidation;
  } catch (const NotIrreducible& e) {
    err << "error: " << e.what() << '\n';
    return kNotIrreducible;
  } catch (const EpsilonInfeasible& e) {
    err << "error: " << e.what() << '\n';
    return kInfeasibleEpsilon;
  } catch (const AssemblyInfeasible& e) {
    err << "error: " << e.what() << '\n';
    return kInfeasibleEpsilon;
  } catch (const InvalidModel& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const CrossCheckFailure& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  } catch (const NonConvergence& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace sepmdp::cli
