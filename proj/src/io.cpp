#include "sepmdp/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

namespace sepmdp::io {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
  return out;
}

class Reader {
 public:
  explicit Reader(const json& root) : root_(root) {}

  std::vector<std::string>& problems() { return problems_; }

  std::optional<long long> count(const char* key) {
    const auto it = root_.find(key);
    if (it == root_.end()) return fail(std::string(key) + ": missing");
    if (!it->is_number_integer() || it->get<long long>() < 1) return fail(std::string(key) + ": expected a positive integer");
    return it->get<long long>();
  }

  std::optional<double> number(const char* key) {
    const auto it = root_.find(key);
    if (it == root_.end()) return fail(std::string(key) + ": missing");
    if (!it->is_number()) return fail(std::string(key) + ": expected a number");
    return it->get<double>();
  }

  std::optional<Vector<double>> vector(const json& node, const std::string& where, Index len) {
    if (!node.is_array() || static_cast<Index>(node.size()) != len)
      return fail(where + ": expected an array of " + std::to_string(len) + " numbers");
    Vector<double> v(len);
    for (Index i = 0; i < len; ++i) {
      const auto& x = node[static_cast<std::size_t>(i)];
      if (!x.is_number()) return fail(where + "[" + std::to_string(i) + "]: expected a number");
      v(i) = x.get<double>();
    }
    return v;
  }

  std::optional<Matrix<double>> matrix(const json& node, const std::string& where, Index rows, Index cols) {
    if (!node.is_array() || static_cast<Index>(node.size()) != rows)
      return fail(where + ": expected " + std::to_string(rows) + " rows");
    Matrix<double> m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      auto row = vector(node[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]", cols);
      if (!row) return std::nullopt;
      m.row(i) = row->transpose();
    }
    return m;
  }

  const json* field(const char* key, bool required) {
    const auto it = root_.find(key);
    if (it == root_.end()) {
      if (required) problems_.push_back(std::string(key) + ": missing");
      return nullptr;
    }
    return &*it;
  }

 private:
  std::nullopt_t fail(std::string msg) {
    problems_.push_back(std::move(msg));
    return std::nullopt;
  }

  const json& root_;
  std::vector<std::string> problems_;
};

json vector_json(const Vector<double>& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json matrix_json(const Matrix<double>& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(vector_json(m.row(i).transpose()));
  return out;
}

json policy_json(const Policy& pi) { return json(pi.actions()); }

json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

ModelError::ModelError(std::vector<std::string> problems)
    : InvalidModel("invalid model: " + join(problems)), problems_(std::move(problems)) {}

SeparableSpec<double> spec_from_json(const json& j) {
  if (!j.is_object()) throw ModelError({"model: expected a JSON object"});
  Reader in(j);
  const auto n = in.count("n_states");
  const auto m = in.count("n_actions");
  const auto eps = in.number("epsilon");
  if (!n || !m) throw ModelError(in.problems());

  SeparableSpec<double> spec;
  spec.kernel_perturb.assign(static_cast<std::size_t>(*m), Matrix<double>::Zero(*n, *n));
  spec.reward_perturb = Matrix<double>::Zero(*n, *m);
  if (eps) spec.epsilon = *eps;

  if (const json* node = in.field("r_state", true))
    if (auto v = in.vector(*node, "r_state", *n)) spec.r_state = std::move(*v);
  if (const json* node = in.field("r_action", true))
    if (auto v = in.vector(*node, "r_action", *m)) spec.r_action = std::move(*v);
  if (const json* node = in.field("kernel_action", true))
    if (auto k = in.matrix(*node, "kernel_action", *m, *n)) spec.kernel_action = std::move(*k);
  if (const json* node = in.field("reward_perturb", false))
    if (auto k = in.matrix(*node, "reward_perturb", *n, *m)) spec.reward_perturb = std::move(*k);
  if (const json* node = in.field("kernel_perturb", false)) {
    if (!node->is_array() || static_cast<long long>(node->size()) != *n) {
      in.problems().push_back("kernel_perturb: expected " + std::to_string(*n) + " state blocks");
    } else {
      for (long long s = 0; s < *n; ++s) {
        const std::string where = "kernel_perturb[" + std::to_string(s) + "]";
        auto block = in.matrix((*node)[static_cast<std::size_t>(s)], where, *m, *n);
        if (!block) break;
        for (long long a = 0; a < *m; ++a) spec.kernel_perturb[static_cast<std::size_t>(a)].row(s) = block->row(a);
      }
    }
  }
  if (!in.problems().empty()) throw ModelError(in.problems());

  const ValidationReport report = validate_spec(spec);
  if (!report.empty()) {
    std::vector<std::string> problems;
    for (const auto& v : report) {
      std::string where;
      if (v.state >= 0) where += "state " + std::to_string(v.state);
      if (v.action >= 0) where += (where.empty() ? "" : ", ") + std::string("action ") + std::to_string(v.action);
      problems.push_back((where.empty() ? "" : where + ": ") + v.message);
    }
    throw ModelError(std::move(problems));
  }
  return spec;
}

json spec_to_json(const SeparableSpec<double>& spec) {
  const Index n = spec.n_states();
  const Index m = spec.n_actions();
  json j;
  j["n_states"] = n;
  j["n_actions"] = m;
  j["r_state"] = vector_json(spec.r_state);
  j["r_action"] = vector_json(spec.r_action);
  j["kernel_action"] = matrix_json(spec.kernel_action);
  j["epsilon"] = spec.epsilon;
  j["reward_perturb"] = matrix_json(spec.reward_perturb);
  json q = json::array();
  for (Index s = 0; s < n; ++s) {
    json block = json::array();
    for (Index a = 0; a < m; ++a)
      block.push_back(vector_json(spec.kernel_perturb[static_cast<std::size_t>(a)].row(s).transpose()));
    q.push_back(std::move(block));
  }
  j["kernel_perturb"] = std::move(q);
  return j;
}

SeparableSpec<double> parse_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ModelError({"parse error at byte " + std::to_string(e.byte) + ": " + e.what()});
  }
  return spec_from_json(j);
}

SeparableSpec<double> load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ModelError({"cannot open model file " + path.string()});
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_model(buf.str());
}

void save_model(const SeparableSpec<double>& spec, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write model file " + path.string());
  f << dump(spec_to_json(spec));
}

std::vector<double> parse_eps_grid(std::string_view text) {
  const auto bad = [&] { return InvalidModel("bad epsilon grid '" + std::string(text) + "', expected log:A:B:K or lin:A:B:K"); };
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.size() != 4 || (parts[0] != "log" && parts[0] != "lin")) throw bad();

  double lo = 0;
  double hi = 0;
  long long k = 0;
  try {
    std::size_t used = 0;
    lo = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw bad();
    hi = std::stod(parts[2], &used);
    if (used != parts[2].size()) throw bad();
    k = std::stoll(parts[3], &used);
    if (used != parts[3].size()) throw bad();
  } catch (const std::logic_error&) {
    throw bad();
  }
  if (k < 1 || !(hi >= lo)) throw bad();
  const bool log = parts[0] == "log";
  if (log && !(lo > 0)) throw InvalidModel("log epsilon grid needs a positive lower end");

  std::vector<double> grid;
  for (long long i = 0; i < k; ++i) {
    if (k == 1) {
      grid.push_back(lo);
      break;
    }
    const double t = static_cast<double>(i) / static_cast<double>(k - 1);
    if (i == 0)
      grid.push_back(lo);
    else if (i == k - 1)
      grid.push_back(hi);
    else if (log)
      grid.push_back(std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))));
    else
      grid.push_back(lo + t * (hi - lo));
  }
  return grid;
}

Policy parse_policy(std::string_view text, Index n_states, Index n_actions) {
  const auto parse_action = [&](const std::string& tok) {
    std::size_t used = 0;
    int a = -1;
    try {
      a = std::stoi(tok, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != tok.size() || a < 0 || a >= n_actions)
      throw InvalidModel("bad action '" + tok + "' in policy, expected an index in [0, " + std::to_string(n_actions) + ")");
    return a;
  };

  if (text.starts_with("const:")) return Policy::constant(n_states, parse_action(std::string(text.substr(6))));

  std::vector<int> actions;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      actions.push_back(parse_action(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  actions.push_back(parse_action(cur));
  if (static_cast<Index>(actions.size()) != n_states)
    throw InvalidModel("policy lists " + std::to_string(actions.size()) + " actions for " + std::to_string(n_states) +
                       " states");
  return Policy(std::move(actions));
}

json to_json(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["tool"] = "sepmdp";
  j["version"] = m.version;
  j["input"] = m.input;
  j["parameters"] = m.parameters;
  j["timestamp"] = m.timestamp;
  return j;
}

std::string current_timestamp() {
  std::time_t t = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env && *env)
    t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
  else
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json baseline_report(const RunManifest& manifest, const SeparableSpec<double>& spec,
                     const BaselineSolution<double>& baseline, double acoe_norm, const Policy& profile,
                     const std::optional<PolicySolution<double>>& brute) {
  json j;
  j["manifest"] = to_json(manifest);
  j["n_states"] = spec.n_states();
  j["n_actions"] = spec.n_actions();
  j["model_epsilon"] = spec.epsilon;
  j["best_action"] = baseline.best_action;
  j["gain"] = baseline.gain;
  j["per_action_gain"] = vector_json(baseline.per_action_gain);
  j["invariant"] = vector_json(baseline.invariant);
  j["bias"] = vector_json(baseline.bias);
  j["acoe_residual_norm"] = acoe_norm;
  j["maximizer_profile"] = policy_json(profile);
  json bf;
  bf["checked"] = brute.has_value();
  if (brute) {
    bf["gain"] = brute->gain;
    bf["policy"] = policy_json(brute->policy);
    bf["policies_evaluated"] = brute->iterations;
    bf["agrees"] = std::abs(brute->gain - baseline.gain) <= 1e-9;
  }
  j["brute_force"] = std::move(bf);
  return j;
}

json sweep_report(const RunManifest& manifest, const SweepReport<double>& report) {
  json j;
  j["manifest"] = to_json(manifest);
  j["baseline_action"] = report.baseline_action;
  j["baseline_gain"] = report.baseline_gain;
  j["epsilon_max"] = finite_or_null(report.epsilon_max);
  j["epsilon0"] = report.epsilon0;
  j["uniform_C"] = report.uniform_c;
  j["uniform_C_sampled"] = report.uniform_c_sampled;
  j["gap_slope"] = optional_json(report.gap_slope);
  j["expansion_slope"] = optional_json(report.expansion_slope);
  j["gap_law_holds"] = report.gap_law_holds();
  json rows = json::array();
  for (const auto& p : report.points) {
    json r;
    r["epsilon"] = p.epsilon;
    r["optimal_gain"] = p.optimal_gain;
    r["fixed_policy_gain"] = p.fixed_policy_gain;
    r["gap"] = p.gap;
    r["uniform_C"] = optional_json(p.uniform_c);
    r["optimal_policy"] = policy_json(p.optimal_policy);
    r["brute_force_checked"] = p.brute_force_checked;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

std::string sweep_csv(const SweepReport<double>& report) {
  std::string out = "epsilon,optimal_gain,fixed_policy_gain,gap\n";
  for (const auto& p : report.points)
    out += format_double(p.epsilon) + ',' + format_double(p.optimal_gain) + ',' + format_double(p.fixed_policy_gain) +
           ',' + format_double(p.gap) + '\n';
  return out;
}

json expansion_report(const RunManifest& manifest, const ExpansionReport<double>& report) {
  json j;
  j["manifest"] = to_json(manifest);
  j["policy"] = policy_json(report.policy);
  j["pi0"] = vector_json(report.pi0);
  j["pi1"] = vector_json(report.pi1);
  j["g0"] = report.g0;
  j["g1"] = report.g1;
  json curve = json::array();
  for (std::size_t i = 0; i < report.residual_curve.size(); ++i) {
    json r;
    r["epsilon"] = report.residual_curve[i].first;
    r["gain_residual"] = report.residual_curve[i].second;
    r["invariant_residual"] = report.invariant_residual_curve[i].second;
    curve.push_back(std::move(r));
  }
  j["residual_curve"] = std::move(curve);
  j["invariant_K"] = report.invariant_k;
  j["residual_slope"] = optional_json(report.residual_slope);
  return j;
}

json simulation_report(const RunManifest& manifest, const Policy& pi, const SimEstimate<double>& est) {
  json j;
  j["manifest"] = to_json(manifest);
  j["policy"] = policy_json(pi);
  j["mean"] = est.mean;
  j["half_width"] = est.half_width;
  j["horizon"] = est.horizon;
  j["batches"] = est.batches;
  j["seed"] = est.seed;
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace sepmdp::io
