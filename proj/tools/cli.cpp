#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "rattleback/ec_map.hpp"
#include "rattleback/format.hpp"
#include "rattleback/heteroclinic.hpp"
#include "rattleback/integrate.hpp"
#include "rattleback/lax.hpp"
#include "rattleback/manifest.hpp"
#include "rattleback/plot.hpp"

namespace rattleback::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

/// A rejected value, reported as "error: <flag>: <reason>".
struct UsageError : std::runtime_error {
  UsageError(const std::string& flag, const std::string& why) : std::runtime_error(flag + ": " + why) {}
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& text, const std::string& flag) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw UsageError(flag, "expected a finite number, got '" + text + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_number(part, flag));
  if (out.empty()) throw UsageError(flag, "expected a comma-separated list of numbers");
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text, const std::string& flag) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split(text, ',')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError(flag, "seeds are non-negative integers, got '" + part + "'");
    }
    out.push_back(std::stoull(part));
  }
  if (out.empty()) throw UsageError(flag, "expected at least one seed");
  return out;
}

Vec3 parse_vec3(const std::string& text, const std::string& flag) {
  const auto v = parse_list(text, flag);
  if (v.size() != 3) throw UsageError(flag, "expected x,y,z, got '" + text + "'");
  return Vec3(v[0], v[1], v[2]);
}

void require_finite(double v, const std::string& flag) {
  if (!std::isfinite(v)) throw UsageError(flag, "must be finite");
}

ModelParams real_params(double lambda) {
  if (!std::isfinite(lambda) || lambda <= 0.0) throw UsageError("--lambda", "must be a finite positive number");
  return ModelParams(lambda);
}

ModelParams integer_params(double lambda) {
  const ModelParams p = real_params(lambda);
  if (!p.lambda_is_integer()) {
    throw UsageError("--lambda", "this command needs an integer lambda >= 2, got " + fmt6(lambda));
  }
  return p;
}

Projection projection_flag(const std::string& text) {
  try {
    return parse_projection(text);
  } catch (const Error&) {
    throw UsageError("--projection", "expected xy, xz or yz, got '" + text + "'");
  }
}

json vec_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// Every option of the subcommand with the value it ended up with.
std::map<std::string, std::string> parameters_of(const CLI::App& sub) {
  std::map<std::string, std::string> out;
  for (const CLI::Option* opt : sub.get_options()) {
    std::string name = opt->get_name();
    if (name == "--help" || name == "--config") continue;
    name.erase(0, name.find_first_not_of('-'));
    std::string value;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      value = res.empty() ? "" : res.back();
    } else {
      value = opt->get_default_str();
    }
    out[name] = value;
  }
  return out;
}

/// Plain key=value lines become flags placed ahead of the real ones; with the
/// take-last policy anything typed on the command line wins.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;
  std::ifstream in(path);
  if (!in) throw UsageError("--config", "cannot read '" + path + "'");
  std::vector<std::string> injected;
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_config(in)) {
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == "default")) {
      throw UsageError("--config", "sections are not supported ('" + item.fullname() + "')");
    }
    injected.push_back("--" + item.name);
    std::string joined;
    for (std::size_t k = 0; k < item.inputs.size(); ++k) joined += (k ? "," : "") + item.inputs[k];
    injected.push_back(joined);
  }
  std::vector<std::string> out(args.begin(), args.begin() + 2);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

// ---------------------------------------------------------------- commands

struct Outputs {
  std::ostream& out;
  std::ostream& err;
};

int finish(RunDirectory& run, Outputs& io) {
  run.finish();
  io.err << "run directory: " << run.path().string() << "\n";
  return kOk;
}

struct SimulateArgs {
  double lambda = 0;
  std::string from;
  double t_end = 10;
  double dt = 1e-3;
  std::string method = "rk4";
  double tol = 1e-10;
  int record_every = 10;
  std::string projection = "xy";
};

int simulate(const SimulateArgs& a, const CLI::App& sub, Outputs& io) {
  const ModelParams p = real_params(a.lambda);
  const Vec3 s0 = parse_vec3(a.from, "--from");
  const Projection proj = projection_flag(a.projection);
  IntegratorConfig cfg;
  cfg.method = a.method == "rk45" ? Method::RK45Adaptive : Method::RK4Fixed;
  cfg.step = a.dt;
  cfg.tol_abs = cfg.tol_rel = a.tol;
  cfg.t_end = a.t_end;
  cfg.record_every = a.record_every;
  cfg.validate();
  const Trajectory traj = integrate(s0, rattleback_field(p), cfg, p);

  RunDirectory run("simulate", parameters_of(sub));
  std::ostringstream csv;
  write_trajectory_csv(csv, traj, p);
  run.write("trajectory.csv", csv.str());
  run.write("trajectory.svg", emit_svg({proj, {{"trajectory", traj.states, false}}, {}}));
  json summary = {{"lambda", a.lambda},
                  {"samples", traj.states.size()},
                  {"final_state", vec_json(traj.states.back())},
                  {"drift_C", traj.drift_C},
                  {"drift_H", traj.drift_H ? json(*traj.drift_H) : json(nullptr)}};
  run.write("summary.json", dump(summary));
  io.out << "samples: " << traj.states.size() << "\n"
         << "drift_C: " << fmt6(traj.drift_C) << "\n";
  if (traj.drift_H) io.out << "drift_H: " << fmt6(*traj.drift_H) << "\n";
  return finish(run, io);
}

struct EquilibriaArgs {
  double lambda = 0;
  std::string M = "1";
};

int equilibria_cmd(const EquilibriaArgs& a, const CLI::App& sub, Outputs& io) {
  const ModelParams p = integer_params(a.lambda);
  const auto Ms = parse_list(a.M, "--M");
  std::ostringstream csv;
  csv << "kind,M,x,y,z,verdict,eig1_re,eig1_im,eig2_re,eig2_im,eig3_re,eig3_im,arnold_mu\n";
  for (const Equilibrium& e : equilibria(Ms, p)) {
    const StabilityReport r = classify_equilibrium(e, p);
    csv << to_string(e.kind) << ',' << fmt17(e.M) << ',' << fmt17(e.point(0)) << ','
        << fmt17(e.point(1)) << ',' << fmt17(e.point(2)) << ',' << to_string(r.verdict);
    for (const auto& ev : r.spectrum) csv << ',' << fmt17(ev.real()) << ',' << fmt17(ev.imag());
    csv << ',' << (r.arnold ? fmt17(r.arnold->mu) : std::string("nan")) << '\n';
    io.out << to_string(e.kind) << " M=" << fmt6(e.M) << " (" << fmt6(e.point(0)) << ", "
           << fmt6(e.point(1)) << ", " << fmt6(e.point(2)) << ") " << to_string(r.verdict) << "\n";
  }
  RunDirectory run("equilibria", parameters_of(sub));
  run.write("equilibria.csv", csv.str());
  return finish(run, io);
}

struct ClassifyArgs {
  double lambda = 0;
  double h = 0;
  double c = 0;
};

int classify_cmd(const ClassifyArgs& a, const CLI::App& sub, Outputs& io) {
  const ModelParams p = integer_params(a.lambda);
  require_finite(a.h, "--h");
  require_finite(a.c, "--c");
  const Stratum st = classify_value({a.h, a.c}, p);
  const json record = {{"h", a.h},
                       {"c", a.c},
                       {"lambda", p.integer_lambda()},
                       {"stratum", std::string(to_string(st))},
                       {"fiber_topology", std::string(to_string(fiber_topology(st)))}};
  RunDirectory run("classify", parameters_of(sub));
  run.write("classify.json", dump(record));
  io.out << record.dump() << "\n";
  return finish(run, io);
}

struct FiberArgs {
  double lambda = 0;
  double h = 0;
  double c = 0;
  double step = 1e-3;
  std::string projection = "xy";
};

int fiber_cmd(const FiberArgs& a, const CLI::App& sub, Outputs& io) {
  const ModelParams p = integer_params(a.lambda);
  require_finite(a.h, "--h");
  require_finite(a.c, "--c");
  if (!(a.step > 0) || !std::isfinite(a.step)) throw UsageError("--step", "must be positive");
  const Projection proj = projection_flag(a.projection);
  const FiberTrace trace = trace_fiber({a.h, a.c}, p, a.step);

  PlotSpec plot{proj, {}, {}};
  json vertices = json::array();
  for (std::size_t i = 0; i < trace.components.size(); ++i) {
    plot.series.push_back({"component " + std::to_string(i), trace.components[i], true});
    vertices.push_back(trace.components[i].size());
  }
  RunDirectory run("fiber", parameters_of(sub));
  std::ostringstream csv;
  write_fiber_csv(csv, trace);
  run.write("fiber.csv", csv.str());
  run.write("fiber.svg", emit_svg(plot));
  const json summary = {{"components", trace.components.size()},
                        {"vertices", vertices},
                        {"residual_H", trace.residual_H},
                        {"residual_C", trace.residual_C},
                        {"stratum", std::string(to_string(classify_value({a.h, a.c}, p)))}};
  run.write("summary.json", dump(summary));
  io.out << "components: " << trace.components.size() << "\n"
         << "residual_H: " << fmt6(trace.residual_H) << "\n"
         << "residual_C: " << fmt6(trace.residual_C) << "\n";
  return finish(run, io);
}

struct HeteroclinicArgs {
  double lambda = 0;
  double M = 1;
  double k = 0;
  double t_min = -10;
  double t_max = 10;
  int samples = 401;
  std::string projection = "yz";
};

int heteroclinic_cmd(const HeteroclinicArgs& a, const CLI::App& sub, Outputs& io) {
  const ModelParams p = integer_params(a.lambda);
  require_finite(a.M, "--M");
  require_finite(a.k, "--k");
  if (a.M == 0) throw UsageError("--M", "must be nonzero");
  if (!(a.t_max > a.t_min)) throw UsageError("--t-max", "must exceed --t-min");
  if (a.samples < 2) throw UsageError("--samples", "need at least 2");
  const Projection proj = projection_flag(a.projection);
  const HetParams hp{a.M, a.k};
  std::vector<double> ts;
  for (int i = 0; i < a.samples; ++i) ts.push_back(a.t_min + (a.t_max - a.t_min) * i / (a.samples - 1));

  RunDirectory run("heteroclinic", parameters_of(sub));
  PlotSpec plot{proj, {}, {}};
  json branches = json::array();
  for (HetBranch b : kAllBranches) {
    std::ostringstream csv;
    write_heteroclinic_csv(csv, b, hp, p, ts);
    run.write("heteroclinic_" + std::string(to_string(b)) + ".csv", csv.str());
    Series s{std::string(to_string(b)), {}, false};
    for (double t : ts) s.points.push_back(het_state(b, hp, p, t));
    plot.series.push_back(std::move(s));
    const FiberDeviation dev = het_fiber_check(b, hp, p, ts);
    const double res = het_residual(b, hp, p, ts);
    const double gap = het_limits(b, hp, p).gap;
    branches.push_back({{"branch", std::string(to_string(b))},
                        {"residual", res},
                        {"limit_gap", gap},
                        {"max_dev_H", dev.H},
                        {"max_dev_C", dev.C}});
    io.out << to_string(b) << ": residual " << fmt6(res) << ", limit gap " << fmt6(gap) << "\n";
  }
  run.write("heteroclinic.svg", emit_svg(plot));
  run.write("summary.json", dump(json{{"branches", branches}}));
  return finish(run, io);
}

struct LaxArgs {
  double lambda = 0;
  std::string trajectory;
};

std::vector<Vec3> read_states_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--trajectory", "cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw UsageError("--trajectory", "empty file");
  const auto header = split(line, ',');
  std::array<std::size_t, 3> col{};
  for (int k = 0; k < 3; ++k) {
    const std::string name(1, "xyz"[k]);
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw UsageError("--trajectory", "no '" + name + "' column in header");
    col[k] = static_cast<std::size_t>(it - header.begin());
  }
  std::vector<Vec3> states;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    Vec3 s;
    for (int k = 0; k < 3; ++k) {
      if (col[k] >= cells.size()) {
        throw UsageError("--trajectory", "row " + std::to_string(row) + " is too short");
      }
      s(k) = parse_number(cells[col[k]], "--trajectory");
    }
    states.push_back(s);
  }
  if (states.empty()) throw UsageError("--trajectory", "no data rows");
  return states;
}

int lax_cmd(const LaxArgs& a, const CLI::App& sub, Outputs& io) {
  const ModelParams p = real_params(a.lambda);
  const auto states = read_states_csv(a.trajectory);
  const LaxCheck check = lax_check(states, p);
  auto params = parameters_of(sub);
  params["trajectory_sha256"] = sha256_file(a.trajectory);
  RunDirectory run("lax-check", params);
  const json summary = {{"samples", check.samples},
                        {"max_residual", check.max_residual},
                        {"max_scaled_residual", check.max_scaled_residual},
                        {"trace_drift", check.trace_drift},
                        {"eig_drift", check.eig_drift}};
  run.write("lax.json", dump(summary));
  io.out << "samples: " << check.samples << "\n"
         << "max_residual: " << fmt6(check.max_residual) << "\n"
         << "max_scaled_residual: " << fmt6(check.max_scaled_residual) << "\n"
         << "trace_drift: " << fmt6(check.trace_drift) << "\n"
         << "eig_drift: " << fmt6(check.eig_drift) << "\n";
  return finish(run, io);
}

const std::map<std::string, PerturbationKind> kKinds = {
    {"equilibria-plus", PerturbationKind::EquilibriaPlus},
    {"equilibria-minus", PerturbationKind::EquilibriaMinus},
    {"periodic-orbit", PerturbationKind::PeriodicOrbit},
    {"heteroclinic", PerturbationKind::Heteroclinic}};

struct PerturbationArgs {
  std::string kind;
  double lambda = 0;
  double M = std::numeric_limits<double>::quiet_NaN();
  double h = std::numeric_limits<double>::quiet_NaN();
  double c = std::numeric_limits<double>::quiet_NaN();
  double t_end = 200;
  double tol = 1e-10;
};

void add_perturbation_options(CLI::App* sub, PerturbationArgs& a) {
  std::vector<std::string> names;
  for (const auto& [name, kind] : kKinds) names.push_back(name);
  sub->add_option("--kind", a.kind, "Perturbation")->required()->check(CLI::IsMember(names));
  sub->add_option("--lambda", a.lambda, "Integer lambda >= 2")->required();
  sub->add_option("--M", a.M, "Equilibrium or heteroclinic level (equilibria-*, heteroclinic)");
  sub->add_option("--h", a.h, "Target energy (periodic-orbit)");
  sub->add_option("--c", a.c, "Casimir level (periodic-orbit)");
  sub->add_option("--t-end", a.t_end, "Integration horizon");
  sub->add_option("--tol", a.tol, "RK45 tolerance");
}

/// Builds the spec, with epsilon defaulting per kind (0.5, 0.1 or 1.0).
PerturbationSpec make_spec(const PerturbationArgs& a, double epsilon) {
  PerturbationSpec spec;
  spec.kind = kKinds.at(a.kind);
  if (spec.kind == PerturbationKind::PeriodicOrbit) {
    if (std::isnan(a.h)) throw UsageError("--h", "required for kind periodic-orbit");
    if (std::isnan(a.c)) throw UsageError("--c", "required for kind periodic-orbit");
    require_finite(a.h, "--h");
    if (!(a.c > 0) || !std::isfinite(a.c)) throw UsageError("--c", "must be positive");
    spec.h = a.h;
    spec.c = a.c;
  } else {
    if (std::isnan(a.M)) throw UsageError("--M", "required for kind " + a.kind);
    if (a.M == 0 || !std::isfinite(a.M)) throw UsageError("--M", "must be finite and nonzero");
    spec.M = a.M;
  }
  if (std::isnan(epsilon)) {
    switch (spec.kind) {
      case PerturbationKind::PeriodicOrbit: epsilon = 0.1; break;
      case PerturbationKind::Heteroclinic: epsilon = 1.0; break;
      default: epsilon = 0.5;
    }
  }
  if (!(epsilon > 0) || !std::isfinite(epsilon)) throw UsageError("--epsilon", "must be positive");
  spec.epsilon = epsilon;
  if (!(a.t_end > 0) || !std::isfinite(a.t_end)) throw UsageError("--t-end", "must be positive");
  if (!(a.tol > 0)) throw UsageError("--tol", "must be positive");
  return spec;
}

IntegratorConfig run_config(const PerturbationArgs& a, int record_every) {
  IntegratorConfig cfg;
  cfg.method = Method::RK45Adaptive;
  cfg.tol_abs = cfg.tol_rel = a.tol;
  cfg.t_end = a.t_end;
  cfg.record_every = record_every;
  return cfg;
}

struct StabilizeArgs {
  PerturbationArgs base;
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  std::string from;
  int record_every = 1;
};

int stabilize_cmd(const StabilizeArgs& a, const CLI::App& sub, Outputs& io) {
  const ModelParams p = integer_params(a.base.lambda);
  const PerturbationSpec spec = make_spec(a.base, a.epsilon);
  if (a.record_every < 1) throw UsageError("--record-every", "must be at least 1");
  const Vec3 s0 = a.from.empty() ? seeded_start(spec, p, a.seed) : parse_vec3(a.from, "--from");
  const ConvergenceRecord rec = run_convergence(spec, s0, run_config(a.base, a.record_every), p);

  auto params = parameters_of(sub);
  params["epsilon"] = fmt17(spec.epsilon);
  RunDirectory run("stabilize", params);
  std::ostringstream csv;
  write_convergence_csv(csv, rec);
  run.write("convergence.csv", csv.str());
  const json summary = {{"kind", a.base.kind},
                        {"lambda", p.integer_lambda()},
                        {"epsilon", spec.epsilon},
                        {"seed", a.seed},
                        {"initial_state", vec_json(rec.initial_state)},
                        {"final_state", vec_json(rec.final_state)},
                        {"final_distance", rec.final_distance},
                        {"final_lyapunov", rec.lyapunov_values.back()},
                        {"monotone_violations", rec.monotone_violations},
                        {"max_lyapunov_increase", rec.max_lyapunov_increase},
                        {"casimir_drift", rec.casimir_drift}};
  run.write("summary.json", dump(summary));
  io.out << "final_distance: " << fmt6(rec.final_distance) << "\n"
         << "monotone_violations: " << rec.monotone_violations << "\n"
         << "casimir_drift: " << fmt6(rec.casimir_drift) << "\n";
  return finish(run, io);
}

struct SweepArgs {
  PerturbationArgs base;
  std::string epsilons;
  std::string seeds;
  int threads = 0;
};

struct SweepRow {
  double epsilon = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";
  double final_distance = std::numeric_limits<double>::quiet_NaN();
  long monotone_violations = 0;
  double casimir_drift = std::numeric_limits<double>::quiet_NaN();
};

int sweep_cmd(const SweepArgs& a, const CLI::App& sub, Outputs& io) {
  const ModelParams p = integer_params(a.base.lambda);
  const auto eps = parse_list(a.epsilons, "--epsilons");
  const auto seeds = parse_seeds(a.seeds, "--seeds");
  std::vector<PerturbationSpec> specs;
  for (double e : eps) specs.push_back(make_spec(a.base, e));
  if (a.threads < 0) throw UsageError("--threads", "must be non-negative");

  std::vector<SweepRow> rows(specs.size() * seeds.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].epsilon = specs[i / seeds.size()].epsilon;
    rows[i].seed = seeds[i % seeds.size()];
  }
  const IntegratorConfig cfg = run_config(a.base, 1);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      SweepRow& row = rows[i];
      try {
        const PerturbationSpec& spec = specs[i / seeds.size()];
        const ConvergenceRecord rec = run_convergence(spec, seeded_start(spec, p, row.seed), cfg, p);
        row.final_distance = rec.final_distance;
        row.monotone_violations = rec.monotone_violations;
        row.casimir_drift = rec.casimir_drift;
      } catch (const Error& e) {
        row.status = std::string(to_string(e.code()));
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_threads =
      std::min<std::size_t>(rows.size(), a.threads > 0 ? static_cast<std::size_t>(a.threads) : hw);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // Results are written only after every worker has joined.
  std::ostringstream csv;
  csv << "epsilon,seed,status,final_distance,monotone_violations,casimir_drift\n";
  std::size_t failed = 0;
  for (const SweepRow& r : rows) {
    if (r.status != "ok") ++failed;
    csv << fmt17(r.epsilon) << ',' << r.seed << ',' << r.status << ',' << fmt17(r.final_distance) << ','
        << r.monotone_violations << ',' << fmt17(r.casimir_drift) << '\n';
  }
  auto params = parameters_of(sub);
  params.erase("threads");
  RunDirectory run("sweep", params);
  run.write("sweep.csv", csv.str());
  io.out << "tasks: " << rows.size() << "\nfailed: " << failed << "\n";
  return finish(run, io);
}

struct ReportArgs {
  std::string run;
};

int report_cmd(const ReportArgs& a, Outputs& io) {
  const auto checks = verify_run(a.run);
  bool all_ok = true;
  for (const FileCheck& c : checks) {
    const char* status = c.actual.empty() ? "MISSING" : (c.ok() ? "ok" : "MISMATCH");
    all_ok = all_ok && c.ok();
    io.out << status << " " << c.file << "\n";
  }
  io.out << (all_ok ? "all checksums match" : "checksum verification failed") << "\n";
  return all_ok ? kOk : kMismatch;
}

}  // namespace

Vec3 seeded_start(const PerturbationSpec& spec, const ModelParams& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double r = std::sqrt(2.0 * target_casimir(spec, p));
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Vec3 v(normal(rng), normal(rng), normal(rng));
    v *= r / v.norm();
    if (std::abs(v(1)) < 0.05 * r) continue;
    if (spec.kind == PerturbationKind::Heteroclinic &&
        lyapunov_value(spec, v, p) >= 0.9 * beta0(*spec.M, p)) {
      continue;
    }
    if (spec.kind == PerturbationKind::PeriodicOrbit && hamiltonian(v, p) * *spec.h <= 0.0) continue;
    return v;
  }
  throw Error(ErrorCode::SeedNotFound, "no admissible start found on the Casimir sphere");
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  Outputs io{out, err};
  CLI::App app{"Rattleback dynamics: simulation, energy-Casimir analysis and stabilization",
               "rattleback"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  app.require_subcommand(1);
  // -h would clash with the energy flag --h.
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", tool_version());

  auto add_config = [](CLI::App* sub) {
    sub->add_option("--config", "File of key=value lines; flags given here win");
  };

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "Integrate the conservative system");
  c_sim->add_option("--lambda", sim.lambda, "Any positive lambda")->required();
  c_sim->add_option("--from", sim.from, "Initial state x,y,z")->required();
  c_sim->add_option("--t-end", sim.t_end, "Final time");
  c_sim->add_option("--dt", sim.dt, "Step (initial step for rk45)");
  c_sim->add_option("--method", sim.method, "rk4 or rk45")->check(CLI::IsMember({"rk4", "rk45"}));
  c_sim->add_option("--tol", sim.tol, "rk45 tolerance");
  c_sim->add_option("--record-every", sim.record_every, "Keep every n-th step");
  c_sim->add_option("--projection", sim.projection, "xy, xz or yz");
  add_config(c_sim);

  EquilibriaArgs eq;
  CLI::App* c_eq = app.add_subcommand("equilibria", "List equilibria with spectra and verdicts");
  c_eq->add_option("--lambda", eq.lambda, "Integer lambda >= 2")->required();
  c_eq->add_option("--M", eq.M, "Comma-separated M values");
  add_config(c_eq);

  ClassifyArgs cl;
  CLI::App* c_cl = app.add_subcommand("classify", "Stratum and fiber topology of (h, c)");
  c_cl->add_option("--lambda", cl.lambda, "Integer lambda >= 2")->required();
  c_cl->add_option("--h", cl.h, "Energy")->required();
  c_cl->add_option("--c", cl.c, "Casimir")->required();
  add_config(c_cl);

  FiberArgs fb;
  CLI::App* c_fb = app.add_subcommand("fiber", "Trace the fiber over an interior (h, c)");
  c_fb->add_option("--lambda", fb.lambda, "Integer lambda >= 2")->required();
  c_fb->add_option("--h", fb.h, "Energy")->required();
  c_fb->add_option("--c", fb.c, "Casimir")->required();
  c_fb->add_option("--step", fb.step, "Continuation arc-length step");
  c_fb->add_option("--projection", fb.projection, "xy, xz or yz");
  add_config(c_fb);

  HeteroclinicArgs het;
  CLI::App* c_het = app.add_subcommand("heteroclinic", "Sample the four heteroclinic branches");
  c_het->add_option("--lambda", het.lambda, "Integer lambda >= 2")->required();
  c_het->add_option("--M", het.M, "Casimir radius");
  c_het->add_option("--k", het.k, "Phase shift");
  c_het->add_option("--t-min", het.t_min, "First sample time");
  c_het->add_option("--t-max", het.t_max, "Last sample time");
  c_het->add_option("--samples", het.samples, "Number of samples");
  c_het->add_option("--projection", het.projection, "xy, xz or yz");
  add_config(c_het);

  LaxArgs lax;
  CLI::App* c_lax = app.add_subcommand("lax-check", "Lax residual and isospectral drift of a trajectory CSV");
  c_lax->add_option("--lambda", lax.lambda, "Any positive lambda")->required();
  c_lax->add_option("--trajectory", lax.trajectory, "CSV with x,y,z columns")->required();
  add_config(c_lax);

  StabilizeArgs st;
  CLI::App* c_st = app.add_subcommand("stabilize", "Run a stabilizing perturbation");
  add_perturbation_options(c_st, st.base);
  c_st->add_option("--epsilon", st.epsilon, "Gain (default 0.5, 0.1 or 1 by kind)");
  c_st->add_option("--seed", st.seed, "Seed for the initial state")->required();
  c_st->add_option("--from", st.from, "Explicit initial state x,y,z (projected onto the sphere)");
  c_st->add_option("--record-every", st.record_every, "Keep every n-th step");
  add_config(c_st);

  SweepArgs sw;
  CLI::App* c_sw = app.add_subcommand("sweep", "Stabilize runs over gains and seeds, in parallel");
  add_perturbation_options(c_sw, sw.base);
  c_sw->add_option("--epsilons", sw.epsilons, "Comma-separated gains")->required();
  c_sw->add_option("--seeds", sw.seeds, "Comma-separated seeds")->required();
  c_sw->add_option("--threads", sw.threads, "Worker threads (0: one per core)");
  add_config(c_sw);

  ReportArgs rep;
  CLI::App* c_rep = app.add_subcommand("report", "Re-verify the checksums of a run directory");
  c_rep->add_option("--run", rep.run, "Run directory")->required()->check(CLI::ExistingDirectory);

  try {
    const std::vector<std::string> args = expand_config(raw_args);
    std::vector<const char*> argv;
    for (const auto& s : args) argv.push_back(s.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << tool_version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (c_sim->parsed()) return simulate(sim, *c_sim, io);
    if (c_eq->parsed()) return equilibria_cmd(eq, *c_eq, io);
    if (c_cl->parsed()) return classify_cmd(cl, *c_cl, io);
    if (c_fb->parsed()) return fiber_cmd(fb, *c_fb, io);
    if (c_het->parsed()) return heteroclinic_cmd(het, *c_het, io);
    if (c_lax->parsed()) return lax_cmd(lax, *c_lax, io);
    if (c_st->parsed()) return stabilize_cmd(st, *c_st, io);
    if (c_sw->parsed()) return sweep_cmd(sw, *c_sw, io);
    if (c_rep->parsed()) return report_cmd(rep, io);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.is_numerical() ? kNumerical : kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace rattleback::cli
