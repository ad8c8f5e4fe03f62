// Command-line front end: forward solves, interface evolution, inversion,
// illumination maps, scenario catalog and convergence studies.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mlsm/mlsm.hpp"

namespace fs = std::filesystem;
using namespace mlsm;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInternal = 1;
constexpr const char* kVersion = "1.0.0";

const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  usage error (unknown flag, bad argument)\n"
    "  3  configuration error\n"
    "  4  field or data file format error\n"
    "  5  invalid (non-positive) slowness\n"
    "  6  inconsistent data\n"
    "  7  solver failure\n"
    "  8  i/o error (unreadable config, unwritable output)\n";

std::string DefaultOutputDir() {
  const char* env = std::getenv("MLSM_OUTPUT_DIR");
  return env && *env ? env : "mlsm_out";
}

struct Common {
  std::string out;
  unsigned threads = 1;
};

fs::path PrepareOutput(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

std::ofstream OpenOut(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw IoError("cannot write '" + p.string() + "'");
  return os;
}

void WriteLines(const fs::path& p, const std::vector<std::string>& lines) {
  auto os = OpenOut(p);
  for (const auto& l : lines) os << l << "\n";
}

void WriteManifest(const fs::path& dir, const std::string& command, const Config& resolved,
                   const std::vector<std::string>& argv) {
  auto os = OpenOut(dir / "manifest.txt");
  os << "# mlsm " << kVersion << "\n";
  os << "command = " << command << "\n";
  os << "argv =";
  for (const auto& a : argv) os << " " << a;
  os << "\n";
  os << "# resolved configuration\n" << resolved.dump();
}

std::string Indexed(const std::string& stem, std::size_t k, int width = 2) {
  std::ostringstream os;
  os << stem << std::setw(width) << std::setfill('0') << k << ".field";
  return os.str();
}

std::vector<SourceSpec> ParseSources(const Grid2D& g, const std::vector<std::string>& items) {
  std::vector<SourceSpec> out;
  for (const auto& s : items) {
    const auto c = s.find(',');
    if (c == std::string::npos) throw ConfigError("source '" + s + "' must be x,z");
    double x = 0, z = 0;
    try {
      x = std::stod(s.substr(0, c));
      z = std::stod(s.substr(c + 1));
    } catch (const std::exception&) {
      throw ConfigError("source '" + s + "' must be x,z");
    }
    if (x < g.xmin || x > g.xmax || z < g.zmin || z > g.zmax) {
      throw ConfigError("source '" + s + "' lies outside the grid");
    }
    out.push_back(SourceSpec::At(g, x, z));
  }
  return out;
}

std::vector<std::string> SplitComma(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

BoundarySet Receivers(const Grid2D& g, const std::string& spec) {
  if (spec == "none") return BoundarySet(g, {});
  return BoundarySet::Sides(g, SplitComma(spec));
}

// ---------------------------------------------------------------- forward

int RunForward(const Common& c, const std::string& slowness, const std::string& scenario,
               std::size_t n, std::vector<std::string> sources, const std::string& receivers,
               const std::vector<std::string>& argv) {
  ScalarField S;
  std::vector<SourceSpec> src;
  BoundarySet gamma;
  Config resolved;
  if (!slowness.empty()) {
    S = ReadField(slowness);
    resolved.set("slowness", slowness);
  } else if (!scenario.empty()) {
    const Scenario s = MakeScenario(scenario, n);
    if (s.kind != Scenario::Kind::kInversion) {
      throw ConfigError("scenario '" + scenario + "' has no slowness model");
    }
    S = SynthesizeSlowness(s.truth);
    if (sources.empty()) src = s.sources;
    resolved.set("scenario", scenario);
    resolved.set("n", std::to_string(s.grid.nx));
  } else {
    throw ConfigError("forward needs --slowness or --scenario");
  }
  if (!sources.empty()) src = ParseSources(S.grid(), sources);
  if (src.empty()) throw ConfigError("forward needs at least one --source");
  gamma = Receivers(S.grid(), receivers);
  resolved.set("receivers", receivers);
  std::ostringstream sl;
  for (std::size_t k = 0; k < src.size(); ++k) {
    sl << (k ? ";" : "") << FormatReal(src[k].x) << "," << FormatReal(src[k].z);
  }
  resolved.set("sources", sl.str());
  resolved.set("threads", std::to_string(c.threads));

  const fs::path dir = PrepareOutput(c.out);
  WriteManifest(dir, "forward", resolved, argv);
  const auto sols = SolveEikonalAll(S, src, EikonalOptions{}, c.threads);
  auto traces = OpenOut(dir / "traces.csv");
  traces << "source,node,x,z,T\n";
  std::vector<std::string> log;
  for (std::size_t k = 0; k < sols.size(); ++k) {
    WriteField(sols[k].T, (dir / Indexed("T_", k)).string());
    if (!sols[k].converged) log.push_back("source " + std::to_string(k) + ": sweep cap reached");
    for (std::size_t node : gamma) {
      const Grid2D& g = S.grid();
      traces << k << "," << node << "," << FormatReal(g.x(g.col(node))) << ","
             << FormatReal(g.z(g.row(node))) << "," << FormatReal(sols[k].T[node]) << "\n";
    }
  }
  WriteLines(dir / "log.txt", log);
  std::cout << "forward: " << sols.size() << " traveltime field(s) written to " << dir.string()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- evolve

std::string OptReal(const std::optional<double>& v) { return v ? FormatReal(*v) : "nan"; }

int RunEvolve(const Common& c, const std::string& config_path, std::string scenario,
              std::size_t n, double t_final, double dt, int snap_every,
              const std::vector<std::string>& argv) {
  if (!config_path.empty()) {
    const Config cfg = Config::Load(config_path);
    const std::string cs = cfg.get_string("scenario", "");
    const long cn = cfg.get_int("n", 0);
    const double ct = cfg.get_double("t_final", 0.0), cdt = cfg.get_double("dt", 0.0);
    cfg.reject_unused();
    if (cn < 0) throw ConfigError("n must be >= 0");
    if (scenario.empty()) scenario = cs;
    if (!n) n = static_cast<std::size_t>(cn);
    if (!(t_final > 0.0)) t_final = ct;
    if (!(dt > 0.0)) dt = cdt;
  }
  if (scenario.empty()) throw ConfigError("evolve needs --scenario or a config with 'scenario'");
  Scenario s = MakeScenario(scenario, n);
  if (s.kind != Scenario::Kind::kMotion) {
    throw ConfigError("scenario '" + scenario + "' is not a motion scenario");
  }
  if (t_final > 0.0) s.motion.t_final = t_final;
  if (dt > 0.0) s.motion.dt = dt;
  if (snap_every < 0) throw ConfigError("snap-every must be >= 0");
  Config resolved;
  resolved.set("scenario", s.id);
  resolved.set("n", std::to_string(s.grid.nx));
  resolved.set("t_final", FormatReal(s.motion.t_final));
  resolved.set("dt", FormatReal(s.motion.dt));
  resolved.set("reinit_every", std::to_string(s.motion.reinit_every));
  resolved.set("reinit_steps", std::to_string(s.motion.reinit_steps));
  resolved.set("snap_every", std::to_string(snap_every));

  const fs::path dir = PrepareOutput(c.out);
  WriteManifest(dir, "evolve", resolved, argv);
  auto metrics = OpenOut(dir / "metrics.csv");
  metrics << "t,step";
  for (std::size_t l = 0; l < s.levels.size(); ++l) metrics << ",radius_" << l;
  metrics << ",gap\n";
  int snap = 0;
  auto observer = [&](double t, int step, const MultilayerLevelSet& m) {
    metrics << FormatReal(t) << "," << step;
    for (std::size_t l = 0; l < m.num_levels(); ++l) metrics << "," << OptReal(MeanRadius(m, l));
    metrics << "," << OptReal(m.num_levels() >= 2 ? AverageGap(m, 0, 1) : std::nullopt) << "\n";
    if (step == 0 || (snap_every > 0 && step % snap_every == 0)) {
      WriteField(m.phi, (dir / Indexed("phi_", static_cast<std::size_t>(snap++), 4)).string());
    }
  };
  const MotionResult r = Advance(s.motion_initial, s.motion, observer);
  WriteField(r.mlsf.phi, (dir / "phi_final.field").string());
  std::vector<std::string> log = r.log;
  log.push_back("steps " + std::to_string(r.steps) + ", dt bound " + FormatReal(r.dt_bound));
  WriteLines(dir / "log.txt", log);
  for (const auto& l : r.log) std::cerr << "evolve: " << l << "\n";
  std::cout << "evolve: " << r.steps << " steps to t = " << FormatReal(r.t) << ", gap "
            << OptReal(r.mlsf.num_levels() >= 2 ? AverageGap(r.mlsf, 0, 1) : std::nullopt)
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- invert

struct InvertOptions {
  std::string config_path;
  std::string scenario;
  std::size_t n = 0;
  std::optional<int> iters;
  std::optional<double> eps;
  std::optional<double> gamma;
  std::optional<double> gamma_phi;
  std::optional<double> noise;
  std::optional<long> seed;
  std::optional<int> checkpoint_every;
};

void WriteModel(const fs::path& dir, const std::string& prefix, const SlownessModel& m) {
  WriteField(m.mlsf.phi, (dir / (prefix + "phi.field")).string());
  WriteField(SynthesizeSlowness(m), (dir / (prefix + "S.field")).string());
  for (std::size_t k = 0; k < m.p.size(); ++k) {
    WriteField(m.p[k], (dir / (prefix + "p" + std::to_string(k) + ".field")).string());
  }
}

int RunInvert(const Common& c, const InvertOptions& o, const std::vector<std::string>& argv) {
  Config cfg;
  if (!o.config_path.empty()) cfg = Config::Load(o.config_path);
  std::string id = o.scenario.empty() ? cfg.get_string("scenario", "") : o.scenario;
  if (id.empty()) throw ConfigError("invert needs --scenario or a config with 'scenario'");
  const long cn = cfg.get_int("n", static_cast<long>(DefaultResolution(id)));
  if (cn < 0) throw ConfigError("n must be >= 0");
  const std::size_t n = o.n ? o.n : static_cast<std::size_t>(cn);
  Scenario s = MakeScenario(id, n);
  if (s.kind != Scenario::Kind::kInversion) {
    throw ConfigError("scenario '" + id + "' is not an inversion scenario");
  }
  InversionConfig ic = s.config;
  ic.epsilon = o.eps.value_or(cfg.get_double("epsilon", ic.epsilon));
  ic.max_iters = o.iters.value_or(static_cast<int>(cfg.get_int("max_iters", ic.max_iters)));
  ic.eps_stop = cfg.get_double("eps_stop", ic.eps_stop);
  ic.reinit_steps = static_cast<int>(cfg.get_int("reinit_steps", ic.reinit_steps));
  ic.gamma = o.gamma.value_or(cfg.get_double("gamma", ic.gamma));
  ic.gamma_phi = o.gamma_phi.value_or(cfg.get_double("gamma_phi", ic.gamma_phi));
  ic.tau_hat = cfg.get_double("tau_hat", ic.tau_hat);
  s.initial.tau = cfg.get_double("tau", s.initial.tau);
  const double noise = o.noise.value_or(cfg.get_double("noise", 0.0));
  const long seed = o.seed.value_or(cfg.get_int("seed", 0));
  const int checkpoint =
      o.checkpoint_every.value_or(static_cast<int>(cfg.get_int("checkpoint_every", 0)));
  cfg.reject_unused();
  if (seed < 0) throw ConfigError("seed must be >= 0");
  if (checkpoint < 0) throw ConfigError("checkpoint_every must be >= 0");
  ic.threads = c.threads;
  ic.validate();

  Config resolved;
  resolved.set("scenario", id);
  resolved.set("n", std::to_string(s.grid.nx));
  resolved.set("epsilon", FormatReal(ic.epsilon));
  resolved.set("max_iters", std::to_string(ic.max_iters));
  resolved.set("eps_stop", FormatReal(ic.eps_stop));
  resolved.set("reinit_steps", std::to_string(ic.reinit_steps));
  resolved.set("gamma", FormatReal(ic.gamma));
  resolved.set("gamma_phi", FormatReal(ic.gamma_phi));
  resolved.set("tau", FormatReal(s.initial.tau));
  resolved.set("tau_hat", FormatReal(ic.tau_hat));
  resolved.set("noise", FormatReal(noise));
  resolved.set("seed", std::to_string(seed));
  resolved.set("checkpoint_every", std::to_string(checkpoint));

  const fs::path dir = PrepareOutput(c.out);
  WriteManifest(dir, "invert", resolved, argv);
  const ScalarField S_true = SynthesizeSlowness(s.truth);
  const Survey survey = SynthData(S_true, s.sources, s.gamma, noise,
                                  static_cast<std::uint64_t>(seed), c.threads, ic.eikonal);

  auto history = OpenOut(dir / "history.csv");
  history << "iter,E,E_total\n";
  int ckpt = 0;
  auto on_iter = [&](const InversionState& st) {
    const HistoryEntry& h = st.history.back();
    history << h.iter << "," << FormatReal(h.E) << "," << FormatReal(h.E_total) << "\n";
    if (checkpoint > 0 && st.iteration > 0 && st.iteration % checkpoint == 0) {
      std::ostringstream pre;
      pre << "ckpt" << std::setw(5) << std::setfill('0') << st.iteration << "_";
      WriteModel(dir, pre.str(), st.model);
      ++ckpt;
    }
  };
  const InversionState st = Invert(survey, s.initial, ic, on_iter);
  history.close();
  WriteModel(dir, "final_", st.model);
  const ScalarField S = SynthesizeSlowness(st.model);
  WriteField(S - S_true, (dir / "final_discrepancy.field").string());
  WriteField(S_true, (dir / "true_S.field").string());
  std::vector<std::string> log = st.log;
  log.push_back("iterations " + std::to_string(st.iteration) +
                (st.stopped_on_tolerance ? ", stopped on tolerance" : ", iteration cap"));
  WriteLines(dir / "log.txt", log);
  const double e0 = st.history.front().E, e1 = st.history.back().E;
  std::cout << "invert: " << st.iteration << " iterations, E " << FormatReal(e0) << " -> "
            << FormatReal(e1) << " (ratio " << (e0 > 0 ? e1 / e0 : 0.0) << "), " << ckpt
            << " checkpoint(s)\n";
  return 0;
}

// ---------------------------------------------------------------- illum

int RunIllum(const Common& c, const std::string& scenario, std::size_t n,
             const std::string& slowness, const std::string& truth,
             const std::vector<std::string>& sources, const std::string& receivers,
             const std::vector<std::string>& argv) {
  std::optional<Scenario> s;
  if (!scenario.empty()) s = MakeScenario(scenario, n);
  if (s && s->kind != Scenario::Kind::kInversion) {
    throw ConfigError("scenario '" + scenario + "' has no slowness model");
  }
  ScalarField S_true;
  if (!truth.empty()) {
    S_true = ReadField(truth);
  } else if (s) {
    S_true = SynthesizeSlowness(s->truth);
  }
  ScalarField S;
  if (!slowness.empty()) {
    S = ReadField(slowness);
  } else if (S_true.size()) {
    S = S_true;
  } else {
    throw ConfigError("illum needs --slowness or --scenario");
  }
  if (!S_true.size()) S_true = S;
  if (!(S.grid() == S_true.grid())) throw ConfigError("model and true slowness grids differ");
  std::vector<SourceSpec> src = s ? s->sources : std::vector<SourceSpec>{};
  if (!sources.empty()) src = ParseSources(S.grid(), sources);
  if (src.empty()) throw ConfigError("illum needs at least one source");
  const BoundarySet gamma = Receivers(S.grid(), receivers);

  Config resolved;
  if (s) resolved.set("scenario", scenario);
  resolved.set("slowness", slowness.empty() ? "<true model>" : slowness);
  resolved.set("truth", truth.empty() ? (s ? "<scenario>" : "<model>") : truth);
  resolved.set("receivers", receivers);
  resolved.set("sources", std::to_string(src.size()));
  const fs::path dir = PrepareOutput(c.out);
  WriteManifest(dir, "illum", resolved, argv);

  const auto sols = SolveEikonalAll(S, src, EikonalOptions{}, c.threads);
  std::vector<ScalarField> labels(sols.size());
  std::vector<LabelingResult> res(sols.size());
  ParallelFor(sols.size(), c.threads,
              [&](std::size_t k) { res[k] = SolveLabelingDetailed(sols[k].T, gamma); });
  std::vector<std::string> log;
  for (std::size_t k = 0; k < res.size(); ++k) {
    if (!res[k].converged) log.push_back("source " + std::to_string(k) + ": labeling hit sweep cap");
    labels[k] = std::move(res[k].F);
  }
  const IlluminationMap map = TotalIllumination(std::move(labels));
  WriteField(map.F, (dir / "F.field").string());
  WriteField(IlluminationError(S, S_true, map.F), (dir / "eF.field").string());
  WriteLines(dir / "log.txt", log);
  std::cout << "illum: " << src.size() << " source(s), F and e_F written to " << dir.string()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- scenario

std::string DumpScenario(const std::string& id, std::size_t n) {
  const Scenario s = MakeScenario(id, n);
  std::ostringstream os;
  os << "# " << s.description << "\n";
  os << "scenario = " << s.id << "\n";
  os << "n = " << s.grid.nx << "\n";
  os << "# domain " << FormatReal(s.grid.xmin) << " " << FormatReal(s.grid.xmax) << " "
     << FormatReal(s.grid.zmin) << " " << FormatReal(s.grid.zmax) << "\n";
  os << "# levels";
  for (std::size_t l = 0; l < s.levels.size(); ++l) os << " " << FormatReal(s.levels[l]);
  os << "\n";
  if (s.kind == Scenario::Kind::kInversion) {
    os << "epsilon = " << FormatReal(s.config.epsilon) << "\n";
    os << "max_iters = " << s.config.max_iters << "\n";
    os << "eps_stop = " << FormatReal(s.config.eps_stop) << "\n";
    os << "reinit_steps = " << s.config.reinit_steps << "\n";
    os << "gamma = " << FormatReal(s.config.gamma) << "\n";
    os << "gamma_phi = " << FormatReal(s.config.gamma_phi) << "\n";
    os << "tau = " << FormatReal(s.initial.tau) << "\n";
    os << "tau_hat = " << FormatReal(s.config.tau_hat) << "\n";
    os << "noise = 0\n";
    os << "seed = 0\n";
    os << "# sources";
    for (const auto& src : s.sources) os << " (" << FormatReal(src.x) << "," << FormatReal(src.z) << ")";
    os << "\n# receivers: full boundary\n";
    os << "# frozen p:";
    for (std::size_t k = 0; k < s.initial.p.size(); ++k) os << " " << s.initial.is_frozen(k);
    os << "\n";
  } else {
    os << "t_final = " << FormatReal(s.motion.t_final) << "\n";
    os << "dt = " << FormatReal(s.motion.dt) << "\n";
    os << "# laws";
    for (const auto& l : s.motion.laws) {
      const char* k = l.kind == MotionLaw::Kind::kNormal      ? "normal"
                      : l.kind == MotionLaw::Kind::kCurvature ? "curvature"
                                                              : "fixed";
      os << " " << k << "(" << FormatReal(l.value) << ")";
    }
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------- gridtest

double FitExponent(const std::vector<double>& h, const std::vector<double>& e) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double x = std::log(h[k]), y = std::log(e[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

int RunGridtest(const Common& c, const std::string& kind, std::vector<std::size_t> ns,
                const std::vector<std::string>& argv) {
  if (ns.empty()) {
    ns = kind == "eikonal" ? std::vector<std::size_t>{65, 129, 257}
                           : std::vector<std::size_t>{101, 201, 401, 801};
  }
  std::vector<double> hs, errs;
  std::ostringstream table;
  if (kind == "eikonal") {
    table << "n,h,l1_error\n";
    for (std::size_t n : ns) {
      const Grid2D g = MakeGrid(-1, 1, -1, 1, n, n);
      const ScalarField S(g, 1.0);
      const SourceSpec src = SourceSpec::At(g, 0.0, 0.0);
      const auto sol = SolveEikonal(S, src);
      const double sx = g.x(g.col(src.node)), sz = g.z(g.row(src.node));
      double err = 0.0;
      for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
          const double d = std::hypot(g.x(i) - sx, g.z(j) - sz);
          if (d <= 5.0 * g.h) continue;
          err += std::abs(sol.T(i, j) - d) * g.h * g.h;
        }
      }
      hs.push_back(g.h);
      errs.push_back(err);
      table << n << "," << FormatReal(g.h) << "," << FormatReal(err) << "\n";
    }
  } else if (kind == "fig2") {
    table << "n,h,gap\n";
    for (std::size_t n : ns) {
      const Scenario s = MakeScenario("motion-fig2", n);
      const MotionResult r = Advance(s.motion_initial, s.motion);
      const auto gap = AverageGap(r.mlsf, 0, 1);
      if (!gap) throw SolverError("a level set vanished during the fig2 study");
      hs.push_back(s.grid.h);
      errs.push_back(*gap);
      table << n << "," << FormatReal(s.grid.h) << "," << FormatReal(*gap) << "\n";
    }
  } else {
    throw ConfigError("unknown gridtest kind '" + kind + "' (eikonal, fig2)");
  }
  const double p = hs.size() >= 2 ? FitExponent(hs, errs) : std::nan("");
  const fs::path dir = PrepareOutput(c.out);
  Config resolved;
  resolved.set("kind", kind);
  std::ostringstream nl;
  for (std::size_t k = 0; k < ns.size(); ++k) nl << (k ? "," : "") << ns[k];
  resolved.set("n", nl.str());
  WriteManifest(dir, "gridtest", resolved, argv);
  auto os = OpenOut(dir / ("gridtest_" + kind + ".csv"));
  os << table.str() << "# fitted exponent " << FormatReal(p) << "\n";
  std::cout << table.str() << "fitted exponent " << p << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Multilayer level-set toolkit for eikonal traveltime tomography"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common c;
  c.out = DefaultOutputDir();
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-o,--out", c.out, "Output directory (default $MLSM_OUTPUT_DIR or mlsm_out)");
    sub->add_option("--threads", c.threads, "Worker threads for per-source solves")
        ->check(CLI::Range(1u, 1024u));
    sub->footer(kExitCodes);
  };

  std::string slowness, scenario, receivers = "all", truth, kind = "fig2";
  std::size_t n = 0;
  std::vector<std::string> sources;
  std::vector<std::size_t> ns;

  auto* fwd = app.add_subcommand("forward", "Traveltime fields for one slowness model");
  add_common(fwd);
  fwd->add_option("--slowness", slowness, "Slowness field file");
  fwd->add_option("--scenario", scenario, "Use a catalog scenario's true model and sources");
  fwd->add_option("--n", n, "Grid nodes per side for --scenario");
  fwd->add_option("--source", sources, "Source position x,z (repeatable)");
  fwd->add_option("--receivers", receivers, "Receiver sides: all, none or left,right,bottom,top");

  double t_final = 0.0, dt = 0.0;
  int snap_every = 0;
  auto* evo = app.add_subcommand("evolve", "Interface motion for a motion scenario");
  add_common(evo);
  std::string evo_config;
  evo->add_option("--config", evo_config, "key=value config file (flags override it)");
  evo->add_option("--scenario", scenario, "Motion scenario id");
  evo->add_option("--n", n, "Grid nodes per side");
  evo->add_option("--t-final", t_final, "Final time (default per scenario)");
  evo->add_option("--dt", dt, "Time step (default: stability bound)");
  evo->add_option("--snap-every", snap_every, "Write phi every k steps (0: initial and final)");

  InvertOptions io;
  auto* inv = app.add_subcommand("invert", "Twin-test inversion of a scenario");
  add_common(inv);
  inv->add_option("--config", io.config_path, "key=value config file (flags override it)");
  inv->add_option("--scenario", io.scenario, "Inversion scenario id");
  inv->add_option("--n", io.n, "Grid nodes per side");
  inv->add_option("--iters", io.iters, "Maximum iterations");
  inv->add_option("--eps", io.eps, "Step size epsilon");
  inv->add_option("--gamma", io.gamma, "Sobolev smoothing weight");
  inv->add_option("--gamma-phi", io.gamma_phi, "Arc-length penalty weight");
  inv->add_option("--noise", io.noise, "Uniform noise amplitude on the data");
  inv->add_option("--seed", io.seed, "Noise seed");
  inv->add_option("--checkpoint-every", io.checkpoint_every, "Write the model every k iterations");

  auto* ill = app.add_subcommand("illum", "Illumination map and illumination-weighted error");
  add_common(ill);
  ill->add_option("--scenario", scenario, "Scenario supplying true model and sources");
  ill->add_option("--n", n, "Grid nodes per side for --scenario");
  ill->add_option("--slowness", slowness, "Model slowness field (default: true model)");
  ill->add_option("--truth", truth, "True slowness field (default: scenario truth)");
  ill->add_option("--source", sources, "Source position x,z (repeatable)");
  ill->add_option("--receivers", receivers, "Receiver sides: all, none or left,right,bottom,top");

  auto* scn = app.add_subcommand("scenario", "Scenario catalog");
  scn->footer(kExitCodes);
  scn->require_subcommand(1);
  auto* scn_list = scn->add_subcommand("list", "List scenario ids");
  std::string dump_id, dump_out;
  auto* scn_dump = scn->add_subcommand("dump", "Print a scenario as a replayable config");
  scn_dump->add_option("id", dump_id, "Scenario id")->required();
  scn_dump->add_option("--n", n, "Grid nodes per side");
  scn_dump->add_option("-o,--out", dump_out, "Write to this file instead of stdout");

  auto* grid = app.add_subcommand("gridtest", "Grid convergence studies");
  add_common(grid);
  grid->add_option("--kind", kind, "eikonal (cone error) or fig2 (two-circle gap)");
  grid->add_option("--n", ns, "Grid sizes (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*fwd) return RunForward(c, slowness, scenario, n, sources, receivers, args);
    if (*evo) return RunEvolve(c, evo_config, scenario, n, t_final, dt, snap_every, args);
    if (*inv) return RunInvert(c, io, args);
    if (*ill) return RunIllum(c, scenario, n, slowness, truth, sources, receivers, args);
    if (*scn_list) {
      for (const auto& id : ScenarioIds()) std::cout << id << "  " << MakeScenario(id, 17).description << "\n";
      return 0;
    }
    if (*scn_dump) {
      const std::string text = DumpScenario(dump_id, n);
      if (dump_out.empty()) {
        std::cout << text;
      } else {
        auto os = OpenOut(dump_out);
        os << text;
      }
      return 0;
    }
    if (*grid) return RunGridtest(c, kind, ns, args);
  } catch (const Error& e) {
    std::cerr << "mlsm: " << ErrorKindName(e.kind()) << ": " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "mlsm: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
