#include "spdope/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "spdope/config.hpp"
#include "spdope/errors.hpp"
#include "spdope/field_io.hpp"
#include "spdope/format.hpp"

namespace spdope {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const char* const kSubcommands[] = {"minimize",       "evolve",           "stability",   "scan-mu",     "mu-star",
                                    "subadd",         "spectral-floor",   "check-identities", "profile-info"};

/// Failure that carries its exit code and a structured report.
class RunFailure : public std::runtime_error {
 public:
  RunFailure(int code, std::string kind, const std::string& what, ordered_json details = ordered_json::object())
      : std::runtime_error(what), code_(code), kind_(std::move(kind)), details_(std::move(details)) {}
  int code() const noexcept { return code_; }
  const std::string& kind() const noexcept { return kind_; }
  const ordered_json& details() const noexcept { return details_; }

 private:
  int code_;
  std::string kind_;
  ordered_json details_;
};

ordered_json grid_json(const Grid3& g) {
  return {{"N", g.points_per_axis()}, {"L", g.box_length()}, {"h", g.spacing()}};
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RunFailure(kExitConfig, "io", "cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class Session {
 public:
  Session(std::string subcommand, RunConfig cfg, std::size_t jobs, bool quiet)
      : subcommand_(std::move(subcommand)),
        cfg_(std::move(cfg)),
        hash_(cfg_.hash()),
        grid_(cfg_.grid.L, cfg_.grid.N),
        out_(cfg_.output),
        jobs_(std::max<std::size_t>(jobs, 1)),
        quiet_(quiet) {
    if (auto w = cfg_.params.regime_warning()) warn(*w);
  }

  const RunConfig& cfg() const { return cfg_; }
  const Grid3& grid() const { return grid_; }
  std::size_t jobs() const { return jobs_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  void warn(const std::string& w) {
    for (const auto& existing : warnings_) {
      if (existing == w) return;
    }
    warnings_.push_back(w);
    if (!quiet_) std::cerr << "warning: " << w << '\n';
  }
  void warn_all(const std::vector<std::string>& ws) {
    for (const auto& w : ws) warn(w);
  }
  void note(const std::string& line) const {
    if (!quiet_) std::cout << line << '\n';
  }

  void write_text(const std::string& name, const std::string& text, const Grid3* grid = nullptr) {
    prepare();
    const fs::path path = out_ / name;
    {
      std::ofstream os(path, std::ios::binary);
      os << text;
      if (!os) throw RunFailure(kExitConfig, "io", "cannot write " + path.string());
    }
    manifest(name, sha256_hex(text), grid);
  }

  void write_json(const std::string& name, ordered_json j, const Grid3* grid = nullptr) {
    j["warnings"] = warnings_;
    write_text(name, j.dump(2) + "\n", grid);
  }

  void write_field(const std::string& name, const ComplexField& f) {
    prepare();
    spdope::write_field(out_ / name, f);
    manifest(name, sha256_hex(read_text(out_ / name)), &f.grid());
  }

 private:
  void prepare() {
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) throw RunFailure(kExitConfig, "io", "cannot create output directory " + out_.string() + ": " + ec.message());
  }

  void manifest(const std::string& name, const std::string& digest, const Grid3* grid) {
    ordered_json m;
    m["file"] = name;
    m["sha256"] = digest;
    m["subcommand"] = subcommand_;
    m["config_hash"] = hash_;
    m["grid"] = grid_json(grid != nullptr ? *grid : grid_);
    m["version"] = SPDOPE_VERSION;
    m["seed"] = cfg_.seed;
    std::ofstream os(out_ / (name + ".manifest.json"), std::ios::binary);
    os << m.dump(2) << '\n';
    if (!os) throw RunFailure(kExitConfig, "io", "cannot write manifest for " + name);
  }

  std::string subcommand_;
  RunConfig cfg_;
  std::string hash_;
  Grid3 grid_;
  fs::path out_;
  std::size_t jobs_;
  bool quiet_;
  std::vector<std::string> warnings_;
};

/// Runs fn(i) for i < n on up to `jobs` threads; the first exception wins.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

MinimizerResult run_minimizer(Session& s, SpectralWorkspace& ws) {
  const RunConfig& c = s.cfg();
  MinimizerResult r = minimize_at_mass(c.mu, c.profile, c.params, c.minimize, ws);
  s.warn_all(r.warnings);
  s.note("mu=" + format_double(r.mu) + " c=" + format_double(r.c_value()) + " omega=" + format_double(r.omega) +
         " converged=" + (r.converged ? "true" : "false"));
  return r;
}

void cmd_minimize(Session& s) {
  SpectralWorkspace ws(s.grid());
  const MinimizerResult r = run_minimizer(s, ws);
  s.write_field("u_min.field", r.u_min);
  s.write_json("result.json", r.to_json());
  if (!r.converged) {
    throw RunFailure(kExitNumerical, "numerical", "minimizer did not converge",
                     {{"gradient_residual", r.residuals.gradient}, {"iterations", r.iterations}});
  }
}

void cmd_evolve(Session& s) {
  const RunConfig& c = s.cfg();
  SpectralWorkspace ws(s.grid());
  std::optional<ComplexField> psi0;
  std::optional<double> omega;
  if (c.evolve.init == "minimizer") {
    MinimizerResult r = run_minimizer(s, ws);
    omega = r.omega;
    psi0 = std::move(r.u_min);
  } else if (c.evolve.init == "gaussian") {
    ComplexField g = GaussianState{1.0, c.evolve.width, {0.0, 0.0, 0.0}}.sample(s.grid());
    g *= std::sqrt(c.mu / mass(g));
    psi0 = std::move(g);
  } else {
    ComplexField f = read_complex_field(c.evolve.path);
    if (!(f.grid() == s.grid())) throw ConfigError("evolve.path", "snapshot grid differs from [grid]");
    psi0 = std::move(f);
  }
  const EnergyModel model(c.profile, c.params, ws);
  std::vector<double> ts, phases;
  const ComplexField& ref = *psi0;
  TrajectoryRecord rec = evolve(ref, model, c.propagate, [&](double t, const ComplexField& psi) {
    ts.push_back(t);
    phases.push_back(std::arg(inner(ref, psi)));
  });
  s.warn_all(rec.warnings);
  s.write_text("trajectory.csv", rec.csv());
  ordered_json j;
  j["init"] = c.evolve.init;
  j["steps"] = rec.steps_taken;
  j["failed"] = rec.failed;
  if (rec.failure) j["failure"] = *rec.failure;
  if (!rec.times.empty()) {
    const ConservationReport cr = conservation_report(rec);
    j["max_mass_drift_rel"] = cr.max_mass_drift_rel;
    j["max_energy_drift_rel"] = cr.max_energy_drift_rel;
    j["max_energy_drift_abs"] = cr.max_energy_drift_abs;
  }
  // psi ~ exp(-i omega t) u for a standing wave
  if (ts.size() >= 2) j["phase_rate"] = -phase_rate(ts, phases);
  if (omega) j["omega"] = *omega;
  if (rec.final_state) s.write_field("final.field", *rec.final_state);
  s.write_json("result.json", j);
  if (rec.failed) throw RunFailure(kExitNumerical, "numerical", rec.failure.value_or("evolution failed"));
  s.note("steps=" + std::to_string(rec.steps_taken));
}

void cmd_stability(Session& s) {
  const RunConfig& c = s.cfg();
  SpectralWorkspace ws(s.grid());
  const MinimizerResult r = run_minimizer(s, ws);
  const EnergyModel model(c.profile, c.params, ws);
  const Perturbation pert{c.stability.perturbation, c.seed, c.stability.direction};
  const StabilityRun run = stability_experiment(r, c.stability.delta, pert, c.propagate, model);
  s.warn_all(run.trajectory.warnings);
  s.warn_all(run.warnings);
  s.write_text("stability.csv", run.csv());
  const double threshold = c.stability.threshold_factor * c.stability.delta;
  ordered_json j;
  j["delta"] = run.delta;
  j["perturbation"] = to_string(c.stability.perturbation);
  j["initial_distance"] = run.initial_distance;
  j["sup_distance"] = run.sup_distance;
  j["threshold"] = threshold;
  j["within_threshold"] = run.within(threshold);
  j["minimizer"] = r.to_json();
  s.write_json("result.json", j);
  if (run.trajectory.failed) throw RunFailure(kExitNumerical, "numerical", run.trajectory.failure.value_or("evolution failed"));
  s.note("sup_distance=" + format_double(run.sup_distance) + " threshold=" + format_double(threshold));
}

void cmd_scan_mu(Session& s) {
  const RunConfig& c = s.cfg();
  if (c.scan.mu.empty()) throw ConfigError("scan.mu", "needs at least one mass");
  CurveTable table;
  if (c.scan.warm_start) {
    SpectralWorkspace ws(s.grid());
    table = c_curve(c.scan.mu, c.profile, c.params, c.minimize, ws);
  } else {
    for (std::size_t i = 1; i < c.scan.mu.size(); ++i) {
      if (!(c.scan.mu[i] > c.scan.mu[i - 1])) throw ConfigError("scan.mu", "must be strictly increasing");
    }
    std::vector<std::optional<MinimizerResult>> results(c.scan.mu.size());
    parallel_for(results.size(), s.jobs(), [&](std::size_t i) {
      SpectralWorkspace ws(s.grid());
      results[i] = minimize_at_mass(c.scan.mu[i], c.profile, c.params, c.minimize, ws);
    });
    for (auto& r : results) {
      table.rows.push_back({r->mu, r->c_value(), r->omega, r->residuals, r->iterations, r->converged});
      const std::size_t n = table.rows.size();
      if (n > 1 && table.rows[n - 1].c > table.rows[n - 2].c + 2.0 * c.minimize.energy_tol) table.monotone = false;
      table.results.push_back(std::move(*r));
    }
  }
  for (const auto& r : table.results) s.warn_all(r.warnings);
  if (!table.monotone) s.warn("c(mu) is not nonincreasing across the scan");
  s.write_text("scan.csv", table.csv());
  ordered_json j;
  j["monotone"] = table.monotone;
  j["rows"] = table.rows.size();
  s.write_json("result.json", j);
  s.note("rows=" + std::to_string(table.rows.size()) + " monotone=" + (table.monotone ? "true" : "false"));
}

void cmd_mu_star(Session& s) {
  const RunConfig& c = s.cfg();
  if (!(c.mu_star.hi > 0.0)) throw ConfigError("mu_star.bracket", "needs [lo, hi] with 0 < lo < hi");
  SpectralWorkspace ws(s.grid());
  MuStarResult r{};
  try {
    r = mu_star(c.params, c.minimize, c.mu_star.lo, c.mu_star.hi, c.mu_star.tol, ws);
  } catch (const BracketError& e) {
    throw RunFailure(kExitConfig, "bracket", e.what(), {{"key", "mu_star.bracket"}, {"c_lo", e.c_lo()}, {"c_hi", e.c_hi()}});
  }
  if (r.warning) s.warn(*r.warning);
  ordered_json j;
  j["mu_star"] = r.mu_star;
  j["lo"] = r.lo;
  j["hi"] = r.hi;
  j["c_lo"] = r.c_lo;
  j["c_hi"] = r.c_hi;
  j["evaluations"] = r.evaluations;
  j["eps_neg"] = c.minimize.eps_neg();
  s.write_json("result.json", j);
  s.note("mu_star=" + format_double(r.mu_star));
}

void cmd_subadd(Session& s) {
  const RunConfig& c = s.cfg();
  const double mu = c.subadd.mu > 0.0 ? c.subadd.mu : c.mu;
  SpectralWorkspace ws(s.grid());
  const SubaddReport rep = subadditivity_scan(mu, c.subadd.fractions, c.profile, c.params, c.minimize, ws);
  if (rep.warning) s.warn(*rep.warning);
  const double needed = 3.0 * c.minimize.energy_tol;
  bool all_positive = true;
  for (const auto& row : rep.rows) all_positive = all_positive && row.margin > needed;
  if (!all_positive) s.warn("some margins are not above 3 energy_tol");
  s.write_text("subadd.csv", rep.csv());
  ordered_json j = rep.to_json();
  j.erase("warning");
  j["margins_positive"] = all_positive;
  s.write_json("result.json", j);
  s.note("rows=" + std::to_string(rep.rows.size()) + " margins_positive=" + (all_positive ? "true" : "false"));
}

void cmd_spectral_floor(Session& s) {
  const RunConfig& c = s.cfg();
  if (c.floor.boxes.empty()) throw ConfigError("floor.boxes", "needs at least one box length");
  std::vector<FloorRow> rows(c.floor.boxes.size());
  try {
    parallel_for(rows.size(), s.jobs(), [&](std::size_t i) {
      const double box[] = {c.floor.boxes[i]};
      rows[i] = spectral_floor(c.profile, c.params.e, box, c.grid.N, c.minimize).front();
    });
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("floor.boxes", e.what());
  }
  std::ostringstream os;
  os << "box_length,floor,grad_res,converged\n";
  for (const auto& r : rows) {
    os << format_double(r.box_length) << ',' << format_double(r.floor) << ',' << format_double(r.grad_res) << ','
       << (r.converged ? 1 : 0) << '\n';
    if (!r.converged) s.warn("floor at L = " + format_double(r.box_length) + " did not converge");
  }
  s.write_text("floor.csv", os.str());
  s.write_json("result.json", {{"boxes", rows.size()}});
  s.note("boxes=" + std::to_string(rows.size()));
}

void cmd_check_identities(Session& s) {
  const RunConfig& c = s.cfg();
  if (c.check_field.empty()) throw ConfigError("check.field", "path to a complex snapshot is required");
  const ComplexField u = read_complex_field(c.check_field);
  if (!(u.grid() == s.grid())) s.warn("snapshot grid differs from [grid]; using the snapshot grid");
  SpectralWorkspace ws(u.grid());
  const EnergyModel model(c.profile, c.params, ws);
  const EnergyBreakdown b = model.breakdown(u);
  const double omega = lagrange_multiplier(b);
  ComplexField r = model.gradient(u);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += omega * u[i];
  const double grad_res = std::sqrt(mass(r)) / h1_norm(u, ws);
  auto residual = [](const Residual& x) { return ordered_json{{"value", x.value}, {"normalized", x.normalized}}; };
  ordered_json j;
  j["field"] = c.check_field;
  j["mass"] = b.mass;
  j["omega"] = omega;
  j["nehari"] = residual(nehari_residual(omega, b));
  j["pohozaev"] = residual(pohozaev_residual(omega, b));
  j["energy_identity"] = residual(energy_identity_residual(omega, b));
  j["gradient_residual"] = grad_res;
  j["energy"] = b.to_json();
  s.write_json("identities.json", j, &u.grid());
  s.note("omega=" + format_double(omega) + " gradient_residual=" + format_double(grad_res));
}

void cmd_profile_info(Session& s) {
  const RunConfig& c = s.cfg();
  ordered_json j;
  j["profile"] = profile_to_json(c.profile);
  j["key"] = c.profile.key();
  const RhoNorms n = rho_norms(c.profile, s.grid());
  j["rho_65"] = n.rho_65;
  j["x_grad_rho_65"] = n.x_grad_rho_65 ? ordered_json(*n.x_grad_rho_65) : ordered_json(nullptr);
  j["tail_bound"] = n.tail_bound;
  SpectralWorkspace ws(s.grid());
  const EnergyModel model(c.profile, c.params, ws);
  j["A0"] = model.A0();
  j["rho_integral"] = integrate(model.rho());
  if (const auto* balls = std::get_if<BallsProfile>(&c.profile.variant())) {
    j["balls"] = ordered_json::array();
    for (const auto& ball : balls->balls) {
      const BallGeometry g = ball_geometry(ball);
      j["balls"].push_back({{"extent", g.extent},
                            {"volume", g.volume},
                            {"surface", g.surface},
                            {"kappa1", g.kappa1},
                            {"kappa2", g.kappa2},
                            {"d_omega", g.d_omega}});
    }
    j["d_omega_lower_bound_constant"] = d_omega_lower_bound_constant();
  }
  s.write_json("profile.json", j);
  s.note("profile=" + c.profile.key() + " rho_65=" + format_double(n.rho_65));
}

void dispatch(Session& s, const std::string& sub) {
  if (sub == "minimize") return cmd_minimize(s);
  if (sub == "evolve") return cmd_evolve(s);
  if (sub == "stability") return cmd_stability(s);
  if (sub == "scan-mu") return cmd_scan_mu(s);
  if (sub == "mu-star") return cmd_mu_star(s);
  if (sub == "subadd") return cmd_subadd(s);
  if (sub == "spectral-floor") return cmd_spectral_floor(s);
  if (sub == "check-identities") return cmd_check_identities(s);
  return cmd_profile_info(s);
}

int report_error(const std::optional<fs::path>& out, const std::string& sub, int code, const std::string& kind,
                 const std::string& message, ordered_json details) {
  ordered_json j;
  j["exit_code"] = code;
  j["kind"] = kind;
  j["subcommand"] = sub;
  j["message"] = message;
  for (auto& [k, v] : details.items()) j[k] = v;
  std::cerr << j.dump() << '\n';
  if (out) {
    std::error_code ec;
    fs::create_directories(*out, ec);
    std::ofstream os(*out / "error.json", std::ios::binary);
    if (os) os << j.dump(2) << '\n';
  }
  return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Schrodinger-Poisson with doping: minimizers, dynamics and stability"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::size_t jobs = 1;
  std::string output;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  for (const char* name : kSubcommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "TOML run config");
    sub->add_option("--set", overrides, "override a config entry, key=value")->allow_extra_args(false);
    sub->add_option("--jobs", jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
    sub->add_option("--output", output, "output directory");
    sub->add_option("--seed", seed, "random seed");
    sub->add_flag("--quiet", quiet, "suppress progress and warnings");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return report_error(std::nullopt, "", kExitConfig, "usage", e.what(), ordered_json::object());
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  std::optional<fs::path> out;
  if (!output.empty()) out = output;
  std::optional<Session> session;
  try {
    json doc = config_path.empty() ? json::object() : parse_toml(read_text(config_path));
    for (const auto& o : overrides) apply_override(doc, o);
    if (!out && doc.contains("output") && doc["output"].is_string()) out = doc["output"].get<std::string>();
    if (!output.empty()) doc["output"] = output;
    if (seed) doc["seed"] = *seed;
    RunConfig cfg = RunConfig::from_json(doc);
    out = cfg.output;
    std::error_code ec;
    fs::remove(*out / "error.json", ec);
    session.emplace(sub, std::move(cfg), jobs, quiet);
    dispatch(*session, sub);
    return kExitOk;
  } catch (const RunFailure& e) {
    return report_error(out, sub, e.code(), e.kind(), e.what(), e.details());
  } catch (const ConfigError& e) {
    return report_error(out, sub, kExitConfig, "config", e.what(), {{"key", e.key()}});
  } catch (const FieldIoError& e) {
    const int code = e.code() == FieldIoError::Code::non_finite ? kExitNumerical : kExitConfig;
    return report_error(out, sub, code, "field_io", e.what(), {{"code", to_string(e.code())}});
  } catch (const NumericalError& e) {
    return report_error(out, sub, kExitNumerical, "numerical", e.what(), ordered_json::object());
  } catch (const std::invalid_argument& e) {
    return report_error(out, sub, kExitConfig, "config", e.what(), ordered_json::object());
  } catch (const fs::filesystem_error& e) {
    return report_error(out, sub, kExitConfig, "io", e.what(), ordered_json::object());
  } catch (const std::exception& e) {
    return report_error(out, sub, kExitNumerical, "internal", e.what(), ordered_json::object());
  }
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace spdope
