#include "experiments.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "wndyn/averaged_semigroup.hpp"
#include "wndyn/errors.hpp"
#include "wndyn/heat_bath.hpp"
#include "wndyn/monte_carlo.hpp"
#include "wndyn/noise_model.hpp"
#include "wndyn/phase_space.hpp"

namespace wndyn::cli {
namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// small utilities
// ---------------------------------------------------------------------------

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const json& get(const json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key))
    throw SchemaError("missing required field: " + key);
  return j.at(key);
}

double num(const json& j, const std::string& key) {
  const json& v = get(j, key);
  if (!v.is_number()) throw SchemaError("field must be a number: " + key);
  return v.get<double>();
}

double num_or(const json& j, const std::string& key, double dflt) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  if (!j.at(key).is_number())
    throw SchemaError("field must be a number: " + key);
  return j.at(key).get<double>();
}

long long integer(const json& j, const std::string& key) {
  const json& v = get(j, key);
  if (!v.is_number_integer())
    throw SchemaError("field must be an integer: " + key);
  return v.get<long long>();
}

long long int_or(const json& j, const std::string& key, long long dflt) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  if (!j.at(key).is_number_integer())
    throw SchemaError("field must be an integer: " + key);
  return j.at(key).get<long long>();
}

std::string str(const json& j, const std::string& key) {
  const json& v = get(j, key);
  if (!v.is_string()) throw SchemaError("field must be a string: " + key);
  return v.get<std::string>();
}

std::vector<double> num_array(const json& j, const std::string& key) {
  const json& v = get(j, key);
  if (!v.is_array() || v.empty())
    throw SchemaError("field must be a non-empty array: " + key);
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) throw SchemaError("array must hold numbers: " + key);
    out.push_back(e.get<double>());
  }
  return out;
}

// CSV file with the provenance comment block.
class Emitter {
 public:
  Emitter(const std::string& path, const std::string& hash_hex,
          std::uint64_t seed, const std::string& law) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot open output file: " + path);
    out_ << "# wndyn " << kVersion << "\n";
    out_ << "# config-hash: " << hash_hex << "\n";
    out_ << "# seed: " << seed << "\n";
    out_ << "# law: " << law << "\n";
  }

  void comment(const std::string& text) { out_ << "# " << text << "\n"; }
  void line(const std::string& text) { out_ << text << "\n"; }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// config-block parsers
// ---------------------------------------------------------------------------

QuadraticHamiltonian parse_hamiltonian(const json& j) {
  const std::string kind = str(j, "kind");
  const double m = num_or(j, "m", 1.0);
  const double hbar = num_or(j, "hbar", 1.0);
  if (kind == "free") return QuadraticHamiltonian::free_particle(m, hbar);
  if (kind == "harmonic")
    return QuadraticHamiltonian::harmonic(m, num(j, "omega"), hbar);
  throw SchemaError("hamiltonian.kind must be \"free\" or \"harmonic\"");
}

double length_scale(const json& j, const std::string& key) {
  if (!j.contains(key) || j.at(key).is_null())
    return std::numeric_limits<double>::infinity();
  const json& v = j.at(key);
  if (v.is_string()) {
    if (v.get<std::string>() == "inf")
      return std::numeric_limits<double>::infinity();
    throw SchemaError("field must be a number or \"inf\": " + key);
  }
  if (!v.is_number()) throw SchemaError("field must be a number or \"inf\": " + key);
  return v.get<double>();
}

CovarianceSpec parse_noise(const json& j) {
  const std::string family = str(j, "family");
  const double hbar = num_or(j, "hbar", 1.0);
  if (family == "gaussian")
    return CovarianceSpec::gaussian(num(j, "C0"), length_scale(j, "ell_p"),
                                    length_scale(j, "ell_q"), hbar);
  if (family == "constant") return CovarianceSpec::constant(num(j, "C0"), hbar);
  if (family == "tabulated") {
    if (!j.contains("atoms") || !j.at("atoms").is_array())
      throw SchemaError("tabulated noise needs an \"atoms\" array");
    return CovarianceSpec::tabulated_from_json(j.at("atoms").dump(), hbar);
  }
  throw SchemaError("noise.family must be gaussian, constant, or tabulated");
}

SpectralDensity parse_spectral(const json& j) {
  const std::string family = str(j, "family");
  if (family == "drude")
    return SpectralDensity::drude(num(j, "J0"), num(j, "omega0"));
  if (family == "gaussian")
    return SpectralDensity::gaussian(num(j, "J0"), num(j, "omega0"));
  if (family == "tabulated") {
    json table;
    table["nu"] = get(j, "nu");
    table["J"] = get(j, "J");
    return SpectralDensity::tabulated_from_json(table.dump());
  }
  throw SchemaError("spectral.family must be drude, gaussian, or tabulated");
}

McInitialState parse_initial(const json& parent) {
  McInitialState init;
  if (!parent.contains("initial")) return init;
  const json& j = parent.at("initial");
  if (j.contains("mean")) {
    const std::vector<double> m = num_array(j, "mean");
    if (m.size() != 2) throw SchemaError("initial.mean must have 2 entries");
    init.mean << m[0], m[1];
  }
  if (j.contains("cov")) {
    const json& c = j.at("cov");
    if (!c.is_array() || c.size() != 2 || !c[0].is_array() || c[0].size() != 2 ||
        !c[1].is_array() || c[1].size() != 2)
      throw SchemaError("initial.cov must be a 2x2 array");
    for (int r = 0; r < 2; ++r)
      for (int s = 0; s < 2; ++s) {
        if (!c[r][s].is_number())
          throw SchemaError("initial.cov entries must be numbers");
        init.cov(r, s) = c[r][s].get<double>();
      }
  }
  return init;
}

BathSpec parse_bath(const json& j) {
  BathSpec bs;
  bs.m = num_or(j, "m", 1.0);
  bs.omega = num_or(j, "omega", 0.0);
  if (j.contains("spectral")) {
    const SpectralDensity J = parse_spectral(j.at("spectral"));
    const int n = static_cast<int>(integer(j, "n"));
    return discretize_bath(J, n, num(j, "cutoff"), bs.m, bs.omega);
  }
  const std::vector<double> masses = num_array(j, "masses");
  const std::vector<double> freqs = num_array(j, "frequencies");
  bs.n = static_cast<int>(masses.size());
  bs.masses = masses;
  bs.frequencies = freqs;
  bs.validate();
  return bs;
}

// ---------------------------------------------------------------------------
// experiments
// ---------------------------------------------------------------------------

struct Ctx {
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string hash_hex;
  bool dry = false;
};

std::string out_path(const Ctx& ctx, const json& j,
                     const std::string& default_name) {
  std::string name = default_name;
  if (j.contains("output")) {
    if (!j.at("output").is_string())
      throw SchemaError("output must be a string");
    name = j.at("output").get<std::string>();
  }
  return (std::filesystem::path(ctx.out_dir) / name).string();
}

std::string stem_of(const std::string& path) {
  std::filesystem::path p(path);
  return (p.parent_path() / p.stem()).string();
}

void run_moments(const json& j, const Ctx& ctx) {
  const QuadraticHamiltonian H = parse_hamiltonian(get(j, "hamiltonian"));
  const CovarianceSpec spec = parse_noise(get(j, "noise"));
  const std::vector<double> times = num_array(j, "times");
  const long n_traj = static_cast<long>(integer(j, "n_traj"));
  const McInitialState init = parse_initial(j);
  if (ctx.dry) return;

  const DiffusionMatrix D = diffusion_matrix(spec);
  MomentState ms;
  ms.mean = init.mean;
  ms.second = init.cov + init.mean * init.mean.transpose();

  SimulationConfig cfg;
  cfg.n_traj = n_traj;
  cfg.times = times;
  cfg.seed = ctx.seed;
  cfg.H = H;
  cfg.noise = spec;
  cfg.initial = init;
  const MomentEstimate est = simulate_classical(cfg);

  Emitter em(out_path(ctx, j, "moments.csv"), ctx.hash_hex, ctx.seed,
             "mu_t = J_t mu_0; M_t = J_t M_0 J_t^T + C_t; "
             "d<H>/dt = Hpp D02 + Hpq D11 + Hqq D20");
  em.line("time,observable,analytic,estimate,stderr");
  double rate = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const MomentTable mt = propagate_moments(H, D, ms, times[k]);
    rate = mt.polynomials.at("H").at(1);
    const double ap = mt.values.at("p"), aq = mt.values.at("q");
    const double avp = mt.values.at("p2") - ap * ap;
    const double avq = mt.values.at("q2") - aq * aq;
    const std::string t = fmt(times[k]);
    em.row({t, "p_mean", fmt(ap), fmt(est.p.mean[k]), fmt(est.p.mean_se[k])});
    em.row({t, "q_mean", fmt(aq), fmt(est.q.mean[k]), fmt(est.q.mean_se[k])});
    em.row({t, "p_var", fmt(avp), fmt(est.p.var[k]), fmt(est.p.var_se[k])});
    em.row({t, "q_var", fmt(avq), fmt(est.q.var[k]), fmt(est.q.var_se[k])});
  }
  em.row({fmt(times.back()), "energy_slope", fmt(rate), fmt(est.slope_H),
          fmt(est.slope_H_se)});
}

void run_evolve_wigner(const json& j, const Ctx& ctx) {
  const QuadraticHamiltonian H = parse_hamiltonian(get(j, "hamiltonian"));
  const CovarianceSpec spec = parse_noise(get(j, "noise"));
  const json& grid = get(j, "grid");
  const int np = static_cast<int>(int_or(grid, "np", 256));
  const int nq = static_cast<int>(int_or(grid, "nq", np));
  const double pmax = num(grid, "pmax");
  const double qmax = num(grid, "qmax");
  const McInitialState init = parse_initial(j);
  const double t_final = num(j, "t");
  const int steps = static_cast<int>(int_or(j, "steps", 50));
  const bool classical = j.value("classical", false);
  if (steps < 1) throw SchemaError("steps must be >= 1");
  if (ctx.dry) return;

  const WignerGrid w0 = WignerGrid::gaussian_state(
      np, nq, pmax, qmax, H.hbar, init.mean, init.cov, classical);
  const DiffusionMatrix D = diffusion_matrix(spec);

  const std::string path = out_path(ctx, j, "evolve-wigner.csv");
  Emitter em(path, ctx.hash_hex, ctx.seed,
             classical
                 ? "rho_t = (G_{C_t} * rho_0) o J_{-t}; BG entropy nondecreasing"
                 : "w_t = (P_t * w_0) o J_{-t}; purity nonincreasing");
  em.line(classical ? "time,mass,bg_entropy" : "time,mass,purity,renyi2");
  WignerGrid state = w0;
  for (int k = 0; k <= steps; ++k) {
    const double t = t_final * k / steps;
    if (k > 0)
      state = classical ? classical_evolve(w0, H, D, t)
                        : evolve_wigner(w0, H, spec, t);
    if (classical)
      em.row({fmt(t), fmt(state.mass()), fmt(bg_entropy(state))});
    else
      em.row({fmt(t), fmt(state.mass()), fmt(purity(state)),
              fmt(renyi2_entropy(state))});
  }
  save_wigner_grid(state, stem_of(path) + "_grid.csv",
                   stem_of(path) + "_grid.json");
}

void run_mc(const json& j, const Ctx& ctx) {
  const std::string mode = j.value("mode", "classical");
  SimulationConfig cfg;
  cfg.times = num_array(j, "times");
  cfg.n_traj = static_cast<long>(integer(j, "n_traj"));
  cfg.seed = ctx.seed;
  cfg.noise = parse_noise(get(j, "noise"));
  cfg.initial = parse_initial(j);
  if (mode == "classical") {
    cfg.H = parse_hamiltonian(get(j, "hamiltonian"));
  } else if (mode == "total") {
    cfg.bath = parse_bath(get(j, "bath"));
    cfg.beta = num(j, "beta");
    cfg.hbar = num_or(j, "hbar", 1.0);
  } else {
    throw SchemaError("mc.mode must be \"classical\" or \"total\"");
  }
  if (ctx.dry) return;

  const MomentEstimate est = (mode == "classical")
                                 ? simulate_classical(cfg)
                                 : simulate_total_system(cfg);

  Emitter em(out_path(ctx, j, "mc.csv"), ctx.hash_hex, ctx.seed,
             "exact one-step law z' = J_dt (z + xi), Cov xi = C_dt "
             "(state direction); bath modes drawn at effective temperatures");
  em.line("time,observable,estimate,stderr,n_traj,seed");
  const std::string nt = std::to_string(est.n_traj);
  const std::string sd = std::to_string(est.seed);
  for (std::size_t k = 0; k < est.times.size(); ++k) {
    const std::string t = fmt(est.times[k]);
    em.row({t, "p_mean", fmt(est.p.mean[k]), fmt(est.p.mean_se[k]), nt, sd});
    em.row({t, "q_mean", fmt(est.q.mean[k]), fmt(est.q.mean_se[k]), nt, sd});
    em.row({t, "p_var", fmt(est.p.var[k]), fmt(est.p.var_se[k]), nt, sd});
    em.row({t, "q_var", fmt(est.q.var[k]), fmt(est.q.var_se[k]), nt, sd});
    em.row({t, "p_m3", fmt(est.p.m3[k]), fmt(est.p.m3_se[k]), nt, sd});
    em.row({t, "q_m3", fmt(est.q.m3[k]), fmt(est.q.m3_se[k]), nt, sd});
    em.row({t, "p_m4", fmt(est.p.m4[k]), fmt(est.p.m4_se[k]), nt, sd});
    em.row({t, "q_m4", fmt(est.q.m4[k]), fmt(est.q.m4_se[k]), nt, sd});
  }
  em.row({fmt(est.times.back()), "energy_slope", fmt(est.slope_H),
          fmt(est.slope_H_se), nt, sd});
}

void run_bath_green(const json& j, const Ctx& ctx) {
  const SpectralDensity J = parse_spectral(get(j, "spectral"));
  const double m = num_or(j, "m", 1.0);
  const double omega = num_or(j, "omega", 0.0);
  const double t_max = num_or(j, "t_max", 50.0);
  const int nt = static_cast<int>(int_or(j, "nt", 4096));
  const int panels = static_cast<int>(int_or(j, "nu_panels", 8192));
  if (ctx.dry) return;

  const GreenFunction gf = green(J, m, omega, t_max, nt, panels);
  Emitter em(out_path(ctx, j, "bath-green.csv"), ctx.hash_hex, ctx.seed,
             "m qdd + int_0^t gamma(t-s) qd ds + m omega^2 q = F;  "
             "Ghat(nu) = 1/(omega^2 - nu^2 - i nu gamma_hat(nu)/m)");
  em.comment("eta: " + fmt(gf.eta()));
  if (gf.has_plateau()) em.comment("plateau: " + fmt(gf.plateau()));
  em.line("t,G,Gdot,Gddot");
  const std::vector<double>& t = gf.t_grid();
  for (std::size_t k = 0; k < t.size(); ++k)
    em.row({fmt(t[k]), fmt(gf.G_samples()[k]), fmt(gf.Gdot_samples()[k]),
            fmt(gf.Gddot_samples()[k])});
}

void run_thermal(const json& j, const Ctx& ctx) {
  const SpectralDensity J = parse_spectral(get(j, "spectral"));
  const double m = num_or(j, "m", 1.0);
  const double omega = num_or(j, "omega", 0.0);
  const double beta = num(j, "beta");
  const double hbar = num_or(j, "hbar", 1.0);
  if (ctx.dry) return;

  const bool with_q2 = omega > 0.0;
  Emitter em(out_path(ctx, j, "thermal.csv"), ctx.hash_hex, ctx.seed,
             "<p^2> = (m hbar/pi) int nu^2 Im Ghat coth(beta hbar nu/2) dnu; "
             "spectral and Matsubara-sum representations of the same moments");
  em.line("method,p2,q2");
  const std::pair<const char*, ThermalMethod> methods[] = {
      {"spectral", ThermalMethod::kSpectralIntegral},
      {"pv", ThermalMethod::kPvIntegral},
      {"matsubara", ThermalMethod::kMatsubara}};
  for (const auto& [name, method] : methods) {
    const ThermalValues tv =
        thermal_values(J, m, omega, beta, hbar, method, with_q2);
    em.row({name, fmt(tv.p2), fmt(tv.q2)});
  }
}

void run_longtime(const json& j, const Ctx& ctx) {
  const SpectralDensity J = parse_spectral(get(j, "spectral"));
  const double m = num_or(j, "m", 1.0);
  const double omega = num_or(j, "omega", 0.0);
  const double beta = num(j, "beta");
  const double hbar = num_or(j, "hbar", 1.0);
  double curv = 0.0;
  if (j.contains("noise")) curv = q_curvature(parse_noise(j.at("noise")));
  if (ctx.dry) return;

  const LongtimeLimits ll = longtime_limits(J, curv, m, omega, beta, hbar);
  Emitter em(out_path(ctx, j, "longtime.csv"), ctx.hash_hex, ctx.seed,
             "t -> inf: <p^2> -> thermal + curv/pi int Gdot-hat^2; at omega=0 "
             "<q^2>_t -> 2 D t, D = (2/(pi J(0)))(1/beta + curv/(2 pi J(0)))");
  em.line("quantity,value");
  em.row({"diffusive", ll.diffusive ? "1" : "0"});
  em.row({"p2_limit", fmt(ll.p2_limit)});
  if (ll.diffusive)
    em.row({"diffusion_constant", fmt(ll.diffusion_constant)});
  else
    em.row({"q2_limit", fmt(ll.q2_limit)});
}

void run_convergence(const json& j, const Ctx& ctx) {
  const SpectralDensity J = parse_spectral(get(j, "spectral"));
  const double m = num_or(j, "m", 1.0);
  const double omega = num_or(j, "omega", 0.0);
  const double cutoff = num(j, "cutoff");
  const double t_max = num_or(j, "t_max", 10.0);
  const json& nlist_json = get(j, "n_list");
  if (!nlist_json.is_array() || nlist_json.empty())
    throw SchemaError("n_list must be a non-empty array of integers");
  std::vector<int> n_list;
  for (const json& e : nlist_json) {
    if (!e.is_number_integer())
      throw SchemaError("n_list must hold integers");
    n_list.push_back(e.get<int>());
  }
  if (ctx.dry) return;

  const GreenFunction gf = green(J, m, omega, t_max, 2048,
                                 static_cast<int>(int_or(j, "nu_panels", 8192)));
  Emitter em(out_path(ctx, j, "convergence.csv"), ctx.hash_hex, ctx.seed,
             "(sin(Omega s)/Omega)_00 -> G(s) as the bath discretization "
             "refines");
  em.line("n,sup_error");
  const int nsamp = 200;
  for (int n : n_list) {
    const FiniteBath fb(discretize_bath(J, n, cutoff, m, omega));
    double sup = 0.0;
    for (int k = 0; k <= nsamp; ++k) {
      const double s = t_max * k / nsamp;
      sup = std::max(sup, std::abs(fb.gn(s) - gf.G(s)));
    }
    em.row({std::to_string(n), fmt(sup)});
  }
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

void dispatch(const json& j, const Ctx& ctx) {
  if (!j.is_object()) throw SchemaError("config must be a JSON object");
  if (j.contains("schema_version") &&
      !(j.at("schema_version").is_number_integer() &&
        j.at("schema_version").get<long long>() == 1))
    throw SchemaError("unsupported schema_version (expected 1)");
  const std::string name = str(j, "experiment");
  if (name == "moments")
    run_moments(j, ctx);
  else if (name == "evolve-wigner")
    run_evolve_wigner(j, ctx);
  else if (name == "mc")
    run_mc(j, ctx);
  else if (name == "bath-green")
    run_bath_green(j, ctx);
  else if (name == "thermal")
    run_thermal(j, ctx);
  else if (name == "longtime")
    run_longtime(j, ctx);
  else if (name == "convergence")
    run_convergence(j, ctx);
  else
    throw SchemaError("unknown experiment: " + name);
}

int emit_error(const std::string& type, const std::string& message, int code) {
  json e;
  e["error"]["type"] = type;
  e["error"]["message"] = message;
  std::cout << e.dump() << std::endl;
  return code;
}

int guarded(const CliOptions& opts, bool dry) {
  std::ifstream in(opts.config_path, std::ios::binary);
  if (!in)
    return emit_error("io", "cannot read config file: " + opts.config_path, 2);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  Ctx ctx;
  ctx.hash_hex = hex64(fnv1a64(text));
  ctx.out_dir = opts.out_dir;
  ctx.dry = dry;
  try {
    const json j = json::parse(text);
    ctx.seed = opts.seed.value_or(
        j.is_object() && j.contains("seed")
            ? static_cast<std::uint64_t>(integer(j, "seed"))
            : 0ULL);
    dispatch(j, ctx);
    if (dry) {
      json ok;
      ok["ok"] = true;
      ok["experiment"] = j.at("experiment").get<std::string>();
      ok["config_hash"] = ctx.hash_hex;
      std::cout << ok.dump() << std::endl;
    }
    return 0;
  } catch (const json::exception& e) {
    return emit_error("schema", e.what(), 2);
  } catch (const SchemaError& e) {
    return emit_error("schema", e.what(), 2);
  } catch (const NotPositiveType& e) {
    return emit_error("not_positive_type", e.what(), 3);
  } catch (const AssumptionViolation& e) {
    return emit_error("assumption_violation", e.what(), 3);
  } catch (const SupportEscape& e) {
    return emit_error("support_escape", e.what(), 3);
  } catch (const std::invalid_argument& e) {
    return emit_error("invalid_argument", e.what(), 2);
  } catch (const std::exception& e) {
    return emit_error("internal", e.what(), 4);
  }
}

}  // namespace

int run_command(const CliOptions& opts) { return guarded(opts, false); }

int validate_command(const CliOptions& opts) { return guarded(opts, true); }

std::string check_worker_env() {
  const char* v = std::getenv("WNDYN_MAX_WORKERS");
  if (v == nullptr || *v == '\0') return "";
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1)
    return "WNDYN_MAX_WORKERS must be a positive integer";
  return "";
}

}  // namespace wndyn::cli
