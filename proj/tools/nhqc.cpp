// Command-line surface: spectra, diagnostics, sweeps, entanglement scans,
// winding traces and the oracle battery for the non-Abelian NHAAH models.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "nhqc/io.hpp"
#include "nhqc/sweep.hpp"
#include "nhqc/validate.hpp"

using namespace nhqc;

namespace {

struct SpecArgs {
  std::string config_file;
  std::optional<std::string> kind;
  std::optional<double> J, V, phi, beta, gamma, flux;
  std::optional<long> alpha_p, alpha_q, L;
  std::optional<std::string> boundary;

  void register_options(CLI::App* cmd) {
    cmd->add_option("--config", config_file,
                    "spec config file (key = value, overridden by flags)");
    cmd->add_option("--kind", kind, "model1|model2|model3|abelian_scalar");
    cmd->add_option("--J", J, "uniform hopping amplitude");
    cmd->add_option("--V", V, "onsite potential amplitude");
    cmd->add_option("--phi", phi, "Abelian phase");
    cmd->add_option("--beta", beta, "nonreciprocity (Model 2)");
    cmd->add_option("--gamma", gamma, "imaginary onsite phase (Model 3)");
    cmd->add_option("--alpha-p", alpha_p, "frequency numerator");
    cmd->add_option("--alpha-q", alpha_q, "frequency denominator");
    cmd->add_option("--L", L, "lattice length");
    cmd->add_option("--boundary", boundary, "pbc|obc");
    cmd->add_option("--flux", flux, "ring flux");
  }

  ModelSpec resolve() const {
    KeyValueConfig cfg;
    if (!config_file.empty()) cfg = KeyValueConfig::parse_file(config_file);
    if (kind) cfg.set("kind", *kind);
    if (J) cfg.set("J", format_double_exact(*J));
    if (V) cfg.set("V", format_double_exact(*V));
    if (phi) cfg.set("phi", format_double_exact(*phi));
    if (beta) cfg.set("beta", format_double_exact(*beta));
    if (gamma) cfg.set("gamma", format_double_exact(*gamma));
    if (alpha_p) cfg.set("alpha_p", std::to_string(*alpha_p));
    if (alpha_q) cfg.set("alpha_q", std::to_string(*alpha_q));
    if (L) cfg.set("L", std::to_string(*L));
    if (boundary) cfg.set("boundary", *boundary);
    if (flux) cfg.set("flux", format_double_exact(*flux));
    return ModelSpec::from_config(cfg);
  }
};

struct DiagArgs {
  std::string diagnostics = "realness,localization,winding,entanglement,levelstat";
  long n_theta = 256;
  double tol_imag_rel = 1e-8;
  double tol_imag_abs = 0;
  double ipr_threshold = 0;
  long flux_divisor = 0;

  void register_options(CLI::App* cmd) {
    cmd->add_option("--diagnostics", diagnostics, "comma list of diagnostics");
    cmd->add_option("--n-theta", n_theta, "winding flux grid size");
    cmd->add_option("--tol-imag-rel", tol_imag_rel,
                    "realness tolerance, relative to the spectral radius");
    cmd->add_option("--tol-imag-abs", tol_imag_abs,
                    "absolute realness tolerance (overrides relative)");
    cmd->add_option("--ipr-threshold", ipr_threshold,
                    "localized/extended IPR threshold (default 10/dim)");
    cmd->add_option("--flux-divisor", flux_divisor,
                    "winding flux divisor override (default L)");
  }

  DiagnosticsOptions resolve() const {
    DiagnosticsOptions o;
    o.diagnostics.clear();
    std::istringstream ss(diagnostics);
    std::string item;
    while (std::getline(ss, item, ','))
      o.diagnostics.insert(diagnostic_from_string(KeyValueConfig::trim(item)));
    o.n_theta = n_theta;
    o.tol_imag_rel = tol_imag_rel;
    o.tol_imag_abs = tol_imag_abs;
    o.ipr_threshold = ipr_threshold;
    o.flux_divisor = flux_divisor;
    return o;
  }
};

void write_or_print(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-")
    std::cout << content;
  else
    atomic_write_file(path, content);
}

std::string opt_str(const std::optional<double>& v) {
  return v ? format_double(*v) : "n/a";
}

int run_spectrum(const SpecArgs& spec_args, const std::string& out,
                 const std::string& vectors_out) {
  const ModelSpec spec = spec_args.resolve();
  const auto dec =
      decompose(build_hamiltonian(spec), {.compute_left = false});
  write_or_print(out, spectrum_csv(dec));
  if (!vectors_out.empty()) write_vectors_blob(vectors_out, dec.right);
  return 0;
}

int run_diagnose(const SpecArgs& spec_args, const DiagArgs& diag_args,
                 const std::string& states_out, bool as_json) {
  const ModelSpec spec = spec_args.resolve();
  const DiagnosticsOptions opts = diag_args.resolve();
  const DiagnosticsRecord rec = diagnose_point(spec, opts);
  if (as_json) {
    std::cout << detail::record_to_json(rec).dump(2) << "\n";
  } else {
    std::cout << "spec: " << to_string(spec.kind) << " L=" << spec.L
              << " alpha=" << spec.alpha.p << "/" << spec.alpha.q << "\n";
    if (rec.realness)
      std::cout << "e_imag_max = " << format_double(rec.realness->e_imag_max)
                << "\ne_imag_min = " << format_double(rec.realness->e_imag_min)
                << "\nrho = " << format_double(rec.realness->rho) << "\n";
    if (rec.localization)
      std::cout << "ipr_max = " << format_double(rec.localization->ipr_max)
                << "\nipr_min = " << format_double(rec.localization->ipr_min)
                << "\neta = " << format_double(rec.localization->eta) << "\n";
    std::cout << "w1 = " << (rec.w1 ? std::to_string(*rec.w1) : "n/a")
              << "\nw2 = " << (rec.w2 ? std::to_string(*rec.w2) : "n/a")
              << "\nbase1 = " << opt_str(rec.base1)
              << "\nbase2 = " << opt_str(rec.base2)
              << "\nentropy = " << opt_str(rec.entropy)
              << "\ng_mean = " << opt_str(rec.g_mean) << "\ntol_imag = "
              << format_double(rec.tol_imag) << "\nipr_threshold = "
              << format_double(rec.ipr_threshold) << "\n";
  }
  if (!states_out.empty()) {
    const auto dec =
        decompose(build_hamiltonian(spec), {.compute_left = false});
    atomic_write_file(states_out,
                      states_csv(dec, profile(dec), rec.ipr_threshold));
  }
  return 0;
}

int run_sweep_cmd(const std::string& plan_file,
                  const std::vector<std::string>& overrides, bool quiet) {
  KeyValueConfig cfg = KeyValueConfig::parse_file(plan_file);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw PlanError("--set expects key=value, got '" + kv + "'");
    cfg.set(KeyValueConfig::trim(kv.substr(0, eq)),
            KeyValueConfig::trim(kv.substr(eq + 1)));
  }
  const SweepPlan plan = SweepPlan::from_config(cfg);
  SweepProgress progress;
  if (!quiet) {
    progress = [](long done, long total) {
      if (done % 5 == 0 || done == total)
        std::fprintf(stderr, "sweep: %ld/%ld\n", done, total);
    };
  }
  const SweepResult result = run_sweep(plan, progress);
  if (!quiet)
    std::fprintf(stderr, "sweep: wrote %zu rows%s\n", result.records.size(),
                 plan.output.empty() ? " (in-memory)" : "");
  return result.any_errors ? 3 : 0;
}

int run_es_scan(const SpecArgs& spec_args, long cutoffs, long a_first,
                long a_last, const std::string& out) {
  const ModelSpec spec = spec_args.resolve();
  const auto dec = decompose(build_hamiltonian(spec));
  SiteRange range = half_chain(spec.L);
  if (a_first > 0) range.first = a_first;
  if (a_last > 0) range.last = a_last;
  const auto scan = es_vs_energy_scan(dec, range, cutoffs);
  write_or_print(out, es_scan_csv(scan));
  return 0;
}

int run_winding_trace(const SpecArgs& spec_args, double base, long n_theta,
                      long flux_divisor, const std::string& out) {
  const ModelSpec spec = spec_args.resolve();
  WindingOptions opts;
  opts.flux_divisor = flux_divisor;
  const auto scan = winding_scan(spec, base, n_theta, opts);
  std::string csv = winding_trace_csv(scan);
  csv.insert(csv.find('\n') + 1,
             "# base=" + format_double(base) + " w=" + std::to_string(scan.w) +
                 " max_step=" + format_double(scan.max_step_phase) + "\n");
  write_or_print(out, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"non-Abelian non-Hermitian AAH lattice laboratory"};
  app.require_subcommand(1);

  SpecArgs spec_args;
  DiagArgs diag_args;
  std::string out, vectors_out, states_out, plan_file;
  std::vector<std::string> overrides;
  bool as_json = false, quiet = false;
  long cutoffs = 64, a_first = 0, a_last = 0, n_theta = 256, flux_divisor = 0;
  double base = 0;
  unsigned long long seed = 1;
  long n_specs = 100;

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalue CSV for one spec");
  spec_args.register_options(spectrum);
  spectrum->add_option("--out", out, "output path (default stdout)");
  spectrum->add_option("--vectors", vectors_out,
                       "also dump right eigenvectors (binary blob)");

  auto* diagnose =
      app.add_subcommand("diagnose", "all scalar diagnostics for one spec");
  spec_args.register_options(diagnose);
  diag_args.register_options(diagnose);
  diagnose->add_flag("--json", as_json, "emit the record as JSON");
  diagnose->add_option("--states", states_out, "per-state CSV export path");

  auto* sweep = app.add_subcommand("sweep", "run a parameter-sweep plan");
  sweep->add_option("plan", plan_file, "plan file (key = value)")->required();
  sweep->add_option("--set", overrides, "override a plan key, key=value");
  sweep->add_flag("--quiet", quiet, "suppress progress output");

  auto* es = app.add_subcommand("es-scan",
                                "entanglement spectrum vs filling cutoff");
  spec_args.register_options(es);
  es->add_option("--cutoffs", cutoffs, "number of Re E cutoffs");
  es->add_option("--subsystem-first", a_first, "first site of A (default 1)");
  es->add_option("--subsystem-last", a_last, "last site of A (default L/2)");
  es->add_option("--out", out, "output path (default stdout)");

  auto* wt = app.add_subcommand("winding-trace",
                                "accumulated det phase over the flux period");
  spec_args.register_options(wt);
  wt->add_option("--base", base, "base energy")->required();
  wt->add_option("--n-theta", n_theta, "initial flux grid size");
  wt->add_option("--flux-divisor", flux_divisor, "flux divisor override");
  wt->add_option("--out", out, "output path (default stdout)");

  auto* validate =
      app.add_subcommand("validate", "oracle/invariant battery on small L");
  validate->add_option("--seed", seed, "random spec seed");
  validate->add_option("--specs", n_specs, "number of random specs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (spectrum->parsed()) return run_spectrum(spec_args, out, vectors_out);
    if (diagnose->parsed())
      return run_diagnose(spec_args, diag_args, states_out, as_json);
    if (sweep->parsed()) return run_sweep_cmd(plan_file, overrides, quiet);
    if (es->parsed())
      return run_es_scan(spec_args, cutoffs, a_first, a_last, out);
    if (wt->parsed())
      return run_winding_trace(spec_args, base, n_theta, flux_divisor, out);
    if (validate->parsed()) {
      const auto report = run_validation(seed, n_specs);
      const int failures = print_validation(report, std::cout);
      return failures == 0 ? 0 : 1;
    }
  } catch (const InvalidSpec& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const PlanError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
