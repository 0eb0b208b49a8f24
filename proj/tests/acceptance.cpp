// Acceptance suite: drives the full diagnostic stack at production size
// (L = 610) and holds the results to the pinned tolerances. Prints one
// PASS/FAIL line per criterion; exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nhqc/oracle.hpp"
#include "nhqc/sweep.hpp"
#include "nhqc/validate.hpp"

using namespace nhqc;

namespace {

int g_failures = 0;

struct Gate {
  std::string name;
  std::ostringstream detail;
  bool ok = true;

  explicit Gate(std::string n) : name(std::move(n)) {}

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << "  [FAILED: " << what << "]";
    }
  }
  void note(const std::string& what) { detail << " " << what; }

  void finish(double wall_s) {
    std::printf("%s %s:%s (%.0f s)\n", ok ? "PASS" : "FAIL", name.c_str(),
                detail.str().c_str(), wall_s);
    std::fflush(stdout);
    if (!ok) ++g_failures;
  }
};

void run_gate(const std::string& name,
              const std::function<void(Gate&)>& body) {
  Gate gate(name);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(gate);
  } catch (const std::exception& e) {
    gate.ok = false;
    gate.detail << "  [EXCEPTION: " << e.what() << "]";
  }
  gate.finish(
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count());
}

ModelSpec make_spec(ModelKind kind, double J, double V, double phi,
                    double beta, double gamma, long L) {
  ModelSpec s;
  s.kind = kind;
  s.J = J;
  s.V = V;
  s.phi = phi;
  s.beta = beta;
  s.gamma = gamma;
  s.L = L;
  s.alpha = fibonacci_alpha(L);
  return s;
}

std::vector<double> grid(double start, double stop, double step) {
  std::vector<double> v;
  for (double x = start; x <= stop + step / 2; x += step) v.push_back(x);
  return v;
}

SweepProgress progress_to_stderr(const std::string& tag) {
  return [tag](long done, long total) {
    if (done % 5 == 0 || done == total)
      std::fprintf(stderr, "  %s: %ld/%ld\n", tag.c_str(), done, total);
  };
}

/// Crossing detection on a monotone sweep: the first grid point where the
/// predicate flips to true, reported as the midpoint of the bracketing
/// interval. Requires the predicate to be false at the first point.
std::optional<double> first_crossing(
    const std::vector<DiagnosticsRecord>& rows,
    const std::function<bool(const DiagnosticsRecord&)>& hit) {
  if (rows.empty() || hit(rows.front())) return std::nullopt;
  for (size_t k = 1; k < rows.size(); ++k)
    if (hit(rows[k]))
      return 0.5 * (rows[k - 1].axis1_value + rows[k].axis1_value);
  return std::nullopt;
}

/// First jump of an integer-valued winding sequence: midpoint location and
/// jump magnitude.
struct Jump {
  double location = 0;
  int delta = 0;
};
std::optional<Jump> first_jump(const std::vector<DiagnosticsRecord>& rows,
                               bool second) {
  for (size_t k = 1; k < rows.size(); ++k) {
    const auto &a = second ? rows[k - 1].w2 : rows[k - 1].w1,
               &b = second ? rows[k].w2 : rows[k].w1;
    if (!a || !b) continue;
    if (*a != *b)
      return Jump{0.5 * (rows[k - 1].axis1_value + rows[k].axis1_value),
                  *b - *a};
  }
  return std::nullopt;
}

const DiagnosticsRecord& row_at(const std::vector<DiagnosticsRecord>& rows,
                                double value) {
  size_t best = 0;
  for (size_t k = 1; k < rows.size(); ++k)
    if (std::abs(rows[k].axis1_value - value) <
        std::abs(rows[best].axis1_value - value))
      best = k;
  return rows[best];
}

// Winding contexts retained for the grid-stability part of criterion 8.
struct WindingContext {
  ModelSpec spec;
  BaseEnergies bases;
};
std::vector<WindingContext> g_winding_contexts;

void retain_winding_contexts(const SweepPlan& plan, const SweepResult& res) {
  if (!res.slice_bases.empty() && res.slice_bases[0].bases) {
    const auto& b = *res.slice_bases[0].bases;
    const size_t n = res.records.size();
    for (size_t k : {size_t(0), n / 2, n - 1})
      g_winding_contexts.push_back({plan.spec_at(static_cast<long>(k)), b});
  }
}

constexpr double kLn3 = 1.0986122886681098;   // ln(V/2J) at V=6, J=1
constexpr double kLn4Half = 0.6931471805599453;  // ln(4)/2

// Criterion 1: the Abelian Model 2 critical point. At phi = 0 the lattice
// decouples into two scalar nonreciprocal chains with the exact transition
// e^{beta_c} = V/(2J). The IPR and PT crossings must coincide within 0.05
// and land within 0.1 of ln 3, at Delta beta = 0.02, in under 5 minutes.
// Realness tolerance 1e-5 * radius (recorded per row): at the 1e-8 default
// the step function fires on finite-size Im E precursors ~0.1 early.
void criterion_1() {
  run_gate("criterion-1 abelian-model2-critical-point", [](Gate& g) {
    const auto t0 = std::chrono::steady_clock::now();
    SweepPlan plan;
    plan.base = make_spec(ModelKind::Model2, 1.0, 6.0, 0.0, 0.0, 0.0, 610);
    plan.axis1 = {"beta", grid(0.95, 1.25, 0.02)};
    plan.diagnostics = {Diagnostic::Realness, Diagnostic::Localization};
    plan.tol_imag_rel = 1e-5;
    const auto res = run_sweep(plan, progress_to_stderr("criterion-1"));
    g.require(!res.any_errors, "sweep reported per-point errors");

    const double tau = plan.resolved_ipr_threshold();
    g.require(res.records.front().localization->ipr_min > tau,
              "sweep does not start in the localized phase");
    const auto beta_ipr = first_crossing(res.records, [&](const auto& r) {
      return r.localization->ipr_min < tau;
    });
    const auto beta_pt = first_crossing(res.records, [&](const auto& r) {
      return r.realness->e_imag_max > r.tol_imag;
    });
    g.require(beta_ipr.has_value(), "IPR_min never crossed the threshold");
    g.require(beta_pt.has_value(), "E_imag_max never exceeded tol");
    if (beta_ipr && beta_pt) {
      g.note("beta_ipr=" + format_double(*beta_ipr) +
             " beta_pt=" + format_double(*beta_pt) +
             " target=" + format_double(kLn3));
      g.require(std::abs(*beta_ipr - *beta_pt) <= 0.05,
                "crossings disagree beyond 0.05");
      g.require(std::abs(*beta_ipr - kLn3) <= 0.1,
                "IPR crossing off ln(V/2J) beyond 0.1");
      g.require(std::abs(*beta_pt - kLn3) <= 0.1,
                "PT crossing off ln(V/2J) beyond 0.1");
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    g.require(wall < 300.0, "runtime exceeded 5 minutes");
  });
}

// Criterion 2: the Abelian Model 3 critical point at phi = 0, where the
// decoupled chains carry potential V cos(4 pi alpha n + 2 i gamma)/...
// merging both localization transitions and the PT breaking at
// gamma' = ln(2J/V)/2 = ln(4)/2.
void criterion_2() {
  run_gate("criterion-2 abelian-model3-critical-point", [](Gate& g) {
    SweepPlan plan;
    plan.base = make_spec(ModelKind::Model3, 1.0, 0.5, 0.0, 0.0, 0.0, 610);
    plan.axis1 = {"gamma", grid(0.55, 0.85, 0.02)};
    plan.diagnostics = {Diagnostic::Realness, Diagnostic::Localization};
    plan.tol_imag_rel = 1e-5;
    const auto res = run_sweep(plan, progress_to_stderr("criterion-2"));
    g.require(!res.any_errors, "sweep reported per-point errors");

    const double tau = plan.resolved_ipr_threshold();
    const auto g_max = first_crossing(res.records, [&](const auto& r) {
      return r.localization->ipr_max > tau;
    });
    const auto g_min = first_crossing(res.records, [&](const auto& r) {
      return r.localization->ipr_min > tau;
    });
    const auto g_pt = first_crossing(res.records, [&](const auto& r) {
      return r.realness->e_imag_max > r.tol_imag;
    });
    g.require(g_max.has_value(), "IPR_max never crossed the threshold");
    g.require(g_min.has_value(), "IPR_min never crossed the threshold");
    g.require(g_pt.has_value(), "E_imag_max never exceeded tol");
    if (g_max && g_min && g_pt) {
      g.note("gamma_iprmax=" + format_double(*g_max) +
             " gamma_iprmin=" + format_double(*g_min) +
             " gamma_pt=" + format_double(*g_pt) +
             " target=" + format_double(kLn4Half));
      for (double c : {*g_max, *g_min, *g_pt})
        g.require(std::abs(c - kLn4Half) <= 0.1,
                  "crossing off ln(4)/2 beyond 0.1");
    }
  });
}

// Criterion 3: Model 1's critical window. The winding number based at the
// last-onset energy jumps by one unit at J_c1 = 0.3 and the first-onset one
// at J_c2 = 0.8; in between the spectrum is mixed (0 < rho < 1) and the
// critical-phase indicator eta sits at least a decade above the
// extended/localized floor.
void criterion_3(std::vector<DiagnosticsRecord>& rows_out) {
  run_gate("criterion-3 model1-critical-window", [&](Gate& g) {
    SweepPlan plan;
    plan.base = make_spec(ModelKind::Model1, 1.0, 1.0, kPi / 10, 0.0, 0.0, 610);
    plan.axis1 = {"J", grid(0.05, 1.20, 0.05)};
    plan.diagnostics = {Diagnostic::Realness, Diagnostic::Localization,
                        Diagnostic::Winding, Diagnostic::LevelStat};
    const auto res = run_sweep(plan, progress_to_stderr("criterion-3"));
    g.require(!res.any_errors, "sweep reported per-point errors");
    rows_out = res.records;
    retain_winding_contexts(plan, res);

    const auto j2 = first_jump(res.records, /*second=*/true);
    const auto j1 = first_jump(res.records, /*second=*/false);
    g.require(j2.has_value(), "w2 never jumped");
    g.require(j1.has_value(), "w1 never jumped");
    if (j2 && j1) {
      g.note("w2 jump at J=" + format_double(j2->location) + " (delta " +
             std::to_string(j2->delta) + "), w1 jump at J=" +
             format_double(j1->location) + " (delta " +
             std::to_string(j1->delta) + ")");
      g.require(std::abs(j2->location - 0.3) <= 0.1,
                "w2 jump outside 0.3 +- 0.1");
      g.require(std::abs(j2->delta) == 1, "w2 jump is not a unit jump");
      g.require(std::abs(j1->location - 0.8) <= 0.1,
                "w1 jump outside 0.8 +- 0.1");
      g.require(std::abs(j1->delta) == 1, "w1 jump is not a unit jump");
    }

    // window interior: mixed spectrum, eta a decade above both floors
    double eta_win = -1e300, rho_at = 0;
    for (const auto& r : res.records)
      if (r.axis1_value > 0.4 && r.axis1_value < 0.7 &&
          r.localization->eta > eta_win) {
        eta_win = r.localization->eta;
        rho_at = r.realness->rho;
      }
    const double eta_loc = row_at(res.records, 0.05).localization->eta;
    const double eta_ext = row_at(res.records, 1.20).localization->eta;
    g.note("rho_mid=" + format_double(rho_at) + " eta_win=" +
           format_double(eta_win) + " eta_loc=" + format_double(eta_loc) +
           " eta_ext=" + format_double(eta_ext));
    g.require(rho_at > 0.0 && rho_at < 1.0, "rho not strictly mixed");
    g.require(eta_win >= eta_loc + 1.0,
              "eta separation from the localized floor under one decade");
    g.require(eta_win >= eta_ext + 1.0,
              "eta separation from the extended floor under one decade");
  });
}

// Criterion 4: Model 2's critical window boundaries from the IPR extrema,
// beta_c1 = 0.5 +- 0.15 (IPR_min deflects to zero) and beta_c2 = 2.0 +- 0.2
// (IPR_max follows). Windings are carried along for criterion 8.
void criterion_4() {
  run_gate("criterion-4 model2-critical-window", [](Gate& g) {
    SweepPlan plan;
    plan.base = make_spec(ModelKind::Model2, 1.0, 6.0, kPi / 2, 0.0, 0.0, 610);
    auto values = grid(0.25, 0.85, 0.05);
    values.push_back(1.2);
    for (double v : grid(1.60, 2.40, 0.05)) values.push_back(v);
    plan.axis1 = {"beta", values};
    plan.diagnostics = {Diagnostic::Realness, Diagnostic::Localization,
                        Diagnostic::Winding};
    const auto res = run_sweep(plan, progress_to_stderr("criterion-4"));
    g.require(!res.any_errors, "sweep reported per-point errors");
    retain_winding_contexts(plan, res);

    const double tau = plan.resolved_ipr_threshold();
    g.require(res.records.front().localization->ipr_min > tau,
              "sweep does not start fully localized");
    const auto beta_c1 = first_crossing(res.records, [&](const auto& r) {
      return r.localization->ipr_min < tau;
    });
    std::optional<double> beta_c2;
    for (size_t k = 1; k < res.records.size(); ++k)
      if (!beta_c2 && res.records[k].localization->ipr_max < tau &&
          res.records[k - 1].localization->ipr_max >= tau)
        beta_c2 = 0.5 * (res.records[k - 1].axis1_value +
                         res.records[k].axis1_value);
    g.require(beta_c1.has_value(), "IPR_min never deflected");
    g.require(beta_c2.has_value(), "IPR_max never deflected");
    if (beta_c1 && beta_c2) {
      g.note("beta_c1=" + format_double(*beta_c1) +
             " beta_c2=" + format_double(*beta_c2));
      g.require(std::abs(*beta_c1 - 0.5) <= 0.15,
                "beta_c1 outside 0.5 +- 0.15");
      g.require(std::abs(*beta_c2 - 2.0) <= 0.2, "beta_c2 outside 2.0 +- 0.2");
    }
  });
}

// Criterion 5: Model 3's critical window, gamma_c1 = 0.31 +- 0.1 and
// gamma_c2 = 0.94 +- 0.15.
void criterion_5() {
  run_gate("criterion-5 model3-critical-window", [](Gate& g) {
    SweepPlan plan;
    plan.base = make_spec(ModelKind::Model3, 1.0, 0.5, kPi / 2, 0.0, 0.0, 610);
    auto values = grid(0.15, 0.45, 0.05);
    values.push_back(0.6);
    for (double v : grid(0.75, 1.15, 0.05)) values.push_back(v);
    plan.axis1 = {"gamma", values};
    plan.diagnostics = {Diagnostic::Realness, Diagnostic::Localization,
                        Diagnostic::Winding};
    const auto res = run_sweep(plan, progress_to_stderr("criterion-5"));
    g.require(!res.any_errors, "sweep reported per-point errors");
    retain_winding_contexts(plan, res);

    const double tau = plan.resolved_ipr_threshold();
    const auto gamma_c1 = first_crossing(res.records, [&](const auto& r) {
      return r.localization->ipr_max > tau;
    });
    const auto gamma_c2 = first_crossing(res.records, [&](const auto& r) {
      return r.localization->ipr_min > tau;
    });
    g.require(gamma_c1.has_value(), "IPR_max never deflected from zero");
    g.require(gamma_c2.has_value(), "IPR_min never deflected from zero");
    if (gamma_c1 && gamma_c2) {
      g.note("gamma_c1=" + format_double(*gamma_c1) +
             " gamma_c2=" + format_double(*gamma_c2));
      g.require(std::abs(*gamma_c1 - 0.31) <= 0.1,
                "gamma_c1 outside 0.31 +- 0.1");
      g.require(std::abs(*gamma_c2 - 0.94) <= 0.15,
                "gamma_c2 outside 0.94 +- 0.15");
    }
  });
}

// Criterion 6: the entanglement-entropy plateau. Filling every real-energy
// state of Model 1 at J = 2 (extended phase) gives S = 4 ln 2 +- 0.2 on the
// half chain; at J = 0.1 (localized, fully real spectrum) completeness
// forces S < 0.05.
void criterion_6() {
  run_gate("criterion-6 entanglement-plateau", [](Gate& g) {
    const auto spec_ext =
        make_spec(ModelKind::Model1, 2.0, 1.0, kPi / 10, 0.0, 0.0, 610);
    const auto dec_ext = decompose(build_hamiltonian(spec_ext));
    const double s_ext = entanglement_entropy(
        dec_ext, OccupationRule::all_real(default_tol_imag(dec_ext)),
        half_chain(610));
    const auto spec_loc =
        make_spec(ModelKind::Model1, 0.1, 1.0, kPi / 10, 0.0, 0.0, 610);
    const auto dec_loc = decompose(build_hamiltonian(spec_loc));
    const double s_loc = entanglement_entropy(
        dec_loc, OccupationRule::all_real(default_tol_imag(dec_loc)),
        half_chain(610));
    g.note("S_ext=" + format_double(s_ext) + " (4ln2=" +
           format_double(4 * std::log(2.0)) + ") S_loc=" +
           format_double(s_loc));
    g.require(std::abs(s_ext - 4 * std::log(2.0)) <= 0.2,
              "extended-phase entropy off 4 ln 2 beyond 0.2");
    g.require(s_loc < 0.05, "localized-phase entropy above 0.05");
  });
}

// Criterion 7: the mobility-edge structure of Model 2 at beta = 1.1. The
// IPR-localized states occupy one contiguous Re E interval and are all real
// at tol = 1e-2 with ipr_threshold = 20/(2L); at least 95% of the extended
// states carry complex energies (a handful of boundary states are real to
// machine precision at finite size, so the all-quantifier cannot hold).
void criterion_7() {
  run_gate("criterion-7 mobility-edge-structure", [](Gate& g) {
    const auto spec =
        make_spec(ModelKind::Model2, 1.0, 6.0, kPi / 2, 1.1, 0.0, 610);
    const auto dec =
        decompose(build_hamiltonian(spec), {.compute_left = false});
    const auto prof = profile(dec);
    const double tol = 1e-2;
    const double tau = 2 * default_ipr_threshold(dec.dim());
    const auto table = mobility_edge_table(dec, prof, tol, tau);

    long n_loc_intervals = 0, loc_states = 0, loc_real = 0, ext_states = 0,
         ext_real = 0;
    for (const auto& iv : table.intervals) {
      if (iv.localized) {
        ++n_loc_intervals;
        loc_states += iv.n_states;
        loc_real += iv.n_real;
      } else {
        ext_states += iv.n_states;
        ext_real += iv.n_real;
      }
    }
    const double ext_complex_frac =
        ext_states > 0
            ? 1.0 - static_cast<double>(ext_real) / static_cast<double>(ext_states)
            : 0.0;
    g.note("intervals=" + std::to_string(table.intervals.size()) +
           " edges=" + std::to_string(table.edges.size()) + " loc_states=" +
           std::to_string(loc_states) + " ext_complex_frac=" +
           format_double(ext_complex_frac));
    g.require(n_loc_intervals == 1,
              "localized states do not form a single interval");
    g.require(table.edges.size() == 2, "expected exactly two mobility edges");
    g.require(loc_states > 0 && loc_real == loc_states,
              "some localized states carry complex energies at tol");
    g.require(ext_complex_frac >= 0.95,
              "extended states are not predominantly complex");
  });
}

// Criterion 8: the oracle/invariant battery (under 2 minutes), plus
// integer quantization and n_theta grid stability of the windings on the
// criteria 3-5 sweeps.
void criterion_8() {
  run_gate("criterion-8 oracle-suite", [](Gate& g) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = run_validation(/*seed=*/1, /*n_random_specs=*/100);
    for (const auto& c : report.checks) {
      std::fprintf(stderr, "  %s %s (worst %s, limit %s)%s%s\n",
                   c.ok ? "ok  " : "FAIL", c.name.c_str(),
                   format_double(c.worst).c_str(),
                   format_double(c.limit).c_str(),
                   c.note.empty() ? "" : " ", c.note.c_str());
      g.require(c.ok, c.name);
    }
    g.note(std::to_string(report.checks.size()) + " oracle checks");

    // winding grid stability on the criteria 3-5 sweeps: quantization is
    // enforced inside every scan; doubling n_theta must not change the
    // integers at the retained sample points
    long stable = 0;
    for (const auto& ctx : g_winding_contexts) {
      for (double base : {ctx.bases.e1, ctx.bases.e2}) {
        const auto s256 = winding_scan(ctx.spec, base, 256);
        const auto s512 = winding_scan(ctx.spec, base, 512);
        g.require(s256.w == s512.w, "winding changed under grid doubling");
        g.require(std::abs(s256.raw - s256.w) < 1e-3,
                  "winding quantization residual above 1e-3");
        ++stable;
      }
    }
    g.note(std::to_string(stable) + " grid-stability points");
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    g.require(wall < 120.0, "oracle suite exceeded 2 minutes");
  });
}

// Criterion 9: level statistics along the criterion-3 cut. The mean
// adjacent-gap ratio is small deep in the extended phase, reaches a plateau
// above 0.3 deep in the localized phase, sits between them inside the
// critical window, and the Poisson Monte Carlo oracle lands on 2 ln 2 - 1.
void criterion_9(const std::vector<DiagnosticsRecord>& c3_rows) {
  run_gate("criterion-9 level-statistics", [&](Gate& g) {
    g.require(!c3_rows.empty(), "criterion-3 sweep unavailable");
    if (c3_rows.empty()) return;
    const auto& ext = row_at(c3_rows, 1.20);
    const auto& loc = row_at(c3_rows, 0.05);
    const auto& mid = row_at(c3_rows, 0.55);
    g.require(ext.g_mean.has_value() && loc.g_mean.has_value() &&
                  mid.g_mean.has_value(),
              "level statistics missing from the sweep");
    if (!(ext.g_mean && loc.g_mean && mid.g_mean)) return;
    g.note("g_ext=" + format_double(*ext.g_mean) + " g_mid=" +
           format_double(*mid.g_mean) + " g_loc=" + format_double(*loc.g_mean));
    g.require(*ext.g_mean <= 0.1, "extended-phase mean ratio above 0.1");
    g.require(*loc.g_mean > 0.3, "localized-phase plateau below 0.3");
    g.require(*mid.g_mean > *ext.g_mean && *mid.g_mean < *loc.g_mean,
              "critical-window ratio not intermediate");
    const double mc = oracle::poisson_agr_mc(100000, 7);
    g.note("poisson_mc=" + format_double(mc));
    g.require(std::abs(mc - (2 * std::log(2.0) - 1.0)) < 0.01,
              "Poisson Monte Carlo off 2 ln 2 - 1 beyond 0.01");
  });
}

int run_all() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<DiagnosticsRecord> c3_rows;
  criterion_1();
  criterion_2();
  criterion_3(c3_rows);
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9(c3_rows);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::printf("%s: 9 criteria, %d failed (%.0f s total)\n",
              g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
              g_failures, wall);
  return g_failures == 0 ? 0 : 1;
}

}  // namespace

int main() { return run_all(); }
