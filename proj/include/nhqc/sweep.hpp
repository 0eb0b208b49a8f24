#ifndef NHQC_SWEEP_HPP
#define NHQC_SWEEP_HPP

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nhqc/config.hpp"
#include "nhqc/entanglement.hpp"
#include "nhqc/io.hpp"
#include "nhqc/level_stats.hpp"
#include "nhqc/localization.hpp"
#include "nhqc/model.hpp"
#include "nhqc/spectral.hpp"
#include "nhqc/topology.hpp"
#include "nhqc/types.hpp"

namespace nhqc {

enum class Diagnostic { Realness, Localization, Winding, Entanglement, LevelStat };

inline std::string to_string(Diagnostic d) {
  switch (d) {
    case Diagnostic::Realness: return "realness";
    case Diagnostic::Localization: return "localization";
    case Diagnostic::Winding: return "winding";
    case Diagnostic::Entanglement: return "entanglement";
    case Diagnostic::LevelStat: return "levelstat";
  }
  return "?";
}

inline Diagnostic diagnostic_from_string(const std::string& s) {
  if (s == "realness") return Diagnostic::Realness;
  if (s == "localization") return Diagnostic::Localization;
  if (s == "winding") return Diagnostic::Winding;
  if (s == "entanglement") return Diagnostic::Entanglement;
  if (s == "levelstat") return Diagnostic::LevelStat;
  throw PlanError("unknown diagnostic '" + s + "'");
}

struct Axis {
  std::string param;
  std::vector<double> values;
};

struct SweepPlan {
  ModelSpec base;
  Axis axis1;
  std::optional<Axis> axis2;
  std::set<Diagnostic> diagnostics = {Diagnostic::Realness,
                                      Diagnostic::Localization};
  std::string output;             // CSV path; empty = in-memory only
  long checkpoint_interval = 25;  // rows between checkpoint flushes
  long n_theta = 256;
  double tol_imag_rel = 1e-8;     // tol_imag = rel * spectral radius
  double tol_imag_abs = 0;        // > 0 overrides the relative rule
  double ipr_threshold = 0;       // 0 = 10/dim
  long workers = 0;               // 0 = hardware concurrency
  long flux_divisor = 0;          // winding flux divisor override
  bool allow_2d_winding = false;  // winding on 2D grids is opt-in
  unsigned long long seed = 0;
  double memory_budget_gb = 8.0;

  long n1() const { return static_cast<long>(axis1.values.size()); }
  long n2() const {
    return axis2 ? static_cast<long>(axis2->values.size()) : 1;
  }
  long grid_size() const { return n1() * n2(); }

  double resolved_ipr_threshold() const {
    return ipr_threshold > 0 ? ipr_threshold
                             : default_ipr_threshold(base.dim());
  }
  long resolved_workers() const {
    if (workers > 0) return workers;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<long>(hc) : 1;
  }

  ModelSpec spec_at(long g) const {
    ModelSpec s = base.with(axis1.param, axis1.values[g % n1()]);
    if (axis2) s = s.with(axis2->param, axis2->values[g / n1()]);
    return s;
  }

  void validate() const {
    base.validate();
    if (axis1.param.empty() || axis1.values.empty())
      throw PlanError("axis1 needs a param name and a nonempty value list");
    if (!ModelSpec::is_sweepable(axis1.param))
      throw PlanError("axis1.param '" + axis1.param + "' is not sweepable");
    for (double v : axis1.values)
      if (!std::isfinite(v))
        throw PlanError("axis1 contains a non-finite value");
    if (axis2) {
      if (!ModelSpec::is_sweepable(axis2->param))
        throw PlanError("axis2.param '" + axis2->param + "' is not sweepable");
      if (axis2->values.empty()) throw PlanError("axis2 value list is empty");
      if (axis2->param == axis1.param)
        throw PlanError("axis1 and axis2 sweep the same parameter");
      for (double v : axis2->values)
        if (!std::isfinite(v))
          throw PlanError("axis2 contains a non-finite value");
    }
    if (checkpoint_interval < 1) throw PlanError("checkpoint_interval < 1");
    if (n_theta < 2) throw PlanError("n_theta < 2");
    if (axis2 && diagnostics.count(Diagnostic::Winding) && !allow_2d_winding)
      throw PlanError("winding on a 2D sweep multiplies the cost by n_theta "
                      "per point; set allow_2d_winding = true (and consider a "
                      "coarser grid)");
    const double dim = static_cast<double>(base.dim());
    const double bytes = static_cast<double>(resolved_workers()) * 5 * dim *
                         dim * sizeof(Complex);
    if (bytes > memory_budget_gb * 1e9)
      throw PlanError("estimated memory " + format_double(bytes / 1e9) +
                      " GB exceeds the budget of " +
                      format_double(memory_budget_gb) + " GB");
  }

  /// Canonical key=value form; also the checkpoint fingerprint source.
  KeyValueConfig to_config() const {
    KeyValueConfig cfg = base.to_config();
    cfg.set("axis1.param", axis1.param);
    cfg.set("axis1.values", join_values(axis1.values));
    if (axis2) {
      cfg.set("axis2.param", axis2->param);
      cfg.set("axis2.values", join_values(axis2->values));
    }
    std::string diag;
    for (Diagnostic d : diagnostics) {
      if (!diag.empty()) diag += ',';
      diag += to_string(d);
    }
    cfg.set("diagnostics", diag);
    // workers, checkpoint_interval, memory budget and the output path are
    // execution details: they shape neither row contents nor the checkpoint
    // fingerprint
    cfg.set("n_theta", std::to_string(n_theta));
    cfg.set("tol_imag_rel", format_double_exact(tol_imag_rel));
    if (tol_imag_abs > 0) cfg.set("tol_imag_abs", format_double_exact(tol_imag_abs));
    if (ipr_threshold > 0) cfg.set("ipr_threshold", format_double_exact(ipr_threshold));
    if (flux_divisor > 0) cfg.set("flux_divisor", std::to_string(flux_divisor));
    if (allow_2d_winding) cfg.set("allow_2d_winding", "true");
    cfg.set("seed", std::to_string(seed));
    return cfg;
  }

  static SweepPlan from_config(const KeyValueConfig& cfg) {
    SweepPlan p;
    p.base = ModelSpec::from_config(cfg, /*strict=*/false);
    p.axis1 = parse_axis(cfg, "axis1", /*required=*/true).value();
    p.axis2 = parse_axis(cfg, "axis2", /*required=*/false);
    if (cfg.has("diagnostics")) {
      p.diagnostics.clear();
      std::istringstream ss(cfg.get("diagnostics"));
      std::string item;
      while (std::getline(ss, item, ','))
        p.diagnostics.insert(diagnostic_from_string(KeyValueConfig::trim(item)));
    }
    p.output = cfg.get_or("output", "");
    p.checkpoint_interval = cfg.get_long_or("checkpoint_interval", 25);
    p.n_theta = cfg.get_long_or("n_theta", 256);
    p.tol_imag_rel = cfg.get_double_or("tol_imag_rel", 1e-8);
    p.tol_imag_abs = cfg.get_double_or("tol_imag_abs", 0);
    p.ipr_threshold = cfg.get_double_or("ipr_threshold", 0);
    p.workers = cfg.get_long_or("workers", 0);
    p.flux_divisor = cfg.get_long_or("flux_divisor", 0);
    if (cfg.has("allow_2d_winding")) {
      const std::string v = cfg.get("allow_2d_winding");
      if (v != "true" && v != "false" && v != "1" && v != "0")
        throw PlanError("allow_2d_winding must be true/false");
      p.allow_2d_winding = v == "true" || v == "1";
    }
    p.seed = static_cast<unsigned long long>(cfg.get_long_or("seed", 0));
    p.memory_budget_gb = cfg.get_double_or("memory_budget_gb", 8.0);
    cfg.reject_unused("plan");
    p.validate();
    return p;
  }

  static std::string join_values(const std::vector<double>& v) {
    std::string out;
    for (double x : v) {
      if (!out.empty()) out += ',';
      out += format_double_exact(x);
    }
    return out;
  }

  static std::optional<Axis> parse_axis(const KeyValueConfig& cfg,
                                        const std::string& name, bool required) {
    if (!cfg.has(name + ".param")) {
      if (required) throw PlanError("missing " + name + ".param");
      return std::nullopt;
    }
    Axis ax;
    ax.param = cfg.get(name + ".param");
    if (cfg.has(name + ".values")) {
      std::istringstream ss(cfg.get(name + ".values"));
      std::string item;
      while (std::getline(ss, item, ','))
        ax.values.push_back(std::stod(KeyValueConfig::trim(item)));
    } else {
      const double start = cfg.get_double(name + ".start");
      const double stop = cfg.get_double(name + ".stop");
      const double step = cfg.get_double(name + ".step");
      if (step <= 0) throw PlanError(name + ".step must be positive");
      for (double v = start; v <= stop + step / 2; v += step)
        ax.values.push_back(v);
    }
    return ax;
  }
};

struct LocalizationSummary {
  double ipr_max = 0, ipr_min = 0, ipr_avg = 0, npr_avg = 0, eta = 0;
};

/// All scalar diagnostics at one grid point. Diagnostics that were not
/// requested (or failed) stay disengaged, never zero-filled.
struct DiagnosticsRecord {
  double axis1_value = 0;
  std::optional<double> axis2_value;
  std::optional<SpectralRealness> realness;
  std::optional<LocalizationSummary> localization;
  std::optional<int> w1, w2;
  std::optional<double> base1, base2;
  std::optional<double> entropy;
  std::optional<double> g_mean;
  std::optional<long> agr_dropped;
  double tol_imag = 0;
  double ipr_threshold = 0;
  std::string error;
  double wall_ms = 0;  // provenance; excluded from the deterministic outputs
};

struct SliceBases {
  std::optional<BaseEnergies> bases;
  std::string error;
};

struct SweepResult {
  std::vector<DiagnosticsRecord> records;  // deterministic grid order
  std::vector<SliceBases> slice_bases;     // one per axis2 slice
  bool any_errors = false;
  bool resumed = false;
};

namespace detail {

using nlohmann::json;

inline json record_to_json(const DiagnosticsRecord& r) {
  json j;
  j["axis1_value"] = r.axis1_value;
  j["axis2_value"] = r.axis2_value ? json(*r.axis2_value) : json(nullptr);
  if (r.realness) {
    j["realness"] = {{"e_imag_max", r.realness->e_imag_max},
                     {"e_imag_min", r.realness->e_imag_min},
                     {"rho", r.realness->rho}};
  } else {
    j["realness"] = nullptr;
  }
  if (r.localization) {
    j["localization"] = {{"ipr_max", r.localization->ipr_max},
                         {"ipr_min", r.localization->ipr_min},
                         {"ipr_avg", r.localization->ipr_avg},
                         {"npr_avg", r.localization->npr_avg},
                         {"eta", r.localization->eta}};
  } else {
    j["localization"] = nullptr;
  }
  j["w1"] = r.w1 ? json(*r.w1) : json(nullptr);
  j["w2"] = r.w2 ? json(*r.w2) : json(nullptr);
  j["base1"] = r.base1 ? json(*r.base1) : json(nullptr);
  j["base2"] = r.base2 ? json(*r.base2) : json(nullptr);
  j["entropy"] = r.entropy ? json(*r.entropy) : json(nullptr);
  j["g_mean"] = r.g_mean ? json(*r.g_mean) : json(nullptr);
  j["agr_dropped"] = r.agr_dropped ? json(*r.agr_dropped) : json(nullptr);
  j["tol_imag"] = r.tol_imag;
  j["ipr_threshold"] = r.ipr_threshold;
  j["error"] = r.error;
  return j;
}

inline DiagnosticsRecord record_from_json(const json& j) {
  DiagnosticsRecord r;
  r.axis1_value = j.at("axis1_value").get<double>();
  if (!j.at("axis2_value").is_null())
    r.axis2_value = j.at("axis2_value").get<double>();
  if (!j.at("realness").is_null()) {
    SpectralRealness s;
    s.e_imag_max = j["realness"]["e_imag_max"].get<double>();
    s.e_imag_min = j["realness"]["e_imag_min"].get<double>();
    s.rho = j["realness"]["rho"].get<double>();
    s.tol_imag = j.at("tol_imag").get<double>();
    r.realness = s;
  }
  if (!j.at("localization").is_null()) {
    LocalizationSummary s;
    s.ipr_max = j["localization"]["ipr_max"].get<double>();
    s.ipr_min = j["localization"]["ipr_min"].get<double>();
    s.ipr_avg = j["localization"]["ipr_avg"].get<double>();
    s.npr_avg = j["localization"]["npr_avg"].get<double>();
    s.eta = j["localization"]["eta"].get<double>();
    r.localization = s;
  }
  if (!j.at("w1").is_null()) r.w1 = j["w1"].get<int>();
  if (!j.at("w2").is_null()) r.w2 = j["w2"].get<int>();
  if (!j.at("base1").is_null()) r.base1 = j["base1"].get<double>();
  if (!j.at("base2").is_null()) r.base2 = j["base2"].get<double>();
  if (!j.at("entropy").is_null()) r.entropy = j["entropy"].get<double>();
  if (!j.at("g_mean").is_null()) r.g_mean = j["g_mean"].get<double>();
  if (!j.at("agr_dropped").is_null())
    r.agr_dropped = j["agr_dropped"].get<long>();
  r.tol_imag = j.at("tol_imag").get<double>();
  r.ipr_threshold = j.at("ipr_threshold").get<double>();
  r.error = j.at("error").get<std::string>();
  return r;
}

inline std::string opt_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : "";
}

inline std::string record_csv_row(const SweepPlan& plan,
                                  const DiagnosticsRecord& r) {
  std::ostringstream out;
  out << plan.axis1.param << ',' << format_double(r.axis1_value) << ',';
  out << (plan.axis2 ? plan.axis2->param : "") << ','
      << (r.axis2_value ? format_double(*r.axis2_value) : "") << ',';
  if (r.realness)
    out << format_double(r.realness->e_imag_max) << ','
        << format_double(r.realness->e_imag_min) << ','
        << format_double(r.realness->rho) << ',';
  else
    out << ",,,";
  if (r.localization)
    out << format_double(r.localization->ipr_max) << ','
        << format_double(r.localization->ipr_min) << ','
        << format_double(r.localization->ipr_avg) << ','
        << format_double(r.localization->npr_avg) << ','
        << format_double(r.localization->eta) << ',';
  else
    out << ",,,,,";
  out << (r.w1 ? std::to_string(*r.w1) : "") << ','
      << (r.w2 ? std::to_string(*r.w2) : "") << ',' << opt_cell(r.base1) << ','
      << opt_cell(r.base2) << ',' << opt_cell(r.entropy) << ','
      << opt_cell(r.g_mean) << ','
      << (r.agr_dropped ? std::to_string(*r.agr_dropped) : "") << ','
      << format_double(r.tol_imag) << ',' << format_double(r.ipr_threshold)
      << ',' << (r.error.empty() ? "ok" : "error") << ','
      << csv_escape(r.error) << '\n';
  return out.str();
}

inline std::string sweep_csv_header() {
  return "axis1_param,axis1_value,axis2_param,axis2_value,"
         "e_imag_max,e_imag_min,rho,"
         "ipr_max,ipr_min,ipr_avg,npr_avg,eta,"
         "w1,w2,base1,base2,entropy,g_mean,agr_dropped,"
         "tol_imag,ipr_threshold,status,error\n";
}

}  // namespace detail

struct DiagnosticsOptions {
  std::set<Diagnostic> diagnostics = {Diagnostic::Realness,
                                      Diagnostic::Localization};
  long n_theta = 256;
  double tol_imag_rel = 1e-8;
  double tol_imag_abs = 0;
  double ipr_threshold = 0;  // 0 = 10/dim
  long flux_divisor = 0;
};

/// Everything except winding for one spec: one decomposition shared by all
/// requested diagnostics. Optionally emits the per-state summary used for
/// base-energy selection.
inline DiagnosticsRecord compute_point(const ModelSpec& spec,
                                       const DiagnosticsOptions& opts,
                                       SweepStateSummary* summary_out = nullptr) {
  DiagnosticsRecord rec;
  const bool need_left = opts.diagnostics.count(Diagnostic::Entanglement) > 0;
  const auto dec = decompose(build_hamiltonian(spec), {.compute_left = need_left});
  rec.tol_imag = opts.tol_imag_abs > 0
                     ? opts.tol_imag_abs
                     : opts.tol_imag_rel * dec.spectral_radius();
  rec.ipr_threshold = opts.ipr_threshold > 0
                          ? opts.ipr_threshold
                          : default_ipr_threshold(spec.dim());
  if (opts.diagnostics.count(Diagnostic::Realness))
    rec.realness = realness(dec, rec.tol_imag);
  const bool need_profile =
      opts.diagnostics.count(Diagnostic::Localization) > 0 ||
      opts.diagnostics.count(Diagnostic::Winding) > 0;
  if (need_profile) {
    const auto prof = profile(dec);
    if (opts.diagnostics.count(Diagnostic::Localization))
      rec.localization = LocalizationSummary{prof.ipr_max, prof.ipr_min,
                                             prof.ipr_avg, prof.npr_avg,
                                             prof.eta};
    if (summary_out) {
      summary_out->re_e.resize(dec.dim());
      for (long j = 0; j < dec.dim(); ++j)
        summary_out->re_e[j] = dec.eigenvalues[j].real();
      summary_out->ipr = prof.ipr;
    }
  }
  if (opts.diagnostics.count(Diagnostic::Entanglement))
    rec.entropy = entanglement_entropy(
        dec, OccupationRule::all_real(rec.tol_imag), half_chain(spec.L));
  if (opts.diagnostics.count(Diagnostic::LevelStat)) {
    const auto agr = adjacent_gap_ratio(dec);
    rec.g_mean = agr.g_mean;
    rec.agr_dropped = agr.n_dropped;
  }
  return rec;
}

/// Fallback winding base for a point with no threshold crossings: the
/// midpoint of the largest interior gap of Re E (off-spectrum for gapped
/// real spectra, and any base works for the w = 0 Hermitian case).
inline double fallback_base_energy(const SweepStateSummary& summary) {
  double best = -1, mid = 0;
  for (long j = 0; j + 1 < summary.re_e.size(); ++j) {
    const double gap = summary.re_e[j + 1] - summary.re_e[j];
    if (gap > best) {
      best = gap;
      mid = 0.5 * (summary.re_e[j + 1] + summary.re_e[j]);
    }
  }
  return mid;
}

inline void apply_winding(DiagnosticsRecord& rec, const ModelSpec& spec,
                          const BaseEnergies& bases, long n_theta,
                          long flux_divisor) {
  WindingOptions wopts;
  wopts.flux_divisor = flux_divisor;
  const auto wr = winding_pair(spec, bases.e1, bases.e2, n_theta, wopts);
  rec.w1 = wr.w1;
  rec.w2 = wr.w2;
  rec.base1 = bases.e1;
  rec.base2 = bases.e2;
}

/// One spec, all requested diagnostics. Winding bases come from the
/// single-point selection rule, falling back to the largest-gap midpoint
/// when nothing is localized.
inline DiagnosticsRecord diagnose_point(const ModelSpec& spec,
                                        const DiagnosticsOptions& opts) {
  SweepStateSummary summary;
  DiagnosticsRecord rec = compute_point(spec, opts, &summary);
  if (opts.diagnostics.count(Diagnostic::Winding)) {
    BaseEnergies bases;
    try {
      bases = select_base_energies({summary}, rec.ipr_threshold);
    } catch (const NoLocalizedStates&) {
      bases.e1 = bases.e2 = fallback_base_energy(summary);
    }
    apply_winding(rec, spec, bases, opts.n_theta, opts.flux_divisor);
  }
  return rec;
}

/// Progress hook: called after each completed row with (done, total).
/// Exceptions thrown from it abort the sweep after a checkpoint flush.
using SweepProgress = std::function<void(long, long)>;

namespace detail {

struct CheckpointState {
  std::vector<std::optional<DiagnosticsRecord>> records;
  std::vector<std::optional<SweepStateSummary>> summaries;
  std::vector<bool> winding_done;
  std::vector<std::optional<SliceBases>> bases;
  bool resumed = false;
};

inline std::string plan_fingerprint(const SweepPlan& plan) {
  return std::to_string(std::hash<std::string>{}(plan.to_config().to_text()));
}

inline std::string checkpoint_path(const SweepPlan& plan) {
  return plan.output + ".ckpt";
}

inline void flush_checkpoint(const SweepPlan& plan, const CheckpointState& st) {
  if (plan.output.empty()) return;
  std::ostringstream out;
  out << json{{"v", 1}, {"fingerprint", plan_fingerprint(plan)}}.dump() << '\n';
  for (size_t g = 0; g < st.records.size(); ++g) {
    if (!st.records[g]) continue;
    json j{{"phase", 1},
           {"idx", static_cast<long>(g)},
           {"record", record_to_json(*st.records[g])},
           {"wall_ms", st.records[g]->wall_ms}};
    if (st.summaries[g]) {
      std::vector<double> re(st.summaries[g]->re_e.data(),
                             st.summaries[g]->re_e.data() +
                                 st.summaries[g]->re_e.size());
      std::vector<double> ipr(st.summaries[g]->ipr.data(),
                              st.summaries[g]->ipr.data() +
                                  st.summaries[g]->ipr.size());
      j["summary"] = {{"re_e", re}, {"ipr", ipr}};
    }
    out << j.dump() << '\n';
    if (st.winding_done[g]) {
      const auto& r = *st.records[g];
      out << json{{"phase", 2},
                  {"idx", static_cast<long>(g)},
                  {"w1", r.w1 ? json(*r.w1) : json(nullptr)},
                  {"w2", r.w2 ? json(*r.w2) : json(nullptr)},
                  {"base1", r.base1 ? json(*r.base1) : json(nullptr)},
                  {"base2", r.base2 ? json(*r.base2) : json(nullptr)},
                  {"error", r.error}}.dump()
          << '\n';
    }
  }
  for (size_t s = 0; s < st.bases.size(); ++s) {
    if (!st.bases[s]) continue;
    json j{{"phase", "bases"}, {"slice", static_cast<long>(s)},
           {"error", st.bases[s]->error}};
    if (st.bases[s]->bases) {
      j["e1"] = st.bases[s]->bases->e1;
      j["e2"] = st.bases[s]->bases->e2;
    }
    out << j.dump() << '\n';
  }
  atomic_write_file(checkpoint_path(plan), out.str());
}

inline CheckpointState load_checkpoint(const SweepPlan& plan) {
  CheckpointState st;
  const long n = plan.grid_size();
  st.records.resize(n);
  st.summaries.resize(n);
  st.winding_done.assign(n, false);
  st.bases.resize(plan.n2());
  if (plan.output.empty()) return st;
  const std::string path = checkpoint_path(plan);
  if (!std::filesystem::exists(path)) return st;

  std::ifstream in(path);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) continue;  // torn tail line from an interrupt
    if (first) {
      first = false;
      if (j.value("fingerprint", "") != plan_fingerprint(plan))
        throw PlanError("checkpoint '" + path +
                        "' belongs to a different plan; remove it or change "
                        "the output path");
      continue;
    }
    if (j["phase"] == 1) {
      const long g = j["idx"].get<long>();
      if (g < 0 || g >= n) continue;
      auto rec = record_from_json(j["record"]);
      rec.wall_ms = j.value("wall_ms", 0.0);
      st.records[g] = rec;
      if (j.contains("summary")) {
        SweepStateSummary s;
        const auto re = j["summary"]["re_e"].get<std::vector<double>>();
        const auto ipr = j["summary"]["ipr"].get<std::vector<double>>();
        s.param = plan.axis1.values[g % plan.n1()];
        s.re_e = Eigen::Map<const RealVector>(re.data(),
                                              static_cast<long>(re.size()));
        s.ipr = Eigen::Map<const RealVector>(ipr.data(),
                                             static_cast<long>(ipr.size()));
        st.summaries[g] = s;
      }
      st.resumed = true;
    } else if (j["phase"] == 2) {
      const long g = j["idx"].get<long>();
      if (g < 0 || g >= n || !st.records[g]) continue;
      auto& r = *st.records[g];
      if (!j["w1"].is_null()) r.w1 = j["w1"].get<int>();
      if (!j["w2"].is_null()) r.w2 = j["w2"].get<int>();
      if (!j["base1"].is_null()) r.base1 = j["base1"].get<double>();
      if (!j["base2"].is_null()) r.base2 = j["base2"].get<double>();
      r.error = j.value("error", r.error);
      st.winding_done[g] = true;
    } else if (j["phase"] == "bases") {
      const long s = j["slice"].get<long>();
      if (s < 0 || s >= plan.n2()) continue;
      SliceBases sb;
      sb.error = j.value("error", "");
      if (j.contains("e1"))
        sb.bases = BaseEnergies{j["e1"].get<double>(), j["e2"].get<double>()};
      st.bases[s] = sb;
    }
  }
  return st;
}

inline void write_outputs(const SweepPlan& plan, const SweepResult& result,
                          double wall_total_ms) {
  if (plan.output.empty()) return;
  // CSV
  std::ostringstream csv;
  csv << "# nhqc sweep schema v1\n" << sweep_csv_header();
  for (const auto& r : result.records) csv << record_csv_row(plan, r);
  atomic_write_file(plan.output, csv.str());
  // JSON mirror
  json j;
  j["schema"] = "nhqc.sweep.v1";
  j["plan"] = plan.to_config().to_text();
  j["rows"] = json::array();
  for (const auto& r : result.records) j["rows"].push_back(record_to_json(r));
  j["slice_bases"] = json::array();
  for (const auto& sb : result.slice_bases) {
    json b{{"error", sb.error}};
    if (sb.bases) {
      b["e1"] = sb.bases->e1;
      b["e2"] = sb.bases->e2;
    }
    j["slice_bases"].push_back(b);
  }
  std::string json_path = plan.output;
  if (json_path.size() > 4 && json_path.substr(json_path.size() - 4) == ".csv")
    json_path = json_path.substr(0, json_path.size() - 4);
  atomic_write_file(json_path + ".json", j.dump(2) + "\n");
  // provenance sidecar (wall times live here, outside the deterministic
  // outputs)
  json meta;
  meta["schema"] = "nhqc.sweep.meta.v1";
  meta["wall_ms_total"] = wall_total_ms;
  meta["resumed"] = result.resumed;
  meta["workers"] = plan.resolved_workers();
  meta["row_wall_ms"] = json::array();
  for (const auto& r : result.records) meta["row_wall_ms"].push_back(r.wall_ms);
  atomic_write_file(json_path + ".meta.json", meta.dump(2) + "\n");
}

}  // namespace detail

/// Runs the sweep: phase 1 evaluates every grid point independently (one
/// decomposition per point shared by all diagnostics), then winding base
/// energies are selected per axis2 slice along axis1, then phase 2 adds the
/// winding pass. Rows land in deterministic grid order no matter the
/// execution order; checkpoints flush every checkpoint_interval rows and a
/// resumed run never recomputes or alters completed rows.
inline SweepResult run_sweep(const SweepPlan& plan,
                             const SweepProgress& progress = {}) {
  plan.validate();
  pin_blas_single_thread();
  const auto t_start = std::chrono::steady_clock::now();
  const long n = plan.grid_size();
  const bool want_winding = plan.diagnostics.count(Diagnostic::Winding) > 0;

  detail::CheckpointState st = detail::load_checkpoint(plan);
  const bool resumed = st.resumed;

  DiagnosticsOptions opts;
  opts.diagnostics = plan.diagnostics;
  opts.n_theta = plan.n_theta;
  opts.tol_imag_rel = plan.tol_imag_rel;
  opts.tol_imag_abs = plan.tol_imag_abs;
  opts.ipr_threshold = plan.ipr_threshold;
  opts.flux_divisor = plan.flux_divisor;

  std::mutex mu;
  long completed = 0, since_flush = 0;
  std::exception_ptr abort_error;

  auto run_pool = [&](const std::function<void(long)>& work,
                      const std::vector<long>& todo) {
    std::atomic<size_t> next{0};
    const long nw = std::min<long>(plan.resolved_workers(),
                                   static_cast<long>(todo.size()));
    auto worker = [&] {
      for (;;) {
        {
          std::scoped_lock lk(mu);
          if (abort_error) return;
        }
        const size_t k = next.fetch_add(1);
        if (k >= todo.size()) return;
        work(todo[k]);
      }
    };
    std::vector<std::thread> threads;
    for (long t = 1; t < nw; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (abort_error) {
      detail::flush_checkpoint(plan, st);
      std::rethrow_exception(abort_error);
    }
  };

  auto note_done = [&](long /*idx*/) {
    std::scoped_lock lk(mu);
    ++completed;
    if (++since_flush >= plan.checkpoint_interval) {
      detail::flush_checkpoint(plan, st);
      since_flush = 0;
    }
    if (progress) {
      try {
        progress(completed, want_winding ? 2 * n : n);
      } catch (...) {
        if (!abort_error) abort_error = std::current_exception();
      }
    }
  };

  // phase 1
  std::vector<long> todo1;
  for (long g = 0; g < n; ++g)
    if (!st.records[g]) todo1.push_back(g);
  run_pool(
      [&](long g) {
        const auto t0 = std::chrono::steady_clock::now();
        DiagnosticsRecord rec;
        SweepStateSummary summary;
        summary.param = plan.axis1.values[g % plan.n1()];
        bool have_summary = false;
        try {
          rec = compute_point(plan.spec_at(g), opts,
                              want_winding ? &summary : nullptr);
          have_summary = want_winding;
        } catch (const std::exception& e) {
          rec = DiagnosticsRecord{};
          rec.error = e.what();
        }
        rec.axis1_value = plan.axis1.values[g % plan.n1()];
        if (plan.axis2) rec.axis2_value = plan.axis2->values[g / plan.n1()];
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        {
          std::scoped_lock lk(mu);
          st.records[g] = std::move(rec);
          if (have_summary) st.summaries[g] = std::move(summary);
        }
        note_done(g);
      },
      todo1);

  // base-energy selection per axis2 slice, then phase 2
  if (want_winding) {
    for (long s = 0; s < plan.n2(); ++s) {
      if (st.bases[s]) continue;
      SliceBases sb;
      std::vector<SweepStateSummary> slice;
      bool all_present = true;
      for (long k = 0; k < plan.n1(); ++k) {
        const long g = s * plan.n1() + k;
        if (!st.summaries[g]) {
          all_present = false;
          break;
        }
        slice.push_back(*st.summaries[g]);
      }
      if (!all_present) {
        sb.error = "winding bases unavailable: some points failed to decompose";
      } else {
        try {
          sb.bases = select_base_energies(slice, plan.resolved_ipr_threshold());
        } catch (const NoLocalizedStates& e) {
          if (plan.n1() == 1) {
            const double b = fallback_base_energy(slice.front());
            sb.bases = BaseEnergies{b, b};
          } else {
            sb.error = e.what();
          }
        }
      }
      std::scoped_lock lk(mu);
      st.bases[s] = sb;
    }
    detail::flush_checkpoint(plan, st);

    std::vector<long> todo2;
    for (long g = 0; g < n; ++g)
      if (!st.winding_done[g] && st.records[g] && st.records[g]->error.empty())
        todo2.push_back(g);
    run_pool(
        [&](long g) {
          const auto t0 = std::chrono::steady_clock::now();
          const long s = g / plan.n1();
          DiagnosticsRecord rec;
          {
            std::scoped_lock lk(mu);
            rec = *st.records[g];
          }
          const auto& sb = *st.bases[s];
          if (sb.bases) {
            try {
              apply_winding(rec, plan.spec_at(g), *sb.bases, plan.n_theta,
                            plan.flux_divisor);
            } catch (const std::exception& e) {
              rec.error = std::string("winding: ") + e.what();
            }
          } else {
            rec.error = sb.error;
          }
          rec.wall_ms += std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
          {
            std::scoped_lock lk(mu);
            st.records[g] = std::move(rec);
            st.winding_done[g] = true;
          }
          note_done(g);
        },
        todo2);
  }

  SweepResult result;
  result.resumed = resumed;
  result.records.reserve(n);
  for (long g = 0; g < n; ++g) {
    result.records.push_back(st.records[g] ? *st.records[g]
                                           : DiagnosticsRecord{});
    if (!result.records.back().error.empty()) result.any_errors = true;
  }
  for (long s = 0; s < plan.n2(); ++s)
    result.slice_bases.push_back(st.bases[s] ? *st.bases[s] : SliceBases{});

  const double wall_total =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                t_start)
          .count();
  detail::write_outputs(plan, result, wall_total);
  if (!plan.output.empty()) {
    std::error_code ec;
    std::filesystem::remove(detail::checkpoint_path(plan), ec);
  }
  return result;
}

}  // namespace nhqc

#endif  // NHQC_SWEEP_HPP
