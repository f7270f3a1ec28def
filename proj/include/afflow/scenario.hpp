#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "afflow/acceptance.hpp"
#include "afflow/estimates.hpp"
#include "afflow/flow.hpp"
#include "afflow/io.hpp"
#include "afflow/quadric.hpp"
#include "afflow/solitons.hpp"

namespace afflow::scenario {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { kPass = 0, kFail = 1, kConfig = 2, kNumeric = 3 };

// ---------------------------------------------------------------------------
// Schema helpers
// ---------------------------------------------------------------------------

namespace detail {

[[noreturn]] inline void bad(const std::string& where, const std::string& msg) {
  throw Error(ErrorKind::ConfigInvalid, where + ": " + msg);
}

inline void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) bad(where, "expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      bad(where, "unknown key '" + k + "' (allowed: " + list + ")");
    }
}

template <class T>
T get(const json& j, const std::string& where, const char* key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key, "wrong type");
  }
}

template <class T>
T req(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) bad(where, std::string("missing required key '") + key + "'");
  return get<T>(j, where, key, T{});
}

inline VecA vec(const std::vector<double>& v) { return Eigen::Map<const VecA>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Config types
// ---------------------------------------------------------------------------

struct OracleSpec {
  std::string kind;  // sphere, ellipsoid, paraboloid, calabi, calabi-simplex, generic
  double r0 = 1.0;
  std::vector<double> center;
  std::vector<std::vector<double>> A;
  std::vector<double> b;
  std::optional<double> beta;
  double time = 0.0;  // sampling time for invariants / quadric-check
};

struct BodySpec {
  std::string kind = "paraboloid";
  double cap_scale = 1.0;
  double rolling = 0.5;
  std::vector<int> i_list{2, 4, 8, 16};
  double k_radius = 1.0;
};

struct FlowSpec {
  double t0 = 0.0;
  double t_end = 0.0;
  std::optional<double> dt;
  double cfl = 0.5;
  std::string boundary = "oracle";  // oracle, frozen, constant
  double boundary_value = 0.0;
  int record_every = 1;
  bool convexity_guard = true;
  int max_halvings = 10;
  double band = 0.2;  // calabi-simplex: PDE nodes lie farther than this from the faces
};

struct MonitorSpec {
  std::string type;
  json params = json::object();
};

struct ExportSpec {
  std::string table;
  std::vector<std::string> columns;
  std::string file;
};

struct ScenarioConfig {
  std::string name;
  std::string scenario;
  std::optional<GridSpec> grid;
  std::optional<OracleSpec> oracle;
  std::optional<BodySpec> body;
  std::optional<FlowSpec> flow;
  std::vector<MonitorSpec> monitors;
  std::vector<ExportSpec> exports;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  std::vector<int> only;
  double tolerance_scale = 1.0;
  json raw;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> v{"flow",          "invariants", "verify-soliton", "estimates",
                                          "exhaust",       "quadric-check", "acceptance"};
  return v;
}

namespace detail {

inline OracleSpec parse_oracle(const json& j, int n) {
  const std::string w = "oracle";
  check_keys(j, w, {"kind", "r0", "center", "A", "b", "beta", "time"});
  OracleSpec o;
  o.kind = req<std::string>(j, w, "kind");
  static const std::set<std::string> kinds{"sphere", "ellipsoid", "paraboloid", "calabi", "calabi-simplex", "generic"};
  if (!kinds.count(o.kind)) bad(w + ".kind", "unknown oracle '" + o.kind + "'");
  o.r0 = get<double>(j, w, "r0", 1.0);
  if (!(o.r0 > 0.0)) bad(w + ".r0", "must be positive");
  o.center = get<std::vector<double>>(j, w, "center", {});
  if (!o.center.empty() && static_cast<int>(o.center.size()) != n + 1) bad(w + ".center", "length must be n+1");
  o.A = get<std::vector<std::vector<double>>>(j, w, "A", {});
  o.b = get<std::vector<double>>(j, w, "b", {});
  if (o.kind == "ellipsoid") {
    if (static_cast<int>(o.A.size()) != n + 1) bad(w + ".A", "ellipsoid needs an (n+1)x(n+1) matrix");
    for (const auto& r : o.A)
      if (static_cast<int>(r.size()) != n + 1) bad(w + ".A", "rows must have length n+1");
    if (!o.b.empty() && static_cast<int>(o.b.size()) != n + 1) bad(w + ".b", "length must be n+1");
  }
  if (j.contains("beta")) o.beta = get<double>(j, w, "beta", 0.0);
  o.time = get<double>(j, w, "time", 0.0);
  if (o.kind == "generic" && n > 2) bad(w + ".kind", "generic field is defined for n <= 2");
  return o;
}

inline FlowSpec parse_flow(const json& j) {
  const std::string w = "flow";
  check_keys(j, w, {"t0", "t_end", "dt", "cfl", "boundary", "boundary_value", "record_every", "convexity_guard",
                    "max_halvings", "band"});
  FlowSpec f;
  f.t0 = get<double>(j, w, "t0", 0.0);
  f.t_end = req<double>(j, w, "t_end");
  if (!(f.t_end > 0.0)) bad(w + ".t_end", "must be positive");
  if (j.contains("dt")) {
    f.dt = get<double>(j, w, "dt", 0.0);
    if (!(*f.dt > 0.0)) bad(w + ".dt", "must be positive");
  }
  f.cfl = get<double>(j, w, "cfl", 0.5);
  if (!(f.cfl > 0.0 && f.cfl <= 0.5)) bad(w + ".cfl", "must lie in (0, 0.5]");
  f.boundary = get<std::string>(j, w, "boundary", "oracle");
  if (f.boundary != "oracle" && f.boundary != "frozen" && f.boundary != "constant")
    bad(w + ".boundary", "must be oracle, frozen or constant");
  f.boundary_value = get<double>(j, w, "boundary_value", 0.0);
  f.record_every = get<int>(j, w, "record_every", 1);
  if (f.record_every < 1) bad(w + ".record_every", "must be >= 1");
  f.convexity_guard = get<bool>(j, w, "convexity_guard", true);
  f.max_halvings = get<int>(j, w, "max_halvings", 10);
  if (f.max_halvings < 0) bad(w + ".max_halvings", "must be >= 0");
  f.band = get<double>(j, w, "band", 0.2);
  if (!(f.band >= 0.0)) bad(w + ".band", "must be >= 0");
  return f;
}

inline BodySpec parse_body(const json& j) {
  const std::string w = "body";
  check_keys(j, w, {"kind", "cap_scale", "rolling", "i_list", "K_radius"});
  BodySpec b;
  b.kind = get<std::string>(j, w, "kind", "paraboloid");
  if (b.kind != "paraboloid") bad(w + ".kind", "only 'paraboloid' is available");
  b.cap_scale = get<double>(j, w, "cap_scale", 1.0);
  b.rolling = get<double>(j, w, "rolling", 0.5);
  b.i_list = get<std::vector<int>>(j, w, "i_list", {2, 4, 8, 16});
  b.k_radius = get<double>(j, w, "K_radius", 1.0);
  if (!(b.cap_scale > 0.0) || !(b.rolling > 0.0) || !(b.k_radius > 0.0)) bad(w, "scales must be positive");
  if (b.i_list.size() < 2) bad(w + ".i_list", "needs at least two indices");
  for (std::size_t k = 1; k < b.i_list.size(); ++k)
    if (b.i_list[k] <= b.i_list[k - 1]) bad(w + ".i_list", "must be strictly increasing");
  return b;
}

// Allowed monitor types and their keys, per scenario.
inline const std::map<std::string, std::set<std::string>>& monitor_keys() {
  static const std::map<std::string, std::set<std::string>> m{
      {"tracking", {"type", "tol"}},
      {"cubic_decay", {"type", "tol_C", "max", "tau", "window", "min_face_distance"}},
      {"speed", {"type", "r_floor", "window"}},
      {"pogorelov", {"type", "level", "beta", "x"}},
      {"barrier", {"type", "eps", "j", "C"}},
      {"residual", {"type", "t", "dt", "tol", "max_ratio"}},
      {"apolarity", {"type", "tol"}},
      {"classify", {"type", "expect", "tol", "exact"}},
      {"affine_sphere", {"type", "a", "tol", "stride"}},
      {"lie_quadric", {"type", "tol", "samples", "y0"}},
      {"limit", {"type", "tol"}},
  };
  return m;
}

inline const std::map<std::string, std::set<std::string>>& monitors_for_scenario() {
  static const std::map<std::string, std::set<std::string>> m{
      {"flow", {"tracking", "barrier"}},
      {"estimates", {"tracking", "cubic_decay", "speed", "pogorelov", "barrier"}},
      {"verify-soliton", {"residual"}},
      {"invariants", {"apolarity"}},
      {"quadric-check", {"classify", "affine_sphere", "lie_quadric"}},
      {"exhaust", {"limit"}},
      {"acceptance", {}},
  };
  return m;
}

}  // namespace detail

/// Validates the whole document before anything is computed.
inline ScenarioConfig parse_config(const json& j, const std::string& subcommand = {}) {
  using namespace detail;
  check_keys(j, "config", {"name", "scenario", "grid", "oracle", "body", "flow", "monitors", "export", "output_dir",
                           "seed", "acceptance"});
  ScenarioConfig c;
  c.raw = j;
  c.scenario = j.contains("scenario") ? get<std::string>(j, "config", "scenario", "") : subcommand;
  if (c.scenario.empty()) bad("config", "missing 'scenario'");
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), c.scenario) == names.end())
    bad("config.scenario", "unknown scenario '" + c.scenario + "'");
  if (!subcommand.empty() && subcommand != c.scenario)
    bad("config.scenario", "'" + c.scenario + "' does not match subcommand '" + subcommand + "'");
  c.name = get<std::string>(j, "config", "name", c.scenario);
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) bad("config.name", "must be a plain file name");
  c.output_dir = get<std::string>(j, "config", "output_dir", "out");
  c.seed = get<std::uint64_t>(j, "config", "seed", 0);

  if (j.contains("grid")) {
    check_keys(j["grid"], "grid", {"n", "lo", "hi", "m"});
    try {
      c.grid = io::grid_from_json(j["grid"]);
    } catch (const json::exception& e) {
      bad("grid", e.what());
    }
  }
  const int n = c.grid ? c.grid->n() : 0;
  if (j.contains("oracle")) c.oracle = parse_oracle(j["oracle"], n);
  if (j.contains("flow")) c.flow = parse_flow(j["flow"]);
  if (j.contains("body")) c.body = parse_body(j["body"]);

  const auto& allowed = monitors_for_scenario().at(c.scenario);
  if (j.contains("monitors")) {
    if (!j["monitors"].is_array()) bad("monitors", "expected an array");
    for (std::size_t k = 0; k < j["monitors"].size(); ++k) {
      const json& mj = j["monitors"][k];
      const std::string w = "monitors[" + std::to_string(k) + "]";
      if (!mj.is_object()) bad(w, "expected an object");
      MonitorSpec m;
      m.type = req<std::string>(mj, w, "type");
      const auto it = monitor_keys().find(m.type);
      if (it == monitor_keys().end()) bad(w + ".type", "unknown monitor '" + m.type + "'");
      if (!allowed.count(m.type)) bad(w + ".type", "monitor '" + m.type + "' is not available in " + c.scenario);
      check_keys(mj, w, it->second);
      for (const auto& [key, v] : mj.items())
        if (key != "type" && key != "expect" && key != "exact" && key != "window" && key != "beta" && key != "x" &&
            key != "y0" && !v.is_number())
          bad(w + "." + key, "expected a number");
      m.params = mj;
      c.monitors.push_back(std::move(m));
    }
  }
  if (j.contains("export")) {
    if (!j["export"].is_array()) bad("export", "expected an array");
    for (std::size_t k = 0; k < j["export"].size(); ++k) {
      const std::string w = "export[" + std::to_string(k) + "]";
      const json& ej = j["export"][k];
      check_keys(ej, w, {"table", "columns", "file"});
      ExportSpec e;
      e.table = req<std::string>(ej, w, "table");
      e.columns = req<std::vector<std::string>>(ej, w, "columns");
      e.file = get<std::string>(ej, w, "file", e.table + "_plot.csv");
      if (e.columns.empty()) bad(w + ".columns", "must not be empty");
      c.exports.push_back(std::move(e));
    }
  }
  if (j.contains("acceptance")) {
    if (c.scenario != "acceptance") bad("acceptance", "only valid for the acceptance scenario");
    check_keys(j["acceptance"], "acceptance", {"only", "tolerance_scale"});
    c.only = get<std::vector<int>>(j["acceptance"], "acceptance", "only", {});
    c.tolerance_scale = get<double>(j["acceptance"], "acceptance", "tolerance_scale", 1.0);
    if (!(c.tolerance_scale > 0.0)) bad("acceptance.tolerance_scale", "must be positive");
  }
  for (int id : c.only)
    if (id < 1 || id > 12) bad("acceptance.only", "criteria are numbered 1..12");

  // sections each scenario needs
  auto need = [&](bool present, const char* what) {
    if (!present) bad("config", std::string("scenario '") + c.scenario + "' requires '" + what + "'");
  };
  if (c.scenario != "acceptance") need(c.grid.has_value(), "grid");
  if (c.scenario == "flow" || c.scenario == "estimates") {
    need(c.oracle.has_value(), "oracle");
    need(c.flow.has_value(), "flow");
  }
  if (c.scenario == "invariants" || c.scenario == "verify-soliton" || c.scenario == "quadric-check")
    need(c.oracle.has_value(), "oracle");
  if (c.scenario == "exhaust") {
    need(c.body.has_value(), "body");
    need(c.flow.has_value(), "flow");
  }
  if (c.scenario == "verify-soliton" && c.oracle->kind == "generic")
    bad("oracle.kind", "the generic field is not a soliton");
  if (c.oracle && c.oracle->kind == "calabi-simplex" && n != 2 && n != 1)
    bad("oracle.kind", "calabi-simplex needs n = 1 or 2");
  if (c.flow && c.oracle && c.oracle->kind == "generic" && c.flow->boundary == "oracle")
    bad("flow.boundary", "the generic field has no oracle boundary data");
  for (const auto& m : c.monitors)
    if (m.type == "tracking" && c.oracle && c.oracle->kind == "generic")
      bad("monitors", "tracking needs an exact solution");
  if (c.flow && c.flow->dt) {
    FlowConfig probe;
    probe.dt_policy = DtPolicy::fixed(*c.flow->dt);
    probe.t_end = c.flow->t_end;
    probe.validate();
  }
  return c;
}

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

namespace detail {

inline ChartFn generic_field(int n) {
  return [n](const VecN& y) {
    const double r2 = y.squaredNorm();
    double v = std::sqrt(1.0 + r2) + 0.3 * r2 + 0.1 * y(0) * y(0) * y(0);
    if (n >= 2) v += 0.05 * y(1) * y(1) * y(0);
    return v;
  };
}

inline SolitonOracle make_oracle(const OracleSpec& s, int n) {
  if (s.kind == "sphere")
    return SolitonOracle::sphere(n, s.r0, s.center.empty() ? VecA::Zero(n + 1) : vec(s.center));
  if (s.kind == "ellipsoid") {
    MatA A(n + 1, n + 1);
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) A(i, j) = s.A[i][j];
    return SolitonOracle::ellipsoid(s.r0, AffineMap(A, s.b.empty() ? VecA::Zero(n + 1) : vec(s.b)));
  }
  if (s.kind == "paraboloid") return SolitonOracle::paraboloid(n);
  if (s.kind == "calabi") return SolitonOracle::calabi(n, s.beta.value_or(calabi_default_beta(n)));
  if (s.kind == "calabi-simplex") return calabi_simplex_oracle(n, s.beta.value_or(calabi_default_beta(n)));
  throw Error(ErrorKind::ConfigInvalid, "oracle '" + s.kind + "' has no closed form");
}

// Initial field plus the masks a run needs.
struct Setup {
  GridSpec grid;
  std::optional<SolitonOracle> oracle;
  SupportField s0;
  FlowConfig cfg;
  std::vector<std::size_t> region;  // nodes where monitors look
};

inline Setup setup_run(const ScenarioConfig& c) {
  const GridSpec& g = *c.grid;
  const FlowSpec& f = *c.flow;
  const OracleSpec& os = *c.oracle;
  Setup st{g, std::nullopt, SupportField{}, FlowConfig{}, {}};
  st.cfg.dt_policy = f.dt ? DtPolicy::fixed(*f.dt) : DtPolicy::adaptive(f.cfl);
  st.cfg.t_end = f.t_end;
  st.cfg.record_every = f.record_every;
  st.cfg.convexity_guard = f.convexity_guard;
  st.cfg.max_halvings = f.max_halvings;
  if (os.kind == "generic") {
    st.s0 = SupportField::sample(g, generic_field(g.n()), f.t0, "generic");
  } else {
    st.oracle = make_oracle(os, g.n());
    if (os.kind == "calabi-simplex") {
      st.s0 = masked_sample(*st.oracle, g, f.t0, cone_interior_nodes(*st.oracle, g), 0.0);
      st.cfg.active = cone_interior_nodes(*st.oracle, g, 1e-9, f.band);
      st.cfg.domain = cone_closure_mask(*st.oracle, g);
      st.region = st.cfg.active;
      if (st.region.empty()) throw Error(ErrorKind::ConfigInvalid, "flow.band leaves no PDE nodes");
    } else {
      st.s0 = st.oracle->sample(g, f.t0);
    }
  }
  if (f.boundary == "oracle") {
    st.cfg.boundary = os.kind == "calabi-simplex" ? BoundaryData::from_oracle(*st.oracle, 0.0)
                                                   : BoundaryData::from_oracle(*st.oracle);
  } else if (f.boundary == "constant") {
    st.cfg.boundary = BoundaryData::constant_value(f.boundary_value);
  } else {
    st.cfg.boundary = BoundaryData::frozen();
  }
  if (st.region.empty()) st.region = g.nodes_with_margin(1);
  return st;
}

inline std::vector<std::size_t> seeded_nodes(const GridSpec& g, std::uint64_t seed, std::size_t count, int margin = 2) {
  const auto pool = g.nodes_with_margin(margin);
  if (pool.empty()) throw Error(ErrorKind::InsufficientSamples, "grid has no nodes with margin " + std::to_string(margin));
  if (count == 0 || count >= pool.size()) return pool;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::set<std::size_t> chosen;
  while (chosen.size() < count) chosen.insert(pool[pick(rng)]);
  return {chosen.begin(), chosen.end()};
}

inline std::pair<double, double> window(const json& p, double lo, double hi) {
  if (!p.contains("window")) return {lo, hi};
  const auto w = p["window"];
  if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number() || !(w[0] < w[1]))
    throw Error(ErrorKind::ConfigInvalid, "window must be [lo, hi] with lo < hi");
  return {w[0].get<double>(), w[1].get<double>()};
}

inline VecN vecn(const json& p, const char* key, int n, double fill) {
  VecN v = VecN::Constant(n, fill);
  if (!p.contains(key)) return v;
  const auto a = p[key];
  if (!a.is_array() || static_cast<int>(a.size()) != n)
    throw Error(ErrorKind::ConfigInvalid, std::string(key) + " must be an array of length n");
  for (int i = 0; i < n; ++i) v(i) = a[i].get<double>();
  return v;
}

inline double num(const json& p, const char* key, double def) { return p.contains(key) ? p[key].get<double>() : def; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct Outcome {
  int exit_code = kPass;
  fs::path dir;
  json verdict;
  std::string message;
};

class Runner {
 public:
  Runner(ScenarioConfig cfg, fs::path base) : c_(std::move(cfg)), dir_(std::move(base) / c_.name) {}

  Outcome run() {
    const auto t0 = std::chrono::steady_clock::now();
    io::ensure_dir(dir_);
    manifest_ = {{"tool", "afflow"},
                 {"version", kVersion},
                 {"scenario", c_.scenario},
                 {"name", c_.name},
                 {"seed", c_.seed},
                 {"config", c_.raw},
                 {"status", "running"}};
    io::write_json(dir_ / "manifest.json", manifest_);

    Outcome out;
    out.dir = dir_;
    try {
      if (c_.scenario == "flow" || c_.scenario == "estimates") run_flow();
      else if (c_.scenario == "invariants") run_invariants();
      else if (c_.scenario == "verify-soliton") run_verify();
      else if (c_.scenario == "exhaust") run_exhaust();
      else if (c_.scenario == "quadric-check") run_quadric();
      else if (c_.scenario == "acceptance") run_acceptance();
      for (const auto& e : c_.exports) {
        const auto it = tables_.find(e.table);
        if (it == tables_.end()) {
          std::string have;
          for (const auto& [k, v] : tables_) have += (have.empty() ? "" : ", ") + k;
          throw Error(ErrorKind::MissingArtifact, "no table '" + e.table + "' (available: " + have + ")");
        }
        io::write_csv(dir_ / e.file, io::export_plot_data(it->second, e.columns));
      }
      const bool all = std::all_of(checks_.begin(), checks_.end(), [](const json& v) { return v["pass"].get<bool>(); });
      out.exit_code = aborted_ ? kNumeric : (all ? kPass : kFail);
      status_ = aborted_ ? "aborted" : (all ? "pass" : "fail");
    } catch (const Error& e) {
      const bool config = e.kind() == ErrorKind::ConfigInvalid || e.kind() == ErrorKind::MissingArtifact;
      out.exit_code = config ? kConfig : kNumeric;
      status_ = config ? "config_error" : "numeric_error";
      out.message = e.what();
      data_["error"] = e.what();
      data_["partial"] = true;
    }
    out.verdict = {{"scenario", c_.scenario},
                   {"name", c_.name},
                   {"pass", out.exit_code == kPass},
                   {"status", status_},
                   {"monitors", checks_}};
    io::write_json(dir_ / "verdict.json", out.verdict);
    manifest_["status"] = status_;
    manifest_["data"] = data_;
    manifest_["outputs"] = outputs_;
    manifest_["timings"] = {{"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
    io::write_json(dir_ / "manifest.json", manifest_);
    return out;
  }

 private:
  void table(const std::string& name, io::Table t) {
    io::write_csv(dir_ / (name + ".csv"), t);
    outputs_.push_back(name + ".csv");
    tables_[name] = std::move(t);
  }

  void check(json v) {
    data_["monitors"].push_back(v);
    checks_.push_back(std::move(v));
  }

  // flow and estimates
  void run_flow() {
    auto st = detail::setup_run(c_);
    const Trajectory tr = evolve(st.s0, st.cfg);
    const json tj = io::write_trajectory(dir_ / "trajectory", tr, c_.raw);
    outputs_.push_back("trajectory/trajectory.json");
    data_["steps"] = tr.dts.size();
    data_["frames"] = tr.frames.size();
    data_["final_time"] = tr.final().time;
    data_["aborted"] = tr.aborted;
    if (tr.aborted) {
      aborted_ = true;
      data_["abort_reason"] = tr.abort_reason;
    }

    // per-frame summary; with an oracle also the tracking error
    io::Table sum;
    const GridSpec& g = st.grid;
    const std::size_t y0 = g.nearest(VecN::Zero(g.n()));
    const double scale0 = std::sqrt(1.0 + g.coord(y0).squaredNorm());
    std::vector<double> t, rn, rx, err;
    for (const auto& fr : tr.frames) {
      t.push_back(fr.time);
      rn.push_back(fr[y0] / scale0);
      if (st.oracle) {
        const ExtReal ex = st.oracle->chart_value(g.coord(y0), fr.time);
        rx.push_back(ex.is_finite() ? ex.value() / scale0 : std::numeric_limits<double>::quiet_NaN());
        double e = 0.0;
        for (std::size_t f : st.region) {
          const ExtReal v = st.oracle->chart_value(g.coord(f), fr.time);
          if (v.is_finite()) e = std::max(e, std::abs(fr[f] - v.value()));
        }
        err.push_back(e);
      }
    }
    sum.add("t", t);
    sum.add("r_numeric", rn);
    if (st.oracle) {
      sum.add("r_exact", rx);
      sum.add("max_abs_error", err);
    }
    table("summary", std::move(sum));

    for (const auto& m : c_.monitors) {
      const json& p = m.params;
      if (m.type == "tracking") {
        double rel = 0.0;
        const SupportField& fin = tr.final();
        for (std::size_t f : st.region) {
          const ExtReal v = st.oracle->chart_value(g.coord(f), fin.time);
          if (v.is_finite()) rel = std::max(rel, std::abs(fin[f] - v.value()) / std::abs(v.value()));
        }
        const double tol = detail::num(p, "tol", 0.01);
        check({{"check", "tracking"}, {"max_rel_error", rel}, {"tol", tol}, {"pass", rel <= tol}});
      } else if (m.type == "cubic_decay") {
        std::vector<std::size_t> nodes;
        const double dmin = detail::num(p, "min_face_distance", 0.0);
        for (std::size_t f : st.region) {
          if (g.margin(f) < 2) continue;
          if (dmin > 0.0 && st.oracle && c_.oracle->kind == "calabi-simplex" &&
              cone_face_distance(*st.oracle, g.coord(f)) < dmin)
            continue;
          nodes.push_back(f);
        }
        if (nodes.empty()) throw Error(ErrorKind::EmptyInput, "cubic_decay: no monitored nodes");
        const double tau = detail::num(p, "tau", 0.0);
        const double span = tr.final().time - tau;
        const auto [lo, hi] = detail::window(p, 0.1 * span, span);
        const auto rep = cubic_decay_monitor(tr, nodes, tau, detail::num(p, "tol_C", 0.15), lo, hi);
        const double bound = detail::num(p, "max", 1.0 + rep.tol_C);
        table("cubic_decay", io::table(rep));
        json v = io::verdict("cubic_decay", lo, hi, rep.sup, rep.sup <= bound);
        v["bound"] = bound;
        check(v);
      } else if (m.type == "speed") {
        const double rf = detail::num(p, "r_floor", 0.0);
        const double T = tr.final().time;
        const auto [lo, hi] = detail::window(p, std::min(1e-3, T), T);
        const auto rep = speed_monitor(tr, rf, st.region);
        const double sup = rep.sup_profile(g.n(), lo, hi);
        table("speed", io::table(rep));
        json v = io::verdict("speed", lo, hi, sup, std::isfinite(sup));
        v["q0"] = rep.Q.front();
        v["r_floor"] = rf;
        check(v);
      } else if (m.type == "pogorelov") {
        const std::size_t x = g.nearest(detail::vecn(p, "x", g.n(), 0.0));
        const Trajectory nt = normalize_section(tr, x);
        const BowlDomain bowl = bowl_domain(nt, detail::num(p, "level", -0.05), st.region);
        VecN beta = detail::vecn(p, "beta", g.n(), 0.0);
        if (!p.contains("beta")) beta(0) = 1.0;
        const auto rep = pogorelov_monitor(nt, bowl, beta);
        table("pogorelov", io::table(rep));
        const bool pass = rep.interior && rep.boundary_max == 0.0 && !rep.truncated && bowl.nested;
        check({{"check", "pogorelov"},
               {"max_w", rep.max},
               {"interior", rep.interior},
               {"boundary_max", rep.boundary_max},
               {"truncated", rep.truncated},
               {"nested", bowl.nested},
               {"pass", pass}});
      } else if (m.type == "barrier") {
        const int n = g.n();
        VecA v = VecA::Zero(n + 1);
        const double eps = detail::num(p, "eps", 0.8), j = detail::num(p, "j", 2.0);
        const SupportField e0 = ellipsoid_barrier(eps, v, j, g);
        double lift = -std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < g.size(); ++f) lift = std::max(lift, e0[f] - st.s0[f]);
        v(n) = lift;
        const auto rep = barrier_monitor(SolitonOracle::ellipsoid_barrier(eps, v, j), tr);
        const double C = detail::num(p, "C", 1.0);
        check({{"check", "barrier"},
               {"violation", rep.violation()},
               {"scale", rep.scale},
               {"constant", rep.constant()},
               {"C", C},
               {"pass", rep.pass(C)}});
      }
    }
    (void)tj;
  }

  void run_invariants() {
    const GridSpec& g = *c_.grid;
    const auto& os = *c_.oracle;
    const SupportField s = os.kind == "generic" ? SupportField::sample(g, detail::generic_field(g.n()), 0.0, "generic")
                                                : detail::make_oracle(os, g.n()).sample(g, os.time);
    const auto nodes = detail::seeded_nodes(g, c_.seed, 0);
    io::Table t = io::frame_table(s, nodes);
    data_["nodes"] = nodes.size();
    for (const auto& m : c_.monitors) {
      if (m.type != "apolarity") continue;
      double worst = 0.0;
      for (const auto& name : t.names)
        if (name.rfind("apolarity", 0) == 0)
          for (double v : t.column(name)) worst = std::max(worst, std::abs(v));
      const double tol = detail::num(m.params, "tol", 1e-6);
      check({{"check", "apolarity"}, {"max", worst}, {"tol", tol}, {"pass", worst <= tol}});
    }
    table("invariants", std::move(t));
  }

  void run_verify() {
    const GridSpec& g = *c_.grid;
    const SolitonOracle o = detail::make_oracle(*c_.oracle, g.n());
    double t = c_.oracle->time, dt = 1e-4;
    const MonitorSpec* res = nullptr;
    for (const auto& m : c_.monitors)
      if (m.type == "residual") res = &m;
    if (res) {
      t = detail::num(res->params, "t", t);
      dt = detail::num(res->params, "dt", dt);
    }
    const ResidualReport rep = c_.oracle->kind == "calabi-simplex"
                                   ? pde_residual(o, g, t, dt, cone_interior_nodes(o, g, 1e-9, 2.0 * g.h_max()))
                                   : pde_residual(o, g, t, dt);
    io::Table tb;
    for (int k = 0; k < g.n(); ++k) {
      std::vector<double> col;
      for (std::size_t f : rep.nodes) col.push_back(g.coord(f)(k));
      tb.add("y" + std::to_string(k + 1), col);
    }
    std::vector<double> r;
    for (std::size_t f : rep.nodes) r.push_back(rep.residual[f]);
    tb.add("residual", r);
    table("residual", std::move(tb));
    data_["residual_max"] = rep.max;
    data_["residual_l2"] = rep.l2;
    if (res) {
      const double tol = detail::num(res->params, "tol", 1e-10);
      check({{"check", "residual"}, {"max", rep.max}, {"tol", tol}, {"pass", rep.max <= tol}});
    }
  }

  void run_exhaust() {
    const GridSpec& g = *c_.grid;
    const BodySpec& b = *c_.body;
    const auto body = NoncompactBodySpec::paraboloid(g.n(), g.h_max(), b.cap_scale, b.rolling);
    FlowConfig cfg;
    cfg.dt_policy = c_.flow->dt ? DtPolicy::fixed(*c_.flow->dt) : DtPolicy::adaptive(c_.flow->cfl);
    cfg.t_end = c_.flow->t_end;
    cfg.record_every = 1 << 30;
    cfg.max_halvings = c_.flow->max_halvings;
    std::vector<std::size_t> K;
    for (std::size_t f : g.nodes_with_margin(1))
      if (g.coord(f).norm() <= b.k_radius) K.push_back(f);
    if (K.empty()) throw Error(ErrorKind::EmptyInput, "body.K_radius selects no nodes");
    const LimitTable lt = limit_study(body, b.i_list, g, cfg, K);
    table("limit", io::table(lt));
    data_["final_gap"] = lt.final_gap();
    data_["slack"] = lt.slack;
    for (const auto& r : lt.rows)
      if (r.aborted) aborted_ = true;
    for (const auto& m : c_.monitors) {
      const double tol = detail::num(m.params, "tol", 1e-3);
      check({{"check", "limit"},
             {"monotone", lt.monotone()},
             {"cauchy_decreasing", lt.cauchy_decreasing()},
             {"final_gap", lt.final_gap()},
             {"tol", tol},
             {"pass", lt.monotone() && lt.cauchy_decreasing() && lt.final_gap() <= tol}});
    }
  }

  void run_quadric() {
    const GridSpec& g = *c_.grid;
    const auto& os = *c_.oracle;
    const bool generic = os.kind == "generic";
    std::optional<SolitonOracle> o;
    if (!generic) o = detail::make_oracle(os, g.n());
    const SupportField s =
        generic ? SupportField::sample(g, detail::generic_field(g.n()), 0.0, "generic") : o->sample(g, os.time);
    std::optional<AffineSphereFit> fit;
    auto sphere_fit = [&](int stride) -> const AffineSphereFit& {
      if (!fit) {
        std::vector<std::size_t> sub;
        const auto inner = g.nodes_with_margin(2);
        for (std::size_t i = 0; i < inner.size(); i += static_cast<std::size_t>(stride)) sub.push_back(inner[i]);
        fit = affine_sphere_check(s, sub);
      }
      return *fit;
    };
    for (const auto& m : c_.monitors) {
      const json& p = m.params;
      if (m.type == "classify") {
        const bool exact = p.contains("exact") ? p["exact"].get<bool>() : !generic;
        const auto nodes = detail::seeded_nodes(g, c_.seed, 60);
        std::vector<VecA> pts;
        if (exact) {
          if (generic) throw Error(ErrorKind::ConfigInvalid, "exact surface points need an oracle");
          for (std::size_t f : nodes) pts.push_back(o->surface_point(g.coord(f), os.time));
        } else {
          pts = embedding_samples(s, nodes);
        }
        const QuadricFit q = fit_quadric_classify(pts);
        const std::string expect = p.contains("expect") ? p["expect"].get<std::string>() : "";
        const double tol = detail::num(p, "tol", 1e-8);
        const bool pass = (expect.empty() || expect == to_string(q.classification)) && q.residual <= tol;
        json v = io::to_json(q);
        v["check"] = "classify";
        v["expect"] = expect;
        v["tol"] = tol;
        v["pass"] = pass;
        check(v);
      } else if (m.type == "affine_sphere") {
        const auto& f = sphere_fit(static_cast<int>(detail::num(p, "stride", 7)));
        const double want = detail::num(p, "a", 0.0), tol = detail::num(p, "tol", 0.02);
        json V = json::array();
        for (int i = 0; i < f.V.size(); ++i) V.push_back(f.V(i));
        check({{"check", "affine_sphere"},
               {"a", f.a},
               {"V", V},
               {"deviation", f.deviation},
               {"expected_a", want},
               {"tol", tol},
               {"pass", std::abs(f.a - want) <= tol}});
      } else if (m.type == "lie_quadric") {
        const auto& f = sphere_fit(7);
        const std::size_t y0 = g.nearest(detail::vecn(p, "y0", g.n(), 0.0));
        const AffineFrame fr = affine_frame(s, y0);
        const auto nodes = detail::seeded_nodes(g, c_.seed, static_cast<std::size_t>(detail::num(p, "samples", 50)));
        io::Table tb;
        std::vector<double> idx, phi;
        double worst = 0.0;
        for (std::size_t n : nodes) {
          const double v = lie_quadric_phi(fr, embedding_point(s, n), f.a);
          idx.push_back(static_cast<double>(n));
          phi.push_back(v);
          worst = std::max(worst, std::abs(v));
        }
        tb.add("node", idx);
        tb.add("phi", phi);
        table("lie_quadric", std::move(tb));
        const double origin = lie_quadric_phi(fr, VecA::Zero(g.n() + 1), f.a);
        const double tol = detail::num(p, "tol", 5e-4);
        check({{"check", "lie_quadric"}, {"max_abs_phi", worst}, {"phi_origin", origin}, {"tol", tol},
               {"pass", worst <= tol}});
      }
    }
  }

  void run_acceptance() {
    acceptance::Options opt;
    opt.tolerance_scale = c_.tolerance_scale;
    acceptance::Suite suite(opt);
    std::vector<int> ids = c_.only;
    if (ids.empty())
      for (const auto& [id, nm] : acceptance::Suite::catalogue()) ids.push_back(id);
    io::Table tb;
    std::vector<double> col_id, col_pass, col_sec;
    for (int id : ids) {
      const auto r = suite.run(id);
      std::cout << acceptance::format_line(r) << std::endl;
      json v = acceptance::to_json(r);
      v.erase("seconds");
      v["check"] = "criterion " + std::to_string(id);
      check(v);
      col_id.push_back(id);
      col_pass.push_back(r.pass ? 1.0 : 0.0);
      col_sec.push_back(r.seconds);
    }
    tb.add("criterion", col_id);
    tb.add("pass", col_pass);
    tb.add("seconds", col_sec);
    table("acceptance", std::move(tb));
  }

  ScenarioConfig c_;
  fs::path dir_;
  json manifest_;
  json data_ = json::object();
  json checks_ = json::array();
  json outputs_ = json::array();
  std::map<std::string, io::Table> tables_;
  std::string status_ = "running";
  bool aborted_ = false;
};

/// Output root: AFFLOW_OUT, then the --out flag, then the config's output_dir.
inline fs::path output_root(const ScenarioConfig& c, const std::string& flag) {
  if (const char* env = std::getenv("AFFLOW_OUT"); env && *env) return env;
  if (!flag.empty()) return flag;
  return c.output_dir;
}

inline Outcome run_scenario(const ScenarioConfig& c, const std::string& out_flag = {}) {
  return Runner(c, output_root(c, out_flag)).run();
}

}  // namespace afflow::scenario
