#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "afflow/error.hpp"
#include "afflow/estimates.hpp"
#include "afflow/flow.hpp"
#include "afflow/invariants.hpp"
#include "afflow/quadric.hpp"

namespace afflow::io {

using nlohmann::json;
namespace fs = std::filesystem;

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  os << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::MissingArtifact, "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigInvalid, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Grids and fields
// ---------------------------------------------------------------------------

inline json to_json(const GridSpec& g) {
  json lo = json::array(), hi = json::array();
  for (int k = 0; k < g.n(); ++k) {
    lo.push_back(g.lo(k));
    hi.push_back(g.hi(k));
  }
  return {{"n", g.n()}, {"lo", lo}, {"hi", hi}, {"m", g.m()}};
}

inline GridSpec grid_from_json(const json& j) {
  const int n = j.at("n").get<int>();
  const int m = j.at("m").get<int>();
  if (n < 1 || n > kMaxDim) throw Error(ErrorKind::ConfigInvalid, "grid.n must be 1, 2 or 3");
  std::array<double, kMaxDim> lo{}, hi{};
  auto fill = [&](const json& v, std::array<double, kMaxDim>& out, const char* name) {
    if (v.is_number()) {
      for (int k = 0; k < n; ++k) out[k] = v.get<double>();
    } else if (v.is_array() && static_cast<int>(v.size()) == n) {
      for (int k = 0; k < n; ++k) out[k] = v[k].get<double>();
    } else {
      throw Error(ErrorKind::ConfigInvalid, std::string("grid.") + name + " must be a number or an array of length n");
    }
  };
  fill(j.at("lo"), lo, "lo");
  fill(j.at("hi"), hi, "hi");
  try {
    return GridSpec(n, lo, hi, m);
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigInvalid, e.what());
  }
}

/// Field header as JSON. With a sidecar the values go to `<stem>.f64` as raw
/// little-endian doubles; otherwise they are inlined.
inline json write_field(const fs::path& json_path, const SupportField& s, bool sidecar = true) {
  json j = {{"grid", to_json(s.grid)}, {"time", s.time}, {"label", s.label}};
  if (sidecar) {
    fs::path bin = json_path;
    bin.replace_extension(".f64");
    if (bin.has_parent_path()) ensure_dir(bin.parent_path());
    std::ofstream os(bin, std::ios::binary);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + bin.string());
    for (double v : s.values) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    j["encoding"] = "f64le";
    j["values_file"] = bin.filename().string();
  } else {
    j["encoding"] = "inline";
    j["values"] = s.values;
  }
  write_json(json_path, j);
  return j;
}

inline SupportField read_field(const fs::path& json_path) {
  const json j = read_json(json_path);
  const GridSpec g = grid_from_json(j.at("grid"));
  std::vector<double> vals;
  const std::string enc = j.at("encoding").get<std::string>();
  if (enc == "inline") {
    vals = j.at("values").get<std::vector<double>>();
  } else if (enc == "f64le") {
    const fs::path bin = json_path.parent_path() / j.at("values_file").get<std::string>();
    const std::string raw = read_text(bin);
    if (raw.size() != g.size() * sizeof(double)) throw Error(ErrorKind::Io, "sidecar size does not match grid");
    vals.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, raw.data() + i * sizeof bits, sizeof bits);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      std::memcpy(&vals[i], &bits, sizeof bits);
    }
  } else {
    throw Error(ErrorKind::Io, "unknown field encoding '" + enc + "'");
  }
  return SupportField(g, std::move(vals), j.value("time", 0.0), j.value("label", std::string{}));
}

// ---------------------------------------------------------------------------
// CSV tables
// ---------------------------------------------------------------------------

/// Named columns of equal length; the unit every CSV export goes through.
struct Table {
  std::vector<std::string> names;
  std::vector<std::vector<double>> cols;

  void add(std::string name, std::vector<double> col) {
    if (!cols.empty() && col.size() != cols.front().size())
      throw Error(ErrorKind::InvalidArgument, "column '" + name + "' has a different length");
    names.push_back(std::move(name));
    cols.push_back(std::move(col));
  }
  std::size_t rows() const { return cols.empty() ? 0 : cols.front().size(); }

  const std::vector<double>& column(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) return cols[k];
    std::string valid;
    for (const auto& nm : names) valid += (valid.empty() ? "" : ", ") + nm;
    throw Error(ErrorKind::MissingArtifact, "no column '" + name + "'; valid columns: " + valid);
  }
};

inline std::string to_csv(const Table& t) {
  std::ostringstream os;
  os << "# ";
  for (std::size_t k = 0; k < t.names.size(); ++k) os << (k ? "," : "") << t.names[k];
  os << "\n" << std::setprecision(17);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t k = 0; k < t.cols.size(); ++k) os << (k ? "," : "") << t.cols[k][r];
    os << "\n";
  }
  return os.str();
}

inline void write_csv(const fs::path& path, const Table& t) { write_text(path, to_csv(t)); }

/// Select columns by name; unknown names raise MissingArtifact listing the valid ones.
inline Table export_plot_data(const Table& source, const std::vector<std::string>& columns) {
  Table out;
  for (const auto& c : columns) out.add(c, source.column(c));
  return out;
}

inline Table read_csv(const fs::path& path) {
  std::istringstream is(read_text(path));
  std::string line;
  Table t;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw Error(ErrorKind::Io, "missing CSV header");
  std::stringstream hs(line.substr(2));
  std::string name;
  while (std::getline(hs, name, ',')) {
    t.names.push_back(name);
    t.cols.emplace_back();
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    for (std::size_t k = 0; k < t.cols.size(); ++k) {
      if (!std::getline(ls, cell, ',')) throw Error(ErrorKind::Io, "short CSV row");
      t.cols[k].push_back(std::stod(cell));
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Per-node invariant dump: coordinates, D, phi, xi, |C|^2, apolarity residual.
inline Table frame_table(const SupportField& s, const std::vector<std::size_t>& nodes) {
  const int n = s.grid.n();
  std::vector<std::vector<double>> y(n), xi(n + 1);
  std::vector<double> node, D, phi, c2, apol;
  for (std::size_t f : nodes) {
    const AffineFrame fr = affine_frame(s, f);
    const VecN c = s.grid.coord(f);
    node.push_back(static_cast<double>(f));
    for (int k = 0; k < n; ++k) y[k].push_back(c(k));
    D.push_back(fr.D);
    phi.push_back(fr.phi);
    for (int k = 0; k <= n; ++k) xi[k].push_back(fr.xi(k));
    c2.push_back(fr.Cnorm2);
    apol.push_back(apolarity_trace(fr).cwiseAbs().maxCoeff());
  }
  Table t;
  t.add("node", node);
  for (int k = 0; k < n; ++k) t.add("y" + std::to_string(k + 1), y[k]);
  t.add("D", D);
  t.add("phi", phi);
  for (int k = 0; k <= n; ++k) t.add("xi" + std::to_string(k + 1), xi[k]);
  t.add("C2", c2);
  t.add("apolarity", apol);
  return t;
}

inline json events_json(const std::vector<FlowEvent>& ev) {
  json a = json::array();
  for (const auto& e : ev) a.push_back({{"step", e.step}, {"time", e.time}, {"kind", e.kind}, {"message", e.message}});
  return a;
}

/// Frames as field files plus manifest.json (config echo, dt log, events).
inline json write_trajectory(const fs::path& dir, const Trajectory& tr, const json& config_echo) {
  ensure_dir(dir);
  json frames = json::array();
  for (std::size_t k = 0; k < tr.frames.size(); ++k) {
    std::ostringstream name;
    name << "frame_" << std::setw(5) << std::setfill('0') << k << ".json";
    write_field(dir / name.str(), tr.frames[k]);
    frames.push_back({{"index", k}, {"time", tr.frames[k].time}, {"file", name.str()}});
  }
  Table dts;
  std::vector<double> idx(tr.dts.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<double>(k);
  dts.add("step", idx);
  dts.add("dt", tr.dts);
  write_csv(dir / "dt_log.csv", dts);
  json m = {{"config", config_echo},
            {"frames", frames},
            {"steps", tr.dts.size()},
            {"dt_log", "dt_log.csv"},
            {"events", events_json(tr.events)},
            {"aborted", tr.aborted},
            {"abort_reason", tr.abort_reason}};
  write_json(dir / "trajectory.json", m);
  return m;
}

inline json verdict(const std::string& check, double lo, double hi, double sup, bool pass) {
  return {{"check", check}, {"window", {lo, hi}}, {"sup", sup}, {"pass", pass}};
}

inline Table table(const CubicDecayReport& r) {
  Table t;
  t.add("t", r.times);
  t.add("ratio", r.ratio);
  std::vector<double> loc(r.argmax.begin(), r.argmax.end());
  t.add("node", loc);
  return t;
}

inline Table table(const SpeedReport& r) {
  Table t;
  t.add("t", r.times);
  t.add("Q", r.Q);
  t.add("profile", r.bound_profile);
  std::vector<double> loc(r.argmax.begin(), r.argmax.end());
  t.add("node", loc);
  return t;
}

inline Table table(const PogorelovReport& r) {
  Table t;
  t.add("t", r.times);
  t.add("max_w", r.max_w);
  return t;
}

inline Table table(const LimitTable& lt) {
  Table t;
  std::vector<double> i, gap, hgap, mono;
  for (const auto& r : lt.rows) {
    i.push_back(r.i);
    gap.push_back(r.cauchy_gap);
    hgap.push_back(r.hessian_gap);
    mono.push_back(r.monotone_violation);
  }
  t.add("i", i);
  t.add("cauchy_gap", gap);
  t.add("hessian_gap", hgap);
  t.add("monotone_violation", mono);
  return t;
}

inline json to_json(const QuadricFit& q) {
  json M = json::array();
  for (int i = 0; i < q.M.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < q.M.cols(); ++j) row.push_back(q.M(i, j));
    M.push_back(row);
  }
  std::vector<double> ev(q.spatial_eigenvalues.data(), q.spatial_eigenvalues.data() + q.spatial_eigenvalues.size());
  return {{"coefficients", M},
          {"signature", {{"positive", q.positive}, {"negative", q.negative}, {"zero", q.zero}}},
          {"spatial_eigenvalues", ev},
          {"residual", q.residual},
          {"classification", to_string(q.classification)}};
}

}  // namespace afflow::io
