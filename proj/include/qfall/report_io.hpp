#pragma once

// Report persistence: one CSV per table, a JSON manifest, per-record arrival
// densities and optional wavefunction snapshots. Files are named
// {experiment}_{digest}[_suffix].{csv|json|bin}.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qfall/config.hpp"

namespace qfall {

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content, bool binary = false) {
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw ConfigError("write failed for '" + path.string() + "'");
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

inline std::string records_csv(const ExperimentReport& rep) {
  std::ostringstream os;
  os << "config_digest,record_digest,label,group,mode,kind,z0,delta,delta0,c_plus_re,c_plus_im,c_minus_re,"
        "c_minus_im,m_inertial,m_gravitational,field_strength,initial_mean_p,t_ehrenfest,sigma_full,"
        "sigma_asymptotic,epsilon,simulated,current_mean_t,current_std_t,clipped_negativity,flux_captured,"
        "window_t_min,window_t_max,solver_tolerance,max_norm_drift\n";
  const auto f = format_double;
  for (const auto& r : rep.records) {
    const auto& s = r.spec;
    const auto& d = r.distribution;
    os << rep.manifest.config_digest << ',' << r.digest << ',' << r.label << ',' << r.group << ','
       << to_string(r.mode) << ',' << to_string(s.kind) << ',' << f(s.z0) << ',' << f(s.delta) << ','
       << f(s.delta0) << ',' << f(s.c_plus.real()) << ',' << f(s.c_plus.imag()) << ',' << f(s.c_minus.real())
       << ',' << f(s.c_minus.imag()) << ',' << f(r.mass.inertial) << ',' << f(r.mass.gravitational) << ','
       << f(r.field_strength) << ',' << f(r.initial_mean_p) << ',' << f(r.t_ehrenfest) << ',' << f(r.sigma_full)
       << ',' << f(r.sigma_asymptotic) << ',' << f(r.epsilon) << ',' << (r.simulated ? 1 : 0);
    if (r.simulated)
      os << ',' << f(d.mean_t) << ',' << f(d.std_t) << ',' << f(d.clipped_negativity) << ',' << f(d.flux_captured)
         << ',' << f(d.window.t_min) << ',' << f(d.window.t_max) << ',' << f(r.solver_tolerance) << ','
         << f(r.max_norm_drift);
    else
      os << ",,,,,,,,";
    os << '\n';
  }
  return os.str();
}

inline std::string distances_csv(const ExperimentReport& rep) {
  std::ostringstream os;
  os << "config_digest,label,l1,ks,pass\n";
  for (const auto& d : rep.distances)
    os << rep.manifest.config_digest << ',' << d.label << ',' << format_double(d.l1) << ',' << format_double(d.ks)
       << ',' << (d.pass ? 1 : 0) << '\n';
  return os.str();
}

inline std::string fits_csv(const ExperimentReport& rep) {
  std::ostringstream os;
  os << "config_digest,label,exponent,stderr,intercept,points\n";
  for (const auto& ft : rep.fits)
    os << rep.manifest.config_digest << ',' << ft.label << ',' << format_double(ft.exponent) << ','
       << format_double(ft.stderr_exponent) << ',' << format_double(ft.intercept) << ',' << ft.points << '\n';
  return os.str();
}

inline std::string summary_csv(const ExperimentReport& rep) {
  std::ostringstream os;
  os << "config_digest,name,value\n";
  for (const auto& [k, v] : rep.metrics) os << rep.manifest.config_digest << ',' << k << ',' << format_double(v) << '\n';
  for (const auto& [k, v] : rep.checks) os << rep.manifest.config_digest << ",check:" << k << ',' << (v ? 1 : 0) << '\n';
  return os.str();
}

inline std::string tof_csv(const std::string& config_digest, const TofDistribution& d) {
  std::ostringstream os;
  os << "# config_digest=" << config_digest << "\nt,density,cumulative\n";
  for (std::size_t i = 0; i < d.times.size(); ++i)
    os << format_double(d.times[i]) << ',' << format_double(d.density[i]) << ',' << format_double(d.cumulative[i])
       << '\n';
  return os.str();
}

inline nlohmann::ordered_json report_json(const ExperimentReport& rep, const std::string& timestamp) {
  using nlohmann::ordered_json;
  ordered_json j;
  const auto& m = rep.manifest;
  j["experiment"] = to_string(rep.experiment);
  j["passed"] = rep.passed();
  j["manifest"] = {{"config_digest", m.config_digest},
                   {"tool_version", m.tool_version},
                   {"timestamp", timestamp},
                   {"threads", m.threads},
                   {"units",
                    {{"hbar", m.units.hbar},
                     {"g", m.units.g},
                     {"length_ref", m.units.length_ref},
                     {"mass_ref", m.units.mass_ref}}},
                   {"solver", m.solver_summary},
                   {"warnings", m.warnings},
                   {"canonical_config", m.canonical_config}};
  j["checks"] = rep.checks;
  j["metrics"] = ordered_json::object();
  for (const auto& [k, v] : rep.metrics) j["metrics"][k] = v;
  j["fits"] = ordered_json::array();
  for (const auto& f : rep.fits)
    j["fits"].push_back({{"label", f.label}, {"exponent", f.exponent}, {"stderr", f.stderr_exponent}, {"points", f.points}});
  j["distances"] = ordered_json::array();
  for (const auto& d : rep.distances)
    j["distances"].push_back({{"label", d.label}, {"l1", d.l1}, {"ks", d.ks}, {"pass", d.pass}});
  j["records"] = ordered_json::array();
  for (const auto& r : rep.records) {
    ordered_json rec{{"config_digest", m.config_digest},
                     {"digest", r.digest},
                     {"label", r.label},
                     {"group", r.group},
                     {"mode", to_string(r.mode)},
                     {"m_inertial", r.mass.inertial},
                     {"m_gravitational", r.mass.gravitational},
                     {"t_ehrenfest", r.t_ehrenfest},
                     {"sigma_full", r.sigma_full},
                     {"sigma_asymptotic", r.sigma_asymptotic},
                     {"epsilon", r.epsilon}};
    if (r.simulated)
      rec["current"] = {{"mean_t", r.distribution.mean_t},
                        {"std_t", r.distribution.std_t},
                        {"clipped_negativity", r.distribution.clipped_negativity},
                        {"flux_captured", r.distribution.flux_captured},
                        {"window", {r.distribution.window.t_min, r.distribution.window.t_max}},
                        {"solver_tolerance", r.solver_tolerance}};
    j["records"].push_back(std::move(rec));
  }
  return j;
}

namespace detail {

inline std::string snapshot_csv(const std::string& config_digest, const EvolutionResult& ev) {
  std::ostringstream os;
  os << "# config_digest=" << config_digest << "\nt,z,re,im\n";
  for (std::size_t s = 0; s < ev.fields.size(); ++s) {
    const auto t = format_double(ev.times[s]);
    for (std::size_t j = 0; j < ev.grid.size(); ++j)
      os << t << ',' << format_double(ev.grid.position(j)) << ',' << format_double(ev.fields[s].amplitudes[j].real()) << ','
         << format_double(ev.fields[s].amplitudes[j].imag()) << '\n';
  }
  return os.str();
}

// Layout: uint64 n_snapshots, uint64 n_points, double z_min, double z_max, then per
// snapshot one double t followed by n_points interleaved (re, im) doubles. Native endianness.
inline std::string snapshot_bin(const EvolutionResult& ev) {
  std::string out;
  auto put = [&](const auto& v) { out.append(reinterpret_cast<const char*>(&v), sizeof(v)); };
  put(static_cast<std::uint64_t>(ev.fields.size()));
  put(static_cast<std::uint64_t>(ev.grid.size()));
  put(ev.grid.z_min());
  put(ev.grid.z_max());
  for (std::size_t s = 0; s < ev.fields.size(); ++s) {
    put(ev.times[s]);
    out.append(reinterpret_cast<const char*>(ev.fields[s].amplitudes.data()), ev.fields[s].amplitudes.size() * sizeof(complex));
  }
  return out;
}

}  // namespace detail

/// Writes all report files into `dir` and returns their paths.
inline std::vector<std::filesystem::path> write_report(const ExperimentReport& rep, const std::filesystem::path& dir,
                                                       const SnapshotPolicy& snapshots = {}) {
  std::filesystem::create_directories(dir);
  const std::string stem = std::string(to_string(rep.experiment)) + "_" + rep.manifest.config_digest;
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& content, bool binary = false) {
    const auto p = dir / name;
    detail::write_file(p, content, binary);
    written.push_back(p);
  };
  emit(stem + ".csv", records_csv(rep));
  emit(stem + "_summary.csv", summary_csv(rep));
  if (!rep.distances.empty()) emit(stem + "_distances.csv", distances_csv(rep));
  if (!rep.fits.empty()) emit(stem + "_fits.csv", fits_csv(rep));
  for (const auto& r : rep.records) {
    if (!r.simulated) continue;
    emit(stem + "_tof_" + r.digest + ".csv", tof_csv(rep.manifest.config_digest, r.distribution));
    if (!snapshots.enabled) continue;
    for (std::size_t k = 0; k < r.evolutions.size(); ++k) {
      const std::string base = stem + "_snap_" + r.digest + "_" + std::to_string(k);
      if (snapshots.format == "bin") emit(base + ".bin", detail::snapshot_bin(r.evolutions[k]), true);
      else emit(base + ".csv", detail::snapshot_csv(rep.manifest.config_digest, r.evolutions[k]));
    }
  }
  emit(stem + ".json", report_json(rep, detail::utc_timestamp()).dump(2) + "\n");
  return written;
}

}  // namespace qfall
