// qfall: run free-fall time-of-flight experiments from INI configs.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "qfall/qfall.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kCheckFailed = 4 };

int fail(const std::string& kind, const std::string& message, int code, nlohmann::json extra = {}) {
  nlohmann::json j{{"error", kind}, {"message", message}, {"exit_code", code}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  std::cerr << j.dump() << '\n';
  return code;
}

struct Options {
  std::string config;
  std::string out;
  std::size_t threads = 0;
  bool strict = false;
  std::string snapshots;
  std::string snapshot_format;
};

void print_report(const qfall::ExperimentReport& rep) {
  std::printf("%s  digest %s\n", qfall::to_string(rep.experiment), rep.manifest.config_digest.c_str());
  for (const auto& r : rep.records) {
    std::printf("  %-28s T_ehr=%-12.8g sigma_full=%-12.6g sigma_asym=%-12.6g eps=%-9.6g", r.label.c_str(),
                r.t_ehrenfest, r.sigma_full, r.sigma_asymptotic, r.epsilon);
    if (r.simulated) std::printf(" <t>=%-12.8g std=%-10.6g", r.distribution.mean_t, r.distribution.std_t);
    std::printf("\n");
  }
  for (const auto& d : rep.distances)
    std::printf("  distance %-20s L1=%.3e KS=%.3e%s\n", d.label.c_str(), d.l1, d.ks, d.pass ? "" : "  (above bound)");
  for (const auto& f : rep.fits)
    std::printf("  fit %-40s exponent=%.6f +- %.2e (%zu points)\n", f.label.c_str(), f.exponent, f.stderr_exponent,
                f.points);
  for (const auto& [k, v] : rep.metrics) std::printf("  %-32s %.12g\n", k.c_str(), v);
  for (const auto& [k, v] : rep.checks) std::printf("  check %-40s %s\n", k.c_str(), v ? "ok" : "FAILED");
  for (const auto& w : rep.manifest.warnings) std::printf("  warning: %s\n", w.c_str());
}

int run_experiment(qfall::ExperimentKind kind, const Options& opt) {
  qfall::LoadedConfig loaded;
  if (opt.config.empty()) loaded.config = qfall::default_config(kind);
  else loaded = qfall::parse_config(opt.config, opt.strict, qfall::default_config(kind));
  auto& cfg = loaded.config;
  if (!opt.out.empty()) cfg.output_dir = opt.out;
  if (opt.threads) cfg.threads = opt.threads;
  if (!opt.snapshots.empty()) {
    const auto fmt = loaded.snapshots.format;
    loaded.snapshots = qfall::parse_snapshot_policy(opt.snapshots);
    loaded.snapshots.format = fmt;
  }
  if (!opt.snapshot_format.empty()) loaded.snapshots.format = opt.snapshot_format;
  if (loaded.snapshots.enabled) {
    cfg.solver.store_fields = true;
    cfg.solver.snapshot_stride = loaded.snapshots.stride;
  }
  const auto rep = qfall::run_experiment(kind, cfg);
  print_report(rep);
  for (const auto& p : qfall::write_report(rep, cfg.output_dir, loaded.snapshots))
    std::printf("  wrote %s\n", p.string().c_str());
  if (kind == qfall::ExperimentKind::ep_test && !rep.passed()) return kCheckFailed;
  return kOk;
}

int run_validate() {
  const auto checks = qfall::run_validation();
  bool all = true;
  std::printf("%-36s %-6s %-14s %-10s %s\n", "check", "result", "value", "bound", "detail");
  for (const auto& c : checks) {
    std::printf("%-36s %-6s %-14.6e %-10.3g %s\n", c.name.c_str(), c.pass ? "PASS" : "FAIL", c.value, c.tolerance,
                c.detail.c_str());
    all = all && c.pass;
  }
  std::printf("%zu checks, %s\n", checks.size(), all ? "all passed" : "FAILURES");
  return all ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum free-fall time-of-flight experiments"};
  app.set_version_flag("--version", qfall::kVersion);
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "INI experiment config")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--strict", opt.strict, "reject unknown config keys");
    sub->add_option("--snapshots", opt.snapshots, "none | strided:K");
    sub->add_option("--snapshot-format", opt.snapshot_format, "csv | bin")->check(CLI::IsMember({"csv", "bin"}));
  };
  std::optional<qfall::ExperimentKind> kind;
  const std::pair<const char*, qfall::ExperimentKind> subs[] = {
      {"drop", qfall::ExperimentKind::drop},
      {"ep-test", qfall::ExperimentKind::ep_test},
      {"sweep", qfall::ExperimentKind::sweep},
      {"decohere", qfall::ExperimentKind::decohere},
  };
  const char* help[] = {"drop two matched particles", "gravity vs accelerated frame", "mass and state sweeps",
                        "pure cat vs decohered mixture"};
  for (std::size_t i = 0; i < 4; ++i) {
    auto* sub = app.add_subcommand(subs[i].first, help[i]);
    add_common(sub);
    sub->callback([&kind, k = subs[i].second] { kind = k; });
  }
  app.add_subcommand("validate", "analytic vs numeric oracle suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (!kind) return run_validate();
    return run_experiment(*kind, opt);
  } catch (const qfall::InfeasibleMatchError& e) {
    return fail(e.kind(), e.what(), kConfig, {{"target_velocity", e.target_velocity()}, {"v_max", e.max_velocity()}});
  } catch (const qfall::ParseError& e) {
    return fail("parse", e.what(), kConfig, {{"key", e.key()}, {"line", e.line()}});
  } catch (const qfall::ConfigError& e) {
    return fail(e.kind(), e.what(), kConfig);
  } catch (const qfall::SolverError& e) {
    return fail(e.kind(), e.what(), kSolver, {{"step", e.step()}});
  } catch (const qfall::Error& e) {
    return fail(e.kind(), e.what(), kSolver);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kSolver);
  }
}
