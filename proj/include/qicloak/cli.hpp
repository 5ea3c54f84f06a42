#pragma once

#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qicloak/analytic.hpp"
#include "qicloak/config.hpp"
#include "qicloak/engine.hpp"
#include "qicloak/errors.hpp"
#include "qicloak/table.hpp"
#include "qicloak/version.hpp"

// Command line front end. Exit codes: 0 success, 1 validation found a
// disagreement, 2 unusable input (arguments or config), 3 numerical failure
// (truncation cap, no boundary in range, degenerate statistics).
namespace qicloak::cli {

namespace detail {

struct OptionRefs {
  CLI::Option* N = nullptr;
  CLI::Option* n_th = nullptr;
  CLI::Option* eta = nullptr;
  CLI::Option* phi = nullptr;
  CLI::Option* G = nullptr;
  CLI::Option* chi = nullptr;
  CLI::Option* protocol = nullptr;
  CLI::Option* tol = nullptr;
  CLI::Option* cap = nullptr;
  CLI::Option* oracle = nullptr;
  CLI::Option* object_first = nullptr;
  CLI::Option* config = nullptr;
};

struct Values {
  double N = 0.0, n_th = 0.0, eta = 1.0, phi = 0.0, G = 1.0, chi = 1.0;
  double tol = 1e-5;
  long cap = fock::kDefaultSideCap;
  bool oracle = true;
  bool object_first = false;
  std::string protocol = "quadrature";
  std::string config_path;
  std::string format;
  std::string out_path;
  std::vector<std::string> axis_specs;
};

inline OptionRefs add_scenario_options(CLI::App* cmd, Values& v) {
  OptionRefs o;
  o.N = cmd->add_option("--N", v.N, "probe mean photon number per mode");
  o.n_th = cmd->add_option("--nth", v.n_th, "thermal background occupation");
  o.eta = cmd->add_option("--eta", v.eta, "background transmissivity in (0, 1]");
  o.phi = cmd->add_option("--phi", v.phi, "object phase in radians");
  o.G = cmd->add_option("--G", v.G, "mixer gain (>= 1)");
  o.chi = cmd->add_option("--chi", v.chi, "detector efficiency in [0, 1]");
  o.protocol = cmd->add_option("--protocol", v.protocol,
                               "classical | quadrature | jm | jm_imperfect");
  o.tol = cmd->add_option("--tol", v.tol, "oracle agreement tolerance");
  o.cap = cmd->add_option("--dim-cap", v.cap, "largest allowed joint basis side")
              ->envname("QI_CLOAK_DIM_CAP");
  o.oracle = cmd->add_flag("--oracle,!--no-oracle", v.oracle,
                           "run the truncated Fock-space oracle");
  o.object_first = cmd->add_flag("--object-first", v.object_first,
                                 "apply the object phase before the background mixes in");
  o.config = cmd->add_option("--config", v.config_path, "key=value scenario file");
  return o;
}

inline void add_output_options(CLI::App* cmd, Values& v) {
  cmd->add_option("--format", v.format, "csv | json (compare also: text)");
  cmd->add_option("--out", v.out_path, "write results to a file instead of stdout");
}

inline engine::ScenarioConfig resolve(const Values& v, const OptionRefs& o,
                                      std::vector<engine::SweepAxis>& axes,
                                      std::optional<engine::Protocol> default_protocol = {}) {
  config::ConfigDocument doc;
  if (o.config->count()) doc = config::load_config(v.config_path);
  if (default_protocol && !o.protocol->count() && !doc.has_protocol)
    doc.base.protocol = *default_protocol;
  if (o.protocol->count()) doc.base.protocol = engine::protocol_from_name(v.protocol);
  if (o.N->count()) doc.base.params.N = v.N;
  if (o.n_th->count()) doc.base.params.n_th = v.n_th;
  if (o.eta->count()) doc.base.params.eta = v.eta;
  if (o.phi->count()) doc.base.params.phi = v.phi;
  if (o.G->count()) {
    doc.base.params.G = v.G;
    doc.has_G = true;
  }
  if (o.chi->count()) doc.base.params.chi = v.chi;
  if (o.tol->count()) doc.base.tolerance = v.tol;
  if (o.cap->count()) doc.base.side_cap = v.cap;
  if (o.oracle->count()) doc.base.oracle = v.oracle;
  if (o.object_first->count()) doc.base.object_before_background = v.object_first;
  config::apply_gain_default(doc);
  if (!(doc.base.tolerance > 0.0)) throw InvalidParameterError("tolerance must be > 0");
  if (doc.base.side_cap < 16) throw InvalidParameterError("dim cap must be >= 16");
  doc.base.params.validate();
  axes = doc.axes;
  return doc.base;
}

inline engine::SweepAxis parse_axis_spec(const std::string& spec,
                                         const ProtocolParams& base) {
  const size_t eq = spec.find('=');
  if (eq == std::string::npos)
    throw InvalidParameterError("axis must look like name=v1,v2,... got '" + spec + "'");
  engine::SweepAxis axis;
  axis.name = config::detail::trim(spec.substr(0, eq));
  axis.values = config::detail::parse_list(config::detail::trim(spec.substr(eq + 1)),
                                           "--axis " + axis.name, 0);
  for (double val : axis.values) {
    ProtocolParams probe = base;
    engine::set_param(probe, axis.name, val);
    probe.validate();
  }
  return axis;
}

inline void echo_scenario(std::ostream& err, const engine::ScenarioConfig& cfg) {
  const auto& p = cfg.params;
  err << "resolved: protocol=" << engine::protocol_name(cfg.protocol) << " N="
      << table::format_double(p.N) << " n_th=" << table::format_double(p.n_th)
      << " eta=" << table::format_double(p.eta) << " phi=" << table::format_double(p.phi);
  if (engine::uses_mixer(cfg.protocol)) err << " G=" << table::format_double(p.G);
  if (cfg.protocol == engine::Protocol::JmImperfect)
    err << " chi=" << table::format_double(p.chi);
  err << " tolerance=" << table::format_double(cfg.tolerance)
      << " dim_cap=" << cfg.side_cap << " oracle=" << (cfg.oracle ? "on" : "off");
  if (cfg.object_before_background) err << " object-first";
  err << "\n";
}

class OutputTarget {
 public:
  OutputTarget(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw InvalidParameterError("cannot open output file: " + path);
      stream_ = &file_;
    }
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

inline table::SweepRow scenario_row(const engine::ScenarioConfig& cfg,
                                    const engine::ScenarioResult& res) {
  const auto& p = cfg.params;
  table::SweepRow row;
  row["N"] = p.N;
  row["n_th"] = p.n_th;
  row["eta"] = p.eta;
  row["phi"] = p.phi;
  if (engine::uses_mixer(cfg.protocol)) row["G"] = p.G;
  if (cfg.protocol == engine::Protocol::JmImperfect) row["chi"] = p.chi;
  row["snr_classical"] = analytic::classical_snr(p).snr;
  row["snr_quantum"] = analytic::quantum_snr(p).snr;
  if (engine::uses_mixer(cfg.protocol)) row["snr_jm"] = res.analytic.snr;
  row["ratio"] = res.ratio_to_classical;
  row["ratio_db"] = res.ratio_db;
  if (res.oracle_discrepancy) row["oracle_discrepancy"] = *res.oracle_discrepancy;
  return row;
}

inline int run_compare(const Values& v, const OptionRefs& o, std::ostream& out,
                       std::ostream& err) {
  std::vector<engine::SweepAxis> axes;
  const engine::ScenarioConfig cfg = resolve(v, o, axes);
  echo_scenario(err, cfg);
  const engine::ScenarioResult res = engine::run_scenario(cfg);

  OutputTarget target(v.out_path, out);
  if (v.format.empty() || v.format == "text") {
    std::ostream& os = target.stream();
    const auto g = table::format_double;
    os << "protocol " << engine::protocol_name(cfg.protocol) << "\n";
    os << "  analytic:  snr=" << g(res.analytic.snr)
       << "  mean@0=" << g(res.analytic.mean_at_zero)
       << "  mean@phi=" << g(res.analytic.mean_at_phi)
       << "  noise_var=" << g(res.analytic.noise_var) << "\n";
    if (res.oracle) {
      os << "  oracle:    snr=" << g(res.oracle->snr)
         << "  mean@0=" << g(res.oracle->mean_at_zero)
         << "  mean@phi=" << g(res.oracle->mean_at_phi)
         << "  noise_var=" << g(res.oracle->noise_var) << "\n";
      os << "  agreement: worst field discrepancy " << g(*res.oracle_discrepancy)
         << " (dims signal=" << res.dims.signal << " idler=" << res.dims.idler
         << " env=" << res.dims.env << " ancilla=" << res.dims.ancilla
         << ", truncated mass " << g(res.tail_mass) << ")\n";
    }
    if (cfg.protocol != engine::Protocol::Classical)
      os << "  classical: snr=" << g(analytic::classical_snr(cfg.params).snr) << "\n";
    os << "  ratio-to-classical=" << g(res.ratio_to_classical) << " ("
       << g(res.ratio_db) << " dB)\n";
    return 0;
  }
  table::SweepTable t;
  t.metadata = {"qicloak", kVersion, engine::protocol_name(cfg.protocol), cfg.tolerance,
                cfg.oracle, cfg.side_cap};
  t.rows.push_back(scenario_row(cfg, res));
  table::emit_table(target.stream(), t, table::format_from_name(v.format));
  return 0;
}

inline int run_sweep(const Values& v, const OptionRefs& o, std::ostream& out,
                     std::ostream& err) {
  std::vector<engine::SweepAxis> axes;
  const engine::ScenarioConfig cfg = resolve(v, o, axes);
  for (const auto& spec : v.axis_specs)
    axes.push_back(parse_axis_spec(spec, cfg.params));
  if (axes.empty())
    throw InvalidParameterError(
        "sweep needs at least one axis (sweep.<param> in the config or --axis)");
  echo_scenario(err, cfg);
  for (const auto& ax : axes) {
    err << "axis " << ax.name << ":";
    for (double val : ax.values) err << " " << table::format_double(val);
    err << "\n";
  }
  const table::SweepTable t = engine::sweep(cfg, axes);
  OutputTarget target(v.out_path, out);
  table::emit_table(target.stream(), t,
                    table::format_from_name(v.format.empty() ? "csv" : v.format));
  return 0;
}

inline int run_validate(const Values& v, const OptionRefs& o, std::ostream& out,
                        std::ostream& err) {
  std::vector<engine::SweepAxis> axes;
  const engine::ScenarioConfig cfg = resolve(v, o, axes);
  echo_scenario(err, cfg);

  std::vector<engine::ValidationPoint> points;
  const bool point_given = o.N->count() || o.n_th->count() || o.eta->count() ||
                           o.phi->count() || o.config->count();
  if (point_given)
    points.push_back({cfg.params, {cfg.protocol}});
  else
    points = engine::default_validation_grid();

  const engine::ValidationReport report =
      engine::cross_validate(points, cfg.oracle_settings());

  int passed = 0, failed = 0, inconclusive = 0;
  for (const auto& e : report.entries) {
    out << engine::protocol_name(e.protocol) << " N=" << table::format_double(e.params.N)
        << " n_th=" << table::format_double(e.params.n_th)
        << " eta=" << table::format_double(e.params.eta)
        << " phi=" << table::format_double(e.params.phi);
    if (engine::uses_mixer(e.protocol))
      out << " G=" << table::format_double(e.params.G);
    if (e.protocol == engine::Protocol::JmImperfect)
      out << " chi=" << table::format_double(e.params.chi);
    out << " : " << engine::status_name(e.status);
    if (e.status == engine::ValidationStatus::Inconclusive) {
      out << " (" << e.note << ")";
      ++inconclusive;
    } else {
      out << " worst=" << table::format_double(e.worst_rel) << " (" << e.worst_field
          << "), dims " << e.dims.signal << "/" << e.dims.idler << "/" << e.dims.env
          << "/" << e.dims.ancilla << ", tail " << table::format_double(e.tail_mass);
      (e.status == engine::ValidationStatus::Pass ? passed : failed)++;
    }
    out << "\n";
  }
  out << "validation: " << passed << " passed, " << failed << " failed, " << inconclusive
      << " inconclusive\n";
  if (failed > 0) return 1;
  if (inconclusive > 0) return 3;
  return 0;
}

inline int run_region(const Values& v, const OptionRefs& o, std::ostream& out,
                      std::ostream& err) {
  std::vector<engine::SweepAxis> axes;
  const engine::ScenarioConfig cfg = resolve(v, o, axes);
  echo_scenario(err, cfg);
  const double closed =
      analytic::gain_region_upper_bound(cfg.params.eta, cfg.params.n_th);
  const auto bisected = engine::find_gain_boundary(cfg.params.eta, cfg.params.n_th);
  if (!bisected) {
    err << "no advantage boundary found in range\n";
    return 3;
  }
  const auto g = table::format_double;
  out << "brightness bound where the quadrature advantage ends (cos^2 phi = 1)\n";
  out << "  closed-form: " << g(closed) << "\n";
  out << "  bisection:   " << g(*bisected) << "\n";
  out << "  |difference|: " << g(std::abs(closed - *bisected)) << "\n";
  return 0;
}

inline int run_threshold(const Values& v, const OptionRefs& o, std::ostream& out,
                         std::ostream& err) {
  std::vector<engine::SweepAxis> axes;
  const engine::ScenarioConfig cfg =
      resolve(v, o, axes, engine::Protocol::JmImperfect);
  echo_scenario(err, cfg);
  const auto g = table::format_double;
  const auto exact = engine::find_efficiency_boundary(cfg.params);
  if (!exact) {
    err << "no detector efficiency in (0, 1] gives a quantum advantage here\n";
    return 3;
  }
  out << "minimum detector efficiency for a quantum advantage (phi = pi)\n";
  out << "  exact (bisection): " << g(*exact) << "\n";
  try {
    out << "  large-background expansion: "
        << g(analytic::efficiency_threshold(cfg.params)) << "\n";
  } catch (const OutOfRegimeError& e) {
    out << "  large-background expansion: not applicable (" << e.what() << ")\n";
  }
  return 0;
}

}  // namespace detail

inline int dispatch(int argc, const char* const* argv, std::ostream& out,
                    std::ostream& err) {
  CLI::App app{"phase-object detection through a lossy thermal background: "
               "closed-form SNRs cross-checked by a truncated Fock-space oracle"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  detail::Values v;
  int exit_code = 0;

  auto* compare = app.add_subcommand(
      "compare", "analytic and oracle SNR at one operating point");
  auto compare_opts = detail::add_scenario_options(compare, v);
  detail::add_output_options(compare, v);
  compare->callback(
      [&]() { exit_code = detail::run_compare(v, compare_opts, out, err); });

  auto* sweep = app.add_subcommand("sweep", "tabulate SNRs over parameter grids");
  auto sweep_opts = detail::add_scenario_options(sweep, v);
  detail::add_output_options(sweep, v);
  sweep->add_option("--axis", v.axis_specs,
                    "sweep axis, e.g. --axis phi=0.3,1.0,3.14 (repeatable)");
  sweep->callback([&]() { exit_code = detail::run_sweep(v, sweep_opts, out, err); });

  auto* validate = app.add_subcommand(
      "validate", "check every closed form against the numerical oracle");
  auto validate_opts = detail::add_scenario_options(validate, v);
  validate->callback(
      [&]() { exit_code = detail::run_validate(v, validate_opts, out, err); });

  auto* region = app.add_subcommand(
      "region", "brightness range with a quantum advantage for given eta, n_th");
  auto region_opts = detail::add_scenario_options(region, v);
  region->callback(
      [&]() { exit_code = detail::run_region(v, region_opts, out, err); });

  auto* threshold = app.add_subcommand(
      "threshold", "minimum detector efficiency that keeps the mixer advantage");
  auto threshold_opts = detail::add_scenario_options(threshold, v);
  threshold->callback(
      [&]() { exit_code = detail::run_threshold(v, threshold_opts, out, err); });

  try {
    app.parse(argc, argv);
    return exit_code;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return e.get_exit_code() == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    err << "config error";
    if (e.line() > 0) err << " at line " << e.line();
    if (!e.key().empty()) err << " (key " << e.key() << ")";
    err << ": " << e.what() << "\n";
    return 2;
  } catch (const InvalidParameterError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ZeroSignalError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const OutOfRegimeError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const IndeterminateRatioError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace qicloak::cli
