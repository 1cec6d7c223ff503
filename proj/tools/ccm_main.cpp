// ccm: synthesize contraction metrics, verify them, simulate the loop, emit plots.
//
// exit codes: 0 ok / feasible, 1 usage or input error, 2 infeasible (or a
// verification failure), 3 solver inconclusive.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "ccm/config.hpp"
#include "ccm/report.hpp"
#include "ccm/sim.hpp"
#include "ccm/synth.hpp"

namespace fs = std::filesystem;
using namespace ccm;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kInfeasible = 2;
constexpr int kInconclusive = 3;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

std::string vec_str(const Eigen::VectorXd& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v(i));
  return s + ")";
}

std::string certificate_text(const SynthesisResult& r) {
  std::ostringstream out;
  out << "ccm-certificate 1\nrole = " << to_string(r.role) << "\nstatus = " << to_string(r.status)
      << "\nmessage = " << r.message << "\nmultipliers =";
  for (Eigen::Index i = 0; i < r.sdp.certificate.size(); ++i) out << ' ' << format_double(r.sdp.certificate(i));
  out << "\nend\n";
  return out.str();
}

/// Deterministic per-role summary; wall time is printed separately.
std::string summary(const SynthesisResult& r, const SynthesisParams& p) {
  std::ostringstream s;
  s << "[" << to_string(r.role) << "]\n";
  s << "status = " << to_string(r.status) << "\n";
  s << "message = " << r.message << "\n";
  s << "lambda = " << format_double(p.lambda) << "\n";
  s << "W bounds = [" << format_double(p.alpha1) << ", " << format_double(p.alpha2) << "]\n";
  if (r.role == MetricRole::Controller) {
    s << "M bounds = [" << format_double(1.0 / p.alpha2) << ", " << format_double(1.0 / p.alpha1) << "]\n";
  } else {
    s << "M bounds = [" << format_double(p.alpha1) << ", " << format_double(p.alpha2) << "]\n";
  }
  s << "iterations = " << r.sdp.iterations << "\n";
  s << "equalities = " << r.num_equalities << "\n";
  s << "psd blocks = " << r.num_blocks << "\n";
  s << "scalars = " << r.num_scalars << "\n";
  s << "gram sizes =";
  for (int g : r.gram_sizes) s << ' ' << g;
  s << "\n";
  if (r.metric) {
    s << "W = " << format_matrix(r.metric->W) << "\n";
    s << "digest = " << r.metric->digest << "\n";
  }
  return s.str();
}

int status_code(SynthesisStatus s) {
  switch (s) {
    case SynthesisStatus::Feasible:
      return kOk;
    case SynthesisStatus::Infeasible:
      return kInfeasible;
    case SynthesisStatus::Inconclusive:
      break;
  }
  return kInconclusive;
}

int cmd_synthesize(const std::string& config_path, std::string outdir) {
  const ProjectConfig cfg = load_config(config_path);
  if (outdir.empty()) outdir = cfg.output_dir;

  auto ctl = std::async(std::launch::async, [&] { return synthesize(cfg.model, MetricRole::Controller, cfg.controller); });
  auto obs = std::async(std::launch::async, [&] { return synthesize(cfg.model, MetricRole::Observer, cfg.observer); });
  const SynthesisResult results[2] = {ctl.get(), obs.get()};
  const SynthesisParams* params[2] = {&cfg.controller, &cfg.observer};

  std::string report;
  int worst = kOk;
  for (int i = 0; i < 2; ++i) {
    const SynthesisResult& r = results[i];
    const std::string role = to_string(r.role);
    const fs::path metric_path = fs::path(outdir) / (role + ".metric");
    const fs::path cert_path = fs::path(outdir) / (role + ".certificate");
    std::error_code ec;
    if (r.status == SynthesisStatus::Feasible) {
      write_file(metric_path, serialize(*r.metric, cfg.model));
      fs::remove(cert_path, ec);
    } else {
      write_file(cert_path, certificate_text(r));
      fs::remove(metric_path, ec);
    }
    report += (i ? "\n" : "") + summary(r, *params[i]);
    std::cout << role << ": " << to_string(r.status) << " (" << r.message << "), " << r.sdp.iterations
              << " iterations, " << r.num_equalities << " equalities, " << std::fixed << std::setprecision(3)
              << r.wall_seconds << " s\n"
              << std::defaultfloat;
    const int code = status_code(r.status);
    if (code == kInconclusive || (code == kInfeasible && worst == kOk)) worst = code;
  }
  write_file(fs::path(outdir) / "synthesis.txt", report);
  std::cout << "wrote " << outdir << "\n";
  return worst;
}

std::pair<double, double> parse_box(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--box", "expected LO:HI");
  try {
    std::size_t a = 0;
    std::size_t b = 0;
    const std::string lo_s = s.substr(0, colon);
    const std::string hi_s = s.substr(colon + 1);
    const double lo = std::stod(lo_s, &a);
    const double hi = std::stod(hi_s, &b);
    if (a != lo_s.size() || b != hi_s.size() || !(lo <= hi)) throw std::invalid_argument(s);
    return {lo, hi};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--box", "expected LO:HI with LO <= HI");
  }
}

int cmd_verify(const std::vector<std::string>& metrics, const std::string& box_s, int grid, double tol,
               const std::string& config_path) {
  const auto [lo, hi] = parse_box(box_s);
  std::optional<ProjectConfig> cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  bool all_pass = true;
  for (const auto& path : metrics) {
    const LoadedMetric lm = parse_metric(read_file(path));
    const SystemModel* model = lm.model ? &*lm.model : (cfg ? &cfg->model : nullptr);
    if (!model) throw std::runtime_error(path + ": metric has no model block; pass -c CONFIG");
    const VerifyReport v = verify_pointwise(lm.metric, *model, Box::cube(model->n, lo, hi), grid, tol);
    const bool pass = v.passed(tol);
    all_pass = all_pass && pass;
    std::cout << path << ": " << (pass ? "PASS" : "FAIL") << " role=" << to_string(lm.metric.role)
              << " max_violation=" << format_double(v.max_violation) << " worst_point=" << vec_str(v.worst_point)
              << " points=" << v.points << " W_eig=[" << format_double(v.w_min_eig) << ", "
              << format_double(v.w_max_eig) << "]" << (v.bounds_ok ? "" : " (outside alpha bounds)") << "\n";
  }
  return all_pass ? kOk : kInfeasible;
}

int cmd_simulate(const std::string& config_path, const std::string& metric_dir, const std::string& mode,
                 std::optional<double> noise, std::optional<std::uint64_t> seed, std::optional<double> horizon,
                 std::string out_path) {
  const ProjectConfig cfg = load_config(config_path);
  ProjectConfig c = cfg;
  if (noise) c.sim.noise_std = *noise;
  if (seed) c.sim.seed = *seed;
  if (horizon) c.sim.T = *horizon;
  const SimConfig sim = resolve_sim(c);

  auto load = [&](const char* role) {
    if (metric_dir.empty()) throw std::runtime_error("mode " + mode + " needs -m METRIC_DIR");
    return parse_metric(read_file(fs::path(metric_dir) / (std::string(role) + ".metric"))).metric;
  };

  SimTrace trace;
  std::optional<ContractionMetric> cm;
  if (mode == "open") {
    trace = run_open_loop(c.model, sim);
  } else if (mode == "state_fb") {
    cm = load("controller");
    trace = run_state_feedback(c.model, ControlLaw(*cm, c.model), sim);
  } else {
    cm = load("controller");
    const ContractionMetric om = load("observer");
    trace = run_output_feedback(c.model, ControlLaw(*cm, c.model), ObserverLaw(om, c.model), sim);
  }

  if (out_path.empty()) out_path = (fs::path(metric_dir.empty() ? c.output_dir : metric_dir) / (mode + ".csv")).string();
  std::ostringstream csv;
  write_csv(csv, c.model, trace);
  write_file(out_path, csv.str());

  const double T = trace.t.back();
  double mx = 0.0, mean = 0.0;
  std::size_t cnt = 0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (trace.t[k] < 0.5 * T) continue;
    const double r = trace.x[k].norm();
    mx = std::max(mx, r);
    mean += r;
    ++cnt;
  }
  mean /= static_cast<double>(std::max<std::size_t>(cnt, 1));
  std::cout << "wrote " << out_path << " (" << trace.size() << " rows)\n";
  std::cout << "overshoot = " << format_double(overshoot(trace)) << "\n";
  try {
    std::cout << "decay rate of d over [T/2, T] = " << format_double(decay_rate(trace, 0.5 * T, T)) << "\n";
  } catch (const SimError& e) {
    std::cout << "decay rate unavailable: " << e.what() << "\n";
  }
  std::cout << "final |x| = " << format_double(trace.x.back().norm()) << "\n";
  std::cout << "|x| over [T/2, T]: max = " << format_double(mx) << ", mean = " << format_double(mean) << "\n";
  if (cm) {
    const IssConstants k = IssConstants::from(*cm);
    std::cout << "bound gain: 1/sqrt(alpha1) = " << format_double(k.inv_sqrt_alpha1)
              << " (used); sqrt(alpha1) = " << format_double(k.sqrt_alpha1)
              << "; sqrt(alpha2) = " << format_double(k.sqrt_alpha2) << "\n";
    if (mode == "output_fb") {
      std::cout << "disturbance envelope: beta = " << format_double(trace.env_beta)
                << ", alpha = " << format_double(trace.env_alpha) << "\n";
    }
  }
  return kOk;
}

int cmd_report(const std::vector<std::string>& traces, const std::string& outdir) {
  std::vector<TraceTable> tables;
  for (const auto& t : traces) tables.push_back(read_trace_csv(t));
  for (const auto& f : write_report(tables, outdir)) std::cout << "wrote " << f << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contraction-metric synthesis and output-feedback simulation"};
  app.require_subcommand(1);

  std::string config;
  std::string outdir;
  auto* syn = app.add_subcommand("synthesize", "solve the controller and observer metric programs");
  syn->add_option("-c,--config", config, "config file or preset (mg-slow, mg-medium, mg-fast)")->required();
  syn->add_option("-o,--out", outdir, "output directory (default: [output] dir)");

  std::vector<std::string> metrics;
  std::string box = "-5:5";
  int grid = 101;
  double tol = 1e-6;
  std::string vconfig;
  auto* ver = app.add_subcommand("verify", "check metric LMIs on a sampling grid");
  ver->add_option("-m,--metric", metrics, "metric file(s)")->required();
  ver->add_option("--box", box, "per-axis interval LO:HI")->capture_default_str();
  ver->add_option("--grid", grid, "points per axis")->capture_default_str()->check(CLI::PositiveNumber);
  ver->add_option("--tol", tol, "eigenvalue tolerance")->capture_default_str();
  ver->add_option("-c,--config", vconfig, "model config for metric files without a model block");

  std::string sconfig;
  std::string mdir;
  std::string mode;
  double noise = 0.0;
  std::uint64_t seed = 0;
  double horizon = 0.0;
  std::string csv_out;
  auto* simc = app.add_subcommand("simulate", "simulate the plant, optionally in closed loop");
  simc->add_option("-c,--config", sconfig, "config file or preset")->required();
  simc->add_option("-m,--metrics", mdir, "directory holding controller.metric / observer.metric");
  simc->add_option("--mode", mode, "open | state_fb | output_fb")
      ->required()
      ->check(CLI::IsMember({"open", "state_fb", "output_fb"}));
  auto* noise_opt = simc->add_option("--noise", noise, "measurement noise standard deviation")
                        ->check(CLI::NonNegativeNumber);
  auto* seed_opt = simc->add_option("--seed", seed, "noise seed");
  auto* t_opt = simc->add_option("-T,--horizon", horizon, "override the horizon")->check(CLI::PositiveNumber);
  simc->add_option("-o,--out", csv_out, "CSV path (default: METRIC_DIR/MODE.csv)");

  std::vector<std::string> traces;
  std::string rdir = "report";
  auto* rep = app.add_subcommand("report", "emit matplotlib scripts for traces");
  rep->add_option("traces", traces, "trace CSV files")->required();
  rep->add_option("-o,--out", rdir, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*syn) return cmd_synthesize(config, outdir);
    if (*ver) return cmd_verify(metrics, box, grid, tol, vconfig);
    if (*simc) {
      return cmd_simulate(sconfig, mdir, mode, *noise_opt ? std::optional<double>(noise) : std::nullopt,
                          *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt,
                          *t_opt ? std::optional<double>(horizon) : std::nullopt, csv_out);
    }
    if (*rep) return cmd_report(traces, rdir);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
