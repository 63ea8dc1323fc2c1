// spinsim: single-spin simulations, spin-noise numbers, gradient-echo
// sequence generation, the imaging pipeline, and the verification suite.
//
// Exit codes: 0 ok, 2 usage/config error, 3 verification failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "spinsim/spinsim.hpp"
#include "spinsim/verify.hpp"

using namespace spinsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_hash(const json& j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  json j;
  in >> j;
  return j;
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / name).string());
  return out;
}

struct SpinConfig {
  std::string sim_case = "static";  // static | rf | kinetic | general
  double b0_T = 1.0e-7;
  double b1_T = 1.0e-8;
  double omega_rf_rad_s = 0.0;  // 0: lock to the Larmor frequency
  double kprime_J = 0.0;
  double bx_T = 0.0;
  double by_T = 0.0;
  double bz_offset_T = 0.0;
  double r1 = 1.0, phi1_rad = 0.0;
  double r2 = 1.0, phi2_rad = 0.0;
  double t_end_s = 0.0;  // 0: ten nutation periods
  double dt_s = 0.0;     // 0: shortest period / 1000
};

void to_json(json& j, const SpinConfig& s) {
  j = json{{"case", s.sim_case}, {"b0_T", s.b0_T}, {"b1_T", s.b1_T},
           {"omega_rf_rad_s", s.omega_rf_rad_s}, {"kprime_J", s.kprime_J},
           {"bx_T", s.bx_T}, {"by_T", s.by_T}, {"bz_offset_T", s.bz_offset_T},
           {"r1", s.r1}, {"phi1_rad", s.phi1_rad}, {"r2", s.r2}, {"phi2_rad", s.phi2_rad},
           {"t_end_s", s.t_end_s}, {"dt_s", s.dt_s}};
}

void from_json(const json& j, SpinConfig& s) {
  auto get = [&j](const char* key, auto& into) {
    if (j.contains(key)) j.at(key).get_to(into);
  };
  get("case", s.sim_case);
  get("b0_T", s.b0_T);
  get("b1_T", s.b1_T);
  get("omega_rf_rad_s", s.omega_rf_rad_s);
  get("kprime_J", s.kprime_J);
  get("bx_T", s.bx_T);
  get("by_T", s.by_T);
  get("bz_offset_T", s.bz_offset_T);
  get("r1", s.r1);
  get("phi1_rad", s.phi1_rad);
  get("r2", s.r2);
  get("phi2_rad", s.phi2_rad);
  get("t_end_s", s.t_end_s);
  get("dt_s", s.dt_s);
}

int run_spin(const SpinConfig& cfg, const fs::path& outdir) {
  const PhysicalConstants c;
  FieldConfig fc(cfg.b0_T, cfg.b1_T, cfg.omega_rf_rad_s, cfg.kprime_J, cfg.bx_T, cfg.by_T,
                 cfg.bz_offset_T);
  if (cfg.sim_case == "rf" && fc.omega_rf == 0.0) fc.omega_rf = fc.omega0(c);
  const Spinor x0 = make_spinor(cfg.r1, cfg.phi1_rad, cfg.r2, cfg.phi2_rad);

  const double w0 = fc.omega0(c);
  const double k = fc.kinetic_rate(c);
  double delta = std::abs(w0);
  HamiltonianFunction h;
  std::function<Spinor(double)> closed;
  if (cfg.sim_case == "static") {
    h = [fc, c](double) { return hamiltonian_static(fc, c); };
    closed = [w0, x0](double t) { return free_evolution(w0, t) * x0; };
  } else if (cfg.sim_case == "rf") {
    const double w1 = fc.omega1_rf(c);
    const double omega = fc.omega_rf;
    delta = std::hypot(w0 - omega, w1);
    h = [fc, c](double t) { return hamiltonian_rf(fc, t, c); };
    closed = [omega, w0, w1, x0](double t) { return rf_propagator(omega, w0, w1, t) * x0; };
  } else if (cfg.sim_case == "kinetic") {
    delta = std::hypot(w0, k);
    h = [fc, c](double) { return hamiltonian_kinetic(fc, c); };
    closed = [w0, k, x0](double t) { return kinetic_propagator(w0, k, t) * x0; };
  } else if (cfg.sim_case == "general") {
    const double w_total = -c.gamma_proton * (fc.b0 + fc.bz_offset);
    delta = std::hypot(std::hypot(fc.omega_x(c) + k, fc.omega_y(c)), w_total);
    h = [fc, c](double) { return hamiltonian_general(fc, c); };
    closed = [fc, c, x0](double t) { return general_solution(fc, x0, t, c); };
  } else {
    throw Error("unknown case: " + cfg.sim_case + " (expected static|rf|kinetic|general)");
  }
  if (delta <= 0.0) throw Error("all dynamic rates are zero; nothing to simulate");

  const double t_end = cfg.t_end_s > 0.0 ? cfg.t_end_s : 10.0 * 4.0 * M_PI / delta;
  const double dt =
      cfg.dt_s > 0.0 ? cfg.dt_s : default_step({w0, fc.omega_rf, fc.omega1_rf(c), k, delta});

  const Trajectory traj = integrate(h, x0, t_end, dt, c);
  const double dev = max_deviation(traj, closed);
  const double drift = max_norm_drift(traj);

  json jcfg;
  to_json(jcfg, cfg);
  const std::string hash = config_hash(jcfg);

  auto csv = open_out(outdir, "trajectory.csv");
  write_trajectory_csv(csv, traj, "config_hash=" + hash);

  auto rep = open_out(outdir, "deviation_report.txt");
  char line[256];
  std::snprintf(line, sizeof line,
                "# config_hash=%s\ncase=%s\nsteps=%zu\nt_end_s=%.17g\ndt_s=%.17g\n"
                "max_deviation=%.17g\nnorm_drift=%.17g\ntolerance=1e-08\n",
                hash.c_str(), cfg.sim_case.c_str(), traj.size(), t_end, dt, dev, drift);
  rep << line;
  std::cout << "case=" << cfg.sim_case << " steps=" << traj.size() << " max_deviation=" << dev
            << " norm_drift=" << drift << "\n";
  if (dev > 1e-8) {
    std::cerr << "closed form deviates from the integrator beyond 1e-8\n";
    return 3;
  }
  return 0;
}

int run_noise(double kprime, double omega0_mag, const fs::path& outdir) {
  const PhysicalConstants c;
  const double k = 2.0 * kprime / c.hbar;
  const double p = emission_probability(k, omega0_mag);
  const double amp = std::sqrt(std::abs(p));
  json jcfg{{"kprime_J", kprime}, {"omega0_mag_s", omega0_mag}};
  const std::string hash = config_hash(jcfg);

  char buf[512];
  std::snprintf(buf, sizeof buf,
                "emission_probability=%.6e\namplitude_ratio=%.6e\nsign=%s\n"
                "kinetic_rate_rad_s=%.6e\n",
                p, amp, p < 0.0 ? "negative" : "non-negative", k);
  std::cout << buf;
  std::cout << "note: omega0 is the plain s^-1 magnitude (a 300 MHz system passes 3e8)\n";
  auto rep = open_out(outdir, "noise_report.txt");
  rep << "# config_hash=" << hash << "\n" << buf;
  return 0;
}

int run_sequence(const SequenceConfig& cfg, const fs::path& outdir) {
  const PhysicalConstants c;
  const auto seqs = gradient_echo(cfg.params(), c);
  std::size_t violations = 0;
  for (const auto& s : seqs) violations += validate(s).size();
  const double total_acq = cfg.tr_s * static_cast<double>(seqs.size());

  json jcfg;
  to_json(jcfg, cfg);
  const std::string hash = config_hash(jcfg);

  json out;
  out["config_hash"] = hash;
  out["config"] = jcfg;
  out["total_acquisition_s"] = total_acq;
  out["sequences"] = seqs;
  auto jf = open_out(outdir, "sequences.json");
  jf << out.dump(2) << "\n";

  auto csv = open_out(outdir, "events.csv");
  write_events_csv(csv, seqs, "config_hash=" + hash);

  std::cout << "sequences=" << seqs.size() << " total_acquisition_s=" << total_acq
            << " violations=" << violations << "\n";
  return violations == 0 ? 0 : 3;
}

int run_image(const ImagingConfig& cfg, const fs::path& outdir, bool binary_pgm) {
  const PhysicalConstants c;
  json jcfg;
  to_json(jcfg, cfg);
  const std::string hash = config_hash(jcfg);

  if (cfg.sequence.matrix_read != cfg.sequence.matrix_phase)
    throw Error("the imaging pipeline expects a square matrix");
  const int n = cfg.sequence.matrix_read;
  const Phantom ph = make_lego_phantom(n, cfg.sequence.fov_m);

  auto with_cfg = cfg.sequence;
  with_cfg.with_rf = true;
  auto without_cfg = cfg.sequence;
  without_cfg.with_rf = false;
  const auto seqs_rf = gradient_echo(with_cfg.params(), c);
  const auto seqs_free = gradient_echo(without_cfg.params(), c);

  SynthesisOptions opts;
  opts.amp_model = cfg.amp_model;
  const KSpace ks_rf = synthesize_kspace(ph, seqs_rf, true, cfg.noise_sigma, cfg.seed, opts);
  const KSpace ks_free = synthesize_kspace(ph, seqs_free, false, cfg.noise_sigma, cfg.seed, opts);
  const Image img_rf = reconstruct(ks_rf, ph.fov);
  const Image img_free = reconstruct(ks_free, ph.fov);

  const std::string comment = "config_hash=" + hash;
  {
    auto f = open_out(outdir, "phantom.pgm");
    write_pgm(f, ph.density, binary_pgm, comment);
  }
  {
    auto f = open_out(outdir, "image_with_rf.pgm");
    write_pgm(f, img_rf.magnitude, binary_pgm, comment);
  }
  {
    auto f = open_out(outdir, "image_without_rf.pgm");
    write_pgm(f, img_free.magnitude, binary_pgm, comment);
  }
  {
    auto f = open_out(outdir, "kspace_with_rf.csv");
    write_kspace_csv(f, ks_rf, comment);
  }
  {
    auto f = open_out(outdir, "kspace_without_rf.csv");
    write_kspace_csv(f, ks_free, comment);
  }

  json report;
  report["config_hash"] = hash;
  const auto signal = ph.signal_roi();
  const auto noise = ph.noise_roi();
  bool ordering = false;
  try {
    const double snr_rf = snr(img_rf, signal, noise);
    const double snr_free = snr(img_free, signal, noise);
    report["snr_with_rf"] = snr_rf;
    report["snr_without_rf"] = snr_free;
    ordering = snr_rf > snr_free && snr_free > 1.0;
    report["snr_ordering_with_gt_without_gt_1"] = ordering;
    std::cout << "snr_with_rf=" << snr_rf << " snr_without_rf=" << snr_free << "\n";
  } catch (const NoNoise&) {
    report["snr_condition"] = "NoNoise";
    std::cout << "snr: noise region has zero standard deviation (noiseless run)\n";
  } catch (const EmptyROI&) {
    report["snr_condition"] = "EmptyROI";
    std::cout << "snr: empty region of interest (zero-signal phantom?)\n";
  }
  report["correlation_with_rf"] = normalized_correlation(img_rf.magnitude, ph.density);
  report["correlation_without_rf"] = normalized_correlation(img_free.magnitude, ph.density);
  auto rep = open_out(outdir, "snr_report.json");
  rep << report.dump(2) << "\n";
  std::cout << "corr_with_rf=" << report["correlation_with_rf"].get<double>()
            << " corr_without_rf=" << report["correlation_without_rf"].get<double>() << "\n";
  return 0;
}

int run_verify() {
  using namespace std::chrono;
  const auto t0 = steady_clock::now();
  verify::SuiteOptions opt;
  opt.oracle_samples = 20;
  const auto results = verify::run_suite(opt);
  int failures = 0;
  std::printf("%-34s %8s %12s %10s  %s\n", "property", "samples", "worst", "tolerance", "status");
  for (const auto& r : results) {
    std::printf("%-34s %8d %12.3e %10.1e  %s%s\n", r.name.c_str(), r.samples, r.worst, r.tolerance,
                r.pass ? "PASS" : "FAIL", r.informational ? " (informational)" : "");
    if (!r.pass && !r.informational) {
      ++failures;
      std::printf("  -> failing property: %s\n", r.name.c_str());
    }
  }
  const double secs = duration_cast<milliseconds>(steady_clock::now() - t0).count() / 1000.0;
  std::printf("verification suite finished in %.1f s: %s\n", secs,
              failures == 0 ? "all properties hold" : "FAILURES present");
  return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spin-1/2 dynamics and NMR imaging simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir = ".";
  std::string format = "p5";

  auto* spin = app.add_subcommand("spin", "simulate one spin and compare with the integrator");
  SpinConfig spin_cfg;
  spin->add_option("--config", config_path, "JSON config file");
  spin->add_option("--case", spin_cfg.sim_case, "static|rf|kinetic|general");
  spin->add_option("--output-dir", output_dir);
  spin->add_option("--b0_T", spin_cfg.b0_T);
  spin->add_option("--b1_T", spin_cfg.b1_T);
  spin->add_option("--omega_rf_rad_s", spin_cfg.omega_rf_rad_s);
  spin->add_option("--kprime_J", spin_cfg.kprime_J);
  spin->add_option("--bx_T", spin_cfg.bx_T);
  spin->add_option("--by_T", spin_cfg.by_T);
  spin->add_option("--bz_offset_T", spin_cfg.bz_offset_T);
  spin->add_option("--r1", spin_cfg.r1);
  spin->add_option("--phi1_rad", spin_cfg.phi1_rad);
  spin->add_option("--r2", spin_cfg.r2);
  spin->add_option("--phi2_rad", spin_cfg.phi2_rad);
  spin->add_option("--t_end_s", spin_cfg.t_end_s);
  spin->add_option("--dt_s", spin_cfg.dt_s);

  auto* noise = app.add_subcommand("noise", "spin-noise emission probability and amplitude");
  double kprime = proton_kinetic_kprime();
  double omega0_mag = 3.0e8;
  noise->add_option("--config", config_path, "JSON config file");
  noise->add_option("--kprime_J", kprime);
  noise->add_option("--omega0_mag_s", omega0_mag, "plain s^-1 magnitude");
  noise->add_option("--output-dir", output_dir);

  auto* sequence = app.add_subcommand("sequence", "emit a gradient-echo sequence set");
  SequenceConfig seq_cfg;
  int matrix_read = seq_cfg.matrix_read, matrix_phase = seq_cfg.matrix_phase;
  sequence->add_option("--config", config_path, "JSON config file");
  sequence->add_option("--output-dir", output_dir);
  sequence->add_option("--fov_m", seq_cfg.fov_m);
  sequence->add_option("--matrix-read", matrix_read);
  sequence->add_option("--matrix-phase", matrix_phase);
  sequence->add_option("--te_s", seq_cfg.te_s);
  sequence->add_option("--tr_s", seq_cfg.tr_s);
  sequence->add_option("--flip_rad", seq_cfg.flip_rad);
  sequence->add_option("--slice_thickness_m", seq_cfg.slice_thickness_m);
  sequence->add_option("--read_gradient_T_per_m", seq_cfg.read_gradient_T_per_m);
  sequence->add_flag("--with-rf,!--no-rf", seq_cfg.with_rf, "include the RF pulse");
  sequence->add_option("--reference_frequency_rad_s", seq_cfg.reference_frequency_rad_s);

  auto* image = app.add_subcommand("image", "run the phantom imaging pipeline");
  ImagingConfig img_cfg;
  int img_matrix = img_cfg.sequence.matrix_read;
  std::string amp_model = "sqrt";
  image->add_option("--config", config_path, "JSON config file");
  image->add_option("--output-dir", output_dir);
  image->add_option("--matrix", img_matrix, "square matrix size (power of two)");
  image->add_option("--fov_m", img_cfg.sequence.fov_m);
  image->add_option("--te_s", img_cfg.sequence.te_s);
  image->add_option("--tr_s", img_cfg.sequence.tr_s);
  image->add_option("--flip_rad", img_cfg.sequence.flip_rad);
  image->add_option("--read_gradient_T_per_m", img_cfg.sequence.read_gradient_T_per_m);
  image->add_option("--reference_frequency_rad_s", img_cfg.sequence.reference_frequency_rad_s);
  image->add_option("--noise-sigma", img_cfg.noise_sigma);
  image->add_option("--seed", img_cfg.seed);
  image->add_option("--amp-model", amp_model, "sqrt|linear");
  image->add_option("--format", format, "p2|p5 for PGM output");

  auto* verify_cmd = app.add_subcommand("verify", "run the invariant suite");
  (void)verify_cmd;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (spin->parsed()) {
      if (spin->count("--config")) {
        SpinConfig file_cfg;
        from_json(load_config(config_path), file_cfg);
        // CLI flags override file values.
        SpinConfig merged = file_cfg;
        if (spin->count("--case")) merged.sim_case = spin_cfg.sim_case;
        if (spin->count("--b0_T")) merged.b0_T = spin_cfg.b0_T;
        if (spin->count("--b1_T")) merged.b1_T = spin_cfg.b1_T;
        if (spin->count("--omega_rf_rad_s")) merged.omega_rf_rad_s = spin_cfg.omega_rf_rad_s;
        if (spin->count("--kprime_J")) merged.kprime_J = spin_cfg.kprime_J;
        if (spin->count("--bx_T")) merged.bx_T = spin_cfg.bx_T;
        if (spin->count("--by_T")) merged.by_T = spin_cfg.by_T;
        if (spin->count("--bz_offset_T")) merged.bz_offset_T = spin_cfg.bz_offset_T;
        if (spin->count("--r1")) merged.r1 = spin_cfg.r1;
        if (spin->count("--phi1_rad")) merged.phi1_rad = spin_cfg.phi1_rad;
        if (spin->count("--r2")) merged.r2 = spin_cfg.r2;
        if (spin->count("--phi2_rad")) merged.phi2_rad = spin_cfg.phi2_rad;
        if (spin->count("--t_end_s")) merged.t_end_s = spin_cfg.t_end_s;
        if (spin->count("--dt_s")) merged.dt_s = spin_cfg.dt_s;
        spin_cfg = merged;
      }
      return run_spin(spin_cfg, output_dir);
    }
    if (noise->parsed()) {
      if (noise->count("--config")) {
        const json j = load_config(config_path);
        if (j.contains("kprime_J") && !noise->count("--kprime_J")) kprime = j["kprime_J"];
        if (j.contains("omega0_mag_s") && !noise->count("--omega0_mag_s"))
          omega0_mag = j["omega0_mag_s"];
      }
      return run_noise(kprime, omega0_mag, output_dir);
    }
    if (sequence->parsed()) {
      if (sequence->count("--config")) {
        SequenceConfig file_cfg = load_config(config_path).get<SequenceConfig>();
        if (!sequence->count("--fov_m")) seq_cfg.fov_m = file_cfg.fov_m;
        if (!sequence->count("--matrix-read")) matrix_read = file_cfg.matrix_read;
        if (!sequence->count("--matrix-phase")) matrix_phase = file_cfg.matrix_phase;
        if (!sequence->count("--te_s")) seq_cfg.te_s = file_cfg.te_s;
        if (!sequence->count("--tr_s")) seq_cfg.tr_s = file_cfg.tr_s;
        if (!sequence->count("--flip_rad")) seq_cfg.flip_rad = file_cfg.flip_rad;
        if (!sequence->count("--slice_thickness_m"))
          seq_cfg.slice_thickness_m = file_cfg.slice_thickness_m;
        if (!sequence->count("--read_gradient_T_per_m"))
          seq_cfg.read_gradient_T_per_m = file_cfg.read_gradient_T_per_m;
        if (!sequence->count("--with-rf") && !sequence->count("--no-rf"))
          seq_cfg.with_rf = file_cfg.with_rf;
        if (!sequence->count("--reference_frequency_rad_s"))
          seq_cfg.reference_frequency_rad_s = file_cfg.reference_frequency_rad_s;
      }
      seq_cfg.matrix_read = matrix_read;
      seq_cfg.matrix_phase = matrix_phase;
      return run_sequence(seq_cfg, output_dir);
    }
    if (image->parsed()) {
      if (image->count("--config")) {
        ImagingConfig file_cfg = load_config(config_path).get<ImagingConfig>();
        if (!image->count("--matrix")) img_matrix = file_cfg.sequence.matrix_read;
        if (!image->count("--fov_m")) img_cfg.sequence.fov_m = file_cfg.sequence.fov_m;
        if (!image->count("--te_s")) img_cfg.sequence.te_s = file_cfg.sequence.te_s;
        if (!image->count("--tr_s")) img_cfg.sequence.tr_s = file_cfg.sequence.tr_s;
        if (!image->count("--flip_rad")) img_cfg.sequence.flip_rad = file_cfg.sequence.flip_rad;
        if (!image->count("--read_gradient_T_per_m"))
          img_cfg.sequence.read_gradient_T_per_m = file_cfg.sequence.read_gradient_T_per_m;
        if (!image->count("--reference_frequency_rad_s"))
          img_cfg.sequence.reference_frequency_rad_s = file_cfg.sequence.reference_frequency_rad_s;
        if (!image->count("--noise-sigma")) img_cfg.noise_sigma = file_cfg.noise_sigma;
        if (!image->count("--seed")) img_cfg.seed = file_cfg.seed;
        if (!image->count("--amp-model")) img_cfg.amp_model = file_cfg.amp_model;
      }
      if (image->count("--amp-model")) {
        if (amp_model != "sqrt" && amp_model != "linear") throw Error("amp-model must be sqrt|linear");
        img_cfg.amp_model = amp_model == "sqrt" ? AmpModel::Sqrt : AmpModel::Linear;
      }
      img_cfg.sequence.matrix_read = img_cfg.sequence.matrix_phase = img_matrix;
      if (format != "p2" && format != "p5") throw Error("format must be p2|p5");
      return run_image(img_cfg, output_dir, format == "p5");
    }
    if (verify_cmd->parsed()) {
      return run_verify();
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
