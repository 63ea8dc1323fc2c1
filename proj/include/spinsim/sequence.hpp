#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"

namespace spinsim {

enum class PulseShape { gaussian, rect };
enum class GradientAxis { X, Y, Z };  // read, phase, slice

inline const char* to_string(GradientAxis a) {
  switch (a) {
    case GradientAxis::X: return "X";
    case GradientAxis::Y: return "Y";
    default: return "Z";
  }
}

struct RFPulseEvent {
  double start = 0.0;       // s
  double duration = 0.0;    // s
  PulseShape shape = PulseShape::gaussian;
  double flip_angle = 0.0;  // rad
  double carrier = 0.0;     // rad/s
  double phase = 0.0;       // rad

  double center() const { return start + 0.5 * duration; }
  double end() const { return start + duration; }

  /// Unit-peak envelope; the gaussian is truncated at +-3 sigma with
  /// sigma = duration / 6.
  double envelope(double t) const {
    if (shape == PulseShape::rect) return (t >= start && t < end()) ? 1.0 : 0.0;
    const double sigma = duration / 6.0;
    const double d = t - center();
    if (std::abs(d) > 3.0 * sigma) return 0.0;
    return std::exp(-0.5 * d * d / (sigma * sigma));
  }

  /// Integral of the envelope: the duration a rect pulse of the same peak
  /// amplitude would need for the same flip.
  double effective_duration() const {
    if (shape == PulseShape::rect) return duration;
    const double sigma = duration / 6.0;
    return sigma * std::sqrt(2.0 * M_PI) * std::erf(3.0 / std::sqrt(2.0));
  }
};

struct GradientEvent {
  GradientAxis axis = GradientAxis::X;
  double start = 0.0;      // s
  double duration = 0.0;   // s
  double amplitude = 0.0;  // T/m

  double end() const { return start + duration; }
  bool active(double t) const { return t >= start && t < end(); }
};

struct AcquisitionWindow {
  double start = 0.0;  // s
  double dwell = 0.0;  // s
  int samples = 0;

  double duration() const { return dwell * samples; }
  double midpoint() const { return start + 0.5 * duration(); }
  /// Readout samples sit at start + s * dwell, so the ladder is symmetric
  /// about the window midpoint for even sample counts.
  double sample_time(int s) const { return start + s * dwell; }
};

struct PulseSequence {
  std::vector<RFPulseEvent> rf;
  std::vector<GradientEvent> gradients;
  AcquisitionWindow acquisition;
  double tr = 0.0;                   // s
  double te = 0.0;                   // s
  double reference_frequency = 0.0;  // rad/s, omega0 all timing locks to

  /// Time the accumulated phase is referenced to: the RF center when a pulse
  /// is present, the sequence origin otherwise.
  double excitation_center() const { return rf.empty() ? 0.0 : rf.front().center(); }
};

struct Violation {
  std::string code;
  std::string message;
};

inline std::vector<Violation> validate(const PulseSequence& seq) {
  std::vector<Violation> out;
  auto add = [&out](const std::string& code, const std::string& msg) {
    out.push_back({code, msg});
  };
  if (!(seq.te < seq.tr)) add("InvalidTiming", "te must be smaller than tr");
  if (seq.acquisition.samples < 1) add("InvalidAcquisition", "acquisition needs at least one sample");
  if (seq.acquisition.dwell <= 0.0) add("InvalidAcquisition", "dwell must be positive");
  for (std::size_t i = 0; i < seq.rf.size(); ++i) {
    const auto& p = seq.rf[i];
    if (p.duration <= 0.0) add("NonPositiveDuration", "rf[" + std::to_string(i) + "] duration");
    if (p.flip_angle < 0.0) add("NegativeFlip", "rf[" + std::to_string(i) + "] flip angle");
    if (p.start < 0.0 || p.end() > seq.tr)
      add("EventOutOfWindow", "rf[" + std::to_string(i) + "] outside [0, tr]");
  }
  for (std::size_t i = 0; i < seq.gradients.size(); ++i) {
    const auto& g = seq.gradients[i];
    if (g.duration <= 0.0) add("NonPositiveDuration", "gradient[" + std::to_string(i) + "] duration");
    if (!std::isfinite(g.amplitude)) add("NonFiniteAmplitude", "gradient[" + std::to_string(i) + "]");
    if (g.start < 0.0 || g.end() > seq.tr)
      add("EventOutOfWindow", "gradient[" + std::to_string(i) + "] outside [0, tr]");
  }
  if (seq.acquisition.start < 0.0 || seq.acquisition.start + seq.acquisition.duration() > seq.tr)
    add("WindowOverrun", "acquisition extends past [0, tr]");
  const double echo_target = seq.excitation_center() + seq.te;
  if (std::abs(seq.acquisition.midpoint() - echo_target) > 1e-12 * std::max(seq.tr, 1e-300))
    add("EchoMisplaced", "acquisition midpoint is not at te after the excitation reference");
  return out;
}

struct GradientEchoParams {
  double fov = 0.0;                  // m
  int matrix_read = 0;               // samples per readout
  int matrix_phase = 0;              // phase-encode steps
  double te = 0.0;                   // s
  double tr = 0.0;                   // s
  double flip = 0.0;                 // rad
  double slice_thickness = 0.0;      // m, recorded only; the model is 2D
  double read_gradient = 0.0;        // T/m
  bool with_rf = true;
  double reference_frequency = 0.0;  // rad/s
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// One sequence per phase-encode step of a conventional gradient echo.
///
/// Timing, with t_c the RF half-duration (te/8): RF on [0, te/4]; a constant
/// Y prewinder, the stepped Y phase lobe and the X dephase lobe all on
/// [te/4, te/2]; readout centered on the echo at t_c + te. Without RF the
/// same gradients shift earlier by t_c so the echo sits at te after the
/// sequence origin. The stepped phase amplitudes form a symmetric ladder that
/// sums to zero; the prewinder shifts the resulting transverse-phase ladder
/// onto the integer reconstruction grid. Gradient order in the returned
/// sequences is fixed: [Y prewinder, Y phase step, X dephase, X read].
inline std::vector<PulseSequence> gradient_echo(const GradientEchoParams& p,
                                                const PhysicalConstants& c = {}) {
  if (!(p.fov > 0.0)) throw InvalidTiming("fov must be positive");
  if (!is_power_of_two(p.matrix_read) || !is_power_of_two(p.matrix_phase))
    throw InvalidTiming("matrix dimensions must be powers of two");
  if (!(p.te < p.tr)) throw InvalidTiming("te must be smaller than tr");
  if (!(p.read_gradient > 0.0)) throw InvalidTiming("read gradient must be positive");

  const double gamma = c.gamma_proton;
  const double tau_rf = 0.25 * p.te;
  const double t_c = 0.5 * tau_rf;
  const double tau_pe = 0.25 * p.te;  // phase lobe fixed at 25% of TE
  const double lobe_start = p.with_rf ? tau_rf : tau_rf - t_c;
  const double echo = (p.with_rf ? t_c : 0.0) + p.te;

  const double dwell = 2.0 * M_PI / (gamma * p.read_gradient * p.fov);
  const double t_acq = dwell * p.matrix_read;
  const double read_start = echo - 0.5 * t_acq;
  if (read_start < lobe_start + tau_pe)
    throw InvalidTiming("readout would start before the encode lobes end");
  if (echo + 0.5 * t_acq > p.tr) throw InvalidTiming("readout extends past tr");

  const double delta_k = 2.0 * M_PI / p.fov;  // rad/m
  const double g_prewind = -0.5 * delta_k / (gamma * tau_pe);
  const double g_dephase = -0.5 * p.read_gradient * t_acq / tau_pe;

  std::vector<PulseSequence> out;
  out.reserve(p.matrix_phase);
  for (int v = 0; v < p.matrix_phase; ++v) {
    PulseSequence seq;
    seq.tr = p.tr;
    seq.te = p.te;
    seq.reference_frequency = p.reference_frequency;
    if (p.with_rf) {
      seq.rf.push_back({0.0, tau_rf, PulseShape::gaussian, p.flip, p.reference_frequency, 0.0});
    }
    const double step = v + 0.5 - 0.5 * p.matrix_phase;  // symmetric, zero-sum
    const double g_phase = step * delta_k / (gamma * tau_pe);
    seq.gradients.push_back({GradientAxis::Y, lobe_start, tau_pe, g_prewind});
    seq.gradients.push_back({GradientAxis::Y, lobe_start, tau_pe, g_phase});
    seq.gradients.push_back({GradientAxis::X, lobe_start, tau_pe, g_dephase});
    seq.gradients.push_back({GradientAxis::X, read_start, t_acq, p.read_gradient});
    seq.acquisition = {read_start, dwell, p.matrix_read};
    out.push_back(std::move(seq));
  }
  return out;
}

/// Local angular frequency offset -gamma * sum_a G_a(t) r_a at a position.
inline double local_frequency_offset(const PulseSequence& seq, double x, double y, double z,
                                     double t, double gamma) {
  if (t < 0.0 || t > seq.tr) throw Error("time outside [0, tr]");
  double field = 0.0;
  for (const auto& g : seq.gradients) {
    if (!g.active(t)) continue;
    const double r = (g.axis == GradientAxis::X) ? x : (g.axis == GradientAxis::Y) ? y : z;
    field += g.amplitude * r;
  }
  return -gamma * field;
}

/// Integral of the axis gradient over [t0, t1]; exact for the rectangular
/// lobes emitted here (each event contributes amplitude times overlap).
inline double gradient_moment(const PulseSequence& seq, GradientAxis axis, double t0, double t1) {
  double moment = 0.0;
  for (const auto& g : seq.gradients) {
    if (g.axis != axis) continue;
    const double overlap = std::min(t1, g.end()) - std::max(t0, g.start);
    if (overlap > 0.0) moment += g.amplitude * overlap;
  }
  return moment;
}

/// Flip angle for a gaussian pulse of the given RF power, anchored to the
/// 15 mW <-> 5 degree calibration point (flip scales with sqrt(power)).
inline double flip_from_rf_power(double power_w) {
  constexpr double kFlipPerSqrtWatt = (5.0 * M_PI / 180.0) / 0.12247448713915890491;  // sqrt(0.015)
  return kFlipPerSqrtWatt * std::sqrt(power_w);
}

/// Peak RF field amplitude delivering the requested flip angle.
inline double b1_from_flip(double flip, double duration, PulseShape shape,
                           const PhysicalConstants& c = {}) {
  RFPulseEvent probe{0.0, duration, shape, flip, 0.0, 0.0};
  return flip / (c.gamma_proton * probe.effective_duration());
}

// --- JSON and CSV interchange ------------------------------------------------

struct SequenceConfig {
  double fov_m = 0.058;
  int matrix_read = 128;
  int matrix_phase = 128;
  double te_s = 3.9e-3;
  double tr_s = 8.0e-3;
  double flip_rad = 5.0 * M_PI / 180.0;
  double slice_thickness_m = 1.16e-3;
  double read_gradient_T_per_m = 2.0e-2;
  bool with_rf = true;
  double reference_frequency_rad_s = -2.6752218744e8 * 7.0;  // protons at 7 T

  GradientEchoParams params() const {
    return {fov_m, matrix_read, matrix_phase, te_s, tr_s, flip_rad,
            slice_thickness_m, read_gradient_T_per_m, with_rf, reference_frequency_rad_s};
  }
};

inline void to_json(nlohmann::json& j, const SequenceConfig& s) {
  j = nlohmann::json{{"fov_m", s.fov_m},
                     {"matrix", {s.matrix_read, s.matrix_phase}},
                     {"te_s", s.te_s},
                     {"tr_s", s.tr_s},
                     {"flip_rad", s.flip_rad},
                     {"slice_thickness_m", s.slice_thickness_m},
                     {"read_gradient_T_per_m", s.read_gradient_T_per_m},
                     {"with_rf", s.with_rf},
                     {"reference_frequency_rad_s", s.reference_frequency_rad_s}};
}

inline void from_json(const nlohmann::json& j, SequenceConfig& s) {
  j.at("fov_m").get_to(s.fov_m);
  s.matrix_read = j.at("matrix").at(0).get<int>();
  s.matrix_phase = j.at("matrix").at(1).get<int>();
  j.at("te_s").get_to(s.te_s);
  j.at("tr_s").get_to(s.tr_s);
  j.at("flip_rad").get_to(s.flip_rad);
  j.at("slice_thickness_m").get_to(s.slice_thickness_m);
  j.at("read_gradient_T_per_m").get_to(s.read_gradient_T_per_m);
  j.at("with_rf").get_to(s.with_rf);
  j.at("reference_frequency_rad_s").get_to(s.reference_frequency_rad_s);
}

inline void to_json(nlohmann::json& j, const RFPulseEvent& p) {
  j = nlohmann::json{{"start_s", p.start},
                     {"duration_s", p.duration},
                     {"shape", p.shape == PulseShape::gaussian ? "gaussian" : "rect"},
                     {"flip_rad", p.flip_angle},
                     {"carrier_rad_s", p.carrier},
                     {"phase_rad", p.phase}};
}

inline void from_json(const nlohmann::json& j, RFPulseEvent& p) {
  j.at("start_s").get_to(p.start);
  j.at("duration_s").get_to(p.duration);
  p.shape = (j.at("shape").get<std::string>() == "rect") ? PulseShape::rect : PulseShape::gaussian;
  j.at("flip_rad").get_to(p.flip_angle);
  j.at("carrier_rad_s").get_to(p.carrier);
  j.at("phase_rad").get_to(p.phase);
}

inline void to_json(nlohmann::json& j, const GradientEvent& g) {
  j = nlohmann::json{{"axis", to_string(g.axis)},
                     {"start_s", g.start},
                     {"duration_s", g.duration},
                     {"amplitude_T_per_m", g.amplitude}};
}

inline void from_json(const nlohmann::json& j, GradientEvent& g) {
  const std::string a = j.at("axis").get<std::string>();
  g.axis = (a == "X") ? GradientAxis::X : (a == "Y") ? GradientAxis::Y : GradientAxis::Z;
  j.at("start_s").get_to(g.start);
  j.at("duration_s").get_to(g.duration);
  j.at("amplitude_T_per_m").get_to(g.amplitude);
}

inline void to_json(nlohmann::json& j, const AcquisitionWindow& a) {
  j = nlohmann::json{{"start_s", a.start}, {"dwell_s", a.dwell}, {"samples", a.samples}};
}

inline void from_json(const nlohmann::json& j, AcquisitionWindow& a) {
  j.at("start_s").get_to(a.start);
  j.at("dwell_s").get_to(a.dwell);
  j.at("samples").get_to(a.samples);
}

inline void to_json(nlohmann::json& j, const PulseSequence& s) {
  j = nlohmann::json{{"rf", s.rf},
                     {"gradients", s.gradients},
                     {"acquisition", s.acquisition},
                     {"tr_s", s.tr},
                     {"te_s", s.te},
                     {"reference_frequency_rad_s", s.reference_frequency}};
}

inline void from_json(const nlohmann::json& j, PulseSequence& s) {
  s.rf = j.at("rf").get<std::vector<RFPulseEvent>>();
  s.gradients = j.at("gradients").get<std::vector<GradientEvent>>();
  j.at("acquisition").get_to(s.acquisition);
  j.at("tr_s").get_to(s.tr);
  j.at("te_s").get_to(s.te);
  j.at("reference_frequency_rad_s").get_to(s.reference_frequency);
}

/// Event-stream CSV with columns event_type, axis, start_s, duration_s,
/// amplitude; sequences are separated by "# sequence <i>" comment lines.
/// RF rows carry the flip angle as amplitude; acquisition rows the sample
/// count.
inline void write_events_csv(std::ostream& os, const std::vector<PulseSequence>& seqs,
                             const std::string& header_comment = {}) {
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  os << "event_type,axis,start_s,duration_s,amplitude\n";
  char buf[192];
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "# sequence %zu\n", i);
    os << buf;
    for (const auto& p : seqs[i].rf) {
      std::snprintf(buf, sizeof buf, "rf,-,%.17g,%.17g,%.17g\n", p.start, p.duration,
                    p.flip_angle);
      os << buf;
    }
    for (const auto& g : seqs[i].gradients) {
      std::snprintf(buf, sizeof buf, "gradient,%s,%.17g,%.17g,%.17g\n", to_string(g.axis),
                    g.start, g.duration, g.amplitude);
      os << buf;
    }
    const auto& a = seqs[i].acquisition;
    std::snprintf(buf, sizeof buf, "acquisition,-,%.17g,%.17g,%d\n", a.start, a.duration(),
                  a.samples);
    os << buf;
  }
}

}  // namespace spinsim
