#pragma once

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/field_config.hpp"
#include "spinsim/propagator.hpp"
#include "spinsim/sequence.hpp"

namespace spinsim {

template <typename T>
struct Grid2 {
  int ny = 0, nx = 0;
  std::vector<T> v;

  Grid2() = default;
  Grid2(int ny_, int nx_, T fill = T{}) : ny(ny_), nx(nx_), v(static_cast<std::size_t>(ny_) * nx_, fill) {}

  T& at(int l, int m) { return v[static_cast<std::size_t>(l) * nx + m]; }
  const T& at(int l, int m) const { return v[static_cast<std::size_t>(l) * nx + m]; }
  std::size_t size() const { return v.size(); }
};

/// Region labels carried by the phantom's feature mask.
enum Region : std::uint8_t {
  kExterior = 0,     // outside the disc
  kWaterCore = 1,    // signal ROI: water away from every edge
  kLego = 2,         // the void pieces
  kWaterMargin = 3,  // water near an edge, excluded from the signal ROI
  kNoiseCorner = 4,  // noise ROI: frame well outside the disc
};

struct Phantom {
  Grid2<double> density;       // arbitrary units, >= 0
  double fov = 0.0;            // m
  Grid2<std::uint8_t> mask;    // Region labels; may be empty for ad-hoc phantoms

  Grid2<std::uint8_t> roi(Region r) const {
    Grid2<std::uint8_t> out(mask.ny, mask.nx, 0);
    for (std::size_t i = 0; i < mask.size(); ++i) out.v[i] = (mask.v[i] == r) ? 1 : 0;
    return out;
  }
  Grid2<std::uint8_t> signal_roi() const { return roi(kWaterCore); }
  Grid2<std::uint8_t> noise_roi() const { return roi(kNoiseCorner); }
};

struct KSpace {
  Grid2<cplx> samples;  // phase-encode rows x read columns
};

struct Image {
  Grid2<double> magnitude;
  double fov = 0.0;
};

/// Test object: a water disc holding two brick-shaped voids with stud bumps,
/// mirror-symmetric about the vertical axis x = 0 (column index n/2 with the
/// wrap-around column 0 mapping to itself). Pixel (l, m) is centered at
/// ((m - n/2) fov/n, (l - n/2) fov/n); the disc diameter is 90% of the field
/// of view.
inline Phantom make_lego_phantom(int n, double fov = 0.058) {
  if (n < 32 || !is_power_of_two(n)) throw BadSize();
  Phantom ph;
  ph.fov = fov;
  ph.density = Grid2<double>(n, n, 0.0);
  ph.mask = Grid2<std::uint8_t>(n, n, kExterior);

  auto in_brick = [](double fx, double fy) {
    const double ax = std::abs(fx);
    if (ax >= 0.06 && ax <= 0.34 && fy >= -0.11 && fy <= 0.03) return true;  // body
    if (fy > 0.03 && fy <= 0.075 &&
        ((ax >= 0.10 && ax <= 0.16) || (ax >= 0.24 && ax <= 0.30)))
      return true;  // studs
    return false;
  };
  auto near_brick = [](double fx, double fy) {
    const double ax = std::abs(fx);
    return ax >= 0.04 && ax <= 0.36 && fy >= -0.13 && fy <= 0.095;
  };

  for (int l = 0; l < n; ++l) {
    const double fy = (l - n / 2) / static_cast<double>(n);
    for (int m = 0; m < n; ++m) {
      const double fx = (m - n / 2) / static_cast<double>(n);
      const double r = std::hypot(fx, fy);
      if (r <= 0.45) {
        if (in_brick(fx, fy)) {
          ph.mask.at(l, m) = kLego;
        } else {
          ph.density.at(l, m) = 1.0;
          ph.mask.at(l, m) = (r <= 0.43 && !near_brick(fx, fy)) ? kWaterCore : kWaterMargin;
        }
      } else if (r >= 0.47) {
        ph.mask.at(l, m) = kNoiseCorner;
      }
    }
  }
  return ph;
}

enum class AmpModel { Sqrt, Linear };

struct SynthesisOptions {
  AmpModel amp_model = AmpModel::Sqrt;
  double kprime = proton_kinetic_kprime();  // J, per-voxel kinetic scalar
  PhysicalConstants constants{};
  int threads = 0;  // 0: SPINSIM_THREADS env or hardware concurrency
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Box-Muller over an explicitly mapped mt19937_64 stream, so noise is
// bit-identical across standard libraries.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}
  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1p-53;  // (0, 1]
    const double u2 = static_cast<double>(eng_() >> 11) * 0x1p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline int resolve_threads(int requested, int rows) {
  int t = requested;
  if (t <= 0) {
    if (const char* env = std::getenv("SPINSIM_THREADS")) t = std::atoi(env);
  }
  if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(t, 1, std::max(rows, 1));
}

inline double axis_gradient_at(const PulseSequence& seq, GradientAxis axis, double t) {
  double g = 0.0;
  for (const auto& ev : seq.gradients)
    if (ev.axis == axis && ev.active(t)) g += ev.amplitude;
  return g;
}

}  // namespace detail

/// Per-voxel detected amplitude. With RF the voxel contributes
/// density * sin(flip); without RF it contributes density times the
/// fluctuation ratio sqrt(Delta / f0) (or Delta / f0 for the linear variant),
/// with Delta evaluated from the gradient fields frozen at the echo center
/// and f0 the reference frequency magnitude in plain s^-1.
inline double voxel_amplitude(double density, bool with_rf, double flip, double delta,
                              double f0_plain, AmpModel model) {
  if (with_rf) return density * std::sin(flip);
  const double ratio = delta / f0_plain;
  return density * (model == AmpModel::Sqrt ? std::sqrt(ratio) : ratio);
}

/// Forward model: one k-space row per sequence. The accumulated phase of a
/// voxel is the integral of its local frequency offset from the excitation
/// reference to the sample time; complex Gaussian noise of per-quadrature
/// sigma is drawn from a per-row stream, so the result is deterministic for a
/// given seed regardless of the thread count.
inline KSpace synthesize_kspace(const Phantom& ph, const std::vector<PulseSequence>& seqs,
                                bool with_rf, double noise_sigma, std::uint64_t seed,
                                const SynthesisOptions& opts = {}) {
  const int ny = ph.density.ny;
  const int nx = ph.density.nx;
  if (static_cast<int>(seqs.size()) != ny) throw DimensionMismatch("sequence count != phantom rows");
  for (const auto& s : seqs) {
    if (s.acquisition.samples != nx) throw DimensionMismatch("acquisition samples != phantom columns");
    if (with_rf == s.rf.empty())
      throw Error("with_rf flag does not match the sequences' RF content");
  }

  const PhysicalConstants& c = opts.constants;
  const double gamma = c.gamma_proton;
  const double omega_ref = seqs.front().reference_frequency;
  const double f0_plain = std::abs(omega_ref) / (2.0 * M_PI);
  if (f0_plain == 0.0) throw ZeroFrequency("reference frequency must be nonzero");
  const double flip = with_rf ? seqs.front().rf.front().flip_angle : 0.0;

  std::vector<double> xs(nx), ys(ny);
  for (int m = 0; m < nx; ++m) xs[m] = (m - nx / 2) * ph.fov / nx;
  for (int l = 0; l < ny; ++l) ys[l] = (l - ny / 2) * ph.fov / ny;

  // Detected amplitude per voxel; the gradient state at the echo center sets
  // the local nutation rate for the no-RF branch.
  Grid2<double> amp(ny, nx, 0.0);
  {
    const PulseSequence& s0 = seqs.front();
    const double t_echo = s0.acquisition.midpoint();
    const double gx = detail::axis_gradient_at(s0, GradientAxis::X, t_echo);
    const double gy = detail::axis_gradient_at(s0, GradientAxis::Y, t_echo);
    const double b0 = std::abs(omega_ref) / gamma;
    for (int l = 0; l < ny; ++l) {
      for (int m = 0; m < nx; ++m) {
        const double rho = ph.density.at(l, m);
        if (rho == 0.0) continue;
        double delta = 0.0;
        if (!with_rf) {
          const FieldConfig fc(b0, 0.0, 0.0, opts.kprime, gx * xs[m], gy * ys[l], 0.0);
          delta = delta_effective(fc, false, c);
        }
        amp.at(l, m) = voxel_amplitude(rho, with_rf, flip, delta, f0_plain, opts.amp_model);
      }
    }
  }

  KSpace ks;
  ks.samples = Grid2<cplx>(ny, nx, cplx(0.0, 0.0));

  auto run_rows = [&](int row_begin, int row_end) {
    for (int v = row_begin; v < row_end; ++v) {
      const PulseSequence& seq = seqs[v];
      const double t_exc = seq.excitation_center();
      detail::GaussianStream noise(detail::splitmix64(seed ^ (0x51u + static_cast<std::uint64_t>(v) * 0x9E3779B97F4A7C15ull)));
      for (int s = 0; s < nx; ++s) {
        const double t_s = seq.acquisition.sample_time(s);
        const double mx = gradient_moment(seq, GradientAxis::X, t_exc, t_s);
        const double my = gradient_moment(seq, GradientAxis::Y, t_exc, t_s);
        cplx acc(0.0, 0.0);
        for (int l = 0; l < ny; ++l) {
          const double phase_y = -gamma * my * ys[l];
          cplx row_sum(0.0, 0.0);
          for (int m = 0; m < nx; ++m) {
            const double a = amp.at(l, m);
            if (a == 0.0) continue;
            row_sum += a * std::polar(1.0, -gamma * mx * xs[m]);
          }
          acc += row_sum * std::polar(1.0, phase_y);
        }
        if (noise_sigma > 0.0) {
          const double re = noise.next();
          const double im = noise.next();
          acc += cplx(noise_sigma * re, noise_sigma * im);
        }
        ks.samples.at(v, s) = acc;
      }
    }
  };

  const int n_threads = detail::resolve_threads(opts.threads, ny);
  if (n_threads == 1) {
    run_rows(0, ny);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (ny + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      const int lo = t * chunk;
      const int hi = std::min(ny, lo + chunk);
      if (lo < hi) pool.emplace_back(run_rows, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return ks;
}

namespace detail {

template <typename T>
inline void circular_shift_rows(Grid2<T>& g, int shift) {
  std::vector<T> tmp(static_cast<std::size_t>(g.ny));
  for (int m = 0; m < g.nx; ++m) {
    for (int l = 0; l < g.ny; ++l) tmp[(l + shift) % g.ny] = g.at(l, m);
    for (int l = 0; l < g.ny; ++l) g.at(l, m) = tmp[l];
  }
}

template <typename T>
inline void circular_shift_cols(Grid2<T>& g, int shift) {
  std::vector<T> tmp(static_cast<std::size_t>(g.nx));
  for (int l = 0; l < g.ny; ++l) {
    for (int m = 0; m < g.nx; ++m) tmp[(m + shift) % g.nx] = g.at(l, m);
    for (int m = 0; m < g.nx; ++m) g.at(l, m) = tmp[m];
  }
}

template <typename T>
inline void fftshift2(Grid2<T>& g) {
  circular_shift_rows(g, g.ny / 2);
  circular_shift_cols(g, g.nx / 2);
}

template <typename T>
inline void ifftshift2(Grid2<T>& g) {
  circular_shift_rows(g, (g.ny + 1) / 2);
  circular_shift_cols(g, (g.nx + 1) / 2);
}

}  // namespace detail

/// Magnitude of the centered 2D inverse FFT of the sample grid. Satisfies
/// Parseval: ||image||_2^2 = ||kspace||_2^2 / (ny nx).
inline Image reconstruct(const KSpace& ks, double fov = 0.0) {
  const int ny = ks.samples.ny;
  const int nx = ks.samples.nx;
  Grid2<cplx> work = ks.samples;
  detail::ifftshift2(work);

  Eigen::FFT<double> fft;
  std::vector<cplx> in(nx), out(nx);
  for (int l = 0; l < ny; ++l) {
    for (int m = 0; m < nx; ++m) in[m] = work.at(l, m);
    fft.inv(out, in);
    for (int m = 0; m < nx; ++m) work.at(l, m) = out[m];
  }
  in.resize(ny);
  out.resize(ny);
  for (int m = 0; m < nx; ++m) {
    for (int l = 0; l < ny; ++l) in[l] = work.at(l, m);
    fft.inv(out, in);
    for (int l = 0; l < ny; ++l) work.at(l, m) = out[l];
  }
  detail::fftshift2(work);

  Image img;
  img.fov = fov;
  img.magnitude = Grid2<double>(ny, nx, 0.0);
  for (std::size_t i = 0; i < work.size(); ++i) img.magnitude.v[i] = std::abs(work.v[i]);
  return img;
}

/// mean(signal ROI) / sample standard deviation (n-1) of the noise ROI.
inline double snr(const Image& img, const Grid2<std::uint8_t>& signal_roi,
                  const Grid2<std::uint8_t>& noise_roi) {
  if (signal_roi.ny != img.magnitude.ny || signal_roi.nx != img.magnitude.nx ||
      noise_roi.ny != img.magnitude.ny || noise_roi.nx != img.magnitude.nx)
    throw DimensionMismatch("ROI dimensions do not match the image");

  double s_sum = 0.0;
  std::size_t s_n = 0;
  double n_sum = 0.0, n_sum2 = 0.0;
  std::size_t n_n = 0;
  for (std::size_t i = 0; i < img.magnitude.size(); ++i) {
    if (signal_roi.v[i] && noise_roi.v[i]) throw Error("signal and noise ROIs overlap");
    if (signal_roi.v[i]) {
      s_sum += img.magnitude.v[i];
      ++s_n;
    }
    if (noise_roi.v[i]) {
      n_sum += img.magnitude.v[i];
      n_sum2 += img.magnitude.v[i] * img.magnitude.v[i];
      ++n_n;
    }
  }
  if (s_n == 0 || n_n < 2) throw EmptyROI();
  const double n_mean = n_sum / n_n;
  const double var = (n_sum2 - n_n * n_mean * n_mean) / (n_n - 1);
  const double sd = std::sqrt(std::max(var, 0.0));
  const double s_mean = s_sum / s_n;
  // A deviation at the round-off floor of the signal is no noise at all.
  if (sd <= 1e-12 * std::max(std::abs(s_mean), 1e-300)) throw NoNoise();
  return s_mean / sd;
}

/// Plain normalized cross-correlation sum(a b) / sqrt(sum a^2 sum b^2).
inline double normalized_correlation(const Grid2<double>& a, const Grid2<double>& b) {
  if (a.ny != b.ny || a.nx != b.nx) throw DimensionMismatch();
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a.v[i] * b.v[i];
    aa += a.v[i] * a.v[i];
    bb += b.v[i] * b.v[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

// --- File formats -------------------------------------------------------------

/// 16-bit PGM, row-major, grid maximum scaled to 65535. P2 (ASCII) or P5
/// (binary, big-endian sample bytes).
inline void write_pgm(std::ostream& os, const Grid2<double>& g, bool binary,
                      const std::string& header_comment = {}) {
  double peak = 0.0;
  for (double d : g.v) peak = std::max(peak, d);
  const double scale = peak > 0.0 ? 65535.0 / peak : 0.0;
  os << (binary ? "P5" : "P2") << "\n";
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  os << g.nx << " " << g.ny << "\n65535\n";
  if (binary) {
    std::string bytes;
    bytes.reserve(g.size() * 2);
    for (double d : g.v) {
      const auto q = static_cast<std::uint16_t>(std::lround(d * scale));
      bytes.push_back(static_cast<char>(q >> 8));
      bytes.push_back(static_cast<char>(q & 0xFF));
    }
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  } else {
    for (int l = 0; l < g.ny; ++l) {
      for (int m = 0; m < g.nx; ++m) {
        os << static_cast<std::uint16_t>(std::lround(g.at(l, m) * scale));
        os << (m + 1 == g.nx ? '\n' : ' ');
      }
    }
  }
}

/// k-space CSV: ky_index, kx_index, re, im.
inline void write_kspace_csv(std::ostream& os, const KSpace& ks,
                             const std::string& header_comment = {}) {
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  os << "ky_index,kx_index,re,im\n";
  char buf[128];
  for (int v = 0; v < ks.samples.ny; ++v) {
    for (int s = 0; s < ks.samples.nx; ++s) {
      const cplx z = ks.samples.at(v, s);
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", v, s, z.real(), z.imag());
      os << buf;
    }
  }
}

/// Per-quadrature k-space noise level for which the reference 64x64 proton
/// run lands near SNR 18 with RF.
constexpr double kCalibratedNoiseSigma = 0.47;

struct ImagingConfig {
  SequenceConfig sequence{};
  double noise_sigma = kCalibratedNoiseSigma;
  std::uint64_t seed = 1;
  AmpModel amp_model = AmpModel::Sqrt;
};

inline void to_json(nlohmann::json& j, const ImagingConfig& cfg) {
  to_json(j, cfg.sequence);
  j["noise_sigma"] = cfg.noise_sigma;
  j["seed"] = cfg.seed;
  j["amp_model"] = (cfg.amp_model == AmpModel::Sqrt) ? "sqrt" : "linear";
}

inline void from_json(const nlohmann::json& j, ImagingConfig& cfg) {
  from_json(j, cfg.sequence);
  if (j.contains("noise_sigma")) j.at("noise_sigma").get_to(cfg.noise_sigma);
  if (j.contains("seed")) j.at("seed").get_to(cfg.seed);
  if (j.contains("amp_model"))
    cfg.amp_model = (j.at("amp_model").get<std::string>() == "linear") ? AmpModel::Linear
                                                                       : AmpModel::Sqrt;
}

}  // namespace spinsim
