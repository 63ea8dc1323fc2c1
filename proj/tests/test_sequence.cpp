#include <catch2/catch.hpp>

#include <random>

#include "spinsim/sequence.hpp"

using namespace spinsim;

namespace {
const PhysicalConstants kC;

SequenceConfig paper_config(int n, bool with_rf) {
  SequenceConfig sc;
  sc.matrix_read = sc.matrix_phase = n;
  sc.with_rf = with_rf;
  return sc;
}
}  // namespace

TEST_CASE("gradient_echo with the reference parameters", "[sequence]") {
  const auto seqs = gradient_echo(paper_config(128, true).params(), kC);

  SECTION("one sequence per phase step, 1.024 s total") {
    REQUIRE(seqs.size() == 128);
    REQUIRE(128.0 * seqs[0].tr == Approx(1.024).margin(1e-12));
  }
  SECTION("every sequence validates") {
    for (const auto& s : seqs) {
      const auto violations = validate(s);
      CAPTURE(violations.empty() ? "" : violations.front().code);
      REQUIRE(violations.empty());
    }
  }
  SECTION("read moment nulls at the echo center") {
    for (const auto& s : seqs) {
      const double dephase_start = s.gradients[2].start;
      const double m = gradient_moment(s, GradientAxis::X, dephase_start, s.acquisition.midpoint());
      REQUIRE(std::abs(m) < 1e-12);
    }
  }
  SECTION("echo sits te after the RF center") {
    REQUIRE(seqs[0].acquisition.midpoint() ==
            Approx(seqs[0].rf[0].center() + seqs[0].te).margin(1e-15));
  }
  SECTION("phase ladder is symmetric and sums to zero") {
    double sum = 0.0;
    for (const auto& s : seqs) sum += s.gradients[1].amplitude;
    REQUIRE(std::abs(sum) < 1e-12);
    for (std::size_t v = 0; v < seqs.size(); ++v) {
      REQUIRE(seqs[v].gradients[1].amplitude ==
              Approx(-seqs[seqs.size() - 1 - v].gradients[1].amplitude).margin(1e-18));
    }
  }
}

TEST_CASE("gradient_echo without RF", "[sequence]") {
  const auto with = gradient_echo(paper_config(64, true).params(), kC);
  const auto without = gradient_echo(paper_config(64, false).params(), kC);

  SECTION("no RF events; echo at te after the origin; still valid") {
    for (const auto& s : without) {
      REQUIRE(s.rf.empty());
      REQUIRE(s.acquisition.midpoint() == Approx(s.te).margin(1e-15));
      REQUIRE(validate(s).empty());
    }
  }
  SECTION("gradient tuples identical, timing identical relative to the excitation reference") {
    for (std::size_t v = 0; v < with.size(); ++v) {
      REQUIRE(with[v].gradients.size() == without[v].gradients.size());
      for (std::size_t i = 0; i < with[v].gradients.size(); ++i) {
        const auto& a = with[v].gradients[i];
        const auto& b = without[v].gradients[i];
        REQUIRE(a.axis == b.axis);
        REQUIRE(a.duration == b.duration);
        REQUIRE(a.amplitude == b.amplitude);
        REQUIRE(a.start - with[v].excitation_center() ==
                Approx(b.start - without[v].excitation_center()).margin(1e-15));
      }
    }
  }
}

TEST_CASE("gradient_echo input validation", "[sequence]") {
  auto p = paper_config(64, true).params();
  SECTION("te >= tr") {
    p.te = p.tr;
    REQUIRE_THROWS_AS(gradient_echo(p, kC), InvalidTiming);
  }
  SECTION("matrix must be a power of two") {
    p.matrix_phase = 100;
    REQUIRE_THROWS_AS(gradient_echo(p, kC), InvalidTiming);
  }
  SECTION("fov must be positive") {
    p.fov = 0.0;
    REQUIRE_THROWS_AS(gradient_echo(p, kC), InvalidTiming);
  }
  SECTION("readout must fit inside tr") {
    p.tr = 4.5e-3;  // echo + t_acq/2 spills over
    REQUIRE_THROWS_AS(gradient_echo(p, kC), InvalidTiming);
  }
}

TEST_CASE("local_frequency_offset", "[sequence]") {
  const auto seqs = gradient_echo(paper_config(128, true).params(), kC);
  const auto& s = seqs[40];
  const double echo = s.acquisition.midpoint();

  SECTION("isocenter sees no offset at any time") {
    for (double t : {0.0, 0.2 * s.tr, echo, 0.9 * s.tr})
      REQUIRE(local_frequency_offset(s, 0, 0, 0, t, kC.gamma_proton) == 0.0);
  }
  SECTION("read gradient at the FOV edge") {
    // 2e-2 T/m at x = 29 mm: -gamma * 5.8e-4 T
    const double w = local_frequency_offset(s, 0.029, 0, 0, echo, kC.gamma_proton);
    REQUIRE(w == Approx(-kC.gamma_proton * 2.0e-2 * 0.029).epsilon(1e-12));
    REQUIRE(w == Approx(-1.552e5).epsilon(1e-3));
  }
  SECTION("zero when no gradient is active") {
    const double quiet = s.gradients[0].end() + 0.25 * (s.acquisition.start - s.gradients[0].end());
    REQUIRE(local_frequency_offset(s, 0.01, 0.02, 0.0, quiet, kC.gamma_proton) == 0.0);
  }
  SECTION("time outside the repetition window rejected") {
    REQUIRE_THROWS_AS(local_frequency_offset(s, 0, 0, 0, s.tr * 1.5, kC.gamma_proton), Error);
  }
}

TEST_CASE("validate flags broken sequences", "[sequence]") {
  const auto seqs = gradient_echo(paper_config(64, true).params(), kC);
  SECTION("te past tr") {
    PulseSequence s = seqs[0];
    s.te = s.tr * 2.0;
    bool found = false;
    for (const auto& v : validate(s)) found |= v.code == "InvalidTiming";
    REQUIRE(found);
  }
  SECTION("acquisition window overrun") {
    PulseSequence s = seqs[0];
    s.acquisition.start = s.tr - 0.25 * s.acquisition.duration();
    bool found = false;
    for (const auto& v : validate(s)) found |= v.code == "WindowOverrun";
    REQUIRE(found);
  }
  SECTION("misplaced echo") {
    PulseSequence s = seqs[0];
    s.te *= 1.01;
    bool found = false;
    for (const auto& v : validate(s)) found |= v.code == "EchoMisplaced";
    REQUIRE(found);
  }
}

TEST_CASE("rf pulse envelope", "[sequence]") {
  const RFPulseEvent p{0.0, 6.0, PulseShape::gaussian, 0.1, 0.0, 0.0};
  SECTION("unit peak at the center, truncated at three sigma") {
    REQUIRE(p.envelope(3.0) == 1.0);
    REQUIRE(p.envelope(0.0) == Approx(std::exp(-4.5)));  // exactly 3 sigma in
    REQUIRE(p.envelope(-0.1) == 0.0);
    REQUIRE(p.envelope(6.1) == 0.0);
  }
  SECTION("effective duration of the truncated gaussian") {
    REQUIRE(p.effective_duration() ==
            Approx(std::sqrt(2.0 * M_PI) * std::erf(3.0 / std::sqrt(2.0))).epsilon(1e-12));
  }
  SECTION("rect pulse is flat") {
    const RFPulseEvent r{1.0, 2.0, PulseShape::rect, 0.1, 0.0, 0.0};
    REQUIRE(r.envelope(1.5) == 1.0);
    REQUIRE(r.envelope(3.5) == 0.0);
    REQUIRE(r.effective_duration() == 2.0);
  }
}

TEST_CASE("rf power calibration", "[sequence]") {
  SECTION("15 mW maps to 5 degrees") {
    REQUIRE(flip_from_rf_power(0.015) == Approx(5.0 * M_PI / 180.0).epsilon(1e-12));
  }
  SECTION("flip scales with sqrt(power)") {
    REQUIRE(flip_from_rf_power(0.060) == Approx(2.0 * flip_from_rf_power(0.015)).epsilon(1e-12));
  }
  SECTION("b1_from_flip inverts the rect-pulse flip") {
    const double flip = 0.3, tau = 2e-3;
    const double b1 = b1_from_flip(flip, tau, PulseShape::rect, kC);
    REQUIRE(kC.gamma_proton * b1 * tau == Approx(flip).epsilon(1e-12));
  }
}

TEST_CASE("sequence json round trip", "[sequence]") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  const auto seqs = gradient_echo(paper_config(64, true).params(), kC);
  SECTION("generated sequences survive bit-exact") {
    for (const auto& s : {seqs[0], seqs[17], seqs[63]}) {
      nlohmann::json j = s;
      const PulseSequence back = nlohmann::json::parse(j.dump()).get<PulseSequence>();
      REQUIRE(back.tr == s.tr);
      REQUIRE(back.te == s.te);
      REQUIRE(back.reference_frequency == s.reference_frequency);
      REQUIRE(back.acquisition.start == s.acquisition.start);
      REQUIRE(back.acquisition.dwell == s.acquisition.dwell);
      REQUIRE(back.acquisition.samples == s.acquisition.samples);
      REQUIRE(back.rf.size() == s.rf.size());
      for (std::size_t i = 0; i < s.rf.size(); ++i) {
        REQUIRE(back.rf[i].start == s.rf[i].start);
        REQUIRE(back.rf[i].duration == s.rf[i].duration);
        REQUIRE(back.rf[i].flip_angle == s.rf[i].flip_angle);
        REQUIRE(back.rf[i].carrier == s.rf[i].carrier);
        REQUIRE(back.rf[i].phase == s.rf[i].phase);
      }
      REQUIRE(back.gradients.size() == s.gradients.size());
      for (std::size_t i = 0; i < s.gradients.size(); ++i) {
        REQUIRE(back.gradients[i].axis == s.gradients[i].axis);
        REQUIRE(back.gradients[i].start == s.gradients[i].start);
        REQUIRE(back.gradients[i].duration == s.gradients[i].duration);
        REQUIRE(back.gradients[i].amplitude == s.gradients[i].amplitude);
      }
    }
  }
  SECTION("random awkward doubles survive bit-exact") {
    for (int i = 0; i < 200; ++i) {
      GradientEvent g{GradientAxis::Y, u(rng) / 3.0, u(rng) / 7.0, u(rng) * 1.0e-7 - 5.0e-8};
      nlohmann::json j = g;
      const GradientEvent back = nlohmann::json::parse(j.dump()).get<GradientEvent>();
      REQUIRE(back.start == g.start);
      REQUIRE(back.duration == g.duration);
      REQUIRE(back.amplitude == g.amplitude);
    }
  }
  SECTION("sequence config keys are the published schema") {
    nlohmann::json j = SequenceConfig{};
    for (const char* key : {"fov_m", "matrix", "te_s", "tr_s", "flip_rad", "slice_thickness_m",
                            "read_gradient_T_per_m", "with_rf", "reference_frequency_rad_s"})
      REQUIRE(j.contains(key));
    REQUIRE(j.size() == 9);
  }
}

TEST_CASE("events csv", "[sequence]") {
  const auto seqs = gradient_echo(paper_config(64, true).params(), kC);
  std::ostringstream os;
  write_events_csv(os, {seqs[0]}, "config_hash=feedface");
  const std::string text = os.str();
  REQUIRE(text.rfind("# config_hash=feedface\n", 0) == 0);
  REQUIRE(text.find("event_type,axis,start_s,duration_s,amplitude\n") != std::string::npos);
  REQUIRE(text.find("# sequence 0\n") != std::string::npos);
  REQUIRE(text.find("rf,-,") != std::string::npos);
  REQUIRE(text.find("gradient,Y,") != std::string::npos);
  REQUIRE(text.find("gradient,X,") != std::string::npos);
  REQUIRE(text.find("acquisition,-,") != std::string::npos);
}
