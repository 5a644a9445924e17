#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dualband/channel.hpp"

using namespace dualband;

namespace {

// Direct evaluation of sum_l alpha_l exp(-j 2 pi k df tau_l) in long double.
cplx direct_cfr(std::size_t k, double df, const TargetSet& targets) {
  std::complex<long double> acc{0.0L, 0.0L};
  for (const auto& t : targets) {
    const long double phase = -2.0L * std::numbers::pi_v<long double> * k * static_cast<long double>(df) * t.delay_s;
    acc += std::complex<long double>(t.gain.real(), t.gain.imag()) * std::polar(1.0L, phase);
  }
  return {static_cast<double>(acc.real()), static_cast<double>(acc.imag())};
}

SubcarrierSelection gap896() {
  DualBandConfig cfg;
  cfg.gap = 896;
  return dual_band(cfg);
}

}  // namespace

TEST(SynthCfr, EmptySceneIsZero) {
  const auto h = synth_cfr(gap896(), {});
  EXPECT_TRUE(std::all_of(h.begin(), h.end(), [](cplx v) { return v == cplx{}; }));
}

TEST(SynthCfr, ZeroDelayIsFlat) {
  const auto h = synth_cfr(full_band(FrequencyGrid::reference()), TargetSet{{0.0, {1.0, 0.0}}});
  for (auto v : h) EXPECT_EQ(v, cplx(1.0, 0.0));
}

TEST(SynthCfr, RejectsAliasedDelay) {
  const auto sel = gap896();
  EXPECT_THROW(synth_cfr(sel, TargetSet{{3.2e-6, {1.0, 0.0}}}), ConfigError);
  EXPECT_THROW(synth_cfr(sel, TargetSet{{-1e-9, {1.0, 0.0}}}), ConfigError);
  EXPECT_NO_THROW(synth_cfr(sel, TargetSet{{3.19e-6, {1.0, 0.0}}}));
}

TEST(SynthCfr, MasksInactiveSubcarriersExactly) {
  const auto sel = gap896();
  const auto w = sel.mask();
  const auto h = synth_cfr(sel, TargetSet{{66e-9, {0.3, -0.2}}, {133e-9, {1.0, 0.5}}});
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (!w[k]) {
      EXPECT_EQ(h[k].real(), 0.0);
      EXPECT_EQ(h[k].imag(), 0.0);
      EXPECT_FALSE(std::signbit(h[k].real()));
    }
  }
}

TEST(SynthCfr, LinearInTargets) {
  const auto sel = gap896();
  Rng rng(3);
  std::uniform_real_distribution<double> delay(0.0, 3.0e-6);
  for (int rep = 0; rep < 20; ++rep) {
    TargetSet a, b;
    const auto ga = draw_gains(3, rng);
    const auto gb = draw_gains(2, rng);
    for (auto g : ga) a.push_back({delay(rng), g});
    for (auto g : gb) b.push_back({delay(rng), g});
    TargetSet ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const auto ha = synth_cfr(sel, a), hb = synth_cfr(sel, b), hab = synth_cfr(sel, ab);
    for (std::size_t k = 0; k < hab.size(); ++k) {
      const double scale = std::max(1.0, std::abs(hab[k]));
      EXPECT_LE(std::abs(hab[k] - ha[k] - hb[k]), 1e-12 * scale);
    }
  }
}

TEST(Measurement, MatchesDirectEvaluationAndCfr) {
  const auto sel = gap896();
  const TargetSet scene{{66e-9, {0.7, 0.1}}, {100e-9, {-0.2, 0.9}}, {133e-9, {0.4, -0.4}}};
  const auto y = measurement(sel, scene);
  const auto h = synth_cfr(sel, scene);
  ASSERT_EQ(y.samples.size(), 256u);
  EXPECT_EQ(y.noise_variance, 0.0);
  for (std::size_t m = 0; m < y.samples.size(); ++m) {
    const auto k = sel.indices()[m];
    EXPECT_EQ(y.samples[m], h[k]);
    EXPECT_LE(std::abs(y.samples[m] - direct_cfr(k, 312.5e3, scene)), 1e-12);
  }
}

TEST(Measurement, ConstantForZeroDelay) {
  const auto y = measurement(gap896(), TargetSet{{0.0, {2.0, 0.0}}});
  for (auto v : y.samples) EXPECT_EQ(v, cplx(2.0, 0.0));
}

TEST(Measurement, UnitModulusOnResolutionMultiples) {
  const auto sel = gap896();
  const double resolution = 1.0 / sel.grid().span_hz();
  for (int q : {1, 7, 213}) {
    const auto y = measurement(sel, TargetSet{{q * resolution, {1.0, 0.0}}});
    for (auto v : y.samples) EXPECT_NEAR(std::abs(v), 1.0, 1e-14);
  }
}

TEST(AddAwgn, NoiseFreeIsIdentity) {
  const auto y = measurement(gap896(), TargetSet{{50e-9, {1.0, 0.0}}});
  Rng rng(1);
  const auto z = add_awgn(y, kNoiseFreeSnrDb, rng);
  EXPECT_EQ(z.samples, y.samples);
  EXPECT_EQ(z.noise_variance, 0.0);
}

TEST(AddAwgn, ZeroDbIsUnitVariance) {
  EXPECT_DOUBLE_EQ(noise_variance_for_snr(0.0), 1.0);
  EXPECT_DOUBLE_EQ(noise_variance_for_snr(20.0), 0.01);
}

TEST(AddAwgn, EmpiricalVarianceMatches) {
  // 10^5 complex draws; the sample variance has relative spread ~0.3%.
  const FrequencyGrid g(100000, 1.0);
  const auto sel = full_band(g);
  const auto clean = measurement(sel, {});
  Rng rng(99);
  for (double snr : {0.0, 10.0, -3.0}) {
    const auto noisy = add_awgn(clean, snr, rng);
    double acc = 0.0;
    for (std::size_t m = 0; m < noisy.samples.size(); ++m) acc += std::norm(noisy.samples[m] - clean.samples[m]);
    const double var = acc / static_cast<double>(noisy.samples.size());
    EXPECT_NEAR(var / noisy.noise_variance, 1.0, 0.02) << "snr " << snr;
  }
}

TEST(DrawGains, EmptyAndMoments) {
  Rng rng(5);
  EXPECT_TRUE(draw_gains(0, rng).empty());
  const auto g = draw_gains(100000, rng);
  double power = 0.0, re2 = 0.0;
  std::vector<double> mags;
  for (auto a : g) {
    power += std::norm(a);
    re2 += a.real() * a.real();
    mags.push_back(std::abs(a));
  }
  EXPECT_NEAR(power / 1e5, 1.0, 0.02);
  EXPECT_NEAR(re2 / 1e5, 0.5, 0.01);
  std::nth_element(mags.begin(), mags.begin() + 50000, mags.end());
  // Rayleigh(1/sqrt 2) median = sqrt(ln 4)/sqrt(2).
  EXPECT_NEAR(mags[50000], std::sqrt(std::log(4.0)) / std::sqrt(2.0), 0.01);
}

TEST(DrawTrial, ReproducibleAndKeyed) {
  const ScenarioSpec spec{gap896(), {66e-9, 100e-9, 133e-9}, GainModel::kRayleigh, {}, 10.0, 42};
  const auto a = draw_trial(spec, 10.0, 3, 17);
  const auto b = draw_trial(spec, 10.0, 3, 17);
  EXPECT_EQ(a.truth, b.truth);
  EXPECT_EQ(a.y.samples, b.y.samples);
  const auto c = draw_trial(spec, 10.0, 3, 18);
  EXPECT_NE(a.y.samples, c.y.samples);
  const auto d = draw_trial(spec, 10.0, 4, 17);
  EXPECT_NE(a.truth, d.truth);
  EXPECT_DOUBLE_EQ(a.y.noise_variance, 0.1);
}

TEST(DrawTrial, FixedGainsAndJitter) {
  ScenarioSpec spec{gap896(), {66e-9}, GainModel::kFixed, {cplx{0.5, 0.5}}, kNoiseFreeSnrDb, 1, 1e-9};
  spec.validate();
  for (std::uint64_t t = 0; t < 50; ++t) {
    const auto trial = draw_trial(spec, spec.snr_db, 0, t);
    EXPECT_EQ(trial.truth[0].gain, cplx(0.5, 0.5));
    EXPECT_LE(std::abs(trial.truth[0].delay_s - 66e-9), 0.5e-9);
  }
  spec.fixed_gains.clear();
  EXPECT_THROW(spec.validate(), ConfigError);
}
