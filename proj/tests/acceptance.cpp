// Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero
// if any of them fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ldw/attention.hpp"
#include "ldw/cli.hpp"
#include "ldw/io.hpp"
#include "ldw/training.hpp"
#include "oracles.hpp"

using namespace ldw;
using namespace ldw::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

FeatureMap unit_map(Rng& rng) { return random_map(rng, 1, 32, 32, 0.0, 1.0); }

// 1. Haar roundtrip on 100 random 3x64x64 maps.
Outcome exact_reversibility() {
  const auto start = Clock::now();
  Rng rng(11);
  const auto pair = haar();
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const FeatureMap x = random_map(rng, 3, 64, 64);
    worst = std::max(worst, max_abs_diff(x, reconstruct(decompose(x, pair), pair)));
  }
  const double t = seconds_since(start);
  return {worst < 1e-12 && t < 5.0, fmt("max abs error %.3g (< 1e-12), %.2f s (< 5 s)", worst, t)};
}

// 2. Train K=4 filters through the CLI and reconstruct a held-out map.
Outcome psnr_floor() {
  const auto start = Clock::now();
  const fs::path dir = fs::temp_directory_path() / "ldw_acceptance" / "psnr";
  fs::remove_all(dir);
  fs::create_directories(dir / "images");
  Rng rng(1000);
  for (int i = 0; i < 8; ++i) {
    io::TensorContainer c{io::DType::f64, {{"map", unit_map(rng)}}};
    io::write_container(dir / "images" / ("img" + std::to_string(i) + ".ldwt"), c);
  }
  const FeatureMap held_out = unit_map(rng);

  // The symmetry term is off: no K=4 orthonormal pair has palindromic taps, so
  // with it on the optimum is not a perfect-reconstruction filter bank.
  std::ostringstream out, err;
  const int code = cli::run({"train", "--images", (dir / "images").string(), "--taps", "4",
                             "--epochs", "200", "--pretrain", "on", "--lr", "0.05",
                             "--wavelet-weights", "1,1,1,0", "--seed", "0", "--out",
                             (dir / "filters.txt").string()},
                            out, err);
  if (code != 0) return {false, "train exited with " + std::to_string(code) + ": " + err.str()};
  const auto pair = io::read_filters(dir / "filters.txt");
  const double p = psnr(held_out, reconstruct(decompose(held_out, pair), pair), 1.0);
  const double wl = loss_wavelet(pair, {1, 1, 1, 0});
  const double t = seconds_since(start);
  return {p > 33.1 && t < 120.0,
          fmt("held-out psnr %.2f dB (> 33.1), final wavelet loss %.3g, %.1f s (< 120 s)", p, wl,
              t)};
}

// 3. Separable vs dense decomposition.
Outcome oracle_equivalence() {
  const auto start = Clock::now();
  Rng rng(33);
  double worst = 0.0;
  for (std::size_t k : {2, 3, 4, 6, 8}) {
    for (PaddingMode mode : {PaddingMode::circular, PaddingMode::reflect}) {
      for (int n = 0; n < 50; ++n) {
        const std::size_t c = 1 + static_cast<std::size_t>(rng.canonical() * 3);
        const std::size_t h = 2 * (2 + static_cast<std::size_t>(rng.canonical() * 10));
        const std::size_t w = 2 * (2 + static_cast<std::size_t>(rng.canonical() * 10));
        const auto pair = random_pair(rng, k);
        const FeatureMap x = random_map(rng, c, h, w);
        worst = std::max(worst,
                         max_abs_diff(decompose(x, pair, mode), decompose_dense2d(x, pair, mode)));
      }
    }
  }
  const double t = seconds_since(start);
  return {worst < 1e-10 && t < 30.0, fmt("max abs diff %.3g (< 1e-10), %.2f s (< 30 s)", worst, t)};
}

// 4. Analytic gradients against central differences.
Outcome gradient_correctness() {
  const auto start = Clock::now();
  Rng rng(44);
  auto taps = [&] { return 2 + static_cast<std::size_t>(rng.canonical() * 7); };
  const std::vector<std::pair<const char*, WaveletWeights>> terms = {
      {"low", {1, 0, 0, 0}},
      {"high", {0, 1, 0, 0}},
      {"reverse", {0, 0, 1, 0}},
      {"sym", {0, 0, 0, 1}},
      {"wavelet", {1, 1, 1, 1}}};
  double worst = 0.0;
  for (const auto& [name, weights] : terms) {
    for (int n = 0; n < 100; ++n) {
      const auto pair = random_pair(rng, taps());
      const auto fd = central_difference(
          [&](std::span<const double> p) {
            return loss_wavelet(WaveletFilterPair::unflatten(p), weights);
          },
          pair.flatten());
      worst = std::max(worst, relative_error(flat(grad_loss_wavelet(pair, weights)), fd));
    }
  }
  for (int n = 0; n < 100; ++n) {
    const auto mode = n % 2 ? PaddingMode::reflect : PaddingMode::circular;
    const auto pair = random_pair(rng, taps());
    const FeatureMap x = random_map(rng, 2, 8, 10);
    const SubbandSet up = random_subbands(rng, 2, 8, 10);
    const auto fd = central_difference(
        [&](std::span<const double> p) {
          return up.dot(decompose(x, WaveletFilterPair::unflatten(p), mode));
        },
        pair.flatten());
    worst = std::max(worst, relative_error(flat(decompose_filter_jvp(x, pair, up, mode)), fd));
  }
  for (int n = 0; n < 100; ++n) {
    const auto mode = n % 2 ? PaddingMode::reflect : PaddingMode::circular;
    const auto pair = random_pair(rng, taps());
    const SubbandSet s = random_subbands(rng, 2, 8, 10);
    const FeatureMap up = random_map(rng, 2, 8, 10);
    const auto fd = central_difference(
        [&](std::span<const double> p) {
          return dot(up, reconstruct(s, WaveletFilterPair::unflatten(p), mode));
        },
        pair.flatten());
    worst = std::max(worst, relative_error(flat(reconstruct_filter_jvp(s, pair, up, mode)), fd));
  }
  const double t = seconds_since(start);
  return {worst < 1e-5 && t < 60.0,
          fmt("max relative error %.3g over 700 configurations (< 1e-5), %.2f s (< 60 s)", worst,
              t)};
}

// 5. Constraint-loss golden values. The {1/2,1/2}/{1/2,-1/2} row uses the listed
// expectation (0.42157, 0.25, 1, 0).
Outcome golden_losses() {
  const auto h = haar();
  const double haar_err = std::max({std::abs(loss_low(h)), std::abs(loss_high(h)),
                                    std::abs(loss_reverse(h)), std::abs(loss_sym(h) - 2.0)});
  const WaveletFilterPair half({0.5, 0.5}, {0.5, -0.5});
  const double r2 = std::sqrt(2.0);
  const double expect_low = 0.25 + (1.0 - r2) * (1.0 - r2);
  const double half_err =
      std::max({std::abs(loss_low(half) - expect_low), std::abs(loss_high(half) - 0.25),
                std::abs(loss_reverse(half) - 1.0), std::abs(loss_sym(half) - 0.0)});
  return {haar_err < 1e-12 && half_err < 1e-9,
          fmt("haar max error %.3g (< 1e-12); {1/2,1/2} max error %.3g (< 1e-9)", haar_err,
              half_err) +
              fmt(" with L_Low %.5f L_High %.5f", loss_low(half), loss_high(half)) +
              fmt(" L_Reverse %.5f L_Sym %.5f (expected 0; L_Sym is quadratic, so it is",
                  loss_reverse(half), loss_sym(half)) +
              fmt(" L_Sym(haar)/2 = %.5f)", loss_sym(h) / 2.0)};
}

// 6. MAC counts and separable speedup.
Outcome complexity() {
  bool ratios_ok = true;
  for (std::size_t k = 2; k <= 16; ++k) {
    ratios_ok = ratios_ok && flop_report(k, 3, 20, 24).ratio == static_cast<double>(k) / 2.0;
  }
  bool counts_ok = true;
  Rng rng(66);
  for (std::size_t k : {2, 3, 4, 8}) {
    const FeatureMap x = random_map(rng, 2, 16, 12);
    const auto pair = random_pair(rng, k);
    MacCounter sep, dense;
    decompose(x, pair, PaddingMode::circular, &sep);
    decompose_dense2d(x, pair, PaddingMode::circular, &dense);
    const auto report = flop_report(k, 2, 16, 12);
    counts_ok = counts_ok && sep.macs == report.separable_macs && dense.macs == report.dense_macs;
  }

  const FeatureMap x = random_map(rng, 3, 256, 256);
  const auto pair = random_pair(rng, 8);
  std::vector<double> sep_t, dense_t;
  for (int n = 0; n < 20; ++n) {
    auto s = Clock::now();
    const auto a = decompose(x, pair);
    sep_t.push_back(seconds_since(s));
    s = Clock::now();
    const auto b = decompose_dense2d(x, pair);
    dense_t.push_back(seconds_since(s));
    if (a.ll.size() != b.ll.size()) return {false, "subband size mismatch"};
  }
  const double speedup = median(dense_t) / median(sep_t);
  return {ratios_ok && counts_ok && speedup >= 1.5,
          std::string("ratio K/2 ") + (ratios_ok ? "exact" : "WRONG") + ", MAC counters " +
              (counts_ok ? "match" : "MISMATCH") +
              fmt(", K=8 3x256x256 median speedup %.2fx (>= 1.5)", speedup)};
}

// 7. Pretrain and the wavelet loss both help: compare the four combinations
// under the same full objective, seed by seed.
Outcome ablation_ordering() {
  const auto start = Clock::now();
  const TrainConfig common;
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(1000 + seed);
    std::vector<FeatureMap> images;
    for (int i = 0; i < 8; ++i) images.push_back(unit_map(rng));
    double totals[4];
    int idx = 0;
    for (bool pretrain : {true, false}) {
      for (bool wavelet : {true, false}) {
        TrainConfig c;
        c.learning_rate = 1e-2;
        c.epochs = 200;
        c.seed = seed;
        c.pretrain = pretrain;
        if (!wavelet) c.wavelet_weights = {0, 0, 0, 0};
        const auto report = train_filters(images, 4, c);
        totals[idx++] = evaluate_objective(images, report.final_pair, common).total;
      }
    }
    const bool best = totals[0] <= std::min({totals[1], totals[2], totals[3]});
    wins += best ? 1 : 0;
    detail += fmt(" [%.3g %.3g", totals[0], totals[1]) + fmt(" %.3g %.3g]", totals[2], totals[3]);
  }
  const double t = seconds_since(start);
  return {wins == 5, std::to_string(wins) + "/5 seeds best; totals (on/on on/off off/on off/off):" +
                         detail + fmt(", %.1f s", t)};
}

// 8. Energy and gating basics.
Outcome attention_suite() {
  const FeatureMap m(1, 2, 2, {1, 2, 3, 4});
  const double e = channel_energy(m, false)[0];

  Rng rng(88);
  const FeatureMap x = random_map(rng, 8, 6, 6);
  const auto zero = AttentionParams::zeros(8, 4);
  double gate_err = 0.0;
  for (double g : se_gate(channel_energy(x, true), zero)) gate_err = std::max(gate_err, std::abs(g - 0.5));
  for (double g : energy_attention(x, zero, false).gates) {
    gate_err = std::max(gate_err, std::abs(g - 0.5));
  }
  const std::vector<double> ones(8, 1.0);
  const double ident_err = max_abs_diff(apply_attention(x, ones), x);
  const bool ok = std::abs(e - 30.0) < 1e-12 && gate_err < 1e-12 && ident_err < 1e-12;
  return {ok, fmt("E %.17g (30), zero-param gate error %.3g, unit-gate error %.3g", e, gate_err,
                  ident_err)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"1 exact reversibility", exact_reversibility},
      {"2 psnr floor", psnr_floor},
      {"3 oracle equivalence", oracle_equivalence},
      {"4 gradient correctness", gradient_correctness},
      {"5 constraint-loss golden values", golden_losses},
      {"6 complexity", complexity},
      {"7 pretrain/wavelet-loss ordering", ablation_ordering},
      {"8 energy attention", attention_suite}};
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
