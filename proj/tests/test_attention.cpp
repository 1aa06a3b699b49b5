#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ldw/attention.hpp"
#include "oracles.hpp"

using namespace ldw;
using ldw::testing::random_map;

TEST_CASE("channel_energy") {
  CHECK(channel_energy(FeatureMap(1, 2, 2, {1, 2, 3, 4}), false) == std::vector<double>{30});
  CHECK(channel_energy(FeatureMap(1, 4, 4, std::vector<double>(16, -1.0)), false) ==
        std::vector<double>{16});
  CHECK(channel_energy(FeatureMap(2, 3, 3, std::vector<double>(18, 2.5)), true) ==
        std::vector<double>{0, 0});
}

TEST_CASE("channel_energy properties") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const FeatureMap x = random_map(rng, 3, 4, 4);
    const auto e = channel_energy(x, false);

    // Scaling by alpha scales energy by alpha^2.
    const double alpha = rng.uniform(-3, 3);
    std::vector<double> scaled(x.data().begin(), x.data().end());
    for (double& v : scaled) v *= alpha;
    const auto es = channel_energy(FeatureMap(3, 4, 4, scaled), false);
    for (std::size_t c = 0; c < 3; ++c) CHECK(es[c] == doctest::Approx(alpha * alpha * e[c]));

    // Channel permutation permutes energies; spatial reversal leaves them alone.
    std::vector<double> perm, flipped;
    for (std::size_t c : {2u, 0u, 1u}) {
      auto ch = x.channel(c);
      perm.insert(perm.end(), ch.begin(), ch.end());
    }
    for (std::size_t c = 0; c < 3; ++c) {
      auto ch = x.channel(c);
      flipped.insert(flipped.end(), ch.rbegin(), ch.rend());
    }
    const auto ep = channel_energy(FeatureMap(3, 4, 4, perm), true);
    const auto en = channel_energy(x, true);
    CHECK(ep[0] == doctest::Approx(en[2]));
    CHECK(ep[1] == doctest::Approx(en[0]));
    CHECK(ep[2] == doctest::Approx(en[1]));
    const auto ef = channel_energy(FeatureMap(3, 4, 4, flipped), false);
    for (std::size_t c = 0; c < 3; ++c) CHECK(ef[c] == doctest::Approx(e[c]).epsilon(1e-14));
  }
}

TEST_CASE("se_gate") {
  const AttentionParams zero = AttentionParams::zeros(8, 4);
  const std::vector<double> e{1, -2, 3, 100, 0, 5, 6, 7};
  for (double g : se_gate(e, zero)) CHECK(g == 0.5);

  const AttentionParams unit(1, 1, {1}, {0}, {1}, {0});
  CHECK(se_gate(std::vector<double>{0.0}, unit)[0] == 0.5);
  CHECK(se_gate(std::vector<double>{1.0}, unit)[0] == doctest::Approx(0.7310586).epsilon(1e-7));

  CHECK_THROWS_AS(se_gate(std::vector<double>{1, 2}, unit), std::invalid_argument);
  CHECK_THROWS_AS(AttentionParams(4, 3, {}, {}, {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(AttentionParams(2, 1, {1, 2, 3}, {0, 0}, {1, 2, 3, 4}, {0, 0}),
                  std::invalid_argument);
}

TEST_CASE("se_gate stays strictly inside (0, 1)") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const AttentionParams p = AttentionParams::random(8, 2, trial);
    std::vector<double> e(8);
    for (double& v : e) v = rng.uniform(-1e6, 1e6);
    for (double g : se_gate(e, p)) {
      CHECK(g > 0.0);
      CHECK(g < 1.0);
    }
  }
  const AttentionParams huge(1, 1, {1e300}, {0}, {1e300}, {0});
  CHECK(se_gate(std::vector<double>{1.0}, huge)[0] < 1.0);
  const AttentionParams neg(1, 1, {1}, {0}, {1}, {-1e300});
  CHECK(se_gate(std::vector<double>{1.0}, neg)[0] > 0.0);
}

TEST_CASE("apply_attention") {
  Rng rng(2);
  const FeatureMap x = random_map(rng, 2, 3, 4);
  CHECK(apply_attention(x, std::vector<double>{1, 1}) == x);
  const FeatureMap zeroed = apply_attention(x, std::vector<double>{0, 0});
  for (double v : zeroed.data()) CHECK(v == 0.0);
  const FeatureMap y = apply_attention(x, std::vector<double>{0.5, 2});
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(y.channel(0)[i] == x.channel(0)[i] * 0.5);
    CHECK(y.channel(1)[i] == x.channel(1)[i] * 2.0);
  }
  CHECK_THROWS_AS(apply_attention(x, std::vector<double>{1}), std::invalid_argument);
}

TEST_CASE("energy_attention pipeline") {
  Rng rng(3);
  const FeatureMap x = random_map(rng, 4, 6, 6);
  const AttentionParams p = AttentionParams::random(4, 2, 17);
  const EnergyAttention a = energy_attention(x, p, true);
  CHECK(a.energies == channel_energy(x, true));
  CHECK(a.gates == se_gate(standardize_energies(a.energies), p));
  CHECK(a.output == apply_attention(x, a.gates));

  // Normalization first makes the gates invariant to a global rescale.
  std::vector<double> doubled(x.data().begin(), x.data().end());
  for (double& v : doubled) v *= 2;
  const EnergyAttention b = energy_attention(FeatureMap(4, 6, 6, doubled), p, true);
  for (std::size_t c = 0; c < 4; ++c) CHECK(b.gates[c] == doctest::Approx(a.gates[c]).epsilon(1e-9));

  const auto s = standardize_energies(std::vector<double>{5, 5, 5});
  CHECK(s == std::vector<double>{0, 0, 0});
}
