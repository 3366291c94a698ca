// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "dnf/losses/losses.hpp"
#include "support/brute.hpp"
#include "support/fd.hpp"

using namespace dnf;
using namespace dnf::testing;

TEST_CASE("reconstruction loss matches the brute-force formula") {
  std::mt19937_64 rng(1);
  const LossWeights lw;
  for (int trial = 0; trial < 100; ++trial) {
    const ReferenceBundle ref = random_reference(7, 5, rng);
    const RenderOutput r = random_render(7, 5, 4, rng);
    CHECK(close_rel(reconstruction_loss(r, ref, lw).value, recon_oracle(r, ref, lw)) <= 1e-5);
  }
}

TEST_CASE("reconstruction loss invariants and gradient") {
  std::mt19937_64 rng(2);
  const LossWeights lw;
  ReferenceBundle ref = random_reference(6, 6, rng);
  RenderOutput r = random_render(6, 6, 4, rng);
  SUBCASE("zero at a perfect match") {
    r.color = ref.image;
    r.opacity = ref.mask;
    CHECK(reconstruction_loss(r, ref, lw).value == 0.0);
  }
  SUBCASE("color outside the mask is free") {
    const double before = reconstruction_loss(r, ref, lw).value;
    for (std::size_t p = 0; p < ref.mask.data.size(); ++p) {
      if (ref.mask.data[p] == 0.0) r.color.data[p * 3] += 0.7;
    }
    CHECK(reconstruction_loss(r, ref, lw).value == doctest::Approx(before).epsilon(1e-14));
  }
  SUBCASE("finite differences") {
    const LossTerm term = reconstruction_loss(r, ref, lw);
    auto on = [&](Image& img, const Image& analytic) {
      const auto res = testing::check_gradient(
          img.data, analytic.data, testing::probe_indices(img.data.size(), 32, 5),
          [&] { return reconstruction_loss(r, ref, lw).value; });
      CHECK(res.relative_error <= 1e-6);
    };
    on(r.color, term.d_color);
    on(r.opacity, term.d_opacity);
  }
  SUBCASE("shape mismatch") {
    r = random_render(5, 6, 4, rng);
    CHECK_THROWS_AS(reconstruction_loss(r, ref, lw), std::invalid_argument);
  }
}

TEST_CASE("Pearson depth loss matches the brute-force formula") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const ReferenceBundle ref = random_reference(8, 6, rng);
    const Image d = uniform(8, 6, 1, rng, 0.5, 3.0);
    CHECK(close_rel(depth_pearson_loss(d, ref).value, pearson_oracle(d, ref)) <= 1e-5);
  }
}

TEST_CASE("Pearson depth loss invariants and gradient") {
  std::mt19937_64 rng(4);
  const ReferenceBundle ref = random_reference(8, 8, rng);
  SUBCASE("positive affine copies give zero, negated copies give one") {
    Image d = ref.depth;
    for (double& v : d.data) v = 3.0 * v + 1.5;
    CHECK(depth_pearson_loss(d, ref).value == doctest::Approx(0.0).epsilon(1e-12));
    for (double& v : d.data) v = -v;
    CHECK(depth_pearson_loss(d, ref).value == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("invariant to positive affine maps of the render") {
    Image d = uniform(8, 8, 1, rng, 0.5, 3.0);
    const double base = depth_pearson_loss(d, ref).value;
    for (double& v : d.data) v = 0.25 * v - 7.0;
    CHECK(depth_pearson_loss(d, ref).value == doctest::Approx(base).epsilon(1e-10));
  }
  SUBCASE("constant depth has zero gradient") {
    const Image d(8, 8, 1);
    const LossTerm t = depth_pearson_loss(d, ref);
    CHECK(t.value == 0.5);
    for (double g : t.d_depth.data) CHECK(g == 0.0);
  }
  SUBCASE("finite differences") {
    Image d = uniform(8, 8, 1, rng, 0.5, 3.0);
    const LossTerm t = depth_pearson_loss(d, ref);
    const auto res = testing::check_gradient(d.data, t.d_depth.data,
                                             testing::probe_indices(d.data.size(), 64, 9),
                                             [&] { return depth_pearson_loss(d, ref).value; });
    CHECK(res.relative_error <= 1e-6);
  }
}

TEST_CASE("normal blur and smoothness match brute force") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Image n = random_normals(11, 9, rng);
    const Image b = blur_normals(n);
    const Image ob = blur_oracle(n);
    double max_err = 0.0;
    for (std::size_t i = 0; i < b.data.size(); ++i) max_err = std::max(max_err, std::abs(b.data[i] - ob.data[i]));
    CHECK(max_err <= 1e-5);
    CHECK(close_rel(normal_smoothness_loss(n).value, smoothness_oracle(n)) <= 1e-5);
  }
}

TEST_CASE("normal smoothness invariants and gradient") {
  std::mt19937_64 rng(6);
  SUBCASE("constant normal field is smooth") {
    Image n(10, 10, 3);
    for (std::size_t p = 0; p < n.pixel_count(); ++p) n.data[p * 3 + 2] = 1.0;
    CHECK(normal_smoothness_loss(n).value == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("empty normal map") {
    const Image n(4, 4, 3);
    const LossTerm t = normal_smoothness_loss(n);
    CHECK(t.value == 0.0);
  }
  SUBCASE("finite differences with the blur held fixed") {
    Image n = random_normals(9, 9, rng);
    const LossTerm t = normal_smoothness_loss(n);
    const Image fixed = blur_normals(n);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n.data.size(); ++i) {
      if (n.data[i] != 0.0 && idx.size() < 48 && i % 5 == 0) idx.push_back(i);
    }
    const auto res = testing::check_gradient(n.data, t.d_normals.data, idx, [&] {
      double sum = 0.0;
      int count = 0;
      for (std::size_t p = 0; p < n.pixel_count(); ++p) {
        if (n.data[p * 3] == 0.0 && n.data[p * 3 + 1] == 0.0 && n.data[p * 3 + 2] == 0.0) continue;
        double sq = 0.0;
        for (std::size_t c = 0; c < 3; ++c) sq += std::pow(n.data[p * 3 + c] - fixed.data[p * 3 + c], 2);
        sum += std::sqrt(sq);
        ++count;
      }
      return sum / count;
    });
    CHECK(res.relative_error <= 1e-6);
  }
}

TEST_CASE("component labeling agrees with union-find") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Image m = random_mask(16, 16, rng, trial % 2 ? 0.45 : 0.6);
    const ComponentLabels cc = label_components(m);
    const auto [largest, sizes] = components_oracle(m);
    std::vector<int> got = cc.sizes;
    std::sort(got.begin(), got.end());
    CHECK(got == sizes);
    REQUIRE(cc.largest.has_value());
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        CHECK((cc.at(x, y) == *cc.largest) == largest[static_cast<std::size_t>(y * 16 + x)]);
        CHECK((cc.at(x, y) == 0) == (m.at(x, y) == 0.0));
      }
    }
    // Pixels sharing a label are connected in the oracle and vice versa.
    std::map<int, int> seen;
    for (int i = 0; i < 256; ++i) {
      if (cc.labels[static_cast<std::size_t>(i)] != 0) seen.try_emplace(cc.labels[static_cast<std::size_t>(i)], i);
    }
    CHECK(seen.size() == sizes.size());
  }
}

TEST_CASE("component labeling edge cases") {
  SUBCASE("empty image") {
    const ComponentLabels cc = label_components(Image(5, 5, 1));
    CHECK_FALSE(cc.largest.has_value());
  }
  SUBCASE("diagonal neighbours are separate components") {
    Image m(2, 2, 1);
    m.at(0, 0) = 1.0;
    m.at(1, 1) = 1.0;
    const ComponentLabels cc = label_components(m);
    CHECK(cc.sizes.size() == 2);
    CHECK(*cc.largest == 1);
  }
  SUBCASE("a large snake does not overflow") {
    Image m(256, 256, 1);
    for (int y = 0; y < 256; ++y) {
      for (int x = 0; x < 256; ++x) m.at(x, y) = (y % 2 == 0 || x == (y % 4 == 1 ? 255 : 0)) ? 1.0 : 0.0;
    }
    const ComponentLabels cc = label_components(m);
    CHECK(cc.sizes.size() == 1);
  }
}

TEST_CASE("opacity regularization matches brute force") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const RenderOutput r = random_render(12, 10, 6, rng);
    CHECK(close_rel(opacity_regularization(r).value, reg_oracle(r, 0.5)) <= 1e-5);
  }
}

TEST_CASE("opacity regularization invariants and gradient") {
  std::mt19937_64 rng(9);
  SUBCASE("single component costs nothing") {
    RenderOutput r = random_render(6, 6, 4, rng);
    for (double& o : r.opacity.data) o = 0.9;
    const LossTerm t = opacity_regularization(r);
    CHECK(t.value == 0.0);
    for (double g : t.d_weights.data) CHECK(g == 0.0);
  }
  SUBCASE("finite differences on the weights") {
    RenderOutput r = random_render(8, 8, 5, rng);
    const LossTerm t = opacity_regularization(r);
    const auto res = testing::check_gradient(r.weights.data, t.d_weights.data,
                                             testing::probe_indices(r.weights.data.size(), 64, 3),
                                             [&] { return opacity_regularization(r).value; });
    CHECK(res.relative_error <= 1e-6);
  }
  SUBCASE("off-component opacity mass") {
    Image o(4, 1, 1);
    o.data = {0.9, 0.8, 0.0, 0.6};
    CHECK(off_component_opacity(o) == doctest::Approx(0.6));
  }
}

TEST_CASE("reference bundle validation") {
  std::mt19937_64 rng(10);
  ReferenceBundle ref = random_reference(4, 4, rng);
  CHECK_NOTHROW(ref.validate());
  ref.mask.data[1] = 0.5;
  CHECK_THROWS_AS(ref.validate(), std::invalid_argument);
  ref.mask = Image(4, 4, 1);
  CHECK_THROWS_AS(ref.validate(), std::invalid_argument);
  ref = random_reference(4, 4, rng);
  ref.depth = Image(3, 4, 1);
  CHECK_THROWS_AS(ref.validate(), std::invalid_argument);
}
