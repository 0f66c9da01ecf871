#include "perfkit/phantom.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <stdexcept>

using namespace perfkit;

TEST_SUITE("phantom") {
  TEST_CASE("default layout covers the grid with the reference block sizes") {
    const auto layout = default_layout(25, 25);
    std::map<char, int> count;
    for (std::size_t r = 0; r < 25; ++r)
      for (std::size_t c = 0; c < 25; ++c) {
        int hits = 0;
        for (const auto& b : layout)
          if (b.contains(r, c)) {
            ++hits;
            ++count[b.label];
          }
        CHECK(hits == 1);
      }
    CHECK(count['A'] == 96);
    CHECK(count['B'] == 156);
    CHECK(count['C'] == 204);
    CHECK(count['D'] == 78);
    CHECK(count['E'] == 91);
  }

  TEST_CASE("noise- and jitter-free voxels equal the model curves") {
    PhantomConfig cfg;
    cfg.sigma = 0.0;
    cfg.jitter_lo = cfg.jitter_hi = 1.0;
    const auto ph = generate_phantom(cfg);
    const auto& ds = ph.dataset;
    const auto two = model_ctc(TwoComp{std::log(0.2), std::log(4.0), std::log(0.1), std::log(2.0)}, ds.aif, ds.grid);
    const auto slow = model_ctc(OneComp{std::log(0.2), std::log(0.2)}, ds.aif, ds.grid);
    const auto fast = model_ctc(OneComp{std::log(4.0), std::log(4.0)}, ds.aif, ds.grid);
    const std::size_t a = 3 * 25 + 4, d = 14 * 25 + 20, e = 22 * 25 + 20;
    REQUIRE(ph.truth.block[a] == 'A');
    REQUIRE(ph.truth.block[d] == 'D');
    REQUIRE(ph.truth.block[e] == 'E');
    for (std::size_t j = 0; j < ds.num_times(); ++j) {
      CHECK(ds.series(a)[j] == doctest::Approx(two[j]).epsilon(1e-14));
      CHECK(ds.series(d)[j] == doctest::Approx(slow[j]).epsilon(1e-14));
      CHECK(ds.series(e)[j] == doctest::Approx(fast[j]).epsilon(1e-14));
    }
    CHECK(ph.truth.v_t1[e] == 0.0);
    CHECK(ph.truth.k_trans1[e] == 0.0);
    CHECK(ph.truth.v_t2[d] == 0.0);
    CHECK(ph.truth.v_t1[d] == doctest::Approx(1.0));
    CHECK(ph.truth.v_t1[a] == doctest::Approx(0.5));
    CHECK(ph.truth.v_t2[a] == doctest::Approx(0.5));
  }

  TEST_CASE("ramp block rises linearly with distance from its centre") {
    PhantomConfig cfg;
    cfg.sigma = 0.0;
    cfg.jitter_lo = cfg.jitter_hi = 1.0;
    const auto ph = generate_phantom(cfg);
    const Block c = default_layout(25, 25)[2];
    const double cr = 0.5 * (c.row_begin + c.row_end - 1), cc = 0.5 * (c.col_begin + c.col_end - 1);
    const double dmax = std::hypot(c.row_end - 1 - cr, c.col_begin - cc);
    const std::size_t corner = (c.row_end - 1) * 25 + c.col_begin;
    CHECK(ph.truth.k_ep1[corner] == doctest::Approx(0.5));
    for (std::size_t r = c.row_begin; r < c.row_end; ++r)
      for (std::size_t col = c.col_begin; col < c.col_end; ++col) {
        const double d = std::hypot(r - cr, col - cc);
        const double k = ph.truth.k_ep1[r * 25 + col];
        CHECK(k == doctest::Approx(0.2 + 0.3 * std::min(d / dmax, 1.0)));
        CHECK(k >= 0.2);
        CHECK(k <= 0.5 + 1e-12);
        CHECK(ph.truth.k_ep2[r * 25 + col] == doctest::Approx(4.0));
      }
  }

  TEST_CASE("jitter stays in range and noise has the requested scale") {
    const PhantomConfig cfg;
    const auto ph = generate_phantom(cfg);
    const auto& t = ph.truth;
    PhantomConfig clean = cfg;
    clean.sigma = 0.0;
    const auto noiseless = generate_phantom(clean);
    CHECK(noiseless.truth == t);  // jitter draws do not depend on sigma

    double sse_total = 0.0;
    for (std::size_t i = 0; i < 625; ++i) {
      if (t.block[i] == 'A' || t.block[i] == 'B') {
        CHECK(t.k_ep1[i] >= 0.2 * 0.8);
        CHECK(t.k_ep1[i] <= 0.2 * 1.2);
        CHECK(t.k_ep2[i] >= 4.0 * 0.8);
        CHECK(t.k_ep2[i] <= 4.0 * 1.2);
        CHECK(t.k_trans1[i] >= 0.1 * 0.8);
        CHECK(t.k_trans2[i] <= 2.0 * 1.2);
      }
      if (t.block[i] == 'D') CHECK((t.v_t2[i] == 0.0 && t.v_t1[i] > 0.0));
      if (t.block[i] == 'E') CHECK((t.v_t1[i] == 0.0 && t.v_t2[i] > 0.0));
      for (std::size_t j = 0; j < 40; ++j) {
        const double r = ph.dataset.series(i)[j] - noiseless.dataset.series(i)[j];
        sse_total += r * r;
      }
    }
    // Mean per-voxel SSE of the true curve: T sigma^2 = 0.1, standard error ~0.1 * sqrt(2/40) / 25.
    CHECK(sse_total / 625.0 == doctest::Approx(0.1).epsilon(0.03));
  }

  TEST_CASE("same seed reproduces, different seed differs") {
    PhantomConfig cfg;
    cfg.seed = 7;
    const auto a = generate_phantom(cfg);
    const auto b = generate_phantom(cfg);
    CHECK(a.dataset == b.dataset);
    CHECK(a.truth == b.truth);
    cfg.seed = 8;
    CHECK_FALSE(generate_phantom(cfg).dataset == a.dataset);
  }

  TEST_CASE("configuration validation") {
    PhantomConfig cfg;
    cfg.sigma = -0.1;
    CHECK_THROWS_AS(generate_phantom(cfg), std::invalid_argument);
    cfg = {};
    cfg.jitter_lo = 1.3;
    CHECK_THROWS_AS(generate_phantom(cfg), std::invalid_argument);
    cfg = {};
    cfg.jitter_lo = 0.0;
    CHECK_THROWS_AS(generate_phantom(cfg), std::invalid_argument);
    cfg = {};
    cfg.layout = {{'A', BlockKind::TwoComp, 0, 10, 0, 25}};
    CHECK_THROWS_AS(generate_phantom(cfg), std::invalid_argument);
  }

  TEST_CASE("scaled layout on a small grid") {
    PhantomConfig cfg;
    cfg.nx = cfg.ny = 10;
    cfg.num_times = 12;
    const auto ph = generate_phantom(cfg);
    CHECK(ph.dataset.observed.size() == 100 * 12);
    std::map<char, int> count;
    for (char b : ph.truth.block) ++count[b];
    CHECK(count.size() == 5);
  }
}
