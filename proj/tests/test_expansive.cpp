#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "meandim/expansive.hpp"

using namespace meandim;

namespace {

System cat_product_q8() {
  return product_shift(SiteSpace::torus(2, 8, SiteNorm::sup), toral_matrix({2, 1, 1, 1}));
}

}  // namespace

TEST_CASE("series metric: tails and window sups") {
  auto fs = full_shift(SiteSpace::alphabet(2), 1);

  SUBCASE("tail closed forms") {
    CHECK(series_tail_bound(fs, 4) == Rational::dyadic(-3));  // 2^{1-4} * diam 1
    auto ex = build_example_1_3(4);                           // s=2, diam 1/2
    CHECK(series_tail_bound(ex, 6) == Rational(8 * 8) * Rational::dyadic(-6) * Rational(1, 2));
    CHECK_THROWS_AS(series_tail_bound(fs, 0), precondition_failed);
    CHECK_THROWS_AS(series_tail_bound(fs, 49), precondition_failed);
  }

  SUBCASE("single difference, sliding window") {
    Box b = box_interval(-17, 17);
    Config x(b, site_value(0));
    Config y = x;
    y.at({3, 0}) = site_value(1);
    // u = 3 brings the difference to the origin
    CHECK(series_window_distance(fs, x, y, window_points(Window::box(5, 1)), 12) == Rational(1));
    // only the endpoints of [-5, 5]: the nearest is u = 5, two cells away
    CHECK(series_window_distance(fs, x, y, window_points(Window::boundary(5, 1)), 12) ==
          Rational(1, 4));
    CHECK(series_window_distance(fs, x, x, window_points(Window::box(5, 1)), 12) == Rational(0));
  }

  SUBCASE("series dominates the site-at-origin window metric") {
    DetRng rng(21);
    Box b = box_interval(-16, 16);
    auto pts = window_points(Window::box(3, 1));
    for (int t = 0; t < 20; ++t) {
      Config x = sample_config(fs, b, rng);
      Config y = sample_config(fs, b, rng);
      CHECK(window_metric(fs, pts, x, y) <= series_window_distance(fs, x, y, pts, 12));
    }
  }
}

TEST_CASE("expansivity certificates") {
  SUBCASE("full 2-shift, band below the gap") {
    auto fs = full_shift(SiteSpace::alphabet(2), 1);
    auto cert = certify_expansive(fs, Rational(2, 5), 6);
    CHECK(cert.certified());
    CHECK(cert.mode == ExpansivityCertificate::Mode::analytic);
    CHECK(cert.margin == Rational(1, 5));
    CHECK(cert.band_high() == Rational(4, 5));
  }

  SUBCASE("full 2-shift, band swallowing the gap") {
    auto fs = full_shift(SiteSpace::alphabet(2), 1);
    auto cert = certify_expansive(fs, Rational(1, 2), 5);
    CHECK(cert.outcome == ExpansivityOutcome::counterexample_found);
    REQUIRE(cert.counterexample.has_value());
    const auto& [x, y] = *cert.counterexample;
    CHECK(!(x == y));
    CHECK(is_legal(fs, x));
    CHECK(is_legal(fs, y));
    // the pair never separates beyond 2c anywhere in the window
    CHECK(window_metric(fs, Window::box(5, 1), x, y) <= cert.band_high());
  }

  SUBCASE("identity action on two symbols") {
    auto id2 = cellwise_system(SiteSpace::alphabet(2), std::nullopt);
    CHECK(certify_expansive(id2, Rational(2, 5), 4).certified());
    auto bad = certify_expansive(id2, Rational(1, 2), 4);
    CHECK(bad.outcome == ExpansivityOutcome::counterexample_found);
  }

  SUBCASE("quantized cat-map product: orbit separation floor") {
    auto prod = cat_product_q8();
    Rational c = default_expansivity_constant(prod);
    CHECK(c == Rational(3, 64));
    auto cert = certify_expansive(prod, c, 6);
    CHECK(cert.certified());
    // min over nonzero differences of the orbit-sup distance is 3/8
    CHECK(cert.margin == Rational(3, 8) - Rational(6, 64));
    // the floor itself, recomputed directly
    auto h = toral_matrix({2, 1, 1, 1});
    Rational floor(1);
    SiteSpace site = SiteSpace::torus(2, 8, SiteNorm::sup);
    for (std::int64_t flat = 1; flat < 64; ++flat) {
      SiteValue d = site.value_at(flat);
      Rational sup(0);
      for (std::int64_t p = 0; p < 6; ++p)
        sup = max(sup, site.distance(h.apply(d, 8, p), SiteValue{}));
      floor = min(floor, sup);
    }
    CHECK(floor == Rational(3, 8));
    // and a band reaching the floor forces a counterexample
    auto bad = certify_expansive(prod, Rational(3, 16), 4);
    CHECK(bad.outcome == ExpansivityOutcome::counterexample_found);
    REQUIRE(bad.counterexample.has_value());
    CHECK(window_metric(prod, Window::box(3, 2), bad.counterexample->first,
                        bad.counterexample->second) <= bad.band_high());
  }

  SUBCASE("constrained system certified analytically under the gap") {
    auto ex = build_example_1_3(4);
    auto cert = certify_expansive(ex, Rational(1, 10), 6);
    CHECK(cert.certified());
    CHECK(cert.mode == ExpansivityCertificate::Mode::analytic);
    CHECK(cert.margin == Rational(1, 4) - Rational(1, 5));
  }

  SUBCASE("nonpositive constant rejected") {
    auto fs = full_shift(SiteSpace::alphabet(2), 1);
    CHECK_THROWS_AS(certify_expansive(fs, Rational(0), 4), precondition_failed);
    CHECK_THROWS_AS(certify_expansive(fs, Rational(-1, 2), 4), precondition_failed);
  }
}

TEST_CASE("agreement modulus") {
  auto fs = full_shift(SiteSpace::alphabet(2), 1);
  auto cert = certify_expansive(fs, Rational(2, 5), 6);

  SUBCASE("frozen values on the full 2-shift") {
    CHECK(modulus_of_expansivity(fs, cert, Rational(1, 10)) == 5);
    CHECK(modulus_of_expansivity(fs, cert, Rational(1, 2)) == 3);
    CHECK(modulus_of_expansivity(fs, cert, Rational(2)) == 1);
  }

  SUBCASE("two-axis tail needs a deeper window") {
    auto ex = build_example_1_3(4);
    auto ecert = certify_expansive(ex, Rational(1, 10), 6);
    CHECK(modulus_of_expansivity(ex, ecert, Rational(1, 10)) == 9);
  }

  SUBCASE("table is monotone") {
    std::vector<Rational> ladder = {Rational(2),      Rational(1),       Rational(1, 2),
                                    Rational(1, 4),   Rational(1, 10),   Rational(1, 100)};
    auto table = modulus_table(fs, cert, ladder);
    REQUIRE(table.rows.size() == ladder.size());
    for (size_t i = 1; i < table.rows.size(); ++i) {
      CHECK(table.rows[i].first < table.rows[i - 1].first);
      CHECK(table.rows[i].second >= table.rows[i - 1].second);
    }
  }

  SUBCASE("failure modes") {
    CHECK_THROWS_AS(modulus_of_expansivity(fs, cert, Rational(1, 1000), 4), not_found_within);
    CHECK_THROWS_AS(modulus_of_expansivity(fs, cert, Rational(0)), precondition_failed);
    ExpansivityCertificate uncertified;
    uncertified.c = Rational(2, 5);
    CHECK_THROWS_AS(modulus_of_expansivity(fs, uncertified, Rational(1, 10)),
                    precondition_failed);
  }
}

TEST_CASE("band pairs and boundary gap") {
  auto ex = build_example_1_3(4);
  auto cert = certify_expansive(ex, Rational(1, 10), 6);

  SUBCASE("candidates are legal and agree on the core") {
    DetRng rng(9);
    auto pairs = band_pair_candidates(ex, 2, 9, 24, rng);
    CHECK(pairs.size() >= 20);
    for (const auto& [x, y] : pairs) {
      CHECK(is_legal(ex, x));
      CHECK(is_legal(ex, y));
      bool agree = true;
      for (std::int64_t i = -2; i <= 2; ++i)
        for (std::int64_t j = -2; j <= 2; ++j)
          if (!(x.at({i, j}) == y.at({i, j}))) agree = false;
      CHECK(agree);
    }
  }

  SUBCASE("in-band pairs keep a positive boundary distance") {
    auto bg = boundary_gap(ex, cert, 2, 3, 48, 5);
    CHECK(!bg.band_empty);
    CHECK(bg.pairs_in_band >= 5);
    // every banded pair stays visible from the window boundary: at least a
    // quarter of one quantum
    CHECK(Rational(1, 16) <= bg.delta);
    // deterministic under the seed
    auto again = boundary_gap(ex, cert, 2, 3, 48, 5);
    CHECK(again.delta == bg.delta);
    CHECK(again.pairs_in_band == bg.pairs_in_band);
  }

  SUBCASE("pairs differing only at the origin never enter the band") {
    auto fs = full_shift(SiteSpace::alphabet(2), 1);
    auto fcert = certify_expansive(fs, Rational(2, 5), 6);
    Box b = box_interval(-14, 14);
    Config x(b, site_value(0));
    Config y = x;
    y.at({0, 0}) = site_value(1);
    for (std::int64_t n = 1; n <= 2; ++n) {
      auto one = boundary_gap_on_pairs(fs, fcert, n, {{x, y}}, 12);
      CHECK(one.band_empty);
      CHECK(one.pairs_tested == 1);
    }
  }

  SUBCASE("a mutation one step past the window lands in the band") {
    auto fs = full_shift(SiteSpace::alphabet(2), 1);
    auto fcert = certify_expansive(fs, Rational(2, 5), 6);
    Box b = box_interval(-14, 14);
    Config x(b, site_value(0));
    Config y = x;
    y.at({3, 0}) = site_value(1);  // distance 1 beyond the N=2 window: sup 1/2
    auto one = boundary_gap_on_pairs(fs, fcert, 2, {{x, y}}, 12);
    CHECK(!one.band_empty);
    CHECK(one.delta == Rational(1, 2));
  }

  SUBCASE("preconditions") {
    CHECK_THROWS_AS(boundary_gap(ex, cert, 0, 2), precondition_failed);
    CHECK_THROWS_AS(boundary_gap(ex, cert, 3, 2), precondition_failed);
    ExpansivityCertificate uncertified;
    CHECK_THROWS_AS(boundary_gap_on_pairs(ex, uncertified, 2, {}), precondition_failed);
  }
}

TEST_CASE("coding constant for sub-actions") {
  auto prod = cat_product_q8();
  Rational c = default_expansivity_constant(prod);
  auto cert = certify_expansive(prod, c, 6);

  SUBCASE("shift sub-action of the cat-map product") {
    auto cc = coding_constant(prod, {0}, cert, 3, 60, 11);
    CHECK(cc.K == 5);
    CHECK(cc.eps == Rational(3, 64));
    CHECK(cc.lipschitz == 2);
    CHECK(cc.violations == 0);
    CHECK(cc.pairs_tested > 0);
  }

  SUBCASE("cellwise sub-action uses the map stretch") {
    auto cc = coding_constant(prod, {1}, cert, 2, 30, 11);
    CHECK(cc.lipschitz == 3);  // max row sum of [[2,1],[1,1]]
    CHECK(cc.eps == Rational(6, 64) / Rational(3));
    CHECK(cc.violations == 0);
  }

  SUBCASE("trivial sub-action") {
    auto cc = coding_constant(prod, {}, cert);
    CHECK(cc.K == 1);
    CHECK(cc.eps == cert.band_high());
  }

  SUBCASE("bad generator index") {
    CHECK_THROWS_AS(coding_constant(prod, {2}, cert), precondition_failed);
    CHECK_THROWS_AS(coding_constant(prod, {-1}, cert), precondition_failed);
  }
}

TEST_CASE("window dimension bound via boundary refinement") {
  auto fs = full_shift(SiteSpace::alphabet(3), 1);
  auto cert = certify_expansive(fs, Rational(2, 5), 6);
  Box margin = centered_box(1, 1 + kDefaultSeriesDepth);

  auto clustered_sample = [&](DetRng& rng) {
    std::vector<Config> sample;
    for (std::int64_t cl = 0; cl < 3; ++cl) {
      Config base(margin, site_value(cl));
      for (int mate = 0; mate < 4; ++mate) {
        Config x = base;
        for (std::int64_t n = margin.lo[0]; n <= margin.hi[0]; ++n)
          if (std::abs(n) >= 6 && rng.below(2) == 0)
            x.at({n, 0}) = site_value(std::int64_t(rng.below(3)));
        sample.push_back(std::move(x));
      }
    }
    return sample;
  };

  SUBCASE("three clusters around shift-fixed points") {
    DetRng rng(3);
    auto sample = clustered_sample(rng);
    auto rep = widim_upper_via_boundary(fs, cert, 1, 3, sample, Rational(2, 5));
    CHECK(rep.formula_bound == 6);  // 2^1 (2*1+1)^0 * 3
    CHECK(rep.base_cover_size == 3);
    CHECK(rep.constructed_order <= rep.formula_bound);
    CHECK(rep.mesh <= cert.band_high());
  }

  SUBCASE("scattered sample admits no small cover") {
    DetRng rng(17);
    std::vector<Config> sample;
    for (int i = 0; i < 12; ++i) sample.push_back(sample_config(fs, margin, rng));
    CHECK_THROWS_AS(widim_upper_via_boundary(fs, cert, 1, 3, sample, Rational(2, 5)),
                    precondition_failed);
  }

  SUBCASE("two-axis formula value") {
    // k=2 boundary refinement bound: 2^2 (2N+1) L, on the full Z^2 2-shift
    // with clusters around the two constant configurations
    auto fs2 = full_shift(SiteSpace::alphabet(2), 2);
    auto cert2 = certify_expansive(fs2, Rational(2, 5), 4);
    DetRng rng(29);
    Box m2 = centered_box(2, 1 + 8);
    std::vector<Config> sample;
    for (std::int64_t cl = 0; cl < 2; ++cl) {
      Config base(m2, site_value(cl));
      for (int mate = 0; mate < 4; ++mate) {
        Config x = base;
        for (std::int64_t i = m2.lo[0]; i <= m2.hi[0]; ++i)
          for (std::int64_t j = m2.lo[1]; j <= m2.hi[1]; ++j)
            if (std::max(std::abs(i), std::abs(j)) >= 8 && rng.below(8) == 0)
              x.at({i, j}) = site_value(std::int64_t(rng.below(2)));
        sample.push_back(std::move(x));
      }
    }
    auto rep = widim_upper_via_boundary(fs2, cert2, 1, 2, sample, Rational(2, 5), 8);
    CHECK(rep.formula_bound == 4 * 3 * 2);
    CHECK(rep.base_cover_size == 2);
    CHECK(rep.constructed_order <= rep.formula_bound);
    CHECK(rep.mesh <= cert2.band_high());
  }
}
