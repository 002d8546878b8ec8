#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "meandim/dimension.hpp"

using namespace meandim;

namespace {

std::vector<Rational> dyadic_ladder(int from, int to) {
  std::vector<Rational> ladder;
  for (int j = from; j <= to; ++j) ladder.push_back(Rational::dyadic(-j));
  return ladder;
}

std::vector<LatticeVector> line_window(int k, std::int64_t n) {
  std::vector<LatticeVector> w;
  for (std::int64_t m = -n; m <= n; ++m) {
    LatticeVector u = LatticeVector::Zero(k);
    u[0] = m;
    w.push_back(u);
  }
  return w;
}

std::vector<std::int64_t> flatten(const SiteSpace& site, const Config& c) {
  std::vector<std::int64_t> out;
  for (const auto& v : c.values()) out.push_back(site.flat_index(v));
  return out;
}

}  // namespace

TEST_CASE("binary full shift: every table cell is the exact power count") {
  auto sys = full_shift(SiteSpace::alphabet(2), 1);
  auto t = scale_entropy_table(sys, dyadic_ladder(2, 8), {1, 2, 4, 8, 12});
  const double log2 = std::log(2.0);

  for (const auto& row : t.cells)
    for (const auto& cell : row) {
      CHECK(cell.exact);
      CHECK(cell.counts_valid);
      CHECK(cell.counts.lb == cell.counts.ub);
      CHECK(cell.counts.lb == (std::int64_t(1) << (2 * cell.radius + 1)));
      CHECK(std::abs(cell.norm_lb - log2) <= 1e-9);
      CHECK(std::abs(cell.norm_ub - log2) <= 1e-9);
    }

  for (const auto& s : scale_entropy_estimates(t)) {
    CHECK(std::abs(s.lb - log2) <= 1e-9);
    CHECK(std::abs(s.ub - log2) <= 1e-9);
  }

  auto h = topological_entropy_estimate(t);
  CHECK(h.lb == doctest::Approx(log2).epsilon(1e-12));
  CHECK(h.ub == doctest::Approx(log2).epsilon(1e-12));
}

TEST_CASE("binary full shift: count ratio dives below 0.05 on a deep ladder") {
  auto sys = full_shift(SiteSpace::alphabet(2), 1);
  auto t = scale_entropy_table(sys, dyadic_ladder(2, 24), {1, 2, 4});
  auto md = metric_mean_dim_estimate(t);

  REQUIRE(md.ratio_lb.size() == 23);
  for (size_t e = 0; e < md.ratio_lb.size(); ++e) {
    const double expected = 1.0 / double(e + 2);  // log 2 / (j log 2)
    CHECK(md.ratio_lb[e] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(md.ratio_ub[e] == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(md.at_finest.ub == doctest::Approx(1.0 / 24).epsilon(1e-12));
  CHECK(md.at_finest.ub <= 0.05);
  CHECK(md.at_finest.lb <= md.at_finest.ub);
}

TEST_CASE("metric mean dimension estimator rejects degenerate ladders") {
  auto sys = full_shift(SiteSpace::alphabet(2), 1);
  CHECK_THROWS_AS(
      metric_mean_dim_estimate(scale_entropy_table(sys, dyadic_ladder(2, 3), {1, 2})),
      precondition_failed);
  CHECK_THROWS_AS(metric_mean_dim_estimate(scale_entropy_table(
                      sys, {Rational(1, 2), Rational(1, 3), Rational(1, 4)}, {1, 2})),
                  precondition_failed);
}

TEST_CASE("entropy table input validation") {
  auto sys = full_shift(SiteSpace::alphabet(2), 1);
  CHECK_THROWS_AS(entropy_cell(sys, -1, Rational(1, 2)), precondition_failed);
  CHECK_THROWS_AS(entropy_cell(sys, 1, Rational(0)), precondition_failed);
  CHECK_THROWS_AS(scale_entropy_table(sys, {Rational(1, 4), Rational(1, 2)}, {1}),
                  precondition_failed);
  CHECK_THROWS_AS(scale_entropy_table(sys, {Rational(1, 2)}, {2, 1}), precondition_failed);
}

TEST_CASE("golden mean shift: window counts follow the two-step recurrence") {
  auto sys = golden_mean_shift();
  const std::vector<std::int64_t> radii{1, 2, 4, 8, 16};
  auto t = scale_entropy_table(sys, {Rational(1, 2)}, radii);

  // fib[i] counts the admissible words of length i - 2.
  std::vector<std::int64_t> fib{1, 1};
  while (fib.size() < 36) fib.push_back(fib[fib.size() - 1] + fib[fib.size() - 2]);
  for (size_t i = 0; i < radii.size(); ++i) {
    const auto& cell = t.cells[0][i];
    CHECK(cell.exact);
    CHECK(cell.counts_valid);
    CHECK(cell.counts.lb == fib[size_t(2 * radii[i] + 3) - 1]);
  }
  CHECK(t.cells[0].back().counts.lb == 9227465);

  auto h = topological_entropy_estimate(t);
  const double target = std::log((1 + std::sqrt(5.0)) / 2);
  CHECK(h.lb == doctest::Approx(h.ub).epsilon(1e-12));
  CHECK(h.lb >= target - 1e-12);
  CHECK(std::abs(h.ub - target) / target < 0.03);
}

TEST_CASE("one-letter shift has zero entropy at every cell") {
  auto sys = full_shift(SiteSpace::alphabet(1), 1);
  auto t = scale_entropy_table(sys, {Rational(1, 2)}, {1, 4});
  auto h = topological_entropy_estimate(t);
  CHECK(h.lb == 0.0);
  CHECK(h.ub == 0.0);
}

TEST_CASE("quantized circle shift: per-site factorization is exact and mdim is one") {
  auto sys = full_shift(SiteSpace::torus(1, 2048), 1);
  auto t = scale_entropy_table(sys, dyadic_ladder(2, 8), {1, 2, 3});
  auto md = metric_mean_dim_estimate(t);
  for (size_t e = 0; e < md.ratio_lb.size(); ++e) {
    CHECK(md.ratio_lb[e] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(md.ratio_ub[e] == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (const auto& row : t.cells)
    for (const auto& cell : row) CHECK(cell.exact);
  CHECK(md.at_finest.lb == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("misaligned site resolution widens the per-site bracket honestly") {
  auto sys = full_shift(SiteSpace::torus(1, 12), 1);
  // spacing ceil(12 * 5/12) = 5: two separated points, three covering arcs
  auto cell = entropy_cell(sys, 1, Rational(5, 12));
  CHECK(cell.counts_valid);
  CHECK(cell.counts.lb == 2 * 2 * 2);
  CHECK(cell.counts.ub == 3 * 3 * 3);
  CHECK(!cell.exact);
  CHECK(cell.norm_lb == doctest::Approx(std::log(2.0)));
  CHECK(cell.norm_ub == doctest::Approx(std::log(3.0)));

  auto single = entropy_cell(sys, 0, Rational(5, 12));
  CHECK(single.counts.lb == 2);
  CHECK(single.counts.ub == 3);
}

TEST_CASE("enumeration fallback agrees with the factorized per-site counts") {
  // identity cellwise map forces the generic route through the same metric
  auto id = toral_matrix({1});
  auto sys = product_shift(SiteSpace::torus(1, 12), id);
  auto cell = entropy_cell(sys, 0, Rational(5, 12));
  CHECK(cell.counts_valid);
  // twelve patterns fit under the exact-cover cap, so the bracket collapses
  // to the covering number itself, inside the factorized [2, 3]
  CHECK(cell.exact);
  CHECK(cell.counts.lb == 3);
  CHECK(cell.counts.ub == 3);

  auto sys4 = product_shift(SiteSpace::torus(1, 4), id);
  auto wide = entropy_cell(sys4, 1, Rational(3, 8));
  CHECK(wide.counts_valid);
  CHECK(wide.counts.lb <= 8);
  CHECK(wide.counts.ub >= 8);

  CHECK_THROWS_AS(entropy_cell(sys4, 1, Rational(3, 8), 10), cap_exceeded);
}

TEST_CASE("restricted columns: exact counts, decreasing norms, product target") {
  auto sys = build_restricted_symbolic(2, IndexSpec::multiples(2), {site_value(0)});

  auto small = entropy_cell(sys, 2, Rational(1, 2));
  CHECK(small.counts_valid);
  CHECK(small.counts.lb == 33791);  // 2^15 + 2^10 - 1 free-column placements

  auto t = scale_entropy_table(sys, {Rational(1, 2)}, {2, 4, 10, 20});
  for (size_t i = 0; i + 1 < t.cells[0].size(); ++i)
    CHECK(t.cells[0][i].norm_lb > t.cells[0][i + 1].norm_lb);

  const double half_log2 = std::log(2.0) / 2;
  for (const auto& cell : t.cells[0]) CHECK(cell.norm_lb >= half_log2 - 1e-12);

  // N = 20: log(2^861 + 2^820 - 1) / 41^2, against the closed form
  const auto& fine = t.cells[0].back();
  const double expected =
      (861 * std::log(2.0) + std::log1p(std::pow(2.0, -41))) / (41.0 * 41.0);
  CHECK(fine.norm_lb == doctest::Approx(expected).epsilon(1e-9));
  CHECK(std::abs(fine.norm_lb - half_log2) / half_log2 < 0.06);

  auto h = topological_entropy_estimate(t);
  CHECK(h.lb == doctest::Approx(fine.norm_lb).epsilon(1e-12));
  CHECK(h.ub == doctest::Approx(fine.norm_lb).epsilon(1e-12));

  auto strips = pavlov_projection_entropy(sys, {1, 2, 4}, {2, 4, 8, 12});
  REQUIRE(strips.size() == 3);
  CHECK(strips[0].lb == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(strips[0].ub == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const double w2_fine = std::log(std::pow(2.0, 26) - 1) / 25 / 2;
  const double w2_coarse = std::log(std::pow(2.0, 6) - 1) / 5 / 2;
  CHECK(strips[1].lb == doctest::Approx(w2_fine).epsilon(1e-12));
  CHECK(strips[1].ub == doctest::Approx(w2_coarse).epsilon(1e-12));

  // width-4 bracket already contains the plane estimate
  CHECK(strips[2].lb <= h.lb + 1e-12);
  CHECK(h.ub <= strips[2].ub + 1e-12);

  auto rep = product_entropy_check(h, strips[1], std::log(2.0), Rational(1, 2), 0.06);
  CHECK(rep.plane_ok);
  CHECK(rep.strip_ok);
  CHECK(rep.target == doctest::Approx(std::log(2.0) / 2));
  CHECK_THROWS_AS(product_entropy_check(h, strips[1], std::log(2.0), Rational(1, 2), 0.001),
                  check_failed);
}

TEST_CASE("three-cell relation: free cells parameterize the legal patterns") {
  for (std::int64_t q : {2, 3, 5})
    for (std::int64_t L : {2, 3, 4}) {
      auto sys = build_example_1_3(q);
      auto pc = pattern_count(sys, box_rect(0, L - 1, 0, L - 1));
      REQUIRE(pc.exact.has_value());
      std::uint64_t expected = 1;
      for (std::int64_t i = 0; i < 2 * L - 1; ++i) expected *= std::uint64_t(q);
      CHECK(*pc.exact == expected);
      if (q <= 3 && L <= 3)
        CHECK(enumerate_patterns(sys, box_rect(0, L - 1, 0, L - 1), 1 << 22) == expected);
    }

  // materializing every value tuple on the free cells hits each legal
  // pattern exactly once (q = 2, L = 2)
  auto sys = build_example_1_3(2);
  const Box box = box_rect(0, 1, 0, 1);
  const std::vector<Cell> free_cells{{0, 0}, {1, 0}, {1, 1}};
  const Config background(box);
  std::set<std::vector<std::int64_t>> made;
  for (std::int64_t bits = 0; bits < 8; ++bits) {
    std::vector<SiteValue> vals;
    for (int i = 0; i < 3; ++i) vals.push_back(site_value((bits >> i) & 1));
    Config c = materialize_on(sys, background, free_cells, vals);
    CHECK(is_legal(sys, c));
    made.insert(flatten(sys.site, c));
  }
  CHECK(made.size() == 8);
  std::set<std::vector<std::int64_t>> legal;
  for (const auto& p : pattern_list(sys, box, 100)) legal.insert(flatten(sys.site, p));
  CHECK(made == legal);

  CHECK_THROWS_AS(
      materialize_on(sys, background, {{0, 0}, {1, 0}, {0, 1}},
                     std::vector<SiteValue>(3)),
      precondition_failed);
}

TEST_CASE("three-cell relation: a full free row embeds at rate one") {
  auto sys = build_example_1_3(4);
  DetRng rng(2026);
  const auto window = line_window(2, 10);
  std::vector<Cell> free_cells;
  for (std::int64_t m = -10; m <= 10; ++m) free_cells.push_back(Cell{m, 0});
  const Config background(box_rect(-10, 10, 0, 0));

  auto [est, cert] = embedding_lower_bound(sys, free_cells, window, background, 1.0, rng);
  CHECK(est.lb == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(est.lb >= 0.9);
  CHECK(est.ub == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cert.pairs_checked == 1024);
  CHECK(cert.window_size == 21);

  CHECK_THROWS_AS(
      embedding_lower_bound(sys, free_cells, window, background, 1.0, rng, 10),
      precondition_failed);
  std::vector<Cell> off{{99, 0}};
  CHECK_THROWS_AS(embedding_lower_bound(sys, off, window, background, 1.0, rng),
                  precondition_failed);
}

TEST_CASE("three-cell relation: thickening the line adds only boundary seeds") {
  auto sys = build_example_1_3(4);
  DetRng rng(7);

  DirectionalWindowSpec thin{1, 0, Rational(1), 10};
  const auto thin_cells = directional_window(thin);
  CHECK(thin_cells.size() == 19);
  const double length = directional_segment_length(thin);
  CHECK(length == doctest::Approx(20.0));

  DirectionalWindowSpec thick{1, 0, Rational(3, 2), 10};
  const auto thick_cells = directional_window(thick);
  CHECK(thick_cells.size() == 57);

  std::vector<LatticeVector> thin_win, thick_win;
  for (const auto& c : thin_cells) {
    LatticeVector u = LatticeVector::Zero(2);
    u[0] = c[0];
    u[1] = c[1];
    thin_win.push_back(u);
  }
  for (const auto& c : thick_cells) {
    LatticeVector u = LatticeVector::Zero(2);
    u[0] = c[0];
    u[1] = c[1];
    thick_win.push_back(u);
  }

  std::vector<Cell> thin_free = thin_cells;  // one free row, nothing determined
  const Config thin_bg(box_rect(-9, 9, 0, 0));
  auto [thin_est, thin_cert] =
      embedding_lower_bound(sys, thin_free, thin_win, thin_bg, 1.0, rng);
  const double thin_rate = double(thin_cert.free_cells.size()) / length;
  CHECK(thin_rate == doctest::Approx(19.0 / 20));

  // bottom row plus the last column seeds the whole strip through the rule
  std::vector<Cell> thick_free;
  for (std::int64_t m = -9; m <= 9; ++m) thick_free.push_back(Cell{m, -1});
  thick_free.push_back(Cell{9, 0});
  thick_free.push_back(Cell{9, 1});
  const Config thick_bg(box_rect(-9, 9, -1, 1));
  auto [thick_est, thick_cert] =
      embedding_lower_bound(sys, thick_free, thick_win, thick_bg, 1.0, rng);
  const double thick_rate = double(thick_cert.free_cells.size()) / length;
  CHECK(thick_rate == doctest::Approx(21.0 / 20));

  CHECK(std::abs(thick_rate - thin_rate) <= 2.0 / 10);
}

TEST_CASE("restricted circle pair: half-density support embeds near rate one") {
  auto base = full_shift(SiteSpace::torus(2, 64, SiteNorm::sup), 1);
  auto sys = build_restricted_Y(base, IndexSpec::multiples(2), {site_value(0, 0)});
  DetRng rng(11);

  const auto window = line_window(1, 20);
  std::vector<Cell> free_cells;
  for (std::int64_t m = -20; m <= 20; m += 2) free_cells.push_back(Cell{m, 0});
  Config background(box_interval(-20, 20));
  background.klass = 0;

  auto [est, cert] = embedding_lower_bound(sys, free_cells, window, background, 2.0, rng);
  CHECK(cert.window_size == 41);
  CHECK(cert.support_in_window == 21);
  CHECK(est.lb == doctest::Approx(2.0 * 21 / 41).epsilon(1e-12));
  CHECK(std::abs(est.lb - 1.0) <= 0.05);
  CHECK(est.ub == doctest::Approx(est.lb).epsilon(1e-12));
}

TEST_CASE("upper Banach density: exact values and the window bracket") {
  auto d_all = banach_density(IndexSpec::all());
  CHECK(d_all.exact == Rational(1));
  CHECK(d_all.lb <= 1.0);
  CHECK(d_all.ub == doctest::Approx(1.0));

  auto d_none = banach_density(IndexSpec::none());
  CHECK(d_none.exact == Rational(0));
  CHECK(d_none.ub == doctest::Approx(0.0));

  auto d_point = banach_density(IndexSpec::finite_set({0}));
  CHECK(d_point.exact == Rational(0));
  CHECK(d_point.ub <= 1.0 / 256 + 1e-12);

  auto d_half = banach_density(IndexSpec::multiples(2));
  CHECK(d_half.exact == Rational(1, 2));
  CHECK(d_half.lb <= 0.5);
  CHECK(d_half.ub >= 0.5);

  auto d_37 = banach_density(IndexSpec::periodic_set(7, {0, 2, 3}));
  CHECK(d_37.exact == Rational(3, 7));
  CHECK(d_37.lb <= 3.0 / 7 + 1e-12);
  CHECK(d_37.ub >= 3.0 / 7 - 1e-12);

  // density is subadditive under union
  auto u = index_union(IndexSpec::multiples(2), IndexSpec::periodic_set(7, {0, 2, 3}));
  auto d_u = banach_density(u);
  CHECK(d_u.exact == Rational(5, 7));
  CHECK(d_u.exact <= d_half.exact + d_37.exact);

  CHECK_THROWS_AS(banach_density(IndexSpec::all(), 0), precondition_failed);
}

TEST_CASE("continuum torus automorphism: slope bracket pinches the growth rate") {
  auto h = toral_matrix({2, 1, 1, 1});
  auto est = toral_entropy_bracket(h, 1.0 / 64, 6);
  const double target = std::log((3 + std::sqrt(5.0)) / 2);
  CHECK(est.lb <= target + 1e-12);
  CHECK(est.ub >= target - 1e-12);
  CHECK(est.ub - est.lb <= 0.15);

  // the square root of the matrix carries half the growth rate
  auto r = toral_matrix({1, 1, 1, 0});
  auto half = toral_entropy_bracket(r, 1.0 / 8, 8);
  const double phi = std::log((1 + std::sqrt(5.0)) / 2);
  CHECK(half.lb <= phi + 1e-12);
  CHECK(half.ub >= phi - 1e-12);
  CHECK(2 * phi == doctest::Approx(target).epsilon(1e-12));

  CHECK_THROWS_AS(toral_entropy_bracket(ToralAutomorphism::identity(2), 1.0 / 64, 6),
                  precondition_failed);
  CHECK_THROWS_AS(toral_entropy_bracket(toral_matrix({0, 1, -1, 0}), 1.0 / 64, 6),
                  precondition_failed);
  CHECK_THROWS_AS(toral_entropy_bracket(h, 0.3, 6), precondition_failed);
}

TEST_CASE("directional window geometry") {
  CHECK_THROWS_AS(directional_window({0, 0, Rational(1), 4}), precondition_failed);
  CHECK_THROWS_AS(directional_window({2, 2, Rational(1), 4}), precondition_failed);
  CHECK_THROWS_AS(directional_window({1, 0, Rational(7, 10), 4}), precondition_failed);
  CHECK_THROWS_AS(directional_window({1, 0, Rational(1), 0}), precondition_failed);

  auto horizontal = directional_window({1, 0, Rational(1), 10});
  CHECK(horizontal.size() == 19);
  for (const auto& c : horizontal) CHECK(c[1] == 0);

  auto diagonal = directional_window({1, 1, Rational(1), 4});
  for (const auto& c : diagonal) CHECK(std::abs(c[0] - c[1]) <= 1);
  // |m - n| <= 1 inside (-4, 4)^2: the diagonal and two side diagonals
  CHECK(diagonal.size() == 7 + 6 + 6);
  CHECK(directional_segment_length({1, 1, Rational(1), 4}) ==
        doctest::Approx(8 * std::sqrt(2.0)));
}

TEST_CASE("directional mean dimension: aligned scales give a tight bracket") {
  auto sys = full_shift(SiteSpace::torus(1, 2048), 2);
  DetRng rng(5);
  Config background(centered_box(2, 10));

  DirectionalWindowSpec w{1, 0, Rational(1), 10};
  auto est = directional_mdim_estimate(sys, w, Rational(1, 256), background, rng);
  CHECK(est.lb == doctest::Approx(19.0 / 20).epsilon(1e-12));
  CHECK(est.ub == doctest::Approx(19.0 / 20).epsilon(1e-12));

  // rank-one mean dimension of the site shift is 1; the window value agrees
  // up to the boundary term
  CHECK(std::abs(est.lb - 1.0) <= 2.0 / 10);

  // a thicker window reports the full strip content, no collapse
  DirectionalWindowSpec thick{1, 0, Rational(3, 2), 10};
  auto est3 = directional_mdim_estimate(sys, thick, Rational(1, 256), background, rng);
  CHECK(est3.lb == doctest::Approx(3 * 19.0 / 20).epsilon(1e-12));

  // misaligned site resolution inverts the bracket and is refused
  auto sys12 = full_shift(SiteSpace::torus(1, 12), 2);
  Config bg12(centered_box(2, 10));
  CHECK_THROWS_AS(directional_mdim_estimate(sys12, w, Rational(1, 5), bg12, rng),
                  check_failed);

  auto one = full_shift(SiteSpace::alphabet(1), 2);
  Config bg1(centered_box(2, 10));
  auto est1 = directional_mdim_estimate(one, w, Rational(1, 4), bg1, rng);
  CHECK(est1.lb == 0.0);
  CHECK(est1.ub == 0.0);

  CHECK_THROWS_AS(
      directional_mdim_estimate(full_shift(SiteSpace::alphabet(2), 1), w,
                                Rational(1, 4), bg1, rng),
      precondition_failed);
  CHECK_THROWS_AS(
      directional_mdim_estimate(build_example_1_3(4), w, Rational(1, 4), bg1, rng),
      precondition_failed);
}

TEST_CASE("cellwise identity map: unit Lipschitz constant, inequality holds") {
  auto sys = full_shift(SiteSpace::alphabet(2), 1);
  auto md = metric_mean_dim_estimate(scale_entropy_table(sys, dyadic_ladder(2, 24), {1, 2}));
  DetRng rng(3);

  CellwiseMap f;
  f.name = "identity";
  f.radius = 0;
  f.site_stretch = 1;
  f.rule = [](const System&, const Config& x, const Cell& c) { return x.at(c); };

  auto rep = lipschitz_endo_check(sys, f, md.at_finest, {1, 2}, {1, 3}, rng);
  CHECK(rep.ok);
  CHECK(rep.l_certified == doctest::Approx(1.0));
  CHECK(rep.l_sampled == doctest::Approx(1.0));
  CHECK(rep.h_lb == 0.0);
  CHECK(rep.h_ub == doctest::Approx(std::log(2.0) / 4));
  CHECK(rep.rhs == doctest::Approx(0.0));
  CHECK(rep.commutation_checked == 64);
  CHECK(rep.quotients_sampled > 0);
}

TEST_CASE("cellwise neighborhood sum: certified bound dominates the samples") {
  auto sys = full_shift(SiteSpace::alphabet(2), 1);
  auto md = metric_mean_dim_estimate(scale_entropy_table(sys, dyadic_ladder(2, 24), {1, 2}));
  DetRng rng(17);

  CellwiseMap f;
  f.name = "xor-neighbors";
  f.radius = 1;
  f.site_stretch = 1;
  f.rule = [](const System&, const Config& x, const Cell& c) {
    return site_value((x.at({c[0] - 1, c[1]}).c[0] + x.at({c[0] + 1, c[1]}).c[0]) % 2);
  };

  auto rep = lipschitz_endo_check(sys, f, md.at_finest, {1, 2}, {1, 3}, rng);
  CHECK(rep.ok);
  CHECK(rep.l_certified == doctest::Approx(5.0));  // weights 2 + 1 + 2
  CHECK(rep.l_sampled <= rep.l_certified + 1e-9);
  CHECK(rep.l_sampled > 1.0);
  CHECK(rep.h_ub > 0.0);
  CHECK(rep.h_ub < std::log(2.0));

  // understating the stretch is caught by the sampled quotients
  CellwiseMap lying = f;
  lying.site_stretch = 0.05;
  CHECK_THROWS_AS(lipschitz_endo_check(sys, lying, md.at_finest, {1}, {1}, rng),
                  check_failed);
}

TEST_CASE("cellwise matrix map on the circle pair: stretch three, inequality holds") {
  auto sys = full_shift(SiteSpace::torus(2, 64, SiteNorm::sup), 1);
  auto t = scale_entropy_table(sys, dyadic_ladder(2, 6), {1, 2, 3});
  auto md = metric_mean_dim_estimate(t);
  CHECK(md.at_finest.ub == doctest::Approx(2.0).epsilon(1e-12));
  DetRng rng(23);

  auto m = toral_matrix({2, 1, 1, 1});
  CellwiseMap f;
  f.name = "cellwise-hyperbolic";
  f.radius = 0;
  f.site_stretch = 3;  // max absolute row sum
  f.rule = [m](const System& s, const Config& x, const Cell& c) {
    return m.apply(x.at(c), s.site.q());
  };

  auto rep = lipschitz_endo_check(sys, f, md.at_finest, {0}, {2}, rng);
  CHECK(rep.ok);
  CHECK(rep.l_certified == doctest::Approx(3.0));
  CHECK(rep.l_sampled == doctest::Approx(3.0));
  CHECK(rep.rhs == doctest::Approx(2 * std::log(3.0)).epsilon(1e-9));
  CHECK(rep.h_ub == doctest::Approx(std::log(4096.0) / 3));

  CHECK_THROWS_AS(lipschitz_endo_check(sys, f, md.at_finest, {5}, {3}, rng),
                  cap_exceeded);
}

TEST_CASE("cellwise map that breaks translation equivariance is rejected") {
  auto sys = full_shift(SiteSpace::alphabet(2), 1);
  auto md = metric_mean_dim_estimate(scale_entropy_table(sys, dyadic_ladder(2, 24), {1, 2}));
  DetRng rng(29);

  CellwiseMap pinned;
  pinned.name = "read-origin";
  pinned.radius = 0;
  pinned.site_stretch = 1;
  pinned.rule = [](const System&, const Config& x, const Cell&) { return x.at({0, 0}); };
  CHECK_THROWS_AS(lipschitz_endo_check(sys, pinned, md.at_finest, {1}, {1}, rng),
                  check_failed);
}

TEST_CASE("embedding rate never exceeds the metric mean dimension estimate") {
  auto sys = full_shift(SiteSpace::torus(1, 2048), 1);
  auto md = metric_mean_dim_estimate(scale_entropy_table(sys, dyadic_ladder(2, 8), {1, 2, 3}));
  DetRng rng(31);

  const auto window = line_window(1, 10);
  std::vector<Cell> free_cells;
  for (std::int64_t m = -10; m <= 10; ++m) free_cells.push_back(Cell{m, 0});
  const Config background(box_interval(-10, 10));
  auto [est, cert] = embedding_lower_bound(sys, free_cells, window, background, 1.0, rng);
  CHECK(est.lb == doctest::Approx(1.0).epsilon(1e-12));

  auto lw = lw_inequality_check(est, md.at_finest);
  CHECK(lw.ok);
  CHECK(lw.lhs == doctest::Approx(1.0).epsilon(1e-12));

  auto fake = make_estimate(DimensionEstimate::Kind::mdim_lower, 1.5, 1.6, "", "");
  CHECK_THROWS_AS(lw_inequality_check(fake, md.at_finest), check_failed);
}

TEST_CASE("entropy tables are bracketed and monotone across bundled systems") {
  std::vector<System> systems;
  systems.push_back(full_shift(SiteSpace::alphabet(2), 1));
  systems.push_back(full_shift(SiteSpace::alphabet(3), 2));
  systems.push_back(full_shift(SiteSpace::torus(1, 8), 1));
  systems.push_back(full_shift(SiteSpace::torus(2, 16, SiteNorm::sup), 1));
  systems.push_back(golden_mean_shift());

  for (const auto& sys : systems) {
    auto t = scale_entropy_table(sys, dyadic_ladder(1, 3), {1, 2});
    for (const auto& row : t.cells)
      for (const auto& cell : row) CHECK(cell.norm_lb <= cell.norm_ub + 1e-12);
    auto per_scale = scale_entropy_estimates(t);
    for (size_t e = 0; e + 1 < per_scale.size(); ++e) {
      CHECK(per_scale[e].lb <= per_scale[e + 1].lb + 1e-9);
      CHECK(per_scale[e].ub <= per_scale[e + 1].ub + 1e-9);
    }
    auto h = topological_entropy_estimate(t);
    CHECK(h.lb <= h.ub + 1e-12);
  }
}

TEST_CASE("running infimum lands on the deepest window") {
  auto t = scale_entropy_table(golden_mean_shift(), {Rational(1, 2)}, {1, 2, 4, 8});
  auto s = scale_entropy_estimates(t);
  CHECK(s[0].lb == doctest::Approx(t.cells[0].back().norm_lb).epsilon(1e-12));
  CHECK(s[0].ub == doctest::Approx(t.cells[0].back().norm_ub).epsilon(1e-12));
}
