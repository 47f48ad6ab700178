#include <doctest.h>

#include <algorithm>

#include "codedshuffle/aligned.hpp"
#include "codedshuffle/baseline.hpp"
#include "codedshuffle/bounds.hpp"

using namespace codedshuffle;
using bounds::Envelope;
using bounds::RatePoint;

namespace {

// Independent evaluation: clamped max over the j-indexed linear bounds.
Rational family_max(int workers, int points, const Rational& storage) {
  Rational best(0);
  for (int j = 1; j <= workers - 1; ++j) {
    best = std::max(best, bounds::lower_bound_family(workers, points, storage, j));
  }
  return best;
}

std::vector<Rational> storage_grid(int workers, int points, int samples) {
  std::vector<Rational> grid;
  Rational lo(points, workers);
  Rational hi(points);
  for (int t = 0; t < samples; ++t) {
    grid.push_back(lo + (hi - lo) * Rational(t, samples - 1));
  }
  return grid;
}

}  // namespace

TEST_SUITE("bounds") {

TEST_CASE("upper envelope holds the achievable breakpoints") {
  Envelope upper = bounds::upper_envelope(4, 4);
  REQUIRE(upper.breakpoints().size() == 5);
  CHECK(upper.breakpoints()[0] == RatePoint{Rational(1), Rational(4)});
  CHECK(upper.breakpoints()[1] == RatePoint{Rational(7, 4), Rational(3, 2)});
  CHECK(upper.breakpoints()[2] == RatePoint{Rational(5, 2), Rational(2, 3)});
  CHECK(upper.breakpoints()[3] == RatePoint{Rational(13, 4), Rational(1, 4)});
  CHECK(upper.breakpoints()[4] == RatePoint{Rational(4), Rational(0)});
}

TEST_CASE("lower envelope holds the converse breakpoints and interpolates") {
  Envelope lower = bounds::lower_envelope(4, 4);
  REQUIRE(lower.breakpoints().size() == 4);
  CHECK(lower.breakpoints()[0] == RatePoint{Rational(1), Rational(3)});
  CHECK(lower.breakpoints()[1] == RatePoint{Rational(2), Rational(1)});
  CHECK(lower.breakpoints()[2] == RatePoint{Rational(3), Rational(1, 3)});
  CHECK(lower.breakpoints()[3] == RatePoint{Rational(4), Rational(0)});
  CHECK(lower.eval(Rational(3, 2)) == Rational(2));  // midpoint of (1,3)-(2,1)
}

TEST_CASE("degenerate single-worker envelopes collapse to (N, 0)") {
  Envelope upper = bounds::upper_envelope(1, 3);
  REQUIRE(upper.breakpoints().size() == 1);
  CHECK(upper.breakpoints()[0] == RatePoint{Rational(3), Rational(0)});
  Envelope lower = bounds::lower_envelope(1, 3);
  CHECK(lower.eval(Rational(3)) == Rational(0));
}

TEST_CASE("linear bound family reproduces the worked K=N=4 bounds") {
  // R >= 5 - 2S at j=1, (7-2S)/3 at j=2, (4-S)/3 at j=3
  CHECK(bounds::lower_bound_family(4, 4, Rational(1), 1) == Rational(3));
  CHECK(bounds::lower_bound_family(4, 4, Rational(2), 2) == Rational(1));
  CHECK(bounds::lower_bound_family(4, 4, Rational(4), 3) == Rational(0));
  CHECK(bounds::lower_bound_family(4, 4, Rational(3, 2), 1) == Rational(2));
  CHECK_THROWS_AS(bounds::lower_bound_family(4, 4, Rational(1), 4), InvalidConfig);
}

TEST_CASE("clamped family maximum equals the lower envelope on a dense grid") {
  for (int workers = 2; workers <= 8; ++workers) {
    for (int points : {workers, 3 * workers}) {
      Envelope lower = bounds::lower_envelope(workers, points);
      for (const Rational& s : storage_grid(workers, points, 257)) {
        REQUIRE(family_max(workers, points, s) == lower.eval(s));
      }
    }
  }
}

TEST_CASE("upper envelope dominates lower, touching exactly at the i>=1 scheme points") {
  for (int workers = 2; workers <= 6; ++workers) {
    int points = 2 * workers;
    Envelope upper = bounds::upper_envelope(workers, points);
    Envelope lower = bounds::lower_envelope(workers, points);
    for (const Rational& s : storage_grid(workers, points, 101)) {
      CHECK(upper.eval(s) >= lower.eval(s));
    }
    for (int i = 1; i <= workers; ++i) {
      Rational s = (Rational(1) + Rational(static_cast<std::int64_t>(i) * (workers - 1), workers)) *
                   Rational(points, workers);
      CHECK(upper.eval(s) == lower.eval(s));
    }
  }
}

TEST_CASE("both envelopes are convex") {
  for (int workers : {2, 5, 8}) {
    for (const Envelope& env : {bounds::upper_envelope(workers, workers),
                                bounds::lower_envelope(workers, workers),
                                bounds::aligned_upper_envelope(workers, workers)}) {
      const auto& pts = env.breakpoints();
      for (std::size_t i = 2; i < pts.size(); ++i) {
        Rational lhs = (pts[i - 1].rate - pts[i - 2].rate) * (pts[i].storage - pts[i - 1].storage);
        Rational rhs = (pts[i].rate - pts[i - 1].rate) * (pts[i - 1].storage - pts[i - 2].storage);
        CHECK(lhs <= rhs);
      }
    }
  }
}

TEST_CASE("baseline gap ratios: 4/3 at S=1, 1 at the optimal points, K/(K-1) maximum") {
  bounds::GapRatio g1 = bounds::gap_ratio(4, 4, Rational(1), false);
  REQUIRE(g1.finite);
  CHECK(g1.value == Rational(4, 3));
  bounds::GapRatio g2 = bounds::gap_ratio(4, 4, Rational(7, 4), false);
  CHECK(g2.value == Rational(1));

  for (int workers = 2; workers <= 8; ++workers) {
    int points = workers;
    Envelope upper = bounds::upper_envelope(workers, points);
    Envelope lower = bounds::lower_envelope(workers, points);
    // candidates for the max sit at breakpoints of either envelope
    Rational best(0);
    auto consider = [&](const Rational& s) {
      if (s >= Rational(points)) return;
      bounds::GapRatio g = bounds::gap_ratio(workers, points, s, false);
      REQUIRE(g.finite);
      best = std::max(best, g.value);
    };
    for (const auto& bp : upper.breakpoints()) consider(bp.storage);
    for (const auto& bp : lower.breakpoints()) consider(bp.storage);
    CHECK(best == Rational(workers, workers - 1));
    bounds::GapRatio at_min = bounds::gap_ratio(workers, points, Rational(points, workers), false);
    CHECK(at_min.value == Rational(workers, workers - 1));
    // closed form 1 + 2/((K-1)(j+1)) at each lower breakpoint S = jN/K
    for (int j = 1; j <= workers - 1; ++j) {
      bounds::GapRatio g =
          bounds::gap_ratio(workers, points, Rational(static_cast<std::int64_t>(j) * points, workers), false);
      CHECK(g.value == Rational(1) + Rational(2, static_cast<std::int64_t>(workers - 1) * (j + 1)));
    }
  }
}

TEST_CASE("aligned gap is 1 everywhere for K <= 4") {
  for (int workers : {2, 3, 4}) {
    int points = workers;
    for (const Rational& s : storage_grid(workers, points, 101)) {
      if (s >= Rational(points)) continue;
      bounds::GapRatio g = bounds::gap_ratio(workers, points, s, true);
      REQUIRE(g.finite);
      CHECK(g.value == Rational(1));
    }
  }
}

TEST_CASE("aligned gap maximum is (K-1/3)/(K-1) at the m=2 breakpoint for K >= 5") {
  for (int workers = 5; workers <= 8; ++workers) {
    int points = workers;
    Envelope upper = bounds::aligned_upper_envelope(workers, points);
    Envelope lower = bounds::lower_envelope(workers, points);
    Rational best(0);
    Rational best_at(0);
    auto consider = [&](const Rational& s) {
      if (s >= Rational(points)) return;
      bounds::GapRatio g = bounds::gap_ratio(workers, points, s, true);
      if (g.value > best) {
        best = g.value;
        best_at = s;
      }
    };
    for (const auto& bp : upper.breakpoints()) consider(bp.storage);
    for (const auto& bp : lower.breakpoints()) consider(bp.storage);
    // (K - 1/3)/(K - 1) = (3K-1)/(3(K-1))
    CHECK(best == Rational(3 * workers - 1, 3 * (workers - 1)));
    CHECK(best_at == Rational(2 * points, workers));
  }
}

TEST_CASE("the gap at full storage is the infinite sentinel") {
  bounds::GapRatio g = bounds::gap_ratio(4, 4, Rational(4), false);
  CHECK_FALSE(g.finite);
}

TEST_CASE("memory sharing interpolates points") {
  RatePoint p1{Rational(7, 4), Rational(3, 2)};
  RatePoint p2{Rational(5, 2), Rational(2, 3)};
  CHECK(bounds::memory_share(p1, p2, Rational(1)) == p1);
  CHECK(bounds::memory_share(p1, p2, Rational(0)) == p2);
  RatePoint mid = bounds::memory_share(p1, p2, Rational(1, 2));
  CHECK(mid.storage == Rational(17, 8));
  CHECK(mid.rate == Rational(13, 12));
  CHECK_THROWS_AS(bounds::memory_share(p1, p2, Rational(2)), InvalidConfig);
}

TEST_CASE("allocation objective on hand-built vectors") {
  bounds::ExcessAllocation full;
  full.x = {Rational(0), Rational(0), Rational(0), Rational(4)};
  CHECK(bounds::check_allocation(full, 4, 4, Rational(4)) == Rational(0));

  bounds::ExcessAllocation none;
  none.x = {Rational(4), Rational(0), Rational(0), Rational(0)};
  CHECK(bounds::check_allocation(none, 4, 4, Rational(1)) == Rational(3));

  bounds::ExcessAllocation bad;
  bad.x = {Rational(1), Rational(0), Rational(0), Rational(0)};
  CHECK_THROWS_AS(bounds::check_allocation(bad, 4, 4, Rational(1)), InfeasibleAllocation);
  bounds::ExcessAllocation over;
  over.x = {Rational(0), Rational(0), Rational(0), Rational(4)};
  CHECK_THROWS_AS(bounds::check_allocation(over, 4, 4, Rational(2)), InfeasibleAllocation);
}

TEST_CASE("scheme placements map to allocations that respect both bounds") {
  DataSet data4 = DataSet::generate(4, 12, 50);
  Assignment assign = identity_assignment(4, 4);

  // baseline i=1: one owner-only slot (x_0) and three singly-held slots (x_1)
  // per point; the objective evaluates to the scheme's own rate
  baseline::BaselineConfig b1{4, 4, 12, 1};
  bounds::ExcessAllocation a1 =
      bounds::allocation_from_storages(baseline::place(b1, data4, assign), assign, 12);
  CHECK(a1.x[0] == Rational(1));
  CHECK(a1.x[1] == Rational(3));
  Rational v1 = bounds::check_allocation(a1, 4, 4, b1.storage_points());
  CHECK(v1 == Rational(3, 2));
  CHECK(v1 <= b1.formula_rate());
  CHECK(v1 >= bounds::lower_envelope(4, 4).eval(b1.storage_points()));

  baseline::BaselineConfig b2{4, 4, 12, 2};
  bounds::ExcessAllocation a2 =
      bounds::allocation_from_storages(baseline::place(b2, data4, assign), assign, 12);
  Rational v2 = bounds::check_allocation(a2, 4, 4, b2.storage_points());
  CHECK(v2 == b2.formula_rate());

  // aligned m: all mass at x_{m-1}; objective hits the lower envelope point
  for (int m : {2, 3}) {
    aligned::AlignedConfig c{4, 4, 12, m};
    bounds::ExcessAllocation a =
        bounds::allocation_from_storages(aligned::place_aligned(c, data4, assign), assign, 12);
    CHECK(a.x[static_cast<std::size_t>(m - 1)] == Rational(4));
    CHECK(bounds::check_allocation(a, 4, 4, c.storage_points()) ==
          bounds::lower_envelope(4, 4).eval(c.storage_points()));
  }
}

}  // TEST_SUITE
