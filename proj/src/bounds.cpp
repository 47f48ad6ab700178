#include "codedshuffle/bounds.hpp"

#include <algorithm>
#include <map>

namespace codedshuffle::bounds {

namespace {

// Slope comparison for hull building: slope(a->b) <= slope(b->c) keeps b.
bool convex_turn(const RatePoint& a, const RatePoint& b, const RatePoint& c) {
  // (b.r - a.r)/(b.s - a.s) <= (c.r - b.r)/(c.s - b.s), cross-multiplied.
  Rational lhs = (b.rate - a.rate) * (c.storage - b.storage);
  Rational rhs = (c.rate - b.rate) * (b.storage - a.storage);
  return lhs <= rhs;
}

std::vector<int> aligned_multipliers(int workers) {
  std::vector<int> out{1};
  for (int m : {workers - 2, workers - 1}) {
    if (m >= 1 && m <= workers - 1 && std::find(out.begin(), out.end(), m) == out.end()) {
      out.push_back(m);
    }
  }
  return out;
}

}  // namespace

Envelope::Envelope(std::vector<RatePoint> breakpoints) : points_(std::move(breakpoints)) {
  if (points_.empty()) throw InvalidConfig("envelope needs at least one breakpoint");
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i - 1].storage < points_[i].storage)) {
      throw InvalidConfig("envelope storages must be strictly increasing");
    }
    if (points_[i].rate > points_[i - 1].rate) {
      throw InvalidConfig("envelope rates must be non-increasing");
    }
  }
  for (std::size_t i = 2; i < points_.size(); ++i) {
    if (!convex_turn(points_[i - 2], points_[i - 1], points_[i])) {
      throw InvalidConfig("envelope breakpoints are not convex");
    }
  }
}

Envelope Envelope::lower_hull(std::vector<RatePoint> points) {
  if (points.empty()) throw InvalidConfig("envelope needs at least one breakpoint");
  std::sort(points.begin(), points.end(), [](const RatePoint& a, const RatePoint& b) {
    if (a.storage != b.storage) return a.storage < b.storage;
    return a.rate < b.rate;
  });
  std::vector<RatePoint> dedup;
  for (const RatePoint& p : points) {
    if (!dedup.empty() && dedup.back().storage == p.storage) continue;  // keep min rate
    dedup.push_back(p);
  }
  std::vector<RatePoint> hull;
  for (const RatePoint& p : dedup) {
    while (hull.size() >= 2 && !convex_turn(hull[hull.size() - 2], hull.back(), p)) {
      hull.pop_back();
    }
    hull.push_back(p);
  }
  // Drop leading points dominated by a later lower rate at higher storage
  // (cannot happen for our monotone families, but keeps the invariant).
  while (hull.size() >= 2 && hull[1].rate >= hull[0].rate) hull.erase(hull.begin() + 1);
  return Envelope(std::move(hull));
}

Rational Envelope::eval(const Rational& storage) const {
  if (storage < min_storage() || storage > max_storage()) {
    throw Error("storage " + storage.to_string() + " outside the envelope range [" +
                min_storage().to_string() + ", " + max_storage().to_string() + "]");
  }
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (storage <= points_[i].storage) {
      const RatePoint& a = points_[i - 1];
      const RatePoint& b = points_[i];
      return a.rate + (b.rate - a.rate) * (storage - a.storage) / (b.storage - a.storage);
    }
  }
  return points_.back().rate;
}

Envelope upper_envelope(int workers, int points) {
  if (workers < 1 || points < 1) throw InvalidConfig("need workers >= 1 and points >= 1");
  std::vector<RatePoint> pts;
  for (int i = 0; i <= workers; ++i) {
    Rational s = (Rational(1) + Rational(static_cast<std::int64_t>(i) * (workers - 1), workers)) *
                 Rational(points, workers);
    Rational r(static_cast<std::int64_t>(points) * (workers - i),
               static_cast<std::int64_t>(workers) * (i + 1));
    pts.push_back({s, r});
  }
  return Envelope::lower_hull(std::move(pts));
}

Envelope lower_envelope(int workers, int points) {
  if (workers < 1 || points < 1) throw InvalidConfig("need workers >= 1 and points >= 1");
  std::vector<RatePoint> pts;
  for (int m = 1; m <= workers; ++m) {
    pts.push_back({Rational(static_cast<std::int64_t>(m) * points, workers),
                   Rational(static_cast<std::int64_t>(points) * (workers - m),
                            static_cast<std::int64_t>(workers) * m)});
  }
  return Envelope::lower_hull(std::move(pts));
}

Envelope aligned_upper_envelope(int workers, int points) {
  Envelope base = upper_envelope(workers, points);
  std::vector<RatePoint> pts = base.breakpoints();
  for (int m : aligned_multipliers(workers)) {
    pts.push_back({Rational(static_cast<std::int64_t>(m) * points, workers),
                   Rational(static_cast<std::int64_t>(points) * (workers - m),
                            static_cast<std::int64_t>(workers) * m)});
  }
  return Envelope::lower_hull(std::move(pts));
}

Rational lower_bound_family(int workers, int points, const Rational& storage, int j) {
  if (j < 1 || j > workers - 1) throw InvalidConfig("bound index j must lie in [1:K-1]");
  Rational base(static_cast<std::int64_t>(points) * (workers - j),
                static_cast<std::int64_t>(workers) * j);
  Rational slope_term = Rational(workers) *
                        (storage - Rational(static_cast<std::int64_t>(j) * points, workers)) /
                        Rational(static_cast<std::int64_t>(j) * (j + 1));
  return base - slope_term;
}

GapRatio gap_ratio(int workers, int points, const Rational& storage, bool aligned) {
  Envelope upper = aligned ? aligned_upper_envelope(workers, points) : upper_envelope(workers, points);
  Envelope lower = lower_envelope(workers, points);
  Rational low = lower.eval(storage);
  if (low == Rational(0)) return {false, Rational(0)};
  return {true, upper.eval(storage) / low};
}

RatePoint memory_share(const RatePoint& p1, const RatePoint& p2, const Rational& alpha) {
  if (alpha < Rational(0) || alpha > Rational(1)) {
    throw InvalidConfig("memory sharing coefficient must lie in [0,1]");
  }
  Rational beta = Rational(1) - alpha;
  return {alpha * p1.storage + beta * p2.storage, alpha * p1.rate + beta * p2.rate};
}

Rational check_allocation(const ExcessAllocation& allocation, int workers, int points,
                          const Rational& storage) {
  if (allocation.x.size() != static_cast<std::size_t>(workers)) {
    throw InfeasibleAllocation("allocation must have K entries x_0..x_{K-1}");
  }
  Rational total(0);
  Rational weighted(0);
  for (std::size_t l = 0; l < allocation.x.size(); ++l) {
    if (allocation.x[l] < Rational(0)) throw InfeasibleAllocation("allocation entries must be >= 0");
    total += allocation.x[l];
    weighted += Rational(static_cast<std::int64_t>(l)) * allocation.x[l];
  }
  if (total != Rational(points)) {
    throw InfeasibleAllocation("allocation must sum to N, got " + total.to_string());
  }
  Rational excess_budget = Rational(workers) * (storage - Rational(points, workers));
  if (weighted > excess_budget) {
    throw InfeasibleAllocation("allocation exceeds the total excess storage budget");
  }
  Rational objective(0);
  for (std::size_t l = 0; l < allocation.x.size(); ++l) {
    objective += allocation.x[l] / Rational(static_cast<std::int64_t>(l) + 1);
  }
  return objective - Rational(points, workers);
}

ExcessAllocation allocation_from_storages(const std::vector<WorkerStorage>& storages,
                                          const Assignment& assign, int dim) {
  int workers = assign.workers();
  // Count excess holders per (point, byte interval). Fragments from a single
  // placement share the same slicing, so keying by offset is enough.
  std::map<std::pair<int, std::uint32_t>, std::pair<std::size_t, int>> slots;  // -> (len, holders)
  for (const WorkerStorage& z : storages) {
    for (const auto& [label, frag] : z.excess) {
      auto key = std::make_pair(label.point, frag.offset);
      auto [it, inserted] = slots.emplace(key, std::make_pair(frag.bytes.size(), 0));
      if (!inserted && it->second.first != frag.bytes.size()) {
        throw InfeasibleAllocation("inconsistent fragment slicing across workers");
      }
      ++it->second.second;
    }
  }
  ExcessAllocation allocation;
  allocation.x.assign(static_cast<std::size_t>(workers), Rational(0));
  std::map<int, std::size_t> covered;  // point -> excess-covered bytes
  for (const auto& [key, info] : slots) {
    const auto& [len, holders] = info;
    if (holders < 1 || holders > workers - 1) {
      throw InfeasibleAllocation("fragment held by an impossible number of workers");
    }
    allocation.x[static_cast<std::size_t>(holders)] += Rational(static_cast<std::int64_t>(len), dim);
    covered[key.first] += len;
  }
  // Bytes with no excess copy anywhere are stored only by the owner.
  for (int p = 1; p <= assign.points(); ++p) {
    std::size_t c = covered.count(p) ? covered[p] : 0;
    if (c > static_cast<std::size_t>(dim)) {
      throw InfeasibleAllocation("excess fragments of point " + std::to_string(p) + " overlap");
    }
    allocation.x[0] += Rational(static_cast<std::int64_t>(dim - c), dim);
  }
  return allocation;
}

}  // namespace codedshuffle::bounds
