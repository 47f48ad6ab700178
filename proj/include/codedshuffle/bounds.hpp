#pragma once

// Closed-form storage-rate analytics: the achievable upper envelope, the
// converse lower envelope and its per-j linear bound family, gap ratios for
// both the baseline and the aligned scheme, memory sharing, and the excess
// storage allocation objective. All arithmetic is exact rational.

#include <optional>
#include <vector>

#include "codedshuffle/model.hpp"
#include "codedshuffle/rational.hpp"

namespace codedshuffle::bounds {

struct RatePoint {
  Rational storage;
  Rational rate;

  friend bool operator==(const RatePoint& a, const RatePoint& b) {
    return a.storage == b.storage && a.rate == b.rate;
  }
};

// Piecewise-linear lower convex envelope through its breakpoints. Construction
// verifies storage strictly increasing, rates non-increasing, and slopes
// non-decreasing.
class Envelope {
 public:
  explicit Envelope(std::vector<RatePoint> breakpoints);

  // Lower convex envelope of an arbitrary point set (duplicate storages keep
  // the smaller rate; points above the hull are dropped).
  static Envelope lower_hull(std::vector<RatePoint> points);

  const std::vector<RatePoint>& breakpoints() const { return points_; }
  Rational min_storage() const { return points_.front().storage; }
  Rational max_storage() const { return points_.back().storage; }
  Rational eval(const Rational& storage) const;

 private:
  std::vector<RatePoint> points_;
};

// Achievable pairs (S=(1+i(K-1)/K)N/K, R=N(K-i)/(K(i+1))) for i in [0:K].
Envelope upper_envelope(int workers, int points);

// Converse pairs (S=mN/K, R=N(K-m)/(Km)) for m in [1:K].
Envelope lower_envelope(int workers, int points);

// Upper envelope with the aligned achievability points (mN/K, N(K-m)/(Km))
// for m in {1, K-2, K-1} added as breakpoints.
Envelope aligned_upper_envelope(int workers, int points);

// The j-th linear converse bound, j in [1:K-1]:
//   R >= N(K-j)/(Kj) - K(S - jN/K)/(j(j+1)).
// Their clamped maximum over j equals the lower envelope.
Rational lower_bound_family(int workers, int points, const Rational& storage, int j);

// upper(S)/lower(S); infinite at S = N where the lower bound is zero
// (reported as a sentinel, not an exception, so grid sweeps don't abort).
struct GapRatio {
  bool finite = true;
  Rational value;  // meaningful only when finite
};
GapRatio gap_ratio(int workers, int points, const Rational& storage, bool aligned);

// Memory sharing: (alpha*S1 + (1-alpha)*S2, alpha*R1 + (1-alpha)*R2).
RatePoint memory_share(const RatePoint& p1, const RatePoint& p2, const Rational& alpha);

// x[l] = total size (in points) of sub-points stored in the excess storage of
// exactly l workers, l in [0:K-1].
struct ExcessAllocation {
  std::vector<Rational> x;
};

// Converse objective sum_l x_l/(l+1) - N/K for a feasible allocation; throws
// InfeasibleAllocation when x violates its constraints.
Rational check_allocation(const ExcessAllocation& allocation, int workers, int points,
                          const Rational& storage);

// Maps an actual placement to its allocation vector by counting, per byte
// slot of every point, how many workers hold it as excess.
ExcessAllocation allocation_from_storages(const std::vector<WorkerStorage>& storages,
                                          const Assignment& assign, int dim);

}  // namespace codedshuffle::bounds
