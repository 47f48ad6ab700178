#pragma once

// Domain types shared by both shuffling schemes: the master's data-set,
// batch assignments and their inverse, labeled sub-point fragments, worker
// storage, shuffling matrices, and exact-size broadcast messages.
//
// Point and worker indices are 1-based to match the usual notation;
// serialized forms (trace files) are 0-based.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "codedshuffle/errors.hpp"
#include "codedshuffle/rational.hpp"

namespace codedshuffle {

using Bytes = std::vector<std::uint8_t>;

// splitmix64: the documented PRNG behind seeded dataset generation and
// shuffle sampling, so traces are reproducible across implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // next() in [0, bound)
  std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

 private:
  std::uint64_t state_;
};

// Stream seed for (user seed, trial, epoch); parallel execution order never
// changes results because every epoch draws from its own stream.
std::uint64_t mix_stream_seed(std::uint64_t user_seed, std::uint64_t trial, std::uint64_t epoch);

std::uint64_t binomial(int n, int k);

// The master's ground truth: N points of exactly d bytes each.
class DataSet {
 public:
  explicit DataSet(std::vector<Bytes> points);
  static DataSet generate(int points, int dim, std::uint64_t seed);
  static DataSet from_file(const std::string& path, int points, int dim);

  int size() const { return static_cast<int>(points_.size()); }
  int dim() const { return static_cast<int>(points_.front().size()); }
  const Bytes& point(int index) const { return points_.at(static_cast<std::size_t>(index) - 1); }
  Bytes slice(int index, std::size_t offset, std::size_t len) const;

 private:
  std::vector<Bytes> points_;
};

// Subset of worker indices, stored as a bitmask (worker k <-> bit k-1).
class WorkerSet {
 public:
  constexpr WorkerSet() = default;
  constexpr explicit WorkerSet(std::uint32_t mask) : mask_(mask) {}
  static WorkerSet of(std::initializer_list<int> workers) {
    WorkerSet s;
    for (int w : workers) s = s.with(w);
    return s;
  }

  std::uint32_t mask() const { return mask_; }
  bool contains(int worker) const { return (mask_ >> (worker - 1)) & 1u; }
  WorkerSet with(int worker) const { return WorkerSet(mask_ | (1u << (worker - 1))); }
  WorkerSet without(int worker) const { return WorkerSet(mask_ & ~(1u << (worker - 1))); }
  int size() const { return __builtin_popcount(mask_); }
  bool empty() const { return mask_ == 0; }
  std::vector<int> members() const;
  std::string to_string() const;

  friend bool operator==(WorkerSet a, WorkerSet b) { return a.mask_ == b.mask_; }
  friend bool operator!=(WorkerSet a, WorkerSet b) { return a.mask_ != b.mask_; }
  friend bool operator<(WorkerSet a, WorkerSet b) { return a.mask_ < b.mask_; }

 private:
  std::uint32_t mask_ = 0;
};

// All size-k subsets of `ground` (ascending member lists) in lexicographic
// order; this ordering defines the byte layout of sub-point fragments.
std::vector<WorkerSet> subsets_of(const std::vector<int>& ground, int size);

// One epoch's permutation of batches: worker k -> disjoint point set A(k),
// plus the inverse map delta (point -> owning worker).
class Assignment {
 public:
  Assignment() = default;

  int workers() const { return static_cast<int>(batches_.size()); }
  int points() const { return static_cast<int>(owner_.size()); }
  int batch_size() const { return points() / workers(); }
  const std::vector<int>& batch(int worker) const {
    return batches_.at(static_cast<std::size_t>(worker) - 1);
  }
  const std::vector<std::vector<int>>& batches() const { return batches_; }
  int owner(int point) const { return owner_.at(static_cast<std::size_t>(point) - 1); }
  bool assigned_to(int point, int worker) const { return owner(point) == worker; }

  friend bool operator==(const Assignment& a, const Assignment& b) {
    return a.batches_ == b.batches_;
  }
  friend bool operator!=(const Assignment& a, const Assignment& b) { return !(a == b); }

  friend Assignment make_assignment(std::vector<std::vector<int>> batches);

 private:
  std::vector<std::vector<int>> batches_;
  std::vector<int> owner_;
};

// Validates a batch list (disjoint, equal sizes N/K, union [1:N]) and builds
// the inverse; throws InvalidPartition otherwise.
Assignment make_assignment(std::vector<std::vector<int>> batches);

// Worker k gets points (k-1)*N/K+1 .. k*N/K.
Assignment identity_assignment(int workers, int points);

// Points of next.batch(k) that worker k did not hold at the previous epoch,
// ascending. Rank r in delivery refers to position r of this list.
std::vector<int> newly_assigned(const Assignment& prev, const Assignment& next, int worker);

// K x K counts S(i,j) = |A_prev(i) n A_next(j)|; every row and column sums
// to N/K, and off-diagonal flow is conserved.
class ShufflingMatrix {
 public:
  ShufflingMatrix(int workers, int batch_size, std::vector<int> entries);

  int workers() const { return workers_; }
  int batch_size() const { return batch_size_; }
  int at(int i, int j) const {
    return entries_[static_cast<std::size_t>(i - 1) * workers_ + (j - 1)];
  }
  int row_sum(int i) const;
  int col_sum(int j) const;
  bool is_derangement() const;  // zero diagonal

 private:
  int workers_;
  int batch_size_;
  std::vector<int> entries_;
};

ShufflingMatrix shuffling_matrix(const Assignment& prev, const Assignment& next);

// A batch-derangement of prev: no worker keeps any of its old batch. Without
// a seed this is the canonical cyclic shift (worker k takes the old batch of
// worker k+1, matching the usual cyclic shuffle); with a seed, a uniformly
// sampled batch-derangement.
Assignment worst_case_shuffle(const Assignment& prev, std::optional<std::uint64_t> seed);

// Uniformly random point-level partition into K ordered batches.
Assignment random_shuffle(int workers, int points, SplitMix64& rng);

// Names one stored fragment: point index plus the worker subset in its label.
struct SubPointLabel {
  int point = 0;
  WorkerSet subset;

  friend bool operator==(const SubPointLabel& a, const SubPointLabel& b) {
    return a.point == b.point && a.subset == b.subset;
  }
  friend bool operator<(const SubPointLabel& a, const SubPointLabel& b) {
    if (a.point != b.point) return a.point < b.point;
    return a.subset < b.subset;
  }
  std::string to_string() const;
};

struct Fragment {
  std::uint32_t offset = 0;  // byte offset within the point
  Bytes bytes;

  friend bool operator==(const Fragment& a, const Fragment& b) {
    return a.offset == b.offset && a.bytes == b.bytes;
  }
};

// Per-point byte layout for the aligned schemes: labels[point-1][slot] is the
// worker subset owning byte-slot `slot`. The map starts lexicographic and
// evolves with the relabeling update; master and workers maintain it in
// lockstep, so it travels with the storage as protocol bookkeeping.
using SubpointLayout = std::vector<std::vector<WorkerSet>>;

// One worker's storage: the fully stored assigned batch plus labeled excess
// fragments.
struct WorkerStorage {
  int worker = 0;
  std::map<int, Bytes> assigned;              // point -> full block
  std::map<SubPointLabel, Fragment> excess;   // every label subset contains `worker`
  SubpointLayout layout;                      // aligned schemes only; empty for baseline

  std::size_t stored_bytes() const;
  bool has_fragment(const SubPointLabel& label) const { return excess.count(label) > 0; }

  // Bytes of a fragment this worker can produce: sliced from a fully stored
  // point, or read from excess. Throws StructureViolation if absent.
  Bytes fragment_bytes(const SubPointLabel& label, std::size_t offset, std::size_t len) const;
};

enum class SymbolKind : std::uint8_t { RawPoint, XorSubset, MdsParity, AlignedXor };

struct SymbolMeta {
  SymbolKind kind = SymbolKind::XorSubset;
  std::uint32_t subset_mask = 0;  // RawPoint: {worker}; XorSubset: the set M
  std::int32_t rank = 0;          // 1-based rank within the kind's ordering
  std::int32_t row = -1;          // MdsParity: parity row index

  friend bool operator<(const SymbolMeta& a, const SymbolMeta& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.subset_mask != b.subset_mask) return a.subset_mask < b.subset_mask;
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.row < b.row;
  }
  friend bool operator==(const SymbolMeta& a, const SymbolMeta& b) {
    return a.kind == b.kind && a.subset_mask == b.subset_mask && a.rank == b.rank && a.row == b.row;
  }
};

struct CodedSymbol {
  SymbolMeta meta;
  Bytes payload;
};

// The master's coded broadcast for one shuffle.
struct BroadcastMessage {
  std::vector<CodedSymbol> symbols;

  std::size_t total_bytes() const;
  // Exact size in units of data points: total bytes / d.
  Rational size_in_points(int dim) const;
  const CodedSymbol* find(const SymbolMeta& meta) const;
};

}  // namespace codedshuffle
