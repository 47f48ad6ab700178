#pragma once

// Aligned coded shuffling at storage S = m*N/K for m in {1, K-2, K-1},
// matching the lower envelope at those points:
//
//   m = 1    rate (K-1)N/K      K-1 MDS combinations of the old batches
//   m = K-1  rate N/(K(K-1))    one rank-aligned XOR of all need-lists
//   m = K-2  rate 2N/(K(K-2))   interference groups aligned into N coded
//                               sub-points, sent as (K-1)N/K MDS parities
//
// Placement labels the C(K-1,m-1) fragments of point p by the size-(m-1)
// subsets of [1:K] \ owner(p). The storage update keeps the structure by
// relabeling: the releasing owner keeps exactly the fragments previously in
// the new owner's excess, substituting its own index for the new owner's in
// the label. Byte slots never move, so the label->slot map (SubpointLayout)
// evolves with the chain; placement and delivery take it as shared protocol
// state carried inside WorkerStorage.
//
// Only batch-derangement shuffles are accepted (UnsupportedShuffle
// otherwise); the worst case is all this scheme is defined for.

#include <map>
#include <vector>

#include "codedshuffle/model.hpp"
#include "codedshuffle/rational.hpp"

namespace codedshuffle::aligned {

struct AlignedConfig {
  int workers = 0;     // K
  int points = 0;      // N, divisible by K
  int dim = 0;         // d bytes, divisible by C(K-1,m-1) for m > 1
  int multiplier = 0;  // m in {1, K-2, K-1}

  void validate() const;
  int fragments_per_point() const;  // C(K-1, m-1)
  std::size_t fragment_bytes() const;
  Rational storage_points() const;  // S = m*N/K
  Rational formula_rate() const;
};

// Lexicographic label->slot map for a fresh placement on `assign`.
SubpointLayout canonical_layout(const AlignedConfig& config, const Assignment& assign);

// Applies the relabeling rule for the shuffle prev -> next: in every label
// containing the point's new owner, the new owner's index is replaced by the
// old owner's. Slot positions are preserved.
SubpointLayout relabel_layout(const SubpointLayout& layout, const Assignment& prev,
                              const Assignment& next);

// Throws StructureViolation unless every point's labels are exactly the
// size-(m-1) subsets of [1:K] \ owner, one per slot.
void validate_layout(const AlignedConfig& config, const Assignment& assign,
                     const SubpointLayout& layout);

std::vector<WorkerStorage> place_aligned(const AlignedConfig& config, const DataSet& data,
                                         const Assignment& assign);
std::vector<WorkerStorage> place_aligned(const AlignedConfig& config, const DataSet& data,
                                         const Assignment& assign, const SubpointLayout& layout);

// Sub-points needed by `beneficiary` that are interference to `observer`:
// neither stored nor wanted there, and held by every other worker (m = K-2).
struct InterferenceGroup {
  int observer = 0;     // k
  int beneficiary = 0;  // j != k
  std::vector<SubPointLabel> fragments;  // sorted by source point index
};

// All K(K-1) groups in (observer, beneficiary) order. Requires a
// batch-derangement; |I(j;k)| = N/K - S(k,j).
std::vector<InterferenceGroup> interference_groups(const AlignedConfig& config,
                                                   const Assignment& prev,
                                                   const Assignment& next);

// One pre-MDS aligned coded sub-point C^(holder)(observer)[rank]: the XOR of
// the rank-matched fragments of I^(holder)(j;observer) over all other j.
struct AlignedSymbolPlan {
  int observer = 0;
  int holder = 0;
  int rank = 0;  // 1-based within S(observer, holder)
  std::vector<SubPointLabel> terms;
};

// The N aligned symbols in canonical (observer, holder, rank) order; the
// MDS data-symbol indexing of the m = K-2 delivery.
std::vector<AlignedSymbolPlan> aligned_plan(const AlignedConfig& config, const Assignment& prev,
                                            const Assignment& next);

// Payloads of the aligned symbols, evaluated against master data.
std::vector<Bytes> aligned_symbol_blocks(const AlignedConfig& config, const DataSet& data,
                                         const Assignment& prev, const Assignment& next,
                                         const SubpointLayout& layout);

BroadcastMessage deliver_aligned(const AlignedConfig& config, const DataSet& data,
                                 const Assignment& prev, const Assignment& next,
                                 const std::vector<WorkerStorage>& storages);

std::map<int, Bytes> decode_aligned(const AlignedConfig& config, const WorkerStorage& worker,
                                    const BroadcastMessage& message, const Assignment& prev,
                                    const Assignment& next);

WorkerStorage update_aligned(const AlignedConfig& config, const WorkerStorage& worker,
                             const std::map<int, Bytes>& decoded, const Assignment& prev,
                             const Assignment& next);

}  // namespace codedshuffle::aligned
