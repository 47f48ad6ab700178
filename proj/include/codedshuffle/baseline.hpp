#pragma once

// Structural-invariant placement with order-(i+1) XOR delivery and the
// four-case storage update. Achieves the storage-rate pairs
//     S = (1 + i(K-1)/K) N/K,   R = N(K-i) / (K(i+1)),   i in [0:K].
//
// Every point is split into C(K,i) fragments along the byte dimension,
// labeled by the size-i worker subsets in lexicographic order. Worker k
// stores its batch whole plus, for every other point, the fragments whose
// label contains k. Labels are static across epochs; the update keeps the
// storage bytewise identical to a fresh placement on the new assignment.

#include <map>
#include <vector>

#include "codedshuffle/model.hpp"
#include "codedshuffle/rational.hpp"

namespace codedshuffle::baseline {

struct BaselineConfig {
  int workers = 0;        // K
  int points = 0;         // N, divisible by K
  int dim = 0;            // d bytes, divisible by C(K,i) for 0 < i < K
  int storage_index = 0;  // i in [0:K]
  // Drop coded symbols that are entirely zero (possible only on shuffles with
  // batch overlap). Off by default so rate accounting stays worst-case.
  bool compact_zero_symbols = false;

  void validate() const;
  int fragments_per_point() const;
  std::size_t fragment_bytes() const;
  Rational storage_points() const;  // S = (1 + i(K-1)/K) N/K
  Rational formula_rate() const;    // R = N(K-i)/(K(i+1))
};

// Fragment labels in byte-slot order (lexicographic size-i subsets of [1:K]).
std::vector<WorkerSet> fragment_labels(const BaselineConfig& config);

std::vector<WorkerStorage> place(const BaselineConfig& config, const DataSet& data,
                                 const Assignment& assign);

// One coded symbol per (subset M of size i+1, rank r in [1:N/K]): the XOR
// over k in M of the fragment (p, M\k) where p is worker k's rank-r newly
// needed point, zero-filled when k has fewer than r new points. i = 0 sends
// the K batches raw; i = K sends nothing.
BroadcastMessage deliver(const BaselineConfig& config, const DataSet& data,
                         const Assignment& prev, const Assignment& next,
                         const std::vector<WorkerStorage>& storages);

// Reconstructs every point of the worker's new batch, bit-exact.
std::map<int, Bytes> decode(const BaselineConfig& config, const WorkerStorage& worker,
                            const BroadcastMessage& message, const Assignment& prev,
                            const Assignment& next);

// Four-case update: kept points stay full, new points become full, released
// points keep the fragments labeled with the worker's index, untouched excess
// carries over.
WorkerStorage update(const BaselineConfig& config, const WorkerStorage& worker,
                     const std::map<int, Bytes>& decoded, const Assignment& prev,
                     const Assignment& next);

}  // namespace codedshuffle::baseline
