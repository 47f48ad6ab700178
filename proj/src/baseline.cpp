#include "codedshuffle/baseline.hpp"

#include <algorithm>
#include <numeric>

namespace codedshuffle::baseline {

namespace {

std::vector<int> all_workers(int k) {
  std::vector<int> out(static_cast<std::size_t>(k));
  std::iota(out.begin(), out.end(), 1);
  return out;
}

bool all_zero(const Bytes& b) {
  return std::all_of(b.begin(), b.end(), [](std::uint8_t v) { return v == 0; });
}

void check_matching(const BaselineConfig& config, const Assignment& assign) {
  if (assign.workers() != config.workers || assign.points() != config.points) {
    throw DimensionMismatch("assignment does not match the configured K, N");
  }
}

}  // namespace

void BaselineConfig::validate() const {
  if (workers < 2) throw InvalidConfig("baseline scheme needs at least 2 workers");
  if (points < workers || points % workers != 0) {
    throw InvalidConfig("points must be a positive multiple of workers");
  }
  if (storage_index < 0 || storage_index > workers) {
    throw InvalidConfig("storage index must lie in [0:" + std::to_string(workers) + "]");
  }
  if (dim < 1) throw InvalidConfig("dim must be at least 1 byte");
  if (storage_index > 0 && storage_index < workers) {
    auto frags = static_cast<int>(binomial(workers, storage_index));
    if (dim % frags != 0) {
      throw DivisibilityError("dim " + std::to_string(dim) + " not divisible by C(K,i) = " +
                              std::to_string(frags));
    }
  }
}

int BaselineConfig::fragments_per_point() const {
  if (storage_index == 0 || storage_index == workers) return 1;
  return static_cast<int>(binomial(workers, storage_index));
}

std::size_t BaselineConfig::fragment_bytes() const {
  return static_cast<std::size_t>(dim) / static_cast<std::size_t>(fragments_per_point());
}

Rational BaselineConfig::storage_points() const {
  // (1 + i(K-1)/K) * N/K
  return (Rational(1) + Rational(static_cast<std::int64_t>(storage_index) * (workers - 1), workers)) *
         Rational(points, workers);
}

Rational BaselineConfig::formula_rate() const {
  return Rational(static_cast<std::int64_t>(points) * (workers - storage_index),
                  static_cast<std::int64_t>(workers) * (storage_index + 1));
}

std::vector<WorkerSet> fragment_labels(const BaselineConfig& config) {
  if (config.storage_index == 0) return {WorkerSet()};
  return subsets_of(all_workers(config.workers), config.storage_index);
}

std::vector<WorkerStorage> place(const BaselineConfig& config, const DataSet& data,
                                 const Assignment& assign) {
  config.validate();
  check_matching(config, assign);
  if (data.size() != config.points || data.dim() != config.dim) {
    throw DimensionMismatch("data-set does not match the configured N, d");
  }

  std::vector<WorkerSet> labels = fragment_labels(config);
  std::size_t frag_len = config.fragment_bytes();
  std::vector<WorkerStorage> storages(static_cast<std::size_t>(config.workers));
  for (int k = 1; k <= config.workers; ++k) {
    WorkerStorage& z = storages[static_cast<std::size_t>(k - 1)];
    z.worker = k;
    for (int p : assign.batch(k)) z.assigned[p] = data.point(p);
    if (config.storage_index == 0) continue;
    for (int p = 1; p <= config.points; ++p) {
      if (assign.owner(p) == k) continue;
      for (std::size_t slot = 0; slot < labels.size(); ++slot) {
        if (!labels[slot].contains(k)) continue;
        auto offset = static_cast<std::uint32_t>(slot * frag_len);
        z.excess[{p, labels[slot]}] = Fragment{offset, data.slice(p, offset, frag_len)};
      }
    }
  }
  return storages;
}

BroadcastMessage deliver(const BaselineConfig& config, const DataSet& data,
                         const Assignment& prev, const Assignment& next,
                         const std::vector<WorkerStorage>& storages) {
  config.validate();
  check_matching(config, prev);
  check_matching(config, next);
  int k_count = config.workers;
  int per_batch = config.points / k_count;

  BroadcastMessage message;
  if (config.storage_index == k_count) return message;  // full replication, nothing to send

  if (config.storage_index == 0) {
    // No excess storage: send every batch raw.
    for (int k = 1; k <= k_count; ++k) {
      const std::vector<int>& batch = next.batch(k);
      for (int r = 1; r <= per_batch; ++r) {
        SymbolMeta meta{SymbolKind::RawPoint, WorkerSet::of({k}).mask(), r, -1};
        message.symbols.push_back({meta, data.point(batch[static_cast<std::size_t>(r - 1)])});
      }
    }
    return message;
  }

  std::vector<WorkerSet> labels = fragment_labels(config);
  std::map<WorkerSet, std::size_t> slot_of;
  for (std::size_t s = 0; s < labels.size(); ++s) slot_of[labels[s]] = s;
  std::size_t frag_len = config.fragment_bytes();

  std::vector<std::vector<int>> new_points(static_cast<std::size_t>(k_count));
  for (int k = 1; k <= k_count; ++k) {
    new_points[static_cast<std::size_t>(k - 1)] = newly_assigned(prev, next, k);
  }

  for (const WorkerSet& group : subsets_of(all_workers(k_count), config.storage_index + 1)) {
    for (int r = 1; r <= per_batch; ++r) {
      Bytes payload(frag_len, 0);
      for (int k : group.members()) {
        const std::vector<int>& fresh = new_points[static_cast<std::size_t>(k - 1)];
        if (static_cast<int>(fresh.size()) < r) continue;  // zero-filled slot
        int p = fresh[static_cast<std::size_t>(r - 1)];
        WorkerSet label = group.without(k);
        auto offset = static_cast<std::uint32_t>(slot_of.at(label) * frag_len);
        // The side-information assumption: every claimed holder really has it.
        for (int holder : label.members()) {
          Bytes held = storages.at(static_cast<std::size_t>(holder - 1))
                           .fragment_bytes({p, label}, offset, frag_len);
          (void)held;
        }
        Bytes frag = data.slice(p, offset, frag_len);
        for (std::size_t i = 0; i < frag_len; ++i) payload[i] ^= frag[i];
      }
      if (config.compact_zero_symbols && all_zero(payload)) continue;
      SymbolMeta meta{SymbolKind::XorSubset, group.mask(), r, -1};
      message.symbols.push_back({meta, std::move(payload)});
    }
  }
  return message;
}

std::map<int, Bytes> decode(const BaselineConfig& config, const WorkerStorage& worker,
                            const BroadcastMessage& message, const Assignment& prev,
                            const Assignment& next) {
  config.validate();
  check_matching(config, prev);
  check_matching(config, next);
  int self = worker.worker;

  std::map<int, Bytes> out;
  std::vector<int> fresh = newly_assigned(prev, next, self);

  // Points kept across the shuffle come straight from storage.
  for (int p : next.batch(self)) {
    if (prev.owner(p) == self) {
      auto it = worker.assigned.find(p);
      if (it == worker.assigned.end()) {
        throw DecodeFailure("worker " + std::to_string(self) + " does not store its point " +
                            std::to_string(p));
      }
      out[p] = it->second;
    }
  }
  if (fresh.empty()) return out;

  if (config.storage_index == config.workers) {
    // Full replication: the single size-K label holds every point whole.
    WorkerSet everyone;
    for (int k = 1; k <= config.workers; ++k) everyone = everyone.with(k);
    for (int p : fresh) {
      out[p] = worker.fragment_bytes({p, everyone}, 0, static_cast<std::size_t>(config.dim));
    }
    return out;
  }

  if (config.storage_index == 0) {
    for (int p : fresh) {
      const std::vector<int>& batch = next.batch(self);
      auto pos = std::lower_bound(batch.begin(), batch.end(), p) - batch.begin();
      SymbolMeta meta{SymbolKind::RawPoint, WorkerSet::of({self}).mask(),
                      static_cast<std::int32_t>(pos + 1), -1};
      const CodedSymbol* symbol = message.find(meta);
      if (symbol == nullptr) {
        throw DecodeFailure("raw symbol for point " + std::to_string(p) + " missing");
      }
      out[p] = symbol->payload;
    }
    return out;
  }

  std::vector<WorkerSet> labels = fragment_labels(config);
  std::size_t frag_len = config.fragment_bytes();
  std::vector<std::vector<int>> new_points(static_cast<std::size_t>(config.workers));
  for (int k = 1; k <= config.workers; ++k) {
    new_points[static_cast<std::size_t>(k - 1)] = newly_assigned(prev, next, k);
  }

  for (int p : fresh) {
    int rank = 1 + static_cast<int>(std::lower_bound(fresh.begin(), fresh.end(), p) - fresh.begin());
    Bytes block(static_cast<std::size_t>(config.dim));
    for (std::size_t slot = 0; slot < labels.size(); ++slot) {
      const WorkerSet& label = labels[slot];
      std::size_t offset = slot * frag_len;
      Bytes frag;
      if (label.contains(self)) {
        frag = worker.fragment_bytes({p, label}, offset, frag_len);
      } else {
        // Peel the fragment out of the order-(i+1) symbol for M = label + self.
        WorkerSet group = label.with(self);
        SymbolMeta meta{SymbolKind::XorSubset, group.mask(), rank, -1};
        const CodedSymbol* symbol = message.find(meta);
        frag.assign(frag_len, 0);  // compacted symbols are all-zero
        if (symbol != nullptr) frag = symbol->payload;
        for (int other : label.members()) {
          const std::vector<int>& other_fresh = new_points[static_cast<std::size_t>(other - 1)];
          if (static_cast<int>(other_fresh.size()) < rank) continue;
          int q = other_fresh[static_cast<std::size_t>(rank - 1)];
          WorkerSet other_label = group.without(other);
          std::size_t other_offset = 0;
          for (std::size_t s = 0; s < labels.size(); ++s) {
            if (labels[s] == other_label) other_offset = s * frag_len;
          }
          Bytes held = worker.fragment_bytes({q, other_label}, other_offset, frag_len);
          for (std::size_t i = 0; i < frag_len; ++i) frag[i] ^= held[i];
        }
      }
      std::copy(frag.begin(), frag.end(), block.begin() + static_cast<std::ptrdiff_t>(offset));
    }
    out[p] = std::move(block);
  }
  return out;
}

WorkerStorage update(const BaselineConfig& config, const WorkerStorage& worker,
                     const std::map<int, Bytes>& decoded, const Assignment& prev,
                     const Assignment& next) {
  config.validate();
  int self = worker.worker;
  std::vector<WorkerSet> labels = fragment_labels(config);
  std::size_t frag_len = config.fragment_bytes();

  WorkerStorage fresh;
  fresh.worker = self;
  for (int p : next.batch(self)) {
    fresh.assigned[p] = decoded.at(p);
  }
  if (config.storage_index == 0) return fresh;

  for (int p = 1; p <= config.points; ++p) {
    if (next.owner(p) == self) continue;
    if (prev.owner(p) == self) {
      // Released point: keep only the fragments labeled with our own index.
      auto it = worker.assigned.find(p);
      if (it == worker.assigned.end()) {
        throw StructureViolation("worker " + std::to_string(self) +
                                 " releasing a point it never stored");
      }
      for (std::size_t slot = 0; slot < labels.size(); ++slot) {
        if (!labels[slot].contains(self)) continue;
        auto offset = static_cast<std::uint32_t>(slot * frag_len);
        fresh.excess[{p, labels[slot]}] =
            Fragment{offset, Bytes(it->second.begin() + offset,
                                   it->second.begin() + offset + static_cast<std::uint32_t>(frag_len))};
      }
    } else {
      // Untouched excess carries over unchanged.
      for (std::size_t slot = 0; slot < labels.size(); ++slot) {
        if (!labels[slot].contains(self)) continue;
        SubPointLabel key{p, labels[slot]};
        auto frag = worker.excess.find(key);
        if (frag == worker.excess.end()) {
          throw StructureViolation("worker " + std::to_string(self) + " lost fragment " +
                                   key.to_string());
        }
        fresh.excess[key] = frag->second;
      }
    }
  }
  return fresh;
}

}  // namespace codedshuffle::baseline
