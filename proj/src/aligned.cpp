#include "codedshuffle/aligned.hpp"

#include <algorithm>
#include <numeric>

#include "codedshuffle/gf256.hpp"

namespace codedshuffle::aligned {

namespace {

std::vector<int> workers_except(int k_count, std::initializer_list<int> excluded) {
  std::vector<int> out;
  for (int w = 1; w <= k_count; ++w) {
    if (std::find(excluded.begin(), excluded.end(), w) == excluded.end()) out.push_back(w);
  }
  return out;
}

WorkerSet full_set_except(int k_count, std::initializer_list<int> excluded) {
  WorkerSet s;
  for (int w : workers_except(k_count, excluded)) s = s.with(w);
  return s;
}

void check_matching(const AlignedConfig& config, const Assignment& assign) {
  if (assign.workers() != config.workers || assign.points() != config.points) {
    throw DimensionMismatch("assignment does not match the configured K, N");
  }
}

void require_derangement(const Assignment& prev, const Assignment& next) {
  if (!shuffling_matrix(prev, next).is_derangement()) {
    throw UnsupportedShuffle("aligned schemes accept only batch-derangement shuffles");
  }
}

// Shared layout carried by the storages; all workers must agree on it.
const SubpointLayout& layout_from(const std::vector<WorkerStorage>& storages) {
  const SubpointLayout& layout = storages.front().layout;
  for (const WorkerStorage& z : storages) {
    if (z.layout != layout) {
      throw StructureViolation("workers disagree on the sub-point labeling");
    }
  }
  return layout;
}

std::size_t slot_of(const SubpointLayout& layout, const SubPointLabel& label) {
  const std::vector<WorkerSet>& slots = layout.at(static_cast<std::size_t>(label.point) - 1);
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (slots[s] == label.subset) return s;
  }
  throw StructureViolation("label " + label.to_string() + " not present in the layout");
}

// Concatenation of a worker's previous batch, ascending point order; the
// data symbols of the m = 1 batch code.
Bytes batch_block(const DataSet& data, const Assignment& assign, int worker) {
  Bytes block;
  block.reserve(static_cast<std::size_t>(assign.batch_size()) * static_cast<std::size_t>(data.dim()));
  for (int p : assign.batch(worker)) {
    const Bytes& point = data.point(p);
    block.insert(block.end(), point.begin(), point.end());
  }
  return block;
}

Bytes batch_block_from_storage(const WorkerStorage& worker, const Assignment& prev) {
  Bytes block;
  for (int p : prev.batch(worker.worker)) {
    auto it = worker.assigned.find(p);
    if (it == worker.assigned.end()) {
      throw DecodeFailure("worker " + std::to_string(worker.worker) +
                          " does not store its point " + std::to_string(p));
    }
    block.insert(block.end(), it->second.begin(), it->second.end());
  }
  return block;
}

// For m = K-1: worker j's missing fragments, one per new point, sorted by
// source point index. Fragment of point p is labeled [1:K] \ {old owner, j}.
std::vector<std::vector<SubPointLabel>> need_lists(const AlignedConfig& config,
                                                   const Assignment& prev,
                                                   const Assignment& next) {
  std::vector<std::vector<SubPointLabel>> lists(static_cast<std::size_t>(config.workers));
  for (int j = 1; j <= config.workers; ++j) {
    for (int p : next.batch(j)) {
      lists[static_cast<std::size_t>(j - 1)].push_back(
          {p, full_set_except(config.workers, {prev.owner(p), j})});
    }
  }
  return lists;
}

}  // namespace

void AlignedConfig::validate() const {
  if (workers < 2) throw InvalidConfig("aligned scheme needs at least 2 workers");
  if (points < workers || points % workers != 0) {
    throw InvalidConfig("points must be a positive multiple of workers");
  }
  if (dim < 1) throw InvalidConfig("dim must be at least 1 byte");
  bool known = multiplier == 1 || multiplier == workers - 2 || multiplier == workers - 1;
  if (multiplier < 1 || multiplier > workers - 1 || !known) {
    throw InvalidConfig("storage multiplier must be one of {1, K-2, K-1} within [1:K-1]");
  }
  if (multiplier > 1) {
    auto frags = static_cast<int>(binomial(workers - 1, multiplier - 1));
    if (dim % frags != 0) {
      throw DivisibilityError("dim " + std::to_string(dim) + " not divisible by C(K-1,m-1) = " +
                              std::to_string(frags));
    }
  }
}

int AlignedConfig::fragments_per_point() const {
  return static_cast<int>(binomial(workers - 1, multiplier - 1));
}

std::size_t AlignedConfig::fragment_bytes() const {
  return static_cast<std::size_t>(dim) / static_cast<std::size_t>(fragments_per_point());
}

Rational AlignedConfig::storage_points() const {
  return Rational(static_cast<std::int64_t>(multiplier) * points, workers);
}

Rational AlignedConfig::formula_rate() const {
  if (multiplier == 1) {
    return Rational(static_cast<std::int64_t>(workers - 1) * points, workers);
  }
  if (multiplier == workers - 1) {
    return Rational(points, static_cast<std::int64_t>(workers) * (workers - 1));
  }
  return Rational(2 * static_cast<std::int64_t>(points),
                  static_cast<std::int64_t>(workers) * (workers - 2));
}

SubpointLayout canonical_layout(const AlignedConfig& config, const Assignment& assign) {
  SubpointLayout layout(static_cast<std::size_t>(config.points));
  for (int p = 1; p <= config.points; ++p) {
    layout[static_cast<std::size_t>(p - 1)] =
        subsets_of(workers_except(config.workers, {assign.owner(p)}), config.multiplier - 1);
  }
  return layout;
}

SubpointLayout relabel_layout(const SubpointLayout& layout, const Assignment& prev,
                              const Assignment& next) {
  SubpointLayout out = layout;
  for (int p = 1; p <= prev.points(); ++p) {
    int old_owner = prev.owner(p);
    int new_owner = next.owner(p);
    if (old_owner == new_owner) continue;
    for (WorkerSet& label : out[static_cast<std::size_t>(p - 1)]) {
      if (label.contains(new_owner)) label = label.without(new_owner).with(old_owner);
    }
  }
  return out;
}

void validate_layout(const AlignedConfig& config, const Assignment& assign,
                     const SubpointLayout& layout) {
  if (layout.size() != static_cast<std::size_t>(config.points)) {
    throw StructureViolation("layout covers the wrong number of points");
  }
  for (int p = 1; p <= config.points; ++p) {
    std::vector<WorkerSet> expected =
        subsets_of(workers_except(config.workers, {assign.owner(p)}), config.multiplier - 1);
    std::vector<WorkerSet> actual = layout[static_cast<std::size_t>(p - 1)];
    std::sort(expected.begin(), expected.end());
    std::sort(actual.begin(), actual.end());
    if (expected != actual) {
      throw StructureViolation("point " + std::to_string(p) +
                               " is not labeled by the subsets excluding its owner");
    }
  }
}

std::vector<WorkerStorage> place_aligned(const AlignedConfig& config, const DataSet& data,
                                         const Assignment& assign) {
  return place_aligned(config, data, assign, canonical_layout(config, assign));
}

std::vector<WorkerStorage> place_aligned(const AlignedConfig& config, const DataSet& data,
                                         const Assignment& assign, const SubpointLayout& layout) {
  config.validate();
  check_matching(config, assign);
  if (data.size() != config.points || data.dim() != config.dim) {
    throw DimensionMismatch("data-set does not match the configured N, d");
  }
  validate_layout(config, assign, layout);

  std::size_t frag_len = config.fragment_bytes();
  std::vector<WorkerStorage> storages(static_cast<std::size_t>(config.workers));
  for (int k = 1; k <= config.workers; ++k) {
    WorkerStorage& z = storages[static_cast<std::size_t>(k - 1)];
    z.worker = k;
    z.layout = layout;
    for (int p : assign.batch(k)) z.assigned[p] = data.point(p);
    for (int p = 1; p <= config.points; ++p) {
      if (assign.owner(p) == k) continue;
      const std::vector<WorkerSet>& slots = layout[static_cast<std::size_t>(p - 1)];
      for (std::size_t s = 0; s < slots.size(); ++s) {
        if (!slots[s].contains(k)) continue;
        auto offset = static_cast<std::uint32_t>(s * frag_len);
        z.excess[{p, slots[s]}] = Fragment{offset, data.slice(p, offset, frag_len)};
      }
    }
  }
  return storages;
}

std::vector<InterferenceGroup> interference_groups(const AlignedConfig& config,
                                                   const Assignment& prev,
                                                   const Assignment& next) {
  config.validate();
  require_derangement(prev, next);
  std::vector<InterferenceGroup> groups;
  for (int k = 1; k <= config.workers; ++k) {
    for (int j = 1; j <= config.workers; ++j) {
      if (j == k) continue;
      InterferenceGroup g;
      g.observer = k;
      g.beneficiary = j;
      for (int p : next.batch(j)) {
        int source = prev.owner(p);
        if (source == k) continue;  // available at the observer, not interference
        g.fragments.push_back({p, full_set_except(config.workers, {source, j, k})});
      }
      groups.push_back(std::move(g));
    }
  }
  return groups;
}

std::vector<AlignedSymbolPlan> aligned_plan(const AlignedConfig& config, const Assignment& prev,
                                            const Assignment& next) {
  ShufflingMatrix shuffle = shuffling_matrix(prev, next);
  std::vector<InterferenceGroup> groups = interference_groups(config, prev, next);
  auto group_of = [&](int observer, int beneficiary) -> const InterferenceGroup& {
    return groups[static_cast<std::size_t>(observer - 1) * (config.workers - 1) +
                  static_cast<std::size_t>(beneficiary - (beneficiary > observer ? 2 : 1))];
  };

  std::vector<AlignedSymbolPlan> plan;
  plan.reserve(static_cast<std::size_t>(config.points));
  for (int k = 1; k <= config.workers; ++k) {
    // I(j;k) is partitioned into runs I^(i)(j;k) of size S(k,i), ascending i.
    std::map<int, std::map<int, int>> run_start;  // beneficiary j -> holder i -> offset
    for (int j = 1; j <= config.workers; ++j) {
      if (j == k) continue;
      int offset = 0;
      for (int i = 1; i <= config.workers; ++i) {
        if (i == j || i == k) continue;
        run_start[j][i] = offset;
        offset += shuffle.at(k, i);
      }
      if (offset != static_cast<int>(group_of(k, j).fragments.size())) {
        throw StructureViolation("interference accounting off for observer " + std::to_string(k));
      }
    }
    for (int i = 1; i <= config.workers; ++i) {
      if (i == k) continue;
      for (int r = 1; r <= shuffle.at(k, i); ++r) {
        AlignedSymbolPlan symbol;
        symbol.observer = k;
        symbol.holder = i;
        symbol.rank = r;
        for (int j = 1; j <= config.workers; ++j) {
          if (j == k || j == i) continue;
          const InterferenceGroup& g = group_of(k, j);
          symbol.terms.push_back(
              g.fragments[static_cast<std::size_t>(run_start[j][i] + r - 1)]);
        }
        plan.push_back(std::move(symbol));
      }
    }
  }
  if (plan.size() != static_cast<std::size_t>(config.points)) {
    throw StructureViolation("aligned plan must contain exactly N coded sub-points");
  }
  return plan;
}

std::vector<Bytes> aligned_symbol_blocks(const AlignedConfig& config, const DataSet& data,
                                         const Assignment& prev, const Assignment& next,
                                         const SubpointLayout& layout) {
  std::size_t frag_len = config.fragment_bytes();
  std::vector<Bytes> blocks;
  for (const AlignedSymbolPlan& symbol : aligned_plan(config, prev, next)) {
    Bytes block(frag_len, 0);
    for (const SubPointLabel& term : symbol.terms) {
      Bytes frag = data.slice(term.point, slot_of(layout, term) * frag_len, frag_len);
      for (std::size_t i = 0; i < frag_len; ++i) block[i] ^= frag[i];
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

BroadcastMessage deliver_aligned(const AlignedConfig& config, const DataSet& data,
                                 const Assignment& prev, const Assignment& next,
                                 const std::vector<WorkerStorage>& storages) {
  config.validate();
  check_matching(config, prev);
  check_matching(config, next);
  require_derangement(prev, next);

  BroadcastMessage message;
  if (config.multiplier == 1) {
    // K-1 independent combinations of the K old batches.
    for (int k = 1; k <= config.workers; ++k) {
      for (int p : prev.batch(k)) {
        if (storages.at(static_cast<std::size_t>(k - 1)).assigned.count(p) == 0) {
          throw StructureViolation("worker " + std::to_string(k) + " is missing point " +
                                   std::to_string(p));
        }
      }
    }
    std::vector<gf::Block> blocks;
    for (int k = 1; k <= config.workers; ++k) blocks.push_back(batch_block(data, prev, k));
    gf::MdsMatrix code = gf::make_mds(config.workers - 1, config.workers);
    std::vector<gf::Block> parity = gf::encode(code, blocks);
    for (int r = 0; r < code.rows; ++r) {
      SymbolMeta meta{SymbolKind::MdsParity, 0, 0, r};
      message.symbols.push_back({meta, std::move(parity[static_cast<std::size_t>(r)])});
    }
    return message;
  }

  const SubpointLayout& layout = layout_from(storages);
  validate_layout(config, prev, layout);
  std::size_t frag_len = config.fragment_bytes();

  if (config.multiplier == config.workers - 1) {
    // Single rank-aligned XOR across all workers' need lists.
    std::vector<std::vector<SubPointLabel>> lists = need_lists(config, prev, next);
    for (const auto& list : lists) {
      for (const SubPointLabel& label : list) {
        // Held by everyone except the beneficiary: verify against storages.
        for (int holder : label.subset.members()) {
          (void)storages.at(static_cast<std::size_t>(holder - 1))
              .fragment_bytes(label, slot_of(layout, label) * frag_len, frag_len);
        }
      }
    }
    int per_batch = config.points / config.workers;
    for (int r = 1; r <= per_batch; ++r) {
      Bytes payload(frag_len, 0);
      for (int j = 1; j <= config.workers; ++j) {
        const SubPointLabel& label = lists[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(r - 1)];
        Bytes frag = data.slice(label.point, slot_of(layout, label) * frag_len, frag_len);
        for (std::size_t i = 0; i < frag_len; ++i) payload[i] ^= frag[i];
      }
      SymbolMeta meta{SymbolKind::AlignedXor, 0, r, -1};
      message.symbols.push_back({meta, std::move(payload)});
    }
    return message;
  }

  // m = K-2: align the interference, then send MDS parities over the N
  // aligned coded sub-points.
  std::vector<Bytes> blocks = aligned_symbol_blocks(config, data, prev, next, layout);
  int parity_rows = (config.workers - 1) * (config.points / config.workers);
  gf::MdsMatrix code = gf::make_mds(parity_rows, config.points);
  std::vector<gf::Block> parity = gf::encode(code, blocks);
  for (int r = 0; r < code.rows; ++r) {
    SymbolMeta meta{SymbolKind::MdsParity, 0, 0, r};
    message.symbols.push_back({meta, std::move(parity[static_cast<std::size_t>(r)])});
  }
  return message;
}

std::map<int, Bytes> decode_aligned(const AlignedConfig& config, const WorkerStorage& worker,
                                    const BroadcastMessage& message, const Assignment& prev,
                                    const Assignment& next) {
  config.validate();
  check_matching(config, prev);
  check_matching(config, next);
  require_derangement(prev, next);
  int self = worker.worker;
  int dim = config.dim;

  std::map<int, Bytes> out;

  if (config.multiplier == 1) {
    std::vector<std::pair<std::vector<gf::FieldElement>, gf::Block>> known;
    std::vector<gf::FieldElement> unit(static_cast<std::size_t>(config.workers),
                                       gf::FieldElement(0));
    unit[static_cast<std::size_t>(self - 1)] = gf::FieldElement(1);
    known.emplace_back(unit, batch_block_from_storage(worker, prev));
    gf::MdsMatrix code = gf::make_mds(config.workers - 1, config.workers);
    for (int r = 0; r < code.rows; ++r) {
      const CodedSymbol* symbol = message.find({SymbolKind::MdsParity, 0, 0, r});
      if (symbol == nullptr) throw DecodeFailure("parity row " + std::to_string(r) + " missing");
      known.emplace_back(code.row(r), symbol->payload);
    }
    std::vector<gf::Block> batches = gf::solve(known);
    for (int p : next.batch(self)) {
      int source = prev.owner(p);
      const std::vector<int>& batch = prev.batch(source);
      auto pos = std::lower_bound(batch.begin(), batch.end(), p) - batch.begin();
      const gf::Block& block = batches[static_cast<std::size_t>(source - 1)];
      out[p] = Bytes(block.begin() + pos * dim, block.begin() + (pos + 1) * dim);
    }
    return out;
  }

  const SubpointLayout& layout = worker.layout;
  validate_layout(config, prev, layout);
  std::size_t frag_len = config.fragment_bytes();

  // Fragments of the new batch this worker already holds, plus the ones it
  // will recover from the broadcast.
  std::map<SubPointLabel, Bytes> recovered;

  if (config.multiplier == config.workers - 1) {
    std::vector<std::vector<SubPointLabel>> lists = need_lists(config, prev, next);
    int per_batch = config.points / config.workers;
    for (int r = 1; r <= per_batch; ++r) {
      const CodedSymbol* symbol = message.find({SymbolKind::AlignedXor, 0, r, -1});
      if (symbol == nullptr) throw DecodeFailure("aligned symbol " + std::to_string(r) + " missing");
      Bytes frag = symbol->payload;
      for (int j = 1; j <= config.workers; ++j) {
        if (j == self) continue;
        const SubPointLabel& label = lists[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(r - 1)];
        Bytes held = worker.fragment_bytes(label, slot_of(layout, label) * frag_len, frag_len);
        for (std::size_t i = 0; i < frag_len; ++i) frag[i] ^= held[i];
      }
      recovered[lists[static_cast<std::size_t>(self - 1)][static_cast<std::size_t>(r - 1)]] =
          std::move(frag);
    }
  } else {
    // m = K-2. Reconstruct the locally available aligned symbols, solve the
    // full system, then peel out the needed fragments.
    std::vector<AlignedSymbolPlan> plan = aligned_plan(config, prev, next);
    auto eval_local = [&](const AlignedSymbolPlan& symbol) {
      Bytes block(frag_len, 0);
      for (const SubPointLabel& term : symbol.terms) {
        Bytes frag = worker.fragment_bytes(term, slot_of(layout, term) * frag_len, frag_len);
        for (std::size_t i = 0; i < frag_len; ++i) block[i] ^= frag[i];
      }
      return block;
    };

    std::vector<std::pair<std::vector<gf::FieldElement>, gf::Block>> known;
    for (std::size_t idx = 0; idx < plan.size(); ++idx) {
      if (plan[idx].holder != self) continue;
      std::vector<gf::FieldElement> unit(plan.size(), gf::FieldElement(0));
      unit[idx] = gf::FieldElement(1);
      known.emplace_back(std::move(unit), eval_local(plan[idx]));
    }
    int parity_rows = (config.workers - 1) * (config.points / config.workers);
    gf::MdsMatrix code = gf::make_mds(parity_rows, config.points);
    for (int r = 0; r < code.rows; ++r) {
      const CodedSymbol* symbol = message.find({SymbolKind::MdsParity, 0, 0, r});
      if (symbol == nullptr) throw DecodeFailure("parity row " + std::to_string(r) + " missing");
      known.emplace_back(code.row(r), symbol->payload);
    }
    std::vector<gf::Block> solved = gf::solve(known);

    // Every missing fragment of the new batch sits in exactly one aligned
    // symbol; subtract the locally held terms to recover it.
    for (std::size_t idx = 0; idx < plan.size(); ++idx) {
      const AlignedSymbolPlan& symbol = plan[idx];
      if (symbol.observer == self || symbol.holder == self) continue;
      for (const SubPointLabel& term : symbol.terms) {
        if (next.owner(term.point) != self) continue;
        Bytes frag = solved[idx];
        for (const SubPointLabel& other : symbol.terms) {
          if (other == term) continue;
          Bytes held = worker.fragment_bytes(other, slot_of(layout, other) * frag_len, frag_len);
          for (std::size_t i = 0; i < frag_len; ++i) frag[i] ^= held[i];
        }
        recovered[term] = std::move(frag);
      }
    }
  }

  // Assemble every point of the new batch from held plus recovered fragments.
  for (int p : next.batch(self)) {
    Bytes block(static_cast<std::size_t>(dim));
    const std::vector<WorkerSet>& slots = layout[static_cast<std::size_t>(p - 1)];
    for (std::size_t s = 0; s < slots.size(); ++s) {
      SubPointLabel label{p, slots[s]};
      Bytes frag;
      if (slots[s].contains(self) || prev.owner(p) == self) {
        frag = worker.fragment_bytes(label, s * frag_len, frag_len);
      } else {
        auto it = recovered.find(label);
        if (it == recovered.end()) {
          throw DecodeFailure("worker " + std::to_string(self) + " never recovered fragment " +
                              label.to_string());
        }
        frag = it->second;
      }
      std::copy(frag.begin(), frag.end(),
                block.begin() + static_cast<std::ptrdiff_t>(s * frag_len));
    }
    out[p] = std::move(block);
  }
  return out;
}

WorkerStorage update_aligned(const AlignedConfig& config, const WorkerStorage& worker,
                             const std::map<int, Bytes>& decoded, const Assignment& prev,
                             const Assignment& next) {
  config.validate();
  int self = worker.worker;
  std::size_t frag_len = config.fragment_bytes();
  SubpointLayout old_layout =
      worker.layout.empty() ? canonical_layout(config, prev) : worker.layout;

  WorkerStorage fresh;
  fresh.worker = self;
  fresh.layout = relabel_layout(old_layout, prev, next);
  for (int p : next.batch(self)) fresh.assigned[p] = decoded.at(p);

  if (config.multiplier == 1) return fresh;

  for (int p = 1; p <= config.points; ++p) {
    if (next.owner(p) == self) continue;
    const std::vector<WorkerSet>& old_slots = old_layout[static_cast<std::size_t>(p - 1)];
    const std::vector<WorkerSet>& new_slots = fresh.layout[static_cast<std::size_t>(p - 1)];
    if (prev.owner(p) == self) {
      // Releasing owner: keep exactly what the new owner stored as excess,
      // relabeled with our own index in place of the new owner's.
      int new_owner = next.owner(p);
      auto full = worker.assigned.find(p);
      if (full == worker.assigned.end()) {
        throw StructureViolation("worker " + std::to_string(self) +
                                 " releasing a point it never stored");
      }
      for (std::size_t s = 0; s < old_slots.size(); ++s) {
        if (!old_slots[s].contains(new_owner)) continue;
        auto offset = static_cast<std::uint32_t>(s * frag_len);
        fresh.excess[{p, new_slots[s]}] =
            Fragment{offset, Bytes(full->second.begin() + offset,
                                   full->second.begin() + offset + static_cast<std::uint32_t>(frag_len))};
      }
    } else {
      // Carrier: same bytes, label refreshed through the relabel map.
      for (std::size_t s = 0; s < old_slots.size(); ++s) {
        if (!old_slots[s].contains(self)) continue;
        auto frag = worker.excess.find({p, old_slots[s]});
        if (frag == worker.excess.end()) {
          throw StructureViolation("worker " + std::to_string(self) + " lost fragment D_" +
                                   std::to_string(p) + old_slots[s].to_string());
        }
        fresh.excess[{p, new_slots[s]}] = frag->second;
      }
    }
  }
  return fresh;
}

}  // namespace codedshuffle::aligned
