#include "codedshuffle/harness.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace codedshuffle::harness {

namespace {

class BaselineScheme final : public Scheme {
 public:
  explicit BaselineScheme(baseline::BaselineConfig config) : config_(config) {
    config_.validate();
  }
  int workers() const override { return config_.workers; }
  int points() const override { return config_.points; }
  int dim() const override { return config_.dim; }
  Rational storage_points() const override { return config_.storage_points(); }
  Rational formula_rate() const override { return config_.formula_rate(); }
  bool accepts(const ShufflingMatrix&) const override { return true; }
  std::vector<WorkerStorage> place(const DataSet& data, const Assignment& assign) const override {
    return baseline::place(config_, data, assign);
  }
  BroadcastMessage deliver(const DataSet& data, const Assignment& prev, const Assignment& next,
                           const std::vector<WorkerStorage>& storages) const override {
    return baseline::deliver(config_, data, prev, next, storages);
  }
  std::map<int, Bytes> decode(const WorkerStorage& worker, const BroadcastMessage& message,
                              const Assignment& prev, const Assignment& next) const override {
    return baseline::decode(config_, worker, message, prev, next);
  }
  WorkerStorage update(const WorkerStorage& worker, const std::map<int, Bytes>& decoded,
                       const Assignment& prev, const Assignment& next) const override {
    return baseline::update(config_, worker, decoded, prev, next);
  }
  void check_structure(const DataSet& data, const Assignment& assign,
                       const std::vector<WorkerStorage>& storages) const override {
    std::vector<WorkerStorage> fresh = baseline::place(config_, data, assign);
    for (std::size_t k = 0; k < storages.size(); ++k) {
      if (storages[k].assigned != fresh[k].assigned || storages[k].excess != fresh[k].excess) {
        throw StructureViolation("worker " + std::to_string(k + 1) +
                                 " storage differs from a fresh placement");
      }
    }
  }

 private:
  baseline::BaselineConfig config_;
};

class AlignedScheme final : public Scheme {
 public:
  explicit AlignedScheme(aligned::AlignedConfig config) : config_(config) { config_.validate(); }
  int workers() const override { return config_.workers; }
  int points() const override { return config_.points; }
  int dim() const override { return config_.dim; }
  Rational storage_points() const override { return config_.storage_points(); }
  Rational formula_rate() const override { return config_.formula_rate(); }
  bool accepts(const ShufflingMatrix& shuffle) const override { return shuffle.is_derangement(); }
  std::vector<WorkerStorage> place(const DataSet& data, const Assignment& assign) const override {
    return aligned::place_aligned(config_, data, assign);
  }
  BroadcastMessage deliver(const DataSet& data, const Assignment& prev, const Assignment& next,
                           const std::vector<WorkerStorage>& storages) const override {
    return aligned::deliver_aligned(config_, data, prev, next, storages);
  }
  std::map<int, Bytes> decode(const WorkerStorage& worker, const BroadcastMessage& message,
                              const Assignment& prev, const Assignment& next) const override {
    return aligned::decode_aligned(config_, worker, message, prev, next);
  }
  WorkerStorage update(const WorkerStorage& worker, const std::map<int, Bytes>& decoded,
                       const Assignment& prev, const Assignment& next) const override {
    return aligned::update_aligned(config_, worker, decoded, prev, next);
  }
  void check_structure(const DataSet& data, const Assignment& assign,
                       const std::vector<WorkerStorage>& storages) const override {
    // The labeling evolves with the relabeling update; fresh placement under
    // the carried (validated) layout must reproduce the storage bytewise.
    const SubpointLayout& layout = storages.front().layout;
    std::vector<WorkerStorage> fresh = aligned::place_aligned(config_, data, assign, layout);
    for (std::size_t k = 0; k < storages.size(); ++k) {
      if (storages[k].layout != layout) {
        throw StructureViolation("workers disagree on the sub-point labeling");
      }
      if (storages[k].assigned != fresh[k].assigned || storages[k].excess != fresh[k].excess) {
        throw StructureViolation("worker " + std::to_string(k + 1) +
                                 " storage differs from a fresh placement");
      }
    }
  }

 private:
  aligned::AlignedConfig config_;
};

Assignment next_assignment(const Scheme& scheme, const Assignment& prev, ShuffleMode mode,
                           std::uint64_t seed, std::uint64_t trial, int epoch) {
  switch (mode) {
    case ShuffleMode::Cyclic:
      return worst_case_shuffle(prev, std::nullopt);
    case ShuffleMode::RandomDerangement:
      return worst_case_shuffle(prev,
                                mix_stream_seed(seed, trial, static_cast<std::uint64_t>(epoch)));
    case ShuffleMode::Random: {
      SplitMix64 rng(mix_stream_seed(seed, trial, static_cast<std::uint64_t>(epoch)));
      return random_shuffle(scheme.workers(), scheme.points(), rng);
    }
    case ShuffleMode::Exhaustive:
      break;
  }
  throw InvalidConfig("exhaustive mode is handled by the enumeration loop");
}

// Decode at every worker and bit-compare against the master's data. Decode
// failures are fatal with a diagnostic, never recorded as data.
void decode_all(const Scheme& scheme, const DataSet& data, const BroadcastMessage& message,
                const Assignment& prev, const Assignment& next,
                const std::vector<WorkerStorage>& storages,
                std::vector<std::map<int, Bytes>>& decoded, int epoch) {
  decoded.clear();
  for (const WorkerStorage& z : storages) {
    std::map<int, Bytes> got = scheme.decode(z, message, prev, next);
    for (int p : next.batch(z.worker)) {
      auto it = got.find(p);
      const Bytes& expect = data.point(p);
      if (it == got.end()) {
        throw DecodeFailure("epoch " + std::to_string(epoch) + ": worker " +
                            std::to_string(z.worker) + " returned no block for point " +
                            std::to_string(p));
      }
      if (it->second != expect) {
        std::size_t at = 0;
        while (at < expect.size() && at < it->second.size() && it->second[at] == expect[at]) ++at;
        throw DecodeFailure("epoch " + std::to_string(epoch) + ": worker " +
                            std::to_string(z.worker) + " decoded point " + std::to_string(p) +
                            " wrong, first differing byte offset " + std::to_string(at));
      }
    }
    decoded.push_back(std::move(got));
  }
}

EpochRecord make_record(const Scheme& scheme, int epoch, const Assignment& next,
                        const BroadcastMessage& message,
                        const std::vector<WorkerStorage>& storages,
                        const ShufflingMatrix& shuffle) {
  EpochRecord rec;
  rec.epoch = epoch;
  rec.shuffle = next;
  rec.bytes_sent = message.total_bytes();
  rec.measured_rate = message.size_in_points(scheme.dim());
  rec.formula_rate = scheme.formula_rate();
  rec.decode_ok = true;  // a failed decode never reaches the record
  for (const WorkerStorage& z : storages) rec.worker_bytes.push_back(z.stored_bytes());
  for (int i = 1; i <= scheme.workers(); ++i) {
    rec.row_sums.push_back(shuffle.row_sum(i));
    rec.col_sums.push_back(shuffle.col_sum(i));
  }
  return rec;
}

void check_storage_budget(const Scheme& scheme, const std::vector<WorkerStorage>& storages) {
  Rational budget = scheme.storage_points() * Rational(scheme.dim());
  for (const WorkerStorage& z : storages) {
    if (Rational(static_cast<std::int64_t>(z.stored_bytes())) > budget) {
      throw StructureViolation("worker " + std::to_string(z.worker) +
                               " exceeds the storage budget");
    }
  }
}

std::vector<EpochRecord> run_exhaustive(const Scheme& scheme, const DataSet& data) {
  if (scheme.workers() > 6) {
    throw ExhaustiveTooLarge("exhaustive enumeration is guarded to K <= 6, got K = " +
                             std::to_string(scheme.workers()));
  }
  Assignment prev = identity_assignment(scheme.workers(), scheme.points());
  std::vector<WorkerStorage> storages = scheme.place(data, prev);
  check_storage_budget(scheme, storages);

  std::vector<EpochRecord> records;
  std::vector<int> source(static_cast<std::size_t>(scheme.workers()));
  std::iota(source.begin(), source.end(), 1);
  std::vector<std::map<int, Bytes>> decoded;
  int case_index = 0;
  do {
    std::vector<std::vector<int>> batches;
    for (int s : source) batches.push_back(prev.batch(s));
    Assignment next = make_assignment(std::move(batches));
    ShufflingMatrix shuffle = shuffling_matrix(prev, next);
    if (!scheme.accepts(shuffle)) continue;
    BroadcastMessage message = scheme.deliver(data, prev, next, storages);
    decode_all(scheme, data, message, prev, next, storages, decoded, case_index);
    records.push_back(make_record(scheme, case_index, next, message, storages, shuffle));
    ++case_index;
  } while (std::next_permutation(source.begin(), source.end()));
  return records;
}

baseline::BaselineConfig resize(baseline::BaselineConfig c, int dim) {
  c.dim = dim;
  return c;
}
aligned::AlignedConfig resize(aligned::AlignedConfig c, int dim) {
  c.dim = dim;
  return c;
}

std::unique_ptr<Scheme> scheme_from(const SchemeConfig& config) {
  if (std::holds_alternative<baseline::BaselineConfig>(config)) {
    return make_scheme(std::get<baseline::BaselineConfig>(config));
  }
  return make_scheme(std::get<aligned::AlignedConfig>(config));
}

DataSet slice_dataset(const DataSet& data, std::size_t offset, std::size_t len) {
  std::vector<Bytes> points;
  points.reserve(static_cast<std::size_t>(data.size()));
  for (int p = 1; p <= data.size(); ++p) points.push_back(data.slice(p, offset, len));
  return DataSet(std::move(points));
}

}  // namespace

std::unique_ptr<Scheme> make_scheme(const baseline::BaselineConfig& config) {
  return std::make_unique<BaselineScheme>(config);
}

std::unique_ptr<Scheme> make_scheme(const aligned::AlignedConfig& config) {
  return std::make_unique<AlignedScheme>(config);
}

std::vector<EpochRecord> run(const Scheme& scheme, const DataSet& data, const RunOptions& options) {
  if (data.size() != scheme.points() || data.dim() != scheme.dim()) {
    throw DimensionMismatch("data-set does not match the scheme's N, d");
  }
  if (options.mode == ShuffleMode::Exhaustive) return run_exhaustive(scheme, data);
  if (options.epochs < 0) throw InvalidConfig("epochs must be >= 0");

  std::vector<EpochRecord> records;
  if (options.epochs == 0) return records;

  Assignment prev = identity_assignment(scheme.workers(), scheme.points());
  std::vector<WorkerStorage> storages = scheme.place(data, prev);
  check_storage_budget(scheme, storages);

  std::vector<std::map<int, Bytes>> decoded;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    Assignment next =
        next_assignment(scheme, prev, options.mode, options.seed, options.trial, epoch);
    ShufflingMatrix shuffle = shuffling_matrix(prev, next);
    BroadcastMessage message = scheme.deliver(data, prev, next, storages);
    decode_all(scheme, data, message, prev, next, storages, decoded, epoch);

    std::vector<WorkerStorage> updated;
    updated.reserve(storages.size());
    for (std::size_t k = 0; k < storages.size(); ++k) {
      updated.push_back(scheme.update(storages[k], decoded[k], prev, next));
    }
    storages = std::move(updated);
    check_storage_budget(scheme, storages);
    if (options.verify_structure) scheme.check_structure(data, next, storages);

    records.push_back(make_record(scheme, epoch, next, message, storages, shuffle));
    prev = next;
  }
  return records;
}

CompositeScheme CompositeScheme::make(const Rational& alpha, SchemeConfig left_proto,
                                      SchemeConfig right_proto, int total_dim) {
  if (alpha < Rational(0) || alpha > Rational(1)) {
    throw SliceMismatch("alpha must lie in [0,1]");
  }
  Rational left_width = alpha * Rational(total_dim);
  if (left_width.den() != 1) {
    throw SliceMismatch("slice width alpha*d = " + left_width.to_string() +
                        " is not an integer byte count");
  }
  int left_dim = static_cast<int>(left_width.num());
  int right_dim = total_dim - left_dim;

  CompositeScheme comp;
  comp.alpha = alpha;
  comp.left = std::visit([&](auto c) -> SchemeConfig { return resize(c, left_dim); }, left_proto);
  comp.right = std::visit([&](auto c) -> SchemeConfig { return resize(c, right_dim); }, right_proto);
  // Each sub-scheme's divisibility constraints must hold on its slice.
  if (left_dim > 0) scheme_from(comp.left);
  if (right_dim > 0) scheme_from(comp.right);
  return comp;
}

int CompositeScheme::total_dim() const {
  auto dim_of = [](const SchemeConfig& c) {
    return std::visit([](const auto& cfg) { return cfg.dim; }, c);
  };
  return dim_of(left) + dim_of(right);
}

std::vector<EpochRecord> run_composite(const CompositeScheme& comp, const DataSet& data,
                                       const RunOptions& options) {
  if (options.mode == ShuffleMode::Exhaustive) {
    throw InvalidConfig("composite runs drive chained epochs, not exhaustive sweeps");
  }
  int dim = comp.total_dim();
  if (data.dim() != dim) throw DimensionMismatch("data-set dim does not match the slice widths");
  if (options.epochs == 0) return {};

  auto left_dim = static_cast<std::size_t>(std::visit([](const auto& c) { return c.dim; }, comp.left));
  auto right_dim = static_cast<std::size_t>(dim) - left_dim;

  struct Slice {
    std::unique_ptr<Scheme> scheme;
    DataSet data;
    std::vector<WorkerStorage> storages;
  };
  std::vector<Slice> slices;
  auto add_slice = [&](const SchemeConfig& config, std::size_t offset, std::size_t len) {
    if (len == 0) return;
    Slice s{scheme_from(config), slice_dataset(data, offset, len), {}};
    slices.push_back(std::move(s));
  };
  add_slice(comp.left, 0, left_dim);
  add_slice(comp.right, left_dim, right_dim);
  if (slices.empty()) throw SliceMismatch("composite scheme with no non-empty slice");

  int workers = slices.front().scheme->workers();
  Assignment prev = identity_assignment(workers, data.size());
  for (Slice& s : slices) s.storages = s.scheme->place(s.data, prev);

  // alpha*R_left + (1-alpha)*R_right; each slice's rate is normalized by its
  // own width, so the weights are exactly the dimension shares.
  Rational formula(0);
  if (left_dim > 0) formula += comp.alpha * scheme_from(comp.left)->formula_rate();
  if (right_dim > 0) formula += (Rational(1) - comp.alpha) * scheme_from(comp.right)->formula_rate();

  std::vector<EpochRecord> records;
  std::vector<std::map<int, Bytes>> decoded;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    Assignment next = next_assignment(*slices.front().scheme, prev, options.mode, options.seed,
                                      options.trial, epoch);
    ShufflingMatrix shuffle = shuffling_matrix(prev, next);

    std::size_t bytes_sent = 0;
    std::vector<std::size_t> worker_bytes(static_cast<std::size_t>(workers), 0);
    for (Slice& s : slices) {
      BroadcastMessage message = s.scheme->deliver(s.data, prev, next, s.storages);
      bytes_sent += message.total_bytes();
      decode_all(*s.scheme, s.data, message, prev, next, s.storages, decoded, epoch);
      std::vector<WorkerStorage> updated;
      for (std::size_t k = 0; k < s.storages.size(); ++k) {
        updated.push_back(s.scheme->update(s.storages[k], decoded[k], prev, next));
      }
      s.storages = std::move(updated);
      if (options.verify_structure) s.scheme->check_structure(s.data, next, s.storages);
      for (std::size_t k = 0; k < s.storages.size(); ++k) {
        worker_bytes[k] += s.storages[k].stored_bytes();
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.shuffle = next;
    rec.bytes_sent = bytes_sent;
    rec.measured_rate = Rational(static_cast<std::int64_t>(bytes_sent), dim);
    rec.formula_rate = formula;
    rec.decode_ok = true;
    rec.worker_bytes = std::move(worker_bytes);
    for (int i = 1; i <= workers; ++i) {
      rec.row_sums.push_back(shuffle.row_sum(i));
      rec.col_sums.push_back(shuffle.col_sum(i));
    }
    records.push_back(std::move(rec));
    prev = next;
  }
  return records;
}

void write_trace(std::ostream& out, const std::vector<EpochRecord>& records) {
  for (const EpochRecord& rec : records) {
    nlohmann::json line;
    line["epoch"] = rec.epoch;
    std::vector<std::vector<int>> zero_based;
    for (const auto& batch : rec.shuffle.batches()) {
      std::vector<int> b;
      for (int p : batch) b.push_back(p - 1);
      zero_based.push_back(std::move(b));
    }
    line["shuffle"] = zero_based;
    line["rate_num"] = rec.measured_rate.num();
    line["rate_den"] = rec.measured_rate.den();
    line["formula_num"] = rec.formula_rate.num();
    line["formula_den"] = rec.formula_rate.den();
    line["decode_ok"] = rec.decode_ok;
    line["bytes_sent"] = rec.bytes_sent;
    out << line.dump() << "\n";
  }
}

}  // namespace codedshuffle::harness
