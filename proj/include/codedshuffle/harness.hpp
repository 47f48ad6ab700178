#pragma once

// Epoch-loop simulator: places storage once, then per epoch generates a
// shuffle, delivers, decodes at every worker, bit-compares against the
// master's data, updates storage, and records exact rate accounting.
// Decode mismatches are bugs and abort with a diagnostic, never a flag.

#include <iosfwd>
#include <memory>
#include <variant>
#include <vector>

#include "codedshuffle/aligned.hpp"
#include "codedshuffle/baseline.hpp"
#include "codedshuffle/model.hpp"

namespace codedshuffle::harness {

enum class ShuffleMode {
  Cyclic,             // canonical cyclic batch shift every epoch
  RandomDerangement,  // seeded random batch-derangement
  Random,             // seeded uniform point-level shuffle
  Exhaustive,         // all batch-permutations from a fixed prior state
};

struct EpochRecord {
  int epoch = 0;
  Assignment shuffle;  // the next assignment
  Rational measured_rate;
  Rational formula_rate;
  bool decode_ok = false;
  std::size_t bytes_sent = 0;
  std::vector<std::size_t> worker_bytes;
  std::vector<int> row_sums;  // of the shuffling matrix; always N/K
  std::vector<int> col_sums;
};

// Uniform face over the two schemes so the simulator can drive either.
class Scheme {
 public:
  virtual ~Scheme() = default;
  virtual int workers() const = 0;
  virtual int points() const = 0;
  virtual int dim() const = 0;
  virtual Rational storage_points() const = 0;
  virtual Rational formula_rate() const = 0;
  virtual bool accepts(const ShufflingMatrix& shuffle) const = 0;
  virtual std::vector<WorkerStorage> place(const DataSet& data, const Assignment& assign) const = 0;
  virtual BroadcastMessage deliver(const DataSet& data, const Assignment& prev,
                                   const Assignment& next,
                                   const std::vector<WorkerStorage>& storages) const = 0;
  virtual std::map<int, Bytes> decode(const WorkerStorage& worker, const BroadcastMessage& message,
                                      const Assignment& prev, const Assignment& next) const = 0;
  virtual WorkerStorage update(const WorkerStorage& worker, const std::map<int, Bytes>& decoded,
                               const Assignment& prev, const Assignment& next) const = 0;
  // Verifies post-update storage equals a fresh placement (baseline: exact;
  // aligned: under the epoch's evolved labeling). Throws StructureViolation.
  virtual void check_structure(const DataSet& data, const Assignment& assign,
                               const std::vector<WorkerStorage>& storages) const = 0;
};

std::unique_ptr<Scheme> make_scheme(const baseline::BaselineConfig& config);
std::unique_ptr<Scheme> make_scheme(const aligned::AlignedConfig& config);

struct RunOptions {
  int epochs = 1;
  ShuffleMode mode = ShuffleMode::Cyclic;
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;    // stream index for concurrent trials
  bool verify_structure = true;
};

// Chained epochs (Exhaustive instead explores every admissible
// batch-permutation of the next assignment from the initial state and
// records each case; K > 6 throws ExhaustiveTooLarge).
std::vector<EpochRecord> run(const Scheme& scheme, const DataSet& data, const RunOptions& options);

using SchemeConfig = std::variant<baseline::BaselineConfig, aligned::AlignedConfig>;

// Memory-sharing composition: the byte dimension is split into an
// alpha*d slice driven by the left scheme and a (1-alpha)*d slice driven by
// the right scheme, under one common shuffle sequence.
struct CompositeScheme {
  Rational alpha;
  SchemeConfig left;   // dim already set to the left slice width
  SchemeConfig right;  // dim already set to the right slice width

  // Validates slice widths are integers and each sub-scheme's divisibility
  // constraints hold on its slice; prototypes' dim fields are ignored.
  static CompositeScheme make(const Rational& alpha, SchemeConfig left_proto,
                              SchemeConfig right_proto, int total_dim);
  int total_dim() const;
};

std::vector<EpochRecord> run_composite(const CompositeScheme& comp, const DataSet& data,
                                       const RunOptions& options);

// One record per line: {"epoch", "shuffle" (0-based batch lists), "rate_num",
// "rate_den", "formula_num", "formula_den", "decode_ok", "bytes_sent"}.
void write_trace(std::ostream& out, const std::vector<EpochRecord>& records);

}  // namespace codedshuffle::harness
