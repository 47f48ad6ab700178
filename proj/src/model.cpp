#include "codedshuffle/model.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

namespace codedshuffle {

std::uint64_t mix_stream_seed(std::uint64_t user_seed, std::uint64_t trial, std::uint64_t epoch) {
  std::uint64_t h = SplitMix64(user_seed).next();
  h = SplitMix64(h ^ trial).next();
  return SplitMix64(h ^ epoch).next();
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return result;
}

DataSet::DataSet(std::vector<Bytes> points) : points_(std::move(points)) {
  if (points_.empty()) throw InvalidConfig("data-set needs at least one point");
  std::size_t d = points_.front().size();
  if (d == 0) throw InvalidConfig("data points need at least one byte");
  for (const Bytes& p : points_) {
    if (p.size() != d) throw DimensionMismatch("data points differ in length");
  }
}

DataSet DataSet::generate(int points, int dim, std::uint64_t seed) {
  if (points < 1 || dim < 1) throw InvalidConfig("data-set needs points >= 1 and dim >= 1");
  SplitMix64 rng(seed);
  std::vector<Bytes> data(static_cast<std::size_t>(points));
  for (Bytes& p : data) {
    p.resize(static_cast<std::size_t>(dim));
    std::size_t i = 0;
    while (i < p.size()) {
      std::uint64_t word = rng.next();
      for (int b = 0; b < 8 && i < p.size(); ++b, ++i) {
        p[i] = static_cast<std::uint8_t>(word >> (8 * b));
      }
    }
  }
  return DataSet(std::move(data));
}

DataSet DataSet::from_file(const std::string& path, int points, int dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open data file '" + path + "'");
  std::vector<Bytes> data(static_cast<std::size_t>(points), Bytes(static_cast<std::size_t>(dim)));
  for (Bytes& p : data) {
    in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(p.size()));
    if (in.gcount() != static_cast<std::streamsize>(p.size())) {
      throw Error("data file '" + path + "' shorter than points*dim bytes");
    }
  }
  if (in.get() != std::ifstream::traits_type::eof()) {
    throw Error("data file '" + path + "' longer than points*dim bytes");
  }
  return DataSet(std::move(data));
}

Bytes DataSet::slice(int index, std::size_t offset, std::size_t len) const {
  const Bytes& p = point(index);
  if (offset + len > p.size()) throw DimensionMismatch("fragment slice out of range");
  return Bytes(p.begin() + static_cast<std::ptrdiff_t>(offset),
               p.begin() + static_cast<std::ptrdiff_t>(offset + len));
}

std::vector<int> WorkerSet::members() const {
  std::vector<int> out;
  for (int w = 1; w <= 32; ++w) {
    if (contains(w)) out.push_back(w);
  }
  return out;
}

std::string WorkerSet::to_string() const {
  std::string s = "{";
  bool first = true;
  for (int w : members()) {
    if (!first) s += ",";
    s += std::to_string(w);
    first = false;
  }
  return s + "}";
}

std::vector<WorkerSet> subsets_of(const std::vector<int>& ground, int size) {
  std::vector<WorkerSet> out;
  if (size < 0 || size > static_cast<int>(ground.size())) return out;
  std::vector<int> idx(static_cast<std::size_t>(size));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    WorkerSet s;
    for (int i : idx) s = s.with(ground[static_cast<std::size_t>(i)]);
    out.push_back(s);
    // advance to the next combination in lexicographic order
    int pos = size - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] ==
                           static_cast<int>(ground.size()) - size + pos) {
      --pos;
    }
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < size; ++j) {
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

Assignment make_assignment(std::vector<std::vector<int>> batches) {
  int workers = static_cast<int>(batches.size());
  if (workers < 1) throw InvalidPartition("no batches given");
  std::size_t total = 0;
  for (const auto& b : batches) total += b.size();
  int points = static_cast<int>(total);
  if (points % workers != 0) {
    throw InvalidPartition("point count " + std::to_string(points) +
                           " not divisible by worker count " + std::to_string(workers));
  }
  std::size_t batch_size = total / static_cast<std::size_t>(workers);

  Assignment a;
  a.owner_.assign(static_cast<std::size_t>(points), 0);
  for (int k = 1; k <= workers; ++k) {
    auto& b = batches[static_cast<std::size_t>(k - 1)];
    if (b.size() != batch_size) {
      throw InvalidPartition("batch of worker " + std::to_string(k) + " has " +
                             std::to_string(b.size()) + " points, expected " +
                             std::to_string(batch_size));
    }
    std::sort(b.begin(), b.end());
    for (int p : b) {
      if (p < 1 || p > points) {
        throw InvalidPartition("point index " + std::to_string(p) + " out of range [1:" +
                               std::to_string(points) + "]");
      }
      if (a.owner_[static_cast<std::size_t>(p - 1)] != 0) {
        throw InvalidPartition("point " + std::to_string(p) + " assigned to workers " +
                               std::to_string(a.owner_[static_cast<std::size_t>(p - 1)]) +
                               " and " + std::to_string(k));
      }
      a.owner_[static_cast<std::size_t>(p - 1)] = k;
    }
  }
  a.batches_ = std::move(batches);
  return a;
}

Assignment identity_assignment(int workers, int points) {
  if (workers < 1 || points < workers || points % workers != 0) {
    throw InvalidConfig("points must be a positive multiple of workers");
  }
  std::vector<std::vector<int>> batches(static_cast<std::size_t>(workers));
  int per = points / workers;
  int next = 1;
  for (auto& b : batches) {
    for (int i = 0; i < per; ++i) b.push_back(next++);
  }
  return make_assignment(std::move(batches));
}

std::vector<int> newly_assigned(const Assignment& prev, const Assignment& next, int worker) {
  std::vector<int> out;
  for (int p : next.batch(worker)) {
    if (prev.owner(p) != worker) out.push_back(p);
  }
  return out;  // batches are sorted, so this is ascending
}

ShufflingMatrix::ShufflingMatrix(int workers, int batch_size, std::vector<int> entries)
    : workers_(workers), batch_size_(batch_size), entries_(std::move(entries)) {
  if (entries_.size() != static_cast<std::size_t>(workers_) * workers_) {
    throw DimensionMismatch("shuffling matrix needs workers^2 entries");
  }
  for (int i = 1; i <= workers_; ++i) {
    if (row_sum(i) != batch_size_ || col_sum(i) != batch_size_) {
      throw DimensionMismatch("shuffling matrix row/column sums must equal N/K");
    }
  }
}

int ShufflingMatrix::row_sum(int i) const {
  int s = 0;
  for (int j = 1; j <= workers_; ++j) s += at(i, j);
  return s;
}

int ShufflingMatrix::col_sum(int j) const {
  int s = 0;
  for (int i = 1; i <= workers_; ++i) s += at(i, j);
  return s;
}

bool ShufflingMatrix::is_derangement() const {
  for (int i = 1; i <= workers_; ++i) {
    if (at(i, i) != 0) return false;
  }
  return true;
}

ShufflingMatrix shuffling_matrix(const Assignment& prev, const Assignment& next) {
  if (prev.workers() != next.workers() || prev.points() != next.points()) {
    throw DimensionMismatch("assignments differ in workers or points");
  }
  int k = prev.workers();
  std::vector<int> counts(static_cast<std::size_t>(k) * k, 0);
  for (int p = 1; p <= prev.points(); ++p) {
    int i = prev.owner(p);
    int j = next.owner(p);
    ++counts[static_cast<std::size_t>(i - 1) * k + (j - 1)];
  }
  return ShufflingMatrix(k, prev.batch_size(), std::move(counts));
}

Assignment worst_case_shuffle(const Assignment& prev, std::optional<std::uint64_t> seed) {
  int k = prev.workers();
  if (k < 2) throw InvalidConfig("a batch-derangement needs at least 2 workers");
  std::vector<int> source(static_cast<std::size_t>(k));  // worker i takes batch of source[i-1]
  if (!seed) {
    for (int i = 1; i <= k; ++i) source[static_cast<std::size_t>(i - 1)] = i % k + 1;
  } else {
    SplitMix64 rng(*seed);
    while (true) {
      std::iota(source.begin(), source.end(), 1);
      for (int i = k - 1; i > 0; --i) {
        auto j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i + 1)));
        std::swap(source[static_cast<std::size_t>(i)], source[static_cast<std::size_t>(j)]);
      }
      bool deranged = true;
      for (int i = 1; i <= k; ++i) {
        if (source[static_cast<std::size_t>(i - 1)] == i) deranged = false;
      }
      if (deranged) break;
    }
  }
  std::vector<std::vector<int>> batches;
  batches.reserve(static_cast<std::size_t>(k));
  for (int i = 1; i <= k; ++i) {
    batches.push_back(prev.batch(source[static_cast<std::size_t>(i - 1)]));
  }
  return make_assignment(std::move(batches));
}

Assignment random_shuffle(int workers, int points, SplitMix64& rng) {
  std::vector<int> perm(static_cast<std::size_t>(points));
  std::iota(perm.begin(), perm.end(), 1);
  for (int i = points - 1; i > 0; --i) {
    auto j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  std::vector<std::vector<int>> batches(static_cast<std::size_t>(workers));
  int per = points / workers;
  for (int k = 0; k < workers; ++k) {
    batches[static_cast<std::size_t>(k)].assign(perm.begin() + static_cast<std::ptrdiff_t>(k) * per,
                                                perm.begin() + static_cast<std::ptrdiff_t>(k + 1) * per);
  }
  return make_assignment(std::move(batches));
}

std::string SubPointLabel::to_string() const {
  return "D_" + std::to_string(point) + subset.to_string();
}

std::size_t WorkerStorage::stored_bytes() const {
  std::size_t total = 0;
  for (const auto& [p, block] : assigned) total += block.size();
  for (const auto& [label, frag] : excess) total += frag.bytes.size();
  return total;
}

Bytes WorkerStorage::fragment_bytes(const SubPointLabel& label, std::size_t offset,
                                    std::size_t len) const {
  auto full = assigned.find(label.point);
  if (full != assigned.end()) {
    if (offset + len > full->second.size()) throw DimensionMismatch("fragment slice out of range");
    return Bytes(full->second.begin() + static_cast<std::ptrdiff_t>(offset),
                 full->second.begin() + static_cast<std::ptrdiff_t>(offset + len));
  }
  auto frag = excess.find(label);
  if (frag == excess.end()) {
    throw StructureViolation("worker " + std::to_string(worker) + " is missing fragment " +
                             label.to_string());
  }
  if (frag->second.offset != offset || frag->second.bytes.size() != len) {
    throw StructureViolation("worker " + std::to_string(worker) + " holds fragment " +
                             label.to_string() + " with unexpected byte range");
  }
  return frag->second.bytes;
}

std::size_t BroadcastMessage::total_bytes() const {
  std::size_t total = 0;
  for (const CodedSymbol& s : symbols) total += s.payload.size();
  return total;
}

Rational BroadcastMessage::size_in_points(int dim) const {
  return Rational(static_cast<std::int64_t>(total_bytes()), dim);
}

const CodedSymbol* BroadcastMessage::find(const SymbolMeta& meta) const {
  for (const CodedSymbol& s : symbols) {
    if (s.meta == meta) return &s;
  }
  return nullptr;
}

}  // namespace codedshuffle
