#include <doctest.h>

#include <vector>

#include "codedshuffle/gf256.hpp"

using namespace codedshuffle;
using gf::FieldElement;

namespace {

FieldElement fe(int v) { return FieldElement(static_cast<std::uint8_t>(v)); }

// Independent rank check by plain Gaussian elimination; the oracle for
// invertibility claims about MDS submatrices.
bool invertible(std::vector<std::vector<FieldElement>> m) {
  std::size_t n = m.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && m[pivot][col].is_zero()) ++pivot;
    if (pivot == n) return false;
    std::swap(m[pivot], m[col]);
    FieldElement inv = gf::field_inv(m[col][col]);
    for (std::size_t c = 0; c < n; ++c) m[col][c] = gf::field_mul(m[col][c], inv);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || m[r][col].is_zero()) continue;
      FieldElement f = m[r][col];
      for (std::size_t c = 0; c < n; ++c) {
        m[r][c] = m[r][c] + gf::field_mul(f, m[col][c]);
      }
    }
  }
  return true;
}

// All size-k index subsets of [0:n), lexicographic.
std::vector<std::vector<int>> index_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  if (k == 0) return {{}};
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    out.push_back(idx);
    int pos = k - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < k; ++j) {
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

gf::Block random_block(std::uint64_t seed, std::size_t len) {
  gf::Block b(len);
  std::uint64_t x = seed;
  for (auto& v : b) {
    x = x * 6364136223846793005ULL + 1442695040888963407ULL;
    v = static_cast<std::uint8_t>(x >> 33);
  }
  return b;
}

}  // namespace

TEST_SUITE("gf256") {

TEST_CASE("field axioms hold exhaustively") {
  for (int a = 0; a < 256; ++a) {
    CHECK(gf::field_mul(fe(0), fe(a)) == fe(0));
    CHECK(gf::field_mul(fe(1), fe(a)) == fe(a));
    for (int b = 0; b < 256; ++b) {
      CHECK(gf::field_mul(fe(a), fe(b)) == gf::field_mul(fe(b), fe(a)));
    }
  }
  for (int a = 0; a < 256; ++a) {
    for (int b = 0; b < 256; ++b) {
      FieldElement ab = gf::field_mul(fe(a), fe(b));
      for (int c = 0; c < 256; ++c) {
        FieldElement bc = gf::field_mul(fe(b), fe(c));
        REQUIRE(gf::field_mul(ab, fe(c)) == gf::field_mul(fe(a), bc));
        REQUIRE(gf::field_mul(fe(a), fe(b) + fe(c)) ==
                gf::field_mul(fe(a), fe(b)) + gf::field_mul(fe(a), fe(c)));
      }
    }
  }
}

TEST_CASE("every nonzero element has an inverse") {
  for (int a = 1; a < 256; ++a) {
    CHECK(gf::field_mul(fe(a), gf::field_inv(fe(a))) == fe(1));
  }
  CHECK_THROWS_AS(gf::field_inv(fe(0)), Error);
}

TEST_CASE("every square submatrix of a Cauchy matrix is invertible") {
  gf::MdsMatrix m = gf::make_mds(3, 4);
  REQUIRE(m.rows == 3);
  REQUIRE(m.cols == 4);
  for (int size = 1; size <= 3; ++size) {
    for (const auto& rows : index_subsets(m.rows, size)) {
      for (const auto& cols : index_subsets(m.cols, size)) {
        std::vector<std::vector<FieldElement>> sub;
        for (int r : rows) {
          std::vector<FieldElement> row;
          for (int c : cols) row.push_back(m.at(r, c));
          sub.push_back(row);
        }
        CHECK(invertible(sub));
      }
    }
  }
}

TEST_CASE("deleting any data column and appending the identity stays invertible") {
  // the (3,4) shape: any single known data symbol plus 3 parities decodes
  gf::MdsMatrix m = gf::make_mds(3, 4);
  for (int known = 0; known < 4; ++known) {
    std::vector<std::vector<FieldElement>> sys;
    std::vector<FieldElement> unit(4, fe(0));
    unit[static_cast<std::size_t>(known)] = fe(1);
    sys.push_back(unit);
    for (int r = 0; r < 3; ++r) sys.push_back(m.row(r));
    CHECK(invertible(sys));
  }
}

TEST_CASE("shape guards") {
  gf::MdsMatrix empty = gf::make_mds(0, 7);
  CHECK(empty.rows == 0);
  CHECK(gf::encode(empty, std::vector<gf::Block>(7, gf::Block{1, 2})).empty());
  CHECK_NOTHROW(gf::make_mds(251, 4));
  CHECK_THROWS_AS(gf::make_mds(253, 4), SizeExceedsField);
  CHECK_THROWS_AS(gf::encode(gf::make_mds(2, 3), {{1}, {2}}), ShapeMismatch);
}

TEST_CASE("all-ones coefficients reduce to bytewise XOR") {
  gf::MdsMatrix ones;
  ones.rows = 1;
  ones.cols = 2;
  ones.entries = {fe(1), fe(1)};
  std::vector<gf::Block> parity = gf::encode(ones, {{0x0F, 0xAA}, {0xF0, 0xA5}});
  CHECK(parity == std::vector<gf::Block>{{0xFF, 0x0F}});
}

TEST_CASE("solve on unit rows returns the blocks unchanged") {
  std::vector<std::pair<std::vector<FieldElement>, gf::Block>> known;
  known.push_back({{fe(1), fe(0)}, {7, 8}});
  known.push_back({{fe(0), fe(1)}, {9, 10}});
  std::vector<gf::Block> solved = gf::solve(known);
  CHECK(solved == std::vector<gf::Block>{{7, 8}, {9, 10}});
}

TEST_CASE("one known symbol plus K-1 parities recovers all four blocks") {
  gf::MdsMatrix m = gf::make_mds(3, 4);
  std::vector<gf::Block> data;
  for (int i = 0; i < 4; ++i) data.push_back(random_block(100 + static_cast<unsigned>(i), 16));
  std::vector<gf::Block> parity = gf::encode(m, data);
  for (int held = 0; held < 4; ++held) {
    std::vector<std::pair<std::vector<FieldElement>, gf::Block>> known;
    std::vector<FieldElement> unit(4, fe(0));
    unit[static_cast<std::size_t>(held)] = fe(1);
    known.push_back({unit, data[static_cast<std::size_t>(held)]});
    for (int r = 0; r < 3; ++r) known.push_back({m.row(r), parity[static_cast<std::size_t>(r)]});
    CHECK(gf::solve(known) == data);
  }
}

TEST_CASE("dependent rows raise SingularSystem") {
  std::vector<std::pair<std::vector<FieldElement>, gf::Block>> known;
  known.push_back({{fe(3), fe(5)}, {1}});
  known.push_back({{fe(3), fe(5)}, {1}});
  CHECK_THROWS_AS(gf::solve(known), SingularSystem);
}

TEST_CASE("solve undoes encode for random admissible known-subset patterns") {
  std::uint64_t state = 42;
  auto rnd = [&state](std::uint64_t bound) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return (state >> 33) % bound;
  };
  for (int trial = 0; trial < 50; ++trial) {
    int cols = 2 + static_cast<int>(rnd(8));
    int rows = 1 + static_cast<int>(rnd(static_cast<std::uint64_t>(cols)));
    gf::MdsMatrix m = gf::make_mds(rows, cols);
    std::vector<gf::Block> data;
    for (int i = 0; i < cols; ++i) {
      data.push_back(random_block(static_cast<std::uint64_t>(trial * 31 + i), 8));
    }
    std::vector<gf::Block> parity = gf::encode(m, data);
    // keep (cols - rows) random data symbols, use every parity
    std::vector<int> keep;
    while (static_cast<int>(keep.size()) < cols - rows) {
      int c = static_cast<int>(rnd(static_cast<std::uint64_t>(cols)));
      bool seen = false;
      for (int k : keep) seen = seen || k == c;
      if (!seen) keep.push_back(c);
    }
    std::vector<std::pair<std::vector<FieldElement>, gf::Block>> known;
    for (int c : keep) {
      std::vector<FieldElement> unit(static_cast<std::size_t>(cols), fe(0));
      unit[static_cast<std::size_t>(c)] = fe(1);
      known.push_back({unit, data[static_cast<std::size_t>(c)]});
    }
    for (int r = 0; r < rows; ++r) known.push_back({m.row(r), parity[static_cast<std::size_t>(r)]});
    CHECK(gf::solve(known) == data);
  }
}

}  // TEST_SUITE
