#include "codedshuffle/gf256.hpp"

#include <array>

namespace codedshuffle::gf {

namespace {

constexpr unsigned kPoly = 0x11D;

struct Tables {
  std::array<std::uint8_t, 256> exp{};  // exp[i] = alpha^i, i in [0,255); exp[255] unused
  std::array<std::uint8_t, 256> log{};  // log[alpha^i] = i; log[0] unused
};

constexpr Tables build_tables() {
  Tables t{};
  unsigned x = 1;
  for (int i = 0; i < 255; ++i) {
    t.exp[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(x);
    t.log[x] = static_cast<std::uint8_t>(i);
    x <<= 1;
    if (x & 0x100) x ^= kPoly;
  }
  return t;
}

constexpr Tables kTables = build_tables();

}  // namespace

FieldElement field_mul(FieldElement a, FieldElement b) {
  if (a.is_zero() || b.is_zero()) return FieldElement(0);
  int s = kTables.log[a.value()] + kTables.log[b.value()];
  if (s >= 255) s -= 255;
  return FieldElement(kTables.exp[static_cast<std::size_t>(s)]);
}

FieldElement field_inv(FieldElement a) {
  if (a.is_zero()) throw Error("multiplicative inverse of zero");
  int e = (255 - kTables.log[a.value()]) % 255;
  return FieldElement(kTables.exp[static_cast<std::size_t>(e)]);
}

FieldElement field_div(FieldElement a, FieldElement b) { return field_mul(a, field_inv(b)); }

MdsMatrix make_mds(int parity_rows, int data_cols) {
  if (parity_rows < 0 || data_cols < 0) throw ShapeMismatch("negative MDS shape");
  if (parity_rows + data_cols > 255) {
    throw SizeExceedsField("MDS shape " + std::to_string(parity_rows) + "+" +
                           std::to_string(data_cols) + " exceeds the 255-element budget of GF(256)");
  }
  MdsMatrix m;
  m.rows = parity_rows;
  m.cols = data_cols;
  m.entries.resize(static_cast<std::size_t>(parity_rows) * data_cols);
  for (int r = 0; r < parity_rows; ++r) {
    for (int c = 0; c < data_cols; ++c) {
      FieldElement x(static_cast<std::uint8_t>(r));
      FieldElement y(static_cast<std::uint8_t>(parity_rows + c));
      m.entries[static_cast<std::size_t>(r) * data_cols + c] = field_inv(x + y);
    }
  }
  return m;
}

void mul_add_into(Block& dst, FieldElement coeff, const Block& src) {
  if (coeff.is_zero()) return;
  if (dst.size() != src.size()) throw ShapeMismatch("block length mismatch");
  if (coeff == FieldElement(1)) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= src[i];
    return;
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] ^= field_mul(coeff, FieldElement(src[i])).value();
  }
}

std::vector<Block> encode(const MdsMatrix& matrix, const std::vector<Block>& data) {
  if (static_cast<int>(data.size()) != matrix.cols) {
    throw ShapeMismatch("encode expects " + std::to_string(matrix.cols) + " data blocks, got " +
                        std::to_string(data.size()));
  }
  std::size_t block_len = data.empty() ? 0 : data.front().size();
  for (const Block& b : data) {
    if (b.size() != block_len) throw ShapeMismatch("data blocks differ in length");
  }
  std::vector<Block> parity(static_cast<std::size_t>(matrix.rows), Block(block_len, 0));
  for (int r = 0; r < matrix.rows; ++r) {
    for (int c = 0; c < matrix.cols; ++c) {
      mul_add_into(parity[static_cast<std::size_t>(r)], matrix.at(r, c),
                   data[static_cast<std::size_t>(c)]);
    }
  }
  return parity;
}

std::vector<Block> solve(const std::vector<std::pair<std::vector<FieldElement>, Block>>& known) {
  if (known.empty()) return {};
  std::size_t n = known.front().first.size();
  if (known.size() != n) {
    throw ShapeMismatch("solve needs exactly " + std::to_string(n) + " equations, got " +
                        std::to_string(known.size()));
  }
  std::size_t block_len = known.front().second.size();
  std::vector<std::vector<FieldElement>> a;
  std::vector<Block> rhs;
  a.reserve(n);
  rhs.reserve(n);
  for (const auto& [row, block] : known) {
    if (row.size() != n) throw ShapeMismatch("coefficient rows differ in length");
    if (block.size() != block_len) throw ShapeMismatch("rhs blocks differ in length");
    a.push_back(row);
    rhs.push_back(block);
  }

  // Forward elimination with free pivot choice, then back substitution.
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && a[pivot][col].is_zero()) ++pivot;
    if (pivot == n) throw SingularSystem("dependent coefficient rows at column " + std::to_string(col));
    std::swap(a[pivot], a[col]);
    std::swap(rhs[pivot], rhs[col]);

    FieldElement inv = field_inv(a[col][col]);
    for (std::size_t c = col; c < n; ++c) a[col][c] = field_mul(a[col][c], inv);
    for (std::size_t i = 0; i < block_len; ++i) {
      rhs[col][i] = field_mul(inv, FieldElement(rhs[col][i])).value();
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      FieldElement f = a[r][col];
      if (f.is_zero()) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] = a[r][c] + field_mul(f, a[col][c]);
      mul_add_into(rhs[r], f, rhs[col]);
    }
  }
  for (std::size_t col = n; col-- > 0;) {
    for (std::size_t r = 0; r < col; ++r) {
      FieldElement f = a[r][col];
      if (f.is_zero()) continue;
      a[r][col] = FieldElement(0);
      mul_add_into(rhs[r], f, rhs[col]);
    }
  }
  return rhs;
}

}  // namespace codedshuffle::gf
