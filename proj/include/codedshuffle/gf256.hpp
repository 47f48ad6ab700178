#pragma once

// Arithmetic in GF(2^8) with the primitive polynomial
//     x^8 + x^4 + x^3 + x^2 + 1   (0x11D)
// plus Cauchy-construction MDS coefficient matrices and a block-wise
// Gaussian solver. Addition is XOR; multiplication goes through log/exp
// tables with generator alpha = 2.

#include <cstdint>
#include <utility>
#include <vector>

#include "codedshuffle/errors.hpp"

namespace codedshuffle::gf {

class FieldElement {
 public:
  constexpr FieldElement() = default;
  constexpr explicit FieldElement(std::uint8_t value) : value_(value) {}

  constexpr std::uint8_t value() const { return value_; }
  constexpr bool is_zero() const { return value_ == 0; }

  friend constexpr bool operator==(FieldElement a, FieldElement b) {
    return a.value_ == b.value_;
  }
  friend constexpr bool operator!=(FieldElement a, FieldElement b) { return !(a == b); }
  friend constexpr FieldElement operator+(FieldElement a, FieldElement b) {
    return FieldElement(a.value_ ^ b.value_);
  }

 private:
  std::uint8_t value_ = 0;
};

FieldElement field_mul(FieldElement a, FieldElement b);
FieldElement field_inv(FieldElement a);  // throws Error on zero
FieldElement field_div(FieldElement a, FieldElement b);

inline FieldElement operator*(FieldElement a, FieldElement b) { return field_mul(a, b); }

// Parity-coefficient matrix of a systematic MDS code. Entries come from a
// Cauchy construction, so every square submatrix is invertible and any
// data_cols-sized mix of unit rows and parity rows can be solved.
struct MdsMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<FieldElement> entries;  // row-major, rows*cols

  FieldElement at(int r, int c) const { return entries[static_cast<std::size_t>(r) * cols + c]; }
  std::vector<FieldElement> row(int r) const {
    return {entries.begin() + static_cast<std::ptrdiff_t>(r) * cols,
            entries.begin() + static_cast<std::ptrdiff_t>(r + 1) * cols};
  }
};

// Cauchy matrix over GF(256): entry(r,c) = 1 / (x_r + y_c) with
// x_r = r and y_c = parity_rows + c, all distinct.
MdsMatrix make_mds(int parity_rows, int data_cols);

using Block = std::vector<std::uint8_t>;

// parity[j] = sum_i matrix(j,i) * data[i], applied bytewise.
std::vector<Block> encode(const MdsMatrix& matrix, const std::vector<Block>& data);

// Solves a square block system: each entry is (coefficient row, rhs block).
// Requires exactly as many equations as unknowns; throws SingularSystem if
// the coefficient rows are dependent.
std::vector<Block> solve(const std::vector<std::pair<std::vector<FieldElement>, Block>>& known);

// dst ^= coeff * src, bytewise. No-op for coeff == 0.
void mul_add_into(Block& dst, FieldElement coeff, const Block& src);

}  // namespace codedshuffle::gf
