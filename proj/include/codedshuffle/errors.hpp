#pragma once

#include <stdexcept>
#include <string>

namespace codedshuffle {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A scheme or CLI configuration violates its own constraints.
class InvalidConfig : public Error {
 public:
  using Error::Error;
};

// Batches overlap, have the wrong size, or leave gaps.
class InvalidPartition : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Point dimension is not divisible by the scheme's fragment count.
class DivisibilityError : public Error {
 public:
  using Error::Error;
};

// A worker is missing a fragment the placement says it must hold.
class StructureViolation : public Error {
 public:
  using Error::Error;
};

class DecodeFailure : public Error {
 public:
  using Error::Error;
};

// Requested code larger than GF(256) supports.
class SizeExceedsField : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

// The aligned schemes only accept batch-derangement shuffles.
class UnsupportedShuffle : public Error {
 public:
  using Error::Error;
};

class SliceMismatch : public Error {
 public:
  using Error::Error;
};

class ExhaustiveTooLarge : public Error {
 public:
  using Error::Error;
};

class InfeasibleAllocation : public Error {
 public:
  using Error::Error;
};

}  // namespace codedshuffle
