#pragma once

#include <cstdint>
#include <vector>

#include "ivimpute/matrix.hpp"

namespace ivimpute {

// Outcome, partially missing endogenous regressor, and instruments.
// Missingness is a per-entry flag rather than a NaN sentinel; NaN tokens
// are translated at the CSV boundary only.
struct IVDataset {
  Vector y;                             // length n
  Vector x;                             // length n; entries with the flag set
                                        // are normalized to 0 by validate()
  std::vector<std::uint8_t> x_missing;  // length n, 1 = missing
  Matrix Z;                             // n x L instruments

  std::size_t n() const { return y.size(); }
  std::size_t L() const { return Z.cols(); }
  std::size_t missing_count() const;
};

// Returns the dataset with missing-entry payloads normalized to zero, or
// throws ValidationError naming the first violated invariant and row.
IVDataset validate(IVDataset raw);

// Complete/incomplete partition induced by the missingness mask. Within
// each block the original row order is preserved; original_index maps
// positions in (complete rows, then incomplete rows) back to source rows.
struct SplitDataset {
  Vector y0, x0;
  Matrix Z0;
  Vector y1;
  Matrix Z1;
  std::vector<std::size_t> original_index;
  double p_hat = 0.0;  // n1 / n

  std::size_t n0() const { return y0.size(); }
  std::size_t n1() const { return y1.size(); }
  std::size_t n() const { return n0() + n1(); }
  std::size_t L() const { return Z0.cols(); }
};

// Throws EstimationError when there are no complete cases.
SplitDataset split(const IVDataset& d);

// Inverse of split: reassembles the source dataset in original row order
// (missing x entries come back as flagged zeros, as validate() leaves them).
IVDataset merge(const SplitDataset& s);

// Dataset with the missing x entries filled by the complete-case
// first-stage fit, in original row order.
struct ImputedDataset {
  Vector y;
  Vector x_tilde;
  Matrix Z;
  std::vector<std::uint8_t> imputed_flag;
  Vector pi_cc;

  std::size_t n() const { return y.size(); }
  std::size_t L() const { return Z.cols(); }
};

// Complete-case least squares of x0 on Z0 (orthogonalization-based), then
// x_tilde_i = Z_i'pi_cc on the incomplete rows. Observed rows are copied
// bit-identically. Throws EstimationError on n0 < L or rank deficiency.
ImputedDataset impute(const SplitDataset& s);

}  // namespace ivimpute
