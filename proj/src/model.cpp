#include "ivimpute/model.hpp"

#include <cmath>
#include <string>

#include "ivimpute/errors.hpp"
#include "ivimpute/linalg.hpp"

namespace ivimpute {

std::size_t IVDataset::missing_count() const {
  std::size_t c = 0;
  for (auto f : x_missing) c += (f != 0);
  return c;
}

IVDataset validate(IVDataset raw) {
  const std::size_t n = raw.y.size();
  if (n < 1) throw ValidationError("dataset is empty (n = 0)");
  if (raw.Z.cols() < 1) throw ValidationError("no instrument columns (L = 0)");
  if (raw.x.size() != n)
    throw ValidationError("length mismatch: x has " +
                          std::to_string(raw.x.size()) + " rows, y has " +
                          std::to_string(n));
  if (raw.x_missing.size() != n)
    throw ValidationError("length mismatch: missing mask has " +
                          std::to_string(raw.x_missing.size()) +
                          " rows, y has " + std::to_string(n));
  if (raw.Z.rows() != n)
    throw ValidationError("length mismatch: Z has " +
                          std::to_string(raw.Z.rows()) + " rows, y has " +
                          std::to_string(n));

  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(raw.y[i]))
      throw ValidationError("non-finite y at row " + std::to_string(i + 1));
    if (raw.x_missing[i] == 0 && !std::isfinite(raw.x[i]))
      throw ValidationError("non-finite x at row " + std::to_string(i + 1));
    for (std::size_t j = 0; j < raw.Z.cols(); ++j) {
      if (!std::isfinite(raw.Z(i, j)))
        throw ValidationError("non-finite instrument at row " +
                              std::to_string(i + 1) + ", column " +
                              std::to_string(j + 1));
    }
    if (raw.x_missing[i] != 0) raw.x[i] = 0.0;  // normalize the payload
  }
  return raw;
}

SplitDataset split(const IVDataset& d) {
  const std::size_t n = d.n();
  const std::size_t L = d.L();
  std::size_t n1 = d.missing_count();
  std::size_t n0 = n - n1;
  if (n0 == 0)
    throw EstimationError("no complete cases: every x entry is missing");

  SplitDataset s;
  s.y0.reserve(n0);
  s.x0.reserve(n0);
  s.y1.reserve(n1);
  s.Z0 = Matrix(n0, L);
  s.Z1 = Matrix(n1, L);
  s.original_index.reserve(n);

  std::vector<std::size_t> incomplete_rows;
  incomplete_rows.reserve(n1);
  std::size_t r0 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d.x_missing[i] == 0) {
      s.y0.push_back(d.y[i]);
      s.x0.push_back(d.x[i]);
      for (std::size_t j = 0; j < L; ++j) s.Z0(r0, j) = d.Z(i, j);
      s.original_index.push_back(i);
      ++r0;
    } else {
      incomplete_rows.push_back(i);
    }
  }
  for (std::size_t r1 = 0; r1 < incomplete_rows.size(); ++r1) {
    const std::size_t i = incomplete_rows[r1];
    s.y1.push_back(d.y[i]);
    for (std::size_t j = 0; j < L; ++j) s.Z1(r1, j) = d.Z(i, j);
    s.original_index.push_back(i);
  }
  s.p_hat = static_cast<double>(n1) / static_cast<double>(n);
  return s;
}

IVDataset merge(const SplitDataset& s) {
  const std::size_t n = s.n();
  const std::size_t n0 = s.n0();
  const std::size_t L = s.L();
  IVDataset d;
  d.y.assign(n, 0.0);
  d.x.assign(n, 0.0);
  d.x_missing.assign(n, 0);
  d.Z = Matrix(n, L);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = s.original_index[r];
    if (r < n0) {
      d.y[i] = s.y0[r];
      d.x[i] = s.x0[r];
      for (std::size_t j = 0; j < L; ++j) d.Z(i, j) = s.Z0(r, j);
    } else {
      d.y[i] = s.y1[r - n0];
      d.x_missing[i] = 1;
      for (std::size_t j = 0; j < L; ++j) d.Z(i, j) = s.Z1(r - n0, j);
    }
  }
  return d;
}

ImputedDataset impute(const SplitDataset& s) {
  const std::size_t n0 = s.n0();
  const std::size_t n1 = s.n1();
  const std::size_t n = s.n();
  const std::size_t L = s.L();
  if (n0 < L)
    throw EstimationError("too few complete cases for imputation: n0 = " +
                          std::to_string(n0) + " < L = " + std::to_string(L));

  QRPivoted qr(s.Z0);
  if (qr.rank_ratio() < kRankRatioTol)
    throw EstimationError("rank-deficient complete-case instrument matrix");
  const Vector pi_cc = qr.solve(s.x0);

  ImputedDataset imp;
  imp.y.assign(n, 0.0);
  imp.x_tilde.assign(n, 0.0);
  imp.imputed_flag.assign(n, 0);
  imp.Z = Matrix(n, L);
  imp.pi_cc = pi_cc;
  for (std::size_t r = 0; r < n0; ++r) {
    const std::size_t i = s.original_index[r];
    imp.y[i] = s.y0[r];
    imp.x_tilde[i] = s.x0[r];
    for (std::size_t j = 0; j < L; ++j) imp.Z(i, j) = s.Z0(r, j);
  }
  for (std::size_t r = 0; r < n1; ++r) {
    const std::size_t i = s.original_index[n0 + r];
    imp.y[i] = s.y1[r];
    imp.imputed_flag[i] = 1;
    for (std::size_t j = 0; j < L; ++j) imp.Z(i, j) = s.Z1(r, j);
    // row_dot on the reassembled Z keeps this bit-identical with the
    // residual recomputation in the variance module.
    imp.x_tilde[i] = row_dot(imp.Z, i, pi_cc);
  }
  return imp;
}

}  // namespace ivimpute
