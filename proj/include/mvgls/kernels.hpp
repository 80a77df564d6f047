#pragma once

#include "mvgls/types.hpp"

namespace mvgls {

// Data-parallel building blocks. Each has an OpenMP implementation and a
// serial reference; the parallel versions assign every output entry to
// exactly one thread and use the same per-entry summation order, so the
// two are bit-identical for any thread count.

/// X^T X, column Gram matrix.
Matrix gram_cols(const Matrix& x);
Matrix gram_cols_serial(const Matrix& x);

/// X X^T, row Gram matrix.
Matrix gram_rows(const Matrix& x);
Matrix gram_rows_serial(const Matrix& x);

/// Symmetric square root of an SPD matrix via eigendecomposition.
/// Throws InvalidParameter if the input is not positive definite.
Matrix symmetric_sqrt(const Matrix& spd);

/// True when called from inside an active OpenMP parallel region.
bool in_parallel_region();

/// Number of worker threads the kernels would use (1 without OpenMP).
int max_threads();

/// Clamp the OpenMP thread count; 0 restores the hardware default.
void set_threads(int threads);

}  // namespace mvgls
