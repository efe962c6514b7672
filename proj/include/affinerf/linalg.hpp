#pragma once

#include "affinerf/dataset.hpp"
#include "affinerf/rng.hpp"

namespace affinerf::linalg {

/// Dimension of so(d) as a flat space: d(d-1)/2.
inline int so_dim(int d) { return d * (d - 1) / 2; }

/// Fill a d x d antisymmetric matrix from the flat coordinate vector z.
/// Entries go to the upper triangle row by row (A(0,1), A(0,2), ...,
/// A(d-2,d-1)); the lower triangle is the negated transpose, the diagonal
/// stays zero. This layout is the wire contract for candidate vectors.
Matrix pack_antisymmetric(const Vector& z, int d);

/// Inverse of pack_antisymmetric. Rejects inputs whose antisymmetry defect
/// exceeds tol.
Vector unpack_antisymmetric(const Matrix& A, double tol = 1e-12);

/// Matrix exponential by scaling-and-squaring with a degree-13 Pade
/// approximant. Accurate to ~1e-13 on the inputs used here (antisymmetric,
/// entries bounded by pi).
Matrix matrix_exp(const Matrix& A);

/// Haar-distributed rotation: QR of a standard-Gaussian matrix with the sign
/// of R's diagonal folded into Q, then one column flipped if det(Q) = -1.
Matrix random_rotation(int d, Rng& rng);

/// max |W^T W - I|
double orthogonality_error(const Matrix& W);

bool is_rotation(const Matrix& W, double orth_tol = 1e-10, double det_tol = 1e-8);

} // namespace affinerf::linalg
