#pragma once

#include "crystensor/crystal.h"

namespace crystensor {

enum class CanonicalMethod { Polar, QR };

/// L = q * h. For Polar, h is symmetric positive definite; for QR, h is upper
/// triangular with a strictly positive diagonal.
struct CanonicalDecomposition {
  OrthogonalMatrix q;
  Mat3 h;
  CanonicalMethod method = CanonicalMethod::Polar;
};

/// Polar factorization through the singular value decomposition
/// L = U S V^T:  Q = U V^T,  H = V S V^T. No determinant fix-up is applied,
/// so left-handed lattices yield an improper Q.
CanonicalDecomposition polar_decompose(const Mat3 &lattice);

/// Householder QR with the diagonal of R forced positive.
CanonicalDecomposition qr_decompose(const Mat3 &lattice);

CanonicalDecomposition decompose(const Mat3 &lattice, CanonicalMethod method);

/// Alternative canonical form q0 * h with registration q * q0^T.
CanonicalDecomposition recanonicalize(const CanonicalDecomposition &decomp,
                                      const OrthogonalMatrix &q0);

struct CanonicalForm {
  Crystal crystal;      // (A, F, H)
  OrthogonalMatrix q;   // act(q, crystal) reproduces the input
};

CanonicalForm canonical_form(const Crystal &crystal,
                             CanonicalMethod method = CanonicalMethod::Polar);

} // namespace crystensor
