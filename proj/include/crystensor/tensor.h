#pragma once

#include "crystensor/crystal.h"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace crystensor {

enum class TensorKind { Dielectric, Piezoelectric, Elastic };

int tensor_rank(TensorKind kind);
int voigt_rows(TensorKind kind);
int voigt_cols(TensorKind kind);
std::string_view to_string(TensorKind kind);
TensorKind tensor_kind_from_string(std::string_view name);
/// Units as recorded in the datasets: unitless, C/m^2, GPa.
std::string_view default_units(TensorKind kind);

/// A property in Voigt form: 3x3 (dielectric), 3x6 (piezoelectric) or 6x6
/// (elastic). Dielectric and elastic matrices are symmetric.
struct TensorProperty {
  TensorKind kind = TensorKind::Dielectric;
  Eigen::MatrixXd voigt;

  /// Checks shape and symmetry (within `sym_tol`); throws DimMismatch or
  /// SymmetryViolation.
  static TensorProperty make(TensorKind kind, Eigen::MatrixXd voigt,
                             double sym_tol = 1e-12);
  static TensorProperty zero(TensorKind kind);
};

/// Dense Cartesian tensor with 3^rank entries, last index fastest.
class FullTensor {
public:
  explicit FullTensor(int rank);

  int rank() const { return rank_; }
  std::size_t size() const { return data_.size(); }
  const std::vector<double> &data() const { return data_; }
  std::vector<double> &data() { return data_; }

  double &operator()(int i, int j) { return data_[i * 3 + j]; }
  double operator()(int i, int j) const { return data_[i * 3 + j]; }
  double &operator()(int i, int j, int k) { return data_[(i * 3 + j) * 3 + k]; }
  double operator()(int i, int j, int k) const {
    return data_[(i * 3 + j) * 3 + k];
  }
  double &operator()(int i, int j, int k, int l) {
    return data_[((i * 3 + j) * 3 + k) * 3 + l];
  }
  double operator()(int i, int j, int k, int l) const {
    return data_[((i * 3 + j) * 3 + k) * 3 + l];
  }

  double frobenius_norm() const;
  static FullTensor from_matrix(const Mat3 &m);
  Mat3 to_matrix() const;

private:
  int rank_;
  std::vector<double> data_;
};

double max_abs_diff(const FullTensor &a, const FullTensor &b);

/// Q eps Q^T
Mat3 transform_rank2(const Mat3 &eps, const OrthogonalMatrix &q);

enum class TransformPath {
  Factored, // one mode product per index, 3^(rank+1) flops each
  Naive,    // full nested summation, 3^(2 rank) flops
};

/// t'_{i1..ir} = sum Q_{i1 j1} ... Q_{ir jr} t_{j1..jr}
FullTensor transform(const FullTensor &t, const OrthogonalMatrix &q,
                     TransformPath path = TransformPath::Factored);
FullTensor transform_rank3(const FullTensor &e, const OrthogonalMatrix &q,
                           TransformPath path = TransformPath::Factored);
FullTensor transform_rank4(const FullTensor &c, const OrthogonalMatrix &q,
                           TransformPath path = TransformPath::Factored);

/// Voigt pair index for a symmetric index pair (0-based):
/// 00->0, 11->1, 22->2, 12/21->3, 02/20->4, 01/10->5.
int voigt_index(int i, int j);
/// Inverse of voigt_index, returning the canonical (i <= j order not
/// implied) pair used by the layout: 0->(0,0), 3->(1,2), 4->(2,0), 5->(0,1).
std::array<int, 2> voigt_pair(int v);

/// Pure index relabeling, no shear factors. Rank 2 passes through as a
/// dielectric property. Throws SymmetryViolation if the required index
/// symmetries are broken by more than `tol`.
TensorProperty voigt_encode(const FullTensor &t, double tol = 1e-9);
FullTensor voigt_decode(const TensorProperty &p);

/// decode -> transform -> encode
TensorProperty transform_property(const TensorProperty &p,
                                  const OrthogonalMatrix &q);

/// ||pred - label||_F over the Voigt matrix.
double fnorm_error(const TensorProperty &pred, const TensorProperty &label);
/// ||pred - label||_F / ||label||_F
double relative_error(const TensorProperty &pred, const TensorProperty &label);
/// Inclusive threshold: true iff relative_error <= threshold, with a 1e-12
/// relative allowance for rounding in the ratio. Throws ZeroLabelNorm when
/// the label is the zero tensor.
bool ewt(const TensorProperty &pred, const TensorProperty &label,
         double threshold);

struct MetricSummary {
  std::size_t count = 0;
  double fnorm_mean = 0.0;
  double ewt25 = 0.0; // fraction in [0,1]
  double ewt10 = 0.0;
  double ewt5 = 0.0;
};

/// Mean per-sample Frobenius error and EwT fractions, reduced in sample
/// order. Samples with a zero label are counted for Fnorm but skipped for
/// EwT.
MetricSummary summarize(const std::vector<TensorProperty> &preds,
                        const std::vector<TensorProperty> &labels);

/// Mean and population standard deviation of ||label||_F.
struct LabelStatistics {
  double fnorm_mean = 0.0;
  double fnorm_std = 0.0;
};
LabelStatistics label_statistics(const std::vector<TensorProperty> &labels);

} // namespace crystensor
