#include "crystensor/tensor.h"

#include "crystensor/error.h"

#include <cmath>
#include <fmt/format.h>

namespace crystensor {

int tensor_rank(TensorKind kind) {
  switch (kind) {
  case TensorKind::Dielectric:
    return 2;
  case TensorKind::Piezoelectric:
    return 3;
  case TensorKind::Elastic:
    return 4;
  }
  return 0;
}

int voigt_rows(TensorKind kind) { return kind == TensorKind::Elastic ? 6 : 3; }

int voigt_cols(TensorKind kind) {
  return kind == TensorKind::Dielectric ? 3 : 6;
}

std::string_view to_string(TensorKind kind) {
  switch (kind) {
  case TensorKind::Dielectric:
    return "dielectric";
  case TensorKind::Piezoelectric:
    return "piezoelectric";
  case TensorKind::Elastic:
    return "elastic";
  }
  return "unknown";
}

TensorKind tensor_kind_from_string(std::string_view name) {
  if (name == "dielectric") {
    return TensorKind::Dielectric;
  }
  if (name == "piezoelectric") {
    return TensorKind::Piezoelectric;
  }
  if (name == "elastic") {
    return TensorKind::Elastic;
  }
  throw Error(ErrorCode::InvalidArgument,
              fmt::format("unknown tensor kind '{}'", name));
}

std::string_view default_units(TensorKind kind) {
  switch (kind) {
  case TensorKind::Dielectric:
    return "unitless";
  case TensorKind::Piezoelectric:
    return "C/m^2";
  case TensorKind::Elastic:
    return "GPa";
  }
  return "";
}

TensorProperty TensorProperty::make(TensorKind kind, Eigen::MatrixXd voigt,
                                    double sym_tol) {
  if (voigt.rows() != voigt_rows(kind) || voigt.cols() != voigt_cols(kind)) {
    throw Error(ErrorCode::DimMismatch,
                fmt::format("{} property needs a {}x{} Voigt matrix, got {}x{}",
                            to_string(kind), voigt_rows(kind), voigt_cols(kind),
                            voigt.rows(), voigt.cols()));
  }
  if (kind != TensorKind::Piezoelectric) {
    const double asym = (voigt - voigt.transpose()).cwiseAbs().maxCoeff();
    if (!(asym <= sym_tol)) {
      throw Error(ErrorCode::SymmetryViolation,
                  fmt::format("{} Voigt matrix is not symmetric (max "
                              "asymmetry {:.3e})",
                              to_string(kind), asym));
    }
  }
  return TensorProperty{kind, std::move(voigt)};
}

TensorProperty TensorProperty::zero(TensorKind kind) {
  return TensorProperty{
      kind, Eigen::MatrixXd::Zero(voigt_rows(kind), voigt_cols(kind))};
}

FullTensor::FullTensor(int rank) : rank_(rank) {
  if (rank < 1 || rank > 4) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("unsupported tensor rank {}", rank));
  }
  std::size_t n = 1;
  for (int r = 0; r < rank; ++r) {
    n *= 3;
  }
  data_.assign(n, 0.0);
}

double FullTensor::frobenius_norm() const {
  double s = 0.0;
  for (double x : data_) {
    s += x * x;
  }
  return std::sqrt(s);
}

FullTensor FullTensor::from_matrix(const Mat3 &m) {
  FullTensor t(2);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      t(i, j) = m(i, j);
    }
  }
  return t;
}

Mat3 FullTensor::to_matrix() const {
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      m(i, j) = (*this)(i, j);
    }
  }
  return m;
}

double max_abs_diff(const FullTensor &a, const FullTensor &b) {
  if (a.rank() != b.rank()) {
    throw Error(ErrorCode::DimMismatch, "tensor ranks differ");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

Mat3 transform_rank2(const Mat3 &eps, const OrthogonalMatrix &q) {
  return q.matrix() * eps * q.matrix().transpose();
}

namespace {

// Contract Q into index `mode` of t: out[.., i, ..] = sum_j Q_ij t[.., j, ..].
void mode_product(const std::vector<double> &in, std::vector<double> &out,
                  const Mat3 &q, int rank, int mode) {
  int stride = 1;
  for (int r = mode + 1; r < rank; ++r) {
    stride *= 3;
  }
  const int block = stride * 3;
  const int n = static_cast<int>(in.size());
  for (int base = 0; base < n; base += block) {
    for (int inner = 0; inner < stride; ++inner) {
      const double t0 = in[base + inner];
      const double t1 = in[base + stride + inner];
      const double t2 = in[base + 2 * stride + inner];
      for (int i = 0; i < 3; ++i) {
        out[base + i * stride + inner] =
            q(i, 0) * t0 + q(i, 1) * t1 + q(i, 2) * t2;
      }
    }
  }
}

FullTensor transform_naive(const FullTensor &t, const Mat3 &q) {
  FullTensor out(t.rank());
  const int rank = t.rank();
  const int n = static_cast<int>(t.size());
  std::array<int, 4> oi{};
  std::array<int, 4> ii{};
  for (int a = 0; a < n; ++a) {
    for (int r = rank - 1, rem = a; r >= 0; --r, rem /= 3) {
      oi[r] = rem % 3;
    }
    double sum = 0.0;
    for (int b = 0; b < n; ++b) {
      for (int r = rank - 1, rem = b; r >= 0; --r, rem /= 3) {
        ii[r] = rem % 3;
      }
      double w = t.data()[b];
      for (int r = 0; r < rank; ++r) {
        w *= q(oi[r], ii[r]);
      }
      sum += w;
    }
    out.data()[a] = sum;
  }
  return out;
}

} // namespace

FullTensor transform(const FullTensor &t, const OrthogonalMatrix &q,
                     TransformPath path) {
  if (path == TransformPath::Naive) {
    return transform_naive(t, q.matrix());
  }
  std::vector<double> a = t.data();
  std::vector<double> b(a.size());
  for (int mode = 0; mode < t.rank(); ++mode) {
    mode_product(a, b, q.matrix(), t.rank(), mode);
    std::swap(a, b);
  }
  FullTensor out(t.rank());
  out.data() = std::move(a);
  return out;
}

FullTensor transform_rank3(const FullTensor &e, const OrthogonalMatrix &q,
                           TransformPath path) {
  if (e.rank() != 3) {
    throw Error(ErrorCode::DimMismatch, "expected a rank-3 tensor");
  }
  return transform(e, q, path);
}

FullTensor transform_rank4(const FullTensor &c, const OrthogonalMatrix &q,
                           TransformPath path) {
  if (c.rank() != 4) {
    throw Error(ErrorCode::DimMismatch, "expected a rank-4 tensor");
  }
  return transform(c, q, path);
}

int voigt_index(int i, int j) {
  if (i == j) {
    return i;
  }
  return 6 - i - j; // {1,2}->3, {0,2}->4, {0,1}->5
}

std::array<int, 2> voigt_pair(int v) {
  static constexpr std::array<std::array<int, 2>, 6> kPairs{
      {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {2, 0}, {0, 1}}};
  return kPairs.at(v);
}

TensorProperty voigt_encode(const FullTensor &t, double tol) {
  auto violation = [&](double dev, const char *what) {
    if (!(dev <= tol)) {
      throw Error(ErrorCode::SymmetryViolation,
                  fmt::format("{} symmetry broken by {:.3e}", what, dev));
    }
  };
  switch (t.rank()) {
  case 2: {
    Eigen::MatrixXd m = t.to_matrix();
    return TensorProperty{TensorKind::Dielectric, m};
  }
  case 3: {
    double dev = 0.0;
    Eigen::MatrixXd v(3, 6);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
          dev = std::max(dev, std::abs(t(i, j, k) - t(i, k, j)));
        }
      }
      for (int J = 0; J < 6; ++J) {
        const auto [j, k] = voigt_pair(J);
        v(i, J) = t(i, j, k);
      }
    }
    violation(dev, "piezoelectric jk");
    return TensorProperty{TensorKind::Piezoelectric, v};
  }
  case 4: {
    double dev = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
          for (int l = 0; l < 3; ++l) {
            const double x = t(i, j, k, l);
            dev = std::max(dev, std::abs(x - t(j, i, k, l)));
            dev = std::max(dev, std::abs(x - t(i, j, l, k)));
            dev = std::max(dev, std::abs(x - t(k, l, i, j)));
          }
        }
      }
    }
    violation(dev, "elastic minor/major");
    Eigen::MatrixXd v(6, 6);
    for (int I = 0; I < 6; ++I) {
      const auto [i, j] = voigt_pair(I);
      for (int J = 0; J < 6; ++J) {
        const auto [k, l] = voigt_pair(J);
        v(I, J) = t(i, j, k, l);
      }
    }
    // Rounding in the transforms can leave ~1e-16 asymmetry; the layout is
    // symmetric by definition.
    v = 0.5 * (v + v.transpose()).eval();
    return TensorProperty{TensorKind::Elastic, v};
  }
  default:
    throw Error(ErrorCode::DimMismatch,
                fmt::format("no Voigt form for rank {}", t.rank()));
  }
}

FullTensor voigt_decode(const TensorProperty &p) {
  if (p.voigt.rows() != voigt_rows(p.kind) ||
      p.voigt.cols() != voigt_cols(p.kind)) {
    throw Error(ErrorCode::DimMismatch, "Voigt matrix shape does not match kind");
  }
  FullTensor t(tensor_rank(p.kind));
  switch (p.kind) {
  case TensorKind::Dielectric:
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        t(i, j) = p.voigt(i, j);
      }
    }
    break;
  case TensorKind::Piezoelectric:
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
          t(i, j, k) = p.voigt(i, voigt_index(j, k));
        }
      }
    }
    break;
  case TensorKind::Elastic:
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
          for (int l = 0; l < 3; ++l) {
            t(i, j, k, l) = p.voigt(voigt_index(i, j), voigt_index(k, l));
          }
        }
      }
    }
    break;
  }
  return t;
}

TensorProperty transform_property(const TensorProperty &p,
                                  const OrthogonalMatrix &q) {
  if (p.kind == TensorKind::Dielectric) {
    Mat3 m = transform_rank2(p.voigt, q);
    return TensorProperty{p.kind, 0.5 * (m + m.transpose())};
  }
  return voigt_encode(transform(voigt_decode(p), q));
}

namespace {

void require_same_shape(const TensorProperty &a, const TensorProperty &b) {
  if (a.kind != b.kind || a.voigt.rows() != b.voigt.rows() ||
      a.voigt.cols() != b.voigt.cols()) {
    throw Error(ErrorCode::KindMismatch,
                fmt::format("cannot compare {} with {}", to_string(a.kind),
                            to_string(b.kind)));
  }
}

} // namespace

double fnorm_error(const TensorProperty &pred, const TensorProperty &label) {
  require_same_shape(pred, label);
  return (pred.voigt - label.voigt).norm();
}

double relative_error(const TensorProperty &pred, const TensorProperty &label) {
  require_same_shape(pred, label);
  const double denom = label.voigt.norm();
  if (denom == 0.0) {
    throw Error(ErrorCode::ZeroLabelNorm, "label has zero Frobenius norm");
  }
  return (pred.voigt - label.voigt).norm() / denom;
}

namespace {

// The ratio itself carries rounding error, so a sample sitting exactly on a
// threshold (pred = 1.1 label, t = 0.1) must not be lost to the last ulp.
constexpr double kEwtSlack = 1e-12;

bool within(double ratio, double threshold) {
  return ratio <= threshold * (1.0 + kEwtSlack);
}

} // namespace

bool ewt(const TensorProperty &pred, const TensorProperty &label,
         double threshold) {
  return within(relative_error(pred, label), threshold);
}

MetricSummary summarize(const std::vector<TensorProperty> &preds,
                        const std::vector<TensorProperty> &labels) {
  if (preds.size() != labels.size()) {
    throw Error(ErrorCode::DimMismatch,
                fmt::format("{} predictions for {} labels", preds.size(),
                            labels.size()));
  }
  MetricSummary s;
  s.count = preds.size();
  if (preds.empty()) {
    return s;
  }
  std::size_t rated = 0;
  std::size_t hit25 = 0;
  std::size_t hit10 = 0;
  std::size_t hit5 = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    total += fnorm_error(preds[i], labels[i]);
    if (labels[i].voigt.norm() == 0.0) {
      continue;
    }
    const double r = relative_error(preds[i], labels[i]);
    ++rated;
    hit25 += within(r, 0.25);
    hit10 += within(r, 0.10);
    hit5 += within(r, 0.05);
  }
  s.fnorm_mean = total / static_cast<double>(preds.size());
  if (rated > 0) {
    s.ewt25 = static_cast<double>(hit25) / static_cast<double>(rated);
    s.ewt10 = static_cast<double>(hit10) / static_cast<double>(rated);
    s.ewt5 = static_cast<double>(hit5) / static_cast<double>(rated);
  }
  return s;
}

LabelStatistics label_statistics(const std::vector<TensorProperty> &labels) {
  LabelStatistics st;
  if (labels.empty()) {
    return st;
  }
  double sum = 0.0;
  for (const auto &l : labels) {
    sum += l.voigt.norm();
  }
  st.fnorm_mean = sum / static_cast<double>(labels.size());
  double var = 0.0;
  for (const auto &l : labels) {
    const double d = l.voigt.norm() - st.fnorm_mean;
    var += d * d;
  }
  st.fnorm_std = std::sqrt(var / static_cast<double>(labels.size()));
  return st;
}

} // namespace crystensor
