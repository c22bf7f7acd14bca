#pragma once

#include "crystensor/canonicalize.h"
#include "crystensor/dataset.h"
#include "crystensor/graph.h"
#include "crystensor/predictor.h"
#include "crystensor/symmetry_mask.h"
#include "crystensor/train.h"

#include <map>
#include <optional>
#include <string_view>
#include <vector>

namespace crystensor {

/// Frame in which the backbone sees the crystal. None feeds the raw lattice
/// to the backbone and returns its output unrotated.
enum class Canonicalization { Polar, QR, None };

std::string_view to_string(Canonicalization c);
Canonicalization canonicalization_from_string(std::string_view name);

struct PipelineOptions {
  Canonicalization canonicalization = Canonicalization::Polar;
  GraphOptions graph;
  RbfOptions rbf;
};

/// Backbone plus everything needed to turn a crystal into a prediction.
struct Pipeline {
  PredictorModel model;
  PipelineOptions options;
  AtomEmbeddingTable embedding = AtomEmbeddingTable::one_hot(92);
  // Masks for systems without a built-in table, keyed by crystal system.
  std::map<CrystalSystem, SymmetryMask> extra_masks;

  TensorKind kind() const { return model.config().kind; }
};

/// Featurized graph of the crystal in the frame selected by `c`, together
/// with the orthogonal matrix that maps that frame back to the input frame.
struct PreparedInput {
  CrystalGraph graph;
  OrthogonalMatrix q;
};

PreparedInput prepare(const Pipeline &p, const Crystal &crystal,
                      Canonicalization c);

/// Head output to Voigt form. Dielectric heads emit the upper triangle in the
/// order 11, 22, 33, 23, 13, 12; piezoelectric heads emit the 3x6 matrix row
/// by row; elastic heads emit the 6x6 matrix row by row and are symmetrized.
TensorProperty head_to_property(TensorKind kind, const Eigen::VectorXd &head);

/// Mask to use for a sample, or nullopt when masking is off or the system is
/// unknown. Throws MaskUnavailable when masking is on, the system is known and
/// neither a built-in nor a user mask exists.
std::optional<SymmetryMask> resolve_mask(const Pipeline &p,
                                         std::optional<CrystalSystem> system);

/// Head output -> rotate by q -> mask. Linear in the head output.
TensorProperty finalize(const Pipeline &p, const Eigen::VectorXd &head,
                        const OrthogonalMatrix &q,
                        const std::optional<SymmetryMask> &mask);

/// Matrix form of `finalize`: maps the head output to the row-major
/// flattened Voigt prediction.
Eigen::MatrixXd readout_matrix(const Pipeline &p, const OrthogonalMatrix &q,
                               const std::optional<SymmetryMask> &mask);

Eigen::VectorXd flatten(const TensorProperty &t);

/// h(M) with the pipeline's own canonicalization.
TensorProperty goectp_predict(const Pipeline &p, const Crystal &crystal,
                              std::optional<CrystalSystem> system = {});
TensorProperty predict_with(const Pipeline &p, const Crystal &crystal,
                            Canonicalization c,
                            std::optional<CrystalSystem> system = {});
/// Backbone on the raw lattice, no rotation and no mask.
TensorProperty raw_predict(const Pipeline &p, const Crystal &crystal);

std::vector<TensorProperty> predict_all(const Pipeline &p, const Dataset &data,
                                        Canonicalization c);

TrainingSample make_training_sample(const Pipeline &p, const Record &r);
std::vector<TrainingSample> make_training_samples(const Pipeline &p,
                                                  const Dataset &data);

/// Throws KindMismatch when a record's target kind differs from the model.
TrainHistory train_pipeline(Pipeline &p, const Dataset &train_set,
                            const Dataset &val_set, const TrainConfig &cfg);

} // namespace crystensor
