#pragma once

#include "crystensor/crystal.h"

#include <map>
#include <string>
#include <vector>

namespace crystensor {

struct GraphOptions {
  int k_neighbors = 16;
  int max_offset_shells = 6;
  // Relative slack on the cutoff so that exact ties at R survive rounding
  // differences between equivalent lattices.
  double tie_tolerance = 1e-8;
};

struct RbfOptions {
  double c = 0.75;
  int count = 512;
  double lo = -4.0;
  double hi = 0.0;

  double spacing() const { return (hi - lo) / (count - 1); }
};

/// Directed edge from center atom i to the periodic image (j, offset).
/// vec = x_j + L offset - x_i.
struct Edge {
  int i = 0;
  int j = 0;
  Eigen::Vector3i offset = Eigen::Vector3i::Zero();
  Vec3 vec = Vec3::Zero();
  double length = 0.0;
};

struct CrystalGraph {
  int num_nodes = 0;
  double cutoff = 0.0;
  std::vector<Edge> edges;
  Eigen::MatrixXd node_feats; // n x d_node, empty until featurized
  Eigen::MatrixXd edge_feats; // E x rbf count, empty until featurized
};

/// Periodic multigraph with cutoff R equal to the largest per-atom distance
/// to the k-th nearest periodic neighbor. All images within R (inclusive of
/// ties) are enumerated; edges are ordered by (i, j, offset). Throws
/// NeighborSearchOverflow when the required offset range exceeds
/// `max_offset_shells`.
CrystalGraph build_graph(const Crystal &crystal, const GraphOptions &opts = {});

/// exp(-(-c/length - mu_m)^2 / (2 sigma^2)) over evenly spaced centers mu_m,
/// sigma = center spacing. Throws NonpositiveLength.
Eigen::VectorXd rbf_embed(double length, const RbfOptions &opts = {});

/// Atomic number -> feature vector (CGCNN atom_init layout by default).
class AtomEmbeddingTable {
public:
  AtomEmbeddingTable() = default;
  AtomEmbeddingTable(int dim, std::map<int, Eigen::VectorXd> rows);

  /// z -> e_{z-1} for z <= dim; heavier elements map to the zero vector.
  static AtomEmbeddingTable one_hot(int dim = 92);
  /// JSON object mapping atomic-number strings to equal-length arrays.
  static AtomEmbeddingTable load_json(const std::string &path);
  static AtomEmbeddingTable from_json(const std::string &text);

  int dim() const { return dim_; }
  bool is_one_hot() const { return one_hot_; }
  bool contains(int z) const;
  /// Throws UnknownSpecies.
  Eigen::VectorXd row(int z) const;
  const std::map<int, Eigen::VectorXd> &rows() const { return rows_; }

private:
  int dim_ = 92;
  bool one_hot_ = false;
  std::map<int, Eigen::VectorXd> rows_;
};

Eigen::MatrixXd embed_nodes(const Crystal &crystal,
                            const AtomEmbeddingTable &table);

/// Fills node_feats (via `table`) and edge_feats (RBF of edge lengths).
void featurize(CrystalGraph &graph, const Crystal &crystal,
               const AtomEmbeddingTable &table, const RbfOptions &rbf = {});

} // namespace crystensor
