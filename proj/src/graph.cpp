#include "crystensor/graph.h"

#include "crystensor/error.h"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace crystensor {

namespace {

// Per-axis offset bound for a sphere of radius r: |k_a| <= ceil(r ||row_a(L^-1)||).
Eigen::Vector3i offset_bounds(const Mat3 &inv_lattice, double r) {
  Eigen::Vector3i s;
  for (int a = 0; a < 3; ++a) {
    s(a) = static_cast<int>(std::ceil(r * inv_lattice.row(a).norm()));
  }
  return s;
}

// Largest per-atom distance to the k-th nearest image, using offsets within
// the box |k_a| <= s_a.
double kth_neighbor_radius(const CoordMatrix &cart, const Mat3 &lattice,
                           int k, const Eigen::Vector3i &s) {
  const int n = static_cast<int>(cart.rows());
  double radius = 0.0;
  std::vector<double> dists;
  for (int i = 0; i < n; ++i) {
    dists.clear();
    for (int j = 0; j < n; ++j) {
      for (int a = -s(0); a <= s(0); ++a) {
        for (int b = -s(1); b <= s(1); ++b) {
          for (int c = -s(2); c <= s(2); ++c) {
            if (i == j && a == 0 && b == 0 && c == 0) {
              continue;
            }
            const Vec3 shift = lattice * Vec3(a, b, c);
            const Vec3 v = cart.row(j).transpose() + shift - cart.row(i).transpose();
            const double d = v.norm();
            if (d > 0.0) {
              dists.push_back(d);
            }
          }
        }
      }
    }
    if (static_cast<int>(dists.size()) < k) {
      return std::numeric_limits<double>::infinity();
    }
    std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
    radius = std::max(radius, dists[k - 1]);
  }
  return radius;
}

} // namespace

CrystalGraph build_graph(const Crystal &crystal, const GraphOptions &opts) {
  if (opts.k_neighbors < 1) {
    throw Error(ErrorCode::InvalidArgument, "k_neighbors must be positive");
  }
  if (opts.max_offset_shells < 1) {
    throw Error(ErrorCode::InvalidArgument, "max_offset_shells must be positive");
  }
  const Mat3 &lattice = crystal.lattice;
  const Mat3 inv = lattice.inverse();
  const CoordMatrix cart = frac_to_cart(crystal);
  const int n = static_cast<int>(crystal.size());

  // Start from a sphere expected to hold about k atoms and grow it. A box
  // only ever overestimates the k-th distance, so once that estimate fits
  // inside the box it is exact.
  const double volume = std::abs(lattice.determinant());
  double probe = 1.2 * std::cbrt(3.0 * opts.k_neighbors * volume / (4.0 * M_PI * n));
  double radius = 0.0;
  for (;;) {
    const Eigen::Vector3i box =
        offset_bounds(inv, probe).cwiseMax(1).cwiseMin(opts.max_offset_shells);
    radius = kth_neighbor_radius(cart, lattice, opts.k_neighbors, box);
    int needed = opts.max_offset_shells + 1;
    if (std::isfinite(radius)) {
      const Eigen::Vector3i bound = offset_bounds(inv, radius);
      if ((bound.array() <= box.array()).all()) {
        break;
      }
      needed = bound.maxCoeff();
    }
    if ((box.array() == opts.max_offset_shells).all()) {
      throw Error(ErrorCode::NeighborSearchOverflow,
                  fmt::format("neighbor search for '{}' needs offset shell {} "
                              "(limit {})",
                              crystal.id, needed, opts.max_offset_shells));
    }
    probe *= 1.5;
  }

  const double cutoff = radius * (1.0 + opts.tie_tolerance);
  const Eigen::Vector3i bound = offset_bounds(inv, cutoff);
  if (bound.maxCoeff() > opts.max_offset_shells) {
    throw Error(ErrorCode::NeighborSearchOverflow,
                fmt::format("edge enumeration for '{}' needs offset shell {} "
                            "(limit {})",
                            crystal.id, bound.maxCoeff(),
                            opts.max_offset_shells));
  }

  CrystalGraph g;
  g.num_nodes = n;
  g.cutoff = radius;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int a = -bound(0); a <= bound(0); ++a) {
        for (int b = -bound(1); b <= bound(1); ++b) {
          for (int c = -bound(2); c <= bound(2); ++c) {
            if (i == j && a == 0 && b == 0 && c == 0) {
              continue;
            }
            const Vec3 shift = lattice * Vec3(a, b, c);
            const Vec3 v =
                cart.row(j).transpose() + shift - cart.row(i).transpose();
            const double d = v.norm();
            if (d > 0.0 && d <= cutoff) {
              g.edges.push_back(Edge{i, j, Eigen::Vector3i(a, b, c), v, d});
            }
          }
        }
      }
    }
  }
  return g;
}

Eigen::VectorXd rbf_embed(double length, const RbfOptions &opts) {
  if (!(length > 0.0)) {
    throw Error(ErrorCode::NonpositiveLength,
                fmt::format("edge length {} is not positive", length));
  }
  const double x = -opts.c / length;
  const double sigma = opts.spacing();
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  Eigen::VectorXd out(opts.count);
  for (int m = 0; m < opts.count; ++m) {
    const double mu = opts.lo + m * sigma;
    const double d = x - mu;
    out(m) = std::exp(-d * d * inv_two_var);
  }
  return out;
}

AtomEmbeddingTable::AtomEmbeddingTable(int dim,
                                       std::map<int, Eigen::VectorXd> rows)
    : dim_(dim), rows_(std::move(rows)) {
  for (const auto &[z, v] : rows_) {
    if (v.size() != dim_) {
      throw Error(ErrorCode::DimMismatch,
                  fmt::format("embedding for Z={} has {} entries, expected {}",
                              z, v.size(), dim_));
    }
  }
}

AtomEmbeddingTable AtomEmbeddingTable::one_hot(int dim) {
  AtomEmbeddingTable t;
  t.dim_ = dim;
  t.one_hot_ = true;
  return t;
}

AtomEmbeddingTable AtomEmbeddingTable::from_json(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw Error(ErrorCode::ParseError,
                fmt::format("atom embedding table: {}", e.what()));
  }
  if (!j.is_object() || j.empty()) {
    throw Error(ErrorCode::ParseError,
                "atom embedding table must be a non-empty JSON object");
  }
  std::map<int, Eigen::VectorXd> rows;
  int dim = -1;
  for (const auto &[key, value] : j.items()) {
    int z = 0;
    try {
      z = std::stoi(key);
    } catch (const std::exception &) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("atom embedding key '{}' is not an atomic number",
                              key));
    }
    const auto vec = value.get<std::vector<double>>();
    if (dim < 0) {
      dim = static_cast<int>(vec.size());
    }
    rows[z] = Eigen::Map<const Eigen::VectorXd>(vec.data(),
                                                static_cast<Eigen::Index>(vec.size()));
  }
  return AtomEmbeddingTable(dim, std::move(rows));
}

AtomEmbeddingTable AtomEmbeddingTable::load_json(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError,
                fmt::format("cannot open atom embedding file {}", path));
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

bool AtomEmbeddingTable::contains(int z) const {
  if (one_hot_) {
    return z >= 1 && z <= 118;
  }
  return rows_.count(z) != 0;
}

Eigen::VectorXd AtomEmbeddingTable::row(int z) const {
  if (one_hot_) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
    if (z >= 1 && z <= dim_) {
      v(z - 1) = 1.0;
    } else if (z < 1 || z > 118) {
      throw Error(ErrorCode::UnknownSpecies,
                  fmt::format("atomic number {} has no embedding", z));
    }
    return v;
  }
  const auto it = rows_.find(z);
  if (it == rows_.end()) {
    throw Error(ErrorCode::UnknownSpecies,
                fmt::format("atomic number {} has no embedding", z));
  }
  return it->second;
}

Eigen::MatrixXd embed_nodes(const Crystal &crystal,
                            const AtomEmbeddingTable &table) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(crystal.size()), table.dim());
  for (std::size_t i = 0; i < crystal.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = table.row(crystal.species[i]);
  }
  return out;
}

void featurize(CrystalGraph &graph, const Crystal &crystal,
               const AtomEmbeddingTable &table, const RbfOptions &rbf) {
  graph.node_feats = embed_nodes(crystal, table);
  graph.edge_feats.resize(static_cast<Eigen::Index>(graph.edges.size()),
                          rbf.count);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    graph.edge_feats.row(static_cast<Eigen::Index>(e)) =
        rbf_embed(graph.edges[e].length, rbf).transpose();
  }
}

} // namespace crystensor
