#include "crystensor/dataset.h"

#include "crystensor/error.h"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>

namespace crystensor {

namespace {

using json = nlohmann::json;

Eigen::MatrixXd matrix_from_json(const json &j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) {
    return {};
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) {
      throw Error(ErrorCode::DimMismatch, "ragged matrix");
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd &m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(m(r, c));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace

Record record_from_json(const json &j) {
  std::string id = "<unknown>";
  try {
    id = j.at("id").get<std::string>();
    if (j.contains("schema") && j.at("schema").get<std::string>() != kDatasetSchema) {
      throw Error(ErrorCode::ValidationError,
                  fmt::format("unsupported schema '{}'",
                              j.at("schema").get<std::string>()));
    }
    const Eigen::MatrixXd lattice_rows = matrix_from_json(j.at("lattice"));
    if (lattice_rows.rows() != 3 || lattice_rows.cols() != 3) {
      throw Error(ErrorCode::DimMismatch, "lattice must be 3x3");
    }
    const Eigen::MatrixXd frac = matrix_from_json(j.at("frac_coords"));
    auto species = j.at("atomic_numbers").get<std::vector<int>>();
    if (frac.rows() > 0 && frac.cols() != 3) {
      throw Error(ErrorCode::DimMismatch, "frac_coords must have 3 columns");
    }
    CoordMatrix coords(frac.rows(), 3);
    if (frac.rows() > 0) {
      coords = frac;
    }
    Crystal crystal = Crystal::make(id, std::move(species), coords,
                                    lattice_rows.transpose());

    const json &t = j.at("target");
    const TensorKind kind = tensor_kind_from_string(t.at("kind").get<std::string>());
    Eigen::MatrixXd voigt = matrix_from_json(t.at("voigt"));
    if (voigt.rows() != voigt_rows(kind) || voigt.cols() != voigt_cols(kind)) {
      throw Error(ErrorCode::DimMismatch,
                  fmt::format("{} target must be {}x{}", to_string(kind),
                              voigt_rows(kind), voigt_cols(kind)));
    }
    if (kind != TensorKind::Piezoelectric) {
      TensorProperty::make(kind, voigt, 1e-6);
      voigt = 0.5 * (voigt + voigt.transpose()).eval();
    }
    Record r{std::move(crystal), TensorProperty{kind, std::move(voigt)},
             t.value("units", std::string(default_units(kind))), std::nullopt};
    if (j.contains("crystal_system") && !j.at("crystal_system").is_null()) {
      r.crystal_system =
          crystal_system_from_string(j.at("crystal_system").get<std::string>());
    }
    return r;
  } catch (const Error &e) {
    if (e.code() == ErrorCode::ValidationError) {
      throw;
    }
    throw Error(ErrorCode::ValidationError,
                fmt::format("record '{}': {}", id, e.what()));
  } catch (const json::exception &e) {
    throw Error(ErrorCode::ValidationError,
                fmt::format("record '{}': {}", id, e.what()));
  }
}

json record_to_json(const Record &r) {
  json j;
  j["schema"] = kDatasetSchema;
  j["id"] = r.crystal.id;
  j["lattice"] = matrix_to_json(r.crystal.lattice.transpose());
  j["frac_coords"] = matrix_to_json(r.crystal.frac_coords);
  j["atomic_numbers"] = r.crystal.species;
  j["target"] = {{"kind", to_string(r.target.kind)},
                 {"voigt", matrix_to_json(r.target.voigt)},
                 {"units", r.units}};
  if (r.crystal_system) {
    j["crystal_system"] = to_string(*r.crystal_system);
  }
  return j;
}

LoadResult parse_dataset(std::istream &in) {
  LoadResult out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char ch) { return std::isspace(ch); })) {
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error &e) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("line {}: {}", line_no, e.what()));
    }
    Record r = record_from_json(j);
    if (r.units != default_units(r.target.kind)) {
      out.warnings.push_back(fmt::format(
          "line {}: record '{}' has units '{}', expected '{}' for {}", line_no,
          r.crystal.id, r.units, default_units(r.target.kind),
          to_string(r.target.kind)));
    }
    out.records.push_back(std::move(r));
  }
  if (out.records.empty()) {
    out.warnings.emplace_back("dataset is empty");
  }
  return out;
}

LoadResult load_dataset(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, fmt::format("cannot open dataset {}", path));
  }
  return parse_dataset(in);
}

void save_dataset(const std::string &path, const Dataset &data) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::IoError, fmt::format("cannot write dataset {}", path));
  }
  for (const auto &r : data) {
    out << record_to_json(r).dump() << '\n';
  }
}

Split split(const Dataset &data, const std::array<double, 3> &ratios,
            std::uint64_t seed) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::any_of(ratios.begin(), ratios.end(), [](double r) { return r < 0.0; }) ||
      std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("split ratios must be non-negative and sum to 1 "
                            "(got {}, {}, {})",
                            ratios[0], ratios[1], ratios[2]));
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n = static_cast<double>(data.size());
  const auto n_train = std::min<std::size_t>(
      data.size(), static_cast<std::size_t>(std::llround(ratios[0] * n)));
  const auto n_val = std::min<std::size_t>(
      data.size() - n_train, static_cast<std::size_t>(std::llround(ratios[1] * n)));
  Split s;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Record &r = data[order[k]];
    if (k < n_train) {
      s.train.push_back(r);
    } else if (k < n_train + n_val) {
      s.val.push_back(r);
    } else {
      s.test.push_back(r);
    }
  }
  return s;
}

std::vector<TensorProperty> targets(const Dataset &data) {
  std::vector<TensorProperty> out;
  out.reserve(data.size());
  for (const auto &r : data) {
    out.push_back(r.target);
  }
  return out;
}

} // namespace crystensor
