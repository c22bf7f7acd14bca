#pragma once

#include "crystensor/crystal.h"
#include "crystensor/symmetry_mask.h"
#include "crystensor/tensor.h"

#include <array>
#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

namespace crystensor {

inline constexpr const char *kDatasetSchema = "crystensor/1";

/// One line of a dataset file.
struct Record {
  Crystal crystal;
  TensorProperty target;
  std::string units;
  std::optional<CrystalSystem> crystal_system;
};

using Dataset = std::vector<Record>;

struct LoadResult {
  Dataset records;
  std::vector<std::string> warnings;
};

/// JSON-Lines record:
///   {"schema": "crystensor/1", "id": "...",
///    "lattice": [[...],[...],[...]],      // rows are lattice vectors (A)
///    "frac_coords": [[f1,f2,f3], ...], "atomic_numbers": [...],
///    "target": {"kind": "dielectric", "voigt": [[...]], "units": "unitless"},
///    "crystal_system": "cubic"}            // optional
/// Fractional coordinates are wrapped into [0,1); dielectric and elastic
/// targets must be symmetric within 1e-6 and are symmetrized on load.
/// Throws ValidationError naming the record id.
Record record_from_json(const nlohmann::json &j);
nlohmann::json record_to_json(const Record &r);

/// Throws ParseError (with the 1-based line number) or ValidationError.
/// Blank lines are skipped; an empty file yields an empty dataset and a
/// warning. Units differing from the standard ones produce warnings.
LoadResult load_dataset(const std::string &path);
LoadResult parse_dataset(std::istream &in);
void save_dataset(const std::string &path, const Dataset &data);

struct Split {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Seeded shuffle followed by contiguous slicing: round(r0 N) training and
/// round(r1 N) validation records, the remainder for testing. Ratios must be
/// non-negative and sum to 1.
Split split(const Dataset &data, const std::array<double, 3> &ratios,
            std::uint64_t seed);

std::vector<TensorProperty> targets(const Dataset &data);

} // namespace crystensor
