#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "minaffine/cost.hpp"
#include "minaffine/measure.hpp"

namespace minaffine::cli {

enum class CostKind { Pieces, MinCoordinates, MultiPieces };

struct CostSpec {
  CostKind kind = CostKind::Pieces;
  std::vector<AffinePiece> pieces;       // two marginals
  std::vector<MultiAffinePiece> multi;   // m marginals
};

struct ProblemOptions {
  int max_order = 0;
  int restarts = 16;
  std::uint64_t seed = 0;
  double tolerance = 1e-12;
  int atoms = 300;
};

/// Parsed problem file. Empirical sample paths are resolved against the
/// directory of the problem file.
struct ProblemFile {
  std::vector<MeasureSpec> marginals;
  CostSpec cost;
  ProblemOptions options;

  std::vector<Measure1D> build_marginals() const;
  /// Two-marginal piece list; min-coordinates becomes {x, y}.
  MinAffineCost two_marginal_cost() const;
};

/// Throws InputError on schema violations.
ProblemFile parse_problem(const nlohmann::json& doc,
                          const std::filesystem::path& base_dir);
ProblemFile load_problem(const std::filesystem::path& path);

}  // namespace minaffine::cli
