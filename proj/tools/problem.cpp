#include "problem.hpp"

#include <fstream>

#include "minaffine/error.hpp"

namespace minaffine::cli {

using nlohmann::json;

namespace {

double number(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj[key].is_number())
    throw InputError(std::string("missing numeric field '") + key + "'");
  return obj[key].get<double>();
}

std::vector<double> numbers(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj[key].is_array())
    throw InputError(std::string("missing array field '") + key + "'");
  std::vector<double> out;
  for (const auto& v : obj[key]) {
    if (!v.is_number()) throw InputError(std::string("non-numeric entry in '") + key + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

MeasureSpec parse_marginal(const json& m, double default_truncation,
                           const std::filesystem::path& base_dir) {
  if (!m.is_object() || !m.contains("family") || !m["family"].is_string())
    throw InputError("each marginal needs a 'family'");
  MeasureSpec spec;
  spec.truncation = m.value("truncation", default_truncation);
  const std::string family = m["family"];
  if (family == "uniform") {
    spec.family = spec::Uniform{number(m, "a"), number(m, "b")};
  } else if (family == "triangular") {
    spec.family = spec::Triangular{number(m, "a"), number(m, "mode"), number(m, "b")};
  } else if (family == "piecewise") {
    spec.family = spec::PiecewiseDensity{numbers(m, "breaks"), numbers(m, "densities")};
  } else if (family == "gaussian") {
    spec.family = spec::Gaussian{number(m, "mean"), number(m, "sd")};
  } else if (family == "empirical") {
    if (m.contains("samples")) {
      spec.family = spec::Empirical{numbers(m, "samples")};
    } else if (m.contains("file") && m["file"].is_string()) {
      std::filesystem::path p = m["file"].get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      spec.family = spec::Empirical{read_samples(p)};
    } else {
      throw InputError("empirical marginal needs 'samples' or 'file'");
    }
  } else {
    throw InputError("unknown marginal family '" + family + "'");
  }
  return spec;
}

CostSpec parse_cost(const json& c, std::size_t marginals) {
  if (!c.is_object()) throw InputError("'cost' must be an object");
  CostSpec out;
  if (c.contains("type")) {
    if (c["type"] != "min-coordinates")
      throw InputError("unknown cost type; expected \"min-coordinates\"");
    out.kind = CostKind::MinCoordinates;
    return out;
  }
  if (!c.contains("pieces") || !c["pieces"].is_array() || c["pieces"].empty())
    throw InputError("'cost' needs a non-empty 'pieces' array or a 'type'");
  for (const auto& row : c["pieces"]) {
    if (!row.is_array()) throw InputError("each piece is an array of coefficients");
    std::vector<double> v;
    for (const auto& x : row) {
      if (!x.is_number()) throw InputError("piece coefficients must be numbers");
      v.push_back(x.get<double>());
    }
    if (marginals == 2 && v.size() == 3) {
      out.pieces.push_back({v[0], v[1], v[2]});
    } else if (v.size() == marginals + 1) {
      out.kind = CostKind::MultiPieces;
      out.multi.push_back({std::vector<double>(v.begin(), v.end() - 1), v.back()});
    } else {
      throw InputError("piece has " + std::to_string(v.size()) +
                       " coefficients; expected one per marginal plus an offset");
    }
  }
  return out;
}

}  // namespace

std::vector<Measure1D> ProblemFile::build_marginals() const {
  std::vector<Measure1D> out;
  for (const auto& s : marginals) out.push_back(build_measure(s));
  return out;
}

MinAffineCost ProblemFile::two_marginal_cost() const {
  if (cost.kind == CostKind::MinCoordinates) return MinAffineCost({{1, 0, 0}, {0, 1, 0}});
  if (cost.kind != CostKind::Pieces) throw InputError("cost is not a two-marginal piece list");
  return MinAffineCost(cost.pieces);
}

ProblemFile parse_problem(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw InputError("problem file must be a JSON object");
  if (!doc.contains("marginals") || !doc["marginals"].is_array() || doc["marginals"].empty())
    throw InputError("problem needs a non-empty 'marginals' array");
  if (!doc.contains("cost")) throw InputError("problem needs a 'cost'");
  ProblemFile p;
  const double truncation = doc.value("truncation", 1e-9);
  for (const auto& m : doc["marginals"])
    p.marginals.push_back(parse_marginal(m, truncation, base_dir));
  p.cost = parse_cost(doc["cost"], p.marginals.size());
  if (doc.contains("options")) {
    const json& o = doc["options"];
    if (!o.is_object()) throw InputError("'options' must be an object");
    p.options.max_order = o.value("max_order", p.options.max_order);
    p.options.restarts = o.value("restarts", p.options.restarts);
    p.options.seed = o.value("seed", p.options.seed);
    p.options.tolerance = o.value("tolerance", p.options.tolerance);
    p.options.atoms = o.value("atoms", p.options.atoms);
    if (p.options.max_order < 0 || p.options.restarts < 0 || p.options.atoms < 1 ||
        !(p.options.tolerance > 0.0))
      throw InputError("options out of range");
  }
  return p;
}

ProblemFile load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open problem file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  try {
    return parse_problem(doc, path.parent_path());
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace minaffine::cli
