#include <fstream>
#include <set>
#include <sstream>

#include "critmat/ensemble.hpp"
#include "json.hpp"

namespace critmat {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw SpecError(where + ": unknown field '" + it.key() + "'");
    }
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SpecError(where + ": missing field '" + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw SpecError(where + ": expected a number");
  return v.get<double>();
}

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) throw SpecError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::pair<double, double> range(const json& v, const std::string& where) {
  const auto r = numbers(v, where);
  if (r.size() != 2) throw SpecError(where + ": expected [lo, hi]");
  return {r[0], r[1]};
}

std::string line_of(std::string_view text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(end), '\n');
  return "line " + std::to_string(line);
}

}  // namespace

EnsembleSpec parse_ensemble_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SpecError(line_of(text, e.byte) + ": malformed JSON (" + e.what() + ")");
  }
  if (!doc.is_object()) throw SpecError("spec: top level must be an object");
  reject_unknown(doc, {"dim", "delta", "scale", "atoms", "generator"}, "spec");

  const double dim_raw = number(require(doc, "dim", "spec"), "dim");
  if (dim_raw != std::floor(dim_raw) || dim_raw < kMinDim || dim_raw > kMaxDim) {
    throw SpecError("dim: must be an integer in [2, 64]");
  }
  const auto dim = static_cast<std::size_t>(dim_raw);
  const double delta = number(require(doc, "delta", "spec"), "delta");
  const double scale = doc.contains("scale") ? number(doc["scale"], "scale") : 1.0;

  const bool has_atoms = doc.contains("atoms");
  const bool has_gen = doc.contains("generator");
  if (has_atoms == has_gen) throw SpecError("spec: exactly one of 'atoms' or 'generator' is required");

  try {
    if (has_gen) {
      const json& g = doc["generator"];
      if (!g.is_object()) throw SpecError("generator: expected an object");
      reject_unknown(g, {"entry_log10_range", "b_log10_range"}, "generator");
      const auto [elo, ehi] = range(require(g, "entry_log10_range", "generator"),
                                    "generator.entry_log10_range");
      const auto [blo, bhi] =
          range(require(g, "b_log10_range", "generator"), "generator.b_log10_range");
      return EnsembleSpec::from_generator(dim, delta, GeneratorLaw{elo, ehi, blo, bhi}, scale);
    }
    const json& arr = doc["atoms"];
    if (!arr.is_array() || arr.empty()) throw SpecError("atoms: expected a nonempty array");
    std::vector<Atom> atoms;
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string where = "atoms[" + std::to_string(k) + "]";
      const json& a = arr[k];
      if (!a.is_object()) throw SpecError(where + ": expected an object");
      reject_unknown(a, {"weight", "A", "B"}, where);
      const double w = number(require(a, "weight", where), where + ".weight");
      const json& rows = require(a, "A", where);
      if (!rows.is_array() || rows.size() != dim) {
        throw SpecError(where + ".A: expected " + std::to_string(dim) + " rows");
      }
      std::vector<double> entries;
      for (std::size_t i = 0; i < dim; ++i) {
        const auto row = numbers(rows[i], where + ".A[" + std::to_string(i) + "]");
        if (row.size() != dim) {
          throw SpecError(where + ".A[" + std::to_string(i) + "]: expected " +
                          std::to_string(dim) + " entries, got " + std::to_string(row.size()));
        }
        entries.insert(entries.end(), row.begin(), row.end());
      }
      const auto b = numbers(require(a, "B", where), where + ".B");
      if (b.size() != dim) {
        throw SpecError(where + ".B: expected " + std::to_string(dim) + " entries");
      }
      try {
        atoms.push_back({w, ConeMatrix(dim, std::move(entries)), ConePoint(b)});
      } catch (const std::invalid_argument& e) {
        throw SpecError(where + ": " + e.what());
      }
    }
    return EnsembleSpec::from_atoms(delta, std::move(atoms), scale);
  } catch (const std::invalid_argument& e) {
    throw SpecError(std::string("spec: ") + e.what());
  }
}

EnsembleSpec load_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ensemble_json(ss.str());
}

std::string ensemble_to_json(const EnsembleSpec& spec) {
  json doc;
  doc["dim"] = spec.dim();
  doc["delta"] = spec.delta();
  doc["scale"] = spec.scale();
  if (spec.has_atoms()) {
    json arr = json::array();
    for (const auto& atom : spec.atoms()) {
      json rows = json::array();
      for (std::size_t i = 0; i < spec.dim(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < spec.dim(); ++j) row.push_back(atom.a(i, j));
        rows.push_back(row);
      }
      json b = json::array();
      for (double v : atom.b.coords()) b.push_back(v);
      arr.push_back({{"weight", atom.weight}, {"A", rows}, {"B", b}});
    }
    doc["atoms"] = arr;
  } else {
    const auto& g = *spec.generator();
    doc["generator"] = {{"entry_log10_range", {g.entry_log10_lo, g.entry_log10_hi}},
                        {"b_log10_range", {g.b_log10_lo, g.b_log10_hi}}};
  }
  return doc.dump(2) + "\n";
}

}  // namespace critmat
