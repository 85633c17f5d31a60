#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "contactlab/capacity.hpp"
#include "contactlab/hamiltonian.hpp"

namespace contactlab {

using Json = nlohmann::json;

// Shortest round-trip decimal form (printf %.17g), shared by every CSV and
// JSON writer so repeated runs stay byte-identical.
std::string format_double(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Symbolic Hamiltonian tables: sums of coeff * p(t) * prod factor(x_coord).
HamTable ham_table_from_json(const Json& j);
Json ham_table_to_json(const HamTable& table);

// Custom chart manifolds from coefficient tables: {name, dim, box, periodic,
// alpha: [component table...], rho?}. The contact condition is verified on a
// sample net at load time; failures throw ConfigError.
ManifoldModel manifold_from_json(const Json& j);

// Accepts either a catalog name string or a custom-table object.
ManifoldModel load_manifold(const Json& spec);

// {base_lo, base_hi, r: [lo, hi], factor_areas?, scale?}. `where` prefixes
// error messages with the config path of the object being parsed.
BoxSet box_from_json(const Json& j, const std::string& where = "box");

// FNV-1a over the canonical dump; embedded in reports for provenance.
std::string json_hash(const Json& j);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace contactlab
