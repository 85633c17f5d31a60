#include "contactlab/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace contactlab {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);  // binary keeps \n on every platform
  if (!out) throw ConfigError("cannot open for writing: " + path);
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw ConfigError("csv row width does not match the header: " + path);
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
}

namespace {

SpaceFactor factor_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": factor must be an object");
  SpaceFactor f;
  const std::string kind = j.value("kind", "");
  if (kind == "cos") {
    f.kind = SpaceFactor::Kind::Cos;
  } else if (kind == "sin") {
    f.kind = SpaceFactor::Kind::Sin;
  } else if (kind == "poly") {
    f.kind = SpaceFactor::Kind::Poly;
  } else {
    throw ConfigError(where + ".kind: expected one of cos, sin, poly");
  }
  if (!j.contains("coord") || !j["coord"].is_number_integer())
    throw ConfigError(where + ".coord: expected an integer coordinate index");
  f.coord = j["coord"].get<int>();
  if (f.kind == SpaceFactor::Kind::Poly) {
    if (!j.contains("coeffs") || !j["coeffs"].is_array() || j["coeffs"].empty())
      throw ConfigError(where + ".coeffs: poly factor needs a nonempty coefficient list");
    f.coeffs = j["coeffs"].get<std::vector<double>>();
  } else {
    f.freq = j.value("freq", 1);
    if (f.freq == 0) throw ConfigError(where + ".freq: trig frequency cannot be 0");
  }
  return f;
}

Json factor_to_json(const SpaceFactor& f) {
  Json j;
  switch (f.kind) {
    case SpaceFactor::Kind::Cos: j["kind"] = "cos"; break;
    case SpaceFactor::Kind::Sin: j["kind"] = "sin"; break;
    case SpaceFactor::Kind::Poly: j["kind"] = "poly"; break;
  }
  j["coord"] = f.coord;
  if (f.kind == SpaceFactor::Kind::Poly) {
    j["coeffs"] = f.coeffs;
  } else {
    j["freq"] = f.freq;
  }
  return j;
}

HamTable table_from_json_at(const Json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("terms") || !j["terms"].is_array())
    throw ConfigError(where + ": expected an object with a terms array");
  HamTable table;
  int idx = 0;
  for (const auto& jt : j["terms"]) {
    const std::string here = where + ".terms[" + std::to_string(idx) + "]";
    if (!jt.is_object()) throw ConfigError(here + ": term must be an object");
    HamTerm term;
    term.coeff = jt.value("coeff", 1.0);
    if (jt.contains("time_poly")) {
      if (!jt["time_poly"].is_array() || jt["time_poly"].empty())
        throw ConfigError(here + ".time_poly: expected a nonempty coefficient list");
      term.time_poly = jt["time_poly"].get<std::vector<double>>();
    }
    term.factors.clear();
    if (jt.contains("factors")) {
      int fi = 0;
      for (const auto& jf : jt["factors"]) {
        term.factors.push_back(
            factor_from_json(jf, here + ".factors[" + std::to_string(fi) + "]"));
        ++fi;
      }
    }
    table.terms.push_back(std::move(term));
    ++idx;
  }
  return table;
}

}  // namespace

HamTable ham_table_from_json(const Json& j) { return table_from_json_at(j, "hamiltonian"); }

Json ham_table_to_json(const HamTable& table) {
  Json j;
  j["terms"] = Json::array();
  for (const auto& t : table.terms) {
    Json jt;
    jt["coeff"] = t.coeff;
    jt["time_poly"] = t.time_poly;
    jt["factors"] = Json::array();
    for (const auto& f : t.factors) jt["factors"].push_back(factor_to_json(f));
    j["terms"].push_back(std::move(jt));
  }
  return j;
}

ManifoldModel manifold_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("manifold: expected a name string or a table object");
  ManifoldModel M;
  if (!j.contains("name") || !j["name"].is_string())
    throw ConfigError("manifold.name: required string");
  M.name = j["name"].get<std::string>();
  if (!j.contains("dim") || !j["dim"].is_number_integer())
    throw ConfigError("manifold.dim: required integer");
  M.dim = j["dim"].get<int>();
  if (M.dim < 1 || M.dim % 2 == 0)
    throw ConfigError("manifold.dim: intrinsic dimension must be odd and positive");
  M.ambient_dim = M.dim;

  if (!j.contains("box") || !j["box"].is_object())
    throw ConfigError("manifold.box: required object with lo and hi arrays");
  const auto lo = j["box"].value("lo", std::vector<double>{});
  const auto hi = j["box"].value("hi", std::vector<double>{});
  if (static_cast<int>(lo.size()) != M.dim || static_cast<int>(hi.size()) != M.dim)
    throw ConfigError("manifold.box: lo and hi must both have dim entries");
  M.box_lo = Eigen::Map<const Vec>(lo.data(), M.dim);
  M.box_hi = Eigen::Map<const Vec>(hi.data(), M.dim);
  for (int i = 0; i < M.dim; ++i) {
    if (!(M.box_lo[i] < M.box_hi[i]))
      throw ConfigError("manifold.box: lo must be strictly below hi in every coordinate");
  }

  if (!j.contains("periodic") || !j["periodic"].is_array() ||
      static_cast<int>(j["periodic"].size()) != M.dim)
    throw ConfigError("manifold.periodic: required boolean array of length dim");
  M.periodic.assign(static_cast<size_t>(M.dim), false);
  for (int i = 0; i < M.dim; ++i) {
    if (!j["periodic"][static_cast<size_t>(i)].is_boolean())
      throw ConfigError("manifold.periodic: entries must be booleans");
    M.periodic[static_cast<size_t>(i)] = j["periodic"][static_cast<size_t>(i)].get<bool>();
  }

  if (!j.contains("alpha") || !j["alpha"].is_array() ||
      static_cast<int>(j["alpha"].size()) != M.dim)
    throw ConfigError("manifold.alpha: required array of dim component tables");

  // Compile each component against the chart skeleton; the components must be
  // spatial, so time polynomials beyond a constant are rejected.
  std::vector<TimeHamiltonian> comps;
  for (int c = 0; c < M.dim; ++c) {
    const std::string where = "manifold.alpha[" + std::to_string(c) + "]";
    const HamTable table = table_from_json_at(j["alpha"][static_cast<size_t>(c)], where);
    for (const auto& term : table.terms) {
      if (term.time_poly.size() > 1)
        throw ConfigError(where + ": alpha components cannot depend on time");
    }
    try {
      comps.push_back(compile_hamiltonian(M, table));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }

  auto comp_ptr = std::make_shared<std::vector<TimeHamiltonian>>(std::move(comps));
  const int d = M.dim;
  M.alpha = [comp_ptr, d](const Vec& x) {
    Vec a(d);
    for (int i = 0; i < d; ++i) a[i] = (*comp_ptr)[static_cast<size_t>(i)](0.0, x);
    return a;
  };
  // dalpha(e_i, e_j) = d_i alpha_j - d_j alpha_i, assembled from the analytic
  // component gradients.
  M.dalpha = [comp_ptr, d](const Vec& x) {
    Mat G(d, d);
    for (int jcol = 0; jcol < d; ++jcol)
      G.col(jcol) = (*comp_ptr)[static_cast<size_t>(jcol)].grad(0.0, x);
    return Mat(G - G.transpose());
  };

  if (j.contains("rho")) {
    if (!j["rho"].is_number()) throw ConfigError("manifold.rho: must be a number");
    M.rho = j["rho"].get<double>();
    M.rho_note = "declared in the manifold table, not verified against closed orbits";
  }

  const ContactCheckReport chk = verify_contact_condition(M, 243, 17);
  if (!chk.pass)
    throw ConfigError("manifold.alpha: contact condition fails on the sample net (min density " +
                      format_double(chk.min_density) + ")");
  return M;
}

ManifoldModel load_manifold(const Json& spec) {
  if (spec.is_string()) return manifold_by_name(spec.get<std::string>());
  return manifold_from_json(spec);
}

std::string json_hash(const Json& j) {
  const std::string s = j.dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

BoxSet box_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  BoxSet B;
  const auto lo = j.value("base_lo", std::vector<double>{});
  const auto hi = j.value("base_hi", std::vector<double>{});
  if (lo.empty() || lo.size() != hi.size())
    throw ConfigError(where + ": base_lo and base_hi must match and be nonempty");
  B.base_lo = Eigen::Map<const Vec>(lo.data(), static_cast<long>(lo.size()));
  B.base_hi = Eigen::Map<const Vec>(hi.data(), static_cast<long>(hi.size()));
  const auto r = j.value("r", std::vector<double>{});
  if (r.size() != 2) throw ConfigError(where + ".r: expected [r_lo, r_hi]");
  B.r_lo = r[0];
  B.r_hi = r[1];
  B.factor_areas = j.value("factor_areas", std::vector<double>{});
  B.scale = j.value("scale", 1.0);
  B.validate();
  return B;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const Json& j) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace contactlab
