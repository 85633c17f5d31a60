// Python bindings for the core operations: manifold catalog, symbolic
// Hamiltonians, contact flows, path energies, translated-point scans, and
// the box-capacity toolkit. JSON-valued inputs are passed as strings and
// parsed with the same loaders the CLI uses, so both front ends accept the
// same documents.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <utility>

#include "contactlab/capacity.hpp"
#include "contactlab/energy.hpp"
#include "contactlab/experiment.hpp"
#include "contactlab/flow.hpp"
#include "contactlab/geometry.hpp"
#include "contactlab/hamiltonian.hpp"
#include "contactlab/io.hpp"
#include "contactlab/translated.hpp"

namespace py = pybind11;

namespace {

using namespace contactlab;

struct PyManifold {
  std::shared_ptr<ManifoldModel> model;

  const ManifoldModel& ref() const { return *model; }
};

struct PyHamiltonian {
  std::shared_ptr<ManifoldModel> model;  // keeps flows built on top valid
  TimeHamiltonian H;
};

struct PyFlow {
  std::shared_ptr<ManifoldModel> model;  // ContactMap holds a raw pointer
  std::shared_ptr<ContactMap> map;
};

PyManifold make_manifold(const std::string& name) {
  return {std::make_shared<ManifoldModel>(manifold_by_name(name))};
}

PyManifold make_manifold_json(const std::string& text) {
  return {std::make_shared<ManifoldModel>(manifold_from_json(Json::parse(text)))};
}

PyHamiltonian make_hamiltonian(const PyManifold& man, const std::string& table_text) {
  const HamTable table = ham_table_from_json(Json::parse(table_text));
  return {man.model, compile_hamiltonian(man.ref(), table)};
}

PyHamiltonian make_constant(const PyManifold& man, double c) {
  return {man.model, constant_hamiltonian(c)};
}

py::dict record_dict(const TranslatedRecord& r) {
  py::dict d;
  d["x"] = r.x;
  d["eta"] = r.eta;
  d["residual_pos"] = r.residual_pos;
  d["residual_conf"] = r.residual_conf;
  d["nondegenerate"] = r.nondegenerate;
  d["kernel_dim"] = r.kernel_dim;
  d["intersection_dim"] = r.intersection_dim;
  d["monodromy_cond"] = r.monodromy_cond;
  d["verdict_withheld"] = r.verdict_withheld;
  d["newton_iters"] = r.newton_iters;
  return d;
}

const char* family_kind_name(FamilyKind k) {
  switch (k) {
    case FamilyKind::WholeManifold: return "whole_manifold";
    case FamilyKind::Curve: return "curve";
    default: return "isolated";
  }
}

EnergyGrid grid_of(int time_nodes, int space_per_dim) {
  EnergyGrid g;
  g.time_nodes = time_nodes;
  g.space_per_dim = space_per_dim;
  return g;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "contact Hamiltonian dynamics: flows, energies, translated points, capacities";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UnsupportedError>(m, "UnsupportedError", PyExc_ValueError);
  py::register_exception<IntegrationError>(m, "IntegrationError", PyExc_RuntimeError);
  py::register_exception<SingularSystemError>(m, "SingularSystemError", PyExc_RuntimeError);

  py::class_<PyManifold>(m, "Manifold")
      .def_property_readonly("name", [](const PyManifold& s) { return s.ref().name; })
      .def_property_readonly("dim", [](const PyManifold& s) { return s.ref().dim; })
      .def_property_readonly("ambient_dim",
                             [](const PyManifold& s) { return s.ref().ambient_dim; })
      .def_property_readonly("periodic",
                             [](const PyManifold& s) { return s.ref().periodic; })
      .def_property_readonly("rho",
                             [](const PyManifold& s) -> py::object {
                               if (!s.ref().rho) return py::none();
                               return py::float_(*s.ref().rho);
                             })
      .def("random_point",
           [](const PyManifold& s, uint64_t seed) {
             Rng rng(seed);
             return s.ref().random_point(rng);
           },
           py::arg("seed") = 0)
      .def("alpha", [](const PyManifold& s, const Vec& x,
                       const Vec& v) { return s.ref().alpha(x).dot(v); })
      .def("reeb",
           [](const PyManifold& s, const Vec& x) { return solve_reeb(s.ref(), x).field; })
      .def("wrap", [](const PyManifold& s, const Vec& x) { return s.ref().wrap(x); })
      .def("distance", [](const PyManifold& s, const Vec& a,
                          const Vec& b) { return s.ref().distance(a, b); })
      .def("contact_check",
           [](const PyManifold& s, int samples, uint64_t seed) {
             const ContactCheckReport rep = verify_contact_condition(s.ref(), samples, seed);
             py::dict d;
             d["min_density"] = rep.min_density;
             d["max_density"] = rep.max_density;
             d["samples"] = rep.samples;
             d["pass"] = rep.pass;
             return d;
           },
           py::arg("samples") = 243, py::arg("seed") = 17)
      .def("__repr__", [](const PyManifold& s) {
        return "<Manifold " + s.ref().name + " dim=" + std::to_string(s.ref().dim) + ">";
      });

  py::class_<PyHamiltonian>(m, "Hamiltonian")
      .def("__call__",
           [](const PyHamiltonian& s, double t, const Vec& x) { return s.H(t, x); })
      .def("grad",
           [](const PyHamiltonian& s, double t, const Vec& x) { return s.H.grad(t, x); })
      .def_property_readonly("analytic",
                             [](const PyHamiltonian& s) { return s.H.analytic; });

  py::class_<PyFlow>(m, "Flow")
      .def("forward",
           [](const PyFlow& s, double t, const Vec& x) {
             const auto im = s.map->forward_at(t, x);
             return py::make_tuple(im.x, im.g);
           },
           py::arg("t"), py::arg("x"))
      .def("inverse",
           [](const PyFlow& s, double t, const Vec& y) {
             const auto im = s.map->inverse_at(t, y);
             return py::make_tuple(im.x, im.g);
           },
           py::arg("t"), py::arg("y"))
      .def("trace",
           [](const PyFlow& s, const Vec& x, int segments) {
             const IsotopyTrace tr = integrate_isotopy(
                 s.map->manifold(), s.map->hamiltonian(), x,
                 [&] {
                   IntegrateOptions o;
                   o.rtol = s.map->rtol();
                   o.atol = s.map->atol();
                   o.grid_segments = segments;
                   return o;
                 }());
             py::dict d;
             d["times"] = tr.times;
             d["points"] = tr.points;
             d["g"] = tr.g;
             return d;
           },
           py::arg("x"), py::arg("segments") = 64);

  m.def("manifold", &make_manifold, py::arg("name"),
        "catalog manifold by name (CircleS1, Torus3, SphereS3, HeisenbergChart, "
        "EllipsoidE(a,b))");
  m.def("manifold_from_json", &make_manifold_json, py::arg("text"),
        "custom chart manifold from a JSON table; the contact condition is "
        "verified on a sample net");
  m.def("hamiltonian", &make_hamiltonian, py::arg("manifold"), py::arg("table"),
        "compile a symbolic coefficient table (JSON text)");
  m.def("constant", &make_constant, py::arg("manifold"), py::arg("c"),
        "autonomous constant Hamiltonian");
  m.def("flow",
        [](const PyHamiltonian& h, double rtol, double atol) {
          return PyFlow{h.model, std::make_shared<ContactMap>(*h.model, h.H, rtol, atol)};
        },
        py::arg("hamiltonian"), py::arg("rtol") = 1e-11, py::arg("atol") = 1e-13,
        "time-t maps of the contact isotopy, with conformal factors");

  m.def("energy_report",
        [](const PyHamiltonian& h, int time_nodes, int space_per_dim) {
          const EnergyGrid grid = grid_of(time_nodes, space_per_dim);
          const EnergyTable table = compute_energy_table(*h.model, h.H, grid);
          const auto shift = reeb_shift_optimum(*h.model, h.H, grid);
          const auto cw = calabi_weinstein(*h.model, h.H, grid);
          std::vector<double> absmax(table.rows.size()), osc(table.rows.size());
          for (size_t i = 0; i < table.rows.size(); ++i) {
            absmax[i] = table.rows[i].absmax;
            osc[i] = table.rows[i].osc;
          }
          py::dict d;
          d["linf"] = simpson_integrate(absmax, 0.0, 1.0);
          d["osc"] = simpson_integrate(osc, 0.0, 1.0);
          d["shifted_linf"] = shift.shifted_energy;
          d["ceiling"] = static_cast<long long>(ceiling_lower_bound(*h.model, h.H, grid));
          d["ceiling_caveat"] = ceiling_caveat();
          d["calabi_weinstein"] = cw.value;
          d["strict"] = cw.strict;
          d["space_err_bound"] = table.space_err_bound;
          return d;
        },
        py::arg("hamiltonian"), py::arg("time_nodes") = 65, py::arg("space_per_dim") = 24,
        "path energies, Reeb-shift optimum, integer ceiling bound, Calabi-Weinstein");

  m.def("translated_scan",
        [](const PyHamiltonian& h, py::object eta_window, int n_seeds, int eta_grid,
           double tol, uint64_t seed, int max_iters) {
          TranslatedOptions opts;
          if (!eta_window.is_none()) {
            auto w = eta_window.cast<std::pair<double, double>>();
            opts.eta_window = w;
          }
          opts.n_seeds = n_seeds;
          opts.eta_grid = eta_grid;
          opts.tol = tol;
          opts.seed = seed;
          opts.max_iters = max_iters;
          const TranslatedScan scan = find_translated_points(*h.model, h.H, opts);
          py::list recs;
          for (const auto& r : scan.records) recs.append(record_dict(r));
          py::list fams;
          for (const auto& f : scan.families) {
            py::dict fd;
            fd["kind"] = family_kind_name(f.kind);
            fd["eta"] = f.eta;
            fd["cluster_size"] = f.cluster_size;
            py::list reps;
            for (const auto& r : f.representatives) reps.append(record_dict(r));
            fd["representatives"] = reps;
            fams.append(fd);
          }
          py::dict d;
          d["records"] = recs;
          d["families"] = fams;
          d["seeds_tried"] = scan.seeds_tried;
          d["seeds_converged"] = scan.seeds_converged;
          d["seeds_skipped"] = scan.seeds_skipped;
          d["eta_window"] = py::make_tuple(scan.eta_lo, scan.eta_hi);
          return d;
        },
        py::arg("hamiltonian"), py::arg("eta_window") = py::none(),
        py::arg("n_seeds") = 24, py::arg("eta_grid") = 16, py::arg("tol") = 1e-8,
        py::arg("seed") = 12345, py::arg("max_iters") = 50,
        "multi-start Newton scan for points the time-1 map shifts along the Reeb flow");

  m.def("box_report",
        [](const std::string& text) {
          const BoxSet B = box_from_json(Json::parse(text));
          py::dict d;
          d["height"] = height(B);
          d["hat_c"] = hat_c(B);
          if (!B.factor_areas.empty()) d["gromov_lower_bound"] = gromov_lower_bound(B);
          return d;
        },
        py::arg("box"), "height, normalized capacity, and the area lower bound of a box set");

  m.def("displacement",
        [](const PyHamiltonian& h, const std::string& box_text, int samples, double margin,
           uint64_t seed) {
          const BoxSet B = box_from_json(Json::parse(box_text));
          const DisplacementReport rep =
              displacement_check(*h.model, h.H, B, samples, margin, seed);
          py::dict d;
          d["verdict"] = std::string(to_string(rep.verdict));
          d["samples"] = rep.samples;
          d["margin"] = rep.margin;
          d["min_clearance"] = rep.min_clearance;
          d["images_inside"] = rep.images_inside;
          return d;
        },
        py::arg("hamiltonian"), py::arg("box"), py::arg("samples") = 400,
        py::arg("margin") = 0.01, py::arg("seed") = 2024,
        "sampled displacement verdict for a box set under the lifted time-1 map");

  m.def("capacity_audit",
        [](const PyHamiltonian& h, const std::string& box_text, int samples, double margin,
           int time_nodes, int space_per_dim, uint64_t seed) {
          const BoxSet B = box_from_json(Json::parse(box_text));
          const EnergyGrid grid = grid_of(time_nodes, space_per_dim);
          const AuditReport rep =
              energy_capacity_audit(*h.model, h.H, B, samples, margin, grid, seed);
          py::dict d;
          d["energy_ub"] = rep.energy_ub;
          d["quarter_hat_c_lb"] = rep.quarter_hat_c_lb;
          d["slack"] = rep.slack;
          d["holds"] = rep.holds;
          d["verdict"] = std::string(to_string(rep.displacement.verdict));
          return d;
        },
        py::arg("hamiltonian"), py::arg("box"), py::arg("samples") = 400,
        py::arg("margin") = 0.01, py::arg("time_nodes") = 65,
        py::arg("space_per_dim") = 24, py::arg("seed") = 2024,
        "energy vs quarter-capacity inequality; requires a DISPLACED verdict");

  m.def("unit_ball_volume", &unit_ball_volume, py::arg("even_dim"));

  m.def("run_experiment",
        [](const std::string& config_text) {
          return run_experiment(parse_config(Json::parse(config_text)));
        },
        py::arg("config"),
        "run a full experiment config (JSON text); writes report.json and tables, "
        "returns the exit status");
}
