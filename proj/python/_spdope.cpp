#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "spdope/cli.hpp"
#include "spdope/config.hpp"
#include "spdope/errors.hpp"
#include "spdope/field_io.hpp"

namespace py = pybind11;
using namespace spdope;
using nlohmann::json;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;
using RArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

RunConfig load(const std::string& doc) { return RunConfig::from_json(json::parse(doc)); }

// Arrays are indexed [iz, iy, ix], matching the flat layout ix + N (iy + N iz).
CArray to_numpy(const ComplexField& f) {
  const auto n = static_cast<py::ssize_t>(f.grid().points_per_axis());
  CArray out({n, n, n});
  std::memcpy(out.mutable_data(), f.values().data(), f.size() * sizeof(cplx));
  return out;
}

RArray to_numpy(const RealField& f) {
  const auto n = static_cast<py::ssize_t>(f.grid().points_per_axis());
  RArray out({n, n, n});
  std::memcpy(out.mutable_data(), f.values().data(), f.size() * sizeof(double));
  return out;
}

std::size_t cube_side(const py::buffer_info& info) {
  if (info.ndim != 3 || info.shape[0] != info.shape[1] || info.shape[1] != info.shape[2]) {
    throw std::invalid_argument("expected an (N, N, N) array");
  }
  return static_cast<std::size_t>(info.shape[0]);
}

ComplexField from_numpy(const CArray& a, double L) {
  const std::size_t n = cube_side(a.request());
  ComplexField f{Grid3(L, n)};
  std::memcpy(f.values().data(), a.data(), f.size() * sizeof(cplx));
  return f;
}

}  // namespace

PYBIND11_MODULE(_spdope, m) {
  m.doc() = "Bindings for the spdope library; the spdope package wraps these.";
  m.attr("__version__") = SPDOPE_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<FieldIoError>(m, "FieldIoError", PyExc_OSError);
  py::register_exception<BracketError>(m, "BracketError", PyExc_ValueError);

  m.def(
      "run_cli", [](const std::vector<std::string>& args) { return run_cli(args); }, py::arg("args"),
      "Run a CLI subcommand in process; returns the exit code.");

  m.def(
      "canonical_config", [](const std::string& doc) { return load(doc).to_json().dump(); }, py::arg("doc"),
      "Validate a JSON config document and return its canonical form.");

  m.def(
      "parse_toml", [](const std::string& text) { return parse_toml(text).dump(); }, py::arg("text"));

  m.def(
      "config_hash", [](const std::string& doc) { return load(doc).hash(); }, py::arg("doc"));

  m.def(
      "minimize",
      [](const std::string& doc) {
        const RunConfig c = load(doc);
        MinimizerResult r = [&] {
          py::gil_scoped_release release;
          const Grid3 g(c.grid.L, c.grid.N);
          SpectralWorkspace ws(g);
          return minimize_at_mass(c.mu, c.profile, c.params, c.minimize, ws);
        }();
        return py::make_tuple(r.to_json().dump(), to_numpy(r.u_min));
      },
      py::arg("doc"), "Minimize at the configured mass; returns (result JSON, u).");

  m.def(
      "energy_breakdown",
      [](const std::string& doc, const CArray& u) {
        const RunConfig c = load(doc);
        const ComplexField f = from_numpy(u, c.grid.L);
        SpectralWorkspace ws(f.grid());
        return energy_breakdown(f, c.profile, c.params, ws).to_json().dump();
      },
      py::arg("doc"), py::arg("u"));

  m.def(
      "sample_rho",
      [](const std::string& doc) {
        const RunConfig c = load(doc);
        return to_numpy(sample_rho(c.profile, Grid3(c.grid.L, c.grid.N)));
      },
      py::arg("doc"));

  m.def(
      "read_field",
      [](const std::string& path) -> py::tuple {
        auto v = read_field(path);
        if (auto* c = std::get_if<ComplexField>(&v)) return py::make_tuple(to_numpy(*c), c->grid().box_length());
        const auto& r = std::get<RealField>(v);
        return py::make_tuple(to_numpy(r), r.grid().box_length());
      },
      py::arg("path"), "Returns (array, L).");

  m.def(
      "write_field",
      [](const std::string& path, const CArray& a, double L) { write_field(path, from_numpy(a, L)); },
      py::arg("path"), py::arg("array"), py::arg("L"));

  m.def(
      "ball_geometry",
      [](std::array<double, 3> center, double radius) {
        const BallGeometry g = ball_geometry({{center[0], center[1], center[2]}, radius, 1.0});
        py::dict d;
        d["extent"] = g.extent;
        d["volume"] = g.volume;
        d["surface"] = g.surface;
        d["kappa1"] = g.kappa1;
        d["kappa2"] = g.kappa2;
        d["d_omega"] = g.d_omega;
        return d;
      },
      py::arg("center"), py::arg("radius"));
}
