#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <string>
#include <vector>

#include "islt/errors.hpp"
#include "islt/estimates.hpp"
#include "islt/fit.hpp"
#include "islt/kernels.hpp"
#include "islt/params.hpp"
#include "islt/regularity.hpp"
#include "islt/sie.hpp"
#include "islt/subordinator.hpp"
#include "islt/verify.hpp"

namespace py = pybind11;
using namespace islt;

namespace {

py::object finite_or_none(double v) { return std::isfinite(v) ? py::object(py::float_(v)) : py::none(); }

py::dict verdict_dict(const Verdict& v) {
  py::dict out;
  out["name"] = v.name;
  out["beta"] = v.params.beta_string();
  out["d"] = v.params.dimension();
  out["x_name"] = v.x_name;
  out["y_name"] = v.y_name;
  out["x"] = v.x;
  out["y"] = v.y;
  out["exponent_expected"] = finite_or_none(v.expected);
  out["exponent_fitted"] = finite_or_none(v.fitted);
  out["half_width"] = finite_or_none(v.half_width);
  out["tolerance"] = v.tolerance;
  out["pass"] = v.pass;
  py::dict details;
  for (const auto& [k, x] : v.details) details[py::str(k)] = finite_or_none(x);
  out["details"] = details;
  out["note"] = v.note;
  return out;
}

py::dict report_dict(const HolderReport& r) {
  py::dict out;
  out["beta"] = r.params.beta_string();
  out["d"] = r.params.dimension();
  out["direction"] = std::string(to_string(r.direction));
  out["q"] = r.q;
  out["exponent_fitted"] = finite_or_none(r.fitted_slope);
  out["exponent_expected"] = r.expected_slope;
  out["half_width"] = finite_or_none(r.half_width);
  out["tolerance"] = r.tolerance;
  out["pass"] = r.pass;
  out["refused"] = r.refused;
  out["note"] = r.note;
  out["path_exponent_table"] = r.path_exponent_table;
  out["path_exponent_fitted"] = finite_or_none(r.path_exponent_fitted);
  std::vector<double> lag, value, se;
  for (const auto& m : r.moments) {
    lag.push_back(m.lag);
    value.push_back(m.mean);
    se.push_back(m.se);
  }
  out["lag"] = lag;
  out["value"] = value;
  out["se"] = se;
  return out;
}

VerifyOptions options(int threads, std::optional<std::filesystem::path> cache_dir) {
  VerifyOptions o;
  o.threads = threads;
  o.cache_dir = std::move(cache_dir);
  return o;
}

// (M + 1) x sites view of a field, copied.
py::array_t<double> grid(const std::vector<double>& v, int steps, std::size_t sites) {
  py::array_t<double> a({static_cast<py::ssize_t>(steps + 1), static_cast<py::ssize_t>(sites)});
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

}  // namespace

PYBIND11_MODULE(_islt, m) {
  m.doc() = "Inverse-stable-Levy-time kernels, estimates and the truncated lattice SIE";
  m.attr("__version__") = ISLT_VERSION;

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<SizeError>(m, "SizeError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<QuadratureError>(m, "QuadratureError", PyExc_RuntimeError);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init(&ModelParams::make), py::arg("k"), py::arg("d"))
      .def_static("from_beta",
                  [](const std::string& beta, int d) { return ModelParams::make(parse_beta_level(beta), d); },
                  py::arg("beta"), py::arg("d"))
      .def_property_readonly("k", &ModelParams::level)
      .def_property_readonly("nu", &ModelParams::nu)
      .def_property_readonly("beta", &ModelParams::beta)
      .def_property_readonly("d", &ModelParams::dimension)
      .def("__repr__", [](const ModelParams& p) {
        return "ModelParams(beta=" + p.beta_string() + ", d=" + std::to_string(p.dimension()) + ")";
      });

  m.def("parse_beta_level", [](const std::string& s) { return parse_beta_level(s); });

  m.def("isl_density", &isl_density, py::arg("params"), py::arg("t"), py::arg("s"));
  m.def("moments", &moments, py::arg("params"));
  m.def(
      "isltbm_kernel",
      [](const ModelParams& p, double t, std::vector<double> x) { return isltbm_kernel(p, t, x); },
      py::arg("params"), py::arg("t"), py::arg("x"));
  m.def(
      "isltrw_kernel",
      [](const ModelParams& p, double delta, double t, std::vector<long> steps) {
        return isltrw_kernel(p, Lattice(delta, p.dimension()), t, std::span<const long>(steps));
      },
      py::arg("params"), py::arg("delta"), py::arg("t"), py::arg("steps"));
  m.def("tail_radius", &tail_radius, py::arg("params"), py::arg("delta"), py::arg("t"), py::arg("tail") = 1e-10);

  m.def("continuum_mass", &continuum_mass, py::arg("params"), py::arg("t"));
  m.def("l2_norm_continuum", &l2_norm_continuum, py::arg("params"), py::arg("t"));
  m.def(
      "l2_norm_lattice", [](const ModelParams& p, double delta, double t) { return l2_norm_lattice(p, delta, t).value; },
      py::arg("params"), py::arg("delta"), py::arg("t"));
  m.def("temporal_difference", py::overload_cast<const ModelParams&, double, double>(&temporal_difference_integral),
        py::arg("params"), py::arg("t"), py::arg("r"));
  m.def("spatial_difference", &spatial_difference_integral, py::arg("params"), py::arg("t"), py::arg("z"));
  m.def("divergence_integral", &divergence_integral, py::arg("params"), py::arg("t"), py::arg("eps"));
  m.def(
      "continuum_limit_report",
      [](const ModelParams& p, double t, std::vector<double> x, std::vector<double> deltas) {
        return continuum_limit_report(p, t, x, deltas);
      },
      py::arg("params"), py::arg("t"), py::arg("x"), py::arg("deltas"));

  m.def(
      "fit_loglog",
      [](std::vector<double> lags, std::vector<double> values) {
        const ScalingFit f = fit_loglog(lags, values);
        py::dict out;
        out["slope"] = f.slope;
        out["intercept"] = f.intercept;
        out["half_width"] = f.half_width;
        return out;
      },
      py::arg("lags"), py::arg("values"));

  m.def("verify_l2", [](const ModelParams& p) { return verdict_dict(verify_l2(p)); }, py::arg("params"));
  m.def(
      "verify_temporal",
      [](const ModelParams& p, bool cross_check) { return verdict_dict(verify_temporal(p, cross_check)); },
      py::arg("params"), py::arg("cross_check") = false);
  m.def("verify_spatial", [](const ModelParams& p) { return verdict_dict(verify_spatial(p)); }, py::arg("params"));
  m.def("verify_dde", [](const ModelParams& p) { return verdict_dict(verify_dde(p)); }, py::arg("params"));
  m.def("verify_limit", [](const ModelParams& p) { return verdict_dict(verify_limit(p)); }, py::arg("params"));
  m.def("verify_divergence", [](int k) { return verdict_dict(verify_divergence(k)); }, py::arg("k"));
  m.def(
      "verify_kernel_normalization",
      [](const ModelParams& p, double delta, std::vector<double> times,
         std::optional<std::filesystem::path> cache_dir) {
        return verdict_dict(verify_kernel_normalization(p, delta, std::move(times), options(1, std::move(cache_dir))));
      },
      py::arg("params"), py::arg("delta") = 0.2, py::arg("times") = std::vector<double>{0.5, 1.0},
      py::arg("cache_dir") = py::none());

  m.def(
      "expected_slope",
      [](const ModelParams& p, const std::string& dir, int q) {
        if (dir != "time" && dir != "space") throw DomainError("direction must be 'time' or 'space'");
        return expected_slope(p, dir == "time" ? Direction::kTime : Direction::kSpace, q);
      },
      py::arg("params"), py::arg("direction"), py::arg("q") = 1);

  py::class_<SIEConfig>(m, "SIEConfig")
      .def_static("defaults", &SIEConfig::defaults, py::arg("k"), py::arg("d"))
      .def_static("holder_defaults", &SIEConfig::holder_defaults, py::arg("k"), py::arg("d"))
      .def_property_readonly("params", [](const SIEConfig& c) { return c.params; })
      .def_property_readonly("delta", [](const SIEConfig& c) { return c.lat.delta(); })
      .def_property_readonly("box", [](const SIEConfig& c) { return c.lat.radius(); })
      .def_property_readonly("half_width", [](const SIEConfig& c) { return c.lat.half_width(); })
      .def_readwrite("horizon", &SIEConfig::horizon)
      .def_readwrite("steps", &SIEConfig::steps)
      .def_readwrite("seed", &SIEConfig::seed)
      .def("set_lattice",
           [](SIEConfig& c, double delta, double box) { c.lat = Lattice(delta, c.params.dimension(), box); },
           py::arg("delta"), py::arg("box"))
      .def_property(
          "a", [](const SIEConfig& c) { return c.a.str(); },
          [](SIEConfig& c, const std::string& s) { c.a = Coefficient::parse(s); })
      .def_property(
          "u0", [](const SIEConfig& c) { return c.u0.str(); },
          [](SIEConfig& c, const std::string& s) { c.u0 = InitialCondition::parse(s); })
      .def("validate", &SIEConfig::validate);

  py::class_<SIESolver>(m, "SIESolver")
      .def(py::init([](const SIEConfig& c, std::optional<std::filesystem::path> cache_dir) {
             return std::make_unique<SIESolver>(c, std::move(cache_dir));
           }),
           py::arg("config"), py::arg("cache_dir") = py::none())
      .def_property_readonly("sites", &SIESolver::sites)
      .def_property_readonly("cache_hit", &SIESolver::cache_hit)
      .def(
          "solve",
          [](const SIESolver& s, std::uint64_t replica) {
            FieldSample f;
            {
              py::gil_scoped_release release;
              f = s.solve(replica);
            }
            const int M = s.config().steps;
            return py::make_tuple(grid(f.U, M, s.sites()), grid(f.D, M, s.sites()));
          },
          py::arg("replica"))
      .def(
          "variance",
          [](const SIESolver& s, int replicas, int threads) {
            MomentSummary ms = [&] {
              py::gil_scoped_release release;
              return simulate_moments(s, replicas, threads);
            }();
            std::vector<double> v((ms.steps() + 1) * ms.sites());
            for (int i = 0; i <= ms.steps(); ++i) {
              for (std::size_t j = 0; j < ms.sites(); ++j) v[i * ms.sites() + j] = ms.variance(i, j);
            }
            return grid(v, ms.steps(), ms.sites());
          },
          py::arg("replicas"), py::arg("threads") = 1)
      .def(
          "exact_variance",
          [](const SIESolver& s, int step, std::vector<long> x) { return s.exact_variance(step, x); },
          py::arg("step"), py::arg("x_steps"))
      .def(
          "holder_report",
          [](const SIESolver& s, int replicas, int threads, double tolerance) {
            std::vector<HolderReport> r;
            {
              py::gil_scoped_release release;
              r = holder_report(s, replicas, threads, tolerance);
            }
            py::list out;
            for (const auto& x : r) out.append(report_dict(x));
            return out;
          },
          py::arg("replicas"), py::arg("threads") = 1, py::arg("tolerance") = 0.07);
}
