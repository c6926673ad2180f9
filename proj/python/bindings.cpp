#include "nullwave/config.hpp"
#include "nullwave/diagnostics.hpp"
#include "nullwave/report.hpp"
#include "nullwave/tensor.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace nullwave;

namespace {

Rational rational_from_object(const py::handle& obj) {
  if (py::isinstance<py::int_>(obj)) {
    return Rational(BigInt(py::str(obj).cast<std::string>()));
  }
  if (py::isinstance<py::str>(obj)) {
    auto r = parse_rational(obj.cast<std::string>());
    if (!r) throw py::value_error("cannot parse rational: " +
                                  obj.cast<std::string>());
    return *r;
  }
  if (py::isinstance<py::float_>(obj)) {
    return Rational(obj.cast<double>());
  }
  throw py::type_error("expected int, float or 'p/q' string");
}

SpeedVector speeds_from_list(const py::sequence& seq) {
  std::vector<Rational> s;
  for (const auto& item : seq) s.push_back(rational_from_object(item));
  return SpeedVector(std::move(s));
}

py::dict null_result_to_dict(const NullCheckResult& res) {
  py::dict d;
  d["all_null"] = res.all_null;
  py::list per;
  for (bool b : res.null_per_family) per.append(b);
  d["per_family"] = per;
  if (res.witness) {
    py::dict w;
    w["family"] = res.witness->k + 1;
    w["x"] = py::make_tuple(res.witness->x[0], res.witness->x[1],
                            res.witness->x[2], res.witness->x[3]);
    w["value"] = res.witness->value;
    d["witness"] = w;
  } else {
    d["witness"] = py::none();
  }
  return d;
}

py::object json_to_py(const nlohmann::json& j) {
  namespace nl = nlohmann;
  switch (j.type()) {
    case nl::json::value_t::null: return py::none();
    case nl::json::value_t::boolean: return py::bool_(j.get<bool>());
    case nl::json::value_t::number_integer:
      return py::int_(j.get<long long>());
    case nl::json::value_t::number_unsigned:
      return py::int_(j.get<unsigned long long>());
    case nl::json::value_t::number_float: return py::float_(j.get<double>());
    case nl::json::value_t::string: return py::str(j.get<std::string>());
    case nl::json::value_t::array: {
      py::list out;
      for (const auto& item : j) out.append(json_to_py(item));
      return out;
    }
    case nl::json::value_t::object: {
      py::dict out;
      for (auto it = j.begin(); it != j.end(); ++it) {
        out[py::str(it.key())] = json_to_py(it.value());
      }
      return out;
    }
    default: return py::none();
  }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Coupled quasilinear wave systems: exact structure checks, "
            "grid evolution, and norm diagnostics.";

  py::class_<CoeffTensor>(m, "CoeffTensor")
      .def(py::init<int>(), py::arg("families"))
      .def_property_readonly("families", &CoeffTensor::families)
      .def("set",
           [](CoeffTensor& c, int i, int j, int k, int a, int b, int g,
              const py::handle& value) {
             c.set(i - 1, j - 1, k - 1, a, b, g, rational_from_object(value));
           },
           py::arg("i"), py::arg("j"), py::arg("k"), py::arg("alpha"),
           py::arg("beta"), py::arg("gamma"), py::arg("value"),
           "Set one coupling constant; families are 1-based, slots 0-based.")
      .def("get",
           [](const CoeffTensor& c, int i, int j, int k, int a, int b, int g) {
             return format_rational(c.at(i - 1, j - 1, k - 1, a, b, g));
           })
      .def("frobenius_norm", &CoeffTensor::frobenius_norm)
      .def("__eq__", [](const CoeffTensor& a, const CoeffTensor& b) {
        return a == b;
      });

  m.def("check_symmetry", [](const CoeffTensor& c) {
    const auto rep = check_symmetry(c);
    py::dict d;
    d["symmetric"] = rep.symmetric;
    d["witness"] = rep.witness
                       ? py::object(py::str(format_index_tuple(*rep.witness)))
                       : py::object(py::none());
    return d;
  });

  m.def(
      "check_null",
      [](const CoeffTensor& c, const py::sequence& speeds) {
        return null_result_to_dict(check_null(c, speeds_from_list(speeds)));
      },
      py::arg("tensor"), py::arg("speeds"));

  m.def(
      "check_null_extended",
      [](const CoeffTensor& c, const py::sequence& speeds,
         const std::vector<std::vector<int>>& groups_1based) {
        std::vector<std::vector<int>> groups;
        for (const auto& g : groups_1based) {
          std::vector<int> zero_based;
          for (int k : g) zero_based.push_back(k - 1);
          groups.push_back(std::move(zero_based));
        }
        const auto res =
            check_null_extended(c, speeds_from_list(speeds), groups);
        py::dict d;
        d["all_null"] = res.all_null;
        py::list triples;
        for (const auto& t : res.failing_triples) {
          triples.append(py::make_tuple(t.i, t.j, t.k));
        }
        d["failing_triples"] = triples;
        return d;
      },
      py::arg("tensor"), py::arg("speeds"), py::arg("groups"));

  m.def(
      "commutator",
      [](const CoeffTensor& c, const std::string& field) {
        for (int g = 0; g < kGammaCount; ++g) {
          if (field == gamma_name(static_cast<Gamma>(g))) {
            return commutator(c, static_cast<Gamma>(g));
          }
        }
        throw py::value_error("unknown field '" + field + "'");
      },
      py::arg("tensor"), py::arg("field"),
      "Coefficient tensor of [Gamma, N]; field is one of dt, dx1..dx3, "
      "omega1..omega3, scaling.");

  m.def(
      "iterated_commutators",
      [](const CoeffTensor& c, const std::vector<std::string>& fields) {
        std::vector<Gamma> seq;
        for (const auto& f : fields) {
          bool found = false;
          for (int g = 0; g < kGammaCount; ++g) {
            if (f == gamma_name(static_cast<Gamma>(g))) {
              seq.push_back(static_cast<Gamma>(g));
              found = true;
            }
          }
          if (!found) throw py::value_error("unknown field '" + f + "'");
        }
        return iterated_commutators(c, seq);
      },
      py::arg("tensor"), py::arg("fields"));

  m.def("evaluate_nonlinearity", &evaluate_nonlinearity, py::arg("tensor"),
        py::arg("grad_u"), py::arg("hess_v"),
        "Pointwise N^k; grad_u is m*4 flat, hess_v is m*16 flat and "
        "symmetric in its derivative slots.");

  m.def(
      "load_tensor",
      [](const std::string& path) {
        TensorFile tf = load_tensor_file(path);
        py::list speeds;
        for (int k = 0; k < tf.speeds.size(); ++k) {
          speeds.append(format_rational(tf.speeds.speed(k)));
        }
        return py::make_tuple(tf.tensor, speeds);
      },
      py::arg("path"));

  m.def(
      "check_tensor_file",
      [](const std::string& path) {
        TensorFile tf = load_tensor_file(path);
        py::dict d;
        const auto sym = check_symmetry(tf.tensor);
        d["symmetric"] = sym.symmetric;
        if (tf.speeds.strictly_decreasing()) {
          d["null"] = null_result_to_dict(check_null(tf.tensor, tf.speeds));
        } else {
          const auto ext = check_null_extended(tf.tensor, tf.speeds,
                                               tf.speeds.equal_speed_groups());
          py::dict e;
          e["all_null"] = ext.all_null;
          d["null"] = e;
        }
        return d;
      },
      py::arg("path"));

  m.def(
      "fit_growth",
      [](const std::vector<double>& times, const std::vector<double>& values,
         double t_min) {
        if (times.size() != values.size()) {
          throw py::value_error("times and values differ in length");
        }
        DiagnosticsSeries series;
        for (std::size_t i = 0; i < times.size(); ++i) {
          DiagnosticsRecord r;
          r.t = times[i];
          r.E3 = values[i];
          series.push_back(r);
        }
        const GrowthFit fit = fit_growth(series, SeriesQuantity::E3, t_min);
        py::dict d;
        d["exponent"] = fit.exponent;
        d["residual"] = fit.residual;
        d["t_lo"] = fit.t_lo;
        d["t_hi"] = fit.t_hi;
        d["samples"] = fit.samples;
        return d;
      },
      py::arg("times"), py::arg("values"), py::arg("t_min") = 0.0,
      "Least-squares exponent of log E against log <t>.");

  m.def(
      "validate_config",
      [](const std::string& path) {
        const auto loaded = load_config(path);
        py::dict d;
        d["ok"] = loaded.ok();
        py::list errs;
        for (const auto& e : loaded.errors) errs.append(e);
        d["errors"] = errs;
        return d;
      },
      py::arg("path"));

  m.def(
      "run_config",
      [](const std::string& path) {
        const auto loaded = load_config(path);
        if (!loaded.ok()) {
          std::ostringstream msg;
          msg << "invalid config:";
          for (const auto& e : loaded.errors) msg << "\n  " << e;
          throw py::value_error(msg.str());
        }
        const ExperimentResult result = run_experiment(*loaded.config);
        return json_to_py(result.report);
      },
      py::arg("path"), "Run a validated config; returns the report.");

  m.def(
      "run_preset",
      [](const std::string& name, const std::string& directory) {
        const Preset preset = make_preset(name);
        const RunConfig cfg = materialize_preset(preset, directory);
        const ExperimentResult result = run_experiment(cfg, name);
        return json_to_py(result.report);
      },
      py::arg("name"), py::arg("directory"));

  m.def("preset_names", [] { return preset_names(); });

  m.attr("__version__") = "0.1.0";
}
