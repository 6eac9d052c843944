#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "warpnet/experiment.hpp"
#include "warpnet/gradcheck.hpp"

namespace py = pybind11;
using namespace warpnet;

namespace {

using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const DArray& a) {
  if (a.ndim() != 1) throw ShapeError("expected a 1-D array");
  const double* p = a.data();
  return std::vector<double>(p, p + a.shape(0));
}

WarpFunction to_warp(const DArray& a) {
  WarpFunction w;
  w.values = to_vector(a);
  return w;
}

py::array_t<double> from_vector(const std::vector<double>& v) {
  return py::array_t<double>(
      std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())}, v.data());
}

RealArray to_matrix(const DArray& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array");
  RealArray m({static_cast<std::size_t>(a.shape(0)),
               static_cast<std::size_t>(a.shape(1))});
  const double* p = a.data();
  std::copy(p, p + m.size(), m.data.begin());
  return m;
}

py::array_t<double> from_matrix(const RealArray& m) {
  py::array_t<double> out({static_cast<py::ssize_t>(m.shape[0]),
                           static_cast<py::ssize_t>(m.shape[1])});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

Sequence to_sequence(const DArray& a) {
  Sequence s;
  s.frames = to_matrix(a);
  return s;
}

py::tuple dataset_to_py(const Dataset& ds) {
  const std::size_t t = ds.length(), n = ds.channels();
  py::array_t<double> x({static_cast<py::ssize_t>(ds.size()),
                         static_cast<py::ssize_t>(t),
                         static_cast<py::ssize_t>(n)});
  double* p = x.mutable_data();
  for (const auto& s : ds.sequences) {
    std::copy(s.frames.data.begin(), s.frames.data.end(), p);
    p += t * n;
  }
  py::array_t<int> y(
      std::vector<py::ssize_t>{static_cast<py::ssize_t>(ds.size())},
      ds.labels.data());
  return py::make_tuple(x, y);
}

}  // namespace

PYBIND11_MODULE(_warpnet, m) {
  m.doc() = "Differentiable time warping and warping-network experiments";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  // --- warps -------------------------------------------------------------
  m.def("identity_warp",
        [](std::size_t t) { return from_vector(identity_warp(t).values); },
        py::arg("t"));
  m.def("is_valid_warp",
        [](const DArray& g) { return validate(to_warp(g)).valid(); },
        py::arg("gamma"));
  m.def("warp_derivative",
        [](const DArray& g) {
          return from_vector(derivative_of(to_warp(g)).density);
        },
        py::arg("gamma"));
  m.def("warp_from_derivative",
        [](const DArray& d) {
          WarpDerivative wd;
          wd.density = to_vector(d);
          return from_vector(warp_from_derivative(wd).values);
        },
        py::arg("density"));
  m.def("compose",
        [](const DArray& g1, const DArray& g2) {
          return from_vector(compose(to_warp(g1), to_warp(g2)).values);
        },
        py::arg("gamma1"), py::arg("gamma2"));
  m.def("invert",
        [](const DArray& g) { return from_vector(invert(to_warp(g)).values); },
        py::arg("gamma"));
  m.def("mean_warp",
        [](const std::vector<DArray>& gs) {
          std::vector<WarpFunction> ws;
          for (const auto& g : gs) ws.push_back(to_warp(g));
          return from_vector(mean_warp(ws).values);
        },
        py::arg("gammas"));
  m.def("random_warp",
        [](std::size_t t, double roughness, std::uint64_t seed) {
          Rng rng(seed);
          return from_vector(random_warp(t, roughness, rng).values);
        },
        py::arg("t"), py::arg("roughness"), py::arg("seed"));
  m.def("affine_warp",
        [](double a, double b, std::size_t t) {
          return from_vector(affine_warp(a, b, t).values);
        },
        py::arg("a"), py::arg("b"), py::arg("t"));

  // --- resampling --------------------------------------------------------
  m.def("warp_sequence",
        [](const DArray& x, const DArray& g) {
          return from_matrix(warp_sequence(to_sequence(x), to_warp(g)).frames);
        },
        py::arg("x"), py::arg("gamma"),
        "Linearly resample a (T, N) sequence along a warp");
  m.def("resample_backward",
        [](const DArray& x, const DArray& g, const DArray& dy) {
          auto grads =
              resample_backward(to_sequence(x), to_warp(g), to_matrix(dy));
          return py::make_tuple(from_matrix(grads.d_input),
                                from_vector(grads.d_positions));
        },
        py::arg("x"), py::arg("gamma"), py::arg("d_output"));

  // --- warp-prediction constraint layer ----------------------------------
  m.def("constraint_forward",
        [](const DArray& v) {
          RealArray a({static_cast<std::size_t>(v.shape(0))});
          a.data = to_vector(v);
          return from_vector(constraint_forward(a).values);
        },
        py::arg("v"),
        "Map an unconstrained vector to a valid monotone warp");
  m.def("constraint_backward",
        [](const DArray& v, const DArray& d_gamma) {
          RealArray a({static_cast<std::size_t>(v.shape(0))});
          a.data = to_vector(v);
          return from_vector(constraint_backward(a, to_vector(d_gamma)).data);
        },
        py::arg("v"), py::arg("d_gamma"));

  // --- data --------------------------------------------------------------
  m.def("generate_dataset",
        [](const std::string& kind, std::size_t t, std::size_t train_n,
           std::size_t test_n, double noise, double roughness, bool warped,
           std::uint64_t seed) {
          GenSpec spec;
          spec.kind = dataset_kind_from_string(kind);
          spec.t = t;
          spec.train_count = train_n;
          spec.test_count = test_n;
          spec.noise_sigma = noise;
          spec.warp_roughness = roughness;
          spec.warped = warped;
          spec.seed = seed;
          auto [train_ds, test_ds] = generate(spec);
          return py::make_tuple(dataset_to_py(train_ds),
                                dataset_to_py(test_ds));
        },
        py::arg("kind"), py::arg("t") = 100, py::arg("train_n") = 8000,
        py::arg("test_n") = 2000, py::arg("noise") = 0.2,
        py::arg("roughness") = 0.5, py::arg("warped") = true,
        py::arg("seed") = 0,
        "Returns ((x_train, y_train), (x_test, y_test)) numpy arrays");

  // --- training / verification -------------------------------------------
  m.def("run_experiment",
        [](const std::string& config_json) {
          ExperimentConfig cfg = parse_experiment_config(config_json);
          std::optional<Model> model;
          ExperimentResult r = run_experiment(cfg, model);
          py::list history;
          for (const auto& p : r.history.points)
            history.append(py::make_tuple(p.iteration, p.train_loss,
                                          p.test_accuracy));
          py::dict out;
          out["final_accuracy"] = r.final_accuracy;
          out["history"] = history;
          return out;
        },
        py::arg("config_json"),
        "Run a full train/eval experiment from a JSON manifest");
  m.def("gradient_checks",
        [](std::uint64_t seed) {
          py::list out;
          for (const auto& r : run_gradient_checks(seed)) {
            py::dict d;
            d["op"] = r.op;
            d["max_rel_error"] = r.max_rel_error;
            d["passed"] = r.passed;
            out.append(d);
          }
          return out;
        },
        py::arg("seed") = 1234);
}
