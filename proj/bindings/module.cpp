// Copyright 2026 The HyCNN Toolkit Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hycnn/bench.hpp"
#include "hycnn/nets.hpp"
#include "hycnn/ot.hpp"
#include "hycnn/theory.hpp"
#include "hycnn/train.hpp"

namespace py = pybind11;
using namespace hycnn;

namespace {

Vector to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw ContractViolation("expected a 1-D array");
  return Vector(a.data(), a.data() + a.shape(0));
}

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw ContractViolation("expected a 2-D array");
  Matrix m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

py::array_t<double> from_vector(const Vector& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> from_matrix(const Matrix& m) {
  py::array_t<double> out({static_cast<py::ssize_t>(m.rows()),
                           static_cast<py::ssize_t>(m.cols())});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

GateSpec make_gate(const std::string& kind, double tau, double alpha) {
  if (kind == "max") return GateSpec::max_gate();
  if (kind == "logsumexp") return GateSpec::logsumexp(tau);
  if (kind == "relu") return GateSpec::relu();
  if (kind == "leaky_relu") return GateSpec::leaky_relu(alpha);
  if (kind == "softplus") return GateSpec::softplus_gate(tau);
  throw ConfigError("unknown gate kind: " + kind);
}

py::dict cert_to_dict(const ConstructionCertificate& c) {
  py::dict d;
  d["target"] = c.target;
  d["widths"] = c.widths;
  d["claimed_bound"] = c.claimed_bound;
  d["measured"] = c.measured;
  d["method"] = c.method;
  d["pass"] = c.pass;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Convex-shape-constrained networks with two-lane gating: forward and "
      "gradient kernels, principled initializers, certified approximation "
      "constructions, and entropic optimal transport utilities.";

  py::register_exception<ContractViolation>(m, "ContractViolation");
  py::register_exception<ConfigError>(m, "ConfigError");

  m.def("logsumexp2", &logsumexp2, py::arg("a"), py::arg("b"), py::arg("tau"));
  m.def("softplus", &softplus);
  m.def("softplus_inverse", &softplus_inverse);
  m.def(
      "sample_lognormal",
      [](uint64_t seed, double mean, double var, int n) {
        Rng rng(seed);
        return from_vector(sample_lognormal(rng, mean, var, n));
      },
      py::arg("seed"), py::arg("mean"), py::arg("var"), py::arg("n"));

  py::class_<ConvexNet>(m, "Net")
      .def_property_readonly("input_dim",
                             [](const ConvexNet& n) { return n.input_dim; })
      .def_property_readonly("depth", &ConvexNet::depth)
      .def_property_readonly("widths", &ConvexNet::widths)
      .def_property_readonly(
          "arch", [](const ConvexNet& n) { return arch_name(n.arch); })
      .def("__call__",
           [](const ConvexNet& n, const py::array_t<double>& x) {
             return forward(n, to_vector(x));
           })
      .def("forward",
           [](const ConvexNet& n, const py::array_t<double>& x) {
             return forward(n, to_vector(x));
           })
      .def("forward_batch",
           [](const ConvexNet& n, const py::array_t<double>& X) {
             const Matrix xs = to_matrix(X);
             Vector out(xs.rows());
             Vector x(xs.cols());
             for (int i = 0; i < xs.rows(); ++i) {
               std::copy(xs.row(i), xs.row(i) + xs.cols(), x.begin());
               out[i] = forward(n, x);
             }
             return from_vector(out);
           })
      .def("input_gradient",
           [](const ConvexNet& n, const py::array_t<double>& x) {
             return from_vector(input_gradient(n, to_vector(x)));
           })
      .def("pushforward",
           [](const ConvexNet& n, const py::array_t<double>& X) {
             return from_matrix(pushforward(n, to_matrix(X)));
           })
      .def("to_json", [](const ConvexNet& n) { return net_to_json(n); })
      .def("save",
           [](const ConvexNet& n, const std::string& path) { save_net(n, path); })
      .def_static("from_json", &net_from_json)
      .def_static("load", &load_net);

  m.def(
      "init_hycnn",
      [](const std::vector<int>& shape, int input_dim, uint64_t seed,
         const std::string& gate, double tau, double alpha) {
        Rng rng(seed);
        return init_hycnn(shape, input_dim, rng, make_gate(gate, tau, alpha));
      },
      py::arg("shape"), py::arg("input_dim"), py::arg("seed"),
      py::arg("gate") = "max", py::arg("tau") = 1.0, py::arg("alpha") = 0.2);
  m.def(
      "init_groupmax",
      [](const std::vector<int>& shape, int input_dim, uint64_t seed,
         const std::string& gate, double tau, double alpha) {
        Rng rng(seed);
        return init_groupmax(shape, input_dim, rng, make_gate(gate, tau, alpha));
      },
      py::arg("shape"), py::arg("input_dim"), py::arg("seed"),
      py::arg("gate") = "max", py::arg("tau") = 1.0, py::arg("alpha") = 0.2);
  m.def(
      "init_icnn",
      [](const std::vector<int>& shape, int input_dim, uint64_t seed,
         const std::string& style, const std::string& gate, double tau,
         double alpha, bool quadratic_skip) {
        Rng rng(seed);
        return init_icnn_hoedt(shape, input_dim, rng,
                               style == "gaussian" ? WeightStyle::Gaussian
                                                   : WeightStyle::LogNormal,
                               make_gate(gate, tau, alpha), quadratic_skip);
      },
      py::arg("shape"), py::arg("input_dim"), py::arg("seed"),
      py::arg("style") = "lognormal", py::arg("gate") = "relu",
      py::arg("tau") = 1.0, py::arg("alpha") = 0.2,
      py::arg("quadratic_skip") = false);
  m.def(
      "init_mlp",
      [](const std::vector<int>& shape, int input_dim, uint64_t seed) {
        Rng rng(seed);
        return init_mlp(shape, input_dim, rng);
      },
      py::arg("shape"), py::arg("input_dim"), py::arg("seed"));

  m.def(
      "check_convexity",
      [](const ConvexNet& net, uint64_t seed, int trials, double box) {
        Rng rng(seed);
        return check_convexity(net, rng, trials, box).max_relative_violation;
      },
      py::arg("net"), py::arg("seed") = 0, py::arg("trials") = 10000,
      py::arg("box") = 10.0);

  // Approximation constructions and certificates.
  m.def("build_quadratic", [](const std::vector<int>& widths) {
    QuadraticBuild qb = build_quadratic_hycnn(widths);
    return py::make_tuple(qb.net, cert_to_dict(qb.cert));
  });
  m.def("build_quadratic_width2", [](int L) {
    QuadraticBuild qb = build_quadratic_width2(L);
    return py::make_tuple(qb.net, cert_to_dict(qb.cert));
  });
  m.def("build_monomial", [](int n, int L, int mm) {
    MonomialBuild mb = build_monomial_hycnn(n, L, mm);
    return py::make_tuple(mb.net, cert_to_dict(mb.cert));
  });
  m.def("build_multivariate_quadratic", [](int d, int L, int mm) {
    QuadraticBuild qb = build_multivariate_quadratic(d, L, mm);
    return py::make_tuple(qb.net, cert_to_dict(qb.cert));
  });
  m.def("lower_bound_search", &lower_bound_search, py::arg("k"),
        py::arg("resolution") = 0.01);
  m.def(
      "quadratic_sup_error",
      [](const ConvexNet& net) {
        return sup_error_vs_quadratic(pwa_of_network(net, 0.0, 1.0));
      },
      "Exact sup |net(x) - x^2| over [0,1] for piecewise-affine nets");
  m.def(
      "piece_count",
      [](const ConvexNet& net, double lo, double hi) {
        return pwa_of_network(net, lo, hi).piece_count();
      },
      py::arg("net"), py::arg("lo") = -50.0, py::arg("hi") = 50.0);
  m.def(
      "embedding_checks",
      [](uint64_t seed) {
        Rng rng(seed);
        EmbeddingReport r = embedding_checks(rng);
        py::dict d;
        d["icnn_to_hycnn_max_diff"] = r.icnn_to_hycnn_max_diff;
        d["hycnn_to_relu_max_diff"] = r.hycnn_to_relu_max_diff;
        d["hycnn_2222_error"] = r.hycnn_2222_error;
        d["icnn_floor_same_budget"] = r.icnn_floor_same_budget;
        d["pass"] = r.pass;
        return d;
      },
      py::arg("seed") = 0);

  // Entropic OT.
  m.def(
      "sinkhorn",
      [](const py::array_t<double>& a, const py::array_t<double>& b, double eps,
         int max_iter, double tol) {
        SinkhornResult r = sinkhorn(to_matrix(a), to_matrix(b), eps, max_iter, tol);
        py::dict d;
        d["value"] = r.value;
        d["f"] = from_vector(r.f);
        d["g"] = from_vector(r.g);
        d["iterations"] = r.iterations;
        d["converged"] = r.converged;
        return d;
      },
      py::arg("a"), py::arg("b"), py::arg("eps"), py::arg("max_iter") = 5000,
      py::arg("tol") = 1e-6);
  m.def(
      "sinkhorn_divergence",
      [](const py::array_t<double>& a, const py::array_t<double>& b, double eps,
         int max_iter, double tol) {
        return sinkhorn_divergence(to_matrix(a), to_matrix(b), eps, max_iter, tol);
      },
      py::arg("a"), py::arg("b"), py::arg("eps"), py::arg("max_iter") = 5000,
      py::arg("tol") = 1e-6);
  m.def(
      "barycentric_map",
      [](const py::array_t<double>& x, const py::array_t<double>& tgt,
         const py::array_t<double>& g_star, double eps) {
        return from_vector(
            barycentric_map(to_vector(x), to_matrix(tgt), to_vector(g_star), eps));
      },
      py::arg("x"), py::arg("tgt"), py::arg("g_star"), py::arg("eps"));

  // Training.
  py::class_<RegressionResult>(m, "Regressor")
      .def_property_readonly("net",
                             [](const RegressionResult& r) { return r.net; })
      .def_property_readonly(
          "diverged", [](const RegressionResult& r) { return r.diverged; })
      .def_property_readonly(
          "final_train_mse",
          [](const RegressionResult& r) { return r.final_mse; })
      .def_property_readonly(
          "initial_train_mse",
          [](const RegressionResult& r) { return r.initial_mse; })
      .def_property_readonly("trace",
                             [](const RegressionResult& r) {
                               py::list rows;
                               for (const auto& e : r.trace) {
                                 py::dict row;
                                 row["epoch"] = e.epoch;
                                 row["train_mse"] = e.train_mse;
                                 row["lr"] = e.lr;
                                 rows.append(row);
                               }
                               return rows;
                             })
      .def("predict",
           [](const RegressionResult& r, const py::array_t<double>& x) {
             return r.predict(to_vector(x));
           })
      .def("predict_batch",
           [](const RegressionResult& r, const py::array_t<double>& X) {
             const Matrix xs = to_matrix(X);
             Vector out(xs.rows());
             Vector x(xs.cols());
             for (int i = 0; i < xs.rows(); ++i) {
               std::copy(xs.row(i), xs.row(i) + xs.cols(), x.begin());
               out[i] = r.predict(x);
             }
             return from_vector(out);
           });

  m.def(
      "train_regression",
      [](const ConvexNet& net, const py::array_t<double>& X,
         const py::array_t<double>& y, int epochs, int batch_size, double lr,
         uint64_t seed, bool standardize) {
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.lr = Schedule::constant(lr);
        cfg.standardize = standardize;
        Rng rng(seed);
        return train_regression(net, to_matrix(X), to_vector(y), cfg, rng);
      },
      py::arg("net"), py::arg("X"), py::arg("y"), py::arg("epochs") = 100,
      py::arg("batch_size") = 1000, py::arg("lr") = 1e-2, py::arg("seed") = 0,
      py::arg("standardize") = true);

  m.def(
      "saddle_train",
      [](const ConvexNet& f, const ConvexNet& g, const py::array_t<double>& src,
         const py::array_t<double>& tgt, int outer_T, int inner_S, int batch_M,
         double lr, double tau, double lambda_cvx, uint64_t seed) {
        OTConfig cfg;
        cfg.outer_T = outer_T;
        cfg.inner_S = inner_S;
        cfg.batch_M = batch_M;
        cfg.lr = Schedule::cosine(lr, 0.01, outer_T);
        cfg.tau = Schedule::constant(tau);
        cfg.lambda_cvx = lambda_cvx;
        cfg.seed = seed;
        PointCloud s{to_matrix(src), PointCloud::Role::Source};
        PointCloud t{to_matrix(tgt), PointCloud::Role::Target};
        SaddleResult r = saddle_train(f, g, s, t, cfg);
        py::dict d;
        d["diverged"] = r.diverged;
        py::list objs;
        for (const auto& row : r.trace) objs.append(row.objective);
        d["objective_trace"] = objs;
        return py::make_tuple(r.f, r.g, d);
      },
      py::arg("f"), py::arg("g"), py::arg("src"), py::arg("tgt"),
      py::arg("outer_T") = 100, py::arg("inner_S") = 5, py::arg("batch_M") = 256,
      py::arg("lr") = 1e-2, py::arg("tau") = 1.0, py::arg("lambda_cvx") = 0.0,
      py::arg("seed") = 0);

  // Data generators.
  m.def(
      "generate_regression",
      [](const std::string& id, int d, int n, double sigma, uint64_t seed) {
        bench::GeneratorSpec spec{id, d, seed};
        Rng rng(seed);
        bench::RegressionData data = bench::generate_regression(spec, n, sigma, rng);
        return py::make_tuple(from_matrix(data.X), from_vector(data.y),
                              from_vector(data.y_clean));
      },
      py::arg("id"), py::arg("d"), py::arg("n"), py::arg("sigma") = 0.0,
      py::arg("seed") = 0);
  m.def(
      "sample_source",
      [](const std::string& id, int d, int n, uint64_t seed) {
        bench::GeneratorSpec spec{id, d, seed};
        Rng rng(seed);
        return from_matrix(bench::sample_source(spec, n, rng));
      },
      py::arg("id"), py::arg("d"), py::arg("n"), py::arg("seed") = 0);
  m.def(
      "sample_target",
      [](const std::string& id, int d, int n, uint64_t seed) {
        bench::GeneratorSpec spec{id, d, seed};
        Rng rng(seed);
        return from_matrix(bench::sample_target(spec, n, rng));
      },
      py::arg("id"), py::arg("d"), py::arg("n"), py::arg("seed") = 0);
  m.def(
      "ot_map",
      [](const std::string& id, const py::array_t<double>& x) {
        bench::GeneratorSpec spec{id, static_cast<int>(x.shape(0)), 0};
        return from_vector(bench::ot_map_value(spec, to_vector(x)));
      },
      py::arg("id"), py::arg("x"));
}
