#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>

#include "eivdc/dc.hpp"
#include "eivdc/dgp.hpp"
#include "eivdc/errors.hpp"
#include "eivdc/estimators.hpp"
#include "eivdc/experiments.hpp"
#include "eivdc/inference.hpp"

namespace py = pybind11;
using namespace eivdc;

namespace {

CrossSection make_cross_section(const Vector& y, const Vector& x, const std::optional<Matrix>& z) {
  return z ? CrossSection(y, x, *z) : CrossSection(y, x, Matrix(y.size(), 0));
}

DgpConfig make_dgp(const std::map<std::string, std::string>& options) {
  DgpConfig cfg;
  for (const auto& [key, value] : options) {
    if (!cfg.set(key, value)) throw Error(ErrorKind::usage, "unknown dgp key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

EstimateOptions make_options(const std::string& method, int blocks_per_year, bool fe, bool te,
                             double alpha, int bootstrap_draws, const std::string& partition_mode,
                             std::uint64_t seed, unsigned threads) {
  EstimateOptions o;
  o.method = parse_method(method);
  o.blocks_per_year = blocks_per_year;
  o.fe = fe;
  o.te = te;
  o.alpha = alpha;
  o.bootstrap_draws = bootstrap_draws;
  o.partition_mode = parse_partition_mode(partition_mode);
  o.seed = seed;
  o.threads = threads;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Error-in-variables estimators: OLS, third-moment and divide-and-conquer";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  m.def("simulate",
        [](const std::map<std::string, std::string>& options, std::uint64_t replication) {
          const SimulatedPanel sim = generate_panel(make_dgp(options), replication);
          const PanelData p = sim.to_panel();
          py::dict out;
          out["firm"] = p.firm();
          out["year"] = p.year();
          out["y"] = Vector(p.y());
          out["x"] = Vector(p.x());
          out["z"] = Vector(p.z().col(0));
          return out;
        },
        py::arg("options"), py::arg("replication") = 0);

  m.def("estimate",
        [](const std::vector<std::int64_t>& firm, const std::vector<int>& year, const Vector& y,
           const Vector& x, const std::optional<Matrix>& z, std::vector<std::string> names,
           const std::string& method, int blocks_per_year, bool fe, bool te, double alpha,
           int bootstrap_draws, const std::string& partition_mode, std::uint64_t seed,
           unsigned threads) {
          const Matrix zz = z ? *z : Matrix(y.size(), 0);
          if (names.empty()) {
            for (Index j = 0; j < zz.cols(); ++j) names.push_back("z" + std::to_string(j + 1));
          }
          const PanelData panel(firm, year, y, x, zz, names);
          const EstimateOptions o = make_options(method, blocks_per_year, fe, te, alpha,
                                                 bootstrap_draws, partition_mode, seed, threads);
          return report_json(estimate_panel(panel, o));
        },
        py::arg("firm"), py::arg("year"), py::arg("y"), py::arg("x"), py::arg("z") = py::none(),
        py::arg("control_names") = std::vector<std::string>{}, py::arg("method") = "dc",
        py::arg("blocks_per_year") = 1, py::arg("fe") = false, py::arg("te") = false,
        py::arg("alpha") = 0.05, py::arg("bootstrap_draws") = 399,
        py::arg("partition_mode") = "random", py::arg("seed") = 0, py::arg("threads") = 1);

  m.def("run_mc",
        [](const std::map<std::string, std::string>& dgp,
           const std::vector<std::pair<std::string, int>>& methods, const std::vector<int>& specs,
           int reps, double alpha, int bootstrap_draws, const std::string& partition_mode,
           std::uint64_t seed, unsigned threads) {
          McConfig cfg;
          cfg.dgp = make_dgp(dgp);
          for (const auto& [name, blocks] : methods) cfg.methods.push_back({parse_method(name), blocks});
          for (const int s : specs) cfg.specs.push_back(ModelSpec::from_number(s));
          cfg.reps = reps;
          cfg.alpha = alpha;
          cfg.bootstrap_draws = bootstrap_draws;
          cfg.partition_mode = parse_partition_mode(partition_mode);
          cfg.seed = seed;
          cfg.threads = threads;
          return summary_json(run_mc(cfg));
        },
        py::arg("dgp"), py::arg("methods"), py::arg("specs"), py::arg("reps"), py::arg("alpha"),
        py::arg("bootstrap_draws"), py::arg("partition_mode"), py::arg("seed"),
        py::arg("threads"));

  m.def("ols",
        [](const Vector& y, const Vector& x, const std::optional<Matrix>& z) {
          const OlsResult r = ols(make_cross_section(y, x, z));
          return py::make_tuple(r.beta, r.gamma, r.cov);
        },
        py::arg("y"), py::arg("x"), py::arg("z") = py::none());

  m.def("geary_3m",
        [](const Vector& y, const Vector& x, const std::optional<Matrix>& z) {
          const CrossSection cs = make_cross_section(y, x, z);
          const Geary3mResult r = geary_3m(cs);
          return py::make_tuple(r.beta, r.gamma, asy_var_3m(cs, r.beta), r.weak_identification);
        },
        py::arg("y"), py::arg("x"), py::arg("z") = py::none());

  m.def("dc_estimate",
        [](const Vector& y, const Vector& x, const std::optional<Matrix>& z, int blocks,
           std::uint64_t seed, const std::string& partition_mode) {
          Rng rng(seed);
          const DcResult r = dc_estimate(make_cross_section(y, x, z), blocks,
                                         parse_partition_mode(partition_mode), rng);
          return py::make_tuple(r.beta, r.subsamples.values, r.subsamples.degenerate);
        },
        py::arg("y"), py::arg("x"), py::arg("z") = py::none(), py::arg("blocks") = 1,
        py::arg("seed") = 0, py::arg("partition_mode") = "random");

  m.def("dc_bootstrap_ci",
        [](const std::vector<double>& subsamples, double beta_hat, int draws, double alpha,
           std::uint64_t seed) {
          const BootstrapResult r = dc_bootstrap_ci(subsamples, beta_hat, {draws, alpha, seed});
          return py::make_tuple(r.ci.lo, r.ci.hi, r.draws);
        },
        py::arg("subsamples"), py::arg("beta_hat"), py::arg("draws") = 399,
        py::arg("alpha") = 0.05, py::arg("seed") = 0);
}
