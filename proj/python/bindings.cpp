// Python bindings for the solver core: model loading, the backward sweep,
// control evaluation, the monte carlo estimators, and the oracles.

#include "nonlocal_dp/mc.hpp"
#include "nonlocal_dp/model.hpp"
#include "nonlocal_dp/oracles.hpp"
#include "nonlocal_dp/pde.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace nldp;

namespace {

SchemeConfig make_scheme(const std::string& boundary, double cfl, int threads) {
    SchemeConfig scheme;
    if (boundary == "clamp") scheme.boundary = BoundaryRule::ClampToPayoff;
    else if (boundary != "extrapolate")
        throw Error("boundary must be extrapolate or clamp");
    scheme.cfl_factor = cfl;
    scheme.threads = threads;
    return scheme;
}

McConfig make_mc(long n_paths, std::uint64_t seed, int substeps, int threads) {
    McConfig mc;
    mc.n_paths = n_paths;
    mc.seed = seed;
    mc.substeps = substeps;
    mc.threads = threads;
    return mc;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "grid and monte carlo engine for time-consistent convex dynamic procedures";

    py::register_exception<Error>(m, "EngineError");

    py::class_<Model>(m, "Model")
        .def_property_readonly("n", [](const Model& mod) { return mod.space.n; })
        .def_property_readonly("n_steps", [](const Model& mod) { return mod.time.N; })
        .def_property_readonly("n_cells", [](const Model& mod) { return mod.space.n_cells(); })
        .def_property_readonly("r", [](const Model& mod) { return mod.time.r; })
        .def_property_readonly("horizon", [](const Model& mod) { return mod.time.T; })
        .def_property_readonly("dt", [](const Model& mod) { return mod.time.dt(); })
        .def_property_readonly("warnings", [](const Model& mod) { return mod.warnings; })
        .def("cell_points",
             [](const Model& mod) {
                 Mat points(mod.space.n_cells(), mod.space.n);
                 for (long c = 0; c < mod.space.n_cells(); ++c)
                     points.row(c) = mod.space.point(c).transpose();
                 return points;
             })
        .def("terminal_samples", &Model::terminal_samples)
        .def("payoff",
             [](const Model& mod, const Vec& x) { return mod.payoff.eval(x, mod.space); })
        .def("serialize", [](const Model& mod) { return serialize_model(mod); });

    py::class_<Control>(m, "Control")
        .def_readonly("nodes", &Control::nodes)
        .def_readonly("selectors", &Control::selectors)
        .def("serialize", [](const Control& c) { return serialize_control(c); });

    py::class_<McEstimate>(m, "McEstimate")
        .def_readonly("mean", &McEstimate::mean)
        .def_readonly("se", &McEstimate::se)
        .def_readonly("n_paths", &McEstimate::n_paths)
        .def("__repr__", [](const McEstimate& e) {
            return "McEstimate(mean=" + std::to_string(e.mean) + ", se=" + std::to_string(e.se) +
                   ", n_paths=" + std::to_string(e.n_paths) + ")";
        });

    py::class_<SolveResult>(m, "SolveResult")
        .def_property_readonly("n_levels",
                               [](const SolveResult& r) { return r.levels.size(); })
        .def("values", [](const SolveResult& r, int level) { return r.levels.at(level).values; })
        .def("policy_slice",
             [](const SolveResult& r, int level) { return r.levels.at(level).policy; })
        .def("time", [](const SolveResult& r, int level) { return r.levels.at(level).t; })
        .def_property_readonly("policy", [](const SolveResult& r) { return r.policy; })
        .def_property_readonly("band_cells", [](const SolveResult& r) {
            return r.diagnostics.front().band_cells;
        });

    m.def("load_model", &load_model, py::arg("text"));
    m.def("load_model_file", &load_model_file, py::arg("path"));

    m.def(
        "solve",
        [](const Model& model, const std::string& boundary, double cfl, int threads) {
            return solve(model, make_scheme(boundary, cfl, threads));
        },
        py::arg("model"), py::arg("boundary") = "extrapolate", py::arg("cfl") = 1.0,
        py::arg("threads") = 0);

    m.def(
        "evaluate_control",
        [](const Control& gamma, const Model& model, const std::string& boundary, double cfl,
           int threads) {
            return evaluate_control_dp(gamma, model, make_scheme(boundary, cfl, threads));
        },
        py::arg("control"), py::arg("model"), py::arg("boundary") = "extrapolate",
        py::arg("cfl") = 1.0, py::arg("threads") = 0);

    m.def(
        "check_time_consistency",
        [](const Model& model, int mid_node) {
            return check_time_consistency(model, SchemeConfig{}, mid_node);
        },
        py::arg("model"), py::arg("mid_node"));

    m.def(
        "convergence_study",
        [](const Model& model, int levels, const std::string& reference) {
            const auto rows = convergence_study(model, SchemeConfig{}, levels,
                                                reference == "finest"
                                                    ? ConvergenceReference::Finest
                                                    : ConvergenceReference::ClosedForm);
            py::list out;
            for (const auto& row : rows) {
                py::dict d;
                d["level"] = row.level;
                d["dx"] = row.dx;
                d["dt"] = row.dt;
                d["sup_error"] = row.sup_error;
                d["observed_order"] = row.observed_order;
                out.append(d);
            }
            return out;
        },
        py::arg("model"), py::arg("levels") = 4, py::arg("reference") = "closed-form");

    m.def(
        "mc_expectation",
        [](const Control& gamma, const Model& model, double r, const Vec& y, long n_paths,
           std::uint64_t seed, int substeps, int threads) {
            return mc_expectation(gamma, model.payoff, r, y, model,
                                  make_mc(n_paths, seed, substeps, threads));
        },
        py::arg("control"), py::arg("model"), py::arg("r"), py::arg("y"), py::arg("n_paths"),
        py::arg("seed"), py::arg("substeps") = 2, py::arg("threads") = 0);

    m.def(
        "mc_penalty",
        [](const Control& gamma, const Model& model, double r, const Vec& y, long n_paths,
           std::uint64_t seed, int substeps, int threads) {
            return mc_penalty(gamma, r, y, model, make_mc(n_paths, seed, substeps, threads));
        },
        py::arg("control"), py::arg("model"), py::arg("r"), py::arg("y"), py::arg("n_paths"),
        py::arg("seed"), py::arg("substeps") = 2, py::arg("threads") = 0);

    m.def(
        "mc_lower_bound",
        [](const Control& gamma, const Model& model, double r, const Vec& y, long n_paths,
           std::uint64_t seed, int substeps, int threads) {
            return mc_lower_bound(gamma, model.payoff, r, y, model,
                                  make_mc(n_paths, seed, substeps, threads));
        },
        py::arg("control"), py::arg("model"), py::arg("r"), py::arg("y"), py::arg("n_paths"),
        py::arg("seed"), py::arg("substeps") = 2, py::arg("threads") = 0);

    m.def(
        "mc_cocycle_residual",
        [](const Control& gamma, const Model& model, int s, int t, int u, const Vec& y,
           long n_paths, std::uint64_t seed, int substeps, int threads) {
            const auto result =
                cocycle_check(gamma, s, t, u, y, model, make_mc(n_paths, seed, substeps, threads));
            py::dict out;
            out["mean"] = result.residual.mean;
            out["se"] = result.residual.se;
            out["max_abs"] = result.max_abs;
            return out;
        },
        py::arg("control"), py::arg("model"), py::arg("s"), py::arg("t"), py::arg("u"),
        py::arg("y"), py::arg("n_paths"), py::arg("seed"), py::arg("substeps") = 2,
        py::arg("threads") = 0);

    m.def(
        "exp_martingale_stat",
        [](const Model& model, int candidate, const Vec& theta_vec, double r, double t,
           const Vec& y, long n_paths, std::uint64_t seed, int substeps, int threads) {
            return exp_martingale_stat(model.gamma.sets.at(0).at(candidate), theta_vec, r, t, y,
                                       model, make_mc(n_paths, seed, substeps, threads));
        },
        py::arg("model"), py::arg("candidate"), py::arg("theta_vec"), py::arg("r"), py::arg("t"),
        py::arg("y"), py::arg("n_paths"), py::arg("seed"), py::arg("substeps") = 2,
        py::arg("threads") = 0);

    m.def(
        "generator_martingale_stat",
        [](const Model& model, int candidate, int degree, int axis, const Vec& center,
           double radius, double r, double t, const Vec& y, long n_paths, std::uint64_t seed,
           int substeps, int threads) {
            const WindowedTestFunction f(degree, axis, center, radius);
            return generator_martingale_stat(model.gamma.sets.at(0).at(candidate), f, r, t, y,
                                             model, make_mc(n_paths, seed, substeps, threads));
        },
        py::arg("model"), py::arg("candidate"), py::arg("degree"), py::arg("axis"),
        py::arg("center"), py::arg("radius"), py::arg("r"), py::arg("t"), py::arg("y"),
        py::arg("n_paths"), py::arg("seed"), py::arg("substeps") = 2, py::arg("threads") = 0);

    m.def(
        "paste_composition",
        [](const Control& gamma, const Control& delta, int s_node, const Model& model) {
            return paste_composition(gamma, delta, s_node, model);
        },
        py::arg("gamma"), py::arg("delta"), py::arg("s_node"), py::arg("model"));

    m.def(
        "paste_bifurcation",
        [](const Control& gamma, const Control& delta, int s_node, const std::vector<bool>& region,
           const Model& model) {
            return paste_bifurcation(gamma, delta, s_node, region, model);
        },
        py::arg("gamma"), py::arg("delta"), py::arg("s_node"), py::arg("region"),
        py::arg("model"));

    m.def(
        "gaussian_semigroup",
        [](const Model& model, const Mat& a, const Vec& b, double tau, const Vec& x) {
            return gaussian_semigroup(model.payoff, model.space, a, b, tau, x);
        },
        py::arg("model"), py::arg("a"), py::arg("b"), py::arg("tau"), py::arg("x"));

    m.def(
        "g_heat_reference",
        [](const Model& model, double a_min, double a_max, double tau, const Vec& x) {
            return g_heat_reference(model.payoff, model.space, a_min, a_max, tau, x);
        },
        py::arg("model"), py::arg("a_min"), py::arg("a_max"), py::arg("tau"), py::arg("x"));

    m.def(
        "brute_force_dp",
        [](const Model& model) { return brute_force_dp(model, SchemeConfig{}); },
        py::arg("model"));
}
