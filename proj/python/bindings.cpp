#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "carpetslice/carpets.hpp"
#include "carpetslice/dynamics.hpp"
#include "carpetslice/experiment.hpp"
#include "carpetslice/rotation.hpp"
#include "carpetslice/slicer.hpp"

namespace py = pybind11;
using namespace carpetslice;

namespace {

// Rationals cross the boundary as "p/q" strings; the Python side wraps them in Fraction.
Rational rat(const std::string& s) { return parse_rational(s); }

Carpet make_carpet(std::int64_t m, std::int64_t n, const std::vector<std::pair<int, int>>& digits) {
  std::vector<DigitPair> d;
  for (const auto& [i, j] : digits) d.push_back({i, j});
  return Carpet::make(m, n, d);
}

py::dict dim_dict(const DimValue& v) {
  py::dict out;
  out["text"] = v.text();
  out["exact"] = v.exact ? py::object(py::str(v.exact->to_string())) : py::object(py::none());
  out["lo"] = to_string(v.enclosure.lo);
  out["hi"] = to_string(v.enclosure.hi);
  out["approx"] = v.approx();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exact and certified computations on Bedford-McMullen carpets";

  py::register_exception<SpecError>(m, "SpecError", PyExc_ValueError);

  py::class_<Carpet>(m, "Carpet")
      .def(py::init(&make_carpet), py::arg("m"), py::arg("n"), py::arg("digits"))
      .def_readonly("m", &Carpet::m)
      .def_readonly("n", &Carpet::n)
      .def_property_readonly("digits",
                             [](const Carpet& c) {
                               std::vector<std::pair<int, int>> out;
                               for (const auto& d : c.digits) out.emplace_back(d.x, d.y);
                               return out;
                             })
      .def("to_text", &serialize_carpet)
      .def_static("from_text", &parse_carpet_text)
      .def("__eq__", [](const Carpet& a, const Carpet& b) { return a == b; })
      .def("__repr__", [](const Carpet& c) { return "Carpet(" + serialize_carpet(c).substr(0, serialize_carpet(c).size() - 1) + ")"; });

  m.def("dims", [](const Carpet& c, unsigned prec) {
    const DimensionReport r = dims(c, prec);
    py::dict out;
    out["dim_box"] = dim_dict(r.dim_box);
    out["dim_hausdorff"] = dim_dict(r.dim_hausdorff);
    out["dim_p2"] = dim_dict(r.dim_p2);
    out["dim_star"] = dim_dict(r.dim_star);
    out["uniform_fibers"] = r.uniform_fibers;
    return out;
  }, py::arg("carpet"), py::arg("prec") = 128);

  m.def("approximate_square_count", [](const Carpet& c, std::size_t k) { return to_string(approximate_square_count(c, k)); },
        py::arg("carpet"), py::arg("k"));

  m.def("cover_inclusion_swap", [](const Carpet& F, const Carpet& E, std::size_t k, std::size_t slack_cells) {
    return cover_inclusion(AffinePlaneMap::swap(), F, E, k, slack_cells).included;
  }, py::arg("F"), py::arg("E"), py::arg("k"), py::arg("slack_cells") = 1);

  m.def("line_cell_count", [](const Carpet& c, const std::string& slope, const std::string& intercept, std::size_t k) {
    const CoverCount n = count_line_cells(Target{c}, Line::slope_intercept(rat(slope), rat(intercept)), k,
                                          PartitionKind::Dyadic);
    return py::make_tuple(to_string(n.count_lower), to_string(n.count_upper));
  }, py::arg("carpet"), py::arg("slope"), py::arg("intercept"), py::arg("k"));

  m.def("r_k", [](std::int64_t m1, std::int64_t m2, const std::string& t, std::size_t k) {
    return r_k(RotationPoint::rational(rat(t)), theta_of(m1, m2), k);
  }, py::arg("m1"), py::arg("m2"), py::arg("t"), py::arg("k"));

  m.def("closed_form_matches", [](std::int64_t m1, std::int64_t m2, const std::string& x, const std::string& y,
                                  const std::string& t, std::size_t k) {
    return u_iterate_closed_form({rat(x), rat(y)}, RotationPoint::rational(rat(t)), theta_of(m1, m2), k).equal;
  });

  m.def("run_spec_text", [](const std::string& text, const std::string& base_dir, unsigned workers) {
    const ExperimentSpec spec = parse_spec_text(text, base_dir);
    RunOptions opt;
    opt.workers = workers;
    RunResult r;
    {
      py::gil_scoped_release release;
      r = run_experiment(spec, opt);
    }
    return py::make_tuple(to_string(r.outcome), r.result.dump(), r.csv, r.exit_code());
  }, py::arg("text"), py::arg("base_dir") = "", py::arg("workers") = 1);

  m.def("normalize_spec_text", [](const std::string& text, const std::string& base_dir) {
    return serialize_spec(parse_spec_text(text, base_dir));
  }, py::arg("text"), py::arg("base_dir") = "");
}
