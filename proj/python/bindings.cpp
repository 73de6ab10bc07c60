// Python bindings for the core library. Arrays come in and go out as
// numpy arrays; everything else maps onto plain Python types.

#include "nvmask/bca_transport.hpp"
#include "nvmask/implant_sim.hpp"
#include "nvmask/mask_geometry.hpp"
#include "nvmask/pipeline.hpp"
#include "nvmask/spatial_stats.hpp"
#include "nvmask/spin_analysis.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace nvmask;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a)
{
    if (a.ndim() != 1) throw Error("expected a 1-D array");
    return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v)
{
    Array out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

std::vector<Vec3> points3(const Array& a)
{
    if (a.ndim() != 2 || (a.shape(1) != 3 && a.shape(1) != 2)) throw Error("expected an (n, 3) or (n, 2) array");
    const auto cols = a.shape(1);
    std::vector<Vec3> out(static_cast<std::size_t>(a.shape(0)));
    const double* d = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].x = d[i * cols];
        out[i].y = d[i * cols + 1];
        out[i].z = cols == 3 ? d[i * cols + 2] : 0.0;
    }
    return out;
}

NaaLattice lattice(double aperture_nm, double wall_nm)
{
    NaaLattice l;
    l.aperture_diameter = aperture_nm;
    l.wall_width = wall_nm;
    return l;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Masked ion implantation and NV placement statistics";
    py::register_exception<Error>(m, "NvmaskError", PyExc_ValueError);

    // mask geometry
    m.def("open_area_ratio", [](double a, double w) { return open_area_ratio(lattice(a, w)); },
          py::arg("aperture_diameter_nm"), py::arg("wall_width_nm"));
    m.def("effective_dose", &effective_dose, py::arg("dose"), py::arg("open_ratio"));
    m.def("expected_ion_count", &expected_ion_count, py::arg("dose"), py::arg("area_nm2"),
          py::arg("open_fraction") = 1.0);
    m.def(
        "transmits",
        [](double a, double w, const Array& xy) {
            const NaaLattice l = lattice(a, w);
            const auto pts = points3(xy);
            py::array_t<bool> out(static_cast<py::ssize_t>(pts.size()));
            for (std::size_t i = 0; i < pts.size(); ++i) out.mutable_data()[i] = transmits(l, {pts[i].x, pts[i].y});
            return out;
        },
        py::arg("aperture_diameter_nm"), py::arg("wall_width_nm"), py::arg("xy"));

    // transport
    py::class_<RangeRow>(m, "RangeRow")
        .def_readonly("energy_kev", &RangeRow::energy_kev)
        .def_readonly("rp_nm", &RangeRow::rp_nm)
        .def_readonly("drp_nm", &RangeRow::drp_nm)
        .def_readonly("drlat_nm", &RangeRow::drlat_nm)
        .def("__repr__", [](const RangeRow& r) {
            return "RangeRow(energy_kev=" + std::to_string(r.energy_kev) + ", rp_nm=" + std::to_string(r.rp_nm) +
                   ", drp_nm=" + std::to_string(r.drp_nm) + ", drlat_nm=" + std::to_string(r.drlat_nm) + ")";
        });
    m.def(
        "build_range_table",
        [](const std::vector<double>& energies, std::size_t n_ions, std::uint64_t seed, double density,
           unsigned threads) {
            BcaParams p;
            p.rng_seed = seed;
            if (density > 0.0) p.target = TargetMaterial::carbon(density);
            py::gil_scoped_release release;
            return build_range_table(energies, n_ions, p, threads).rows();
        },
        py::arg("energies_kev"), py::arg("n_ions"), py::arg("seed"), py::arg("density") = 0.0,
        py::arg("threads") = 0);
    m.def(
        "scatter_angle",
        [](double energy_ev, double b_nm) { return scatter(energy_ev, b_nm, IonSpecies{}, TargetMaterial{}).theta_cm; },
        py::arg("energy_ev"), py::arg("impact_parameter_nm"));

    // spatial statistics
    m.def(
        "nearest_neighbor_distances",
        [](const Array& pts, bool lateral_only) { return to_array(nearest_neighbor_distances(points3(pts), lateral_only)); },
        py::arg("points"), py::arg("lateral_only") = false);
    m.def(
        "fwhm",
        [](const Array& samples, double bin_width) { return fwhm(Histogram::from_samples(to_vector(samples), bin_width)); },
        py::arg("samples"), py::arg("bin_width"));
    m.def(
        "kde2d",
        [](const Array& pts, std::pair<double, double> origin, double spacing, long nx, long ny,
           std::optional<double> bandwidth) {
            const auto p3 = points3(pts);
            std::vector<Vec2> p2;
            for (const auto& p : p3) p2.push_back({p.x, p.y});
            const GridSpec g{{origin.first, origin.second}, spacing, nx, ny};
            const auto d = bandwidth ? kde2d(p2, g, *bandwidth) : kde2d(p2, g);
            py::array_t<double> out({ny, nx});
            std::copy(d.values.begin(), d.values.end(), out.mutable_data());
            return py::make_tuple(out, d.bandwidth, d.coverage);
        },
        py::arg("points"), py::arg("origin"), py::arg("spacing"), py::arg("nx"), py::arg("ny"),
        py::arg("bandwidth") = py::none());

    // spin analysis
    m.def("dipolar_coupling", &dipolar_coupling, py::arg("r_nm"), py::arg("angular_factor") = 1.0);
    m.def("strongly_coupled", &strongly_coupled, py::arg("nu_dip_hz"), py::arg("t2_us"));
    m.def("g2_model", &g2_model, py::arg("t_ns"), py::arg("n_emitters"), py::arg("tau1_ns"), py::arg("tau2_ns"),
          py::arg("bunching"));
    m.def(
        "fit_g2",
        [](const Array& t, const Array& g2, std::optional<Array> sigma, std::uint64_t seed) {
            G2Trace tr{to_vector(t), to_vector(g2), sigma ? to_vector(*sigma) : std::vector<double>{}};
            const G2Fit f = fit_g2(tr, seed);
            py::dict d;
            d["g2_0"] = f.g2_0;
            d["tau1_ns"] = f.tau1_ns;
            d["tau2_ns"] = f.tau2_ns;
            d["bunching"] = f.bunching;
            d["residual"] = f.residual;
            d["emitters"] = to_string(count_emitters(f.g2_0));
            return d;
        },
        py::arg("t_ns"), py::arg("g2"), py::arg("sigma") = py::none(), py::arg("seed") = 0);
    m.def(
        "count_emitters", [](double g) { return to_string(count_emitters(g)); }, py::arg("g2_0"));
    m.def(
        "fit_hahn_echo",
        [](const Array& t, const Array& c) {
            const EchoFit f = fit_hahn_echo({to_vector(t), to_vector(c)});
            py::dict d;
            d["t2_us"] = f.t2_us;
            d["stretch"] = f.stretch;
            d["amplitude"] = f.amplitude;
            d["offset"] = f.offset;
            d["residual"] = f.residual;
            return d;
        },
        py::arg("t_us"), py::arg("coherence"));
    m.def(
        "count_odmr_dips",
        [](const Array& f, const Array& c, double prominence, double min_sep) {
            const DipCount d = count_odmr_dips({to_vector(f), to_vector(c)}, prominence, min_sep);
            return py::make_tuple(d.dip_count, d.nv_estimate, d.dip_frequencies_mhz);
        },
        py::arg("f_mhz"), py::arg("contrast"), py::arg("prominence") = 0.01, py::arg("min_separation_mhz") = 5.0);

    // pipeline commands
    m.def(
        "run_implant",
        [](const std::filesystem::path& config, std::optional<std::uint64_t> seed,
           std::optional<std::filesystem::path> out, unsigned threads) {
            RunConfig c = load_config(config);
            if (seed) c.seed = *seed;
            RunOptions o;
            o.threads = threads;
            o.output_dir = out;
            py::gil_scoped_release release;
            const auto s = cmd_implant(c, o);
            return std::make_pair(s.defects_csv, s.spots_json);
        },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none(), py::arg("threads") = 0);
    m.attr("schema_version") = schema_version;
}
