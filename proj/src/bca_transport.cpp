#include "nvmask/bca_transport.hpp"

#include "nvmask/constants.hpp"
#include "nvmask/io.hpp"
#include "nvmask/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace nvmask {

namespace {

// MAGIC fitting coefficients for the ZBL universal potential
constexpr double magic_c1 = 0.99229;
constexpr double magic_c2 = 0.011615;
constexpr double magic_c3 = 0.0071222;
constexpr double magic_c4 = 9.3066;
constexpr double magic_c5 = 14.813;

constexpr double zbl_c[4] = {0.18175, 0.50986, 0.28022, 0.028171};
constexpr double zbl_d[4] = {3.1998, 0.94229, 0.4029, 0.20162};

// g(R) = 1 - phi(R)/(R eps) - b^2/R^2, zero at the turning point
double turning_function(double r, double eps, double b)
{
    return 1.0 - zbl_screening(r) / (r * eps) - (b * b) / (r * r);
}

double turning_derivative(double r, double eps, double b)
{
    const double phi = zbl_screening(r);
    const double dphi = zbl_screening_derivative(r);
    return -(dphi * r - phi) / (r * r * eps) + 2.0 * b * b / (r * r * r);
}

Vec3 rotate_direction(Vec3 d, double cos_psi, double sin_psi, double azimuth)
{
    const double cphi = std::cos(azimuth), sphi = std::sin(azimuth);
    Vec3 out;
    const double s2 = 1.0 - d.z * d.z;
    if (s2 > 1e-10) {
        const double s = std::sqrt(s2);
        out.x = d.x * cos_psi + sin_psi * (d.x * d.z * cphi - d.y * sphi) / s;
        out.y = d.y * cos_psi + sin_psi * (d.y * d.z * cphi + d.x * sphi) / s;
        out.z = d.z * cos_psi - sin_psi * cphi * s;
    } else {
        out.x = sin_psi * cphi;
        out.y = sin_psi * sphi;
        out.z = (d.z >= 0.0 ? 1.0 : -1.0) * cos_psi;
    }
    const double n = norm(out);
    return (1.0 / n) * out;
}

} // namespace

void IonSpecies::validate() const
{
    if (atomic_number < 1) throw Error("ion atomic number must be >= 1");
    if (!(mass > 0.0)) throw Error("ion mass must be positive");
}

void TargetMaterial::validate() const
{
    if (atomic_number < 1) throw Error("target atomic number must be >= 1");
    if (!(mass > 0.0)) throw Error("target mass must be positive");
    if (!(atomic_density > 0.0)) throw Error("target atomic density must be positive");
}

TargetMaterial TargetMaterial::carbon(double grams_per_cm3)
{
    TargetMaterial t;
    t.atomic_density = grams_per_cm3 / (t.mass * constants::amu_gram);
    return t;
}

ElectronicStopping parse_electronic_stopping(const std::string& name)
{
    if (name == "lindhard_scharff") return ElectronicStopping::lindhard_scharff;
    if (name == "off") return ElectronicStopping::off;
    throw Error("unknown electronic stopping model '" + name + "' (expected lindhard_scharff or off)");
}

void BcaParams::validate() const
{
    ion.validate();
    target.validate();
    if (!(stop_energy > 0.0)) throw Error("stop energy must be positive");
    if (!(max_impact_factor > 0.0)) throw Error("max impact factor must be positive");
}

double kinematic_factor(const IonSpecies& ion, const TargetMaterial& target)
{
    const double s = ion.mass + target.mass;
    return 4.0 * ion.mass * target.mass / (s * s);
}

double zbl_screening_length(const IonSpecies& ion, const TargetMaterial& target)
{
    return 0.8854 * constants::bohr_radius_nm /
           (std::pow(ion.atomic_number, 0.23) + std::pow(target.atomic_number, 0.23));
}

double zbl_screening(double x)
{
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += zbl_c[k] * std::exp(-zbl_d[k] * x);
    return s;
}

double zbl_screening_derivative(double x)
{
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s -= zbl_c[k] * zbl_d[k] * std::exp(-zbl_d[k] * x);
    return s;
}

double reduced_energy(double energy_ev, const IonSpecies& ion, const TargetMaterial& target)
{
    const double e_cm = energy_ev * target.mass / (ion.mass + target.mass);
    return zbl_screening_length(ion, target) * e_cm /
           (ion.atomic_number * target.atomic_number * constants::coulomb_ev_nm);
}

double closest_approach(double eps, double b)
{
    // g is increasing in r; bracket between a tiny radius and the bare-Coulomb
    // turning point, which is always at or beyond the screened one.
    double hi = 0.5 * (1.0 / eps + std::sqrt(1.0 / (eps * eps) + 4.0 * b * b));
    double lo = hi * 1e-9;
    double r = hi;
    for (int it = 0; it < 200; ++it) {
        const double g = turning_function(r, eps, b);
        if (g > 0.0) hi = r;
        else lo = r;
        const double dg = turning_derivative(r, eps, b);
        double next = r - g / dg;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - r) <= 1e-15 * r) {
            r = next;
            break;
        }
        r = next;
    }
    return r;
}

ScatterResult scatter(double energy_ev, double impact_parameter_nm, const IonSpecies& ion,
                      const TargetMaterial& target)
{
    if (!(energy_ev > 0.0)) throw Error("scatter: energy must be positive");
    if (impact_parameter_nm < 0.0) throw Error("scatter: impact parameter must be >= 0");

    const double a = zbl_screening_length(ion, target);
    const double eps = reduced_energy(energy_ev, ion, target);
    const double b = impact_parameter_nm / a;
    const double r0 = closest_approach(eps, b);

    // potential relative to the CM energy, and its slope, at closest approach
    const double v0 = zbl_screening(r0) / (r0 * eps);
    const double dv0 = (zbl_screening_derivative(r0) * r0 - zbl_screening(r0)) / (r0 * r0 * eps);
    const double rc = dv0 < 0.0 ? std::max(0.0, 2.0 * (1.0 - v0) / -dv0) : 0.0;

    const double sqrt_eps = std::sqrt(eps);
    const double alpha = 1.0 + magic_c1 / sqrt_eps;
    const double beta = (magic_c2 + sqrt_eps) / (magic_c3 + sqrt_eps);
    const double gamma = (magic_c5 + eps) / (magic_c4 + eps);
    const double A = 2.0 * alpha * eps * std::pow(b, beta);
    const double G = gamma / (std::sqrt(1.0 + A * A) - A);
    const double delta = A * (r0 - b) / (1.0 + G);

    const double cos_half = std::clamp((b + rc + delta) / (r0 + rc), 0.0, 1.0);
    ScatterResult out;
    out.theta_cm = 2.0 * std::acos(cos_half);
    const double s = std::sin(0.5 * out.theta_cm);
    out.energy_transfer = kinematic_factor(ion, target) * energy_ev * s * s;
    return out;
}

double electronic_stopping(double energy_ev, const IonSpecies& ion, const TargetMaterial& target,
                           ElectronicStopping model)
{
    if (!(energy_ev > 0.0)) throw Error("electronic_stopping: energy must be positive");
    if (model == ElectronicStopping::off) return 0.0;

    // Lindhard-Scharff coefficient in eV / (1e15 atoms/cm^2) per sqrt(keV)
    const double z1 = ion.atomic_number, z2 = target.atomic_number;
    const double k = 1.212 * std::pow(z1, 7.0 / 6.0) * z2 /
                     (std::pow(std::pow(z1, 2.0 / 3.0) + std::pow(z2, 2.0 / 3.0), 1.5) * std::sqrt(ion.mass));
    // areal density per nm of path, in units of 1e15 atoms/cm^2
    const double areal_per_nm = target.atomic_density * 1e-7 / 1e15;
    return k * std::sqrt(energy_ev / 1000.0) * areal_per_nm;
}

StoppedIon transport_ion(double energy_kev, Vec2 entry, const BcaParams& params, Rng& rng)
{
    params.validate();
    const double e0 = energy_kev * 1000.0;
    if (!(e0 > params.stop_energy))
        throw Error("transport_ion: energy " + io::format_number(energy_kev) +
                    " keV does not exceed the stop energy of " + io::format_number(params.stop_energy) + " eV");

    const double n = params.target.density_nm3();
    const double flight = std::cbrt(1.0 / n);
    const double b_max = params.max_impact_factor / std::sqrt(constants::pi * n * flight);
    const double mass_ratio = params.ion.mass / params.target.mass;

    StoppedIon ion;
    Vec3 pos{entry.x, entry.y, 0.0};
    Vec3 dir{0.0, 0.0, 1.0};
    double e = e0;
    bool first = true;

    constexpr long max_steps = 10'000'000;
    for (long step = 0; step < max_steps; ++step) {
        const double len = first ? flight * uniform01(rng) : flight;
        first = false;

        const double de = std::min(e, electronic_stopping(e, params.ion, params.target, params.electronic) * len);
        e -= de;
        ion.electronic_loss += de;
        pos = pos + len * dir;
        ion.path_length += len;

        if (pos.z < 0.0) {
            ion.backscattered = true;
            break;
        }
        if (e < params.stop_energy) break;

        const double b = b_max * std::sqrt(uniform01(rng));
        const double azimuth = 2.0 * constants::pi * uniform01(rng);
        if (!params.suppress_nuclear) {
            const auto hit = scatter(e, b, params.ion, params.target);
            e -= hit.energy_transfer;
            ion.nuclear_loss += hit.energy_transfer;
            const double psi = std::atan2(std::sin(hit.theta_cm), std::cos(hit.theta_cm) + mass_ratio);
            dir = rotate_direction(dir, std::cos(psi), std::sin(psi), azimuth);
        }
        ++ion.collision_count;
        if (e < params.stop_energy) break;
    }

    ion.position = pos;
    ion.residual_energy = e;
    return ion;
}

Rng ion_stream(const BcaParams& params, std::uint64_t run, std::uint64_t index)
{
    return substream(params.rng_seed, Domain::bca_ion, run, index);
}

std::vector<StoppedIon> transport_many(double energy_kev, std::size_t n_ions, const BcaParams& params,
                                       std::uint64_t run, unsigned threads)
{
    params.validate();
    std::vector<StoppedIon> out(n_ions);
    parallel_for(n_ions, threads, [&](std::size_t i) {
        Rng rng = ion_stream(params, run, i);
        out[i] = transport_ion(energy_kev, Vec2{}, params, rng);
    });
    return out;
}

RangeRow range_moments(double energy_kev, const std::vector<StoppedIon>& ions)
{
    double sz = 0.0, sx = 0.0, sy = 0.0;
    std::size_t n = 0;
    for (const auto& ion : ions) {
        if (ion.backscattered) continue;
        sz += ion.position.z;
        sx += ion.position.x;
        sy += ion.position.y;
        ++n;
    }
    if (n < 2) throw Error("range_moments: fewer than two stopped ions");
    const double mz = sz / n, mx = sx / n, my = sy / n;
    double vz = 0.0, vlat = 0.0;
    for (const auto& ion : ions) {
        if (ion.backscattered) continue;
        vz += (ion.position.z - mz) * (ion.position.z - mz);
        vlat += (ion.position.x - mx) * (ion.position.x - mx) + (ion.position.y - my) * (ion.position.y - my);
    }
    RangeRow row;
    row.energy_kev = energy_kev;
    row.rp_nm = mz;
    row.drp_nm = std::sqrt(vz / static_cast<double>(n - 1));
    // per-axis lateral straggle, pooled over x and y
    row.drlat_nm = std::sqrt(vlat / (2.0 * static_cast<double>(n - 1)));
    return row;
}

RangeTable build_range_table(const std::vector<double>& energies_kev, std::size_t n_ions,
                             const BcaParams& params, unsigned threads)
{
    params.validate();
    if (energies_kev.empty()) throw Error("build_range_table: no energies given");
    if (n_ions < 1000) throw Error("build_range_table: at least 1000 ions per energy are required");
    std::vector<RangeRow> rows;
    for (double e : energies_kev) {
        if (!(e * 1000.0 >= 2.0 * params.stop_energy))
            throw Error("build_range_table: energy " + io::format_number(e) +
                        " keV is below twice the stop energy");
        // the run id is the energy itself, so a row never depends on its neighbours
        const auto run = std::bit_cast<std::uint64_t>(e);
        rows.push_back(range_moments(e, transport_many(e, n_ions, params, run, threads)));
    }
    return RangeTable(std::move(rows));
}

} // namespace nvmask
