#pragma once

#include "nvmask/geometry.hpp"
#include "nvmask/random.hpp"
#include "nvmask/range_table.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nvmask {

struct IonSpecies {
    int atomic_number = 7;
    double mass = 14.003; // amu

    void validate() const;
};

struct TargetMaterial {
    int atomic_number = 6;
    double mass = 12.011;              // amu
    double atomic_density = 1.7599e23; // atoms / cm^3 (3.51 g/cm^3 carbon)
    double surface_binding = 7.41;     // eV; carried for completeness, unused by the transport loop

    void validate() const;

    /// atoms / nm^3
    double density_nm3() const { return atomic_density * 1e-21; }

    static TargetMaterial diamond() { return {}; }
    /// Monatomic carbon at the given mass density.
    static TargetMaterial carbon(double grams_per_cm3);
};

enum class ElectronicStopping { lindhard_scharff, off };

ElectronicStopping parse_electronic_stopping(const std::string& name);

struct BcaParams {
    IonSpecies ion{};
    TargetMaterial target = TargetMaterial::diamond();
    double stop_energy = 16.0; // eV
    ElectronicStopping electronic = ElectronicStopping::lindhard_scharff;
    std::uint64_t rng_seed = 1;
    /// Impact parameters are drawn uniform in area out to
    /// max_impact_factor / sqrt(pi n L); 1.0 matches one atom per flight cylinder.
    double max_impact_factor = 1.0;
    /// Test hook: force every collision to zero deflection and zero transfer.
    bool suppress_nuclear = false;

    void validate() const;
};

/// Centre-of-mass deflection and energy handed to the target atom.
struct ScatterResult {
    double theta_cm = 0.0;        // rad
    double energy_transfer = 0.0; // eV
};

/// Energy-transfer factor 4 m1 m2 / (m1 + m2)^2.
double kinematic_factor(const IonSpecies& ion, const TargetMaterial& target);

/// ZBL universal screening length, nm.
double zbl_screening_length(const IonSpecies& ion, const TargetMaterial& target);

/// ZBL universal screening function phi(x) and its derivative.
double zbl_screening(double x);
double zbl_screening_derivative(double x);

/// Reduced (dimensionless) centre-of-mass energy for a lab energy in eV.
double reduced_energy(double energy_ev, const IonSpecies& ion, const TargetMaterial& target);

/// Reduced distance of closest approach for reduced energy eps and reduced
/// impact parameter b under the ZBL potential.
double closest_approach(double eps, double b);

/// Binary collision via the MAGIC analytic approximation of the classical
/// scattering integral with the ZBL potential.
ScatterResult scatter(double energy_ev, double impact_parameter_nm, const IonSpecies& ion,
                      const TargetMaterial& target);

/// Electronic stopping power, eV/nm.
double electronic_stopping(double energy_ev, const IonSpecies& ion, const TargetMaterial& target,
                           ElectronicStopping model = ElectronicStopping::lindhard_scharff);

/// Final state of one transported ion.
struct StoppedIon {
    Vec3 position{};          // nm; z > 0 is inside the target
    double path_length = 0.0; // nm
    long collision_count = 0;
    bool backscattered = false;
    // energy bookkeeping, eV
    double nuclear_loss = 0.0;
    double electronic_loss = 0.0;
    double residual_energy = 0.0;
};

/// Transports one ion entering the surface at `entry` along +z until it
/// stops or leaves through the surface. Throws Error when energy_kev does not
/// exceed the stop energy.
StoppedIon transport_ion(double energy_kev, Vec2 entry, const BcaParams& params, Rng& rng);

/// Convenience: the substream used for ion `index` of run `run`.
Rng ion_stream(const BcaParams& params, std::uint64_t run, std::uint64_t index);

/// Transports n ions from the origin; ion i uses ion_stream(params, run, i),
/// so results are identical for any thread count.
std::vector<StoppedIon> transport_many(double energy_kev, std::size_t n_ions, const BcaParams& params,
                                       std::uint64_t run = 0, unsigned threads = 1);

/// Moments of a stopped-ion ensemble, backscattered ions excluded.
RangeRow range_moments(double energy_kev, const std::vector<StoppedIon>& ions);

/// Builds a range table row per energy with n_ions each.
RangeTable build_range_table(const std::vector<double>& energies_kev, std::size_t n_ions,
                             const BcaParams& params, unsigned threads = 1);

} // namespace nvmask
