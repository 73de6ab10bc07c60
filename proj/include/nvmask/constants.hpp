#pragma once

// Physical constants used across the toolkit. SI unless the name says otherwise.

namespace nvmask::constants {

inline constexpr double pi = 3.14159265358979323846;

// CODATA 2018
inline constexpr double mu0_over_4pi = 1.00000000055e-7;  // T m / A
inline constexpr double electron_g = 2.00231930436256;    // |g_e|
inline constexpr double bohr_magneton = 9.2740100783e-24; // J / T
inline constexpr double planck = 6.62607015e-34;          // J s
inline constexpr double amu_gram = 1.66053906660e-24;     // g

// e^2 / (4 pi eps0) in eV nm
inline constexpr double coulomb_ev_nm = 1.439964548;
// Bohr radius in nm
inline constexpr double bohr_radius_nm = 0.0529177210903;

// NV ground-state spin
inline constexpr double nv_zero_field_splitting_mhz = 2870.0;
inline constexpr double nv_gyromagnetic_mhz_per_gauss = 2.8;
// first-order Zeeman picture is used below this field
inline constexpr double nv_max_field_gauss = 300.0;

// 1 nm^2 expressed in cm^2
inline constexpr double nm2_to_cm2 = 1e-14;

} // namespace nvmask::constants
