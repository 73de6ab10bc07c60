#pragma once

#include "nvmask/geometry.hpp"
#include "nvmask/implant_sim.hpp"
#include "nvmask/random.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace nvmask {

// ---------------------------------------------------------------------------
// Dipolar coupling

/// mu0/(4 pi) (g_e mu_B)^2 / h, in Hz nm^3: the coupling of two electron
/// spins 1 nm apart with unit angular factor.
double dipolar_prefactor_hz_nm3();

/// nu_dip = f * prefactor / r^3 in Hz. Throws Error for r <= 0 or f < 0.
double dipolar_coupling(double r_nm, double angular_factor);

/// |3 cos^2(theta) - 1| / 2
double angular_factor(double theta);

/// Angular factor for a pair given the unit inter-NV vector and both axes.
using AngularModel = std::function<double(Vec3 unit_separation, NvAxis first, NvAxis second)>;

/// |3 cos^2 - 1| / 2 with theta measured from the first NV's axis.
double first_axis_angular_factor(Vec3 unit_separation, NvAxis first, NvAxis second);

/// 1/nu < T2. A zero coupling is never strong.
bool strongly_coupled(double nu_dip_hz, double t2_us);

struct CouplingReport {
    std::size_t first = 0;
    std::size_t second = 0;
    double r_nm = 0.0;
    double angular_factor = 0.0;
    double nu_dip_hz = 0.0;
    bool strongly_coupled = false;
};

/// The closest NV pair among sites (which must all be NVs), T2 not applied.
CouplingReport closest_pair(const std::vector<DefectSite>& sites,
                            const AngularModel& model = first_axis_angular_factor);

// ---------------------------------------------------------------------------
// T2 distribution

class T2Distribution {
public:
    struct LogNormal {
        double mu = 0.0;    // of ln(T2 / us)
        double sigma = 1.0; // of ln(T2 / us)
    };

    explicit T2Distribution(std::vector<double> samples_us);
    explicit T2Distribution(LogNormal params);
    /// Every draw returns the same value.
    static T2Distribution constant(double t2_us);

    double draw(Rng& rng) const;
    double mean() const;
    double median() const;
    /// P(T2 > t)
    double exceedance(double t_us) const;

    const std::variant<std::vector<double>, LogNormal>& model() const { return model_; }

private:
    std::variant<std::vector<double>, LogNormal> model_;
};

/// Log-normal with median 4.5 us and 10% of draws above 16 us.
T2Distribution default_t2_distribution();

/// Over holes holding >= 2 NVs, the fraction whose closest pair is strongly
/// coupled. T2 is drawn per NV from a substream keyed by the hole index; the
/// pair uses the smaller draw. Throws Error when no hole has two NVs.
double strong_pair_yield(const std::vector<SpotReport>& reports, const T2Distribution& t2, std::uint64_t seed,
                         const AngularModel& model = first_axis_angular_factor);

// ---------------------------------------------------------------------------
// Photon autocorrelation

struct G2Trace {
    std::vector<double> t_ns;
    std::vector<double> g2;
    std::vector<double> sigma; // optional per-bin noise

    void validate() const;
};

/// 1 - (1/N) [(1 + a) e^(-|t|/tau1) - a e^(-|t|/tau2)]
double g2_model(double t_ns, double n_emitters, double tau1_ns, double tau2_ns, double bunching);

struct G2Fit {
    double g2_0 = 1.0;
    double amplitude = 0.0; // 1/N relaxed to a continuous value
    double tau1_ns = 0.0;
    double tau2_ns = 0.0;
    double bunching = 0.0;
    double residual = 0.0; // root-mean-square (weighted if sigma given)
    int starts = 0;
};

/// Least-squares fit of g2_model with 1/N free in [0, 1]. Multi-start over a
/// fixed grid plus `extra_starts` seeded random starts.
G2Fit fit_g2(const G2Trace& trace, std::uint64_t seed = 0, int extra_starts = 4);

enum class EmitterCount { one = 1, two = 2, three = 3, indeterminate = 0 };

/// <= 0.5 -> 1, <= 0.66 -> 2, < 0.75 -> 3, otherwise indeterminate.
EmitterCount count_emitters(double g2_0);
std::string to_string(EmitterCount count);

// ---------------------------------------------------------------------------
// ODMR

struct OdmrSpectrum {
    std::vector<double> f_mhz;
    std::vector<double> contrast;
};

struct FrequencyGrid {
    double f_min_mhz = 2500.0;
    double f_max_mhz = 3240.0;
    std::size_t points = 7401;
};

/// Two Lorentzian dips per NV at D +- gamma |B . axis|; dips multiply onto a
/// unit baseline. linewidth is the Lorentzian FWHM and depth the fractional
/// dip depth per resonance. Throws Error for |B| >= 300 G.
OdmrSpectrum synth_odmr(const std::vector<NvAxis>& orientations, Vec3 b_gauss, double linewidth_mhz,
                        double depth, const FrequencyGrid& grid);
/// Same, with a grid that spans every resonance plus ten linewidths.
OdmrSpectrum synth_odmr(const std::vector<NvAxis>& orientations, Vec3 b_gauss, double linewidth_mhz,
                        double depth);

/// Resonance frequencies (MHz) of one NV axis in field b.
std::pair<double, double> odmr_resonances(NvAxis axis, Vec3 b_gauss);

struct DipCount {
    long dip_count = 0;
    long nv_estimate = 0;
    std::vector<double> dip_frequencies_mhz;
};

/// Local minima with prominence >= `prominence` (contrast units), thinned so
/// kept dips are at least min_separation apart (most prominent first).
DipCount count_odmr_dips(const OdmrSpectrum& spectrum, double prominence, double min_separation_mhz);

// ---------------------------------------------------------------------------
// Hahn echo

struct EchoTrace {
    std::vector<double> t_us;
    std::vector<double> coherence;
};

struct EchoFit {
    double t2_us = 0.0;
    double stretch = 1.0;
    double amplitude = 1.0;
    double offset = 0.0;
    double residual = 0.0; // root-mean-square
};

/// Fits A exp(-(t/T2)^p) + B with p in [0.5, 3].
EchoFit fit_hahn_echo(const EchoTrace& trace);

/// T2 = k / dose.
double t2_dose_scaling(double dose, double k);
/// k such that t2_dose_scaling(dose, k) == t2_us.
double t2_scaling_constant(double dose, double t2_us);

} // namespace nvmask
