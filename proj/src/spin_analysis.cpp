#include "nvmask/spin_analysis.hpp"

#include "nvmask/constants.hpp"
#include "nvmask/io.hpp"
#include "nvmask/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nvmask {

namespace {

double normal_quantile(double p)
{
    // invert the normal CDF by bisection on erfc; plenty fast for one-off use
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
        if (cdf < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double rms(const Eigen::VectorXd& r)
{
    return r.size() == 0 ? 0.0 : std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
}

} // namespace

// ---------------------------------------------------------------------------
// Dipolar coupling

double dipolar_prefactor_hz_nm3()
{
    const double gmu = constants::electron_g * constants::bohr_magneton;
    // r^3 in m^3 for r = 1 nm
    return constants::mu0_over_4pi * gmu * gmu / (constants::planck * 1e-27);
}

double dipolar_coupling(double r_nm, double f)
{
    if (!(r_nm > 0.0)) throw Error("dipolar_coupling: separation must be positive (r = 0 is singular)");
    if (f < 0.0) throw Error("dipolar_coupling: angular factor must be >= 0");
    return f * dipolar_prefactor_hz_nm3() / (r_nm * r_nm * r_nm);
}

double angular_factor(double theta)
{
    const double c = std::cos(theta);
    return 0.5 * std::abs(3.0 * c * c - 1.0);
}

double first_axis_angular_factor(Vec3 unit_separation, NvAxis first, NvAxis /*second*/)
{
    const double c = dot(unit_separation, axis_vector(first));
    return 0.5 * std::abs(3.0 * c * c - 1.0);
}

bool strongly_coupled(double nu_dip_hz, double t2_us)
{
    if (nu_dip_hz < 0.0) throw Error("strongly_coupled: coupling must be >= 0");
    if (!(t2_us > 0.0)) throw Error("strongly_coupled: T2 must be positive");
    if (nu_dip_hz == 0.0) return false;
    return 1e6 / nu_dip_hz < t2_us;
}

CouplingReport closest_pair(const std::vector<DefectSite>& sites, const AngularModel& model)
{
    if (sites.size() < 2) throw Error("closest_pair needs at least two sites");
    CouplingReport best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sites.size(); ++i) {
        for (std::size_t j = i + 1; j < sites.size(); ++j) {
            const Vec3 d = sites[j].position - sites[i].position;
            const double d2 = dot(d, d);
            if (d2 < best_d2) {
                best_d2 = d2;
                best.first = i;
                best.second = j;
            }
        }
    }
    const auto& a = sites[best.first];
    const auto& b = sites[best.second];
    if (!a.orientation || !b.orientation) throw Error("closest_pair: every site must be an NV with an axis");
    best.r_nm = std::sqrt(best_d2);
    if (!(best.r_nm > 0.0)) throw Error("closest_pair: coincident NV sites");
    const Vec3 u = (1.0 / best.r_nm) * (b.position - a.position);
    best.angular_factor = model(u, *a.orientation, *b.orientation);
    best.nu_dip_hz = dipolar_coupling(best.r_nm, best.angular_factor);
    return best;
}

// ---------------------------------------------------------------------------
// T2 distribution

T2Distribution::T2Distribution(std::vector<double> samples_us) : model_(std::move(samples_us))
{
    const auto& s = std::get<std::vector<double>>(model_);
    if (s.empty()) throw Error("T2 distribution needs at least one sample");
    for (double v : s)
        if (!(v > 0.0)) throw Error("T2 samples must be positive");
}

T2Distribution::T2Distribution(LogNormal params) : model_(params)
{
    if (!(params.sigma >= 0.0) || !std::isfinite(params.mu)) throw Error("invalid log-normal T2 parameters");
}

T2Distribution T2Distribution::constant(double t2_us)
{
    return T2Distribution(std::vector<double>{t2_us});
}

double T2Distribution::draw(Rng& rng) const
{
    if (const auto* s = std::get_if<std::vector<double>>(&model_)) {
        if (s->size() == 1) return s->front();
        const auto k = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(s->size()));
        return (*s)[std::min(k, s->size() - 1)];
    }
    const auto& p = std::get<LogNormal>(model_);
    return std::exp(p.mu + p.sigma * standard_normal(rng));
}

double T2Distribution::mean() const
{
    if (const auto* s = std::get_if<std::vector<double>>(&model_))
        return std::accumulate(s->begin(), s->end(), 0.0) / static_cast<double>(s->size());
    const auto& p = std::get<LogNormal>(model_);
    return std::exp(p.mu + 0.5 * p.sigma * p.sigma);
}

double T2Distribution::median() const
{
    if (const auto* s = std::get_if<std::vector<double>>(&model_)) {
        std::vector<double> v = *s;
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }
    return std::exp(std::get<LogNormal>(model_).mu);
}

double T2Distribution::exceedance(double t_us) const
{
    if (const auto* s = std::get_if<std::vector<double>>(&model_)) {
        const auto n = std::count_if(s->begin(), s->end(), [t_us](double v) { return v > t_us; });
        return static_cast<double>(n) / static_cast<double>(s->size());
    }
    const auto& p = std::get<LogNormal>(model_);
    if (t_us <= 0.0) return 1.0;
    if (p.sigma == 0.0) return std::exp(p.mu) > t_us ? 1.0 : 0.0;
    return 0.5 * std::erfc((std::log(t_us) - p.mu) / (p.sigma * std::sqrt(2.0)));
}

T2Distribution default_t2_distribution()
{
    // A log-normal cannot have mean 4.5 us and 10% above 16 us at once (the
    // largest tail reachable at that mean is ~5.6%), so 4.5 us is taken as the
    // median and sigma is solved from the 90th percentile.
    const double median = 4.5, p90 = 16.0;
    const double z90 = normal_quantile(0.9);
    return T2Distribution(T2Distribution::LogNormal{std::log(median), std::log(p90 / median) / z90});
}

double strong_pair_yield(const std::vector<SpotReport>& reports, const T2Distribution& t2, std::uint64_t seed,
                         const AngularModel& model)
{
    if (reports.empty()) throw Error("strong_pair_yield needs at least one report");
    long pairs = 0, strong = 0;
    for (std::size_t h = 0; h < reports.size(); ++h) {
        const auto& spot = reports[h];
        if (spot.nv_sites.size() < 2) continue;
        const auto key = spot.hole_index >= 0 ? static_cast<std::uint64_t>(spot.hole_index) : h;
        Rng rng = substream(seed, Domain::t2_draw, key);
        std::vector<double> draws(spot.nv_sites.size());
        for (auto& d : draws) d = t2.draw(rng);
        const auto pair = closest_pair(spot.nv_sites, model);
        const double t2_pair = std::min(draws[pair.first], draws[pair.second]);
        ++pairs;
        if (strongly_coupled(pair.nu_dip_hz, t2_pair)) ++strong;
    }
    if (pairs == 0) throw Error("strong_pair_yield: no pairs (no hole holds two or more NVs)");
    return static_cast<double>(strong) / static_cast<double>(pairs);
}

// ---------------------------------------------------------------------------
// Photon autocorrelation

void G2Trace::validate() const
{
    if (t_ns.size() != g2.size()) throw Error("g2 trace: delay and value columns differ in length");
    if (!sigma.empty() && sigma.size() != g2.size()) throw Error("g2 trace: sigma column length mismatch");
    if (t_ns.size() < 8) throw Error("g2 trace: too few bins to fit");
    for (double v : g2)
        if (!(v >= 0.0)) throw Error("g2 trace: values must be >= 0");
    for (double s : sigma)
        if (!(s > 0.0)) throw Error("g2 trace: sigma must be positive");
    const auto [lo, hi] = std::minmax_element(t_ns.begin(), t_ns.end());
    if (!(*lo < 0.0 && *hi > 0.0)) throw Error("g2 trace: delays must span negative and positive values");
}

double g2_model(double t_ns, double n_emitters, double tau1_ns, double tau2_ns, double bunching)
{
    const double at = std::abs(t_ns);
    return 1.0 - (1.0 / n_emitters) *
                     ((1.0 + bunching) * std::exp(-at / tau1_ns) - bunching * std::exp(-at / tau2_ns));
}

G2Fit fit_g2(const G2Trace& trace, std::uint64_t seed, int extra_starts)
{
    trace.validate();
    const std::size_t n = trace.t_ns.size();

    // bins nearest zero delay give the dip depth guess
    std::vector<std::size_t> by_delay(n);
    std::iota(by_delay.begin(), by_delay.end(), std::size_t{0});
    std::sort(by_delay.begin(), by_delay.end(),
              [&](std::size_t a, std::size_t b) { return std::abs(trace.t_ns[a]) < std::abs(trace.t_ns[b]); });
    double dip = 0.0;
    const std::size_t k0 = std::min<std::size_t>(3, n);
    for (std::size_t k = 0; k < k0; ++k) dip += trace.g2[by_delay[k]];
    dip /= static_cast<double>(k0);
    const double amp0 = std::clamp(1.0 - dip, 0.0, 1.0);

    double max_delay = 0.0;
    for (double t : trace.t_ns) max_delay = std::max(max_delay, std::abs(t));

    double tau1_0 = max_delay / 10.0;
    if (amp0 > 0.05) {
        for (std::size_t idx : by_delay) {
            if (1.0 - trace.g2[idx] <= amp0 / std::exp(1.0)) {
                tau1_0 = std::max(std::abs(trace.t_ns[idx]), 1e-6 * max_delay);
                break;
            }
        }
    }
    if (max_delay < 5.0 * tau1_0)
        throw Error("g2 trace: delays must extend to at least five antibunching times (need " +
                    io::format_number(5.0 * tau1_0) + " ns, have " + io::format_number(max_delay) + " ns)");

    const ResidualFn residuals = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const double model = 1.0 - p[0] * ((1.0 + p[3]) * std::exp(-std::abs(trace.t_ns[i]) / p[1]) -
                                               p[3] * std::exp(-std::abs(trace.t_ns[i]) / p[2]));
            const double w = trace.sigma.empty() ? 1.0 : 1.0 / trace.sigma[i];
            r[static_cast<Eigen::Index>(i)] = w * (model - trace.g2[i]);
        }
        return r;
    };

    Eigen::VectorXd lower(4), upper(4);
    lower << 0.0, 1e-6 * max_delay, 1e-6 * max_delay, 0.0;
    upper << 1.0, 10.0 * max_delay, 1e3 * max_delay, 50.0;

    std::vector<Eigen::VectorXd> starts;
    for (double a : {0.0, 0.3, 1.0})
        for (double m : {3.0, 10.0, 30.0}) {
            Eigen::VectorXd x(4);
            x << amp0, tau1_0, m * tau1_0, a;
            starts.push_back(x);
        }
    Rng rng = substream(seed, Domain::fit, 0);
    for (int k = 0; k < extra_starts; ++k) {
        Eigen::VectorXd x(4);
        x << std::clamp(amp0 * (0.7 + 0.6 * uniform01(rng)), 0.0, 1.0), tau1_0 * std::exp(2.0 * uniform01(rng) - 1.0),
            tau1_0 * std::exp(1.0 + 3.0 * uniform01(rng)), 2.0 * uniform01(rng);
        starts.push_back(x);
    }

    LmResult best;
    best.cost = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& x0 : starts) {
        const LmResult r = levenberg_marquardt(residuals, x0, lower, upper);
        if (r.converged && r.cost < best.cost) {
            best = r;
            any = true;
        }
    }
    if (!any) throw Error("fit_g2: no start converged");

    G2Fit fit;
    fit.amplitude = best.params[0];
    fit.tau1_ns = best.params[1];
    fit.tau2_ns = best.params[2];
    fit.bunching = best.params[3];
    fit.g2_0 = 1.0 - fit.amplitude;
    fit.residual = rms(residuals(best.params));
    fit.starts = static_cast<int>(starts.size());
    return fit;
}

EmitterCount count_emitters(double g2_0)
{
    if (!(g2_0 >= 0.0)) throw Error("count_emitters: g2(0) must be >= 0");
    if (g2_0 <= 0.5) return EmitterCount::one;
    if (g2_0 <= 0.66) return EmitterCount::two;
    if (g2_0 < 0.75) return EmitterCount::three;
    return EmitterCount::indeterminate;
}

std::string to_string(EmitterCount count)
{
    switch (count) {
    case EmitterCount::one: return "1";
    case EmitterCount::two: return "2";
    case EmitterCount::three: return "3";
    case EmitterCount::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

// ---------------------------------------------------------------------------
// ODMR

std::pair<double, double> odmr_resonances(NvAxis axis, Vec3 b_gauss)
{
    const double b_par = std::abs(dot(b_gauss, axis_vector(axis)));
    const double shift = constants::nv_gyromagnetic_mhz_per_gauss * b_par;
    return {constants::nv_zero_field_splitting_mhz - shift, constants::nv_zero_field_splitting_mhz + shift};
}

OdmrSpectrum synth_odmr(const std::vector<NvAxis>& orientations, Vec3 b_gauss, double linewidth_mhz, double depth,
                        const FrequencyGrid& grid)
{
    if (!(norm(b_gauss) < constants::nv_max_field_gauss))
        throw Error("synth_odmr: |B| must stay below 300 G for the first-order Zeeman picture");
    if (!(linewidth_mhz > 0.0)) throw Error("synth_odmr: linewidth must be positive");
    if (depth < 0.0 || depth > 1.0) throw Error("synth_odmr: dip depth must lie in [0, 1]");
    if (grid.points < 2 || !(grid.f_max_mhz > grid.f_min_mhz)) throw Error("synth_odmr: invalid frequency grid");

    std::vector<double> centers;
    for (NvAxis axis : orientations) {
        const auto [lo, hi] = odmr_resonances(axis, b_gauss);
        centers.push_back(lo);
        centers.push_back(hi);
    }
    const double hw2 = 0.25 * linewidth_mhz * linewidth_mhz;

    OdmrSpectrum s;
    s.f_mhz.resize(grid.points);
    s.contrast.resize(grid.points);
    const double step = (grid.f_max_mhz - grid.f_min_mhz) / static_cast<double>(grid.points - 1);
    for (std::size_t i = 0; i < grid.points; ++i) {
        const double f = grid.f_min_mhz + step * static_cast<double>(i);
        double v = 1.0;
        for (double c : centers) v *= 1.0 - depth * hw2 / ((f - c) * (f - c) + hw2);
        s.f_mhz[i] = f;
        s.contrast[i] = v;
    }
    return s;
}

OdmrSpectrum synth_odmr(const std::vector<NvAxis>& orientations, Vec3 b_gauss, double linewidth_mhz, double depth)
{
    const double span = constants::nv_gyromagnetic_mhz_per_gauss * norm(b_gauss) + 10.0 * linewidth_mhz;
    FrequencyGrid grid;
    grid.f_min_mhz = constants::nv_zero_field_splitting_mhz - span;
    grid.f_max_mhz = constants::nv_zero_field_splitting_mhz + span;
    grid.points = static_cast<std::size_t>(std::ceil(2.0 * span / (linewidth_mhz / 20.0))) + 1;
    return synth_odmr(orientations, b_gauss, linewidth_mhz, depth, grid);
}

DipCount count_odmr_dips(const OdmrSpectrum& spectrum, double prominence, double min_separation_mhz)
{
    if (!(prominence > 0.0)) throw Error("count_odmr_dips: prominence must be positive");
    const auto& y = spectrum.contrast;
    const auto& f = spectrum.f_mhz;
    if (y.size() != f.size() || y.size() < 3) throw Error("count_odmr_dips: spectrum needs >= 3 matching points");
    if (std::all_of(y.begin(), y.end(), [](double v) { return v <= 0.0; }))
        throw Error("count_odmr_dips: spectrum is saturated (all contrast values are zero)");

    struct Dip {
        std::size_t index;
        double prominence;
    };
    std::vector<Dip> dips;
    const std::size_t n = y.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(y[i] < y[i - 1])) continue;
        // step across a flat bottom
        std::size_t j = i;
        while (j + 1 < n && y[j + 1] == y[i]) ++j;
        if (j + 1 >= n || !(y[j + 1] > y[i])) continue;

        // highest point reached before the signal drops below the dip, each side
        double left_max = y[i];
        for (std::size_t k = i; k-- > 0;) {
            if (y[k] < y[i]) break;
            left_max = std::max(left_max, y[k]);
        }
        double right_max = y[j];
        for (std::size_t k = j + 1; k < n; ++k) {
            if (y[k] < y[i]) break;
            right_max = std::max(right_max, y[k]);
        }
        const double prom = std::min(left_max, right_max) - y[i];
        if (prom >= prominence) dips.push_back({(i + j) / 2, prom});
        i = j;
    }

    std::stable_sort(dips.begin(), dips.end(), [](const Dip& a, const Dip& b) { return a.prominence > b.prominence; });
    std::vector<std::size_t> kept;
    for (const auto& d : dips) {
        const bool clear = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return std::abs(f[k] - f[d.index]) >= min_separation_mhz;
        });
        if (clear) kept.push_back(d.index);
    }
    std::sort(kept.begin(), kept.end());

    DipCount out;
    out.dip_count = static_cast<long>(kept.size());
    out.nv_estimate = (out.dip_count + 1) / 2;
    for (std::size_t k : kept) out.dip_frequencies_mhz.push_back(f[k]);
    return out;
}

// ---------------------------------------------------------------------------
// Hahn echo

EchoFit fit_hahn_echo(const EchoTrace& trace)
{
    const std::size_t n = trace.t_us.size();
    if (n != trace.coherence.size()) throw Error("echo trace: column lengths differ");
    if (n < 6) throw Error("echo trace: too few points to fit");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return trace.t_us[a] < trace.t_us[b]; });

    const double t_max = trace.t_us[order.back()];
    const std::size_t tail = std::max<std::size_t>(1, n / 10);
    double offset0 = 0.0;
    for (std::size_t k = n - tail; k < n; ++k) offset0 += trace.coherence[order[k]];
    offset0 /= static_cast<double>(tail);
    const double amp0 = trace.coherence[order.front()] - offset0;

    const auto [lo_it, hi_it] = std::minmax_element(trace.coherence.begin(), trace.coherence.end());
    const double range = *hi_it - *lo_it;
    if (!(range > 1e-9 * std::max(1.0, std::abs(*hi_it))) || !(amp0 > 0.0))
        throw Error("fit_hahn_echo: trace shows no decay scale");

    double t2_0 = t_max / 2.0;
    for (std::size_t k : order) {
        if (trace.coherence[k] - offset0 <= amp0 / std::exp(1.0)) {
            t2_0 = std::max(trace.t_us[k], 1e-6 * t_max);
            break;
        }
    }
    if (t_max < 2.0 * t2_0) throw Error("fit_hahn_echo: trace must span at least twice the decay time");

    const ResidualFn residuals = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            r[static_cast<Eigen::Index>(i)] =
                p[0] * std::exp(-std::pow(trace.t_us[i] / p[1], p[2])) + p[3] - trace.coherence[i];
        return r;
    };

    Eigen::VectorXd lower(4), upper(4);
    lower << 0.0, 1e-6 * t_max, 0.5, -1.0;
    upper << 10.0 * std::max(1.0, amp0), 100.0 * t_max, 3.0, 2.0;

    LmResult best;
    best.cost = std::numeric_limits<double>::infinity();
    bool any = false;
    for (double p : {0.75, 1.0, 1.5, 2.0, 2.5}) {
        Eigen::VectorXd x0(4);
        x0 << amp0, t2_0, p, offset0;
        const LmResult r = levenberg_marquardt(residuals, x0, lower, upper);
        if (r.converged && r.cost < best.cost) {
            best = r;
            any = true;
        }
    }
    if (!any) throw Error("fit_hahn_echo: no start converged");

    EchoFit fit;
    fit.amplitude = best.params[0];
    fit.t2_us = best.params[1];
    fit.stretch = best.params[2];
    fit.offset = best.params[3];
    fit.residual = rms(residuals(best.params));
    return fit;
}

double t2_dose_scaling(double dose, double k)
{
    if (!(dose > 0.0)) throw Error("t2_dose_scaling: dose must be positive");
    return k / dose;
}

double t2_scaling_constant(double dose, double t2_us)
{
    if (!(dose > 0.0) || !(t2_us > 0.0)) throw Error("t2_scaling_constant: dose and T2 must be positive");
    return dose * t2_us;
}

} // namespace nvmask
