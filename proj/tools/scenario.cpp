#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include "json.hpp"

#include "qmem/adiabatic.hpp"
#include "qmem/cavity.hpp"
#include "qmem/constants.hpp"
#include "qmem/coupling.hpp"
#include "qmem/ensemble.hpp"
#include "qmem/excitation.hpp"
#include "qmem/fourier.hpp"
#include "qmem/memory.hpp"
#include "qmem/phase_match.hpp"
#include "qmem/ssm.hpp"
#include "qmem/temporal.hpp"

namespace qmemcli {
namespace {

using json = nlohmann::ordered_json;
using qmem::ConfigError;
using qmem::cplx;
using qmem::NumericError;
using qmem::two_pi;

std::string fmtg(double v, const char* spec = "%.12g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string fmt_exact(double v) { return fmtg(v, "%.17g"); }

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> xs(n);
    const double step = n > 1 ? (b - a) / static_cast<double>(n - 1) : 0.0;
    for (std::size_t i = 0; i < n; ++i) xs[i] = a + step * static_cast<double>(i);
    return xs;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

// Local maxima above frac of the global one, at least min_sep samples apart
// (the taller of two close peaks wins).
std::vector<std::size_t> find_peaks(const std::vector<double>& y, double frac,
                                    std::size_t min_sep) {
    double ymax = 0.0;
    for (double v : y) ymax = std::max(ymax, v);
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (y[i] < frac * ymax || y[i] < y[i - 1] || y[i] < y[i + 1]) continue;
        if (!out.empty() && i - out.back() < min_sep) {
            if (y[i] > y[out.back()]) out.back() = i;
            continue;
        }
        out.push_back(i);
    }
    return out;
}

struct Table {
    std::vector<std::string> notes;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

std::string render_table(const Table& t) {
    std::string s;
    for (const std::string& n : t.notes) s += "# " + n + "\n";
    s += "#";
    for (const std::string& c : t.columns) s += " " + c;
    s += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) s += "\t";
            s += fmtg(row[i]);
        }
        s += "\n";
    }
    return s;
}

// ---------------------------------------------------------------------------
// Key binding. Scenario files carry explicit units in the key names
// (coupling_rabi_MHz, flip_us, length_cm); the binder probes the accepted
// spellings for each semantic name, converts to SI (frequencies and rates
// angular, rad/s), and records every resolved value for the manifest.

struct Unit {
    const char* suffix;
    double factor;
};

class Params {
public:
    explicit Params(const Scenario& sc) : sc_(sc) {}

    double freq(const std::string& base) { return one(base, freq_units(), "_rad_per_s", true, 0.0); }
    double freq_or(const std::string& base, double dflt) {
        return one(base, freq_units(), "_rad_per_s", false, dflt);
    }
    double slope(const std::string& base) {
        return one(base, slope_units(), "_rad_per_s_per_m", true, 0.0);
    }
    double chirp_rate(const std::string& base) {
        return one(base, chirp_units(), "_rad_per_s2", true, 0.0);
    }
    double duration(const std::string& base) { return one(base, time_units(), "_s", true, 0.0); }
    double duration_or(const std::string& base, double dflt) {
        return one(base, time_units(), "_s", false, dflt);
    }
    double distance(const std::string& base) { return one(base, dist_units(), "_m", true, 0.0); }
    double distance_or(const std::string& base, double dflt) {
        return one(base, dist_units(), "_m", false, dflt);
    }
    double temperature_or(const std::string& base, double dflt) {
        return one(base, temp_units(), "_K", false, dflt);
    }
    double angle_or(const std::string& base, double dflt) {
        return one(base, angle_units(), "_rad", false, dflt);
    }
    double plain(const std::string& base) { return one(base, plain_units(), "", true, 0.0); }
    double plain_or(const std::string& base, double dflt) {
        return one(base, plain_units(), "", false, dflt);
    }

    long long integer(const std::string& base) { return to_int(base, need(base)); }
    long long integer_or(const std::string& base, long long dflt) {
        const std::string* v = find(base);
        if (!v) {
            note(base, std::to_string(dflt));
            return dflt;
        }
        used_.insert(base);
        return to_int(base, *v);
    }

    std::string word_or(const std::string& base, const std::string& dflt) {
        const std::string* v = find(base);
        if (!v) {
            note(base, dflt);
            return dflt;
        }
        used_.insert(base);
        note(base, *v);
        return *v;
    }

    std::vector<double> plain_list(const std::string& base) {
        return list(base, plain_units(), "");
    }
    std::vector<double> duration_list(const std::string& base) {
        return list(base, time_units(), "_s");
    }

    void finish() const {
        for (const auto& [k, v] : sc_.raw)
            if (!used_.count(k))
                throw ConfigError("unknown key '" + k + "' for kind " + sc_.kind);
    }

    std::string manifest(const Scenario& sc) const {
        std::string s;
        s += "scenario = " + sc.name + "\n";
        s += "kind = " + sc.kind + "\n";
        s += "seed = " + std::to_string(sc.seed) + "\n";
        s += "# resolved parameters, SI base units; frequencies and rates are angular\n";
        auto sorted = resolved_;
        std::sort(sorted.begin(), sorted.end());
        for (const auto& [k, v] : sorted) s += k + " = " + v + "\n";
        return s;
    }

private:
    static const std::vector<Unit>& freq_units() {
        static const std::vector<Unit> u{{"_GHz", two_pi * 1e9},
                                         {"_MHz", two_pi * 1e6},
                                         {"_kHz", two_pi * 1e3},
                                         {"_Hz", two_pi}};
        return u;
    }
    static const std::vector<Unit>& slope_units() {
        static const std::vector<Unit> u{{"_MHz_per_cm", two_pi * 1e6 / 1e-2},
                                         {"_kHz_per_cm", two_pi * 1e3 / 1e-2},
                                         {"_MHz_per_m", two_pi * 1e6}};
        return u;
    }
    static const std::vector<Unit>& chirp_units() {
        static const std::vector<Unit> u{{"_MHz_per_us", two_pi * 1e6 / 1e-6},
                                         {"_kHz_per_us", two_pi * 1e3 / 1e-6}};
        return u;
    }
    static const std::vector<Unit>& time_units() {
        static const std::vector<Unit> u{
            {"_s", 1.0}, {"_ms", 1e-3}, {"_us", 1e-6}, {"_ns", 1e-9}};
        return u;
    }
    static const std::vector<Unit>& dist_units() {
        static const std::vector<Unit> u{
            {"_m", 1.0}, {"_cm", 1e-2}, {"_mm", 1e-3}, {"_um", 1e-6}, {"_nm", 1e-9}};
        return u;
    }
    static const std::vector<Unit>& temp_units() {
        static const std::vector<Unit> u{{"_K", 1.0}, {"_mK", 1e-3}, {"_uK", 1e-6}};
        return u;
    }
    static const std::vector<Unit>& angle_units() {
        static const std::vector<Unit> u{{"_deg", two_pi / 360.0}, {"_mrad", 1e-3}, {"_rad", 1.0}};
        return u;
    }
    static const std::vector<Unit>& plain_units() {
        static const std::vector<Unit> u{{"", 1.0}};
        return u;
    }

    const std::string* find(const std::string& key) const {
        auto it = sc_.raw.find(key);
        return it == sc_.raw.end() ? nullptr : &it->second;
    }
    const std::string& need(const std::string& key) {
        const std::string* v = find(key);
        if (!v) throw ConfigError("missing key '" + key + "'");
        used_.insert(key);
        return *v;
    }
    void note(const std::string& name, const std::string& text) {
        resolved_.emplace_back(name, text);
    }

    static double to_num(const std::string& key, const std::string& text) {
        const char* c = text.c_str();
        char* end = nullptr;
        const double v = std::strtod(c, &end);
        if (end == c || *end != '\0')
            throw ConfigError("key '" + key + "': '" + text + "' is not a number");
        return v;
    }
    long long to_int(const std::string& key, const std::string& text) {
        const char* c = text.c_str();
        char* end = nullptr;
        const long long v = std::strtoll(c, &end, 10);
        if (end == c || *end != '\0')
            throw ConfigError("key '" + key + "': '" + text + "' is not an integer");
        note(key, std::to_string(v));
        return v;
    }

    // Exactly one unit spelling of `base` may appear in the file.
    double one(const std::string& base, const std::vector<Unit>& units, const char* canon,
               bool required, double dflt) {
        const std::string* hit = nullptr;
        std::string hit_key;
        double factor = 1.0;
        for (const Unit& u : units) {
            const std::string key = base + u.suffix;
            if (const std::string* v = find(key)) {
                if (hit)
                    throw ConfigError("key '" + base + "' given in more than one unit");
                hit = v;
                hit_key = key;
                factor = u.factor;
            }
        }
        if (!hit) {
            if (required) throw ConfigError("missing key '" + base + "'");
            note(base + canon, fmt_exact(dflt));
            return dflt;
        }
        used_.insert(hit_key);
        const double v = to_num(hit_key, *hit) * factor;
        note(base + canon, fmt_exact(v));
        return v;
    }

    std::vector<double> list(const std::string& base, const std::vector<Unit>& units,
                             const char* canon) {
        const std::string* hit = nullptr;
        std::string hit_key;
        double factor = 1.0;
        for (const Unit& u : units) {
            const std::string key = base + u.suffix;
            if (const std::string* v = find(key)) {
                if (hit)
                    throw ConfigError("key '" + base + "' given in more than one unit");
                hit = v;
                hit_key = key;
                factor = u.factor;
            }
        }
        if (!hit) throw ConfigError("missing key '" + base + "'");
        used_.insert(hit_key);
        std::vector<double> out;
        std::string text;
        std::string item;
        for (std::size_t pos = 0;;) {
            const std::size_t comma = hit->find(',', pos);
            item = hit->substr(pos, comma == std::string::npos ? comma : comma - pos);
            const std::size_t a = item.find_first_not_of(" \t");
            const std::size_t b = item.find_last_not_of(" \t");
            if (a == std::string::npos)
                throw ConfigError("key '" + hit_key + "': empty list element");
            out.push_back(to_num(hit_key, item.substr(a, b - a + 1)) * factor);
            if (!text.empty()) text += ", ";
            text += fmt_exact(out.back());
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        note(base + canon, text);
        return out;
    }

    const Scenario& sc_;
    std::set<std::string> used_;
    std::vector<std::pair<std::string, std::string>> resolved_;
};

json summary_head(const Scenario& sc) {
    json j;
    j["scenario"] = sc.name;
    j["kind"] = sc.kind;
    j["seed"] = sc.seed;
    return j;
}

void push_summary(Artifacts& a, const json& j) {
    a.files.emplace_back("summary.json", j.dump(2) + "\n");
}

// Largest snapshot stride dividing the flip index, so one snapshot lands
// exactly on the gradient reversal.
std::size_t stride_dividing(std::size_t flip_steps, std::size_t target) {
    if (flip_steps == 0) return 1;
    target = std::clamp<std::size_t>(target, 1, flip_steps);
    for (std::size_t d = target; d > 1; --d)
        if (flip_steps % d == 0) return d;
    return 1;
}

// ---------------------------------------------------------------------------
// memory-cycle: gradient echo write/store/read (pulse-echo mode) or a
// two-photon detuning scan of the stationary memory (raman-scan mode).

struct MemoryCycleCfg {
    std::string mode;
    double od, length, detuning, coupling, dt, window, temperature;
    long long cells;
    double pulse_sigma, signal_rabi;
    // pulse-echo
    double gradient = 0.0, flip = 0.0;
    std::vector<double> amps, centers;
    // raman-scan
    long long scan_points = 0;
    double scan_span = 0.0, scan_center = 0.0, pulse_center = 0.0;
};

MemoryCycleCfg bind_memory_cycle(Params& p) {
    MemoryCycleCfg c;
    c.mode = p.word_or("mode", "pulse-echo");
    if (c.mode != "pulse-echo" && c.mode != "raman-scan")
        throw ConfigError("mode must be pulse-echo or raman-scan");
    c.od = p.plain("od");
    if (!(c.od > 0.0)) throw ConfigError("od must be positive");
    c.cells = p.integer("cells");
    if (c.cells < 8 || c.cells > 4096) throw ConfigError("cells must lie in [8, 4096]");
    c.length = p.distance("length");
    if (!(c.length > 0.0)) throw ConfigError("length must be positive");
    c.detuning = p.freq("detuning");
    if (c.detuning == 0.0) throw ConfigError("detuning must be nonzero");
    c.coupling = p.freq("coupling_rabi");
    if (!(c.coupling > 0.0)) throw ConfigError("coupling_rabi must be positive");
    c.dt = p.duration("dt");
    if (!(c.dt > 0.0)) throw ConfigError("dt must be positive");
    c.window = p.duration("window");
    if (!(c.window > 16.0 * c.dt)) throw ConfigError("window must span at least 16 steps");
    c.temperature = p.temperature_or("temperature", 2e-5);
    if (!(c.temperature > 0.0)) throw ConfigError("temperature must be positive");
    c.pulse_sigma = p.duration("pulse_sigma");
    if (!(c.pulse_sigma >= 10.0 * c.dt))
        throw ConfigError("pulse_sigma must span at least 10 steps");
    c.signal_rabi = p.freq("signal_rabi");
    if (!(c.signal_rabi > 0.0)) throw ConfigError("signal_rabi must be positive");

    if (c.mode == "pulse-echo") {
        c.gradient = p.slope("gradient");
        if (c.gradient == 0.0) throw ConfigError("gradient must be nonzero");
        c.flip = p.duration("flip");
        if (!(c.flip > 0.0) || !(c.flip < c.window))
            throw ConfigError("flip must fall inside the window");
        c.amps = p.plain_list("pulse_amplitudes");
        c.centers = p.duration_list("pulse_centers");
        if (c.amps.size() != c.centers.size() || c.amps.empty())
            throw ConfigError("pulse_amplitudes and pulse_centers must match and be nonempty");
        for (double a : c.amps)
            if (!(a > 0.0)) throw ConfigError("pulse amplitudes must be positive");
        for (double t : c.centers)
            if (!(t > 0.0) || !(t < c.flip))
                throw ConfigError("pulse centers must precede the gradient flip");
    } else {
        c.scan_points = p.integer("scan_points");
        if (c.scan_points < 3 || c.scan_points > 401)
            throw ConfigError("scan_points must lie in [3, 401]");
        c.scan_span = p.freq("scan_span");
        if (!(c.scan_span > 0.0)) throw ConfigError("scan_span must be positive");
        // The drive light-shifts the line to -Omega^2/(4 Delta); scans are
        // usually centred there.
        c.scan_center = p.freq_or("scan_center", 0.0);
        c.pulse_center = p.duration_or("pulse_center", 0.5 * c.window);
        if (!(c.pulse_center > 0.0) || !(c.pulse_center < c.window))
            throw ConfigError("pulse_center must fall inside the window");
    }
    return c;
}

qmem::ComplexEnvelope gaussian_train(const qmem::Grid1D& tg, const std::vector<double>& amps,
                                     const std::vector<double>& centers, double sigma,
                                     double rabi) {
    qmem::ComplexEnvelope in(tg, qmem::EnvelopeKind::signal_in_time);
    for (std::size_t i = 0; i < tg.count; ++i) {
        const double t = tg.coord(i);
        double v = 0.0;
        for (std::size_t c = 0; c < amps.size(); ++c) {
            const double u = (t - centers[c]) / sigma;
            v += amps[c] * std::exp(-0.5 * u * u);
        }
        in.values[i] = rabi * v;
    }
    return in;
}

Artifacts run_memory_cycle(const MemoryCycleCfg& c, const Scenario& sc) {
    const qmem::Transition tr = qmem::rb87_d1();
    const qmem::AtomEnsemble ens = qmem::uniform_ensemble(
        c.length, static_cast<std::size_t>(c.cells), c.od, tr, c.temperature);
    const auto steps = static_cast<std::size_t>(std::llround(c.window / c.dt));
    const qmem::Grid1D tg(0.0, c.dt, steps);

    qmem::SolverConfig cfg;
    cfg.detuning = c.detuning;
    cfg.dt = c.dt;
    cfg.dz = ens.grid.step;
    cfg.t_start = 0.0;
    cfg.t_end = c.window;
    const qmem::MemoryState ground{
        qmem::ComplexEnvelope(ens.grid, qmem::EnvelopeKind::coherence_in_z), 0.0};

    Artifacts art;
    json sum = summary_head(sc);

    if (c.mode == "pulse-echo") {
        const double beta = c.gradient;
        const auto flip_steps = static_cast<std::size_t>(std::llround(c.flip / c.dt));
        cfg.zeeman_gradient = qmem::GradientSchedule({{0.0, -beta}, {c.flip, beta}});
        cfg.snapshot_stride = stride_dividing(flip_steps, flip_steps / 24);

        const qmem::ComplexEnvelope in =
            gaussian_train(tg, c.amps, c.centers, c.pulse_sigma, c.signal_rabi);
        qmem::CouplingDrive drive = qmem::constant_drive(c.coupling, 0.0, c.window);
        // Park the drive's resonant plane mid-cloud; the grid starts at z = 0.
        drive.two_photon_detuning = beta * ens.length / 2.0;

        const qmem::Trajectory traj = qmem::run_memory(ens, tr, drive, in, cfg, ground);
        const double photons_in = qmem::photon_count(tr, in, 1.0);

        const auto iflip = static_cast<std::size_t>(
            std::lower_bound(traj.time.begin(), traj.time.end(), c.flip) - traj.time.begin());
        const double out_flip =
            traj.n_photons_out[std::min(iflip, traj.n_photons_out.size() - 1)];
        const double efficiency = (traj.n_photons_out.back() - out_flip) / photons_in;
        const double transmitted = out_flip / photons_in;

        // Spin-wave spectrum at the flip against the K = beta (t_flip - t)
        // replay of the written train.
        const qmem::ComplexEnvelope* at_flip = nullptr;
        for (const auto& [t, snap] : traj.snapshots)
            if (std::abs(t - c.flip) < 0.5 * c.dt) at_flip = &snap;
        if (!at_flip) throw NumericError("no coherence snapshot at the gradient flip");
        const qmem::ComplexEnvelope kspec = qmem::dft(*at_flip);
        std::vector<double> mag(kspec.size()), replay(kspec.size());
        for (std::size_t m = 0; m < kspec.size(); ++m) {
            mag[m] = std::abs(kspec.values[m]);
            const double tw = c.flip - kspec.grid.coord(m) / beta;
            double v = 0.0;
            if (tw >= 0.0 && tw <= c.flip)
                for (std::size_t q = 0; q < c.amps.size(); ++q) {
                    const double u = (tw - c.centers[q]) / c.pulse_sigma;
                    v += c.amps[q] * std::exp(-0.5 * u * u);
                }
            replay[m] = v;
        }
        const double kcorr = pearson(mag, replay);

        std::vector<double> echo_amp(tg.count, 0.0);
        for (std::size_t i = 0; i < tg.count; ++i)
            if (tg.coord(i) > c.flip)
                echo_amp[i] = std::abs(traj.output_signal.values[i]);
        const auto peaks = find_peaks(
            echo_amp, 0.25,
            std::max<std::size_t>(5, static_cast<std::size_t>(std::llround(c.pulse_sigma / c.dt))));

        // Expected arrivals mirror the write times about the flip; matching
        // them in ascending order means the train reads out last-in-first-out.
        std::vector<std::size_t> order(c.centers.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return c.centers[a] > c.centers[b]; });
        std::vector<double> expect, amps_by_arrival;
        for (std::size_t i : order) {
            expect.push_back(2.0 * c.flip - c.centers[i]);
            amps_by_arrival.push_back(c.amps[i]);
        }
        std::vector<double> arrivals, echo_amps;
        for (std::size_t i : peaks) {
            arrivals.push_back(tg.coord(i));
            echo_amps.push_back(echo_amp[i]);
        }
        bool reversed = arrivals.size() == expect.size();
        if (reversed)
            for (std::size_t i = 0; i < expect.size(); ++i)
                if (std::abs(arrivals[i] - expect[i]) > 0.5 * c.pulse_sigma) reversed = false;
        if (reversed && c.amps.size() > 1 &&
            !(pearson(amps_by_arrival, echo_amps) > 0.0))
            reversed = false;

        Table sig;
        sig.notes = {"gradient echo cycle: write against -beta, read after the flip to +beta",
                     "time [us], input and output signal intensity [(rad/s)^2]"};
        sig.columns = {"t_us", "input_intensity", "output_intensity"};
        for (std::size_t i = 0; i < tg.count; ++i)
            sig.rows.push_back({tg.coord(i) * 1e6, std::norm(in.values[i]),
                                std::norm(traj.output_signal.values[i])});
        art.files.emplace_back("signal.dat", render_table(sig));

        double mmax = 0.0, rmax = 0.0;
        for (std::size_t m = 0; m < mag.size(); ++m) {
            mmax = std::max(mmax, mag[m]);
            rmax = std::max(rmax, replay[m]);
        }
        Table ksp;
        ksp.notes = {"spin-wave spectrum at the gradient flip, against the written",
                     "temporal profile replayed through K = beta (t_flip - t); both normalized"};
        ksp.columns = {"K_rad_per_m", "coherence_mag", "input_replay"};
        for (std::size_t m = 0; m < mag.size(); ++m)
            ksp.rows.push_back({kspec.grid.coord(m), mmax > 0.0 ? mag[m] / mmax : 0.0,
                                rmax > 0.0 ? replay[m] / rmax : 0.0});
        art.files.emplace_back("kspace_at_flip.dat", render_table(ksp));

        sum["efficiency"] = efficiency;
        sum["time-reversed"] = reversed;
        sum["transmitted_fraction"] = transmitted;
        sum["kspace_input_correlation"] = kcorr;
        json ja = json::array(), je = json::array();
        for (double t : arrivals) ja.push_back(t * 1e6);
        for (double t : expect) je.push_back(t * 1e6);
        sum["echo_arrivals_us"] = ja;
        sum["expected_arrivals_us"] = je;
    } else {
        const qmem::ComplexEnvelope in =
            gaussian_train(tg, {1.0}, {c.pulse_center}, c.pulse_sigma, c.signal_rabi);
        const double photons_in = qmem::photon_count(tr, in, 1.0);
        const std::vector<double> deltas =
            linspace(c.scan_center - 0.5 * c.scan_span, c.scan_center + 0.5 * c.scan_span,
                     static_cast<std::size_t>(c.scan_points));

        Table scan;
        scan.notes = {"two-photon detuning scan of the stationary memory (no gradient):",
                      "energy transmission of a weak probe pulse against the Raman line"};
        scan.columns = {"delta_kHz", "transmission"};
        double tmin = 2.0;
        double dmin = 0.0;
        std::size_t imin = 0;
        std::vector<double> ts;
        for (std::size_t j = 0; j < deltas.size(); ++j) {
            qmem::CouplingDrive drive =
                qmem::constant_drive(c.coupling, 0.0, c.window, deltas[j]);
            const qmem::Trajectory traj = qmem::run_memory(ens, tr, drive, in, cfg, ground);
            const double t = traj.n_photons_out.back() / photons_in;
            ts.push_back(t);
            scan.rows.push_back({deltas[j] / (two_pi * 1e3), t});
            if (t < tmin) {
                tmin = t;
                dmin = deltas[j];
                imin = j;
            }
        }
        if (imin > 0 && imin + 1 < ts.size()) {
            // Parabolic refinement of the absorption minimum.
            const double a = ts[imin - 1], b = ts[imin], cc = ts[imin + 1];
            const double den = a - 2.0 * b + cc;
            if (std::abs(den) > 0.0)
                dmin += 0.5 * (a - cc) / den * (deltas[1] - deltas[0]);
        }
        double fwhm = 0.0;
        {
            const double half = 0.5 * (1.0 - tmin);
            double lo = deltas.front(), hi = deltas.back();
            for (std::size_t j = imin; j-- > 0;)
                if (1.0 - ts[j] < half) {
                    const double f = (1.0 - ts[j + 1] - half) / (ts[j] - ts[j + 1]);
                    lo = deltas[j + 1] + f * (deltas[j] - deltas[j + 1]);
                    break;
                }
            for (std::size_t j = imin + 1; j < ts.size(); ++j)
                if (1.0 - ts[j] < half) {
                    const double f = (1.0 - ts[j - 1] - half) / (ts[j] - ts[j - 1]);
                    hi = deltas[j - 1] + f * (deltas[j] - deltas[j - 1]);
                    break;
                }
            fwhm = hi - lo;
        }
        art.files.emplace_back("raman_scan.dat", render_table(scan));
        sum["min_transmission"] = tmin;
        sum["delta_at_min_kHz"] = dmin / (two_pi * 1e3);
        sum["predicted_center_kHz"] =
            -c.coupling * c.coupling / (4.0 * c.detuning) / (two_pi * 1e3);
        sum["fwhm_kHz"] = fwhm / (two_pi * 1e3);
        sum["power_broadening_rate_kHz"] =
            qmem::power_broadening_rate(c.coupling, c.detuning, tr.gamma) / (two_pi * 1e3);
    }
    push_summary(art, sum);
    return art;
}

// ---------------------------------------------------------------------------
// collapse-revival: staircase of equally spaced precession rates.

struct CollapseCfg {
    long long steps, points;
    double dw, base, duration;
};

CollapseCfg bind_collapse(Params& p) {
    CollapseCfg c;
    c.steps = p.integer_or("steps", 4);
    if (c.steps < 2 || c.steps > 64) throw ConfigError("steps must lie in [2, 64]");
    c.dw = p.freq("larmor_step");
    if (!(c.dw > 0.0)) throw ConfigError("larmor_step must be positive");
    c.base = p.freq_or("larmor_base", 0.0);
    c.duration = p.duration("duration");
    c.points = p.integer("points");
    if (c.points < 16 || c.points > 200000) throw ConfigError("points must lie in [16, 200000]");
    if (!(c.duration >= two_pi / c.dw))
        throw ConfigError("duration must reach the revival at 2 pi / larmor_step");
    return c;
}

Artifacts run_collapse(const CollapseCfg& c, const Scenario& sc) {
    const auto n = static_cast<std::size_t>(c.steps);
    std::vector<double> density(n, 1.0 / static_cast<double>(n)), larmor(n);
    for (std::size_t j = 0; j < n; ++j)
        larmor[j] = c.base + static_cast<double>(j) * c.dw;
    const qmem::PrecessionScene scene(density, larmor);
    const std::vector<double> times =
        linspace(0.0, c.duration, static_cast<std::size_t>(c.points));
    const std::vector<cplx> sig = qmem::precession_signal(scene, times);

    const double s0 = std::abs(sig[0]);
    Table tab;
    tab.notes = {"precession sum of equal-population slices with equally spaced rates;",
                 "the model column is |sin(N x)/(N sin x)| at x = step * t / 2"};
    tab.columns = {"t_us", "signal_ratio", "staircase_model"};
    double min_ratio = 1.0, min_t = 0.0, max_dev = 0.0;
    std::vector<double> ratio(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        ratio[i] = std::abs(sig[i]) / s0;
        const double x = 0.5 * c.dw * times[i];
        const double s = std::sin(x);
        const double model =
            std::abs(s) < 1e-9 ? 1.0
                               : std::abs(std::sin(static_cast<double>(n) * x) /
                                          (static_cast<double>(n) * s));
        tab.rows.push_back({times[i] * 1e6, ratio[i], model});
        max_dev = std::max(max_dev, std::abs(ratio[i] - model));
        if (ratio[i] < min_ratio) {
            min_ratio = ratio[i];
            min_t = times[i];
        }
    }
    const double t_rev = two_pi / c.dw;
    std::size_t irev = 0;
    for (std::size_t i = 1; i < times.size(); ++i)
        if (std::abs(times[i] - t_rev) < std::abs(times[irev] - t_rev)) irev = i;

    Artifacts art;
    art.files.emplace_back("precession.dat", render_table(tab));
    json sum = summary_head(sc);
    sum["min_ratio"] = min_ratio;
    sum["min_time_us"] = min_t * 1e6;
    sum["revival_time_us"] = t_rev * 1e6;
    sum["revival_ratio"] = ratio[irev];
    sum["model_max_abs_dev"] = max_dev;
    push_summary(art, sum);
    return art;
}

// ---------------------------------------------------------------------------
// ssm-compensation: Monte-Carlo dephasing of a noisy imprint plus the
// far-field waist minimum against a compensating lens power.

struct SsmCfg {
    long long draws, phi_points, stark_points;
    std::vector<double> noise_pct;
    double phi_max, phase_power, stark_limit, waist, wavelength, focal;
};

SsmCfg bind_ssm(Params& p) {
    SsmCfg c;
    c.draws = p.integer("draws");
    if (c.draws < 100 || c.draws > 10000000) throw ConfigError("draws must lie in [1e2, 1e7]");
    c.noise_pct = p.plain_list("noise_rel_percent");
    for (double v : c.noise_pct)
        if (!(v > 0.0) || !(v < 100.0))
            throw ConfigError("noise_rel_percent entries must lie in (0, 100)");
    c.phi_max = p.plain_or("phi_max", 3.0);
    if (!(c.phi_max > 0.0)) throw ConfigError("phi_max must be positive");
    c.phi_points = p.integer_or("phi_points", 61);
    if (c.phi_points < 5 || c.phi_points > 20001)
        throw ConfigError("phi_points must lie in [5, 20001]");
    c.phase_power = p.plain("phase_lens_power");
    if (c.phase_power == 0.0) throw ConfigError("phase_lens_power must be nonzero");
    c.stark_limit = p.plain_or("stark_scan_limit", 2.0 * std::abs(c.phase_power));
    if (!(c.stark_limit > 0.0)) throw ConfigError("stark_scan_limit must be positive");
    c.stark_points = p.integer_or("stark_points", 81);
    if (c.stark_points < 5 || c.stark_points > 100001)
        throw ConfigError("stark_points must lie in [5, 100001]");
    c.waist = p.distance("cloud_waist");
    if (!(c.waist > 0.0)) throw ConfigError("cloud_waist must be positive");
    c.wavelength = p.distance_or("wavelength", 795e-9);
    if (!(c.wavelength > 0.0)) throw ConfigError("wavelength must be positive");
    c.focal = p.distance_or("fourier_focal", 0.1);
    if (!(c.focal > 0.0)) throw ConfigError("fourier_focal must be positive");
    return c;
}

Artifacts run_ssm(const SsmCfg& c, const Scenario& sc) {
    Artifacts art;
    json sum = summary_head(sc);

    const std::vector<double> phis =
        linspace(0.0, c.phi_max, static_cast<std::size_t>(c.phi_points));
    Table deph;
    deph.notes = {"readout intensity after an imprint with pixelwise intensity noise:",
                  "Monte-Carlo average against the exp(-(sigma/I0)^2 phi^2) envelope"};
    deph.columns = {"phi_rad"};
    std::vector<std::vector<double>> cols;  // per level: mc then model
    json fits = json::array();
    double worst = 0.0;
    for (std::size_t lvl = 0; lvl < c.noise_pct.size(); ++lvl) {
        const double sig = c.noise_pct[lvl] / 100.0;
        deph.columns.push_back("mc_" + fmtg(c.noise_pct[lvl], "%g") + "pct");
        deph.columns.push_back("model_" + fmtg(c.noise_pct[lvl], "%g") + "pct");

        // One normal sample set per noise level, derived from the scenario
        // seed; the same draws serve every phase point.
        std::mt19937_64 rng(splitmix64(sc.seed + lvl + 1));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> xi(static_cast<std::size_t>(c.draws));
        for (double& v : xi) v = normal(rng);

        std::vector<double> mc(phis.size()), model(phis.size());
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < phis.size(); ++i) {
            cplx m{0.0, 0.0};
            for (double v : xi) m += std::polar(1.0, phis[i] * (1.0 + sig * v));
            m /= static_cast<double>(xi.size());
            mc[i] = std::norm(m);
            model[i] = std::exp(-sig * sig * phis[i] * phis[i]);
            if (phis[i] > 0.0 && mc[i] > 0.0) {
                num += -std::log(mc[i]) * phis[i] * phis[i];
                den += phis[i] * phis[i] * phis[i] * phis[i];
            }
        }
        cols.push_back(mc);
        cols.push_back(model);
        const double gamma_fit = num / den;
        const double gamma_expected = sig * sig;
        const double rel = std::abs(gamma_fit - gamma_expected) / gamma_expected;
        worst = std::max(worst, rel);
        json f;
        f["noise_rel_percent"] = c.noise_pct[lvl];
        f["gamma_fit"] = gamma_fit;
        f["gamma_expected"] = gamma_expected;
        f["rel_err"] = rel;
        fits.push_back(f);
    }
    for (std::size_t i = 0; i < phis.size(); ++i) {
        std::vector<double> row{phis[i]};
        for (const auto& col : cols) row.push_back(col[i]);
        deph.rows.push_back(row);
    }
    art.files.emplace_back("dephasing.dat", render_table(deph));

    const std::vector<double> powers =
        linspace(-c.stark_limit, c.stark_limit, static_cast<std::size_t>(c.stark_points));
    Table comp;
    comp.notes = {"far-field readout waist against the imprinted lens power; the",
                  "minimum marks where the imprint cancels the physical lens"};
    comp.columns = {"stark_power_per_m", "waist_um"};
    std::size_t ibest = 0;
    std::vector<double> ws(powers.size());
    for (std::size_t i = 0; i < powers.size(); ++i) {
        ws[i] = qmem::farfield_waist(c.phase_power, powers[i], c.waist, c.wavelength, c.focal);
        comp.rows.push_back({powers[i], ws[i] * 1e6});
        if (ws[i] < ws[ibest]) ibest = i;
    }
    double popt = powers[ibest];
    if (ibest > 0 && ibest + 1 < powers.size()) {
        const double a = ws[ibest - 1] * ws[ibest - 1], b = ws[ibest] * ws[ibest],
                     d = ws[ibest + 1] * ws[ibest + 1];
        const double den2 = a - 2.0 * b + d;
        if (den2 > 0.0) popt += 0.5 * (a - d) / den2 * (powers[1] - powers[0]);
    }
    art.files.emplace_back("compensation.dat", render_table(comp));

    sum["dephasing_fits"] = fits;
    sum["dephasing_worst_rel_err"] = worst;
    sum["optimal_stark_power_per_m"] = popt;
    sum["expected_optimal_per_m"] = -c.phase_power;
    sum["min_waist_um"] = ws[ibest] * 1e6;
    sum["uncompensated_waist_um"] =
        qmem::farfield_waist(c.phase_power, 0.0, c.waist, c.wavelength, c.focal) * 1e6;
    sum["diffraction_waist_um"] =
        c.wavelength * c.focal / (0.5 * two_pi * c.waist) * 1e6;
    push_summary(art, sum);
    return art;
}

// ---------------------------------------------------------------------------
// spectrometer: two-pulse input through the write / lens kick / read
// protocol; arrival-time fringes measure the chirp mapping.

struct SpecCfg {
    double od, length, detuning, coupling, gradient, chirp, window, dt;
    double sigma, sep, signal_rabi, temperature, dead, read_dur;
    long long cells;
};

SpecCfg bind_spectrometer(Params& p) {
    SpecCfg c;
    c.od = p.plain("od");
    if (!(c.od > 0.0)) throw ConfigError("od must be positive");
    c.cells = p.integer("cells");
    if (c.cells < 8 || c.cells > 4096) throw ConfigError("cells must lie in [8, 4096]");
    c.length = p.distance("length");
    if (!(c.length > 0.0)) throw ConfigError("length must be positive");
    c.detuning = p.freq("detuning");
    if (c.detuning == 0.0) throw ConfigError("detuning must be nonzero");
    c.coupling = p.freq("coupling_rabi");
    if (!(c.coupling > 0.0)) throw ConfigError("coupling_rabi must be positive");
    c.gradient = std::abs(p.slope("gradient"));
    if (c.gradient == 0.0) throw ConfigError("gradient must be nonzero");
    c.chirp = p.chirp_rate("chirp");
    if (c.chirp == 0.0) throw ConfigError("chirp must be nonzero");
    c.window = p.duration("window");
    c.dt = p.duration("dt");
    if (!(c.dt > 0.0) || !(c.window > 16.0 * c.dt))
        throw ConfigError("window must span at least 16 steps");
    c.sigma = p.duration("pulse_sigma");
    if (!(c.sigma >= 10.0 * c.dt)) throw ConfigError("pulse_sigma must span at least 10 steps");
    c.sep = p.duration("pulse_separation");
    if (!(c.sep > 0.0) || !(c.sep + 6.0 * c.sigma <= c.window))
        throw ConfigError("pulse pair must fit inside the window");
    c.signal_rabi = p.freq("signal_rabi");
    if (!(c.signal_rabi > 0.0)) throw ConfigError("signal_rabi must be positive");
    c.temperature = p.temperature_or("temperature", 2e-5);
    c.dead = p.duration_or("dead_time", 0.0);
    if (c.dead < 0.0) throw ConfigError("dead_time must be nonnegative");
    c.read_dur = p.duration_or("read_duration", 0.0);
    if (c.read_dur < 0.0) throw ConfigError("read_duration must be nonnegative");
    return c;
}

Artifacts run_spectrometer_scenario(const SpecCfg& c, const Scenario& sc) {
    const qmem::Transition tr = qmem::rb87_d1();
    const qmem::AtomEnsemble ens = qmem::uniform_ensemble(
        c.length, static_cast<std::size_t>(c.cells), c.od, tr, c.temperature);
    const qmem::SpectrometerDesign d(c.coupling, c.detuning, c.gradient, c.length, c.od,
                                     tr.gamma, c.chirp);
    const qmem::DesignReport rep = qmem::design_report(d);

    const auto steps = static_cast<std::size_t>(std::llround(c.window / c.dt));
    const qmem::Grid1D tg(0.0, c.dt, steps);
    const double t_mid = 0.5 * tg.extent();
    const qmem::ComplexEnvelope in = gaussian_train(
        tg, {1.0, 1.0}, {t_mid - 0.5 * c.sep, t_mid + 0.5 * c.sep}, c.sigma, c.signal_rabi);

    qmem::SpectrometerSchedule sched;
    sched.read_duration = c.read_dur;
    sched.dead_time = c.dead;
    const qmem::SpectrometerResult res = qmem::run_spectrometer(ens, tr, d, in, sched);

    const double read_span = res.readout.grid.extent();
    const std::string exposure =
        "coupling-on exposure: " + fmtg(c.window * 1e6) + " us write + " +
        fmtg(read_span * 1e6) + " us read";

    Table tin;
    tin.notes = {"two-pulse input to the time-lens spectrometer", exposure};
    tin.columns = {"t_us", "intensity"};
    for (std::size_t i = 0; i < tg.count; ++i)
        tin.rows.push_back({tg.coord(i) * 1e6, std::norm(in.values[i])});
    Table tout;
    tout.notes = {"spectrometer readout: arrival time maps input frequency with",
                  "slope 1/chirp, so the pulse pair shows spectral fringes", exposure};
    tout.columns = {"t_us", "intensity"};
    std::vector<double> rint(res.readout.size());
    for (std::size_t i = 0; i < res.readout.size(); ++i) {
        rint[i] = std::norm(res.readout.values[i]);
        tout.rows.push_back({res.readout.grid.coord(i) * 1e6, rint[i]});
    }

    const double predicted = two_pi / (c.chirp * c.sep);
    std::vector<double> near_echo(rint.size(), 0.0);
    for (std::size_t i = 0; i < rint.size(); ++i)
        if (std::abs(res.readout.grid.coord(i) - res.echo_center) <= 4.0 * predicted)
            near_echo[i] = rint[i];
    const auto peaks = find_peaks(
        near_echo, 0.3,
        std::max<std::size_t>(3, static_cast<std::size_t>(std::llround(0.4 * predicted / c.dt))));
    double spacing = 0.0;
    if (peaks.size() >= 2) {
        for (std::size_t i = 1; i < peaks.size(); ++i)
            spacing += res.readout.grid.coord(peaks[i]) - res.readout.grid.coord(peaks[i - 1]);
        spacing /= static_cast<double>(peaks.size() - 1);
    }

    Artifacts art;
    art.files.emplace_back("input.dat", render_table(tin));
    art.files.emplace_back("readout.dat", render_table(tout));
    json sum = summary_head(sc);
    sum["efficiency"] = res.efficiency;
    sum["fringe_spacing_us"] = spacing * 1e6;
    sum["predicted_spacing_us"] = predicted * 1e6;
    sum["spacing_ratio"] = predicted > 0.0 && spacing > 0.0 ? spacing / predicted : 0.0;
    sum["fringe_count"] = peaks.size();
    sum["echo_center_us"] = res.echo_center * 1e6;
    sum["flip_time_us"] = res.flip_time * 1e6;
    sum["exposure_write_us"] = c.window * 1e6;
    sum["exposure_read_us"] = read_span * 1e6;
    sum["bandwidth_kHz"] = rep.bandwidth / (two_pi * 1e3);
    sum["tau_us"] = rep.tau * 1e6;
    sum["tau_max_us"] = rep.tau_max * 1e6;
    sum["resolution_kHz"] = rep.resolution / (two_pi * 1e3);
    sum["pixels"] = rep.pixels;
    sum["eta0"] = rep.eta0;
    sum["eta0_model"] = rep.eta0_model;
    push_summary(art, sum);
    return art;
}

// ---------------------------------------------------------------------------
// efficiency-map: echo efficiency over the (acceptance bandwidth, power
// broadening rate) plane, with the closed-form capture estimates alongside.

struct MapCfg {
    double od, length, detuning, sigma, temperature;
    long long cells;
    double bmin, bmax, fmin, fmax;
    long long bpts, fpts;
};

MapCfg bind_map(Params& p) {
    MapCfg c;
    c.od = p.plain("od");
    if (!(c.od > 0.0)) throw ConfigError("od must be positive");
    c.cells = p.integer("cells");
    if (c.cells < 8 || c.cells > 1024) throw ConfigError("cells must lie in [8, 1024]");
    c.length = p.distance("length");
    if (!(c.length > 0.0)) throw ConfigError("length must be positive");
    c.detuning = p.freq("detuning");
    if (c.detuning == 0.0) throw ConfigError("detuning must be nonzero");
    c.sigma = p.duration("pulse_sigma");
    if (!(c.sigma > 0.0)) throw ConfigError("pulse_sigma must be positive");
    c.temperature = p.temperature_or("temperature", 2e-5);
    c.bmin = p.freq("bandwidth_min");
    c.bmax = p.freq("bandwidth_max");
    if (!(c.bmin > 0.0) || !(c.bmax > c.bmin))
        throw ConfigError("bandwidth range must be positive and increasing");
    c.bpts = p.integer("bandwidth_points");
    c.fmin = p.freq("inv_tau_min");
    c.fmax = p.freq("inv_tau_max");
    if (!(c.fmin > 0.0) || !(c.fmax > c.fmin))
        throw ConfigError("inv_tau range must be positive and increasing");
    c.fpts = p.integer("inv_tau_points");
    if (c.bpts < 2 || c.bpts > 64 || c.fpts < 2 || c.fpts > 64)
        throw ConfigError("grid points must lie in [2, 64] per axis");
    return c;
}

Artifacts run_map(const MapCfg& c, const Scenario& sc) {
    const qmem::Transition tr = qmem::rb87_d1();
    const qmem::AtomEnsemble ens = qmem::uniform_ensemble(
        c.length, static_cast<std::size_t>(c.cells), c.od, tr, c.temperature);

    // Fixed protocol per grid point: write a mid-window Gaussian against -beta,
    // flip at W = 8 sigma, read until 2 W. The echo is due at 1.5 W.
    const double W = 8.0 * c.sigma;
    const double t_c = 4.0 * c.sigma;
    const double omega_max = 2.0 * std::abs(c.detuning) * std::sqrt(c.fmax / tr.gamma);
    const double dod = c.od / static_cast<double>(c.cells);
    const double angle_bound =
        0.5 * std::pow(0.1 * 4.0 * std::abs(c.detuning) /
                           (std::sqrt(tr.gamma) * omega_max),
                       2.0) /
        dod;
    const double dt = std::min({c.sigma / 50.0, angle_bound, 0.15 / c.bmax});
    const auto steps = static_cast<std::size_t>(std::llround(2.0 * W / dt));
    const qmem::Grid1D tg(0.0, dt, steps);

    const std::vector<double> bs = linspace(c.bmin, c.bmax, static_cast<std::size_t>(c.bpts));
    const std::vector<double> fs = linspace(c.fmin, c.fmax, static_cast<std::size_t>(c.fpts));

    Table map;
    map.notes = {"echo efficiency against acceptance bandwidth B = beta L and the",
                 "power-broadening rate 1/tau, with the closed-form capture laws;",
                 "eta0 is the quoted double-pass estimate, eta0_model the sweep the",
                 "elementary rotations actually integrate to"};
    map.columns = {"bandwidth_kHz", "inv_tau_kHz", "tau_B",
                   "efficiency", "eta0", "eta0_model", "echo_fwhm_us"};

    for (double B : bs)
        for (double f : fs) {
            const double beta = B / c.length;
            const double omega = 2.0 * std::abs(c.detuning) * std::sqrt(f / tr.gamma);

            qmem::SolverConfig cfg;
            cfg.detuning = c.detuning;
            cfg.dt = dt;
            cfg.dz = ens.grid.step;
            cfg.t_start = 0.0;
            cfg.t_end = 2.0 * W;
            cfg.zeeman_gradient = qmem::GradientSchedule({{0.0, -beta}, {W, beta}});

            const qmem::ComplexEnvelope in =
                gaussian_train(tg, {1.0}, {t_c}, c.sigma, two_pi * 0.05e6);
            qmem::CouplingDrive drive = qmem::constant_drive(omega, 0.0, 2.0 * W);
            drive.two_photon_detuning = beta * ens.length / 2.0;
            const qmem::MemoryState ground{
                qmem::ComplexEnvelope(ens.grid, qmem::EnvelopeKind::coherence_in_z), 0.0};
            const qmem::Trajectory traj = qmem::run_memory(ens, tr, drive, in, cfg, ground);

            const double photons_in = qmem::photon_count(tr, in, 1.0);
            const auto iflip = static_cast<std::size_t>(
                std::lower_bound(traj.time.begin(), traj.time.end(), W) - traj.time.begin());
            const double out_flip =
                traj.n_photons_out[std::min(iflip, traj.n_photons_out.size() - 1)];
            const double eff = (traj.n_photons_out.back() - out_flip) / photons_in;

            std::vector<double> et, ei;
            double peak = 0.0;
            for (std::size_t i = 0; i < tg.count; ++i)
                if (tg.coord(i) > W) {
                    et.push_back(tg.coord(i));
                    ei.push_back(std::norm(traj.output_signal.values[i]));
                    peak = std::max(peak, ei.back());
                }
            double fwhm = 0.0;
            if (peak > 0.0) fwhm = qmem::mean_over_fwhm(et, ei).fwhm;

            const qmem::SpectrometerDesign probe(omega, c.detuning, beta, c.length, c.od,
                                                 tr.gamma, B / W);
            const qmem::DesignReport rep = qmem::design_report(probe);
            map.rows.push_back({B / (two_pi * 1e3), f / (two_pi * 1e3), B / f, eff,
                                rep.eta0, rep.eta0_model, fwhm * 1e6});
        }

    double emin = 1.0, emax = 0.0;
    for (const auto& row : map.rows) {
        emin = std::min(emin, row[3]);
        emax = std::max(emax, row[3]);
    }
    Artifacts art;
    art.files.emplace_back("map.dat", render_table(map));
    json sum = summary_head(sc);
    sum["grid"] = {{"bandwidth_points", c.bpts}, {"inv_tau_points", c.fpts}};
    sum["max_efficiency"] = emax;
    sum["min_efficiency"] = emin;
    sum["step_dt_us"] = dt * 1e6;
    push_summary(art, sum);
    return art;
}

// ---------------------------------------------------------------------------
// cavity-readout: full ring-cavity conversion at one operating point plus
// the competing-rates absorption curve over the detuning sweep.

struct CavityCfg {
    double length, mirror_T, rabi, detuning, od, cloud_length, temperature;
    double angle, pulse, amp, abs_min, abs_max;
    long long cells, abs_points;
};

CavityCfg bind_cavity(Params& p) {
    CavityCfg c;
    c.length = p.distance("length");
    c.mirror_T = p.plain("mirror_transmission");
    c.rabi = p.freq("readout_rabi");
    if (!(c.rabi > 0.0)) throw ConfigError("readout_rabi must be positive");
    c.detuning = p.freq("detuning");
    c.od = p.plain("od");
    if (!(c.od > 0.0)) throw ConfigError("od must be positive");
    c.cells = p.integer("cells");
    if (c.cells < 8 || c.cells > 4096) throw ConfigError("cells must lie in [8, 4096]");
    c.cloud_length = p.distance("cloud_length");
    if (!(c.cloud_length > 0.0)) throw ConfigError("cloud_length must be positive");
    c.temperature = p.temperature_or("temperature", 2e-5);
    if (!(c.temperature > 0.0)) throw ConfigError("temperature must be positive");
    c.angle = p.angle_or("angle", two_pi / 360.0);
    c.pulse = p.duration("pulse");
    if (!(c.pulse > 0.0)) throw ConfigError("pulse must be positive");
    c.amp = p.plain_or("initial_amplitude", 1e3);
    if (!(c.amp > 0.0)) throw ConfigError("initial_amplitude must be positive");
    c.abs_min = p.freq_or("absorption_min", two_pi * 0.2e9);
    c.abs_max = p.freq_or("absorption_max", two_pi * 3e9);
    if (!(c.abs_max > c.abs_min)) throw ConfigError("absorption scan range must increase");
    c.abs_points = p.integer_or("absorption_points", 57);
    if (c.abs_points < 2 || c.abs_points > 2001)
        throw ConfigError("absorption_points must lie in [2, 2001]");
    // The model constructor re-checks length, transmission and detunings;
    // bind-time construction surfaces those as validation errors.
    qmem::CavityModel probe(c.length, c.mirror_T, c.rabi, qmem::d1_readout_levels(c.detuning));
    (void)probe;
    return c;
}

Artifacts run_cavity(const CavityCfg& c, const Scenario& sc) {
    const qmem::Transition tr = qmem::rb87_d1();
    const qmem::AtomEnsemble ens = qmem::uniform_ensemble(
        c.cloud_length, static_cast<std::size_t>(c.cells), c.od, tr, c.temperature);
    const qmem::CavityModel m(c.length, c.mirror_T, c.rabi, qmem::d1_readout_levels(c.detuning));

    const qmem::ReadoutRun run =
        qmem::run_readout(m, ens, tr, cplx(c.amp, 0.0), c.pulse);
    const qmem::LifetimeBudget budget = qmem::lifetime_budget(m, c.angle, ens, tr);

    Table dyn;
    dyn.notes = {"selective readout through the ring cavity: photon exchange and",
                 "mirror outflux per unit beam area"};
    dyn.columns = {"t_us", "cavity_photons", "atomic_excitations", "emitted"};
    const std::size_t stride = std::max<std::size_t>(1, run.time.size() / 1000);
    for (std::size_t i = 0; i < run.time.size(); ++i)
        if (i % stride == 0 || i + 1 == run.time.size())
            dyn.rows.push_back({run.time[i] * 1e6, run.cavity_photons[i],
                                run.atom_excitation[i], run.emitted[i]});

    Table abs;
    abs.notes = {"competing-rates capture probability of a cavity photon against",
                 "the reference-level detuning; the second level crosses resonance",
                 "814 MHz above it"};
    abs.columns = {"detuning_GHz", "capture_probability"};
    for (double d : linspace(c.abs_min, c.abs_max, static_cast<std::size_t>(c.abs_points)))
        abs.rows.push_back(
            {d / (two_pi * 1e9), qmem::absorption_probability(m, ens, tr, d)});

    Artifacts art;
    art.files.emplace_back("readout_dynamics.dat", render_table(dyn));
    art.files.emplace_back("absorption.dat", render_table(abs));
    json sum = summary_head(sc);
    sum["efficiency"] = run.efficiency;
    sum["survival_offmatched"] = run.survival_offmatched;
    sum["destruction_offmatched"] = 1.0 - run.survival_offmatched;
    sum["tau_broadening_us"] = budget.tau_broadening * 1e6;
    sum["tau_thermal_us"] = budget.tau_thermal * 1e6;
    sum["initial_excitations"] = run.atom_excitation.front();
    sum["emitted_photons"] = run.emitted.back();
    sum["pulse_us"] = c.pulse * 1e6;
    push_summary(art, sum);
    return art;
}

// ---------------------------------------------------------------------------
// phase-match-sweep: collective readout amplitude against the wavevector
// mismatch of the stored wave, with the uniform-cloud sinc envelope.

struct SweepCfg {
    double od, length, detuning, coupling, dkl_max, window, dt, amp, temperature;
    long long cells, points;
};

SweepCfg bind_sweep(Params& p) {
    SweepCfg c;
    c.od = p.plain("od");
    if (!(c.od > 0.0)) throw ConfigError("od must be positive");
    c.cells = p.integer("cells");
    if (c.cells < 8 || c.cells > 4096) throw ConfigError("cells must lie in [8, 4096]");
    c.length = p.distance("length");
    if (!(c.length > 0.0)) throw ConfigError("length must be positive");
    c.detuning = p.freq("detuning");
    if (c.detuning == 0.0) throw ConfigError("detuning must be nonzero");
    c.coupling = p.freq("coupling_rabi");
    if (!(c.coupling > 0.0)) throw ConfigError("coupling_rabi must be positive");
    c.points = p.integer_or("points", 41);
    if (c.points < 5 || c.points > 401) throw ConfigError("points must lie in [5, 401]");
    c.dkl_max = p.plain_or("dkl_max", 20.0);
    if (!(c.dkl_max > 0.0)) throw ConfigError("dkl_max must be positive");
    c.window = p.duration("window");
    c.dt = p.duration("dt");
    if (!(c.dt > 0.0) || !(c.window > 16.0 * c.dt))
        throw ConfigError("window must span at least 16 steps");
    c.amp = p.plain_or("amplitude", 0.01);
    if (!(c.amp > 0.0)) throw ConfigError("amplitude must be positive");
    c.temperature = p.temperature_or("temperature", 2e-5);
    return c;
}

Artifacts run_sweep(const SweepCfg& c, const Scenario& sc) {
    const qmem::Transition tr = qmem::rb87_d1();
    const qmem::AtomEnsemble ens = qmem::uniform_ensemble(
        c.length, static_cast<std::size_t>(c.cells), c.od, tr, c.temperature);

    qmem::SolverConfig cfg;
    cfg.detuning = c.detuning;
    cfg.dt = c.dt;
    cfg.dz = ens.grid.step;
    cfg.t_start = 0.0;
    cfg.t_end = c.window;
    // Loss-free probe: the sweep isolates the collective emission pattern.
    cfg.include_spont_loss = false;
    const qmem::CouplingDrive drive = qmem::constant_drive(c.coupling, 0.0, c.window);

    const std::vector<double> dkls =
        linspace(-c.dkl_max, c.dkl_max, static_cast<std::size_t>(c.points));
    std::vector<double> amp(dkls.size()), model(dkls.size());
    for (std::size_t j = 0; j < dkls.size(); ++j) {
        qmem::MemoryState init{
            qmem::ComplexEnvelope(ens.grid, qmem::EnvelopeKind::coherence_in_z), 0.0};
        const double dkz = dkls[j] / c.length;
        for (std::size_t i = 0; i < ens.grid.count; ++i)
            init.coherence.values[i] = c.amp * std::polar(1.0, dkz * ens.grid.coord(i));
        const qmem::Trajectory traj = qmem::run_memory(ens, tr, drive, {}, cfg, init);
        amp[j] = std::sqrt(traj.n_photons_out.back());
        const double x = 0.5 * dkls[j];
        model[j] = std::abs(x) < 1e-12 ? 1.0 : std::abs(std::sin(x) / x);
    }
    const double amax = *std::max_element(amp.begin(), amp.end());
    const double mmax = *std::max_element(model.begin(), model.end());
    for (double& v : amp) v /= amax;
    for (double& v : model) v /= mmax;

    Table tab;
    tab.notes = {"readout amplitude of a stored plane wave against its wavevector",
                 "mismatch times cloud length, with the uniform-cloud sinc envelope"};
    tab.columns = {"dkz_L", "readout_amplitude", "sinc_model"};
    double dev = 0.0;
    for (std::size_t j = 0; j < dkls.size(); ++j) {
        tab.rows.push_back({dkls[j], amp[j], model[j]});
        dev = std::max(dev, std::abs(amp[j] - model[j]));
    }

    Artifacts art;
    art.files.emplace_back("sweep.dat", render_table(tab));
    json sum = summary_head(sc);
    sum["sinc_correlation"] = pearson(amp, model);
    sum["max_abs_dev"] = dev;
    sum["points"] = c.points;
    push_summary(art, sum);
    return art;
}

// ---------------------------------------------------------------------------

std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

Scenario parse_scenario_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot read " + path);

    Scenario sc;
    sc.name = std::filesystem::path(path).stem().string();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ParseError(path + ":" + std::to_string(lineno) + ": empty key or value");
        if (key.find_first_not_of(
                "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_") !=
            std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad key '" + key + "'");
        if (!sc.raw.emplace(key, value).second)
            throw ParseError(path + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                             "'");
    }

    const auto take = [&](const char* key) -> std::string {
        auto it = sc.raw.find(key);
        if (it == sc.raw.end()) return "";
        std::string v = it->second;
        sc.raw.erase(it);
        return v;
    };
    sc.kind = take("kind");
    if (sc.kind.empty()) throw ConfigError(path + ": missing kind");
    const std::string seed_text = take("seed");
    if (seed_text.empty()) throw ConfigError(path + ": missing seed");
    {
        const char* cs = seed_text.c_str();
        char* end = nullptr;
        const unsigned long long v = std::strtoull(cs, &end, 10);
        if (end == cs || *end != '\0' || seed_text[0] == '-')
            throw ConfigError(path + ": seed must be an unsigned 64-bit integer");
        sc.seed = v;
    }
    sc.output_root = take("output_dir");
    return sc;
}

namespace {

enum class Phase { validate, run };

Artifacts dispatch(const Scenario& sc, Phase phase) {
    Params p(sc);
    Artifacts art;
    if (sc.kind == "memory-cycle") {
        const MemoryCycleCfg c = bind_memory_cycle(p);
        p.finish();
        if (phase == Phase::run) art = run_memory_cycle(c, sc);
    } else if (sc.kind == "collapse-revival") {
        const CollapseCfg c = bind_collapse(p);
        p.finish();
        if (phase == Phase::run) art = run_collapse(c, sc);
    } else if (sc.kind == "ssm-compensation") {
        const SsmCfg c = bind_ssm(p);
        p.finish();
        if (phase == Phase::run) art = run_ssm(c, sc);
    } else if (sc.kind == "spectrometer") {
        const SpecCfg c = bind_spectrometer(p);
        p.finish();
        if (phase == Phase::run) art = run_spectrometer_scenario(c, sc);
    } else if (sc.kind == "efficiency-map") {
        const MapCfg c = bind_map(p);
        p.finish();
        if (phase == Phase::run) art = run_map(c, sc);
    } else if (sc.kind == "cavity-readout") {
        const CavityCfg c = bind_cavity(p);
        p.finish();
        if (phase == Phase::run) art = run_cavity(c, sc);
    } else if (sc.kind == "phase-match-sweep") {
        const SweepCfg c = bind_sweep(p);
        p.finish();
        if (phase == Phase::run) art = run_sweep(c, sc);
    } else {
        throw ConfigError("unknown scenario kind '" + sc.kind + "'");
    }
    if (phase == Phase::run)
        art.files.insert(art.files.begin(), {"manifest.txt", p.manifest(sc)});
    return art;
}

}  // namespace

void validate_scenario(const Scenario& sc) { dispatch(sc, Phase::validate); }

Artifacts run_scenario(const Scenario& sc) { return dispatch(sc, Phase::run); }

void write_artifacts(const std::string& dir, const Artifacts& a) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, content] : a.files) {
        const std::string path = dir + "/" + name;
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + path);
        f << content;
        if (!f) throw std::runtime_error("short write to " + path);
    }
}

const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> entries{
        {"cavity_92.scenario", "cavity-readout",
         "Ring-cavity selective readout budget at the chapter-6 operating point"},
        {"collapse_revival.scenario", "collapse-revival",
         "Four-step Larmor staircase collapse and revival (Fig. 3.4(c) pattern)"},
        {"efficiency_map.scenario", "efficiency-map",
         "Echo efficiency over the (bandwidth, decoherence) plane (Fig. 5.7(e) analogue)"},
        {"gem_fig52.scenario", "memory-cycle",
         "Three-pulse gradient echo write/read with K-space replay (Fig. 5.2)"},
        {"memory_absorption.scenario", "memory-cycle",
         "Raman line scan of the stationary memory (chapter-5 two-photon response)"},
        {"memory_write_read.scenario", "memory-cycle",
         "Single-pulse gradient echo cycle at reduced depth (chapter-5 baseline)"},
        {"phase_match_sweep.scenario", "phase-match-sweep",
         "Readout amplitude against wavevector mismatch (chapter-2 sinc envelope)"},
        {"spectrometer_fig54.scenario", "spectrometer",
         "Two-pulse time-lens spectrometer fringes (Fig. 5.4 insets)"},
        {"ssm_compensation.scenario", "ssm-compensation",
         "Stark dephasing Monte Carlo and lens compensation minimum (chapter 4)"},
    };
    return entries;
}

}  // namespace qmemcli
