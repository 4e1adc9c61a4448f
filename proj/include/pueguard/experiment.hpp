#pragma once

// Experiment drivers behind the command-line tool: the three shipped figure
// presets and custom scenario files. Each run writes CSV files and a
// manifest.cfg into the output directory; the manifest is itself a config
// file that reproduces the run.

#include "pueguard/config.hpp"
#include "pueguard/detector.hpp"
#include "pueguard/error.hpp"
#include "pueguard/markov.hpp"
#include "pueguard/netsim.hpp"
#include "pueguard/numeric.hpp"
#include "pueguard/presets.hpp"
#include "pueguard/radio.hpp"
#include "pueguard/scenario_io.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace pueguard {

inline constexpr std::string_view kToolVersion = "1.0.0";

enum class Experiment { Fig3, Fig5, Fig6, Custom };

inline const char* to_string(Experiment e) {
    switch (e) {
        case Experiment::Fig3: return "fig3";
        case Experiment::Fig5: return "fig5";
        case Experiment::Fig6: return "fig6";
        case Experiment::Custom: return "custom";
    }
    return "?";
}

inline Experiment parse_experiment(std::string_view name) {
    if (name == "fig3") return Experiment::Fig3;
    if (name == "fig5") return Experiment::Fig5;
    if (name == "fig6") return Experiment::Fig6;
    if (name == "custom") return Experiment::Custom;
    throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

inline KeyValueConfig shipped_preset(std::string_view name) {
    for (const auto& [n, text] : presets::kShipped) {
        if (n == name) return KeyValueConfig::parse(std::string(text));
    }
    throw ConfigError("no shipped preset named '" + std::string(name) + "'");
}

struct ExperimentOptions {
    std::string out_dir = "out";
    std::optional<std::string> config_path;  // replaces the shipped preset
    std::optional<std::uint64_t> seed;
    std::optional<int> replications;
    bool emit_plots = false;
    unsigned threads = 0;  // 0: hardware concurrency
};

/// Command-line value, then manifest.*, then run.*, then the fallback.
inline std::uint64_t resolve_seed(const KeyValueConfig& cfg, const ExperimentOptions& opt) {
    if (opt.seed) return *opt.seed;
    if (cfg.has("manifest.seed")) return cfg.get_u64("manifest.seed", 1);
    return cfg.get_u64("run.seed", 1);
}

inline int resolve_replications(const KeyValueConfig& cfg, const ExperimentOptions& opt) {
    long long r = 1;
    if (opt.replications) {
        r = *opt.replications;
    } else if (cfg.has("manifest.replications")) {
        r = cfg.get_int("manifest.replications");
    } else {
        r = cfg.get_int("run.replications", 1);
    }
    if (r < 1) throw ConfigError("replications must be >= 1", "run.replications");
    return int(r);
}

/// Runs fn(0..n-1) on up to `threads` workers. The first exception thrown is
/// rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = unsigned(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t k = 0; k < n; ++k) fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t k; !failed && (k = next++) < n;) {
                try {
                    fn(k);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed = true;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

struct Interval {
    double mean = 0.0;
    double half_width = 0.0;  // 95%, Student t; infinite for fewer than 2 values
};

inline Interval mean_ci95(const std::vector<double>& xs) {
    Interval out;
    if (xs.empty()) return out;
    out.mean = compensated_sum(xs) / double(xs.size());
    if (xs.size() < 2) {
        out.half_width = std::numeric_limits<double>::infinity();
        return out;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    const double sd = std::sqrt(ss / double(xs.size() - 1));
    boost::math::students_t t(double(xs.size() - 1));
    out.half_width = boost::math::quantile(boost::math::complement(t, 0.025)) * sd / std::sqrt(double(xs.size()));
    return out;
}

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf, std::size_t(n));
}

// ---- fig3 -------------------------------------------------------------------

struct Fig3Row {
    OutagePoint analytic;
    std::optional<SimulatedOutage> simulated;
    std::uint64_t seed = 0;
};

inline const std::vector<std::string>& fig3_keys() {
    static const std::vector<std::string> keys = {
        "preset.name",     "preset.version",  "markov.channels", "markov.lambda_pu", "markov.mu_pu",
        "markov.mu_eu",    "markov.p_miss",   "sweep.lambda_eu", "simulate.enabled", "simulate.horizon",
        "run.seed",        "manifest.experiment", "manifest.seed", "manifest.replications", "manifest.tool_version",
    };
    return keys;
}

inline CtmcParams fig3_params(const KeyValueConfig& cfg) {
    CtmcParams p;
    p.n_channels = int(cfg.get_int("markov.channels", p.n_channels));
    p.lambda_pu = cfg.get_double("markov.lambda_pu", p.lambda_pu);
    p.mu_pu = cfg.get_double("markov.mu_pu", p.mu_pu);
    p.mu_eu = cfg.get_double("markov.mu_eu", p.mu_eu);
    p.p_miss = cfg.get_double("markov.p_miss", p.p_miss);
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), "markov");
    }
    return p;
}

inline std::vector<Fig3Row> run_fig3(const KeyValueConfig& cfg, std::uint64_t seed, unsigned threads = 0) {
    cfg.require_known(fig3_keys());
    const CtmcParams base = fig3_params(cfg);
    const auto sweep = cfg.get_doubles("sweep.lambda_eu");
    for (double l : sweep) {
        if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("sweep.lambda_eu values must be >= 0", "sweep.lambda_eu");
    }
    const bool simulate = cfg.get_bool("simulate.enabled", true);
    const double horizon = cfg.get_double("simulate.horizon", 1e6 / base.mu_pu);
    if (simulate && !(horizon > 0.0)) throw ConfigError("simulate.horizon must be > 0", "simulate.horizon");

    std::vector<Fig3Row> rows(sweep.size());
    parallel_for(sweep.size(), threads, [&](std::size_t k) {
        Fig3Row& row = rows[k];
        row.analytic = solve_outage_point(base, sweep[k]);
        row.seed = derive_seed(seed, k);
        if (simulate) {
            CtmcParams p = base;
            if (sweep[k] > 0.0) {
                p.lambda_eu = sweep[k];
            } else {
                p.p_miss = 0.0;
            }
            row.simulated = simulate_ctmc(p, horizon, row.seed);
        }
    });
    return rows;
}

// ---- fig5 -------------------------------------------------------------------

struct Fig5Row {
    double pf_target = 0.0;
    int attacker_location_id = 0;
    std::size_t n_samples = 0;
    double detection_probability = 0.0;
};

inline const std::vector<std::string>& fig5_keys() {
    static const std::vector<std::string> keys = {
        "preset.name",          "preset.version",          "radio.ref_power_gain", "radio.ref_distance",
        "radio.path_loss_exponent", "radio.shadowing_sigma_db", "radio.noise_power",  "pu.position",
        "pu.tx_power",          "attacker.*.position",     "attacker.*.tx_power",  "monitor.*.position",
        "detection.alpha0",     "detection.tail_split",    "sweep.pf_target",      "sweep.n_samples",
        "run.seed",             "manifest.experiment",     "manifest.seed",        "manifest.replications",
        "manifest.tool_version",
    };
    return keys;
}

/// Analytic detection probability of each power-fixed attacker, averaged over
/// the monitoring SUs, each calibrated against its own view of the PU.
inline std::vector<Fig5Row> run_fig5(const KeyValueConfig& cfg) {
    cfg.require_known(fig5_keys());
    const Propagation prop = propagation_from(cfg);
    const SourceSpec pu{position_from(cfg, "pu.position"), cfg.get_double("pu.tx_power", 1.0),
                        SourceId::primary_user()};
    std::vector<SourceSpec> attackers;
    for (int idx : cfg.indices("attacker")) {
        const std::string k = "attacker." + std::to_string(idx) + ".";
        attackers.push_back({position_from(cfg, k + "position"), cfg.get_double(k + "tx_power", 1.0),
                             SourceId::attacker(int(attackers.size()) + 1)});
    }
    if (attackers.empty()) throw ConfigError("fig5 needs at least one attacker.N.position", "attacker");
    std::vector<Position> monitors;
    for (int idx : cfg.indices("monitor")) {
        monitors.push_back(position_from(cfg, "monitor." + std::to_string(idx) + ".position"));
    }
    if (monitors.empty()) throw ConfigError("fig5 needs at least one monitor.N.position", "monitor");
    const double alpha0 = cfg.get_double("detection.alpha0", 0.05);
    const TailSplit split = tail_split_from(cfg, TailSplit::EqualOrUpper);
    const auto pfs = cfg.get_doubles("sweep.pf_target");
    const auto ns = cfg.get_ints("sweep.n_samples");

    std::vector<Fig5Row> rows;
    for (double pf : pfs) {
        for (std::size_t a = 0; a < attackers.size(); ++a) {
            for (long long n : ns) {
                if (n < 1) throw ConfigError("sweep.n_samples values must be >= 1", "sweep.n_samples");
                double sum = 0.0;
                for (const auto& m : monitors) {
                    const auto ns_ = std::size_t(n);
                    Thresholds thr = [&] {
                        try {
                            return calibrate_thresholds(energy_stats(prop, std::nullopt, m, ns_),
                                                        energy_stats(prop, pu, m, ns_), alpha0, pf, split);
                        } catch (const std::invalid_argument& e) {
                            throw ConfigError(e.what(), "sweep.pf_target");
                        } catch (const OrderingViolation& e) {
                            throw ConfigError(e.what(), "detection.tail_split");
                        }
                    }();
                    sum += attack_flag_probability(energy_stats(prop, attackers[a], m, ns_), thr);
                }
                rows.push_back({pf, int(a) + 1, std::size_t(n), sum / double(monitors.size())});
            }
        }
    }
    return rows;
}

// ---- fig6 and custom ----------------------------------------------------------

struct Fig6Cell {
    double lambda_eu = 0.0;
    std::optional<double> p_d;  // empty under full detection
    int guard_channels = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<Metrics> replications;

    Interval dropping() const {
        std::vector<double> xs;
        for (const auto& m : replications) xs.push_back(m.handoff_dropping_rate());
        return mean_ci95(xs);
    }
    Interval blocking() const {
        std::vector<double> xs;
        for (const auto& m : replications) xs.push_back(m.new_call_blocking_rate());
        return mean_ci95(xs);
    }
    Metrics pooled() const {
        Metrics out;
        for (const auto& m : replications) out += m;
        return out;
    }
};

inline std::vector<std::string> fig6_extra_keys() {
    return {"preset.name",    "preset.version",        "sweep.lambda_eu", "sweep.p_d",
            "sweep.guard_channels", "report.guard_channels", "manifest.experiment", "manifest.seed",
            "manifest.replications", "manifest.tool_version"};
}

/// Grid lambda_eu x p_d x g. Replication r of a (lambda_eu, p_d) pair uses
/// the same seed for every g, so guard counts are compared on common random
/// numbers.
inline std::vector<Fig6Cell> run_fig6(const KeyValueConfig& cfg, std::uint64_t seed, int replications,
                                      unsigned threads = 0) {
    const Scenario base = scenario_from_config(cfg, fig6_extra_keys());
    if (base.attackers.empty()) throw ConfigError("fig6 needs at least one attacker", "attacker");
    const auto lambdas = cfg.get_doubles("sweep.lambda_eu");
    const auto guards = cfg.get_ints("sweep.guard_channels");
    const bool abstract = std::holds_alternative<AbstractDetection>(base.detection);
    std::vector<std::optional<double>> pds;
    if (abstract) {
        for (double p : cfg.get_doubles("sweep.p_d")) pds.push_back(p);
    } else {
        if (cfg.has("sweep.p_d")) throw ConfigError("sweep.p_d applies to abstract detection only", "sweep.p_d");
        pds.push_back(std::nullopt);
    }

    std::vector<Fig6Cell> cells;
    std::vector<Scenario> scenarios;
    std::uint64_t pair_index = 0;
    for (double l : lambdas) {
        for (const auto& pd : pds) {
            for (long long g : guards) {
                Scenario s = base;
                for (auto& a : s.attackers) a.arrival_rate = l;
                s.guard_count = int(g);
                if (pd) std::get<AbstractDetection>(s.detection).p_d = *pd;
                s.validate();
                Fig6Cell cell{l, pd, int(g), {}, std::vector<Metrics>(std::size_t(replications))};
                for (int r = 0; r < replications; ++r) {
                    cell.seeds.push_back(derive_seed(derive_seed(seed, pair_index), std::uint64_t(r)));
                }
                cells.push_back(std::move(cell));
                scenarios.push_back(std::move(s));
            }
            ++pair_index;
        }
    }

    const std::size_t reps = std::size_t(replications);
    parallel_for(cells.size() * reps, threads, [&](std::size_t k) {
        const std::size_t c = k / reps, r = k % reps;
        Scenario s = scenarios[c];
        s.seed = cells[c].seeds[r];
        cells[c].replications[r] = run(s);
    });
    return cells;
}

struct CustomRun {
    Scenario scenario;
    std::vector<std::uint64_t> seeds;
    std::vector<Metrics> replications;
};

inline std::vector<std::string> custom_extra_keys() {
    return {"preset.name", "preset.version", "manifest.experiment", "manifest.seed", "manifest.replications",
            "manifest.tool_version"};
}

inline CustomRun run_custom(const KeyValueConfig& cfg, std::uint64_t seed, int replications, unsigned threads = 0) {
    CustomRun out{scenario_from_config(cfg, custom_extra_keys()), {}, std::vector<Metrics>(std::size_t(replications))};
    for (int r = 0; r < replications; ++r) out.seeds.push_back(derive_seed(seed, std::uint64_t(r)));
    parallel_for(out.replications.size(), threads, [&](std::size_t r) {
        Scenario s = out.scenario;
        s.seed = out.seeds[r];
        out.replications[r] = run(s);
    });
    return out;
}

// ---- output -------------------------------------------------------------------

/// Files written by one run; removed again unless commit() is reached.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;
    ~OutputSet() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& p : written_) std::filesystem::remove(p, ec);
    }

    void write(const std::string& name, const std::string& content) {
        std::filesystem::create_directories(dir_);
        const auto path = dir_ / name;
        std::ofstream os(path, std::ios::binary);
        if (!os) throw Error("cannot write '" + path.string() + "'");
        written_.push_back(path);
        os << content;
        if (!os) throw Error("write failed for '" + path.string() + "'");
    }

    void commit() { committed_ = true; }
    const std::vector<std::filesystem::path>& files() const { return written_; }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> written_;
    bool committed_ = false;
};

inline std::string metrics_header() {
    return "new_call_arrivals,new_call_admitted,new_call_blocked,handoff_requests,handoff_dropped,"
           "attacks_launched,attacks_detected,attacks_succeeded,attacks_aborted,outage_episodes,"
           "outage_fraction,mean_recovery_time,bandwidth_waste,blocking_rate,dropping_rate,"
           "drops_per_handoff_request";
}

inline std::string metrics_fields(const Metrics& m) {
    std::ostringstream os;
    os << m.new_call_arrivals << ',' << m.new_call_admitted << ',' << m.new_call_blocked << ',' << m.handoff_requests
       << ',' << m.handoff_dropped << ',' << m.attacks_launched << ',' << m.attacks_detected << ','
       << m.attacks_succeeded << ',' << m.attacks_aborted << ',' << m.outage_episodes << ','
       << fmt(m.outage_fraction()) << ',' << fmt(m.mean_recovery_time()) << ',' << fmt(m.bandwidth_waste) << ','
       << fmt(m.new_call_blocking_rate()) << ',' << fmt(m.handoff_dropping_rate()) << ','
       << fmt(m.drops_per_handoff_request());
    return os.str();
}

inline std::string fig3_csv(const std::vector<Fig3Row>& rows) {
    std::vector<OutagePoint> pts;
    for (const auto& r : rows) pts.push_back(r.analytic);
    std::ostringstream os;
    write_outage_csv(os, pts);
    return os.str();
}

inline std::string fig3_simulated_csv(const std::vector<Fig3Row>& rows) {
    std::ostringstream os;
    os << "lambda_eu,mu_eu,outage_prob,recovery_time,outage_episodes,seed\n";
    for (const auto& r : rows) {
        if (!r.simulated) continue;
        const auto& s = *r.simulated;
        os << fmt(r.analytic.lambda_eu) << ',' << fmt(r.analytic.mu_eu) << ',' << fmt(s.outage_probability) << ','
           << (s.outage_episodes ? fmt(s.mean_recovery_time) : std::string("nan")) << ',' << s.outage_episodes << ','
           << r.seed << '\n';
    }
    return os.str();
}

inline std::string fig5_csv(const std::vector<Fig5Row>& rows) {
    std::ostringstream os;
    os << "pf_target,attacker_location_id,n_samples,detection_probability\n";
    for (const auto& r : rows) {
        os << fmt(r.pf_target) << ',' << r.attacker_location_id << ',' << r.n_samples << ','
           << fmt(r.detection_probability) << '\n';
    }
    return os.str();
}

inline std::string fig6_runs_csv(const std::vector<Fig6Cell>& cells) {
    std::ostringstream os;
    os << "lambda_eu,p_d,guard_channels,replication,seed," << metrics_header() << '\n';
    for (const auto& c : cells) {
        const std::string head =
            fmt(c.lambda_eu) + ',' + (c.p_d ? fmt(*c.p_d) : std::string("nan")) + ',' + std::to_string(c.guard_channels);
        for (std::size_t r = 0; r < c.replications.size(); ++r) {
            os << head << ',' << r << ',' << c.seeds[r] << ',' << metrics_fields(c.replications[r]) << '\n';
        }
        os << head << ",aggregate,," << metrics_fields(c.pooled()) << '\n';
    }
    return os.str();
}

/// Per-cell means over replications with 95% half-widths.
inline std::string fig6_summary_csv(const std::vector<Fig6Cell>& cells) {
    std::ostringstream os;
    os << "lambda_eu,p_d,guard_channels,replications,dropping_rate,dropping_ci95,blocking_rate,blocking_ci95\n";
    for (const auto& c : cells) {
        const auto d = c.dropping();
        const auto b = c.blocking();
        os << fmt(c.lambda_eu) << ',' << (c.p_d ? fmt(*c.p_d) : std::string("nan")) << ',' << c.guard_channels << ','
           << c.replications.size() << ',' << fmt(d.mean) << ',' << fmt(d.half_width) << ',' << fmt(b.mean) << ','
           << fmt(b.half_width) << '\n';
    }
    return os.str();
}

inline std::string custom_csv(const CustomRun& run) {
    std::ostringstream os;
    os << "replication,seed," << metrics_header() << '\n';
    Metrics pooled;
    for (std::size_t r = 0; r < run.replications.size(); ++r) {
        os << r << ',' << run.seeds[r] << ',' << metrics_fields(run.replications[r]) << '\n';
        pooled += run.replications[r];
    }
    os << "aggregate,," << metrics_fields(pooled) << '\n';
    return os.str();
}

/// Effective inputs of a run followed by the config text it was given.
inline std::string manifest_text(Experiment e, const KeyValueConfig& cfg, std::uint64_t seed, int replications,
                                 const std::vector<std::string>& files) {
    std::ostringstream os;
    os << "# pueguard run manifest; rerun with: pueguard " << to_string(e) << " --config manifest.cfg\n";
    os << "manifest.experiment = " << to_string(e) << '\n';
    os << "manifest.tool_version = " << kToolVersion << '\n';
    os << "manifest.seed = " << seed << '\n';
    os << "manifest.replications = " << replications << '\n';
    os << "# outputs:";
    for (const auto& f : files) os << ' ' << f;
    os << "\n\n";
    // Previous manifest.* lines would duplicate the ones above.
    std::istringstream in(cfg.text());
    std::string line;
    bool leading = true;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t");
        if (first != std::string::npos && line.compare(first, 9, "manifest.") == 0) continue;
        if (line.rfind("# pueguard run manifest", 0) == 0 || line.rfind("# outputs:", 0) == 0) continue;
        if (leading && first == std::string::npos) continue;
        leading = false;
        os << line << '\n';
    }
    return os.str();
}

// ---- plots --------------------------------------------------------------------

struct PlotStyle {
    std::string terminal = "pngcairo size 900,600";
    std::string image_extension = "png";
};

inline std::vector<std::string> plot_inputs(Experiment e) {
    switch (e) {
        case Experiment::Fig3: return {"fig3_outage.csv"};
        case Experiment::Fig5: return {"fig5_detection.csv"};
        case Experiment::Fig6: return {"fig6_summary.csv"};
        case Experiment::Custom: return {"custom_runs.csv"};
    }
    return {};
}

/// Gnuplot script for the CSVs of experiment `e` found in `dir`. Throws when
/// an input CSV is missing.
inline std::string plot_script(Experiment e, const std::filesystem::path& dir, const PlotStyle& style = {},
                               const std::vector<double>& series = {}) {
    for (const auto& f : plot_inputs(e)) {
        if (!std::filesystem::exists(dir / f)) throw Error("plot input '" + (dir / f).string() + "' does not exist");
    }
    std::ostringstream os;
    const std::string name = to_string(e);
    os << "set terminal " << style.terminal << "\n";
    os << "set output '" << name << "." << style.image_extension << "'\n";
    os << "set datafile separator ','\n";
    os << "set grid\n";
    switch (e) {
        case Experiment::Fig3:
            os << "set multiplot layout 2,1\n"
               << "set logscale y\n"
               << "set xlabel 'attack arrival rate lambda_eu'\n"
               << "set ylabel 'outage probability'\n"
               << "plot 'fig3_outage.csv' every ::1 using 1:3 with linespoints title 'analytic'";
            if (std::filesystem::exists(dir / "fig3_simulated.csv")) {
                os << ", \\\n     'fig3_simulated.csv' every ::1 using 1:($3 > 0 ? $3 : 1/0) with points pt 6 "
                      "title 'simulated'";
            }
            os << "\nunset logscale y\n"
               << "set ylabel 'recovery time'\n"
               << "plot 'fig3_outage.csv' every ::1 using 1:4 with linespoints title 'analytic'";
            if (std::filesystem::exists(dir / "fig3_simulated.csv")) {
                os << ", \\\n     'fig3_simulated.csv' every ::1 using 1:4 with points pt 6 title 'simulated'";
            }
            os << "\nunset multiplot\n";
            break;
        case Experiment::Fig5:
            os << "set logscale x\n"
               << "set xlabel 'target false alarm probability'\n"
               << "set ylabel 'detection probability'\n"
               << "set key bottom right\n"
               << "plot for [loc=1:3] for [n in '12 24'] 'fig5_detection.csv' every ::1 \\\n"
               << "     using 1:(($2 == loc && $3 == n+0) ? $4 : 1/0) with linespoints \\\n"
               << "     title sprintf('L%d, N_s=%s', loc, n)\n";
            break;
        case Experiment::Fig6: {
            os << "set multiplot layout 1,2\n"
               << "set xlabel 'guard channels g'\n"
               << "set logscale y\n"
               << "set ylabel 'handoff dropping rate'\n";
            auto per_lambda = [&](int column) {
                os << "plot ";
                for (std::size_t k = 0; k < series.size(); ++k) {
                    if (k) os << ", \\\n     ";
                    os << "'fig6_summary.csv' every ::1 using 3:(($1 == " << fmt(series[k]) << " && $" << column
                       << " > 0) ? $" << column << " : 1/0):" << column + 1
                       << " with yerrorlines title 'lambda_eu=" << fmt(series[k]) << "'";
                }
                if (series.empty()) os << "'fig6_summary.csv' every ::1 using 3:" << column << " with points notitle";
                os << '\n';
            };
            per_lambda(5);
            os << "unset logscale y\nset ylabel 'new call blocking rate'\n";
            per_lambda(7);
            os << "unset multiplot\n";
            break;
        }
        case Experiment::Custom:
            os << "set xlabel 'replication'\n"
               << "set ylabel 'rate'\n"
               << "plot 'custom_runs.csv' every ::1 using 1:($1 >= 0 ? $16 : 1/0) with linespoints title 'blocking', \\\n"
               << "     'custom_runs.csv' every ::1 using 1:($1 >= 0 ? $17 : 1/0) with linespoints title 'dropping'\n";
            break;
    }
    return os.str();
}

// ---- driver -------------------------------------------------------------------

struct ExperimentReport {
    std::vector<std::string> files;
    std::uint64_t seed = 0;
    int replications = 1;
};

inline KeyValueConfig experiment_config(Experiment e, const ExperimentOptions& opt) {
    if (opt.config_path) return KeyValueConfig::load(*opt.config_path);
    if (e == Experiment::Custom) throw ConfigError("custom runs need --config <scenario file>");
    return shipped_preset(to_string(e));
}

/// Runs one experiment and writes its outputs into opt.out_dir. Nothing is
/// left behind when it throws.
inline ExperimentReport run_experiment(Experiment e, const ExperimentOptions& opt) {
    const KeyValueConfig cfg = experiment_config(e, opt);
    if (cfg.has("manifest.experiment") && cfg.get_string("manifest.experiment") != to_string(e)) {
        throw ConfigError("manifest was written by '" + cfg.get_string("manifest.experiment") + "', not '" +
                              to_string(e) + "'",
                          "manifest.experiment");
    }
    ExperimentReport report;
    report.seed = resolve_seed(cfg, opt);
    report.replications = resolve_replications(cfg, opt);

    OutputSet out(opt.out_dir);
    std::vector<std::pair<std::string, std::string>> files;
    std::vector<double> series;
    switch (e) {
        case Experiment::Fig3: {
            const auto rows = run_fig3(cfg, report.seed, opt.threads);
            files.emplace_back("fig3_outage.csv", fig3_csv(rows));
            if (!rows.empty() && rows.front().simulated) files.emplace_back("fig3_simulated.csv", fig3_simulated_csv(rows));
            break;
        }
        case Experiment::Fig5:
            files.emplace_back("fig5_detection.csv", fig5_csv(run_fig5(cfg)));
            break;
        case Experiment::Fig6: {
            const auto cells = run_fig6(cfg, report.seed, report.replications, opt.threads);
            files.emplace_back("fig6_runs.csv", fig6_runs_csv(cells));
            files.emplace_back("fig6_summary.csv", fig6_summary_csv(cells));
            series = cfg.get_doubles("sweep.lambda_eu");
            break;
        }
        case Experiment::Custom:
            files.emplace_back("custom_runs.csv", custom_csv(run_custom(cfg, report.seed, report.replications, opt.threads)));
            break;
    }
    std::vector<std::string> names;
    for (const auto& f : files) names.push_back(f.first);
    names.push_back("manifest.cfg");
    if (opt.emit_plots) names.push_back(std::string(to_string(e)) + ".gp");

    for (const auto& [name, content] : files) out.write(name, content);
    out.write("manifest.cfg", manifest_text(e, cfg, report.seed, report.replications, names));
    if (opt.emit_plots) out.write(std::string(to_string(e)) + ".gp", plot_script(e, opt.out_dir, {}, series));
    out.commit();
    report.files = std::move(names);
    return report;
}

}  // namespace pueguard
