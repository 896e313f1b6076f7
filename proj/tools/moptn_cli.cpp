// moptn: simulate benchmark systems, infer delay-resolved causal networks
// from ordinal-pattern co-occurrence entropies, sweep parameters, and run the
// windowed time-varying analysis.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include <moptn/io.hpp>
#include <moptn/moptn.hpp>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

struct InferOptions {
    std::size_t M = 3;
    std::size_t d = 100;
    std::string delays = "1:10";
    std::string delays_ms;
    double lambda = 0.995;
    double delta = 0.15;
    std::size_t r_max = 2;
    std::string fallback = "merged";
    bool all_delays_per_channel = false;
};

// Sweeps take lambda and delta as grids, so they skip the scalar forms.
void add_inference_options(CLI::App* app, InferOptions& o, bool scalar_thresholds = true)
{
    app->add_option("--M", o.M, "embedding dimension")->capture_default_str();
    app->add_option("--d", o.d, "embedding delay (samples)")->capture_default_str();
    app->add_option("--delays", o.delays, "delay grid in samples: a:b[:step] or a,b,c")->capture_default_str();
    app->add_option("--delays-ms", o.delays_ms, "delay grid in ms (needs --sample-rate); overrides --delays");
    if (scalar_thresholds) {
        app->add_option("--lambda", o.lambda, "CE threshold fraction of H_max")->capture_default_str();
        app->add_option("--delta", o.delta, "pruning threshold on epsilon (bits)")->capture_default_str();
    }
    app->add_option("--r-max", o.r_max, "maximum conditioning-set size")->capture_default_str();
    app->add_option("--fallback", o.fallback, "conditioning-set cascade: merged or literal")
        ->check(CLI::IsMember({"merged", "literal"}))
        ->capture_default_str();
    app->add_flag("--all-delays-per-channel", o.all_delays_per_channel,
                  "let one channel enter the conditioning set at several delays");
}

std::vector<double> parse_grid(const std::string& text, const char* what)
{
    std::vector<double> out;
    auto number = [&](const std::string& s) {
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw moptn::InvalidParameter(std::string("cannot parse ") + what + " value '" + s + "'");
        }
    };
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::string cur;
        for (char ch : text) {
            if (ch == ':') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        parts.push_back(cur);
        if (parts.size() < 2 || parts.size() > 3)
            throw moptn::InvalidParameter(std::string(what) + " range must be a:b or a:b:step");
        const double a = number(parts[0]), b = number(parts[1]), step = parts.size() == 3 ? number(parts[2]) : 1.0;
        if (!(step > 0) || b < a) throw moptn::InvalidParameter(std::string(what) + " range needs a <= b and step > 0");
        const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
        for (std::size_t i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
        return out;
    }
    std::string cur;
    for (char ch : text + ",") {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(number(cur));
            cur.clear();
        } else if (ch != ' ') {
            cur += ch;
        }
    }
    if (out.empty()) throw moptn::InvalidParameter(std::string(what) + " list is empty");
    return out;
}

std::size_t to_samples(double v, const char* what)
{
    const double r = std::round(v);
    if (v < 0 || std::abs(v - r) > 1e-9 * std::max(1.0, v))
        throw moptn::InvalidParameter(std::string(what) + " value " + std::to_string(v) +
                                      " is not a non-negative whole number of samples");
    return static_cast<std::size_t>(r);
}

moptn::InferenceParams make_params(const InferOptions& o, std::optional<double> sample_rate, unsigned threads)
{
    moptn::InferenceParams p;
    p.embedding = {o.M, o.d};
    p.lambda = o.lambda;
    p.delta = o.delta;
    p.conditioning.r_max = o.r_max;
    p.conditioning.fallback = o.fallback == "literal" ? moptn::Fallback::literal : moptn::Fallback::merged;
    p.conditioning.one_delay_per_channel = !o.all_delays_per_channel;
    p.threads = threads;
    p.delays.delays.clear();
    if (!o.delays_ms.empty()) {
        if (!sample_rate) throw moptn::InvalidParameter("--delays-ms needs --sample-rate");
        for (double ms : parse_grid(o.delays_ms, "--delays-ms"))
            p.delays.delays.push_back(to_samples(ms * *sample_rate / 1000.0, "--delays-ms"));
    } else {
        for (double s : parse_grid(o.delays, "--delays")) p.delays.delays.push_back(to_samples(s, "--delays"));
    }
    p.validate();
    return p;
}

void ensure_parent(const std::string& path)
{
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

std::ofstream open_out(const std::string& path)
{
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw moptn::FormatError("cannot open '" + path + "' for writing");
    return out;
}

void write_json(const std::string& path, const json& j)
{
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

std::string stem_path(const std::string& path)
{
    fs::path p(path);
    return (p.parent_path() / p.stem()).string();
}

// Everything needed to rerun: the resolved options of the subcommand and the
// seed. Written next to the primary output.
void write_manifest(const std::string& output, const CLI::App& app, const CLI::App& sub,
                    std::optional<std::uint64_t> seed, const std::vector<std::string>& argv)
{
    json options = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt->get_name() == "--help") continue;
        auto res = opt->reduced_results();
        std::string name = opt->get_name();
        if (res.empty()) {
            const std::string def = opt->get_default_str();
            options[name] = def.empty() ? json(nullptr) : json(def);
        } else if (opt->get_type_size() == 0) {
            options[name] = opt->count() > 0;
        } else {
            options[name] = res.size() == 1 ? json(res.front()) : json(res);
        }
    }
    json m{{"tool", "moptn"},
           {"version", kVersion},
           {"subcommand", sub.get_name()},
           {"argv", argv},
           {"options", options},
           {"config_file", app.get_config_ptr() && app.get_config_ptr()->count() ? json(app.get_config_ptr()->as<std::string>()) : json(nullptr)}};
    if (seed) m["seed"] = *seed;
    write_json(output + ".manifest.json", m);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Delay-resolved causal network inference from multivariate ordinal pattern transition networks"};
    app.set_config("--config", "", "read options from an INI/TOML file (flags take precedence)");
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand
    unsigned threads = 0;
    app.add_option("--threads", threads, "worker threads (default: $MOPTN_THREADS, else all cores)");

    // simulate ---------------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "generate a benchmark system and its ground truth");
    std::string sim_system = "ar";
    std::size_t sim_T = 10000;
    std::uint64_t sim_seed = 1;
    std::string sim_out;
    std::string sim_truth;
    double sim_c = 0.6, sim_dt = 0.001, sim_noise = 0.0, sim_K = 5.0;
    std::size_t sim_transient = 100000;
    std::string sim_nmm_config;
    sim->add_option("--system", sim_system, "ar, lorenz or nmm")
        ->check(CLI::IsMember({"ar", "lorenz", "nmm"}))
        ->capture_default_str();
    sim->add_option("--T", sim_T, "samples to record")->capture_default_str();
    sim->add_option("--seed", sim_seed, "random seed")->capture_default_str();
    sim->add_option("--out", sim_out, "series CSV (default: <system>.csv)");
    sim->add_option("--truth", sim_truth, "ground-truth JSON (default: <out>.truth.json)");
    sim->add_option("--c", sim_c, "Lorenz coupling strength")->capture_default_str();
    sim->add_option("--dt", sim_dt, "Lorenz integration step")->capture_default_str();
    sim->add_option("--transient", sim_transient, "Lorenz steps discarded before recording")->capture_default_str();
    sim->add_option("--nmm-config", sim_nmm_config, "neural-mass configuration JSON");
    sim->add_option("--K", sim_K, "neural-mass edge density in percent of N^2")->capture_default_str();
    sim->add_option("--noise", sim_noise, "observation noise level (multiple of each channel's std)")
        ->capture_default_str();

    // infer ------------------------------------------------------------------
    auto* inf = app.add_subcommand("infer", "infer a causal network from a series CSV");
    std::string inf_in, inf_out;
    std::optional<double> inf_fs;
    InferOptions inf_opt;
    inf->add_option("--input", inf_in, "series CSV")->required();
    inf->add_option("--out", inf_out, "network JSON (default: <input>.network.json)");
    inf->add_option("--sample-rate", inf_fs, "samples per second (enables ms delays)");
    add_inference_options(inf, inf_opt);

    // sweep ------------------------------------------------------------------
    auto* swp = app.add_subcommand("sweep", "score the pipeline over a parameter grid");
    std::string swp_system = "ar", swp_out = "sweep.csv", swp_json;
    std::string swp_delta = "0.05,0.10,0.15,0.20,0.25", swp_lambda = "0.995", swp_T = "10000", swp_NL = "0",
                swp_K = "5";
    std::size_t swp_R = 10;
    std::uint64_t swp_seed = 1;
    double swp_c = 0.6;
    std::string swp_nmm_config;
    std::string swp_scoring = "auto";
    InferOptions swp_opt;
    swp->add_option("--system", swp_system, "ar, lorenz or nmm")
        ->check(CLI::IsMember({"ar", "lorenz", "nmm"}))
        ->capture_default_str();
    swp->add_option("--delta", swp_delta, "delta grid")->capture_default_str();
    swp->add_option("--lambda", swp_lambda, "lambda grid")->capture_default_str();
    swp->add_option("--T", swp_T, "series-length grid")->capture_default_str();
    swp->add_option("--NL", swp_NL, "observation-noise grid")->capture_default_str();
    swp->add_option("--K", swp_K, "neural-mass density grid (percent)")->capture_default_str();
    swp->add_option("--R", swp_R, "realizations per cell")->capture_default_str();
    swp->add_option("--seed", swp_seed, "base seed")->capture_default_str();
    swp->add_option("--c", swp_c, "Lorenz coupling strength")->capture_default_str();
    swp->add_option("--nmm-config", swp_nmm_config, "neural-mass configuration JSON");
    swp->add_option("--scoring", swp_scoring, "auto, delay or pair")
        ->check(CLI::IsMember({"auto", "delay", "pair"}))
        ->capture_default_str();
    swp->add_option("--out", swp_out, "long-format CSV")->capture_default_str();
    swp->add_option("--json", swp_json, "also write per-cell JSON");
    add_inference_options(swp, swp_opt, false);
    std::optional<double> swp_fs;
    swp->add_option("--sample-rate", swp_fs, "samples per second for --delays-ms (nmm: taken from config)");

    // windowed ---------------------------------------------------------------
    auto* win = app.add_subcommand("windowed", "time-varying coupling over overlapping windows");
    std::string win_in, win_out;
    double win_fs = 0, win_len = 4.0, win_overlap = 0.5;
    InferOptions win_opt;
    win->add_option("--input", win_in, "series CSV")->required();
    win->add_option("--sample-rate", win_fs, "samples per second")->required();
    win->add_option("--window", win_len, "window length in seconds")->capture_default_str();
    win->add_option("--overlap", win_overlap, "window overlap fraction")->capture_default_str();
    win->add_option("--out", win_out, "long-format CSV (default: <input>.windowed.csv)");
    add_inference_options(win, win_opt);

    CLI11_PARSE(app, argc, argv);
    const std::vector<std::string> args(argv, argv + argc);
    threads = moptn::resolve_threads(threads);

    try {
        if (*sim) {
            if (sim_out.empty()) sim_out = sim_system + ".csv";
            if (sim_truth.empty()) sim_truth = stem_path(sim_out) + ".truth.json";
            moptn::Simulation s;
            if (sim_system == "ar") {
                s = moptn::simulate_ar(sim_T, sim_seed);
            } else if (sim_system == "lorenz") {
                moptn::LorenzConfig lc;
                lc.c = sim_c;
                lc.dt = sim_dt;
                lc.transient = sim_transient;
                s = moptn::simulate_lorenz_chain(sim_T, lc, sim_seed);
            } else {
                if (sim_nmm_config.empty()) throw moptn::ParameterUnset("--system nmm needs --nmm-config");
                s = moptn::simulate_nmm(moptn::io::read_nmm_config(sim_nmm_config), sim_K, sim_T, sim_seed);
            }
            if (sim_noise > 0)
                s.series = moptn::add_observation_noise(s.series, sim_noise, moptn::splitmix64(sim_seed ^ 0x6e6f697365ULL));
            {
                auto out = open_out(sim_out);
                moptn::io::write_series_csv(out, s.series);
            }
            write_json(sim_truth, moptn::io::to_json(s.truth, s.series.channel_names, s.series.sample_rate));
            write_manifest(sim_out, app, *sim, sim_seed, args);
            std::cout << "seed " << sim_seed << '\n';
        } else if (*inf) {
            if (inf_out.empty()) inf_out = stem_path(inf_in) + ".network.json";
            auto series = moptn::io::read_series_csv(inf_in, inf_fs);
            auto p = make_params(inf_opt, inf_fs, threads);
            auto net = moptn::infer_network(series, p);
            write_json(inf_out, moptn::io::to_json(net, series.channel_names, inf_fs));
            write_manifest(inf_out, app, *inf, std::nullopt, args);
            std::cout << net.edges.size() << " edges\n";
        } else if (*swp) {
            moptn::SweepSpec spec;
            spec.system = moptn::system_from_string(swp_system);
            spec.R = swp_R;
            spec.seed = swp_seed;
            spec.threads = threads;
            spec.lorenz.c = swp_c;
            std::optional<double> fs = swp_fs;
            if (spec.system == moptn::System::nmm) {
                if (swp_nmm_config.empty()) throw moptn::ParameterUnset("--system nmm needs --nmm-config");
                spec.nmm = moptn::io::read_nmm_config(swp_nmm_config);
                fs = spec.nmm.sample_rate;
            }
            spec.inference = make_params(swp_opt, fs, 1);
            if (swp_scoring != "auto") spec.delay_sensitive = swp_scoring == "delay";
            spec.grid.delta = parse_grid(swp_delta, "--delta");
            spec.grid.lambda = parse_grid(swp_lambda, "--lambda");
            spec.grid.T.clear();
            for (double t : parse_grid(swp_T, "--T")) spec.grid.T.push_back(to_samples(t, "--T"));
            spec.grid.NL = parse_grid(swp_NL, "--NL");
            spec.grid.K = parse_grid(swp_K, "--K");
            auto result = moptn::sweep(spec);
            {
                auto out = open_out(swp_out);
                moptn::io::write_sweep_csv(out, result);
            }
            if (!swp_json.empty()) write_json(swp_json, moptn::io::to_json(result));
            write_manifest(swp_out, app, *swp, swp_seed, args);
            std::size_t failed = 0;
            for (const auto& c : result.cells) failed += c.errors.size();
            std::cout << result.cells.size() << " cells";
            if (failed) std::cout << ", " << failed << " failed realizations (see JSON)";
            std::cout << '\n';
            if (failed) {
                for (const auto& c : result.cells)
                    for (const auto& e : c.errors) std::cerr << "error: " << e << '\n';
                return 1;
            }
        } else if (*win) {
            if (win_out.empty()) win_out = stem_path(win_in) + ".windowed.csv";
            auto series = moptn::io::read_series_csv(win_in, win_fs);
            auto p = make_params(win_opt, win_fs, threads);
            auto w = moptn::windowed_analysis(series, win_len, win_overlap, p);
            {
                auto out = open_out(win_out);
                moptn::io::write_windowed_csv(out, w, series.channel_names, win_fs);
            }
            write_manifest(win_out, app, *win, std::nullopt, args);
            std::cout << w.midpoints_s.size() << " windows\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
