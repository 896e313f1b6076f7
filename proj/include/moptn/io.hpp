#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "causal.hpp"
#include "eval.hpp"
#include "simulate.hpp"

namespace moptn::io {

using nlohmann::json;

// 17 significant digits: enough for an exact double round trip.
inline std::string format_real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

// Header line of channel names, then one row of numbers per sample. Row
// numbers in errors count file lines from 1 (the header is line 1).
inline MultivariateSeries read_series_csv(std::istream& in, std::optional<double> sample_rate = std::nullopt)
{
    std::string line;
    if (!std::getline(in, line)) throw FormatError("CSV is empty: missing header line");
    std::vector<std::string> names;
    for (auto f : detail::split_commas(line)) names.emplace_back(detail::trim(f));
    const std::size_t N = names.size();
    std::vector<std::vector<double>> cols(N);
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_commas(line);
        if (fields.size() != N)
            throw FormatError("CSV row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                              " fields, expected " + std::to_string(N));
        for (std::size_t c = 0; c < N; ++c) {
            auto f = detail::trim(fields[c]);
            double v = 0;
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size() || f.empty())
                throw FormatError("CSV row " + std::to_string(row) + ", column " + std::to_string(c + 1) + " ('" +
                                  names[c] + "'): not a number: '" + std::string(f) + "'");
            if (!std::isfinite(v))
                throw NonFiniteValue("CSV row " + std::to_string(row) + ", column " + std::to_string(c + 1) +
                                     ": non-finite value");
            cols[c].push_back(v);
        }
    }
    const std::size_t T = N ? cols[0].size() : 0;
    Matrix<double> m(T, N);
    for (std::size_t c = 0; c < N; ++c) std::copy(cols[c].begin(), cols[c].end(), m.col(c).begin());
    return MultivariateSeries(std::move(m), sample_rate, std::move(names));
}

inline MultivariateSeries read_series_csv(const std::string& path, std::optional<double> sample_rate = std::nullopt)
{
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "' for reading");
    return read_series_csv(in, sample_rate);
}

inline void write_series_csv(std::ostream& out, const MultivariateSeries& s)
{
    for (std::size_t n = 0; n < s.channels(); ++n) out << (n ? "," : "") << s.channel_names[n];
    out << '\n';
    for (std::size_t t = 0; t < s.length(); ++t) {
        for (std::size_t n = 0; n < s.channels(); ++n) out << (n ? "," : "") << format_real(s.data(t, n));
        out << '\n';
    }
}

inline json to_json(const GroundTruth& g, const std::vector<std::string>& names, std::optional<double> fs)
{
    json edges = json::array();
    for (const auto& e : g.edges) {
        json j{{"source", e.source}, {"target", e.target}, {"source_name", names.at(e.source)},
               {"target_name", names.at(e.target)}};
        if (e.delay) {
            j["delay_samples"] = *e.delay;
            if (fs) j["delay_ms"] = static_cast<double>(*e.delay) * 1000.0 / *fs;
        } else {
            j["delay_samples"] = nullptr;
        }
        edges.push_back(std::move(j));
    }
    return {{"description", g.description}, {"edges", edges}};
}

inline GroundTruth truth_from_json(const json& j)
{
    GroundTruth g;
    g.description = j.value("description", "");
    for (const auto& e : j.at("edges")) {
        TrueEdge t{e.at("source").get<std::size_t>(), e.at("target").get<std::size_t>(), std::nullopt};
        if (e.contains("delay_samples") && !e["delay_samples"].is_null()) t.delay = e["delay_samples"].get<std::size_t>();
        g.edges.push_back(t);
    }
    return g;
}

inline json to_json(const InferenceParams& p)
{
    return {{"M", p.embedding.M},
            {"d", p.embedding.d},
            {"delays_samples", p.delays.delays},
            {"lambda", p.lambda},
            {"delta", p.delta},
            {"r_max", p.conditioning.r_max},
            {"fallback", p.conditioning.fallback == Fallback::merged ? "merged" : "literal"},
            {"one_delay_per_channel", p.conditioning.one_delay_per_channel}};
}

inline json to_json(const CausalNetwork& net, const std::vector<std::string>& names, std::optional<double> fs)
{
    json edges = json::array();
    for (const auto& e : net.edges) {
        json j{{"source", e.source},
               {"target", e.target},
               {"source_name", names.at(e.source)},
               {"target_name", names.at(e.target)},
               {"delay_samples", e.delay},
               {"ce_bits", e.ce},
               {"strength_bits", e.strength},
               {"epsilon_bits", e.epsilon}};
        if (fs) j["delay_ms"] = static_cast<double>(e.delay) * 1000.0 / *fs;
        edges.push_back(std::move(j));
    }
    return {{"edges", edges}, {"params", to_json(net.params)}, {"h_max_bits", net.h_max}};
}

inline constexpr const char* kSweepColumns =
    "system,T,NL,lambda,delta,K,realization_count,tpr_mean,tpr_std,fpr_mean,fpr_std,f1_mean,f1_std";

inline void write_sweep_csv(std::ostream& out, const SweepResult& r)
{
    out << kSweepColumns << '\n';
    for (const auto& c : r.cells) {
        out << to_string(r.spec.system) << ',' << c.T << ',' << format_real(c.NL) << ',' << format_real(c.lambda)
            << ',' << format_real(c.delta) << ',' << format_real(c.K) << ',' << c.counts.size() << ','
            << format_optional(c.tpr.mean) << ',' << format_optional(c.tpr.std) << ','
            << format_optional(c.fpr.mean) << ',' << format_optional(c.fpr.std) << ','
            << format_optional(c.f1.mean) << ',' << format_optional(c.f1.std) << '\n';
    }
}

inline json to_json(const SweepResult& r)
{
    json cells = json::array();
    for (const auto& c : r.cells) {
        json counts = json::array();
        for (const auto& k : c.counts) counts.push_back({{"tp", k.tp}, {"fp", k.fp}, {"fn", k.fn}, {"tn", k.tn}});
        cells.push_back({{"T", c.T},
                         {"NL", c.NL},
                         {"lambda", c.lambda},
                         {"delta", c.delta},
                         {"K", c.K},
                         {"seeds", c.seeds},
                         {"counts", counts},
                         {"errors", c.errors},
                         {"tpr", {{"mean", optional_json(c.tpr.mean)}, {"std", optional_json(c.tpr.std)}}},
                         {"fpr", {{"mean", optional_json(c.fpr.mean)}, {"std", optional_json(c.fpr.std)}}},
                         {"f1", {{"mean", optional_json(c.f1.mean)}, {"std", optional_json(c.f1.std)}}}});
    }
    return {{"system", to_string(r.spec.system)},
            {"realizations", r.spec.R},
            {"seed", r.spec.seed},
            {"delay_sensitive", r.spec.scored_by_delay()},
            {"inference", to_json(r.spec.inference)},
            {"cells", cells}};
}

inline void write_windowed_csv(std::ostream& out, const WindowedCoupling& w, const std::vector<std::string>& names,
                               double sample_rate)
{
    out << "window_mid_s,source,target,delay_ms,strength_normalized\n";
    for (std::size_t k = 0; k < w.midpoints_s.size(); ++k)
        for (std::size_t t = 0; t < w.N; ++t)
            for (std::size_t s = 0; s < w.N; ++s) {
                if (s == t) continue;
                for (std::size_t j = 0; j < w.delays.size(); ++j)
                    out << format_real(w.midpoints_s[k]) << ',' << names.at(s) << ',' << names.at(t) << ','
                        << format_real(static_cast<double>(w.delays[j]) * 1000.0 / sample_rate) << ','
                        << format_real(w.at(k, t, s, j)) << '\n';
            }
}

// Neural-mass configuration file. Population parameters have no defaults:
// a missing key stays unset and simulate_nmm reports it.
inline NmmConfig nmm_config_from_json(const json& j)
{
    NmmConfig c;
    c.N = j.value("N", c.N);
    c.delay_ms = j.value("delay_ms", c.delay_ms);
    c.sample_rate = j.value("sample_rate", c.sample_rate);
    c.noise_mean = j.value("noise_mean", c.noise_mean);
    c.noise_variance = j.value("noise_variance", c.noise_variance);
    c.fast_noise_variance = j.value("fast_noise_variance", c.fast_noise_variance);
    c.coupling_weight = j.value("coupling_weight", c.coupling_weight);
    c.burn_in = j.value("burn_in_samples", c.burn_in);
    c.initial_state_scale = j.value("initial_state_scale", c.initial_state_scale);
    c.W = Matrix<double>(c.N, c.N, 0.0);
    if (j.contains("W")) {
        const auto& w = j.at("W");
        if (w.size() != c.N) throw FormatError("W must have N rows");
        for (std::size_t i = 0; i < c.N; ++i) {
            if (w[i].size() != c.N) throw FormatError("W row " + std::to_string(i) + " must have N entries");
            for (std::size_t k = 0; k < c.N; ++k) c.W(i, k) = w[i][k].get<double>();
        }
    }
    const json pop = j.value("population", json::object());
    auto get = [&](const char* key, std::optional<double>& dst) {
        if (pop.contains(key)) dst = pop.at(key).get<double>();
    };
    auto& p = c.population;
    get("G_e", p.G_e), get("G_s", p.G_s), get("G_f", p.G_f);
    get("h_e", p.h_e), get("h_s", p.h_s), get("h_f", p.h_f);
    get("e0", p.e0), get("r", p.r);
    get("C_pe", p.C_pe), get("C_ps", p.C_ps), get("C_pf", p.C_pf);
    get("C_ep", p.C_ep), get("C_sp", p.C_sp), get("C_fp", p.C_fp), get("C_fs", p.C_fs), get("C_ff", p.C_ff);
    return c;
}

// Optional "inference" block of a configuration file; delays given in ms
// are converted with the file's sample_rate.
inline InferenceParams inference_from_json(const json& j, InferenceParams p = {})
{
    if (!j.contains("inference")) return p;
    const auto& b = j.at("inference");
    p.embedding.M = b.value("M", p.embedding.M);
    p.embedding.d = b.value("d", p.embedding.d);
    p.lambda = b.value("lambda", p.lambda);
    p.delta = b.value("delta", p.delta);
    p.conditioning.r_max = b.value("r_max", p.conditioning.r_max);
    if (b.contains("delays_samples")) p.delays.delays = b.at("delays_samples").get<std::vector<std::size_t>>();
    if (b.contains("delays_ms")) {
        const double fs = j.value("sample_rate", 0.0);
        if (!(fs > 0)) throw FormatError("delays_ms needs a sample_rate");
        p.delays.delays.clear();
        for (double ms : b.at("delays_ms").get<std::vector<double>>()) {
            const double s = ms * fs / 1000.0;
            if (std::abs(s - std::round(s)) > 1e-9) throw FormatError("delay in ms is not a whole number of samples");
            p.delays.delays.push_back(static_cast<std::size_t>(std::round(s)));
        }
    }
    p.validate();
    return p;
}

inline json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "' for reading");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("'" + path + "': " + e.what());
    }
}

inline NmmConfig read_nmm_config(const std::string& path) { return nmm_config_from_json(read_json_file(path)); }

}  // namespace moptn::io
