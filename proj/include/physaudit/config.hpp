#pragma once

// Run configuration: every tunable from the module option structs, loadable
// from a simple `key = value` file with flag overrides on top. Defaults
// reproduce the published constants.

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "physaudit/audit.hpp"
#include "physaudit/error.hpp"
#include "physaudit/metrics.hpp"
#include "physaudit/onset.hpp"

namespace physaudit {

struct RunConfig {
    onset::DetectorOptions detector;
    metrics::Options metrics;
    audit::Options audit;
    int seeds_expected = 10;
    int jobs = 0;  // 0 = all hardware threads
};

namespace config_detail {

struct Binding {
    std::function<void(RunConfig&, const std::string&)> set;
};

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error("invalid_config", "key '" + key + "': '" + value + "' is not a number");
    }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw Error("invalid_config", "key '" + key + "': '" + value + "' is not a boolean");
}

inline const std::map<std::string, Binding>& bindings() {
    static const std::map<std::string, Binding> table = [] {
        std::map<std::string, Binding> b;
        auto dbl = [&b](const std::string& key, auto member) {
            b[key] = {[key, member](RunConfig& c, const std::string& v) {
                std::invoke(member, c) = parse_double(key, v);
            }};
        };
        auto szt = [&b](const std::string& key, auto member) {
            b[key] = {[key, member](RunConfig& c, const std::string& v) {
                std::invoke(member, c) = static_cast<std::size_t>(parse_double(key, v));
            }};
        };
        auto bol = [&b](const std::string& key, auto member) {
            b[key] = {[key, member](RunConfig& c, const std::string& v) {
                std::invoke(member, c) = parse_bool(key, v);
            }};
        };

        dbl("onset.candidate_prominence_mads", [](RunConfig& c) -> double& { return c.detector.candidate_prominence_mads; });
        dbl("onset.candidate_min_separation_s", [](RunConfig& c) -> double& { return c.detector.candidate_min_separation_s; });
        dbl("onset.novelty_threshold_mads", [](RunConfig& c) -> double& { return c.detector.novelty_threshold_mads; });
        dbl("onset.peak_min_contrast", [](RunConfig& c) -> double& { return c.detector.peak_min_contrast; });
        dbl("onset.peak_min_rel_to_max", [](RunConfig& c) -> double& { return c.detector.peak_min_rel_to_max; });
        dbl("onset.peak_neighborhood_s", [](RunConfig& c) -> double& { return c.detector.peak_neighborhood_s; });
        dbl("onset.fallback_max_density_hz", [](RunConfig& c) -> double& { return c.detector.fallback_max_density_hz; });
        dbl("onset.tolerance_gap_factor", [](RunConfig& c) -> double& { return c.detector.tolerance_gap_factor; });
        dbl("onset.tolerance_min_s", [](RunConfig& c) -> double& { return c.detector.tolerance_min_s; });
        dbl("onset.tolerance_max_s", [](RunConfig& c) -> double& { return c.detector.tolerance_max_s; });

        dbl("metrics.w_dur_factor", [](RunConfig& c) -> double& { return c.metrics.w_dur_factor; });
        dbl("metrics.w_dur_min_s", [](RunConfig& c) -> double& { return c.metrics.w_dur_min_s; });
        dbl("metrics.w_dur_max_s", [](RunConfig& c) -> double& { return c.metrics.w_dur_max_s; });
        dbl("metrics.w_dur_default_s", [](RunConfig& c) -> double& { return c.metrics.w_dur_default_s; });
        dbl("metrics.envelope_sigma_s", [](RunConfig& c) -> double& { return c.metrics.envelope_sigma_s; });
        dbl("metrics.f0_octave_trigger_hz", [](RunConfig& c) -> double& { return c.metrics.f0_octave_trigger_hz; });
        dbl("metrics.f0_voicing_threshold", [](RunConfig& c) -> double& { return c.metrics.f0_voicing_threshold; });
        dbl("metrics.mod_cv_norm_div", [](RunConfig& c) -> double& { return c.metrics.mod_cv_norm_div; });
        dbl("metrics.mod_pf_norm_div", [](RunConfig& c) -> double& { return c.metrics.mod_pf_norm_div; });
        dbl("metrics.mod_highpass_hz", [](RunConfig& c) -> double& { return c.metrics.mod_highpass_hz; });
        dbl("metrics.drr_reverb_min_s", [](RunConfig& c) -> double& { return c.metrics.drr_reverb_min_s; });
        dbl("metrics.drr_reverb_max_s", [](RunConfig& c) -> double& { return c.metrics.drr_reverb_max_s; });
        szt("metrics.decay_max_fit_points", [](RunConfig& c) -> std::size_t& { return c.metrics.decay_max_fit_points; });

        dbl("audit.tau_mean_fraction", [](RunConfig& c) -> double& { return c.audit.tau_mean_fraction; });
        dbl("audit.tau_robust_fraction", [](RunConfig& c) -> double& { return c.audit.tau_robust_fraction; });
        dbl("audit.tau_eq_factor", [](RunConfig& c) -> double& { return c.audit.tau_eq_factor; });
        dbl("audit.rho_short", [](RunConfig& c) -> double& { return c.audit.rho_short; });
        dbl("audit.rho_mid", [](RunConfig& c) -> double& { return c.audit.rho_mid; });
        dbl("audit.rho_long", [](RunConfig& c) -> double& { return c.audit.rho_long; });
        dbl("audit.jnd_drr_db", [](RunConfig& c) -> double& { return c.audit.jnd_drr_db; });
        bol("audit.pooled_tau", [](RunConfig& c) -> bool& { return c.audit.pooled_tau; });
        bol("audit.unweighted_denominator", [](RunConfig& c) -> bool& { return c.audit.unweighted_denominator; });

        b["run.seeds_expected"] = {[](RunConfig& c, const std::string& v) {
            c.seeds_expected = static_cast<int>(parse_double("run.seeds_expected", v));
        }};
        b["run.jobs"] = {[](RunConfig& c, const std::string& v) {
            c.jobs = static_cast<int>(parse_double("run.jobs", v));
        }};
        return b;
    }();
    return table;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto z = s.find_last_not_of(" \t\r\n");
    return s.substr(a, z - a + 1);
}

}  // namespace config_detail

inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    // per-metric JND table entries: audit.jnd.<metric>
    if (key.rfind("audit.jnd.", 0) == 0) {
        const std::string metric = key.substr(10);
        const auto& names = metrics::metric_names();
        if (std::find(names.begin(), names.end(), metric) == names.end()) {
            throw Error("invalid_config", "key '" + key + "': unknown metric");
        }
        cfg.audit.jnd[metric] = config_detail::parse_double(key, value);
        return;
    }
    const auto& table = config_detail::bindings();
    const auto it = table.find(key);
    if (it == table.end()) throw Error("invalid_config", "unknown config key '" + key + "'");
    it->second.set(cfg, value);
}

// `key = value` lines, '#' comments, blank lines ignored.
inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("file_not_found", "cannot open config '" + path + "'");
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = config_detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error("invalid_config", path + ":" + std::to_string(lineno) + ": expected key = value");
        }
        apply_config_entry(cfg, config_detail::trim(line.substr(0, eq)),
                           config_detail::trim(line.substr(eq + 1)));
    }
    return cfg;
}

}  // namespace physaudit
