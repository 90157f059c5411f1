// physaudit: audits generated audio for physical correctness against
// annotated clips. Subcommands: annotate, analyze, align, audit, warp, elo,
// report.
//
// Exit codes: 0 success, 1 usage, 2 validation, 3 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "physaudit/physaudit.hpp"

namespace pa = physaudit;
using nlohmann::json;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value, win over the config file
};

pa::RunConfig make_config(const GlobalArgs& args) {
    pa::RunConfig cfg;
    if (!args.config_path.empty()) cfg = pa::load_config(args.config_path);
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw pa::Error("invalid_config", "--set expects key=value, got '" + kv + "'");
        }
        pa::apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

json hits_to_json(const pa::onset::HitAnnotations& hits) {
    json j;
    j["times"] = hits.times;
    j["source"] = hits.source == pa::onset::AnnotationSource::manual ? "manual" : "semi_auto";
    return j;
}

pa::onset::HitAnnotations hits_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw pa::Error("file_not_found", "cannot open hits file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw pa::Error("invalid_hits", std::string("hits file parse error: ") + e.what());
    }
    pa::onset::HitAnnotations hits;
    for (const auto& t : j.at("times")) hits.times.push_back(t.get<double>());
    if (j.value("source", "manual") == std::string("semi_auto")) {
        hits.source = pa::onset::AnnotationSource::semi_auto;
    }
    return hits;
}

json metric_value_json(const pa::metrics::MetricValue& v) {
    json j;
    j["value"] = v.ok() ? json(v.value) : json(nullptr);
    if (!v.ok()) j["reason"] = v.reason;
    return j;
}

json per_hit_json(const std::vector<double>& values) {
    json arr = json::array();
    for (const double v : values) arr.push_back(std::isnan(v) ? json(nullptr) : json(v));
    return arr;
}

json metric_vector_json(const pa::metrics::MetricVector& mv) {
    json j;
    for (const auto& name : pa::metrics::metric_names()) j[name] = metric_value_json(mv.by_name(name));
    json per_hit;
    per_hit["attack_time"] = per_hit_json(mv.per_hit.attack_time);
    per_hit["decay_rate"] = per_hit_json(mv.per_hit.decay_rate);
    per_hit["f0"] = per_hit_json(mv.per_hit.f0);
    per_hit["spectral_centroid"] = per_hit_json(mv.per_hit.spectral_centroid);
    per_hit["spectral_rolloff"] = per_hit_json(mv.per_hit.spectral_rolloff);
    per_hit["spectral_flux"] = per_hit_json(mv.per_hit.spectral_flux);
    j["per_hit"] = std::move(per_hit);
    if (!mv.warnings.empty()) j["warnings"] = mv.warnings;
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw pa::Error("write_failed", "cannot write '" + path + "'");
    out << text;
}

void emit_report_files(const pa::io::AuditReport& report, const std::string& out_dir,
                       const std::string& format) {
    std::filesystem::create_directories(out_dir);
    if (format == "json" || format == "both") {
        write_text(out_dir + "/report.json", pa::io::report_to_json(report).dump(2) + "\n");
    }
    if (format == "csv" || format == "both") {
        write_text(out_dir + "/verdicts.csv", pa::io::verdicts_csv(report));
        write_text(out_dir + "/per_metric.csv", pa::io::per_metric_csv(report));
        write_text(out_dir + "/summary.csv", pa::io::summary_csv(report));
        write_text(out_dir + "/alignment.csv", pa::io::alignment_csv(report));
    }
}

int cmd_annotate(const GlobalArgs& g, const std::string& audio, const std::string& out) {
    const auto cfg = make_config(g);
    const auto clip = pa::io::load_wav(audio);
    const auto hits = pa::onset::annotate_candidates(clip, cfg.detector);
    const std::string text = hits_to_json(hits).dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        write_text(out, text);
        std::cout << hits.times.size() << " candidate onsets -> " << out << "\n";
    }
    return 0;
}

int cmd_analyze(const GlobalArgs& g, const std::string& audio, const std::string& hits_path,
                const std::string& out) {
    const auto cfg = make_config(g);
    const auto clip = pa::io::load_wav(audio);
    pa::onset::HitAnnotations hits;
    std::string provenance = "detected";
    if (!hits_path.empty()) {
        hits = hits_from_file(hits_path);
        provenance = "given";
    }
    const auto mv = pa::metrics::compute_all(clip, hits, cfg.metrics, cfg.detector);
    json j = metric_vector_json(mv);
    j["hits_provenance"] = provenance;
    const std::string text = j.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        write_text(out, text);
    }
    return 0;
}

int cmd_align(const GlobalArgs& g, const std::string& manifest, const std::string& generations,
              const std::string& out_dir, const std::string& format) {
    const auto cfg = make_config(g);
    const auto corpus = pa::io::load_manifest(manifest);
    const std::string gen_dir = generations.empty() ? corpus.base_dir : generations;
    const auto report = pa::run::run_alignment(corpus, gen_dir, cfg);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        if (format == "json" || format == "both") {
            write_text(out_dir + "/alignment.json", pa::io::report_to_json(report).dump(2) + "\n");
        }
        if (format == "csv" || format == "both") {
            write_text(out_dir + "/alignment.csv", pa::io::alignment_csv(report));
        }
    }
    std::cout << pa::io::alignment_csv(report);
    for (const auto& q : report.quarantined) std::cerr << "skipped " << q << "\n";
    return 0;
}

int cmd_audit(const GlobalArgs& g, const std::string& manifest, const std::string& generations,
              const std::string& out_dir, const std::string& format, int seeds, int jobs) {
    auto cfg = make_config(g);
    if (seeds > 0) cfg.seeds_expected = seeds;
    if (jobs > 0) cfg.jobs = jobs;
    const auto corpus = pa::io::load_manifest(manifest);
    const std::string gen_dir = generations.empty() ? corpus.base_dir : generations;

    auto report = pa::run::run_audit(corpus, gen_dir, cfg);
    for (const auto& gen : corpus.generations) {
        if (static_cast<int>(gen.seeds.size()) != cfg.seeds_expected) {
            report.quarantined.push_back(gen.test_id + ": expected " +
                                         std::to_string(cfg.seeds_expected) + " seeds, found " +
                                         std::to_string(gen.seeds.size()) + " (ran anyway)");
        }
    }
    if (!out_dir.empty()) emit_report_files(report, out_dir, format);
    std::cout << pa::io::per_metric_csv(report);
    std::cout << pa::io::summary_csv(report);
    for (const auto& q : report.quarantined) std::cerr << "note: " << q << "\n";
    return 0;
}

int cmd_warp(const GlobalArgs& g, const std::string& clip_path, const std::string& hits_path,
             const std::string& target_hits_path, const std::string& out_prefix, double fps) {
    make_config(g);  // validates --config/--set even though warping has no knobs yet
    const auto clip = pa::io::load_wav(clip_path);
    auto source_hits = hits_from_file(hits_path).times;
    const auto target_hits = hits_from_file(target_hits_path).times;
    if (source_hits.size() < target_hits.size()) {
        throw pa::Error("hit_count_mismatch",
                        "the clip being warped must carry at least as many annotated sound events "
                        "as the target; got " + std::to_string(source_hits.size()) + " vs " +
                        std::to_string(target_hits.size()));
    }
    source_hits.resize(target_hits.size());  // only the first N hits anchor the warp

    const auto map = pa::warp::build_warp_map(source_hits, target_hits, clip.duration());
    const auto warped = pa::warp::warp_audio(clip, map);
    pa::io::save_wav(out_prefix + ".wav", warped, pa::io::WavFormat::pcm16);

    const auto n_frames = static_cast<std::size_t>(std::llround(clip.duration() * fps));
    const auto plan = pa::warp::frame_remap_plan(map, fps, n_frames);
    json j;
    j["fps"] = plan.fps;
    j["source_frame_index"] = plan.source_frame_index;
    write_text(out_prefix + "_remap.json", j.dump(2) + "\n");
    std::cout << "warped audio -> " << out_prefix << ".wav ("
              << warped.duration() << " s), remap plan -> " << out_prefix << "_remap.json\n";
    return 0;
}

int cmd_elo(const GlobalArgs& g, const std::string& comparisons_path, const std::string& metrics_path,
            const std::string& out, const std::string& format) {
    make_config(g);
    std::ifstream in(comparisons_path);
    if (!in) throw pa::Error("file_not_found", "cannot open '" + comparisons_path + "'");
    std::vector<pa::elo::Comparison> comparisons;
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw pa::Error("invalid_comparisons",
                            comparisons_path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        pa::elo::Comparison c;
        c.model_a = j.at("model_a").get<std::string>();
        c.model_b = j.at("model_b").get<std::string>();
        const std::string outcome = j.at("outcome").get<std::string>();
        if (outcome == "a_wins") {
            c.outcome = pa::elo::Outcome::a_wins;
        } else if (outcome == "b_wins") {
            c.outcome = pa::elo::Outcome::b_wins;
        } else if (outcome == "tie") {
            c.outcome = pa::elo::Outcome::tie;
        } else {
            throw pa::Error("invalid_comparisons", "unknown outcome '" + outcome + "'");
        }
        c.sequence_index = j.value("sequence_index", lineno);
        comparisons.push_back(std::move(c));
    }

    const auto ratings = pa::elo::run_ladder(comparisons);
    std::vector<std::pair<std::string, double>> sorted(ratings.rating.begin(), ratings.rating.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    json result;
    result["ratings"] = json::object();
    for (const auto& [model, rating] : ratings.rating) result["ratings"][model] = rating;

    std::ostringstream csv;
    csv << "model,rating\n";
    for (const auto& [model, rating] : sorted) csv << model << "," << rating << "\n";

    if (!metrics_path.empty()) {
        std::ifstream mf(metrics_path);
        if (!mf) throw pa::Error("file_not_found", "cannot open '" + metrics_path + "'");
        json metrics_doc;
        mf >> metrics_doc;
        result["metric_correlation"] = json::object();
        csv << "\nmetric,abs_spearman_vs_elo\n";
        for (const auto& [metric, scores] : metrics_doc.items()) {
            std::map<std::string, double> per_model;
            for (const auto& [model, value] : scores.items()) per_model[model] = value.get<double>();
            const double rho = pa::elo::metric_vs_elo(per_model, ratings);
            result["metric_correlation"][metric] = rho;
            csv << metric << "," << rho << "\n";
        }
    }

    const std::string text = format == "json" ? result.dump(2) + "\n" : csv.str();
    if (out.empty()) {
        std::cout << text;
    } else {
        write_text(out, text);
    }
    return 0;
}

int cmd_report(const GlobalArgs&, const std::string& in_path, const std::string& out_dir,
               const std::string& format) {
    std::ifstream in(in_path);
    if (!in) throw pa::Error("file_not_found", "cannot open '" + in_path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw pa::Error("invalid_report", std::string("report parse error: ") + e.what());
    }
    const auto report = pa::io::report_from_json(j);
    emit_report_files(report, out_dir.empty() ? "." : out_dir, format);
    std::cout << pa::io::summary_csv(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"physical-correctness audit for generated audio"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "config file (key = value lines)")
        ->envname("PHYSAUDIT_CONFIG");
    app.add_option("--set", g.overrides, "override a config key (key=value, repeatable)");

    std::string audio, hits, target_hits, manifest, generations, out, format = "both", in_path;
    double fps = 30.0;
    int seeds = 0, jobs = 0;

    auto* annotate = app.add_subcommand("annotate", "propose candidate onset annotations");
    annotate->add_option("audio", audio, "input WAV")->required();
    annotate->add_option("--out", out, "output hits JSON (stdout when omitted)");

    auto* analyze = app.add_subcommand("analyze", "compute the nine metrics for one clip");
    analyze->add_option("audio", audio, "input WAV")->required();
    analyze->add_option("--hits", hits, "hit annotation JSON (onsets are detected when omitted)");
    analyze->add_option("--out", out, "output JSON path (stdout when omitted)");

    auto* align = app.add_subcommand("align", "alignment scores over a generation corpus");
    align->add_option("--manifest", manifest, "corpus manifest JSON")->required();
    align->add_option("--generations", generations, "base dir for generated audio paths");
    align->add_option("--out", out, "output directory");
    align->add_option("--format", format, "csv, json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}));

    auto* audit = app.add_subcommand("audit", "full physical-correctness audit");
    audit->add_option("--manifest", manifest, "corpus manifest JSON")->required();
    audit->add_option("--generations", generations, "base dir for generated audio paths");
    audit->add_option("--out", out, "output directory");
    audit->add_option("--format", format, "csv, json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    audit->add_option("--seeds", seeds, "expected seeds per test case");
    audit->add_option("--jobs", jobs, "worker threads (default: all cores)");

    auto* warp = app.add_subcommand("warp", "time-warp a clip onto target event timings");
    warp->add_option("--clip", audio, "audio to warp (WAV)")->required();
    warp->add_option("--hits", hits, "the clip's own hit times (JSON)")->required();
    warp->add_option("--target-hits", target_hits, "target hit times (JSON)")->required();
    warp->add_option("--out", out, "output prefix (<out>.wav, <out>_remap.json)")->required();
    warp->add_option("--fps", fps, "frame rate for the remap plan");

    auto* elo = app.add_subcommand("elo", "aggregate pairwise preferences into ratings");
    elo->add_option("--comparisons", in_path, "JSON-lines comparison log")->required();
    elo->add_option("--metrics", hits, "per-metric per-model scores JSON for |rho| vs ELO");
    elo->add_option("--out", out, "output path (stdout when omitted)");
    elo->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json", "both"}));

    auto* report = app.add_subcommand("report", "re-render a saved report.json");
    report->add_option("--in", in_path, "report JSON")->required();
    report->add_option("--out", out, "output directory");
    report->add_option("--format", format, "csv, json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (annotate->parsed()) return cmd_annotate(g, audio, out);
        if (analyze->parsed()) return cmd_analyze(g, audio, hits, out);
        if (align->parsed()) return cmd_align(g, manifest, generations, out, format);
        if (audit->parsed()) return cmd_audit(g, manifest, generations, out, format, seeds, jobs);
        if (warp->parsed()) return cmd_warp(g, audio, hits, target_hits, out, fps);
        if (elo->parsed()) return cmd_elo(g, in_path, hits, out, format == "both" ? "csv" : format);
        if (report->parsed()) return cmd_report(g, in_path, out, format);
    } catch (const pa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
