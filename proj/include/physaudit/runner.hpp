#pragma once

// Corpus pipeline: loads generated audio per seed, detects onsets, computes
// metric vectors and alignment, and folds everything through the audit layer
// into a report. Cases run in a worker pool; emission order is always the
// manifest's case order, so reports are byte-stable across jobs settings.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "physaudit/audit.hpp"
#include "physaudit/config.hpp"
#include "physaudit/manifest.hpp"
#include "physaudit/metrics.hpp"
#include "physaudit/onset.hpp"
#include "physaudit/report.hpp"
#include "physaudit/stats.hpp"
#include "physaudit/wav.hpp"

namespace physaudit::run {

namespace detail {

struct SideObservation {
    metrics::MetricVector metric_vector;
    onset::AlignmentScores alignment;
};

inline SideObservation observe_side(const std::string& audio_path,
                                    const io::ClipRecord& clip_record, const RunConfig& cfg) {
    const AudioClip clip = io::load_wav(audio_path);
    std::vector<double> detected;
    try {
        detected = onset::detect_onsets(clip, cfg.detector);
    } catch (const Error&) {
        // clip too short for the detector: no onsets
    }

    SideObservation side;
    if (!clip_record.hits.times.empty()) {
        side.alignment =
            onset::alignment_scores(onset::match(detected, clip_record.hits, cfg.detector));
    } else {
        side.alignment.hit_coverage = 100.0;  // nothing annotated, nothing to miss
        side.alignment.perfect = true;
    }

    onset::HitAnnotations hits;
    hits.times = detected;
    hits.source = onset::AnnotationSource::semi_auto;
    side.metric_vector = metrics::compute_all(clip, hits, cfg.metrics, cfg.detector);
    return side;
}

struct CaseResult {
    std::string case_id;
    std::vector<audit::TestVerdict> verdicts;
    std::optional<io::AlignmentRow> alignment;
    std::optional<std::string> error;
};

inline io::AlignmentRow alignment_row(const std::string& id,
                                      const std::vector<onset::AlignmentScores>& seeds) {
    io::AlignmentRow row;
    row.id = id;
    row.n_seeds = seeds.size();
    std::vector<double> coverages, timings;
    for (const auto& s : seeds) {
        coverages.push_back(s.hit_coverage);
        if (s.timing_error_ms) timings.push_back(*s.timing_error_ms);
    }
    if (!coverages.empty()) {
        row.coverage_mean = stats::mean(coverages);
        if (coverages.size() >= 2) {
            const auto ci = stats::mean_ci95(coverages);
            row.coverage_ci_half = ci.hi - ci.mean;
        }
        row.perfect_align = onset::perfect_align_rate(seeds);
    }
    if (!timings.empty()) {
        row.timing_error_mean_ms = stats::mean(timings);
        if (timings.size() >= 2) {
            const auto ci = stats::mean_ci95(timings);
            row.timing_error_ci_half_ms = ci.hi - ci.mean;
        }
    }
    return row;
}

inline CaseResult run_case(const io::Corpus& corpus, const io::GenerationSet& gen,
                           const std::string& generations_dir, const RunConfig& cfg) {
    CaseResult result;
    result.case_id = gen.test_id;
    try {
        const io::PairTest* pair = corpus.pair_test(gen.test_id);
        const io::SingleTest* single = corpus.single_test(gen.test_id);
        const io::ClipRecord* factual_clip =
            corpus.clip(pair != nullptr ? pair->factual_id : single->clip_id);
        const io::ClipRecord* counterfactual_clip =
            pair != nullptr ? corpus.clip(pair->counterfactual_id) : nullptr;

        std::vector<audit::SeedObservation> seeds;
        std::vector<onset::AlignmentScores> factual_alignment;
        for (const auto& seed : gen.seeds) {
            audit::SeedObservation obs;
            obs.seed_id = seed.seed_id;
            const auto factual =
                observe_side(generations_dir + "/" + seed.factual_audio, *factual_clip, cfg);
            obs.metrics_factual = factual.metric_vector;
            obs.alignment_factual = factual.alignment;
            factual_alignment.push_back(factual.alignment);
            if (pair != nullptr) {
                const auto counter = observe_side(generations_dir + "/" + *seed.counterfactual_audio,
                                                  *counterfactual_clip, cfg);
                obs.metrics_counterfactual = counter.metric_vector;
                obs.alignment_counterfactual = counter.alignment;
            }
            obs.semantic_factual = seed.semantic_factual;
            obs.semantic_counterfactual = seed.semantic_counterfactual;
            seeds.push_back(std::move(obs));
        }

        const auto& expectations = pair != nullptr ? pair->expectations : single->expectations;
        result.verdicts = audit::run_test(seeds, expectations, cfg.audit);
        result.alignment = alignment_row(gen.test_id, factual_alignment);
    } catch (const std::exception& e) {
        result.error = std::string(e.what());
    }
    return result;
}

}  // namespace detail

// Full audit over every generation set in the corpus. Case failures are
// quarantined into the report, never fatal.
inline io::AuditReport run_audit(const io::Corpus& corpus, const std::string& generations_dir,
                                 const RunConfig& cfg = {}) {
    std::vector<detail::CaseResult> results(corpus.generations.size());
    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    const int jobs = std::max(1, cfg.jobs > 0 ? cfg.jobs : (hw > 0 ? hw : 1));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= corpus.generations.size()) return;
            results[i] = detail::run_case(corpus, corpus.generations[i], generations_dir, cfg);
        }
    };
    if (jobs == 1 || corpus.generations.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    io::AuditReport report;
    std::vector<onset::AlignmentScores> all_seeds;
    for (const auto& r : results) {
        if (r.error) {
            report.quarantined.push_back(r.case_id + ": " + *r.error);
            continue;
        }
        for (const auto& v : r.verdicts) report.verdicts.push_back({r.case_id, v});
        if (r.alignment) report.alignment.push_back(*r.alignment);
    }
    std::stable_sort(report.verdicts.begin(), report.verdicts.end(),
                     [](const io::CaseVerdict& a, const io::CaseVerdict& b) {
                         return a.case_id < b.case_id;
                     });
    std::stable_sort(report.alignment.begin(), report.alignment.end(),
                     [](const io::AlignmentRow& a, const io::AlignmentRow& b) { return a.id < b.id; });

    // overall alignment row across all cases, seed-weighted
    if (!report.alignment.empty()) {
        io::AlignmentRow overall;
        overall.id = "overall";
        std::vector<double> coverages, timings, perfects;
        for (const auto& row : report.alignment) {
            overall.n_seeds += row.n_seeds;
            coverages.push_back(row.coverage_mean);
            perfects.push_back(row.perfect_align);
            if (row.timing_error_mean_ms) timings.push_back(*row.timing_error_mean_ms);
        }
        overall.coverage_mean = stats::mean(coverages);
        if (coverages.size() >= 2) {
            const auto ci = stats::mean_ci95(coverages);
            overall.coverage_ci_half = ci.hi - ci.mean;
        }
        if (!timings.empty()) {
            overall.timing_error_mean_ms = stats::mean(timings);
            if (timings.size() >= 2) {
                const auto ci = stats::mean_ci95(timings);
                overall.timing_error_ci_half_ms = ci.hi - ci.mean;
            }
        }
        overall.perfect_align = stats::mean(perfects);
        report.alignment.push_back(std::move(overall));
    }
    return report;
}

// Alignment-only run: per-seed detect -> match -> score against each case's
// annotated clip, factual side.
inline io::AuditReport run_alignment(const io::Corpus& corpus, const std::string& generations_dir,
                                     const RunConfig& cfg = {}) {
    io::AuditReport report;
    for (const auto& gen : corpus.generations) {
        try {
            const io::PairTest* pair = corpus.pair_test(gen.test_id);
            const io::SingleTest* single = corpus.single_test(gen.test_id);
            const io::ClipRecord* clip =
                corpus.clip(pair != nullptr ? pair->factual_id : single->clip_id);
            std::vector<onset::AlignmentScores> seeds;
            for (const auto& seed : gen.seeds) {
                const AudioClip audio = io::load_wav(generations_dir + "/" + seed.factual_audio);
                std::vector<double> detected;
                try {
                    detected = onset::detect_onsets(audio, cfg.detector);
                } catch (const Error&) {
                }
                if (clip->hits.times.empty()) continue;
                seeds.push_back(
                    onset::alignment_scores(onset::match(detected, clip->hits, cfg.detector)));
            }
            if (!seeds.empty()) report.alignment.push_back(detail::alignment_row(gen.test_id, seeds));
        } catch (const std::exception& e) {
            report.quarantined.push_back(gen.test_id + ": " + e.what());
        }
    }
    std::stable_sort(report.alignment.begin(), report.alignment.end(),
                     [](const io::AlignmentRow& a, const io::AlignmentRow& b) { return a.id < b.id; });
    if (!report.alignment.empty()) {
        std::vector<double> coverages, timings, perfects;
        io::AlignmentRow overall;
        overall.id = "overall";
        for (const auto& row : report.alignment) {
            overall.n_seeds += row.n_seeds;
            coverages.push_back(row.coverage_mean);
            perfects.push_back(row.perfect_align);
            if (row.timing_error_mean_ms) timings.push_back(*row.timing_error_mean_ms);
        }
        overall.coverage_mean = stats::mean(coverages);
        if (coverages.size() >= 2) {
            const auto ci = stats::mean_ci95(coverages);
            overall.coverage_ci_half = ci.hi - ci.mean;
        }
        if (!timings.empty()) {
            overall.timing_error_mean_ms = stats::mean(timings);
            if (timings.size() >= 2) {
                const auto ci = stats::mean_ci95(timings);
                overall.timing_error_ci_half_ms = ci.hi - ci.mean;
            }
        }
        overall.perfect_align = stats::mean(perfects);
        report.alignment.push_back(std::move(overall));
    }
    return report;
}

}  // namespace physaudit::run
