#pragma once

// Audit report model and emission: JSON (round-trippable) plus CSV tables
// shaped like the per-metric confidence, overall summary and alignment
// tables a corpus run is judged by.

#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "physaudit/audit.hpp"
#include "physaudit/error.hpp"
#include "physaudit/metrics.hpp"

namespace physaudit::io {

struct CaseVerdict {
    std::string case_id;
    audit::TestVerdict verdict;
};

struct AlignmentRow {
    std::string id;  // case id, or "overall"
    std::size_t n_seeds = 0;
    double coverage_mean = 0.0;
    double coverage_ci_half = 0.0;
    std::optional<double> timing_error_mean_ms;
    std::optional<double> timing_error_ci_half_ms;
    double perfect_align = 0.0;  // percent
};

struct AuditReport {
    std::vector<CaseVerdict> verdicts;
    std::vector<AlignmentRow> alignment;
    std::vector<std::string> quarantined;  // case id + error, run continued
};

struct MetricSummary {
    std::string metric;
    double avg_confidence = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_cases = 0;
};

inline std::vector<MetricSummary> per_metric_summary(const AuditReport& report) {
    std::vector<MetricSummary> out;
    for (const auto& name : metrics::metric_names()) {
        MetricSummary s;
        s.metric = name;
        double sum = 0.0;
        for (const auto& cv : report.verdicts) {
            if (cv.verdict.metric != name) continue;
            sum += cv.verdict.confidence;
            ++s.n_cases;
        }
        if (s.n_cases > 0) s.avg_confidence = sum / static_cast<double>(s.n_cases);
        out.push_back(std::move(s));
    }
    return out;
}

struct OverallSummary {
    double confidence = std::numeric_limits<double>::quiet_NaN();  // avg over metrics
    std::optional<double> hit_coverage;
    std::optional<double> perfect_align;
    std::optional<double> timing_error_ms;
};

inline OverallSummary overall_summary(const AuditReport& report) {
    OverallSummary s;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& m : per_metric_summary(report)) {
        if (m.n_cases == 0) continue;
        sum += m.avg_confidence;
        ++n;
    }
    if (n > 0) s.confidence = sum / static_cast<double>(n);
    for (const auto& row : report.alignment) {
        if (row.id != "overall") continue;
        s.hit_coverage = row.coverage_mean;
        s.perfect_align = row.perfect_align;
        s.timing_error_ms = row.timing_error_mean_ms;
    }
    return s;
}

namespace detail {

inline nlohmann::json num_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

inline double num_from(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline std::string csv_cell(double v, int precision = 6) {
    if (std::isnan(v)) return "";
    std::ostringstream os;
    os << std::setprecision(precision) << std::fixed << v;
    return os.str();
}

}  // namespace detail

inline nlohmann::json report_to_json(const AuditReport& report) {
    nlohmann::json j;
    j["verdicts"] = nlohmann::json::array();
    for (const auto& cv : report.verdicts) {
        nlohmann::json v;
        v["case"] = cv.case_id;
        v["metric"] = cv.verdict.metric;
        v["trend"] = audit::trend_name(cv.verdict.trend);
        v["confidence"] = cv.verdict.confidence;
        v["n_seeds"] = cv.verdict.n_seeds;
        v["n_votes_pass"] = cv.verdict.n_votes_pass;
        v["n_failures"] = cv.verdict.n_failures;
        v["tau"] = detail::num_or_null(cv.verdict.tau);
        j["verdicts"].push_back(std::move(v));
    }
    j["alignment"] = nlohmann::json::array();
    for (const auto& row : report.alignment) {
        nlohmann::json a;
        a["id"] = row.id;
        a["n_seeds"] = row.n_seeds;
        a["hit_coverage"] = row.coverage_mean;
        a["hit_coverage_ci95"] = row.coverage_ci_half;
        a["timing_error_ms"] =
            row.timing_error_mean_ms ? nlohmann::json(*row.timing_error_mean_ms) : nullptr;
        a["timing_error_ci95"] =
            row.timing_error_ci_half_ms ? nlohmann::json(*row.timing_error_ci_half_ms) : nullptr;
        a["perfect_align"] = row.perfect_align;
        j["alignment"].push_back(std::move(a));
    }
    j["quarantined"] = report.quarantined;

    nlohmann::json per_metric = nlohmann::json::array();
    for (const auto& m : per_metric_summary(report)) {
        per_metric.push_back({{"metric", m.metric},
                              {"avg_confidence", detail::num_or_null(m.avg_confidence)},
                              {"n_cases", m.n_cases}});
    }
    j["per_metric"] = std::move(per_metric);

    const auto s = overall_summary(report);
    j["summary"] = {{"confidence", detail::num_or_null(s.confidence)},
                    {"hit_coverage", s.hit_coverage ? nlohmann::json(*s.hit_coverage) : nullptr},
                    {"perfect_align", s.perfect_align ? nlohmann::json(*s.perfect_align) : nullptr},
                    {"timing_error_ms",
                     s.timing_error_ms ? nlohmann::json(*s.timing_error_ms) : nullptr}};
    return j;
}

inline AuditReport report_from_json(const nlohmann::json& j) {
    AuditReport report;
    for (const auto& v : j.value("verdicts", nlohmann::json::array())) {
        CaseVerdict cv;
        cv.case_id = v.at("case").get<std::string>();
        cv.verdict.metric = v.at("metric").get<std::string>();
        cv.verdict.trend = audit::trend_from_name(v.at("trend").get<std::string>());
        cv.verdict.confidence = v.at("confidence").get<double>();
        cv.verdict.n_seeds = v.at("n_seeds").get<std::size_t>();
        cv.verdict.n_votes_pass = v.at("n_votes_pass").get<std::size_t>();
        cv.verdict.n_failures = v.at("n_failures").get<std::size_t>();
        cv.verdict.tau = detail::num_from(v.at("tau"));
        report.verdicts.push_back(std::move(cv));
    }
    for (const auto& a : j.value("alignment", nlohmann::json::array())) {
        AlignmentRow row;
        row.id = a.at("id").get<std::string>();
        row.n_seeds = a.at("n_seeds").get<std::size_t>();
        row.coverage_mean = a.at("hit_coverage").get<double>();
        row.coverage_ci_half = a.at("hit_coverage_ci95").get<double>();
        if (!a.at("timing_error_ms").is_null()) {
            row.timing_error_mean_ms = a.at("timing_error_ms").get<double>();
        }
        if (!a.at("timing_error_ci95").is_null()) {
            row.timing_error_ci_half_ms = a.at("timing_error_ci95").get<double>();
        }
        row.perfect_align = a.at("perfect_align").get<double>();
        report.alignment.push_back(std::move(row));
    }
    for (const auto& q : j.value("quarantined", nlohmann::json::array())) {
        report.quarantined.push_back(q.get<std::string>());
    }
    return report;
}

// One row per metric, Table-1 layout: metric name, average confidence, cases.
inline std::string per_metric_csv(const AuditReport& report) {
    std::ostringstream os;
    os << "metric,avg_confidence,n_cases\n";
    for (const auto& m : per_metric_summary(report)) {
        os << m.metric << "," << detail::csv_cell(m.avg_confidence) << "," << m.n_cases << "\n";
    }
    return os.str();
}

inline std::string verdicts_csv(const AuditReport& report) {
    std::ostringstream os;
    os << "case,metric,trend,confidence,n_seeds,n_votes_pass,n_failures,tau\n";
    for (const auto& cv : report.verdicts) {
        os << cv.case_id << "," << cv.verdict.metric << "," << audit::trend_name(cv.verdict.trend)
           << "," << detail::csv_cell(cv.verdict.confidence) << "," << cv.verdict.n_seeds << ","
           << cv.verdict.n_votes_pass << "," << cv.verdict.n_failures << ","
           << detail::csv_cell(cv.verdict.tau) << "\n";
    }
    return os.str();
}

inline std::string summary_csv(const AuditReport& report) {
    const auto s = overall_summary(report);
    std::ostringstream os;
    os << "confidence,hit_coverage,perfect_align,timing_error_ms\n";
    os << detail::csv_cell(s.confidence) << ","
       << (s.hit_coverage ? detail::csv_cell(*s.hit_coverage) : "") << ","
       << (s.perfect_align ? detail::csv_cell(*s.perfect_align) : "") << ","
       << (s.timing_error_ms ? detail::csv_cell(*s.timing_error_ms) : "") << "\n";
    return os.str();
}

inline std::string alignment_csv(const AuditReport& report) {
    std::ostringstream os;
    os << "id,n_seeds,hit_coverage,hit_coverage_ci95,timing_error_ms,timing_error_ci95,perfect_align\n";
    for (const auto& row : report.alignment) {
        os << row.id << "," << row.n_seeds << "," << detail::csv_cell(row.coverage_mean) << ","
           << detail::csv_cell(row.coverage_ci_half) << ","
           << (row.timing_error_mean_ms ? detail::csv_cell(*row.timing_error_mean_ms) : "") << ","
           << (row.timing_error_ci_half_ms ? detail::csv_cell(*row.timing_error_ci_half_ms) : "")
           << "," << detail::csv_cell(row.perfect_align) << "\n";
    }
    return os.str();
}

}  // namespace physaudit::io
