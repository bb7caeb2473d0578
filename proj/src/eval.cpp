#include "densecrab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "densecrab/error.hpp"

namespace densecrab {

namespace {

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9f", v);
    return buf;
}

std::string format_score(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

void Run::add(const std::string& query_id, const std::string& doc_id, double score) {
    ranked_[query_id].push_back(ScoredDoc{doc_id, score});
}

void Run::add_results(const std::string& query_id, const std::vector<ScoredDoc>& results) {
    auto& entries = ranked_[query_id];
    entries.insert(entries.end(), results.begin(), results.end());
}

void Run::finalize() {
    for (auto& [qid, entries] : ranked_) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](const ScoredDoc& a, const ScoredDoc& b) { return a.score > b.score; });
        std::set<std::string> seen;
        for (const ScoredDoc& e : entries) {
            if (!seen.insert(e.doc_id).second) {
                fail(ErrKind::parse, "duplicate document '" + e.doc_id + "' for query '" + qid + "'");
            }
        }
    }
}

void save_run(const Run& run, const std::string& path, const std::string& system_tag) {
    std::ofstream out(path);
    if (!out) fail(ErrKind::io, "cannot write run file '" + path + "'");
    for (const auto& [qid, entries] : run.ranked()) {
        std::size_t rank = 1;
        for (const ScoredDoc& e : entries) {
            out << qid << " Q0 " << e.doc_id << ' ' << rank << ' ' << format_score(e.score) << ' '
                << system_tag << '\n';
            ++rank;
        }
    }
    if (!out) fail(ErrKind::io, "error while writing '" + path + "'");
}

Run load_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrKind::io, "cannot open run file '" + path + "'");
    Run run;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream parts(line);
        std::string qid, q0, docid, rank_str, score_str, tag;
        if (!(parts >> qid >> q0 >> docid >> rank_str >> score_str >> tag)) {
            fail(ErrKind::parse, path + ":" + std::to_string(line_no) + ": expected 6 fields");
        }
        char* end = nullptr;
        const double score = std::strtod(score_str.c_str(), &end);
        if (end == score_str.c_str() || *end != '\0') {
            fail(ErrKind::parse, path + ":" + std::to_string(line_no) + ": bad score '" + score_str + "'");
        }
        run.add(qid, docid, score);
    }
    run.finalize();
    return run;
}

namespace {

double gain(int grade) { return std::pow(2.0, grade) - 1.0; }
double discount(std::size_t rank) { return std::log2(static_cast<double>(rank) + 1.0); }

/// Collect the positively judged documents of one query.
std::vector<int> positive_grades(const Qrels& qrels, const std::string& qid) {
    std::vector<int> grades;
    auto it = qrels.judgments().find(qid);
    if (it == qrels.judgments().end()) return grades;
    for (const auto& [doc, grade] : it->second) {
        if (grade >= 1) grades.push_back(grade);
    }
    return grades;
}

MetricReport evaluate(const Run& run, const Qrels& qrels, std::size_t k, const std::string& name,
                      bool ndcg) {
    if (k == 0) fail(ErrKind::invalid, "metric cutoff must be >= 1");
    MetricReport report;
    report.metric = name;
    report.k = k;

    double total = 0.0;
    for (const auto& [qid, entries] : run.ranked()) {
        std::vector<int> grades = positive_grades(qrels, qid);
        if (grades.empty()) {
            ++report.skipped;
            std::cerr << "warning: query '" << qid << "' has no positive judgments, skipped\n";
            continue;
        }
        double value = 0.0;
        if (ndcg) {
            double dcg = 0.0;
            for (std::size_t i = 0; i < entries.size() && i < k; ++i) {
                dcg += gain(qrels.grade(qid, entries[i].doc_id)) / discount(i + 1);
            }
            std::sort(grades.begin(), grades.end(), std::greater<int>());
            double idcg = 0.0;
            for (std::size_t i = 0; i < grades.size() && i < k; ++i) {
                idcg += gain(grades[i]) / discount(i + 1);
            }
            value = dcg / idcg;
        } else {
            std::size_t hits = 0;
            for (std::size_t i = 0; i < entries.size() && i < k; ++i) {
                if (qrels.grade(qid, entries[i].doc_id) >= 1) ++hits;
            }
            value = static_cast<double>(hits) / static_cast<double>(grades.size());
        }
        report.per_query[qid] = value;
        total += value;
    }
    if (report.per_query.empty()) {
        fail(ErrKind::invalid, "no run query has positive judgments in the qrels");
    }
    report.mean = total / static_cast<double>(report.per_query.size());
    return report;
}

}  // namespace

MetricReport ndcg_at_k(const Run& run, const Qrels& qrels, std::size_t k) {
    return evaluate(run, qrels, k, "ndcg@" + std::to_string(k), true);
}

MetricReport recall_at_k(const Run& run, const Qrels& qrels, std::size_t k) {
    return evaluate(run, qrels, k, "recall@" + std::to_string(k), false);
}

void save_report(const MetricReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrKind::io, "cannot write report '" + path + "'");
    out << "metric\tk\tevaluated\tskipped\n";
    out << report.metric << '\t' << report.k << '\t' << report.per_query.size() << '\t'
        << report.skipped << '\n';
    out << "query-id\tvalue\n";
    for (const auto& [qid, value] : report.per_query) {
        out << qid << '\t' << format_value(value) << '\n';
    }
    out << "mean\t" << format_value(report.mean) << '\n';
    if (!out) fail(ErrKind::io, "error while writing '" + path + "'");
}

MetricReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrKind::io, "cannot open report '" + path + "'");
    MetricReport report;
    std::string line;
    if (!std::getline(in, line) || line != "metric\tk\tevaluated\tskipped") {
        fail(ErrKind::parse, path + ": missing report header");
    }
    if (!std::getline(in, line)) fail(ErrKind::parse, path + ": missing metric row");
    {
        std::istringstream parts(line);
        std::string k_str, evaluated, skipped;
        std::getline(parts, report.metric, '\t');
        std::getline(parts, k_str, '\t');
        std::getline(parts, evaluated, '\t');
        std::getline(parts, skipped, '\t');
        report.k = static_cast<std::size_t>(std::stoul(k_str));
        report.skipped = static_cast<std::size_t>(std::stoul(skipped));
    }
    if (!std::getline(in, line) || line != "query-id\tvalue") {
        fail(ErrKind::parse, path + ": missing per-query header");
    }
    bool saw_mean = false;
    std::size_t line_no = 3;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            fail(ErrKind::parse, path + ":" + std::to_string(line_no) + ": expected 2 fields");
        }
        const std::string key = line.substr(0, tab);
        const double value = std::stod(line.substr(tab + 1));
        if (key == "mean") {
            report.mean = value;
            saw_mean = true;
        } else {
            report.per_query[key] = value;
        }
    }
    if (!saw_mean) fail(ErrKind::parse, path + ": missing mean row");
    return report;
}

ComparisonTable compare_systems(
    const std::map<std::string, std::map<std::string, MetricReport>>& by_system) {
    if (by_system.empty()) fail(ErrKind::invalid, "no systems to compare");

    ComparisonTable table;
    for (const auto& [system, reports] : by_system) table.systems.push_back(system);

    const auto& first_reports = by_system.begin()->second;
    for (const auto& [dataset, report] : first_reports) table.datasets.push_back(dataset);
    for (const auto& [system, reports] : by_system) {
        if (reports.size() != table.datasets.size()) {
            fail(ErrKind::invalid, "system '" + system + "' evaluated on a different dataset set");
        }
        for (const std::string& dataset : table.datasets) {
            if (reports.find(dataset) == reports.end()) {
                fail(ErrKind::invalid, "system '" + system + "' is missing dataset '" + dataset + "'");
            }
        }
    }

    table.values.assign(table.datasets.size(), std::vector<double>(table.systems.size(), 0.0));
    for (std::size_t d = 0; d < table.datasets.size(); ++d) {
        for (std::size_t s = 0; s < table.systems.size(); ++s) {
            table.values[d][s] = by_system.at(table.systems[s]).at(table.datasets[d]).mean;
        }
    }

    table.averages.assign(table.systems.size(), 0.0);
    table.best_on.assign(table.systems.size(), 0);
    for (std::size_t d = 0; d < table.datasets.size(); ++d) {
        double best = table.values[d][0];
        for (double v : table.values[d]) best = std::max(best, v);
        for (std::size_t s = 0; s < table.systems.size(); ++s) {
            table.averages[s] += table.values[d][s];
            if (table.values[d][s] == best) ++table.best_on[s];
        }
    }
    for (double& avg : table.averages) avg /= static_cast<double>(table.datasets.size());
    return table;
}

std::string table_to_tsv(const ComparisonTable& table) {
    std::ostringstream out;
    out << "dataset";
    for (const std::string& system : table.systems) out << '\t' << system;
    out << '\n';
    for (std::size_t d = 0; d < table.datasets.size(); ++d) {
        out << table.datasets[d];
        for (double v : table.values[d]) out << '\t' << format_value(v);
        out << '\n';
    }
    out << "average";
    for (double v : table.averages) out << '\t' << format_value(v);
    out << '\n';
    out << "best_on";
    for (std::size_t n : table.best_on) out << '\t' << n;
    out << '\n';
    return out.str();
}

void save_table(const ComparisonTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrKind::io, "cannot write table '" + path + "'");
    out << table_to_tsv(table);
    if (!out) fail(ErrKind::io, "error while writing '" + path + "'");
}

}  // namespace densecrab
