#include "lsrom/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lsrom/csv_io.hpp"

namespace lsrom {

double nmi(std::span<const std::int64_t> pred, std::span<const std::int64_t> truth) {
    if (pred.size() != truth.size()) throw InvalidInput("nmi: label vectors differ in length");
    if (pred.empty()) throw InvalidInput("nmi: empty label vectors");
    std::map<std::int64_t, std::size_t> a_count, b_count;
    std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> joint;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ++a_count[pred[i]];
        ++b_count[truth[i]];
        ++joint[{pred[i], truth[i]}];
    }
    if (a_count.size() < 2 || b_count.size() < 2) return 0.0;
    const double n = static_cast<double>(pred.size());
    auto entropy = [&](const std::map<std::int64_t, std::size_t>& counts) {
        double h = 0.0;
        for (const auto& [label, c] : counts) {
            const double p = static_cast<double>(c) / n;
            h -= p * std::log(p);
        }
        return h;
    };
    double mi = 0.0;
    for (const auto& [key, c] : joint) {
        const double pij = static_cast<double>(c) / n;
        const double pi = static_cast<double>(a_count[key.first]) / n;
        const double pj = static_cast<double>(b_count[key.second]) / n;
        mi += pij * std::log(pij / (pi * pj));
    }
    const double value = mi / std::sqrt(entropy(a_count) * entropy(b_count));
    return std::clamp(value, 0.0, 1.0);
}

double coefficient_of_variation(std::span<const std::size_t> sizes) {
    if (sizes.empty()) throw InvalidInput("coefficient of variation of an empty size vector");
    if (sizes.size() == 1) return 0.0;
    double mean = 0.0;
    for (auto s : sizes) {
        if (s == 0) throw InvalidInput("cluster sizes must be positive");
        mean += static_cast<double>(s);
    }
    mean /= static_cast<double>(sizes.size());
    double var = 0.0;
    for (auto s : sizes) var += (static_cast<double>(s) - mean) * (static_cast<double>(s) - mean);
    var /= static_cast<double>(sizes.size());
    return std::sqrt(var) / mean;
}

double dcv(std::span<const std::size_t> pred_sizes, std::span<const std::size_t> true_sizes) {
    return std::abs(coefficient_of_variation(pred_sizes) - coefficient_of_variation(true_sizes));
}

std::vector<std::size_t> label_sizes(std::span<const std::int64_t> labels) {
    std::map<std::int64_t, std::size_t> counts;
    for (auto l : labels) ++counts[l];
    std::vector<std::size_t> out;
    out.reserve(counts.size());
    for (const auto& [label, c] : counts) out.push_back(c);
    return out;
}

void score_against(EvalReport& report, std::span<const std::size_t> assignment, const Labels& truth) {
    if (assignment.size() != truth.size()) throw InvalidInput("score: assignment and labels differ in length");
    Labels pred(assignment.begin(), assignment.end());
    report.nmi = nmi(pred, truth);
    const auto ps = label_sizes(pred);
    const auto ts = label_sizes(truth);
    report.dcv = dcv(ps, ts);
    report.k_true = ts.size();
}

std::string eval_csv_header() { return "chunk_id,n,k_pred,k_true,nmi,dcv,runtime_ms"; }

std::string to_csv_row(const EvalReport& r) {
    auto opt = [](const auto& v) { return v ? format_double(static_cast<double>(*v)) : std::string(); };
    return r.chunk_id + "," + std::to_string(r.n) + "," + std::to_string(r.k_pred) + "," +
           (r.k_true ? std::to_string(*r.k_true) : std::string()) + "," + opt(r.nmi) + "," + opt(r.dcv) + "," +
           format_double(r.runtime_ms);
}

}  // namespace lsrom
