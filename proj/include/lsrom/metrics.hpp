#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "lsrom/core.hpp"

namespace lsrom {

// Normalised mutual information with the geometric-mean normaliser. Returns
// 0 when either partition has a single cluster.
double nmi(std::span<const std::int64_t> pred, std::span<const std::int64_t> truth);

// Population standard deviation over mean of the cluster sizes (0 for one cluster).
double coefficient_of_variation(std::span<const std::size_t> sizes);

// |CV(pred) - CV(truth)|.
double dcv(std::span<const std::size_t> pred_sizes, std::span<const std::size_t> true_sizes);

// Cluster cardinalities of a label vector, in ascending label order.
std::vector<std::size_t> label_sizes(std::span<const std::int64_t> labels);

struct EvalReport {
    std::string chunk_id;
    std::size_t n = 0;
    std::size_t k_pred = 0;
    std::optional<std::size_t> k_true;
    std::optional<double> nmi;
    std::optional<double> dcv;
    double runtime_ms = 0.0;
};

// Fills nmi, dcv and k_true from ground-truth labels.
void score_against(EvalReport& report, std::span<const std::size_t> assignment, const Labels& truth);

std::string eval_csv_header();
std::string to_csv_row(const EvalReport& report);

template <typename F>
auto timed(F&& action) {
    const auto start = std::chrono::steady_clock::now();
    auto result = std::forward<F>(action)();
    const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
    return std::pair{std::move(result), elapsed.count()};
}

}  // namespace lsrom
