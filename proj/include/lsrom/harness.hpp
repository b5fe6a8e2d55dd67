#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lsrom/core.hpp"
#include "lsrom/merge.hpp"
#include "lsrom/metrics.hpp"
#include "lsrom/refine.hpp"
#include "lsrom/rsom.hpp"
#include "lsrom/tlrs.hpp"

namespace lsrom {

struct RunConfig {
    RsomParams rsom{};
    MergeParams merge{};
    std::size_t kmeans_max_iters = 100;
    bool refine = true;  // bridge-node removal
    bool emit_stages = false;
    bool deterministic = true;
    std::filesystem::path output_dir = ".";

    void validate() const;
};

struct ChunkRun {
    Partition partition;
    MergeTrace trace;
    EvalReport report;
    std::size_t grid_side_used = 0;
    bool grid_side_lowered = false;
    std::optional<TrainedSom> som;                 // kept when emit_stages is set
    std::optional<MicroClusterModel> finetuned;    // idem
    std::optional<MicroClusterModel> refined;      // idem
};

// normalize -> train -> fine-tune -> bridge-node removal -> merge.
ChunkRun run_chunk(const DataChunk& chunk, const RunConfig& config, const std::string& chunk_id = "");

struct Aggregate {
    std::size_t chunks = 0;
    double nmi_mean = 0.0, nmi_std = 0.0;
    double dcv_mean = 0.0, dcv_std = 0.0;
    double runtime_mean = 0.0, runtime_std = 0.0;
    std::size_t scored = 0;  // chunks with labels
};

struct StreamResult {
    std::vector<EvalReport> per_chunk;
    std::vector<std::string> skipped;  // files that failed to parse, with the reason
    Aggregate aggregate;
};

// Mean and population standard deviation over the rows that carry each metric.
Aggregate aggregate_reports(const std::vector<EvalReport>& rows);

// Processes the *.csv chunk files of `chunk_dir` in filename order, appending
// one row per chunk to `results_csv` as it completes; the aggregate block goes
// to `results_csv` with suffix .summary.json. With `resume`, rows already
// present in `results_csv` are kept and their chunks skipped.
StreamResult run_stream(const std::filesystem::path& chunk_dir, const RunConfig& config,
                        const std::filesystem::path& results_csv, bool resume = false);

struct BenchRow {
    std::size_t n = 0;
    double runtime_ms = 0.0;
    std::size_t k_star = 0;
};

struct BenchResult {
    std::vector<BenchRow> rows;
    std::optional<double> exponent;  // slope of log(runtime) on log(n); needs two sizes
};

// Gaussian mixture of `clusters` sized to n with proportions `weights`, in 2-D.
struct BaseSpec {
    std::vector<std::vector<double>> means;
    std::vector<double> weights;
    double variance = 1.0;
    std::uint64_t seed = 0;

    DataChunk sample(std::size_t n) const;
};

// Four blobs with the size profile (5000, 20000, 40000, 99350): IR 19.87.
BaseSpec four_blob_spec(std::uint64_t seed);

// Two unit-variance blobs centred `gap` apart on the x axis, joined by a thin
// strip of `bridge` points spread uniformly over x in [2, gap - 2] with normal
// y noise of deviation `strip_std`. Strip points carry the nearer blob's label.
DataChunk make_bridged_blobs(std::size_t per_blob, std::size_t bridge, double gap, double strip_std,
                             std::uint64_t seed);

double fit_loglog_slope(const std::vector<BenchRow>& rows);

BenchResult run_bench(const std::vector<std::size_t>& sizes, const BaseSpec& base, const RunConfig& config);

struct SensitivityRow {
    std::size_t q = 0;
    std::size_t kappa = 0;
    std::size_t k_star = 0;
    double nmi = 0.0;
    double dcv = 0.0;
};

std::vector<SensitivityRow> run_sensitivity(const std::vector<std::size_t>& q_range,
                                            const std::vector<std::size_t>& kappa_range, const DataChunk& chunk,
                                            const RunConfig& config);

enum class AblationVariant { full, no_finetune, no_rp, sgms_placeholder_off };

AblationVariant parse_variant(const std::string& name);
std::string variant_name(AblationVariant v);

struct AblationReport {
    std::string variant;
    bool available = true;  // false for the SGMS placeholder
    EvalReport report;
    std::size_t k_star = 0;
};

AblationReport run_ablation(AblationVariant variant, const DataChunk& chunk, const RunConfig& config);

}  // namespace lsrom
