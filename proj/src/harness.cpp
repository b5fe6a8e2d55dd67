#include "lsrom/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "lsrom/csv_io.hpp"
#include "lsrom/rng.hpp"
#include "lsrom/serialize.hpp"

namespace lsrom {

void RunConfig::validate() const {
    rsom.validate();
    merge.validate();
}

ChunkRun run_chunk(const DataChunk& chunk, const RunConfig& config, const std::string& chunk_id) {
    config.validate();
    chunk.validate();
    ChunkRun run;
    auto [trace, ms] = timed([&] {
        const auto data = normalize_min_max(chunk);
        auto params = config.rsom;
        if (data.size() < params.neurons()) {
            params.grid_side = static_cast<std::size_t>(std::sqrt(static_cast<double>(data.size())));
            while (params.grid_side * params.grid_side > data.size()) --params.grid_side;
            if (params.grid_side < 2) throw InvalidInput("chunk has fewer than 4 objects; cannot build a 2x2 map");
            run.grid_side_lowered = true;
        }
        run.grid_side_used = params.grid_side;
        auto som = train(data, params);
        auto micro = kmeans_finetune(data, som, config.kmeans_max_iters);
        if (config.emit_stages) run.finetuned = micro;
        if (config.refine) micro = refine_partition(data, std::move(micro));
        if (config.emit_stages) {
            run.som = std::move(som);
            run.refined = micro;
        }
        return run_merge(data, micro, config.merge);
    });
    run.trace = std::move(trace);
    run.partition = run.trace.final_partition;
    run.report.chunk_id = chunk_id.empty() ? "chunk_" + std::to_string(chunk.timestamp) : chunk_id;
    run.report.n = chunk.size();
    run.report.k_pred = run.partition.k;
    run.report.runtime_ms = ms;
    if (chunk.labels) score_against(run.report, run.partition.assignment, *chunk.labels);
    return run;
}

Aggregate aggregate_reports(const std::vector<EvalReport>& rows) {
    Aggregate a;
    a.chunks = rows.size();
    auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
        mean = sd = 0.0;
        if (v.empty()) return;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        for (double x : v) sd += (x - mean) * (x - mean);
        sd = std::sqrt(sd / static_cast<double>(v.size()));
    };
    std::vector<double> nmis, dcvs, times;
    for (const auto& r : rows) {
        if (r.nmi) nmis.push_back(*r.nmi);
        if (r.dcv) dcvs.push_back(*r.dcv);
        times.push_back(r.runtime_ms);
    }
    a.scored = nmis.size();
    stats(nmis, a.nmi_mean, a.nmi_std);
    stats(dcvs, a.dcv_mean, a.dcv_std);
    stats(times, a.runtime_mean, a.runtime_std);
    return a;
}

namespace {

EvalReport parse_result_row(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 7) throw InvalidInput("malformed results row: " + line);
    EvalReport r;
    r.chunk_id = cells[0];
    r.n = std::stoull(cells[1]);
    r.k_pred = std::stoull(cells[2]);
    if (!cells[3].empty()) r.k_true = std::stoull(cells[3]);
    if (!cells[4].empty()) r.nmi = std::stod(cells[4]);
    if (!cells[5].empty()) r.dcv = std::stod(cells[5]);
    r.runtime_ms = std::stod(cells[6]);
    return r;
}

}  // namespace

StreamResult run_stream(const std::filesystem::path& chunk_dir, const RunConfig& config,
                        const std::filesystem::path& results_csv, bool resume) {
    namespace fs = std::filesystem;
    config.validate();
    if (!fs::is_directory(chunk_dir)) throw InvalidInput("chunk directory not found: " + chunk_dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(chunk_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        return a.filename().string() < b.filename().string();
    });
    if (files.empty()) throw InvalidInput("no chunk files in " + chunk_dir.string());

    StreamResult result;
    std::map<std::string, bool> done;
    if (resume && fs::exists(results_csv)) {
        std::ifstream in(results_csv);
        std::string line;
        std::getline(in, line);
        if (line != eval_csv_header()) throw InvalidInput("results file has an unexpected header: " + results_csv.string());
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            result.per_chunk.push_back(parse_result_row(line));
            done[result.per_chunk.back().chunk_id] = true;
        }
    } else {
        std::ofstream out(results_csv, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + results_csv.string());
        out << eval_csv_header() << '\n';
    }

    std::ofstream out(results_csv, std::ios::app);
    if (!out) throw std::runtime_error("cannot append to " + results_csv.string());
    for (std::size_t t = 0; t < files.size(); ++t) {
        const auto id = files[t].stem().string();
        if (done.count(id)) continue;
        DataChunk chunk;
        try {
            chunk = read_chunk_csv(files[t], t);
            chunk.validate();
        } catch (const InvalidInput& e) {
            std::cerr << "skipping " << files[t].filename().string() << ": " << e.what() << '\n';
            result.skipped.push_back(files[t].filename().string() + ": " + e.what());
            continue;
        }
        auto run = run_chunk(chunk, config, id);
        out << to_csv_row(run.report) << '\n';
        out.flush();
        result.per_chunk.push_back(std::move(run.report));
    }

    result.aggregate = aggregate_reports(result.per_chunk);
    auto summary = to_json(result.aggregate);
    summary["skipped"] = result.skipped;
    std::ofstream sum(results_csv.string() + ".summary.json", std::ios::trunc);
    sum << summary.dump(2) << '\n';
    return result;
}

DataChunk BaseSpec::sample(std::size_t n) const {
    if (means.size() < 2 || means.size() != weights.size()) throw InvalidInput("base spec: need matching means and weights");
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw InvalidInput("base spec: weights must be positive");
        total += w;
    }
    // Largest-remainder apportionment of n over the weights.
    std::vector<std::size_t> counts(weights.size());
    std::vector<std::pair<double, std::size_t>> rest;
    std::size_t used = 0;
    for (std::size_t c = 0; c < weights.size(); ++c) {
        const double exact = static_cast<double>(n) * weights[c] / total;
        counts[c] = static_cast<std::size_t>(std::floor(exact));
        used += counts[c];
        rest.emplace_back(-(exact - std::floor(exact)), c);
    }
    std::sort(rest.begin(), rest.end());
    for (std::size_t r = 0; used < n; ++r, ++used) ++counts[rest[r % rest.size()].second];

    std::vector<GaussianCluster> clusters;
    for (std::size_t c = 0; c < means.size(); ++c) {
        clusters.push_back({means[c], std::vector<double>(means[c].size(), variance), std::max<std::size_t>(counts[c], 1)});
    }
    return make_gaussian_base(clusters, seed);
}

BaseSpec four_blob_spec(std::uint64_t seed) {
    BaseSpec spec;
    spec.means = {{0.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}, {10.0, 10.0}};
    spec.weights = {5000, 20000, 40000, 99350};
    spec.variance = 1.0;
    spec.seed = seed;
    return spec;
}

DataChunk make_bridged_blobs(std::size_t per_blob, std::size_t bridge, double gap, double strip_std,
                             std::uint64_t seed) {
    if (per_blob == 0) throw InvalidInput("bridged blobs: per_blob must be positive");
    if (!(gap > 4.0)) throw InvalidInput("bridged blobs: gap must exceed 4");
    if (!(strip_std >= 0.0)) throw InvalidInput("bridged blobs: strip deviation must be non-negative");
    Rng rng(derive_seed(seed, 0xB1));
    const auto n = 2 * per_blob + bridge;
    DataChunk chunk;
    chunk.objects = Matrix(n, 2);
    Labels labels(n);
    std::size_t r = 0;
    for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t i = 0; i < per_blob; ++i, ++r) {
            chunk.objects(r, 0) = static_cast<double>(b) * gap + standard_normal(rng);
            chunk.objects(r, 1) = standard_normal(rng);
            labels[r] = static_cast<long>(b);
        }
    }
    for (std::size_t i = 0; i < bridge; ++i, ++r) {
        const double x = 2.0 + (gap - 4.0) * uniform01(rng);
        chunk.objects(r, 0) = x;
        chunk.objects(r, 1) = strip_std * standard_normal(rng);
        labels[r] = x < gap / 2.0 ? 0 : 1;
    }
    chunk.labels = std::move(labels);
    return chunk;
}

double fit_loglog_slope(const std::vector<BenchRow>& rows) {
    if (rows.size() < 2) throw InvalidInput("slope fit needs at least two sizes");
    double mx = 0.0, my = 0.0;
    for (const auto& r : rows) {
        mx += std::log(static_cast<double>(r.n));
        my += std::log(std::max(r.runtime_ms, 1e-9));
    }
    mx /= static_cast<double>(rows.size());
    my /= static_cast<double>(rows.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& r : rows) {
        const double x = std::log(static_cast<double>(r.n)) - mx;
        sxy += x * (std::log(std::max(r.runtime_ms, 1e-9)) - my);
        sxx += x * x;
    }
    if (sxx == 0.0) throw InvalidInput("slope fit needs distinct sizes");
    return sxy / sxx;
}

BenchResult run_bench(const std::vector<std::size_t>& sizes, const BaseSpec& base, const RunConfig& config) {
    if (!std::is_sorted(sizes.begin(), sizes.end())) throw InvalidInput("bench sizes must be ascending");
    BenchResult result;
    for (auto n : sizes) {
        const auto chunk = base.sample(n);
        const auto run = run_chunk(chunk, config);
        result.rows.push_back({n, run.report.runtime_ms, run.trace.k_star});
    }
    if (result.rows.size() >= 2) result.exponent = fit_loglog_slope(result.rows);
    return result;
}

std::vector<SensitivityRow> run_sensitivity(const std::vector<std::size_t>& q_range,
                                            const std::vector<std::size_t>& kappa_range, const DataChunk& chunk,
                                            const RunConfig& config) {
    if (q_range.empty() || kappa_range.empty()) throw InvalidInput("sensitivity ranges must be nonempty");
    if (!chunk.labels) throw InvalidInput("sensitivity sweep needs a labelled chunk");
    std::vector<SensitivityRow> rows;
    for (auto q : q_range) {
        for (auto kappa : kappa_range) {
            auto cfg = config;
            cfg.rsom.grid_side = q;
            cfg.merge.kappa = kappa;
            const auto run = run_chunk(chunk, cfg);
            rows.push_back({q, kappa, run.trace.k_star, *run.report.nmi, *run.report.dcv});
        }
    }
    return rows;
}

AblationVariant parse_variant(const std::string& name) {
    if (name == "full") return AblationVariant::full;
    if (name == "no-finetune") return AblationVariant::no_finetune;
    if (name == "no-rp") return AblationVariant::no_rp;
    if (name == "sgms-placeholder-off") return AblationVariant::sgms_placeholder_off;
    throw InvalidInput("unknown ablation variant: " + name);
}

std::string variant_name(AblationVariant v) {
    switch (v) {
        case AblationVariant::full: return "full";
        case AblationVariant::no_finetune: return "no-finetune";
        case AblationVariant::no_rp: return "no-rp";
        case AblationVariant::sgms_placeholder_off: return "sgms-placeholder-off";
    }
    return "full";
}

AblationReport run_ablation(AblationVariant variant, const DataChunk& chunk, const RunConfig& config) {
    auto cfg = config;
    AblationReport out;
    out.variant = variant_name(variant);
    switch (variant) {
        case AblationVariant::full: break;
        case AblationVariant::no_finetune: cfg.kmeans_max_iters = 0; break;
        case AblationVariant::no_rp: cfg.refine = false; break;
        case AblationVariant::sgms_placeholder_off: out.available = false; break;
    }
    const auto run = run_chunk(chunk, cfg);
    out.report = run.report;
    out.k_star = run.trace.k_star;
    return out;
}

}  // namespace lsrom
