// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "lsrom/ann_index.hpp"
#include "lsrom/csv_io.hpp"
#include "lsrom/harness.hpp"
#include "lsrom/refine.hpp"
#include "lsrom/tlrs.hpp"
#include "oracles.hpp"

using namespace lsrom;
namespace fs = std::filesystem;

#ifndef LSROM_CLI_PATH
#error "LSROM_CLI_PATH must name the lsrom executable"
#endif

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += !pass;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunConfig seeded(std::uint64_t s) {
    RunConfig cfg;
    cfg.rsom.seed = s;
    cfg.merge.ann.seed = s;
    return cfg;
}

DataChunk two_blob_instance(std::uint64_t s) {
    BaseSpec b;
    b.means = {{0, 0}, {10, 0}};
    b.weights = {3333, 667};
    b.seed = 100 + s;
    return b.sample(4000);
}

// kStar values of the first two criteria, reused by the exact-search check.
std::vector<std::size_t> c1_kstar, c2_kstar;

void criterion1() {
    int exact = 0;
    double total_ms = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto run = run_chunk(two_blob_instance(s), seeded(s));
        total_ms += run.report.runtime_ms;
        c1_kstar.push_back(run.trace.k_star);
        exact += run.trace.k_star == 2 && *run.report.nmi == 1.0 && *run.report.dcv == 0.0;
    }
    report(1, "separated blobs", exact == 10 && total_ms < 10000.0,
           fmt("%d/10 runs with kStar=2, NMI=1, DCV=0; total %.2f s", exact, total_ms / 1000.0));
}

void criterion2() {
    int hits = 0;
    double nmi_sum = 0.0, worst_ms = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto run = run_chunk(four_blob_spec(200 + s).sample(100000), seeded(s));
        c2_kstar.push_back(run.trace.k_star);
        hits += run.trace.k_star == 4;
        nmi_sum += *run.report.nmi;
        worst_ms = std::max(worst_ms, run.report.runtime_ms);
    }
    const double mean = nmi_sum / 10.0;
    report(2, "imbalanced four blobs", hits >= 8 && mean >= 0.90 && worst_ms < 60000.0,
           fmt("%d/10 runs with kStar=4; mean NMI %.4f; slowest run %.2f s", hits, mean, worst_ms / 1000.0));
}

void criterion3() {
    const auto r = run_bench({100000, 200000, 400000, 800000}, four_blob_spec(300), seeded(0));
    std::string rows;
    for (const auto& row : r.rows) rows += fmt(" n=%zu:%.0fms", row.n, row.runtime_ms);
    report(3, "scaling", r.exponent && *r.exponent <= 1.35, fmt("alpha %.3f;", r.exponent.value_or(-1.0)) + rows);
}

void criterion4() {
    int wins = 0;
    double gap = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto chunk = make_bridged_blobs(1000, 150, 12.0, 0.3, 900 + s);
        const auto full = run_ablation(AblationVariant::full, chunk, seeded(s));
        const auto no_rp = run_ablation(AblationVariant::no_rp, chunk, seeded(s));
        wins += *full.report.nmi >= *no_rp.report.nmi;
        gap += (*full.report.nmi - *no_rp.report.nmi) / 10.0;
    }
    report(4, "bridge-node removal", wins >= 9 && gap >= 0.02, fmt("full >= no-rp in %d/10 seeds; mean gap %.4f", wins, gap));
}

void criterion5() {
    const auto rows = run_sensitivity({8, 9, 10, 11, 12}, {7, 9, 11, 13, 15}, four_blob_spec(200).sample(100000),
                                      seeded(0));
    double lo = 1.0, hi = 0.0;
    for (const auto& r : rows) lo = std::min(lo, r.nmi), hi = std::max(hi, r.nmi);
    report(5, "parameter robustness", rows.size() == 25 && hi - lo <= 0.08,
           fmt("%zu cells; NMI in [%.4f, %.4f], range %.4f", rows.size(), lo, hi, hi - lo));
}

// Oracle suites: independent brute-force recomputation on random instances.
void criterion6() {
    std::mt19937 gen(2024);
    std::size_t bad_ssq = 0, bad_radius = 0, bad_ratio = 0, bad_sep = 0, instances = 0;
    for (int inst = 0; inst < 150; ++inst, ++instances) {
        const std::size_t n = 8 + gen() % 60, f = 1 + gen() % 4, k = 2 + gen() % 4;
        DataChunk chunk;
        chunk.objects = oracle::uniform_points(n, f, 7000 + inst);
        std::vector<std::size_t> assign(n);
        for (std::size_t i = 0; i < n; ++i) assign[i] = i < k ? i : gen() % k;
        const auto p = Partition::from_assignment(chunk.objects, assign);
        bad_ssq += std::abs(ssq(chunk, p) - oracle::ssq(chunk.objects, assign)) > 1e-9;

        TopologyModel t;
        const std::size_t q = 3 + gen() % 18;
        t.centers = oracle::uniform_points(q, f, 9000 + inst);
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        for (std::size_t i = 1; i < q; ++i) edges.emplace_back(gen() % i, i);
        for (std::size_t e = 0; e < q; ++e) {
            const std::size_t a = gen() % q, b = gen() % q;
            if (a != b) edges.emplace_back(std::min(a, b), std::max(a, b));
        }
        t.adjacency = adjacency_from_edges(q, edges);
        std::vector<std::vector<int>> adj(q, std::vector<int>(q));
        for (std::size_t i = 0; i < q; ++i)
            for (std::size_t j = 0; j < q; ++j) adj[i][j] = t.adjacency[i][j];
        std::vector<double> radii(q);
        for (std::size_t i = 0; i < q; ++i) {
            radii[i] = oracle::local_radius(t.centers, adj, i);
            bad_radius += std::abs(local_radius(t, i) - radii[i]) > 1e-9;
        }
        const auto lib_radii = compute_radii(t);
        for (std::size_t i = 0; i < q; ++i) {
            bad_ratio += std::abs(radius_ratio(t, lib_radii, i) - oracle::radius_ratio(adj, radii, i)) > 1e-9;
        }

        const std::size_t ni = 1 + gen() % 500, nj = 1 + gen() % 500;
        const double vi = 1e-4 + (gen() % 1000) / 2000.0, vj = 1e-4 + (gen() % 1000) / 2000.0;
        const double want = oracle::separation(static_cast<double>(ni), vi, static_cast<double>(nj), vj, 1e-12);
        bad_sep += std::abs(separation(ni, vi, nj, vj) - want) > 1e-9 * want;
    }
    const bool a = bad_ssq + bad_radius + bad_ratio + bad_sep == 0;

    const auto pts = oracle::uniform_points(5000, 2, 1);
    const auto queries = oracle::uniform_points(100, 2, 2);
    const auto index = AnnIndex::build(pts);
    std::size_t hit = 0;
    for (std::size_t qi = 0; qi < 100; ++qi) {
        const auto q = queries.row(qi);
        std::set<std::uint64_t> truth;
        for (const auto& nb : exact_knn(pts, q, 10)) truth.insert(nb.id);
        for (const auto& nb : index.knn(q, 10)) hit += truth.count(nb.id);
    }
    const double recall = static_cast<double>(hit) / 1000.0;
    const bool b = recall >= 0.9;

    std::size_t same = 0, total = 0;
    for (std::uint64_t s = 0; s < c1_kstar.size(); ++s, ++total) {
        auto cfg = seeded(s);
        cfg.merge.search = KnnSearch::exact;
        same += run_chunk(two_blob_instance(s), cfg).trace.k_star == c1_kstar[s];
    }
    for (std::uint64_t s = 0; s < c2_kstar.size(); ++s, ++total) {
        auto cfg = seeded(s);
        cfg.merge.search = KnnSearch::exact;
        same += run_chunk(four_blob_spec(200 + s).sample(100000), cfg).trace.k_star == c2_kstar[s];
    }
    const bool c = total == 20 && same == total;
    report(6, "oracle equivalence", a && b && c,
           fmt("(a) %zu instances, mismatches ssq=%zu radius=%zu ratio=%zu separation=%zu; (b) recall %.3f; "
               "(c) exact search keeps kStar on %zu/%zu instances",
               instances, bad_ssq, bad_radius, bad_ratio, bad_sep, recall, same, total));
}

std::string chunk_bytes(const DataChunk& c) {
    std::ostringstream out;
    write_chunk_csv(out, c);
    return out.str();
}

void criterion7() {
    TlrsSpec spec;
    spec.base = make_gaussian_base(
        {{{0, 0}, {1, 1}, 300}, {{8, 0}, {1, 1}, 1200}, {{0, 8}, {1, 1}, 2500}, {{8, 8}, {1, 1}, 6000}}, 77);
    spec.ir = 10;
    spec.chunk_count = 500;
    spec.seed = 31;
    std::size_t bad_kt = 0, bad_draw = 0, bad_ir = 0, bad_replay = 0;
    const auto stream = generate_stream(spec);
    for (std::size_t t = 0; t < stream.size(); ++t) {
        const auto& [chunk, r] = stream[t];
        bad_kt += r.kt < 2 || r.kt > 4;
        for (auto d : r.ir_draws) bad_draw += d < 2 || d > 10;
        std::map<std::int64_t, std::size_t> counts;
        for (auto l : *chunk.labels) ++counts[l];
        std::size_t lo = SIZE_MAX, hi = 0;
        for (const auto& [l, c] : counts) lo = std::min(lo, c), hi = std::max(hi, c);
        if (!r.clamped) bad_ir += static_cast<double>(hi) / static_cast<double>(lo) > 10.0;
        const auto replay = generate_chunk_with_seed(spec, r.index, r.seed);
        bad_replay += chunk_bytes(replay.first) != chunk_bytes(chunk);
    }
    report(7, "TLRS contract", stream.size() == 500 && bad_kt + bad_draw + bad_ir + bad_replay == 0,
           fmt("%zu recipes; violations kt=%zu draws=%zu ir=%zu replay=%zu", stream.size(), bad_kt, bad_draw, bad_ir,
               bad_replay));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion8() {
    const auto root = fs::temp_directory_path() / ("lsrom_accept_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    auto run_cli = [&](const std::string& name) {
        const auto cmd = std::string(LSROM_CLI_PATH) + " run --synthetic two-blob --n 4000 --data-seed 5 --seed 11" +
                         " --emit-stages --out " + (root / name).string() + " > " + (root / (name + ".log")).string() +
                         " 2>&1";
        return std::system(cmd.c_str());
    };
    const int ra = run_cli("a"), rb = run_cli("b");
    std::size_t files = 0, differ = 0;
    if (ra == 0 && rb == 0) {
        for (const auto& entry : fs::directory_iterator(root / "a")) {
            const auto ext = entry.path().extension();
            if (ext != ".json" && ext != ".csv") continue;
            ++files;
            const auto other = root / "b" / entry.path().filename();
            differ += !fs::exists(other) || slurp(entry.path()) != slurp(other);
        }
    }
    fs::remove_all(root);
    report(8, "determinism", ra == 0 && rb == 0 && files >= 6 && differ == 0,
           fmt("exit codes %d/%d; %zu JSON/CSV files compared, %zu differ", ra, rb, files, differ));
}

}  // namespace

int main() {
    const std::vector<std::pair<int, std::function<void()>>> criteria{
        {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
        {5, criterion5}, {6, criterion6}, {7, criterion7}, {8, criterion8}};
    for (const auto& [id, check] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            check();
        } catch (const std::exception& e) {
            report(id, "error", false, e.what());
        }
        std::printf("  (criterion %d took %.1f s)\n", id, seconds_since(t0));
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
