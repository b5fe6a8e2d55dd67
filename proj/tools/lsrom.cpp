#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lsrom/csv_io.hpp"
#include "lsrom/harness.hpp"
#include "lsrom/metrics.hpp"
#include "lsrom/serialize.hpp"
#include "lsrom/tlrs.hpp"

namespace fs = std::filesystem;
using namespace lsrom;

namespace {

constexpr int exit_invalid = 2;
constexpr int exit_failure = 3;

// Pipeline options shared by run, stream, bench, sweep and ablate. Unset
// optionals leave the config file (or default) value in place.
struct PipelineFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> grid_side;
    std::optional<std::size_t> kappa;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> kmeans_max_iters;
    bool exact = false;
    bool no_refine = false;

    void add_to(CLI::App* app) {
        app->add_option("--config", config_path, "JSON file mirroring the run configuration");
        app->add_option("--seed", seed, "RNG seed (overrides LSROM_SEED and the config file)");
        app->add_option("--q", grid_side, "SOM grid side Q");
        app->add_option("--kappa", kappa, "neighbours per object for separability");
        app->add_option("--epochs", epochs, "SOM training epochs");
        app->add_option("--kmeans-max-iters", kmeans_max_iters, "fine-tuning iteration cap");
        app->add_flag("--exact", exact, "exact neighbour search instead of the approximate index");
        app->add_flag("--no-refine", no_refine, "skip bridge-node removal");
    }

    // default < config file < LSROM_SEED (seed only) < command-line flag.
    RunConfig resolve() const {
        RunConfig c;
        if (!config_path.empty()) c = run_config_from_json(read_json_file(config_path), c);
        if (const char* env = std::getenv("LSROM_SEED"); env && *env) {
            std::size_t used = 0;
            std::uint64_t v = 0;
            try {
                v = std::stoull(env, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != std::string(env).size()) throw InvalidInput("LSROM_SEED is not an unsigned integer");
            set_seed(c, v);
        }
        if (seed) set_seed(c, *seed);
        if (grid_side) c.rsom.grid_side = *grid_side;
        if (kappa) c.merge.kappa = *kappa;
        if (epochs) c.rsom.epochs = *epochs;
        if (kmeans_max_iters) c.kmeans_max_iters = *kmeans_max_iters;
        if (exact) c.merge.search = KnnSearch::exact;
        if (no_refine) c.refine = false;
        c.validate();
        return c;
    }

    static void set_seed(RunConfig& c, std::uint64_t v) {
        c.rsom.seed = v;
        c.merge.ann.seed = v;
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

std::string report_row(const EvalReport& r, bool with_runtime) {
    auto row = to_csv_row(r);
    if (!with_runtime) row.erase(row.rfind(',') + 1);
    return row;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        try {
            if (colon == std::string::npos) {
                out.push_back(std::stoull(item));
            } else {
                const auto lo = std::stoull(item.substr(0, colon));
                const auto hi = std::stoull(item.substr(colon + 1));
                if (lo > hi) throw InvalidInput("empty range " + item);
                for (auto v = lo; v <= hi; ++v) out.push_back(v);
            }
        } catch (const std::logic_error&) {
            throw InvalidInput("bad number list: " + text);
        }
    }
    if (out.empty()) throw InvalidInput("empty number list");
    return out;
}

// Synthetic chunks addressable by name from the command line.
DataChunk synthetic_chunk(const std::string& name, std::size_t n, std::uint64_t seed) {
    if (name == "four-blob") return four_blob_spec(seed).sample(n);
    if (name == "two-blob") {
        BaseSpec spec;
        spec.means = {{0.0, 0.0}, {10.0, 0.0}};
        spec.weights = {5.0, 1.0};
        spec.seed = seed;
        return spec.sample(n);
    }
    if (name == "bridged") {
        // Two blobs of 1000 with a 150-point strip, scaled to n.
        const auto per_blob = n * 1000 / 2150;
        return make_bridged_blobs(per_blob, n - 2 * per_blob, 12.0, 0.3, seed);
    }
    if (name == "two-moons") return make_two_moons_base(n, 5.0, 0.05, seed);
    throw InvalidInput("unknown synthetic dataset: " + name + " (four-blob, two-blob, bridged, two-moons)");
}

struct ChunkSource {
    std::string input;
    std::string synthetic;
    std::size_t n = 10000;
    std::uint64_t data_seed = 0;

    void add_to(CLI::App* app) {
        app->add_option("--input", input, "chunk CSV file");
        app->add_option("--synthetic", synthetic, "generate the chunk instead: four-blob, two-blob, bridged, two-moons");
        app->add_option("--n", n, "object count for --synthetic");
        app->add_option("--data-seed", data_seed, "seed for --synthetic");
    }

    DataChunk load() const {
        if (!input.empty() && !synthetic.empty()) throw InvalidInput("use either --input or --synthetic");
        if (!input.empty()) return read_chunk_csv(fs::path(input));
        if (!synthetic.empty()) return synthetic_chunk(synthetic, n, data_seed);
        throw InvalidInput("a chunk is required: --input FILE or --synthetic NAME");
    }

    std::string id() const { return input.empty() ? synthetic : fs::path(input).stem().string(); }
};

int cmd_generate(const std::string& base_path, const std::string& synthetic, std::size_t n,
                 const std::string& base_out, double ir, std::size_t chunks, std::optional<std::size_t> cap,
                 std::uint64_t seed, const std::string& out_dir) {
    TlrsSpec spec;
    if (!base_path.empty() && !synthetic.empty()) throw InvalidInput("use either --base or --synthetic");
    if (!base_path.empty()) spec.base = read_chunk_csv(fs::path(base_path));
    else if (!synthetic.empty()) spec.base = synthetic_chunk(synthetic, n, seed);
    else throw InvalidInput("a base dataset is required: --base FILE or --synthetic NAME");
    spec.ir = ir;
    spec.chunk_count = chunks;
    spec.chunk_size_cap = cap;
    spec.seed = seed;
    spec.validate();

    const fs::path dir(out_dir);
    ensure_dir(dir);
    if (!base_out.empty()) write_chunk_csv(fs::path(base_out), spec.base);
    Json recipes = Json::array();
    for (std::size_t t = 0; t < spec.chunk_count; ++t) {
        auto [chunk, recipe] = generate_chunk(spec, t);
        std::ostringstream name;
        name << "chunk_" << std::setw(4) << std::setfill('0') << t << ".csv";
        write_chunk_csv(dir / name.str(), chunk);
        recipes.push_back(to_json(recipe));
    }
    write_json_file(dir / "recipes.json", recipes);
    std::cout << "wrote " << spec.chunk_count << " chunks to " << dir.string() << '\n';
    return 0;
}

int cmd_run(const ChunkSource& source, RunConfig config, const std::string& out_dir, bool emit_stages) {
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (emit_stages) config.emit_stages = true;
    const auto chunk = source.load();
    const auto run = run_chunk(chunk, config, source.id());

    const auto& dir = config.output_dir;
    ensure_dir(dir);
    const bool with_runtime = !config.deterministic;
    auto effective = to_json(config);
    effective.erase("outputDir");  // results do not depend on where they are written
    write_json_file(dir / "config.json", effective);
    write_json_file(dir / "trace.json", to_json(run.trace));
    write_text(dir / "curves.csv", curves_csv(run.trace));
    auto report = to_json(run.report, with_runtime);
    report["gridSideUsed"] = run.grid_side_used;
    report["gridSideLowered"] = run.grid_side_lowered;
    write_json_file(dir / "report.json", report);
    write_text(dir / "report.csv", eval_csv_header() + "\n" + report_row(run.report, with_runtime) + "\n");
    std::ostringstream assignment;
    assignment << "cluster\n";
    for (auto a : run.partition.assignment) assignment << a << '\n';
    write_text(dir / "assignment.csv", assignment.str());
    if (config.emit_stages) {
        write_json_file(dir / "som.json", to_json(*run.som));
        write_json_file(dir / "finetuned.json", to_json(*run.finetuned));
        write_json_file(dir / "refined.json", to_json(*run.refined));
    }
    if (run.grid_side_lowered) std::cerr << "note: grid side lowered to " << run.grid_side_used << '\n';
    std::cout << "k*=" << run.trace.k_star;
    if (run.report.nmi) std::cout << " nmi=" << format_double(*run.report.nmi);
    if (run.report.dcv) std::cout << " dcv=" << format_double(*run.report.dcv);
    std::cout << " runtime_ms=" << format_double(run.report.runtime_ms) << '\n';
    return 0;
}

int cmd_stream(const std::string& dir, const std::string& results, bool resume, const RunConfig& config) {
    const auto r = run_stream(dir, config, results, resume);
    std::cout << "chunks=" << r.per_chunk.size() << " skipped=" << r.skipped.size()
              << " nmi_mean=" << format_double(r.aggregate.nmi_mean)
              << " dcv_mean=" << format_double(r.aggregate.dcv_mean) << '\n';
    return 0;
}

int cmd_bench(const std::string& sizes_text, std::uint64_t data_seed, const std::string& out, const RunConfig& config) {
    const auto sizes = parse_size_list(sizes_text);
    const auto r = run_bench(sizes, four_blob_spec(data_seed), config);
    std::ostringstream csv;
    csv << "n,runtime_ms,k_star\n";
    for (const auto& row : r.rows) csv << row.n << ',' << format_double(row.runtime_ms) << ',' << row.k_star << '\n';
    write_text(out, csv.str());
    Json summary = {{"sizes", sizes}};
    summary["exponent"] = r.exponent ? Json(*r.exponent) : Json(nullptr);
    write_json_file(out + ".summary.json", summary);
    std::cout << csv.str();
    if (r.exponent) std::cout << "exponent=" << format_double(*r.exponent) << '\n';
    return 0;
}

int cmd_sweep(const ChunkSource& source, const std::string& q_text, const std::string& kappa_text,
              const std::string& out, const RunConfig& config) {
    const auto chunk = source.load();
    const auto rows = run_sensitivity(parse_size_list(q_text), parse_size_list(kappa_text), chunk, config);
    std::ostringstream csv;
    csv << "q,kappa,k_star,nmi,dcv\n";
    for (const auto& r : rows) {
        csv << r.q << ',' << r.kappa << ',' << r.k_star << ',' << format_double(r.nmi) << ',' << format_double(r.dcv)
            << '\n';
    }
    write_text(out, csv.str());
    std::cout << csv.str();
    return 0;
}

int cmd_ablate(const ChunkSource& source, const std::vector<std::string>& variants, const std::string& out,
               const RunConfig& config) {
    const auto chunk = source.load();
    std::vector<AblationVariant> parsed;
    for (const auto& v : variants) parsed.push_back(parse_variant(v));
    std::ostringstream csv;
    csv << "variant,available," << eval_csv_header() << '\n';
    for (auto v : parsed) {
        const auto r = run_ablation(v, chunk, config);
        csv << r.variant << ',' << (r.available ? "yes" : "no") << ',' << to_csv_row(r.report) << '\n';
        if (!r.available) std::cerr << "note: variant " << r.variant << " is unavailable; the full merge ran\n";
    }
    write_text(out, csv.str());
    std::cout << csv.str();
    return 0;
}

std::vector<std::size_t> read_assignment_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "cluster") throw InvalidInput("assignment file must start with header 'cluster'");
    std::vector<std::size_t> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t used = 0;
        try {
            out.push_back(std::stoull(line, &used));
        } catch (const std::logic_error&) {
            used = 0;
        }
        if (used != line.size()) throw InvalidInput("bad cluster id in " + path.string() + ": " + line);
    }
    return out;
}

int cmd_eval(const std::string& pred, const std::string& truth, const std::string& out) {
    const auto assignment = read_assignment_csv(pred);
    const auto chunk = read_chunk_csv(fs::path(truth));
    if (!chunk.labels) throw InvalidInput("truth file carries no label column");
    if (assignment.size() != chunk.size()) throw InvalidInput("prediction and truth differ in length");
    EvalReport r;
    r.chunk_id = fs::path(truth).stem().string();
    r.n = chunk.size();
    r.k_pred = std::set<std::size_t>(assignment.begin(), assignment.end()).size();
    score_against(r, assignment, *chunk.labels);
    const auto text = eval_csv_header() + "\n" + report_row(r, false) + "\n";
    if (!out.empty()) write_text(out, text);
    std::cout << text;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clustering of imbalanced data chunks with a randomized self-organizing map"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "sample imbalanced chunks from a labelled base dataset");
    std::string base_path, gen_synthetic, base_out, gen_out;
    std::size_t gen_n = 164350, gen_chunks = 1;
    double gen_ir = 10.0;
    std::optional<std::size_t> gen_cap;
    std::uint64_t gen_seed = 0;
    gen->add_option("--base", base_path, "labelled base chunk CSV");
    gen->add_option("--synthetic", gen_synthetic, "synthetic base instead: four-blob, two-blob, bridged, two-moons");
    gen->add_option("--n", gen_n, "object count of the synthetic base");
    gen->add_option("--base-out", base_out, "also write the base dataset here");
    gen->add_option("--ir", gen_ir, "largest imbalance ratio drawn");
    gen->add_option("--chunks", gen_chunks, "number of chunks");
    gen->add_option("--chunk-cap", gen_cap, "upper bound on objects per chunk");
    gen->add_option("--seed", gen_seed, "sampling seed");
    gen->add_option("--out", gen_out, "output directory")->required();

    auto* run = app.add_subcommand("run", "cluster a single chunk");
    PipelineFlags run_flags;
    ChunkSource run_source;
    std::string run_out;
    bool emit_stages = false;
    run_flags.add_to(run);
    run_source.add_to(run);
    run->add_option("--out", run_out, "output directory (default: config outputDir)");
    run->add_flag("--emit-stages", emit_stages, "also write the SOM and micro-cluster models");

    auto* stream = app.add_subcommand("stream", "cluster every chunk of a directory in filename order");
    PipelineFlags stream_flags;
    std::string stream_dir, stream_results = "results.csv";
    bool resume = false;
    stream_flags.add_to(stream);
    stream->add_option("--dir", stream_dir, "directory of chunk CSV files")->required();
    stream->add_option("--results", stream_results, "per-chunk results CSV");
    stream->add_flag("--resume", resume, "keep existing rows and skip their chunks");

    auto* bench = app.add_subcommand("bench", "time the pipeline over growing Gaussian chunks");
    PipelineFlags bench_flags;
    std::string bench_sizes = "100000,200000,400000,800000", bench_out = "bench.csv";
    std::uint64_t bench_data_seed = 0;
    bench_flags.add_to(bench);
    bench->add_option("--sizes", bench_sizes, "comma-separated object counts");
    bench->add_option("--data-seed", bench_data_seed, "seed of the Gaussian base");
    bench->add_option("--out", bench_out, "CSV output");

    auto* sweep = app.add_subcommand("sweep", "grid over Q and kappa on one chunk");
    PipelineFlags sweep_flags;
    ChunkSource sweep_source;
    std::string q_text = "8:12", kappa_text = "7,9,11,13,15", sweep_out = "sweep.csv";
    sweep_flags.add_to(sweep);
    sweep_source.add_to(sweep);
    sweep->add_option("--q-range", q_text, "Q values, e.g. 8:12 or 8,10,12");
    sweep->add_option("--kappa-range", kappa_text, "kappa values, e.g. 7,9,11");
    sweep->add_option("--out", sweep_out, "CSV output");

    auto* ablate = app.add_subcommand("ablate", "run pipeline variants on one chunk");
    PipelineFlags ablate_flags;
    ChunkSource ablate_source;
    std::vector<std::string> variants{"full", "no-finetune", "no-rp", "sgms-placeholder-off"};
    std::string ablate_out = "ablation.csv";
    ablate_flags.add_to(ablate);
    ablate_source.add_to(ablate);
    ablate->add_option("--variant", variants, "full, no-finetune, no-rp, sgms-placeholder-off");
    ablate->add_option("--out", ablate_out, "CSV output");

    auto* eval = app.add_subcommand("eval", "score an assignment file against a labelled chunk");
    std::string pred, truth, eval_out;
    eval->add_option("--pred", pred, "assignment CSV written by run")->required();
    eval->add_option("--truth", truth, "labelled chunk CSV")->required();
    eval->add_option("--out", eval_out, "CSV output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_invalid;
    }

    try {
        if (*gen) return cmd_generate(base_path, gen_synthetic, gen_n, base_out, gen_ir, gen_chunks, gen_cap, gen_seed, gen_out);
        if (*run) return cmd_run(run_source, run_flags.resolve(), run_out, emit_stages);
        if (*stream) return cmd_stream(stream_dir, stream_results, resume, stream_flags.resolve());
        if (*bench) return cmd_bench(bench_sizes, bench_data_seed, bench_out, bench_flags.resolve());
        if (*sweep) return cmd_sweep(sweep_source, q_text, kappa_text, sweep_out, sweep_flags.resolve());
        if (*ablate) return cmd_ablate(ablate_source, variants, ablate_out, ablate_flags.resolve());
        if (*eval) return cmd_eval(pred, truth, eval_out);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_invalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_invalid;
}
