#include "lsrom/serialize.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "lsrom/csv_io.hpp"

namespace lsrom {
namespace {

Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return rows;
}

Json edges_json(const TopologyModel& t) {
    Json out = Json::array();
    for (const auto& [i, j] : t.edges()) out.push_back({i, j});
    return out;
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& what) {
    if (!j.is_object()) throw InvalidInput(what + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw InvalidInput("unknown " + what + " key: " + key);
    }
}

template <typename T>
void read_field(const Json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("bad value for ") + key + ": " + e.what());
    }
}

std::string search_name(KnnSearch s) { return s == KnnSearch::exact ? "exact" : "approximate"; }
std::string scope_name(KnnScope s) { return s == KnnScope::full_chunk ? "fullChunk" : "topological"; }
std::string sep_mode_name(SepMode s) { return s == SepMode::max_radius_cluster ? "maxRadiusCluster" : "global"; }

}  // namespace

Json to_json(const RsomParams& p) {
    return {{"gridSide", p.grid_side},
            {"epochs", p.epochs},
            {"learningRateStart", p.learning_rate_start},
            {"learningRateEnd", p.learning_rate_end},
            {"sigmaStart", p.sigma_start},
            {"sigmaEnd", p.sigma_end},
            {"lloydIterations", p.lloyd_iterations},
            {"seed", p.seed}};
}

Json to_json(const MergeParams& p) {
    return {{"kappa", p.kappa},
            {"varianceFloor", p.variance_floor},
            {"densityFloor", p.density_floor},
            {"search", search_name(p.search)},
            {"scope", scope_name(p.scope)},
            {"sepMode", sep_mode_name(p.sep_mode)},
            {"ann",
             {{"maxDegree", p.ann.max_degree},
              {"efConstruction", p.ann.ef_construction},
              {"efSearch", p.ann.ef_search},
              {"seed", p.ann.seed}}}};
}

Json to_json(const RunConfig& c) {
    return {{"rsom", to_json(c.rsom)},
            {"merge", to_json(c.merge)},
            {"kmeansMaxIters", c.kmeans_max_iters},
            {"refine", c.refine},
            {"emitStages", c.emit_stages},
            {"deterministic", c.deterministic},
            {"outputDir", c.output_dir.string()}};
}

Json to_json(const TrainedSom& som) {
    return {{"centers", matrix_json(som.topology.centers)},
            {"gridPositions", matrix_json(som.topology.grid_positions)},
            {"adjacency", edges_json(som.topology)},
            {"quantizationError", som.quantization_error},
            {"params", to_json(som.params)},
            {"seed", som.params.seed}};
}

Json to_json(const MicroClusterModel& model) {
    Json removed = Json::array();
    for (const auto& r : model.removed_bridge_nodes) removed.push_back({{"index", r.index}, {"ratio", r.ratio}});
    return {{"centers", matrix_json(model.topology.centers)},
            {"adjacencyEdges", edges_json(model.topology)},
            {"assignment", model.partition.assignment},
            {"radii", model.radii},
            {"ratios", model.ratios},
            {"removed", removed},
            {"originalIndex", model.original_index},
            {"iterations", model.iterations}};
}

Json to_json(const MergeTrace& trace) {
    Json states = Json::array();
    for (const auto& s : trace.states) {
        Json pair = nullptr;
        if (s.merged_pair) pair = {s.merged_pair->first, s.merged_pair->second};
        states.push_back({{"k", s.k},
                          {"mergedPair", pair},
                          {"com", s.com},
                          {"sep", s.sep},
                          {"fallbackUsed", s.fallback_used},
                          {"kappaTruncated", s.kappa_truncated}});
    }
    return {{"states", states},
            {"kStar", trace.k_star},
            {"finalMergeCom", trace.final_merge_com},
            {"assignment", trace.final_partition.assignment}};
}

Json to_json(const EvalReport& r, bool with_runtime) {
    Json j = {{"chunkId", r.chunk_id}, {"n", r.n}, {"kPred", r.k_pred}};
    j["kTrue"] = r.k_true ? Json(*r.k_true) : Json(nullptr);
    j["nmi"] = r.nmi ? Json(*r.nmi) : Json(nullptr);
    j["dcv"] = r.dcv ? Json(*r.dcv) : Json(nullptr);
    if (with_runtime) j["runtimeMs"] = r.runtime_ms;
    return j;
}

Json to_json(const ChunkRecipe& r) {
    return {{"index", r.index},
            {"seed", r.seed},
            {"kt", r.kt},
            {"irDraws", r.ir_draws},
            {"sizes", r.sizes},
            {"sourceClusters", r.source_clusters},
            {"clamped", r.clamped},
            {"capped", r.capped}};
}

Json to_json(const Aggregate& a) {
    return {{"chunks", a.chunks},           {"scored", a.scored},           {"nmiMean", a.nmi_mean},
            {"nmiStd", a.nmi_std},          {"dcvMean", a.dcv_mean},        {"dcvStd", a.dcv_std},
            {"runtimeMsMean", a.runtime_mean}, {"runtimeMsStd", a.runtime_std}};
}

RsomParams rsom_params_from_json(const Json& j, RsomParams p) {
    reject_unknown(j,
                   {"gridSide", "epochs", "learningRateStart", "learningRateEnd", "sigmaStart", "sigmaEnd",
                    "lloydIterations", "seed"},
                   "rsom");
    read_field(j, "gridSide", p.grid_side);
    read_field(j, "epochs", p.epochs);
    read_field(j, "learningRateStart", p.learning_rate_start);
    read_field(j, "learningRateEnd", p.learning_rate_end);
    read_field(j, "sigmaStart", p.sigma_start);
    read_field(j, "sigmaEnd", p.sigma_end);
    read_field(j, "lloydIterations", p.lloyd_iterations);
    read_field(j, "seed", p.seed);
    return p;
}

MergeParams merge_params_from_json(const Json& j, MergeParams p) {
    reject_unknown(j, {"kappa", "varianceFloor", "densityFloor", "search", "scope", "sepMode", "ann"}, "merge");
    read_field(j, "kappa", p.kappa);
    read_field(j, "varianceFloor", p.variance_floor);
    read_field(j, "densityFloor", p.density_floor);
    if (j.contains("search")) {
        const auto s = j.at("search").get<std::string>();
        if (s == "exact") p.search = KnnSearch::exact;
        else if (s == "approximate") p.search = KnnSearch::approximate;
        else throw InvalidInput("merge.search must be exact or approximate");
    }
    if (j.contains("scope")) {
        const auto s = j.at("scope").get<std::string>();
        if (s == "fullChunk") p.scope = KnnScope::full_chunk;
        else if (s == "topological") p.scope = KnnScope::topological;
        else throw InvalidInput("merge.scope must be topological or fullChunk");
    }
    if (j.contains("sepMode")) {
        const auto s = j.at("sepMode").get<std::string>();
        if (s == "global") p.sep_mode = SepMode::global;
        else if (s == "maxRadiusCluster") p.sep_mode = SepMode::max_radius_cluster;
        else throw InvalidInput("merge.sepMode must be global or maxRadiusCluster");
    }
    if (j.contains("ann")) {
        const auto& a = j.at("ann");
        reject_unknown(a, {"maxDegree", "efConstruction", "efSearch", "seed"}, "merge.ann");
        read_field(a, "maxDegree", p.ann.max_degree);
        read_field(a, "efConstruction", p.ann.ef_construction);
        read_field(a, "efSearch", p.ann.ef_search);
        read_field(a, "seed", p.ann.seed);
    }
    return p;
}

RunConfig run_config_from_json(const Json& j, RunConfig c) {
    reject_unknown(j, {"rsom", "merge", "kmeansMaxIters", "refine", "emitStages", "deterministic", "outputDir"},
                   "config");
    if (j.contains("rsom")) c.rsom = rsom_params_from_json(j.at("rsom"), c.rsom);
    if (j.contains("merge")) c.merge = merge_params_from_json(j.at("merge"), c.merge);
    read_field(j, "kmeansMaxIters", c.kmeans_max_iters);
    read_field(j, "refine", c.refine);
    read_field(j, "emitStages", c.emit_stages);
    read_field(j, "deterministic", c.deterministic);
    if (j.contains("outputDir")) c.output_dir = j.at("outputDir").get<std::string>();
    return c;
}

ChunkRecipe recipe_from_json(const Json& j) {
    ChunkRecipe r;
    try {
        r.index = j.at("index").get<std::size_t>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.kt = j.at("kt").get<std::size_t>();
        r.ir_draws = j.at("irDraws").get<std::vector<std::size_t>>();
        r.sizes = j.at("sizes").get<std::vector<std::size_t>>();
        r.source_clusters = j.at("sourceClusters").get<std::vector<std::int64_t>>();
        r.clamped = j.at("clamped").get<bool>();
        r.capped = j.at("capped").get<bool>();
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("malformed recipe: ") + e.what());
    }
    return r;
}

std::vector<ChunkRecipe> recipes_from_json(const Json& j) {
    if (!j.is_array()) throw InvalidInput("recipes document must be an array");
    std::vector<ChunkRecipe> out;
    for (const auto& item : j) out.push_back(recipe_from_json(item));
    return out;
}

std::string curves_csv(const MergeTrace& trace) {
    std::ostringstream out;
    out << "k,com,sep\n";
    for (const auto& s : trace.states) out << s.k << ',' << format_double(s.com) << ',' << format_double(s.sep) << '\n';
    return out.str();
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InvalidInput("invalid JSON in " + path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace lsrom
