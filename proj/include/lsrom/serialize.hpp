#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lsrom/harness.hpp"
#include "lsrom/merge.hpp"
#include "lsrom/metrics.hpp"
#include "lsrom/refine.hpp"
#include "lsrom/rsom.hpp"
#include "lsrom/tlrs.hpp"

// JSON documents for models, traces, reports, recipes and run configuration.
// Keys are camelCase; object keys are emitted in sorted order, so equal
// values always produce equal bytes.
namespace lsrom {

using Json = nlohmann::json;

Json to_json(const RsomParams& p);
Json to_json(const MergeParams& p);
Json to_json(const RunConfig& c);
Json to_json(const TrainedSom& som);
Json to_json(const MicroClusterModel& model);
Json to_json(const MergeTrace& trace);
Json to_json(const EvalReport& report, bool with_runtime = true);
Json to_json(const ChunkRecipe& recipe);
Json to_json(const Aggregate& a);

// Overlays the keys present in `j` on `base`; unknown keys are rejected.
RsomParams rsom_params_from_json(const Json& j, RsomParams base = {});
MergeParams merge_params_from_json(const Json& j, MergeParams base = {});
RunConfig run_config_from_json(const Json& j, RunConfig base = {});

ChunkRecipe recipe_from_json(const Json& j);
std::vector<ChunkRecipe> recipes_from_json(const Json& j);

// Merge curves as CSV with header k,com,sep, one row per recorded state.
std::string curves_csv(const MergeTrace& trace);

// Reads a JSON file; parse errors become InvalidInput.
Json read_json_file(const std::filesystem::path& path);
// Writes `j` indented by two spaces with a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace lsrom
