#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "lsrom/ann_index.hpp"
#include "lsrom/core.hpp"
#include "lsrom/refine.hpp"

namespace lsrom {

enum class KnnSearch { approximate, exact };
enum class KnnScope { topological, full_chunk };

// What sep_k sums over: every object against its own current cluster, or
// only the members of C_g, the cluster holding the widest micro-cluster.
enum class SepMode { global, max_radius_cluster };

struct MergeParams {
    std::size_t kappa = 10;
    double variance_floor = 1e-6;
    double density_floor = 1e-12;
    KnnSearch search = KnnSearch::approximate;
    KnnScope scope = KnnScope::topological;  // candidate set in max_radius_cluster mode
    SepMode sep_mode = SepMode::global;
    AnnParams ann{};

    // Scan grid for the mixture minimum: u = -0.5, -0.49, ..., 0.5.
    static constexpr double grid_step = 0.01;
    static constexpr std::size_t grid_points = 101;

    void validate() const;
};

// Grid value u_t = (t - 50) / 100 for t in [0, 101).
constexpr double separation_grid(std::size_t t) { return (static_cast<double>(t) - 50.0) / 100.0; }

// Members of two clusters projected on the line through their centers,
// m_i at +0.5 and m_j at -0.5.
struct ProjectedPair {
    std::size_t i = 0, j = 0;
    std::vector<double> projections;  // members of i, then members of j
    double sigma2_i = 0.0, sigma2_j = 0.0;
    std::size_t count_i = 0, count_j = 0;
    bool coincident = false;  // m_i == m_j; separation is 0
};

// Current clusters during merging. A cluster is a set of micro-clusters and
// is identified by its smallest micro-cluster index.
class MergeState {
public:
    MergeState(const DataChunk& chunk, const MicroClusterModel& model);

    std::size_t cluster_count() const { return active_.size(); }
    std::size_t micro_count() const { return micro_objects_.size(); }
    std::vector<std::size_t> active_clusters() const { return {active_.begin(), active_.end()}; }
    bool is_active(std::size_t c) const { return active_.count(c) != 0; }

    std::span<const double> center(std::size_t c) const { return centers_.row(c); }
    std::size_t count(std::size_t c) const { return counts_[c]; }
    const std::set<std::size_t>& neighbors(std::size_t c) const { return neighbors_[c]; }
    const std::vector<std::size_t>& micros(std::size_t c) const { return micros_of_[c]; }
    const std::vector<std::size_t>& micro_objects(std::size_t m) const { return micro_objects_[m]; }
    std::size_t cluster_of_micro(std::size_t m) const { return cluster_of_micro_[m]; }
    std::size_t micro_of_object(std::size_t i) const { return micro_of_object_[i]; }
    std::size_t cluster_of_object(std::size_t i) const { return cluster_of_micro_[micro_of_object_[i]]; }
    const std::vector<std::size_t>& cluster_of_micro_map() const { return cluster_of_micro_; }

    // Mean and scatter matrix (sum of centred outer products) of the members.
    std::span<const double> member_mean(std::size_t c) const { return means_.row(c); }
    std::span<const double> member_scatter(std::size_t c) const;

    // Merges clusters a and b; the result keeps the smaller id.
    std::size_t merge(std::size_t a, std::size_t b);

    // Object labels for the current clusters, dense in first-appearance order.
    std::vector<std::size_t> assignment() const;

private:
    std::size_t dim_;
    std::set<std::size_t> active_;
    Matrix centers_;
    Matrix means_;
    std::vector<double> scatter_;  // micro_count x dim x dim
    std::vector<std::size_t> counts_;
    std::vector<std::set<std::size_t>> neighbors_;
    std::vector<std::vector<std::size_t>> micros_of_;
    std::vector<std::vector<std::size_t>> micro_objects_;
    std::vector<std::size_t> cluster_of_micro_;
    std::vector<std::size_t> micro_of_object_;
};

ProjectedPair project_pair(const DataChunk& chunk, const MergeState& state, std::size_t i, std::size_t j,
                           const MergeParams& params = {});

// Projected variance of cluster c along the line m_i - m_j, from the scatter matrix.
double projected_variance(const MergeState& state, std::size_t c, std::span<const double> direction);

// Mixture density S(u) of the projected pair.
double mixture_density(double u, std::size_t count_i, double sigma2_i, std::size_t count_j, double sigma2_j);

// 1 / (min over the grid of S(u) + density_floor).
double separation(std::size_t count_i, double sigma2_i, std::size_t count_j, double sigma2_j,
                  const MergeParams& params = {});
double separation(const ProjectedPair& pair, const MergeParams& params = {});

// Separation of clusters i and j from sufficient statistics.
double pair_separation(const MergeState& state, std::size_t i, std::size_t j, const MergeParams& params = {});

struct CompactnessChoice {
    std::size_t i = 0, j = 0;
    double com = 0.0;
    bool fallback = false;  // no adjacent pair; nearest-centroid pair used
};

// Memoised pair separations, dropped for any pair touching a merged cluster.
class SeparationCache {
public:
    double get(const MergeState& state, std::size_t i, std::size_t j, const MergeParams& params);
    void invalidate(std::size_t a, std::size_t b);

private:
    std::map<std::pair<std::size_t, std::size_t>, double> values_;
};

CompactnessChoice compactness_step(const MergeState& state, const MergeParams& params,
                                   SeparationCache* cache = nullptr);

struct SeparabilityResult {
    double sep = 0.0;
    std::size_t kappa_used = 0;
    bool kappa_truncated = false;
    std::size_t cluster = 0;     // id of C_g
    std::size_t candidates = 0;  // objects the neighbours were drawn from
};

// argmax of the local radius over the micro-cluster graph (lowest index on ties).
std::size_t max_radius_micro(const TopologyModel& topology);

// Micro-clusters whose objects form the neighbour candidate set for C_g.
std::vector<std::size_t> candidate_micros(const MergeState& state, std::size_t g_micro, KnnScope scope);

// Separability of C_g (the current cluster holding micro-cluster g) over the
// candidate set chosen by params.scope; the index is built from scratch.
SeparabilityResult separability(const DataChunk& chunk, const MergeState& state, std::size_t g_micro,
                                const MergeParams& params);

// The kappa nearest neighbours of every object, itself excluded, over the
// whole chunk. Built with the approximate index or the exact kd-tree.
class NeighborTable {
public:
    NeighborTable(const Matrix& points, std::size_t kappa, KnnSearch search, const AnnParams& ann = {});

    std::size_t size() const { return rows_; }
    std::size_t kappa() const { return kappa_; }  // min(requested, n - 1)
    bool truncated() const { return truncated_; }
    std::span<const std::uint32_t> neighbors(std::size_t i) const { return {ids_.data() + i * kappa_, kappa_}; }

private:
    std::size_t rows_ = 0;
    std::size_t kappa_ = 0;
    bool truncated_ = false;
    std::vector<std::uint32_t> ids_;
};

// Neighbour links (i, j) with j outside the current cluster of i.
std::size_t foreign_links(const MergeState& state, const NeighborTable& table);

// Global separability: sum over all objects of the fraction of their kappa
// neighbours that lie outside their own current cluster.
double global_separability(const MergeState& state, const NeighborTable& table);

// Neighbour links from cluster a to cluster b plus those from b to a.
std::size_t cross_links(const MergeState& state, const NeighborTable& table, std::size_t a, std::size_t b);

struct MergeStateRecord {
    std::size_t k = 0;
    std::optional<std::pair<std::size_t, std::size_t>> merged_pair;
    double com = 0.0;
    double sep = 0.0;
    bool fallback_used = false;
    bool kappa_truncated = false;
};

struct MergeTrace {
    std::vector<MergeStateRecord> states;
    double final_merge_com = 0.0;  // separation of the last merge (k = 1)
    std::size_t k_star = 1;
    Partition final_partition;
    std::size_t merge_steps = 0;
    std::size_t g_micro = 0;
};

// argmin over records of com/max(com) + sep/max(sep); a zero maximum zeroes
// its term. The com maximum also covers `final_merge_com`, the last merge of
// the loop. Ties keep the earlier record (larger k).
std::size_t select_k_star(const std::vector<MergeStateRecord>& states, double final_merge_com = 0.0);

MergeTrace run_merge(const DataChunk& chunk, const MicroClusterModel& model, const MergeParams& params = {});

}  // namespace lsrom
