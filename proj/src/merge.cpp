#include "lsrom/merge.hpp"

#include "lsrom/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace lsrom {

void MergeParams::validate() const {
    if (kappa < 1) throw InvalidInput("kappa must be at least 1");
    if (!(variance_floor > 0.0) || !(density_floor > 0.0)) throw InvalidInput("merge floors must be positive");
}

// ---------------------------------------------------------------- MergeState

MergeState::MergeState(const DataChunk& chunk, const MicroClusterModel& model)
    : dim_(chunk.features()) {
    const auto q = model.topology.size();
    if (model.partition.assignment.size() != chunk.size()) {
        throw InvalidInput("merge: micro-cluster partition does not cover the chunk");
    }
    if (model.topology.centers.cols() != dim_) throw InvalidInput("merge: dimension mismatch");

    centers_ = model.topology.centers;
    means_ = Matrix(q, dim_);
    scatter_.assign(q * dim_ * dim_, 0.0);
    counts_.assign(q, 0);
    neighbors_.resize(q);
    micros_of_.resize(q);
    micro_objects_.resize(q);
    cluster_of_micro_.resize(q);
    micro_of_object_ = model.partition.assignment;

    for (std::size_t i = 0; i < chunk.size(); ++i) {
        const auto m = micro_of_object_[i];
        if (m >= q) throw InvalidInput("merge: assignment refers to a missing micro-cluster");
        micro_objects_[m].push_back(i);
    }
    for (std::size_t m = 0; m < q; ++m) {
        active_.insert(m);
        cluster_of_micro_[m] = m;
        micros_of_[m] = {m};
        counts_[m] = micro_objects_[m].size();
        if (counts_[m] == 0) throw InvalidInput("merge: empty micro-cluster");
        auto mean = means_.row(m);
        for (auto i : micro_objects_[m]) {
            auto x = chunk.objects.row(i);
            for (std::size_t d = 0; d < dim_; ++d) mean[d] += x[d];
        }
        for (auto& v : mean) v /= static_cast<double>(counts_[m]);
        double* s = scatter_.data() + m * dim_ * dim_;
        for (auto i : micro_objects_[m]) {
            auto x = chunk.objects.row(i);
            for (std::size_t a = 0; a < dim_; ++a) {
                const double da = x[a] - mean[a];
                for (std::size_t b = 0; b < dim_; ++b) s[a * dim_ + b] += da * (x[b] - mean[b]);
            }
        }
        for (std::size_t j = 0; j < q; ++j) {
            if (j != m && model.topology.adjacency[m][j]) neighbors_[m].insert(j);
        }
    }
}

std::span<const double> MergeState::member_scatter(std::size_t c) const {
    return {scatter_.data() + c * dim_ * dim_, dim_ * dim_};
}

std::size_t MergeState::merge(std::size_t a, std::size_t b) {
    if (a == b || !is_active(a) || !is_active(b)) throw InvalidInput("merge: invalid cluster pair");
    const auto keep = std::min(a, b);
    const auto gone = std::max(a, b);
    const double na = static_cast<double>(counts_[keep]);
    const double nb = static_cast<double>(counts_[gone]);
    const double n = na + nb;

    auto ck = centers_.row(keep);
    auto cg = centers_.row(gone);
    auto mk = means_.row(keep);
    auto mg = means_.row(gone);
    double* sk = scatter_.data() + keep * dim_ * dim_;
    const double* sg = scatter_.data() + gone * dim_ * dim_;
    std::vector<double> delta(dim_);
    for (std::size_t d = 0; d < dim_; ++d) delta[d] = mg[d] - mk[d];
    for (std::size_t x = 0; x < dim_; ++x) {
        for (std::size_t y = 0; y < dim_; ++y) {
            sk[x * dim_ + y] += sg[x * dim_ + y] + delta[x] * delta[y] * na * nb / n;
        }
    }
    for (std::size_t d = 0; d < dim_; ++d) {
        mk[d] += delta[d] * nb / n;
        ck[d] = (na * ck[d] + nb * cg[d]) / n;
    }
    counts_[keep] += counts_[gone];

    for (auto x : neighbors_[gone]) {
        if (x == keep) continue;
        neighbors_[x].erase(gone);
        neighbors_[x].insert(keep);
        neighbors_[keep].insert(x);
    }
    neighbors_[keep].erase(gone);
    neighbors_[gone].clear();

    for (auto m : micros_of_[gone]) cluster_of_micro_[m] = keep;
    micros_of_[keep].insert(micros_of_[keep].end(), micros_of_[gone].begin(), micros_of_[gone].end());
    std::sort(micros_of_[keep].begin(), micros_of_[keep].end());
    micros_of_[gone].clear();
    counts_[gone] = 0;
    active_.erase(gone);
    return keep;
}

std::vector<std::size_t> MergeState::assignment() const {
    std::vector<std::size_t> out(micro_of_object_.size());
    std::map<std::size_t, std::size_t> dense;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = dense.try_emplace(cluster_of_object(i), dense.size()).first->second;
    }
    return out;
}

// ---------------------------------------------------------------- separation

ProjectedPair project_pair(const DataChunk& chunk, const MergeState& state, std::size_t i, std::size_t j,
                           const MergeParams& params) {
    if (!state.is_active(i) || !state.is_active(j) || i == j) throw InvalidInput("project_pair: invalid clusters");
    ProjectedPair pair;
    pair.i = i;
    pair.j = j;
    pair.count_i = state.count(i);
    pair.count_j = state.count(j);
    const auto mi = state.center(i);
    const auto mj = state.center(j);
    const auto f = mi.size();
    std::vector<double> dir(f), mid(f);
    double len2 = 0.0;
    for (std::size_t d = 0; d < f; ++d) {
        dir[d] = mi[d] - mj[d];
        mid[d] = 0.5 * (mi[d] + mj[d]);
        len2 += dir[d] * dir[d];
    }
    if (len2 == 0.0) {
        pair.coincident = true;
        return pair;
    }
    auto side = [&](std::size_t c, double& var) {
        const auto start = pair.projections.size();
        for (auto m : state.micros(c)) {
            for (auto o : state.micro_objects(m)) {
                auto x = chunk.objects.row(o);
                double p = 0.0;
                for (std::size_t d = 0; d < f; ++d) p += (x[d] - mid[d]) * dir[d];
                pair.projections.push_back(p / len2);
            }
        }
        const auto cnt = static_cast<double>(pair.projections.size() - start);
        double mean = 0.0;
        for (auto t = start; t < pair.projections.size(); ++t) mean += pair.projections[t];
        mean /= cnt;
        double v = 0.0;
        for (auto t = start; t < pair.projections.size(); ++t) {
            v += (pair.projections[t] - mean) * (pair.projections[t] - mean);
        }
        var = std::max(params.variance_floor, v / cnt);
    };
    side(i, pair.sigma2_i);
    side(j, pair.sigma2_j);
    return pair;
}

double projected_variance(const MergeState& state, std::size_t c, std::span<const double> direction) {
    const auto f = direction.size();
    const auto s = state.member_scatter(c);
    double len2 = 0.0;
    for (double v : direction) len2 += v * v;
    double quad = 0.0;
    for (std::size_t a = 0; a < f; ++a) {
        double row = 0.0;
        for (std::size_t b = 0; b < f; ++b) row += s[a * f + b] * direction[b];
        quad += direction[a] * row;
    }
    return quad / (static_cast<double>(state.count(c)) * len2 * len2);
}

double mixture_density(double u, std::size_t count_i, double sigma2_i, std::size_t count_j, double sigma2_j) {
    auto normal = [](double x, double mean, double var) {
        const double z = x - mean;
        return std::exp(-z * z / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
    };
    const double ni = static_cast<double>(count_i);
    const double nj = static_cast<double>(count_j);
    return (ni * normal(u, 0.5, sigma2_i) + nj * normal(u, -0.5, sigma2_j)) / (ni + nj);
}

double separation(std::size_t count_i, double sigma2_i, std::size_t count_j, double sigma2_j,
                  const MergeParams& params) {
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < MergeParams::grid_points; ++t) {
        lowest = std::min(lowest, mixture_density(separation_grid(t), count_i, sigma2_i, count_j, sigma2_j));
    }
    return 1.0 / (lowest + params.density_floor);
}

double separation(const ProjectedPair& pair, const MergeParams& params) {
    if (pair.coincident) return 0.0;
    return separation(pair.count_i, pair.sigma2_i, pair.count_j, pair.sigma2_j, params);
}

double pair_separation(const MergeState& state, std::size_t i, std::size_t j, const MergeParams& params) {
    const auto mi = state.center(i);
    const auto mj = state.center(j);
    std::vector<double> dir(mi.size());
    double len2 = 0.0;
    for (std::size_t d = 0; d < dir.size(); ++d) {
        dir[d] = mi[d] - mj[d];
        len2 += dir[d] * dir[d];
    }
    if (len2 == 0.0) return 0.0;
    const double vi = std::max(params.variance_floor, projected_variance(state, i, dir));
    const double vj = std::max(params.variance_floor, projected_variance(state, j, dir));
    return separation(state.count(i), vi, state.count(j), vj, params);
}

double SeparationCache::get(const MergeState& state, std::size_t i, std::size_t j, const MergeParams& params) {
    const auto key = std::minmax(i, j);
    auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    const double s = pair_separation(state, key.first, key.second, params);
    values_.emplace(key, s);
    return s;
}

void SeparationCache::invalidate(std::size_t a, std::size_t b) {
    std::erase_if(values_, [&](const auto& kv) {
        const auto [x, y] = kv.first;
        return x == a || y == a || x == b || y == b;
    });
}

CompactnessChoice compactness_step(const MergeState& state, const MergeParams& params, SeparationCache* cache) {
    if (state.cluster_count() < 2) throw InvalidInput("compactness_step needs at least two clusters");
    auto sep = [&](std::size_t i, std::size_t j) {
        return cache ? cache->get(state, i, j, params) : pair_separation(state, i, j, params);
    };
    CompactnessChoice best;
    bool found = false;
    for (auto i : state.active_clusters()) {
        for (auto j : state.neighbors(i)) {
            if (j <= i) continue;
            const double s = sep(i, j);
            if (!found || s < best.com) {
                best = {i, j, s, false};
                found = true;
            }
        }
    }
    if (found) return best;

    // Disconnected graph: fall back to the nearest pair of centers.
    const auto active = state.active_clusters();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < active.size(); ++a) {
        for (std::size_t b = a + 1; b < active.size(); ++b) {
            const double d = squared_distance(state.center(active[a]), state.center(active[b]));
            if (d < best_d) {
                best_d = d;
                best.i = active[a];
                best.j = active[b];
            }
        }
    }
    best.com = sep(best.i, best.j);
    best.fallback = true;
    return best;
}

// -------------------------------------------------------------- separability

std::size_t max_radius_micro(const TopologyModel& topology) {
    std::size_t best = 0;
    double best_r = -1.0;
    for (std::size_t i = 0; i < topology.size(); ++i) {
        const double r = topology.degree(i) > 0 ? local_radius(topology, i) : 0.0;
        if (r > best_r) {
            best_r = r;
            best = i;
        }
    }
    return best;
}

std::vector<std::size_t> candidate_micros(const MergeState& state, std::size_t g_micro, KnnScope scope) {
    std::vector<std::size_t> out;
    if (scope == KnnScope::full_chunk) {
        out.resize(state.micro_count());
        for (std::size_t m = 0; m < out.size(); ++m) out[m] = m;
        return out;
    }
    const auto cg = state.cluster_of_micro(g_micro);
    out = state.micros(cg);
    for (auto nb : state.neighbors(cg)) {
        const auto& ms = state.micros(nb);
        out.insert(out.end(), ms.begin(), ms.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

std::size_t count_foreign(const MergeState& state, std::size_t self, std::size_t cg, const std::uint32_t* ids,
                          std::size_t len, std::size_t kappa) {
    std::size_t taken = 0, foreign = 0;
    for (std::size_t e = 0; e < len && taken < kappa; ++e) {
        if (ids[e] == self) continue;
        ++taken;
        if (state.cluster_of_object(ids[e]) != cg) ++foreign;
    }
    return foreign;
}

}  // namespace

SeparabilityResult separability(const DataChunk& chunk, const MergeState& state, std::size_t g_micro,
                                const MergeParams& params) {
    params.validate();
    SeparabilityResult res;
    res.cluster = state.cluster_of_micro(g_micro);
    std::vector<std::size_t> objects;
    for (auto m : candidate_micros(state, g_micro, params.scope)) {
        const auto& os = state.micro_objects(m);
        objects.insert(objects.end(), os.begin(), os.end());
    }
    std::sort(objects.begin(), objects.end());
    res.candidates = objects.size();
    Matrix cand(objects.size(), chunk.features());
    for (std::size_t r = 0; r < objects.size(); ++r) {
        std::copy_n(chunk.objects.row(objects[r]).begin(), chunk.features(), cand.row(r).begin());
    }
    res.kappa_used = std::min(params.kappa, objects.size() - 1);
    res.kappa_truncated = res.kappa_used < params.kappa;
    if (res.kappa_used == 0) return res;

    std::optional<AnnIndex> index;
    std::optional<KdTree> tree;
    if (params.search == KnnSearch::approximate) {
        index = AnnIndex::build(cand, params.ann);
    } else {
        tree.emplace(cand);
    }
    std::size_t total = 0;
    std::vector<std::uint32_t> ids;
    for (auto m : state.micros(res.cluster)) {
        for (auto o : state.micro_objects(m)) {
            const auto found = index ? index->knn(chunk.objects.row(o), res.kappa_used + 1)
                                     : tree->knn(chunk.objects.row(o), res.kappa_used + 1);
            ids.clear();
            for (const auto& nb : found) ids.push_back(static_cast<std::uint32_t>(objects[nb.id]));
            total += count_foreign(state, o, res.cluster, ids.data(), ids.size(), res.kappa_used);
        }
    }
    res.sep = static_cast<double>(total) / static_cast<double>(res.kappa_used);
    return res;
}

NeighborTable::NeighborTable(const Matrix& points, std::size_t kappa, KnnSearch search, const AnnParams& ann)
    : rows_(points.rows()) {
    if (kappa < 1) throw InvalidInput("neighbour table: kappa must be at least 1");
    if (rows_ >= std::numeric_limits<std::uint32_t>::max()) throw InvalidInput("neighbour table: too many objects");
    kappa_ = rows_ > 0 ? std::min(kappa, rows_ - 1) : 0;
    truncated_ = kappa_ < kappa;
    ids_.assign(rows_ * kappa_, 0);
    if (kappa_ == 0) return;

    // Spatially coherent order for insertion and queries keeps memory access local.
    const KdTree tree(points);
    const auto& order = tree.leaf_order();
    std::optional<AnnIndex> index;
    if (search == KnnSearch::approximate) {
        index.emplace(points.cols(), ann);
        for (auto r : order) index->add(points.row(r), r);
    }
    const auto count = static_cast<std::ptrdiff_t>(rows_);
#pragma omp parallel for schedule(dynamic, 512)
    for (std::ptrdiff_t t = 0; t < count; ++t) {
        const auto i = order[static_cast<std::size_t>(t)];
        const auto found = index ? index->knn(points.row(i), kappa_ + 1) : tree.knn(points.row(i), kappa_ + 1);
        std::size_t filled = 0;
        for (const auto& nb : found) {
            if (nb.id == i || filled == kappa_) continue;
            ids_[i * kappa_ + filled++] = static_cast<std::uint32_t>(nb.id);
        }
    }
}

std::size_t foreign_links(const MergeState& state, const NeighborTable& table) {
    std::size_t foreign = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto own = state.cluster_of_object(i);
        for (auto j : table.neighbors(i)) foreign += state.cluster_of_object(j) != own;
    }
    return foreign;
}

double global_separability(const MergeState& state, const NeighborTable& table) {
    if (table.kappa() == 0) return 0.0;
    return static_cast<double>(foreign_links(state, table)) / static_cast<double>(table.kappa());
}

std::size_t cross_links(const MergeState& state, const NeighborTable& table, std::size_t a, std::size_t b) {
    std::size_t links = 0;
    auto count_from = [&](std::size_t from, std::size_t to) {
        for (auto m : state.micros(from)) {
            for (auto o : state.micro_objects(m)) {
                for (auto j : table.neighbors(o)) links += state.cluster_of_object(j) == to;
            }
        }
    };
    count_from(a, b);
    count_from(b, a);
    return links;
}

// ----------------------------------------------------------------- merge loop

std::size_t select_k_star(const std::vector<MergeStateRecord>& states, double final_merge_com) {
    if (states.empty()) throw InvalidInput("select_k_star: no recorded states");
    double max_com = std::max(0.0, final_merge_com), max_sep = 0.0;
    for (const auto& s : states) {
        max_com = std::max(max_com, s.com);
        max_sep = std::max(max_sep, s.sep);
    }
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < states.size(); ++r) {
        const double score = (max_com > 0.0 ? states[r].com / max_com : 0.0) +
                             (max_sep > 0.0 ? states[r].sep / max_sep : 0.0);
        if (score < best_score) {
            best_score = score;
            best = r;
        }
    }
    return states[best].k;
}

MergeTrace run_merge(const DataChunk& chunk, const MicroClusterModel& model, const MergeParams& params) {
    params.validate();
    const auto q = model.topology.size();
    if (q == 0) throw InvalidInput("run_merge: no micro-clusters");
    MergeTrace trace;
    if (q == 1) {
        trace.k_star = 1;
        trace.final_partition = Partition::from_assignment(chunk.objects, std::vector<std::size_t>(chunk.size(), 0));
        return trace;
    }

    MergeState state(chunk, model);
    trace.g_micro = max_radius_micro(model.topology);
    SeparationCache cache;
    std::vector<std::vector<std::size_t>> snapshots;

    std::optional<NeighborTable> table;
    std::size_t foreign = 0;
    if (params.sep_mode == SepMode::global) {
        table.emplace(chunk.objects, params.kappa, params.search, params.ann);
        foreign = foreign_links(state, *table);
    }
    auto current_sep = [&]() -> std::pair<double, bool> {
        if (table) {
            const double k = static_cast<double>(std::max<std::size_t>(table->kappa(), 1));
            return {static_cast<double>(foreign) / k, table->truncated()};
        }
        const auto r = separability(chunk, state, trace.g_micro, params);
        return {r.sep, r.kappa_truncated};
    };
    auto record = [&](std::optional<std::pair<std::size_t, std::size_t>> pair, double com, bool fallback) {
        const auto [sep, truncated] = current_sep();
        trace.states.push_back({state.cluster_count(), pair, com, sep, fallback, truncated});
        snapshots.push_back(state.cluster_of_micro_map());
    };

    // With two micro-clusters the only recordable state is the initial one.
    if (q == 2) record(std::nullopt, 0.0, false);

    while (state.cluster_count() > 1) {
        const auto choice = compactness_step(state, params, &cache);
        cache.invalidate(choice.i, choice.j);
        if (table) foreign -= cross_links(state, *table, choice.i, choice.j);
        state.merge(choice.i, choice.j);
        ++trace.merge_steps;
        if (state.cluster_count() >= 2) {
            record(std::make_pair(choice.i, choice.j), choice.com, choice.fallback);
        } else {
            trace.final_merge_com = choice.com;
        }
    }

    trace.k_star = select_k_star(trace.states, trace.final_merge_com);
    std::size_t slot = 0;
    while (trace.states[slot].k != trace.k_star) ++slot;
    const auto& micro_map = snapshots[slot];
    std::vector<std::size_t> labels(chunk.size());
    for (std::size_t i = 0; i < chunk.size(); ++i) labels[i] = micro_map[model.partition.assignment[i]];
    trace.final_partition = Partition::from_assignment(chunk.objects, std::move(labels));
    return trace;
}

}  // namespace lsrom
