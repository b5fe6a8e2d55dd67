#include "lsrom/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lsrom/kernels.hpp"

namespace lsrom {
namespace {

Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t a = 0; a < rows.size(); ++a) {
        std::copy_n(m.row(rows[a]).begin(), m.cols(), out.row(a).begin());
    }
    return out;
}

// Keeps nodes flagged in `keep`, reassigns every object to its nearest kept
// center, deletes nodes left empty, and recenters once on member means.
MicroClusterModel reassign_to_survivors(const DataChunk& chunk, MicroClusterModel model,
                                        std::vector<bool> keep) {
    const auto n = chunk.size();
    std::vector<std::size_t> idx(n);
    std::vector<double> d(n);
    while (true) {
        std::vector<std::size_t> alive;
        for (std::size_t q = 0; q < keep.size(); ++q) {
            if (keep[q]) alive.push_back(q);
        }
        kernels::nearest_center(chunk.objects, select_rows(model.topology.centers, alive), idx, d);
        std::vector<std::size_t> counts(alive.size(), 0);
        for (auto a : idx) ++counts[a];
        bool dropped = false;
        for (std::size_t a = 0; a < alive.size(); ++a) {
            if (counts[a] == 0) {
                keep[alive[a]] = false;
                dropped = true;
            }
        }
        if (!dropped) break;
    }

    std::vector<std::size_t> original;
    std::vector<double> radii, ratios;
    for (std::size_t q = 0; q < keep.size(); ++q) {
        if (!keep[q]) continue;
        original.push_back(model.original_index[q]);
        if (!model.radii.empty()) radii.push_back(model.radii[q]);
        if (!model.ratios.empty()) ratios.push_back(model.ratios[q]);
    }
    MicroClusterModel out;
    out.topology = model.topology.subgraph(keep);
    out.partition = partition_with_ids(chunk.objects, idx, original.size());
    out.topology.centers = out.partition.centers;
    out.radii = std::move(radii);
    out.ratios = std::move(ratios);
    out.original_index = std::move(original);
    out.removed_bridge_nodes = std::move(model.removed_bridge_nodes);
    out.objective_history = std::move(model.objective_history);
    out.iterations = model.iterations;
    return out;
}

}  // namespace

Partition partition_with_ids(const Matrix& objects, std::vector<std::size_t> assignment, std::size_t k) {
    if (assignment.size() != objects.rows()) throw InvalidInput("assignment length mismatch");
    Partition p;
    p.k = k;
    p.sizes.assign(k, 0);
    p.centers = Matrix(k, objects.cols());
    for (std::size_t i = 0; i < objects.rows(); ++i) {
        const auto c = assignment[i];
        if (c >= k) throw InvalidInput("cluster id out of range");
        ++p.sizes[c];
        auto dst = p.centers.row(c);
        auto src = objects.row(i);
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (p.sizes[c] == 0) throw InvalidInput("partition has an empty cluster");
        for (auto& v : p.centers.row(c)) v /= static_cast<double>(p.sizes[c]);
    }
    p.assignment = std::move(assignment);
    return p;
}

MicroClusterModel kmeans_finetune(const DataChunk& chunk, const TrainedSom& som, std::size_t max_iters) {
    const auto& topo = som.topology;
    if (topo.centers.cols() != chunk.features()) {
        throw InvalidInput("kmeans_finetune: SOM dimension differs from chunk dimension");
    }
    const auto n = chunk.size();
    const auto f = chunk.features();

    std::vector<std::size_t> alive(topo.size());
    for (std::size_t q = 0; q < alive.size(); ++q) alive[q] = q;
    Matrix centers = topo.centers;
    std::vector<std::size_t> idx(n), prev(n, std::numeric_limits<std::size_t>::max());
    std::vector<double> d(n);

    MicroClusterModel model;
    kernels::BoundedAssigner assigner;
    while (true) {
        assigner.assign(chunk.objects, centers, idx, d);
        model.objective_history.push_back(kernels::ordered_sum(d));

        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const auto node = alive[idx[i]];
            if (node != prev[i]) changed = true;
            prev[i] = node;
        }

        // Empty centers leave the model along with their graph node.
        std::vector<std::size_t> counts(alive.size(), 0);
        for (auto a : idx) ++counts[a];
        if (std::find(counts.begin(), counts.end(), 0) != counts.end()) {
            std::vector<std::size_t> remap(alive.size());
            std::vector<std::size_t> next_alive;
            std::vector<std::size_t> keep_rows;
            for (std::size_t a = 0; a < alive.size(); ++a) {
                remap[a] = next_alive.size();
                if (counts[a] > 0) {
                    next_alive.push_back(alive[a]);
                    keep_rows.push_back(a);
                }
            }
            for (auto& a : idx) a = remap[a];
            centers = select_rows(centers, keep_rows);
            alive = std::move(next_alive);
            assigner.reset();
        }

        if (!changed || model.iterations >= max_iters) break;

        // Centroid update on member means.
        Matrix sums(alive.size(), f);
        counts.assign(alive.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[idx[i]];
            auto dst = sums.row(idx[i]);
            auto src = chunk.objects.row(i);
            for (std::size_t j = 0; j < f; ++j) dst[j] += src[j];
        }
        for (std::size_t a = 0; a < alive.size(); ++a) {
            for (std::size_t j = 0; j < f; ++j) centers(a, j) = sums(a, j) / static_cast<double>(counts[a]);
        }
        ++model.iterations;
    }

    std::vector<bool> keep(topo.size(), false);
    for (auto q : alive) keep[q] = true;
    model.topology = topo.subgraph(keep);
    model.original_index = alive;
    model.partition = partition_with_ids(chunk.objects, idx, alive.size());
    if (max_iters > 0) model.topology.centers = model.partition.centers;
    return model;
}

double local_radius(const TopologyModel& topology, std::size_t i) {
    if (i >= topology.size()) throw InvalidInput("local_radius: node index out of range");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < topology.size(); ++j) {
        if (!topology.adjacency[i][j]) continue;
        sum += squared_distance(topology.centers.row(i), topology.centers.row(j));
        ++count;
    }
    if (count == 0) throw InvalidInput("local_radius: node " + std::to_string(i) + " has no neighbours");
    return sum / static_cast<double>(count);
}

double radius_ratio(const TopologyModel& topology, const std::vector<double>& radii, std::size_t i) {
    if (i >= topology.size() || radii.size() != topology.size()) {
        throw InvalidInput("radius_ratio: radii do not match the topology");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < topology.size(); ++j) {
        if (!topology.adjacency[i][j]) continue;
        sum += radii[j];
        ++count;
    }
    if (count == 0) throw InvalidInput("radius_ratio: node " + std::to_string(i) + " has no neighbours");
    if (radii[i] == 0.0) return std::numeric_limits<double>::infinity();
    return sum / (static_cast<double>(count) * radii[i]);
}

std::vector<double> compute_radii(const TopologyModel& topology) {
    std::vector<double> out(topology.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = local_radius(topology, i);
    return out;
}

std::vector<double> compute_ratios(const TopologyModel& topology, const std::vector<double>& radii) {
    std::vector<double> out(topology.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = radius_ratio(topology, radii, i);
    return out;
}

MicroClusterModel remove_isolated_nodes(const DataChunk& chunk, MicroClusterModel model) {
    const auto q = model.topology.size();
    if (q <= 1) return model;
    std::vector<bool> keep(q, true);
    bool any = false;
    for (std::size_t i = 0; i < q; ++i) {
        if (model.topology.degree(i) == 0) keep[i] = false, any = true;
    }
    if (!any) return model;
    if (std::none_of(keep.begin(), keep.end(), [](bool k) { return k; })) keep[0] = true;
    return reassign_to_survivors(chunk, std::move(model), std::move(keep));
}

MicroClusterModel with_radii_and_ratios(MicroClusterModel model) {
    model.radii = compute_radii(model.topology);
    model.ratios = compute_ratios(model.topology, model.radii);
    return model;
}

MicroClusterModel remove_bridge_nodes(const DataChunk& chunk, MicroClusterModel model) {
    const auto q = model.topology.size();
    if (model.ratios.size() != q || model.radii.size() != q) {
        throw InvalidInput("remove_bridge_nodes: radii and ratios must be computed first");
    }
    std::vector<bool> keep(q);
    for (std::size_t i = 0; i < q; ++i) keep[i] = !(model.ratios[i] < 1.0);
    if (std::none_of(keep.begin(), keep.end(), [](bool k) { return k; })) {
        const auto best = std::max_element(model.ratios.begin(), model.ratios.end()) - model.ratios.begin();
        keep[static_cast<std::size_t>(best)] = true;
    }
    for (std::size_t i = 0; i < q; ++i) {
        if (keep[i]) continue;
        const auto c = model.topology.centers.row(i);
        model.removed_bridge_nodes.push_back({model.original_index[i], {c.begin(), c.end()}, model.ratios[i]});
    }
    if (std::all_of(keep.begin(), keep.end(), [](bool k) { return k; })) return model;
    return reassign_to_survivors(chunk, std::move(model), std::move(keep));
}

MicroClusterModel refine_partition(const DataChunk& chunk, MicroClusterModel model) {
    model = remove_isolated_nodes(chunk, std::move(model));
    if (model.topology.size() < 2) return model;
    model = with_radii_and_ratios(std::move(model));
    return remove_bridge_nodes(chunk, std::move(model));
}

}  // namespace lsrom
