#pragma once

#include <cstddef>
#include <vector>

#include "lsrom/core.hpp"
#include "lsrom/rsom.hpp"

namespace lsrom {

struct RemovedNode {
    std::size_t index = 0;  // node index in the original Q*Q map
    std::vector<double> center;
    double ratio = 0.0;
};

// Micro-cluster centers m_q on the (pruned) SOM graph plus the object partition
// they induce. partition.assignment[i] is a node index of `topology`.
struct MicroClusterModel {
    TopologyModel topology;
    Partition partition;
    std::vector<double> radii;   // rho(m_q); empty until computed
    std::vector<double> ratios;  // r(m_q); empty until computed
    std::vector<RemovedNode> removed_bridge_nodes;
    std::vector<std::size_t> original_index;  // surviving node -> index in the Q*Q map
    std::vector<double> objective_history;    // P after every assignment step
    std::size_t iterations = 0;
};

// Builds a Partition whose cluster ids are exactly [0, k); every id must be used.
Partition partition_with_ids(const Matrix& objects, std::vector<std::size_t> assignment, std::size_t k);

// Lloyd fine-tuning from the neuron positions. Centers that lose all objects
// are deleted together with their graph node. max_iters = 0 only assigns.
MicroClusterModel kmeans_finetune(const DataChunk& chunk, const TrainedSom& som, std::size_t max_iters = 100);

// Average squared distance from m_i to its graph neighbours.
double local_radius(const TopologyModel& topology, std::size_t i);

// Mean neighbour radius over rho(m_i); +inf when rho(m_i) == 0.
double radius_ratio(const TopologyModel& topology, const std::vector<double>& radii, std::size_t i);

std::vector<double> compute_radii(const TopologyModel& topology);
std::vector<double> compute_ratios(const TopologyModel& topology, const std::vector<double>& radii);

// Drops degree-0 nodes and hands their objects to the nearest remaining center.
MicroClusterModel remove_isolated_nodes(const DataChunk& chunk, MicroClusterModel model);

// Fills radii and ratios on the current graph (isolated nodes must be gone).
MicroClusterModel with_radii_and_ratios(MicroClusterModel model);

// Deletes every node with ratio < 1 in one pass, keeping the best-ratio node
// if all would go, then reassigns objects to the nearest survivor and
// recenters once.
MicroClusterModel remove_bridge_nodes(const DataChunk& chunk, MicroClusterModel model);

// Full refinement stage: isolated-node cleanup, radii/ratios, bridge removal.
MicroClusterModel refine_partition(const DataChunk& chunk, MicroClusterModel model);

}  // namespace lsrom
