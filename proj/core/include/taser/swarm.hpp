#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "taser/adversary.hpp"
#include "taser/learner.hpp"
#include "taser/selection.hpp"
#include "taser/spectral.hpp"

namespace taser {

enum class TopologyKind { ring, k_regular, erdos_renyi };

struct TopologySpec {
    TopologyKind kind = TopologyKind::erdos_renyi;
    std::size_t degree = 4;  // k_regular
    double p = 1.0;          // erdos_renyi edge probability
};

struct Topology {
    std::size_t n = 0;
    std::vector<std::vector<std::uint32_t>> neighbors;  // sorted, symmetric, no loops

    std::size_t degree(std::size_t i) const { return neighbors[i].size(); }
};

// Deterministic under seed. Erdos-Renyi redraws up to 100 times to find a
// connected graph; every kind rejects parameters that leave a node isolated.
Topology build_topology(const TopologySpec& spec, std::size_t n, std::uint64_t seed);

struct Request {
    std::uint32_t sender = 0;
    std::vector<std::uint32_t> indices;  // strictly increasing
};

struct Response {
    std::uint32_t sender = 0;
    std::vector<std::pair<std::uint32_t, double>> pairs;  // in request order
};

// Indices travel as 4-byte integers, coefficients as 8-byte reals. Response
// pairs carry their index only for validation; it is not counted again.
std::uint64_t request_wire_bytes(const Request& request);
std::uint64_t response_wire_bytes(const Response& response);

enum class DefenseKind { taser, mean, weak_dp, krum };

struct DefenseConfig {
    DefenseKind kind = DefenseKind::taser;
    double alpha = 0.5;      // frequency score mix
    std::size_t k = 0;       // coefficients exchanged per round (taser)
    double clip_c = 1.0;     // weak_dp norm bound
    double sigma = 0.0;      // weak_dp noise stddev
    std::size_t krum_f = 0;  // krum's assumed malicious count
};

struct RoundConfig {
    DefenseConfig defense;
    std::size_t batch_size = 32;
    std::size_t num_batches = 4;
    double lr = 0.05;
    std::size_t heatmap_k = 0;  // per-node top-score set size tracked for the heatmap
    std::uint64_t round = 0;
    // Per-round participation mask; empty means every node takes part. Inactive
    // nodes skip the round entirely and are skipped by their neighbors.
    std::vector<std::uint8_t> active;
};

struct NodeState {
    std::uint32_t id = 0;
    std::uint64_t seed = 0;  // per-node stream root, fixed for the whole run
    ModelParams model;
    LabeledDataset data;
    bool malicious = false;
    AttackConfig attack;  // read only when malicious
    std::vector<GradientVector> clean_history;  // attacker's clean means, oldest first

    // Round-scoped caches, valid from prepare until the end of the round.
    Spectrum cached_spectrum;
    SelectionSet selection;
    GradientVector cached_gradient;
};

struct PrepareOutput {
    SelectionSet selection;  // empty for non-taser defenses
    Request request;
    std::vector<std::uint32_t> heatmap_set;  // top heatmap_k score indices, sorted
};

// Steps 1-5 for one node: batch gradients (honest or attacked), per-batch
// spectra, cached mean spectrum, task-aware scores, top-k selection, request.
PrepareOutput node_prepare(NodeState& state, const RoundConfig& config);

// Answers with the node's own cached spectrum values at the requested indices.
Response node_respond(const NodeState& state, const Request& request);

// Mean of self and all responders at each selected index, zero elsewhere,
// mapped back to parameter space.
GradientVector taser_aggregate(const Spectrum& self_spectrum,
                               const SelectionSet& selection,
                               const std::vector<Response>& responses, std::size_t d);

// mean: plain average of self and neighbors. weak_dp: clip each input to norm
// clip_c, average, add N(0, sigma^2) noise. krum: the input with the smallest
// sum of squared distances to its n-f-2 nearest peers (needs n >= f+3).
GradientVector baseline_aggregate(const DefenseConfig& defense,
                                  const GradientVector& self_grad,
                                  const std::vector<GradientVector>& neighbor_grads,
                                  std::uint64_t seed);

struct RoundRecord {
    std::uint64_t round = 0;
    std::vector<SelectionSet> selections;  // per node; empty sets for baselines
    std::vector<std::vector<std::uint32_t>> heatmap_sets;  // per node
    std::vector<std::uint64_t> bytes;  // per node: own request + received responses
};

// One synchronous round: all nodes prepare, then exchange, then aggregate and
// step. Nodes only ever read neighbors' cached values from the prepare phase,
// so the result is independent of iteration order.
RoundRecord run_round(std::vector<NodeState>& states, const Topology& topology,
                      const RoundConfig& config);

}  // namespace taser
