#include "taser/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>

#include "taser/random.hpp"
#include "taser/scoring.hpp"

namespace taser {

namespace {

void add_edge(std::vector<std::vector<std::uint32_t>>& adj, std::size_t a, std::size_t b) {
    adj[a].push_back(static_cast<std::uint32_t>(b));
    adj[b].push_back(static_cast<std::uint32_t>(a));
}

bool is_connected(const std::vector<std::vector<std::uint32_t>>& adj) {
    if (adj.empty()) {
        return false;
    }
    std::vector<bool> seen(adj.size(), false);
    std::queue<std::uint32_t> frontier;
    frontier.push(0);
    seen[0] = true;
    std::size_t visited = 1;
    while (!frontier.empty()) {
        const std::uint32_t at = frontier.front();
        frontier.pop();
        for (std::uint32_t next : adj[at]) {
            if (!seen[next]) {
                seen[next] = true;
                ++visited;
                frontier.push(next);
            }
        }
    }
    return visited == adj.size();
}

bool min_degree_one(const std::vector<std::vector<std::uint32_t>>& adj) {
    return std::all_of(adj.begin(), adj.end(),
                       [](const auto& nbrs) { return !nbrs.empty(); });
}

}  // namespace

Topology build_topology(const TopologySpec& spec, std::size_t n, std::uint64_t seed) {
    if (n < 2) {
        throw std::invalid_argument("build_topology: need at least two nodes");
    }
    Topology topo;
    topo.n = n;
    topo.neighbors.assign(n, {});

    switch (spec.kind) {
        case TopologyKind::ring:
            if (n == 2) {
                add_edge(topo.neighbors, 0, 1);
            } else {
                for (std::size_t i = 0; i < n; ++i) {
                    add_edge(topo.neighbors, i, (i + 1) % n);
                }
            }
            break;
        case TopologyKind::k_regular: {
            const std::size_t k = spec.degree;
            if (k < 1 || k >= n) {
                throw std::invalid_argument("build_topology: k_regular degree out of range");
            }
            if (k % 2 == 1 && n % 2 == 1) {
                throw std::invalid_argument(
                    "build_topology: odd-degree k_regular needs an even node count");
            }
            // Circulant graph: offsets 1..k/2 in both directions, plus the
            // antipodal matching when the degree is odd.
            for (std::size_t offset = 1; offset <= k / 2; ++offset) {
                for (std::size_t i = 0; i < n; ++i) {
                    add_edge(topo.neighbors, i, (i + offset) % n);
                }
            }
            if (k % 2 == 1) {
                for (std::size_t i = 0; i < n / 2; ++i) {
                    add_edge(topo.neighbors, i, i + n / 2);
                }
            }
            break;
        }
        case TopologyKind::erdos_renyi: {
            if (!(spec.p > 0.0) || !(spec.p <= 1.0)) {
                throw std::invalid_argument("build_topology: p must be in (0, 1]");
            }
            auto engine = make_engine(mix_seed(seed, stream::kTopology));
            std::bernoulli_distribution coin(spec.p);
            bool ok = false;
            for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
                for (auto& nbrs : topo.neighbors) {
                    nbrs.clear();
                }
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = i + 1; j < n; ++j) {
                        if (coin(engine)) {
                            add_edge(topo.neighbors, i, j);
                        }
                    }
                }
                ok = min_degree_one(topo.neighbors) && is_connected(topo.neighbors);
            }
            if (!ok) {
                throw std::runtime_error(
                    "build_topology: no connected erdos_renyi draw in 100 attempts");
            }
            break;
        }
    }

    for (auto& nbrs : topo.neighbors) {
        std::sort(nbrs.begin(), nbrs.end());
    }
    if (!min_degree_one(topo.neighbors) || !is_connected(topo.neighbors)) {
        throw std::invalid_argument("build_topology: parameters yield a disconnected graph");
    }
    return topo;
}

std::uint64_t request_wire_bytes(const Request& request) {
    return 4ULL * request.indices.size();
}

std::uint64_t response_wire_bytes(const Response& response) {
    return 8ULL * response.pairs.size();
}

PrepareOutput node_prepare(NodeState& state, const RoundConfig& config) {
    const std::size_t d = state.model.dims.flat_dim();
    const std::uint64_t batch_seed = mix_seed(state.seed, config.round, stream::kBatch);

    std::vector<GradientVector> batch_grads;
    GradientVector mean_grad;
    if (state.malicious) {
        AttackRound attacked =
            attacked_round(state.model, state.data, state.attack, state.clean_history,
                           config.batch_size, config.num_batches, batch_seed);
        batch_grads = std::move(attacked.batch_gradients);
        mean_grad = std::move(attacked.mean);
        state.clean_history.push_back(std::move(attacked.clean_mean));
        if (state.clean_history.size() > 10) {
            state.clean_history.erase(state.clean_history.begin());
        }
    } else {
        LocalRound local = local_round(state.model, state.data, config.batch_size,
                                       config.num_batches, batch_seed);
        batch_grads = std::move(local.batch_gradients);
        mean_grad = std::move(local.mean);
    }

    BatchSpectra spectra;
    spectra.spectra.reserve(batch_grads.size());
    for (const auto& g : batch_grads) {
        spectra.spectra.push_back(dct_forward(g));
    }
    state.cached_spectrum.coeffs.assign(d, 0.0);
    for (const auto& s : spectra.spectra) {
        for (std::size_t i = 0; i < d; ++i) {
            state.cached_spectrum.coeffs[i] += s.coeffs[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(spectra.spectra.size());
    for (double& c : state.cached_spectrum.coeffs) {
        c *= inv;
    }
    state.cached_gradient = std::move(mean_grad);

    const FrequencyScore score = frequency_score(spectra, config.defense.alpha);
    PrepareOutput out;
    if (config.heatmap_k >= 1) {
        out.heatmap_set = top_k_indices(score, config.heatmap_k).indices;
    }
    if (config.defense.kind == DefenseKind::taser) {
        out.selection = top_k_indices(score, config.defense.k);
        state.selection = out.selection;
        out.request.sender = state.id;
        out.request.indices = out.selection.indices;
    } else {
        state.selection = SelectionSet{};
    }
    return out;
}

Response node_respond(const NodeState& state, const Request& request) {
    const std::size_t d = state.cached_spectrum.dim();
    if (d == 0) {
        throw std::logic_error("node_respond: no cached spectrum for this round");
    }
    Response out;
    out.sender = state.id;
    out.pairs.reserve(request.indices.size());
    std::uint32_t prev = 0;
    bool first = true;
    for (std::uint32_t idx : request.indices) {
        if (!first && idx <= prev) {
            throw std::invalid_argument("node_respond: request indices not increasing");
        }
        if (idx >= d) {
            throw std::invalid_argument("node_respond: request index out of range");
        }
        out.pairs.emplace_back(idx, state.cached_spectrum.coeffs[idx]);
        prev = idx;
        first = false;
    }
    return out;
}

GradientVector taser_aggregate(const Spectrum& self_spectrum,
                               const SelectionSet& selection,
                               const std::vector<Response>& responses, std::size_t d) {
    if (self_spectrum.dim() != d) {
        throw std::invalid_argument("taser_aggregate: spectrum dimension mismatch");
    }
    for (std::uint32_t idx : selection.indices) {
        if (idx >= d) {
            throw std::invalid_argument("taser_aggregate: selection index out of range");
        }
    }
    for (const auto& resp : responses) {
        if (resp.pairs.size() != selection.indices.size()) {
            throw std::invalid_argument("taser_aggregate: response does not cover selection");
        }
        for (std::size_t pos = 0; pos < resp.pairs.size(); ++pos) {
            if (resp.pairs[pos].first != selection.indices[pos]) {
                throw std::invalid_argument("taser_aggregate: response index mismatch");
            }
        }
    }

    Spectrum agg;
    agg.coeffs.assign(d, 0.0);
    const double inv = 1.0 / static_cast<double>(1 + responses.size());
    for (std::size_t pos = 0; pos < selection.indices.size(); ++pos) {
        const std::uint32_t idx = selection.indices[pos];
        double sum = self_spectrum.coeffs[idx];
        for (const auto& resp : responses) {
            sum += resp.pairs[pos].second;
        }
        agg.coeffs[idx] = sum * inv;
    }
    return dct_inverse(agg);
}

GradientVector baseline_aggregate(const DefenseConfig& defense,
                                  const GradientVector& self_grad,
                                  const std::vector<GradientVector>& neighbor_grads,
                                  std::uint64_t seed) {
    const std::size_t d = self_grad.dim();
    for (const auto& g : neighbor_grads) {
        if (g.dim() != d) {
            throw std::invalid_argument("baseline_aggregate: dimension mismatch");
        }
    }
    const std::size_t m = 1 + neighbor_grads.size();

    switch (defense.kind) {
        case DefenseKind::mean: {
            GradientVector out = self_grad;
            for (const auto& g : neighbor_grads) {
                for (std::size_t i = 0; i < d; ++i) {
                    out.values[i] += g.values[i];
                }
            }
            for (double& v : out.values) {
                v /= static_cast<double>(m);
            }
            return out;
        }
        case DefenseKind::weak_dp: {
            if (!(defense.clip_c > 0.0) || !std::isfinite(defense.clip_c)) {
                throw std::invalid_argument("baseline_aggregate: clip_c must be positive");
            }
            if (!(defense.sigma >= 0.0) || !std::isfinite(defense.sigma)) {
                throw std::invalid_argument("baseline_aggregate: sigma must be nonnegative");
            }
            auto clipped_add = [&](const GradientVector& g, std::vector<double>& acc) {
                double norm = 0.0;
                for (double v : g.values) {
                    norm += v * v;
                }
                norm = std::sqrt(norm);
                const double factor =
                    (norm > defense.clip_c) ? defense.clip_c / norm : 1.0;
                for (std::size_t i = 0; i < d; ++i) {
                    acc[i] += g.values[i] * factor;
                }
            };
            std::vector<double> acc(d, 0.0);
            clipped_add(self_grad, acc);
            for (const auto& g : neighbor_grads) {
                clipped_add(g, acc);
            }
            GradientVector out;
            out.values.resize(d);
            for (std::size_t i = 0; i < d; ++i) {
                out.values[i] = acc[i] / static_cast<double>(m);
            }
            if (defense.sigma > 0.0) {
                auto engine = make_engine(seed);
                std::normal_distribution<double> noise(0.0, defense.sigma);
                for (double& v : out.values) {
                    v += noise(engine);
                }
            }
            return out;
        }
        case DefenseKind::krum: {
            const std::size_t f = defense.krum_f;
            if (m < f + 3) {
                throw std::invalid_argument("baseline_aggregate: krum needs n >= f + 3");
            }
            std::vector<const GradientVector*> inputs;
            inputs.reserve(m);
            inputs.push_back(&self_grad);
            for (const auto& g : neighbor_grads) {
                inputs.push_back(&g);
            }
            std::vector<std::vector<double>> dist(m, std::vector<double>(m, 0.0));
            for (std::size_t a = 0; a < m; ++a) {
                for (std::size_t b = a + 1; b < m; ++b) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < d; ++i) {
                        const double diff = inputs[a]->values[i] - inputs[b]->values[i];
                        s += diff * diff;
                    }
                    dist[a][b] = s;
                    dist[b][a] = s;
                }
            }
            // Score each candidate by its n-f-2 closest peers; pick the minimum.
            std::size_t best = 0;
            double best_score = std::numeric_limits<double>::infinity();
            const std::size_t closest = m - f - 2;
            for (std::size_t a = 0; a < m; ++a) {
                std::vector<double> others;
                others.reserve(m - 1);
                for (std::size_t b = 0; b < m; ++b) {
                    if (b != a) {
                        others.push_back(dist[a][b]);
                    }
                }
                std::sort(others.begin(), others.end());
                double score = 0.0;
                for (std::size_t r = 0; r < closest; ++r) {
                    score += others[r];
                }
                if (score < best_score) {
                    best_score = score;
                    best = a;
                }
            }
            return *inputs[best];
        }
        case DefenseKind::taser:
            break;
    }
    throw std::invalid_argument("baseline_aggregate: not a baseline defense");
}

RoundRecord run_round(std::vector<NodeState>& states, const Topology& topology,
                      const RoundConfig& config) {
    const std::size_t n = states.size();
    if (n == 0 || topology.n != n) {
        throw std::invalid_argument("run_round: topology/node count mismatch");
    }
    const std::size_t d = states[0].model.dims.flat_dim();
    const bool taser_mode = config.defense.kind == DefenseKind::taser;
    if (taser_mode && (config.defense.k < 1 || config.defense.k > d)) {
        throw std::invalid_argument("run_round: defense k out of range");
    }

    if (!config.active.empty() && config.active.size() != n) {
        throw std::invalid_argument("run_round: active mask size mismatch");
    }
    auto is_active = [&](std::size_t i) {
        return config.active.empty() || config.active[i] != 0;
    };

    RoundRecord record;
    record.round = config.round;
    record.selections.resize(n);
    record.heatmap_sets.resize(n);
    record.bytes.assign(n, 0);

    auto describe = [&](std::size_t node, const char* phase, const std::exception& e) {
        return "round " + std::to_string(config.round) + ", node " + std::to_string(node) +
               ", " + phase + ": " + e.what();
    };

    std::vector<Request> requests(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_active(i)) {
            continue;
        }
        try {
            PrepareOutput prep = node_prepare(states[i], config);
            record.selections[i] = std::move(prep.selection);
            record.heatmap_sets[i] = std::move(prep.heatmap_set);
            requests[i] = std::move(prep.request);
        } catch (const std::exception& e) {
            throw std::runtime_error(describe(i, "prepare", e));
        }
    }

    std::vector<GradientVector> updates(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_active(i)) {
            continue;
        }
        std::vector<std::uint32_t> peers;
        peers.reserve(topology.degree(i));
        for (std::uint32_t j : topology.neighbors[i]) {
            if (is_active(j)) {
                peers.push_back(j);
            }
        }
        try {
            if (taser_mode) {
                std::uint64_t bytes = request_wire_bytes(requests[i]);
                std::vector<Response> responses;
                responses.reserve(peers.size());
                for (std::uint32_t j : peers) {
                    responses.push_back(node_respond(states[j], requests[i]));
                    bytes += response_wire_bytes(responses.back());
                }
                const std::uint64_t bound =
                    4ULL * config.defense.k + 8ULL * config.defense.k * peers.size();
                if (bytes != bound) {
                    throw std::logic_error("byte accounting does not match the bound");
                }
                record.bytes[i] = bytes;
                updates[i] = taser_aggregate(states[i].cached_spectrum,
                                             states[i].selection, responses, d);
            } else {
                std::vector<GradientVector> neighbor_grads;
                neighbor_grads.reserve(peers.size());
                for (std::uint32_t j : peers) {
                    neighbor_grads.push_back(states[j].cached_gradient);
                }
                updates[i] = baseline_aggregate(
                    config.defense, states[i].cached_gradient, neighbor_grads,
                    mix_seed(states[i].seed, config.round, stream::kNoise));
                record.bytes[i] = 8ULL * d * (peers.size() + 1);
            }
        } catch (const std::exception& e) {
            throw std::runtime_error(describe(i, "aggregate", e));
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (is_active(i)) {
            states[i].model = apply_update(states[i].model, updates[i], config.lr);
        }
    }
    return record;
}

}  // namespace taser
