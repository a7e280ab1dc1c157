// Microbenchmarks for the hot paths: the gradient spectral transform (fast
// path vs the quadratic reference) and a full simulated round. Typical model
// dimension in the standard setup is 2179, which exercises the arbitrary-size
// branch of the transform; 4096 hits the pure power-of-two branch.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>
#include <vector>

#include "taser/learner.hpp"
#include "taser/random.hpp"
#include "taser/scoring.hpp"
#include "taser/selection.hpp"
#include "taser/spectral.hpp"
#include "taser/swarm.hpp"

namespace {

taser::GradientVector random_signal(std::size_t d, std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    taser::GradientVector signal;
    signal.values.resize(d);
    for (double& v : signal.values) v = gauss(engine);
    return signal;
}

void BM_DctForward(benchmark::State& state) {
    const auto signal = random_signal(static_cast<std::size_t>(state.range(0)), 11);
    for (auto _ : state) {
        benchmark::DoNotOptimize(taser::dct_forward(signal));
    }
}

void BM_DctForwardNaive(benchmark::State& state) {
    const auto signal = random_signal(static_cast<std::size_t>(state.range(0)), 11);
    for (auto _ : state) {
        benchmark::DoNotOptimize(taser::dct_forward_naive(signal));
    }
}

void BM_DctRoundtrip(benchmark::State& state) {
    const auto signal = random_signal(static_cast<std::size_t>(state.range(0)), 13);
    for (auto _ : state) {
        benchmark::DoNotOptimize(taser::dct_inverse(taser::dct_forward(signal)));
    }
}

void BM_TopKSelection(benchmark::State& state) {
    const std::size_t d = 2179;
    const std::size_t k = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 engine(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    taser::FrequencyScore score;
    score.scores.resize(d);
    for (double& s : score.scores) s = gauss(engine) * gauss(engine);
    for (auto _ : state) {
        benchmark::DoNotOptimize(taser::top_k_indices(score, k));
    }
}

// One full round of the 10-node complete-graph swarm, spectral defense on.
// Dominated by local training plus one forward transform per node.
void BM_SwarmRound(benchmark::State& state) {
    const taser::ModelDims dims{16, 16, 3};
    const taser::ModelParams model = taser::init_model(21, dims);
    const taser::LabeledDataset pool = taser::make_blobs(800, 16, 3, 0.5, 22);
    const std::size_t n = 10;

    auto shards = taser::partition_data(pool, n, {taser::PartitionScheme::Kind::iid, 0.5},
                                        taser::mix_seed(23, taser::stream::kPartition));
    std::vector<taser::NodeState> states;
    for (std::size_t i = 0; i < n; ++i) {
        taser::NodeState node;
        node.id = static_cast<std::uint32_t>(i);
        node.seed = taser::mix_seed(23, i);
        node.model = model;
        node.data = std::move(shards[i]);
        states.push_back(std::move(node));
    }
    const taser::Topology topo =
        taser::build_topology({taser::TopologyKind::erdos_renyi, 0, 1.0}, n,
                              taser::mix_seed(23, taser::stream::kTopology));

    taser::RoundConfig config;
    config.defense.kind = taser::DefenseKind::taser;
    config.defense.k = dims.flat_dim() / 10;
    config.batch_size = 16;
    config.num_batches = 2;
    config.lr = 0.1;

    std::uint64_t round = 0;
    for (auto _ : state) {
        config.round = round++;
        taser::run_round(states, topo, config);
    }
}

}  // namespace

BENCHMARK(BM_DctForward)->Arg(256)->Arg(1023)->Arg(2179)->Arg(4096);
BENCHMARK(BM_DctForwardNaive)->Arg(256)->Arg(1023);
BENCHMARK(BM_DctRoundtrip)->Arg(2179);
BENCHMARK(BM_TopKSelection)->Arg(16)->Arg(218)->Arg(2179);
BENCHMARK(BM_SwarmRound)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
