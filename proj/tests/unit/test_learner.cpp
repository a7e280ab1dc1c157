#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "taser/learner.hpp"

using namespace taser;

namespace {

LabeledDataset make_dataset(std::size_t input_dim, std::size_t num_classes,
                            std::vector<double> features, std::vector<int> labels) {
    LabeledDataset data;
    data.input_dim = input_dim;
    data.num_classes = num_classes;
    data.features = std::move(features);
    data.labels = std::move(labels);
    return data;
}

// Mean cross-entropy computed independently of the library's backward pass,
// used as the finite-difference reference for batch_gradient.
double mean_loss(const ModelParams& model, const LabeledDataset& data) {
    const ModelDims& dims = model.dims;
    double total = 0.0;
    for (std::size_t s = 0; s < data.size(); ++s) {
        const double* x = data.sample(s);
        std::vector<double> hidden(dims.hidden_dim);
        for (std::size_t j = 0; j < dims.hidden_dim; ++j) {
            double z = model.b1(j);
            for (std::size_t i = 0; i < dims.input_dim; ++i) {
                z += model.w1(j, i) * x[i];
            }
            hidden[j] = std::tanh(z);
        }
        std::vector<double> logits(dims.num_classes);
        double z_max = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < dims.num_classes; ++c) {
            double z = model.b2(c);
            for (std::size_t j = 0; j < dims.hidden_dim; ++j) {
                z += model.w2(c, j) * hidden[j];
            }
            logits[c] = z;
            z_max = std::max(z_max, z);
        }
        double denom = 0.0;
        for (double z : logits) {
            denom += std::exp(z - z_max);
        }
        const auto y = static_cast<std::size_t>(data.labels[s]);
        total += -(logits[y] - z_max - std::log(denom));
    }
    return total / static_cast<double>(data.size());
}

double l2_norm(const std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) {
        sq += x * x;
    }
    return std::sqrt(sq);
}

std::filesystem::path temp_csv_path(const char* stem) {
    return std::filesystem::temp_directory_path() /
           (std::string("taser_test_") + stem + ".csv");
}

}  // namespace

TEST_SUITE("learner") {

TEST_CASE("flat layout bookkeeping") {
    const ModelDims dims{64, 32, 3};
    CHECK(dims.flat_dim() == 2179);
    CHECK(dims.b1_offset() == 2048);
    CHECK(dims.w2_offset() == 2080);
    CHECK(dims.b2_offset() == 2176);
}

TEST_CASE("model initialization") {
    const ModelDims dims{5, 4, 3};
    const ModelParams a = init_model(42, dims);
    const ModelParams b = init_model(42, dims);
    const ModelParams c = init_model(43, dims);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(a.values.size() == dims.flat_dim());

    for (std::size_t j = 0; j < dims.hidden_dim; ++j) {
        CHECK(a.b1(j) == 0.0);
    }
    for (std::size_t cls = 0; cls < dims.num_classes; ++cls) {
        CHECK(a.b2(cls) == 0.0);
    }
    const double bound1 = 1.0 / std::sqrt(5.0);
    const double bound2 = 1.0 / std::sqrt(4.0);
    for (std::size_t j = 0; j < dims.hidden_dim; ++j) {
        for (std::size_t i = 0; i < dims.input_dim; ++i) {
            CHECK(std::abs(a.w1(j, i)) < bound1);
        }
    }
    for (std::size_t cls = 0; cls < dims.num_classes; ++cls) {
        for (std::size_t j = 0; j < dims.hidden_dim; ++j) {
            CHECK(std::abs(a.w2(cls, j)) < bound2);
        }
    }

    CHECK_THROWS_AS(init_model(1, ModelDims{0, 4, 3}), std::invalid_argument);
    CHECK_THROWS_AS(init_model(1, ModelDims{5, 0, 3}), std::invalid_argument);
    CHECK_THROWS_AS(init_model(1, ModelDims{5, 4, 1}), std::invalid_argument);
}

TEST_CASE("backprop matches central finite differences") {
    const ModelDims dims{2, 2, 2};
    ModelParams model = init_model(7, dims);
    const LabeledDataset batch = make_dataset(
        2, 2, {0.3, -1.2, 0.9, 0.4, -0.5, 1.1}, {0, 1, 0});

    const GradientVector grad = batch_gradient(model, batch);
    REQUIRE(grad.values.size() == dims.flat_dim());

    const double h = 1e-6;
    for (std::size_t p = 0; p < dims.flat_dim(); ++p) {
        const double saved = model.values[p];
        model.values[p] = saved + h;
        const double loss_plus = mean_loss(model, batch);
        model.values[p] = saved - h;
        const double loss_minus = mean_loss(model, batch);
        model.values[p] = saved;

        const double fd = (loss_plus - loss_minus) / (2.0 * h);
        const double an = grad.values[p];
        const double rel = std::abs(fd - an) / std::max(1.0, std::abs(fd) + std::abs(an));
        CAPTURE(p);
        CHECK(rel <= 1e-5);
    }
}

TEST_CASE("duplicating a batch leaves the mean gradient unchanged") {
    const ModelDims dims{3, 4, 2};
    const ModelParams model = init_model(11, dims);
    LabeledDataset data = make_blobs(8, 3, 2, 0.7, 5);

    std::vector<std::size_t> once(8);
    std::iota(once.begin(), once.end(), std::size_t{0});
    std::vector<std::size_t> twice = once;
    twice.insert(twice.end(), once.begin(), once.end());

    const GradientVector g1 = batch_gradient(model, data, once);
    const GradientVector g2 = batch_gradient(model, data, twice);
    REQUIRE(g1.dim() == g2.dim());
    // Doubling the sample list changes the accumulation order, so allow
    // summation rounding but nothing larger.
    for (std::size_t i = 0; i < g1.dim(); ++i) {
        CHECK(std::abs(g1.values[i] - g2.values[i]) <= 1e-12);
    }
}

TEST_CASE("gradient vanishes at an attainable optimum") {
    // Every input appears with both labels, so the optimum is the finite
    // point where the model outputs 0.5/0.5 on each of them. Plain descent
    // can actually reach a near-zero gradient there instead of chasing a
    // separating margin off to infinity.
    const LabeledDataset data = make_dataset(
        2, 2,
        {0.5, 0.3, 0.5, 0.3, -0.7, 0.2, -0.7, 0.2},
        {0, 1, 0, 1});
    ModelParams model = init_model(3, ModelDims{2, 2, 2});
    for (int step = 0; step < 20000; ++step) {
        model = apply_update(model, batch_gradient(model, data), 0.5);
    }
    CHECK(l2_norm(batch_gradient(model, data).values) < 1e-3);
}

TEST_CASE("batch draws deal a shuffled deck") {
    const auto single = draw_batches(6, 6, 1, 9);
    REQUIRE(single.size() == 1);
    std::vector<std::size_t> sorted = single[0];
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});

    // n=5, batch_size=2: batches 0 and 1 come from one deck pass (disjoint),
    // then a reshuffle refills the deck for batches 2 and 3.
    const auto batches = draw_batches(5, 2, 4, 17);
    REQUIRE(batches.size() == 4);
    for (const auto& b : batches) {
        CHECK(b.size() == 2);
        for (std::size_t idx : b) {
            CHECK(idx < 5);
        }
    }
    std::set<std::size_t> first_pass(batches[0].begin(), batches[0].end());
    first_pass.insert(batches[1].begin(), batches[1].end());
    CHECK(first_pass.size() == 4);

    CHECK(draw_batches(5, 2, 4, 17) == batches);
    CHECK(draw_batches(5, 2, 4, 18) != batches);

    CHECK_THROWS_AS(draw_batches(5, 6, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(draw_batches(5, 0, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(draw_batches(5, 2, 0, 0), std::invalid_argument);
}

TEST_CASE("local round aggregates its own batch gradients") {
    const ModelDims dims{3, 3, 2};
    const ModelParams model = init_model(21, dims);
    const LabeledDataset data = make_blobs(32, 3, 2, 0.6, 22);

    const LocalRound one = local_round(model, data, 8, 1, 5);
    REQUIRE(one.batch_gradients.size() == 1);
    CHECK(one.mean.values == one.batch_gradients[0].values);

    const LocalRound many = local_round(model, data, 8, 3, 5);
    REQUIRE(many.batch_gradients.size() == 3);
    std::vector<double> acc(dims.flat_dim(), 0.0);
    for (const auto& g : many.batch_gradients) {
        for (std::size_t i = 0; i < acc.size(); ++i) {
            acc[i] += g.values[i];
        }
    }
    for (double& v : acc) {
        v *= 1.0 / 3.0;
    }
    CHECK(many.mean.values == acc);

    const LocalRound rerun = local_round(model, data, 8, 3, 5);
    CHECK(rerun.mean.values == many.mean.values);
    const LocalRound other_seed = local_round(model, data, 8, 3, 6);
    CHECK(other_seed.mean.values != many.mean.values);
}

TEST_CASE("descent step arithmetic") {
    const ModelParams model = init_model(2, ModelDims{2, 2, 2});
    GradientVector update;
    update.values.assign(model.values.size(), 0.0);
    CHECK(apply_update(model, update, 0.5).values == model.values);

    std::mt19937_64 engine(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : update.values) {
        v = u(engine);
    }
    CHECK(apply_update(model, update, 0.0).values == model.values);

    const ModelParams stepped = apply_update(model, update, 0.25);
    for (std::size_t i = 0; i < model.values.size(); ++i) {
        CHECK(stepped.values[i] == model.values[i] - 0.25 * update.values[i]);
    }

    GradientVector wrong;
    wrong.values.assign(3, 0.0);
    CHECK_THROWS_AS(apply_update(model, wrong, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(apply_update(model, update, std::nan("")), std::invalid_argument);
}

TEST_CASE("prediction ties go to the lowest class") {
    ModelParams zero;
    zero.dims = ModelDims{3, 2, 10};
    zero.values.assign(zero.dims.flat_dim(), 0.0);
    const double x[3] = {0.4, -0.2, 1.0};
    CHECK(predict(zero, x) == 0);
}

TEST_CASE("accuracy counts exact top-1 matches") {
    // All-zero weights predict class 0 everywhere; with one sample per class
    // over ten classes that is exactly 10% accuracy.
    ModelParams zero;
    zero.dims = ModelDims{2, 2, 10};
    zero.values.assign(zero.dims.flat_dim(), 0.0);
    LabeledDataset data;
    data.input_dim = 2;
    data.num_classes = 10;
    for (int i = 0; i < 10; ++i) {
        data.features.push_back(0.1 * i);
        data.features.push_back(-0.3);
        data.labels.push_back(i);
    }
    CHECK(evaluate(zero, data) == 0.1);

    const LabeledDataset one = make_dataset(2, 10, {1.0, 2.0}, {0});
    CHECK(evaluate(zero, one) == 1.0);
}

TEST_CASE("iid partition is a balanced disjoint cover") {
    // feature[0] doubles as a sample id so shard contents can be traced.
    const std::size_t n = 53;
    LabeledDataset data;
    data.input_dim = 2;
    data.num_classes = 3;
    for (std::size_t i = 0; i < n; ++i) {
        data.features.push_back(static_cast<double>(i));
        data.features.push_back(0.5);
        data.labels.push_back(static_cast<int>(i % 3));
    }

    const auto whole = partition_data(data, 1, {PartitionScheme::Kind::iid, 0.5}, 4);
    REQUIRE(whole.size() == 1);
    CHECK(whole[0].size() == n);

    const auto parts = partition_data(data, 4, {PartitionScheme::Kind::iid, 0.5}, 4);
    REQUIRE(parts.size() == 4);
    std::vector<double> ids;
    std::size_t min_size = n;
    std::size_t max_size = 0;
    for (const auto& shard : parts) {
        CHECK(shard.size() >= 1);
        min_size = std::min(min_size, shard.size());
        max_size = std::max(max_size, shard.size());
        for (std::size_t i = 0; i < shard.size(); ++i) {
            ids.push_back(shard.sample(i)[0]);
        }
    }
    CHECK(max_size - min_size <= 1);
    std::sort(ids.begin(), ids.end());
    REQUIRE(ids.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(ids[i] == static_cast<double>(i));
    }

    CHECK_THROWS_AS(partition_data(data, n + 1, {PartitionScheme::Kind::iid, 0.5}, 4),
                    std::invalid_argument);
}

TEST_CASE("dirichlet partition skews label mixtures") {
    const LabeledDataset data = make_blobs(300, 2, 3, 0.5, 77);

    // Imbalance metric: per shard, the share of its most common label,
    // averaged over shards. An even mixture of 3 classes scores ~1/3.
    const auto imbalance = [&](const std::vector<LabeledDataset>& parts) {
        double total = 0.0;
        for (const auto& shard : parts) {
            std::vector<std::size_t> counts(3, 0);
            for (int label : shard.labels) {
                counts[static_cast<std::size_t>(label)]++;
            }
            total += static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
                     static_cast<double>(shard.size());
        }
        return total / static_cast<double>(parts.size());
    };

    double iid_sum = 0.0;
    double skew_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto iid = partition_data(data, 6, {PartitionScheme::Kind::iid, 0.5}, seed);
        const auto skew =
            partition_data(data, 6, {PartitionScheme::Kind::dirichlet, 0.1}, seed);

        std::size_t iid_total = 0;
        std::size_t skew_total = 0;
        for (const auto& shard : iid) {
            iid_total += shard.size();
        }
        for (const auto& shard : skew) {
            CHECK(shard.size() >= 1);
            skew_total += shard.size();
        }
        CHECK(iid_total == data.size());
        CHECK(skew_total == data.size());

        iid_sum += imbalance(iid);
        skew_sum += imbalance(skew);
    }
    CHECK(skew_sum / 20.0 > iid_sum / 20.0 + 0.1);

    CHECK_THROWS_AS(partition_data(data, 4, {PartitionScheme::Kind::dirichlet, 0.0}, 1),
                    std::invalid_argument);
}

TEST_CASE("trigger stamping") {
    const std::vector<double> sample = {0.1, 0.2, 0.3, 0.4};

    TriggerSpec empty;
    CHECK(apply_trigger(sample, empty) == sample);

    TriggerSpec trigger;
    trigger.feature_indices = {1, 3};
    trigger.trigger_values = {9.0, -9.0};
    trigger.target_label = 0;

    const auto stamped = apply_trigger(sample, trigger);
    CHECK(stamped == std::vector<double>{0.1, 9.0, 0.3, -9.0});
    CHECK(apply_trigger(stamped, trigger) == stamped);

    TriggerSpec out_of_range;
    out_of_range.feature_indices = {4};
    out_of_range.trigger_values = {1.0};
    CHECK_THROWS_AS(apply_trigger(sample, out_of_range), std::invalid_argument);

    TriggerSpec duplicated;
    duplicated.feature_indices = {1, 1};
    duplicated.trigger_values = {1.0, 2.0};
    CHECK_THROWS_AS(apply_trigger(sample, duplicated), std::invalid_argument);
}

TEST_CASE("synthetic blobs are balanced, deterministic and learnable") {
    const LabeledDataset a = make_blobs(90, 2, 3, 0.3, 12345);
    const LabeledDataset b = make_blobs(90, 2, 3, 0.3, 12345);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);

    std::vector<std::size_t> counts(3, 0);
    for (int label : a.labels) {
        counts[static_cast<std::size_t>(label)]++;
    }
    CHECK(counts == std::vector<std::size_t>{30, 30, 30});

    // Zero spread collapses every class onto its center.
    const LabeledDataset tight = make_blobs(12, 3, 4, 0.0, 9);
    for (std::size_t i = 0; i < tight.size(); ++i) {
        for (std::size_t j = i + 1; j < tight.size(); ++j) {
            if (tight.labels[i] == tight.labels[j]) {
                for (std::size_t f = 0; f < 3; ++f) {
                    CHECK(tight.sample(i)[f] == tight.sample(j)[f]);
                }
            }
        }
    }

    const LabeledDataset train = make_blobs(300, 2, 3, 0.3, 12345);
    ModelParams model = init_model(7, ModelDims{2, 8, 3});
    for (int step = 0; step < 300; ++step) {
        model = apply_update(model, batch_gradient(model, train), 0.5);
    }
    CHECK(evaluate(model, train) >= 0.95);
}

TEST_CASE("csv loading") {
    const auto path = temp_csv_path("ok");
    {
        std::ofstream out(path);
        out << "0.5,1.25,0\n";
        out << "-1.5,2.0,2\r\n";  // CRLF line must parse the same
        out << "\n";              // blank lines are skipped
        out << "3.25,-0.75,1\n";
    }
    const LabeledDataset data = load_dataset_csv(path.string());
    std::filesystem::remove(path);

    CHECK(data.size() == 3);
    CHECK(data.input_dim == 2);
    CHECK(data.num_classes == 3);
    CHECK(data.labels == std::vector<int>{0, 2, 1});
    CHECK(data.sample(1)[0] == -1.5);
    CHECK(data.sample(2)[1] == -0.75);

    CHECK_THROWS_AS(load_dataset_csv("/nonexistent/taser.csv"), std::runtime_error);

    const auto bad = temp_csv_path("bad");
    {
        std::ofstream out(bad);
        out << "1.0,2.0,0\n";
        out << "1.0,0\n";  // column count changes mid-file
    }
    CHECK_THROWS_AS(load_dataset_csv(bad.string()), std::runtime_error);
    {
        std::ofstream out(bad);
        out << "1.0,2.0,0.5\n";  // fractional label
    }
    CHECK_THROWS_AS(load_dataset_csv(bad.string()), std::runtime_error);
    {
        std::ofstream out(bad);
        out << "1.0,abc,0\n";  // non-numeric feature
    }
    CHECK_THROWS_AS(load_dataset_csv(bad.string()), std::runtime_error);
    std::filesystem::remove(bad);
}

TEST_CASE("gradient input validation") {
    const ModelParams model = init_model(1, ModelDims{2, 2, 2});
    const LabeledDataset data = make_dataset(2, 2, {0.0, 1.0}, {1});
    CHECK_THROWS_AS(batch_gradient(model, data, {}), std::invalid_argument);
    CHECK_THROWS_AS(batch_gradient(model, data, {5}), std::invalid_argument);

    const LabeledDataset wrong_dim = make_dataset(3, 2, {0.0, 1.0, 2.0}, {1});
    CHECK_THROWS_AS(batch_gradient(model, wrong_dim), std::invalid_argument);
}

}  // TEST_SUITE
