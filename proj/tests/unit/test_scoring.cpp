#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "taser/scoring.hpp"

using namespace taser;

namespace {

BatchSpectra random_spectra(std::mt19937_64& engine, std::size_t batches, std::size_t d) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    BatchSpectra bs;
    bs.spectra.resize(batches);
    for (auto& s : bs.spectra) {
        s.coeffs.resize(d);
        for (double& c : s.coeffs) {
            c = u(engine);
        }
    }
    return bs;
}

std::vector<std::size_t> rank_order(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return a < b;
    });
    return order;
}

}  // namespace

TEST_SUITE("scoring") {

TEST_CASE("energy term sums squared coefficients across batches") {
    CHECK(energy_term({{Spectrum{{2.0, -1.0}}}}) == std::vector<double>{4.0, 1.0});
    CHECK(energy_term({{Spectrum{{1.0, 0.0}}, Spectrum{{-1.0, 0.0}}}}) ==
          std::vector<double>{2.0, 0.0});

    std::mt19937_64 engine(31);
    const BatchSpectra bs = random_spectra(engine, 8, 32);
    const std::vector<double> got = energy_term(bs);
    for (std::size_t k = 0; k < 32; ++k) {
        double expect = 0.0;
        for (const auto& s : bs.spectra) {
            expect += s.coeffs[k] * s.coeffs[k];
        }
        CHECK(got[k] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("direction term is the absolute coefficient sum") {
    CHECK(direction_term({{Spectrum{{1.0, 3.0}}, Spectrum{{-1.0, 3.0}}}}) ==
          std::vector<double>{0.0, 6.0});
    CHECK(direction_term({{Spectrum{{-5.0}}}}) == std::vector<double>{5.0});

    std::mt19937_64 engine(37);
    const BatchSpectra bs = random_spectra(engine, 8, 32);
    const std::vector<double> got = direction_term(bs);
    for (std::size_t k = 0; k < 32; ++k) {
        double sum = 0.0;
        for (const auto& s : bs.spectra) {
            sum += s.coeffs[k];
        }
        CHECK(got[k] == doctest::Approx(std::fabs(sum)).epsilon(1e-12));
    }
}

TEST_CASE("alpha boundaries collapse to the individual terms") {
    std::mt19937_64 engine(41);
    const BatchSpectra bs = random_spectra(engine, 4, 16);
    CHECK(frequency_score(bs, 1.0).scores == energy_term(bs));
    CHECK(frequency_score(bs, 0.0).scores == direction_term(bs));
}

TEST_CASE("balanced mix matches hand evaluation") {
    const BatchSpectra bs{{Spectrum{{1.0, 3.0}}, Spectrum{{-1.0, 3.0}}}};
    const FrequencyScore score = frequency_score(bs, 0.5);
    CHECK(score.scores[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(score.scores[1] == doctest::Approx(12.0).epsilon(1e-12));
    CHECK(score.alpha == 0.5);
}

TEST_CASE("scores are nonnegative") {
    std::mt19937_64 engine(43);
    for (double alpha : {0.0, 0.3, 0.5, 1.0}) {
        const BatchSpectra bs = random_spectra(engine, 5, 20);
        for (double s : frequency_score(bs, alpha).scores) {
            CHECK(s >= 0.0);
        }
    }
}

TEST_CASE("batch order does not affect the score") {
    // Reordering batches only permutes the terms of each per-frequency sum,
    // so the scores agree up to summation rounding.
    std::mt19937_64 engine(47);
    BatchSpectra bs = random_spectra(engine, 6, 24);
    const std::vector<double> before = frequency_score(bs, 0.5).scores;
    std::reverse(bs.spectra.begin(), bs.spectra.end());
    std::swap(bs.spectra[1], bs.spectra[3]);
    const std::vector<double> after = frequency_score(bs, 0.5).scores;
    REQUIRE(after.size() == before.size());
    for (std::size_t k = 0; k < before.size(); ++k) {
        CHECK(after[k] == doctest::Approx(before[k]).epsilon(1e-12));
    }
}

TEST_CASE("doubling every spectrum scales the boundary scores exactly") {
    std::mt19937_64 engine(53);
    BatchSpectra bs = random_spectra(engine, 4, 18);
    const std::vector<double> e = frequency_score(bs, 1.0).scores;
    const std::vector<double> dir = frequency_score(bs, 0.0).scores;
    for (auto& s : bs.spectra) {
        for (double& c : s.coeffs) {
            c *= 2.0;
        }
    }
    const std::vector<double> e2 = frequency_score(bs, 1.0).scores;
    const std::vector<double> d2 = frequency_score(bs, 0.0).scores;
    for (std::size_t k = 0; k < 18; ++k) {
        CHECK(e2[k] == 4.0 * e[k]);
        CHECK(d2[k] == 2.0 * dir[k]);
    }
}

TEST_CASE("balanced mix ranks identically to the unweighted sum") {
    std::mt19937_64 engine(59);
    const BatchSpectra bs = random_spectra(engine, 4, 40);
    const std::vector<double> mixed = frequency_score(bs, 0.5).scores;
    const std::vector<double> e = energy_term(bs);
    const std::vector<double> d = direction_term(bs);
    std::vector<double> unweighted(40);
    for (std::size_t k = 0; k < 40; ++k) {
        unweighted[k] = e[k] + d[k];
    }
    CHECK(rank_order(mixed) == rank_order(unweighted));
}

TEST_CASE("invalid inputs are rejected") {
    const BatchSpectra ok{{Spectrum{{1.0, 2.0}}}};
    CHECK_THROWS_AS(frequency_score(ok, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(frequency_score(ok, 1.1), std::invalid_argument);
    CHECK_THROWS_AS(energy_term(BatchSpectra{}), std::invalid_argument);
    const BatchSpectra ragged{{Spectrum{{1.0, 2.0}}, Spectrum{{1.0}}}};
    CHECK_THROWS_AS(energy_term(ragged), std::invalid_argument);
    const BatchSpectra bad{{Spectrum{{std::nan("")}}}};
    CHECK_THROWS_AS(direction_term(bad), std::invalid_argument);
}

}  // TEST_SUITE
