#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fairrec/errors.hpp"
#include "fairrec/minority_index.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace fairrec;

namespace {

constexpr double kExact = 1e-12;

double im_of(const ImIndex& im, const RatingMatrix& m, RawId raw_item) { return im.value(*m.ids().find_item(raw_item)); }

double um_of(const UmIndex& um, const RatingMatrix& m, RawId raw_user) {
    return um.values.at(*m.ids().find_user(raw_user)).value();
}


}  // namespace

TEST_SUITE("minority_index") {

TEST_CASE("toy item indexes, pooled") {
    const RatingMatrix m = fixtures::toy_ratings();
    const GroupAssignment g = assign_groups(fixtures::toy_demographics(), Scheme::gender);
    const ImIndex im = compute_im(m, g, fixtures::toy_thresholds(), ImMode::pooled);
    CHECK(im_of(im, m, 1) == doctest::Approx(1.0).epsilon(kExact));
    CHECK(im_of(im, m, 2) == doctest::Approx(-1.0).epsilon(kExact));
    CHECK(im_of(im, m, 3) == doctest::Approx(0.5).epsilon(kExact));
    CHECK(im_of(im, m, 4) == doctest::Approx(-0.6).epsilon(kExact));
    CHECK(std::none_of(im.neutral.begin(), im.neutral.end(), [](auto f) { return f != 0; }));
}

TEST_CASE("toy item a, score difference") {
    const RatingMatrix m = fixtures::toy_ratings();
    const GroupAssignment g = assign_groups(fixtures::toy_demographics(), Scheme::gender);
    const ImIndex im = compute_im(m, g, fixtures::toy_thresholds(), ImMode::score_difference);
    CHECK(im_of(im, m, 1) == doctest::Approx(2.0).epsilon(kExact));
    for (double v : im.values) CHECK((v >= -2.0 && v <= 2.0));
}

TEST_CASE("toy user indexes") {
    const RatingMatrix m = fixtures::toy_ratings();
    const GroupAssignment g = assign_groups(fixtures::toy_demographics(), Scheme::gender);
    const ThresholdConfig cfg = fixtures::toy_thresholds();
    const ImIndex im = compute_im(m, g, cfg, ImMode::pooled);

    const UmIndex toy = compute_um(m, im, cfg, UmMode::toy_divide_by_max);
    CHECK(toy.scores[*m.ids().find_user(1)].value() == doctest::Approx(2.4).epsilon(kExact));
    CHECK(toy.scores[*m.ids().find_user(4)].value() == doctest::Approx(-4.7).epsilon(kExact));
    const std::vector<std::pair<RawId, double>> expected{{1, 0.48}, {2, 0.82}, {3, -0.72}, {4, -0.94}, {5, 0.82}};
    for (const auto& [raw, value] : expected) CHECK(um_of(toy, m, raw) == doctest::Approx(value).epsilon(kExact));

    const UmIndex formula = compute_um(m, im, cfg, UmMode::per_formula);
    CHECK(um_of(formula, m, 1) == doctest::Approx(0.4).epsilon(kExact));
}

TEST_CASE("identical group behaviour gives zero, midpoint voter gives zero") {
    const std::vector<RawRating> raw{{1, 1, 5}, {2, 1, 5}, {1, 2, 3}, {2, 2, 1}};
    const RatingMatrix m = RatingMatrix::from_raw(raw, 5);
    const GroupAssignment g(Scheme::gender, {{1, GroupLabel::minority}, {2, GroupLabel::majority}});
    const ThresholdConfig cfg{4, 2, 0};
    const ImIndex im = compute_im(m, g, cfg, ImMode::pooled);
    CHECK(im_of(im, m, 1) == 0.0);

    const std::vector<RawRating> mids{{1, 1, 3}, {1, 2, 3}, {2, 1, 5}, {2, 2, 1}};
    const RatingMatrix mm = RatingMatrix::from_raw(mids, 5);
    const ImIndex im2 = compute_im(mm, g, cfg, ImMode::pooled);
    const UmIndex um = compute_um(mm, im2, cfg);
    CHECK(um_of(um, mm, 1) == 0.0);
}

TEST_CASE("min side votes neutralizes thin items") {
    const RatingMatrix m = fixtures::toy_ratings();
    const GroupAssignment g = assign_groups(fixtures::toy_demographics(), Scheme::gender);
    const ImIndex im = compute_im(m, g, {4, 2, 3}, ImMode::pooled);  // only 2 females exist
    for (ItemId i = 0; i < im.size(); ++i) {
        CHECK(im.is_neutral(i));
        CHECK(im.value(i) == 0.0);
    }
}

TEST_CASE("empty group is an error naming it") {
    const RatingMatrix m = fixtures::toy_ratings();
    const GroupAssignment only_major(Scheme::gender, {{1, GroupLabel::majority}, {2, GroupLabel::majority}});
    try {
        compute_im(m, only_major, fixtures::toy_thresholds());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("female") != std::string::npos);
    }
}

TEST_CASE("users without votes have no user index") {
    std::vector<RawRating> raw{{1, 1, 5}, {2, 1, 1}};
    const RatingMatrix full = RatingMatrix::from_raw(raw, 5);
    const RatingMatrix m = full.with_entries({full.entries()[0]});
    const GroupAssignment g(Scheme::gender, {{1, GroupLabel::majority}, {2, GroupLabel::minority}});
    const ImIndex im = compute_im(full, g, {4, 2, 0});
    const UmIndex um = compute_um(m, im, {4, 2, 0});
    CHECK(um.values[0].has_value());
    CHECK_FALSE(um.values[1].has_value());
}

TEST_CASE("normalization") {
    const std::vector<double> a{-1, 0, 1};
    const NormalizedIndex na = normalize(a);
    CHECK(na.at(0) == 0.0);
    CHECK(na.at(1) == 0.5);
    CHECK(na.at(2) == 1.0);

    const std::vector<double> t{0.48, 0.82, -0.72, -0.94, 0.82};
    const NormalizedIndex nt = normalize(t);
    const std::vector<double> expected{0.80682, 1, 0.125, 0, 1};
    for (std::size_t k = 0; k < t.size(); ++k) CHECK(nt.at(k) == doctest::Approx(expected[k]).epsilon(1e-5));

    const std::vector<double> c{0.3, 0.3};
    const NormalizedIndex nc = normalize(c);
    CHECK(nc.at(0) == 0.5);
    CHECK(nc.apply(7.0) == 0.5);

    CHECK(na.apply(5.0) == 1.0);  // clamped outside the fitted range
    CHECK(na.apply(-5.0) == 0.0);
    CHECK_THROWS(normalize(std::span<const double>{}));
}

TEST_CASE("toy classification") {
    const RatingMatrix m = fixtures::toy_ratings();
    const GroupAssignment g = assign_groups(fixtures::toy_demographics(), Scheme::gender);
    const ImIndex im = compute_im(m, g, fixtures::toy_thresholds(), ImMode::pooled);
    const UmIndex um = compute_um(m, im, fixtures::toy_thresholds(), UmMode::toy_divide_by_max);
    const Classification c = classify_users(um, g, m.ids());
    CHECK(c.minority.correct == 2);
    CHECK(c.minority.incorrect == 0);
    CHECK(c.majority.correct == 3);
    CHECK(c.majority.percent() == 100.0);
    CHECK(c.minority.name == "female");
}

TEST_CASE("zero user index counts as incorrect") {
    UmIndex um;
    um.values = {0.0, 0.0, std::nullopt};
    const IdSpace ids({1, 2, 3}, {1});
    const GroupAssignment g(Scheme::gender,
                            {{1, GroupLabel::minority}, {2, GroupLabel::majority}, {3, GroupLabel::majority}});
    const Classification c = classify_users(um, g, ids);
    CHECK(c.minority.incorrect == 1);
    CHECK(c.majority.incorrect == 1);
    CHECK(c.majority.total() == 1);
}

TEST_CASE("brute-force oracle agreement on random small matrices") {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t users = 2 + rng.uniform_index(7), items = 1 + rng.uniform_index(8);
        const RatingMatrix m = fixtures::random_ratings(rng, users, items, 0.3 + 0.6 * rng.uniform01());
        if (m.num_users() < 2) continue;
        const GroupAssignment g = fixtures::random_groups(rng, m.ids());
        const ThresholdConfig cfg{4, 2, static_cast<std::size_t>(rng.uniform_index(3))};
        const oracles::IndexOracle oracle(m, g);
        for (ImMode mode : {ImMode::pooled, ImMode::score_difference}) {
            const ImIndex im = compute_im(m, g, cfg, mode);
            std::vector<double> values(m.num_items());
            for (ItemId i = 0; i < m.num_items(); ++i) {
                const auto want = oracle.im(i, cfg, mode);
                CHECK(im.is_neutral(i) == !want.has_value());
                values[i] = want.value_or(0.0);
                CHECK(im.value(i) == doctest::Approx(values[i]).epsilon(kExact));
            }
            for (UmMode um_mode : {UmMode::per_formula, UmMode::toy_divide_by_max}) {
                const UmIndex um = compute_um(m, im, cfg, um_mode);
                for (UserId u = 0; u < m.num_users(); ++u) {
                    const auto want = oracle.um(u, values, cfg, um_mode);
                    REQUIRE(um.values[u].has_value() == want.has_value());
                    if (want) CHECK(*um.values[u] == doctest::Approx(*want).epsilon(kExact));
                }
            }
        }
    }
}

TEST_CASE("swapping group labels negates pooled values exactly") {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const RatingMatrix m = fixtures::random_ratings(rng, 8, 8, 0.6);
        if (m.num_users() < 2) continue;
        const GroupAssignment g = fixtures::random_groups(rng, m.ids());
        std::unordered_map<RawId, GroupLabel> flipped;
        for (RawId raw : m.ids().raw_users()) {
            flipped[raw] = g.label(raw) == GroupLabel::minority ? GroupLabel::majority : GroupLabel::minority;
        }
        const GroupAssignment h(Scheme::gender, flipped);
        const ImIndex a = compute_im(m, g, {4, 2, 0});
        const ImIndex b = compute_im(m, h, {4, 2, 0});
        for (ItemId i = 0; i < a.size(); ++i) CHECK(a.value(i) == -b.value(i));
    }
}

TEST_CASE("pooled item index and formula user index stay in [-1, 1]") {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const RatingMatrix m = fixtures::random_ratings(rng, 8, 8, 0.7);
        if (m.num_users() < 2) continue;
        const GroupAssignment g = fixtures::random_groups(rng, m.ids());
        const ImIndex im = compute_im(m, g, {4, 2, 0});
        const UmIndex um = compute_um(m, im, {4, 2, 0});
        for (double v : im.values) CHECK((v >= -1.0 && v <= 1.0));
        for (const auto& v : um.values) {
            if (v) CHECK((*v >= -1.0 && *v <= 1.0));
        }
    }
}

TEST_CASE("raising a minority vote from dislike to like never raises the item index") {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const RatingMatrix m = fixtures::random_ratings(rng, 8, 6, 0.7);
        if (m.num_users() < 2) continue;
        const GroupAssignment g = fixtures::random_groups(rng, m.ids());
        const auto labels = g.labels_for(m.ids());
        std::vector<Rating> entries(m.entries().begin(), m.entries().end());
        std::vector<std::size_t> candidates;
        for (std::size_t k = 0; k < entries.size(); ++k) {
            if (labels[entries[k].user] == GroupLabel::minority && entries[k].value == 2) candidates.push_back(k);
        }
        if (candidates.empty()) continue;
        const std::size_t k = candidates[rng.uniform_index(candidates.size())];
        const ItemId item = entries[k].item;
        const ImIndex before = compute_im(m, g, {4, 2, 0});
        entries[k].value = 4;
        const ImIndex after = compute_im(m.with_entries(entries), g, {4, 2, 0});
        CHECK(after.value(item) <= before.value(item) + kExact);
    }
}

TEST_CASE("csv export round-trips") {
    const RatingMatrix m = fixtures::toy_ratings();
    const GroupAssignment g = assign_groups(fixtures::toy_demographics(), Scheme::gender);
    const ImIndex im = compute_im(m, g, {4, 2, 3}, ImMode::pooled);
    UmIndex um = compute_um(m, compute_im(m, g, fixtures::toy_thresholds()), fixtures::toy_thresholds());
    um.values[0].reset();

    std::stringstream im_csv, um_csv;
    write_im_csv(im_csv, m.ids(), im);
    write_um_csv(um_csv, m.ids(), um);
    CHECK(im_csv.str().rfind("raw_id,value,flag\n1,0,neutral\n", 0) == 0);
    const ImIndex im_back = read_im_csv(im_csv, m.ids(), ImMode::pooled);
    const UmIndex um_back = read_um_csv(um_csv, m.ids(), UmMode::per_formula);
    CHECK(im_back.values == im.values);
    CHECK(im_back.neutral == im.neutral);
    CHECK(um_back.values == um.values);

    std::istringstream wrong("id,value\n");
    CHECK_THROWS_AS(read_im_csv(wrong, m.ids(), ImMode::pooled), ParseError);
}

}  // TEST_SUITE
