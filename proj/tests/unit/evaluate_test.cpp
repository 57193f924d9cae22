#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "fairrec/errors.hpp"
#include "fairrec/evaluate.hpp"
#include "fairrec/synthetic.hpp"
#include "fixtures.hpp"

using namespace fairrec;

namespace {

NormalizedIndex fixed_index(std::vector<std::optional<double>> values) {
    NormalizedIndex n;
    n.min = 0.0;
    n.max = 1.0;
    n.values = std::move(values);
    return n;
}

ImIndex fixed_im(std::vector<double> values) {
    ImIndex im;
    im.values = std::move(values);
    im.neutral.assign(im.values.size(), 0);
    im.votes.resize(im.values.size());
    return im;
}

}  // namespace

TEST_SUITE("evaluate") {

TEST_CASE("histogram") {
    const std::vector<double> v{0.0, 0.0, 1.0};
    const Histogram h = histogram(v, 2);
    CHECK(h.counts == std::vector<std::size_t>{2, 1});
    CHECK(h.total() == 3);
    CHECK(h.modal_bin() == 0);
    CHECK(h.bin_lower(1) == 0.5);
    const std::vector<double> flat{2.0, 2.0};
    CHECK(histogram(flat, 4).counts == std::vector<std::size_t>{2, 0, 0, 0});
    CHECK_THROWS_AS(histogram(std::span<const double>{}, 3), ConfigError);
}

TEST_CASE("group means") {
    const ImIndex im = fixed_im({0.2, 0.4, -0.6});
    const std::vector<GroupLabel> labels{GroupLabel::majority, GroupLabel::minority, GroupLabel::unknown};
    const std::vector<UserItems> lists{{0, {0, 1}}, {1, {2}}, {2, {0}}};
    const GroupMeans m = group_im_mean(lists, im, labels);
    CHECK(m.majority == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(m.minority == -0.6);
    CHECK(m.majority_items == 2);
    const std::vector<UserItems> only_major{{0, {0}}};
    CHECK_THROWS_AS(group_im_mean(only_major, im, labels), ConfigError);
}

TEST_CASE("accuracy error") {
    const std::vector<RawRating> raw{{1, 1, 4}, {1, 2, 2}};
    const RatingMatrix heldout = RatingMatrix::from_raw(raw, 5);
    FactorModel f(1, 2, 1);
    f.user(0)[0] = 1.0;
    f.item(0)[0] = 3.0;
    f.item(1)[0] = 2.0;
    const std::vector<UserItems> one{{0, {0}}};
    const AccuracyResult a = accuracy_error(one, heldout, f);
    CHECK(a.mse == 1.0);
    CHECK(a.coverage() == 1.0);
    const std::vector<UserItems> both{{0, {0, 1}}};
    CHECK(accuracy_error(both, heldout, f).mse == 0.5);

    const RatingMatrix sparse = heldout.with_entries({heldout.entries()[1]});
    const AccuracyResult partial = accuracy_error(one, sparse, f);
    CHECK(partial.flagged());
    CHECK(partial.total == 1);
}

TEST_CASE("fairness error") {
    const NormalizedIndex um = fixed_index({0.5, 0.9});
    const NormalizedIndex im = fixed_index({0.2, 0.4, 0.9});
    const std::vector<GroupLabel> labels{GroupLabel::minority, GroupLabel::majority};
    const std::vector<UserItems> lists{{0, {0, 1}}, {1, {2}}};
    const FairnessResult r = fairness_error(lists, um, im, labels);
    CHECK(r.minority == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(r.majority == 0.0);
    CHECK(r.overall == doctest::Approx(0.02).epsilon(1e-12));

    const NormalizedIndex missing = fixed_index({std::nullopt, 0.9});
    CHECK_THROWS_AS(fairness_error(lists, missing, im, labels), ConfigError);
}

TEST_CASE("series normalization") {
    const std::vector<double> v{2.0, 4.0, 3.0};
    CHECK(normalize_series(v) == std::vector<double>{0.0, 1.0, 0.5});
    const std::vector<double> c{7.0, 7.0};
    CHECK(normalize_series(c) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("metrics ignore list order") {
    Rng rng(31);
    const RatingMatrix heldout = fixtures::random_ratings(rng, 8, 12, 0.5);
    const FactorModel f = init_factors(heldout.num_users(), heldout.num_items(), 3, 1.0, 2);
    std::vector<double> raw_im(heldout.num_items());
    for (double& v : raw_im) v = rng.uniform(-1.0, 1.0);
    const ImIndex im = fixed_im(raw_im);
    std::vector<GroupLabel> labels(heldout.num_users(), GroupLabel::majority);
    labels[0] = GroupLabel::minority;
    std::vector<UserItems> lists = heldout_items(heldout);
    const double acc = accuracy_error(lists, heldout, f).mse;
    const GroupMeans means = group_im_mean(lists, im, labels);
    for (auto& l : lists) rng.shuffle(std::span(l.items));
    rng.shuffle(std::span(lists));
    CHECK(accuracy_error(lists, heldout, f).mse == doctest::Approx(acc).epsilon(1e-12));
    CHECK(group_im_mean(lists, im, labels).majority == doctest::Approx(means.majority).epsilon(1e-12));
}

TEST_CASE("held-out predictions respect the threshold") {
    Rng rng(3);
    const RatingMatrix heldout = fixtures::random_ratings(rng, 6, 10, 0.6);
    const FactorModel f = init_factors(heldout.num_users(), heldout.num_items(), 2, 2.0, 5);
    std::size_t all = 0;
    for (const auto& l : heldout_predictions(f, heldout, std::nullopt)) all += l.items.size();
    CHECK(all == heldout.size());
    for (const auto& l : heldout_predictions(f, heldout, 0.5)) {
        for (ItemId i : l.items) CHECK(f.predict(l.user, i) >= 0.5);
    }
}

TEST_CASE("a constant network makes every beta equivalent") {
    Rng rng(8);
    const RatingMatrix all = fixtures::random_ratings(rng, 12, 15, 0.6);
    const SplitResult parts = split(all, {0.7, 0.0, 0.3, 1});
    const GroupAssignment groups = fixtures::random_groups(rng, all.ids());
    const ImIndex im = compute_im(parts.train, groups, {4, 2, 0});
    const NormalizedIndex im_n = normalize(im), um_n = normalize(compute_um(parts.train, im, {4, 2, 0}));
    const FactorModel f = init_factors(all.num_users(), all.num_items(), 2, 0.5, 1);
    MlnModel mln = make_mln(5, std::vector<std::size_t>{3, 2}, 0.2, 1);
    std::vector<double> flat(flatten_parameters(mln).size(), 0.0);
    assign_parameters(mln, flat);
    const std::vector<GroupLabel> labels = groups.labels_for(all.ids());
    const SweepData data{f, parts.train, parts.test, im_n, um_n, labels};
    const auto grid = default_beta_grid();
    const BetaSweep sweep = beta_sweep(mln, data, grid, 3);
    REQUIRE(sweep.points.size() == 11);
    for (double v : sweep.norm_accuracy) CHECK(v == 0.5);
    CHECK(sweep.optimum_beta == 0.0);
}

TEST_CASE("alpha sweep survivors shrink with alpha") {
    SyntheticSpec spec;
    spec.users = 150;
    spec.items = 100;
    const SyntheticData data = generate_synthetic(spec);
    const RatingMatrix all = RatingMatrix::from_raw(data.ratings, 5);
    const SplitResult parts = split(all, {0.8, 0.0, 0.2, 1});
    const GroupAssignment groups = assign_groups(data.demographics, Scheme::gender);
    const ImIndex im = compute_im(parts.train, groups, {}, ImMode::score_difference);
    TrainConfig cfg;
    cfg.factors = 5;
    cfg.epochs = 15;
    cfg.learning_rate = 0.01;
    const FactorModel f = train_pmf(parts.train, cfg).model;
    const std::vector<double> alphas{0.0, 0.025, 0.05, 0.1, 0.2};
    const auto points = alpha_sweep(f, parts.test, im, groups.labels_for(all.ids()), alphas, 10, std::nullopt);
    REQUIRE(points.size() == alphas.size());
    for (std::size_t k = 1; k < points.size(); ++k) {
        CHECK(points[k].minority.survivors <= points[k - 1].minority.survivors);
        CHECK(points[k].majority.survivors <= points[k - 1].majority.survivors);
    }
    std::ostringstream fig5, fig6;
    write_fig5_csv(fig5, points);
    write_fig6_csv(fig6, points);
    const std::string text = fig5.str();
    CHECK(std::count(text.begin(), text.end(), '\n') >= 6);
}

TEST_CASE("table writers") {
    Classification c;
    c.minority = {GroupLabel::minority, "female", 3, 1};
    c.majority = {GroupLabel::majority, "male", 1, 1};
    const std::vector<std::pair<std::string, Classification>> rows{{"gender", c}};
    std::ostringstream t3;
    write_table3_csv(t3, rows);
    CHECK(t3.str().find("gender,female,minority,3,1,75") != std::string::npos);

    const std::vector<SchemeMeans> means{{Scheme::gender, "female", "male", {-0.25, 0.5, 2, 4}}};
    std::ostringstream t4;
    write_table4_csv(t4, means);
    CHECK(t4.str() == "scheme,group,role,im_mean,items\ngender,female,minority,-0.25,2\ngender,male,majority,0.5,4\n");
}

}  // TEST_SUITE
