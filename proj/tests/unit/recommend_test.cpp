#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "fairrec/errors.hpp"
#include "fairrec/recommend.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace fairrec;

namespace {

MlnModel constant_mln(std::size_t width, double value) {
    MlnModel m = make_mln(width, std::vector<std::size_t>{3, 2}, 0.2, 1);
    std::vector<double> flat = flatten_parameters(m);
    std::fill(flat.begin(), flat.end(), 0.0);
    flat.back() = value;  // output bias
    assign_parameters(m, flat);
    return m;
}


}  // namespace

TEST_SUITE("recommend") {

TEST_CASE("matches an exhaustive scan") {
    Rng rng(2718);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t users = 2 + rng.uniform_index(4), items = 2 + rng.uniform_index(49);
        const RatingMatrix known = fixtures::random_ratings(rng, users, items, rng.uniform(0.1, 0.7));
        if (known.num_users() == 0) continue;
        const std::size_t f = 1 + rng.uniform_index(3);
        const FactorModel factors = init_factors(known.num_users(), known.num_items(), f, 1.0, rng.next());
        const MlnModel mln = make_mln(2 * f + 1, std::vector<std::size_t>{4, 3}, 0.2, rng.next());
        const UserId u = static_cast<UserId>(rng.uniform_index(known.num_users()));
        const double beta = static_cast<double>(rng.uniform_index(11)) / 10.0;
        const std::size_t n = 1 + rng.uniform_index(15);
        const RecommendationList got = recommend_dl(mln, factors, known, u, beta, n);
        CHECK(got.item_ids() == oracles::dl_scan(mln, factors, known, u, beta, n));
        CHECK(std::ranges::is_sorted(got.items, {}, &ScoredItem::h));
    }
}

TEST_CASE("a constant network returns the lowest item ids") {
    Rng rng(1);
    const RatingMatrix known = fixtures::random_ratings(rng, 3, 20, 0.3);
    const FactorModel factors = init_factors(known.num_users(), known.num_items(), 2, 0.5, 3);
    const MlnModel mln = constant_mln(5, 0.7);
    const RecommendationList list = recommend_dl(mln, factors, known, 0, 0.4, 4);
    std::vector<ItemId> expected;
    for (ItemId i = 0; i < known.num_items() && expected.size() < 4; ++i) {
        if (!known.rating(0, i)) expected.push_back(i);
    }
    CHECK(list.item_ids() == expected);
    for (const auto& s : list.items) CHECK(s.h == 0.7);
}

TEST_CASE("edge cases") {
    const RatingMatrix toy = fixtures::toy_ratings();
    const FactorModel factors = init_factors(toy.num_users(), toy.num_items(), 2, 0.5, 3);
    const MlnModel mln = constant_mln(5, 0.1);
    const UserId female1 = *toy.ids().find_user(3);
    CHECK(recommend_dl(mln, factors, toy, female1, 0.5, 3).exhausted());
    CHECK(recommend_dl(mln, factors, toy, *toy.ids().find_user(1), 0.5, 10).items.size() == 1);
    CHECK_THROWS_AS(recommend_dl(mln, factors, toy, 99, 0.5, 3), std::out_of_range);
    CHECK_THROWS_AS(recommend_dl(mln, factors, toy, 0, 1.5, 3), ConfigError);
    CHECK_THROWS_AS(recommend_dl(mln, factors, toy, 0, 0.5, 0), ConfigError);
    CHECK_THROWS_AS(recommend_dl(constant_mln(7, 0.1), factors, toy, 0, 0.5, 3), ConfigError);

    const std::vector<ItemId> among{3, 0};
    CHECK(recommend_dl_among(mln, factors, 0, among, 0.5, 5).item_ids() == std::vector<ItemId>{0, 3});
}

TEST_CASE("batch keeps going past failures") {
    const RatingMatrix toy = fixtures::toy_ratings();
    const FactorModel factors = init_factors(toy.num_users(), toy.num_items(), 2, 0.5, 3);
    const MlnModel mln = make_mln(5, std::vector<std::size_t>{4, 2}, 0.2, 9);
    const std::vector<UserId> users{0, 42, 1};
    const auto batch = recommend_batch(mln, factors, toy, users, 0.3, 2);
    REQUIRE(batch.size() == 3);
    CHECK(batch[0].list.has_value());
    CHECK_FALSE(batch[1].list.has_value());
    CHECK_FALSE(batch[1].error.empty());
    CHECK(*batch[2].list == recommend_dl(mln, factors, toy, 1, 0.3, 2));

    std::ostringstream out;
    const std::vector<RecommendationList> lists{*batch[0].list};
    write_recommendations_csv(out, toy.ids(), lists);
    CHECK(out.str().rfind("user,beta,rank,item,h\n", 0) == 0);
}

TEST_CASE("lists do not depend on demographics") {
    // The ranking entry point has no demographic parameter at all; relabeling
    // or dropping groups cannot reach it. Check that two identical calls made
    // around a group computation agree bit for bit.
    Rng rng(5);
    const RatingMatrix known = fixtures::random_ratings(rng, 10, 30, 0.3);
    const FactorModel factors = init_factors(known.num_users(), known.num_items(), 3, 0.5, 2);
    const MlnModel mln = make_mln(7, std::vector<std::size_t>{5, 3}, 0.2, 4);
    std::vector<RecommendationList> before;
    for (UserId u = 0; u < known.num_users(); ++u) before.push_back(recommend_dl(mln, factors, known, u, 0.4, 5));
    const GroupAssignment groups = fixtures::random_groups(rng, known.ids());
    (void)groups.labels_for(known.ids());
    for (UserId u = 0; u < known.num_users(); ++u) CHECK(recommend_dl(mln, factors, known, u, 0.4, 5) == before[u]);
}

}  // TEST_SUITE
