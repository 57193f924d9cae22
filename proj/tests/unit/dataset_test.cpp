#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

#include "doctest.h"
#include "fairrec/dataset.hpp"
#include "fairrec/errors.hpp"
#include "fixtures.hpp"

using namespace fairrec;

namespace {

RatingMatrix parse(const std::string& text) {
    std::istringstream in(text);
    return parse_ratings(in);
}

std::set<std::tuple<RawId, RawId, int>> raw_entries(const RatingMatrix& m) {
    std::set<std::tuple<RawId, RawId, int>> out;
    for (const Rating& r : m.entries()) out.emplace(m.ids().raw_user(r.user), m.ids().raw_item(r.item), r.value);
    return out;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("a MovieLens line becomes one entry") {
    const RatingMatrix m = parse("1::1193::5::978300760\n");
    REQUIRE(m.size() == 1);
    const auto u = m.ids().find_user(1);
    const auto i = m.ids().find_item(1193);
    REQUIRE(u);
    REQUIRE(i);
    CHECK(m.rating(*u, *i) == 5);
}

TEST_CASE("empty stream gives an empty matrix") {
    const RatingMatrix m = parse("");
    CHECK(m.size() == 0);
    CHECK(m.num_users() == 0);
}

TEST_CASE("CRLF, blank lines and missing timestamps are accepted") {
    const RatingMatrix m = parse("1::10::3::1\r\n\r\n2::10::4\r\n");
    CHECK(m.size() == 2);
    CHECK(m.num_users() == 2);
    CHECK(m.num_items() == 1);
}

TEST_CASE("malformed input reports the line") {
    auto line_of = [](const std::string& text) {
        try {
            parse(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return std::size_t{0};
    };
    CHECK(line_of("1::2::3::4\n1::x::3::4\n") == 2);
    CHECK(line_of("1::2::3::4\n\n1::3::9::4\n") == 3);  // rating out of range
    CHECK(line_of("1::2::3::4\n1::3::0::4\n") == 2);
    CHECK(line_of("1::2::3::4\n2::2::3::4\n1::2::5::4\n") == 3);  // duplicate pair
    CHECK(line_of("1::2\n") == 1);
}

TEST_CASE("unvoted cells are distinct from every rating") {
    const RatingMatrix m = fixtures::toy_ratings();
    const UserId male1 = *m.ids().find_user(1);
    const ItemId c = *m.ids().find_item(3);
    CHECK_FALSE(m.rating(male1, c).has_value());
    CHECK(m.user_ratings(male1).size() == 3);
    CHECK(m.item_entry_positions(c).size() == 4);
}

TEST_CASE("users file parsing") {
    std::istringstream in("1::F::1::10::48067\n2::M::56::16::70072\n");
    const DemographicTable t = parse_users(in);
    REQUIRE(t.find(1));
    CHECK(t.find(1)->gender == Gender::female);
    CHECK(t.find(1)->age_code == 1);
    CHECK(t.find(2)->age_code == 56);
    CHECK(t.find(3) == nullptr);

    std::istringstream bad_gender("1::X::1::10::48067\n");
    CHECK_THROWS_AS(parse_users(bad_gender), ParseError);
    std::istringstream bad_age("1::F::30::10::48067\n");
    CHECK_THROWS_AS(parse_users(bad_age), ParseError);
    std::istringstream dup("1::F::1::10::1\n1::M::1::10::1\n");
    CHECK_THROWS_AS(parse_users(dup), ParseError);
}

TEST_CASE("group assignment") {
    DemographicTable t;
    t.add(1, {Gender::female, 25});
    t.add(2, {Gender::male, 45});
    t.add(3, {Gender::male, 35});
    const GroupAssignment gender = assign_groups(t, Scheme::gender);
    CHECK(gender.label(1) == GroupLabel::minority);
    CHECK(gender.label(2) == GroupLabel::majority);
    CHECK(gender.label(99) == GroupLabel::unknown);
    CHECK(gender.group_name(GroupLabel::minority) == "female");

    const GroupAssignment youth = assign_groups(t, Scheme::youth);
    CHECK(youth.label(2) == GroupLabel::minority);  // age code 45 is senior
    CHECK(youth.label(3) == GroupLabel::majority);  // 35 is young
    CHECK(youth.group_name(GroupLabel::minority) == "senior");
    CHECK(youth.count(GroupLabel::majority) == 2);
    CHECK_THROWS_AS(parse_scheme("age"), ConfigError);
}

TEST_CASE("split sizes follow the fractions") {
    std::vector<RawRating> raw;
    for (RawId k = 1; k <= 10; ++k) raw.push_back({k, 1, 3});
    const RatingMatrix m = RatingMatrix::from_raw(raw, 5);
    const SplitResult s = split(m, {0.7, 0.1, 0.2, 42});
    CHECK(s.train.size() == 7);
    CHECK(s.validation.size() == 1);
    CHECK(s.test.size() == 2);

    const RatingMatrix five = RatingMatrix::from_raw(std::span(raw).first(5), 5);
    const SplitResult t = split(five, {0.8, 0.0, 0.2, 42});
    CHECK(t.train.size() == 4);
    CHECK(t.validation.size() == 0);
    CHECK(t.test.size() == 1);

    CHECK_THROWS_AS(split(m, {0.7, 0.1, 0.1, 42}), ConfigError);
    CHECK_THROWS_AS(split(m, {0.0, 0.5, 0.5, 42}), ConfigError);
}

TEST_CASE("split is a deterministic partition") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const RatingMatrix m = fixtures::random_ratings(rng, 12, 15, 0.5);
        const SplitSpec spec{0.7, 0.1, 0.2, static_cast<std::uint64_t>(trial)};
        const SplitResult a = split(m, spec);
        const SplitResult b = split(m, spec);
        CHECK(std::ranges::equal(a.train.entries(), b.train.entries()));
        CHECK(std::ranges::equal(a.test.entries(), b.test.entries()));

        std::vector<Rating> all;
        for (const RatingMatrix* part : {&a.train, &a.validation, &a.test}) {
            all.insert(all.end(), part->entries().begin(), part->entries().end());
        }
        CHECK(all.size() == m.size());
        std::sort(all.begin(), all.end(), [](const Rating& x, const Rating& y) {
            return std::tie(x.user, x.item) < std::tie(y.user, y.item);
        });
        CHECK(std::ranges::equal(all, m.entries()));
        const double n = static_cast<double>(m.size());
        CHECK(std::abs(static_cast<double>(a.train.size()) - 0.7 * n) <= 1.0);
        CHECK(std::abs(static_cast<double>(a.validation.size()) - 0.1 * n) <= 1.0);
    }
}

TEST_CASE("snapshots round-trip") {
    Rng rng(3);
    const RatingMatrix m = fixtures::random_ratings(rng, 9, 11, 0.4);
    const SplitResult parts = split(m, {0.5, 0.0, 0.5, 1});
    std::stringstream full, half;
    write_snapshot(full, m);
    write_snapshot(half, parts.test);
    const RatingMatrix back = read_snapshot(full);
    CHECK(raw_entries(back) == raw_entries(m));
    CHECK(std::ranges::equal(back.ids().raw_items(), m.ids().raw_items()));

    const RatingMatrix back_part = read_snapshot(half, back.shared_ids());
    CHECK(raw_entries(back_part) == raw_entries(parts.test));
    CHECK(back_part.num_users() == m.num_users());

    std::stringstream other;
    write_snapshot(other, fixtures::toy_ratings());
    CHECK_THROWS_AS(read_snapshot(other, back.shared_ids()), ParseError);
    std::istringstream junk("not a snapshot");
    CHECK_THROWS_AS(read_snapshot(junk), ParseError);
}

}  // TEST_SUITE
