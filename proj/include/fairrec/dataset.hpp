#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fairrec {

using UserId = std::uint32_t;  // dense internal user index
using ItemId = std::uint32_t;  // dense internal item index
using RawId = std::uint32_t;   // id as it appears in the dataset files

/// One observed vote, in internal ids.
struct Rating {
    UserId user;
    ItemId item;
    std::uint8_t value;

    friend bool operator==(const Rating&, const Rating&) = default;
};

/// A vote in dataset ids, as parsed.
struct RawRating {
    RawId user;
    RawId item;
    int value;
};

/// Bidirectional mapping between raw dataset ids and dense internal indexes.
/// Internal indexes follow ascending raw id order.
class IdSpace {
public:
    IdSpace() = default;
    IdSpace(std::vector<RawId> raw_users, std::vector<RawId> raw_items);

    std::size_t num_users() const { return raw_users_.size(); }
    std::size_t num_items() const { return raw_items_.size(); }

    RawId raw_user(UserId u) const { return raw_users_.at(u); }
    RawId raw_item(ItemId i) const { return raw_items_.at(i); }
    std::optional<UserId> find_user(RawId raw) const;
    std::optional<ItemId> find_item(RawId raw) const;

    std::span<const RawId> raw_users() const { return raw_users_; }
    std::span<const RawId> raw_items() const { return raw_items_; }

private:
    std::vector<RawId> raw_users_;
    std::vector<RawId> raw_items_;
    std::unordered_map<RawId, UserId> user_index_;
    std::unordered_map<RawId, ItemId> item_index_;
};

/// Sparse user x item votes on a 1..max_rating scale. Immutable once built.
///
/// Entries are stored sorted by (user, item) with a per-user offset table,
/// and a secondary per-item index. A missing entry means "not voted",
/// which is distinct from every legal rating value.
class RatingMatrix {
public:
    RatingMatrix() : ids_(std::make_shared<IdSpace>()) {}

    /// Builds from internal-id triplets over an existing id space.
    /// Throws ParseError on duplicates or out-of-range values.
    RatingMatrix(std::shared_ptr<const IdSpace> ids, std::vector<Rating> entries, int max_rating);

    /// Builds the id space from the raw ids present in the triplets.
    static RatingMatrix from_raw(std::span<const RawRating> raw, int max_rating);

    const IdSpace& ids() const { return *ids_; }
    std::shared_ptr<const IdSpace> shared_ids() const { return ids_; }

    std::size_t num_users() const { return ids_->num_users(); }
    std::size_t num_items() const { return ids_->num_items(); }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    int max_rating() const { return max_rating_; }

    std::span<const Rating> entries() const { return entries_; }

    /// Votes cast by one user, ascending item order.
    std::span<const Rating> user_ratings(UserId u) const;

    /// Positions into entries() of the votes on one item, ascending user order.
    std::span<const std::uint32_t> item_entry_positions(ItemId i) const;

    /// The vote of u on i, or nullopt for "not voted".
    std::optional<int> rating(UserId u, ItemId i) const;

    /// Same id space, different subset of entries.
    RatingMatrix with_entries(std::vector<Rating> entries) const;

private:
    std::shared_ptr<const IdSpace> ids_;
    std::vector<Rating> entries_;
    std::vector<std::uint32_t> user_offsets_;
    std::vector<std::uint32_t> item_offsets_;
    std::vector<std::uint32_t> item_positions_;
    int max_rating_ = 5;
};

/// Line layout for rating files. MovieLens 1M: "UserID::MovieID::Rating::Timestamp".
struct RatingsFormat {
    std::string delimiter = "::";
    int max_rating = 5;
};

/// Parses a ratings stream. Timestamps are read and discarded.
/// Tolerates CRLF line endings and blank lines.
RatingMatrix parse_ratings(std::istream& in, const RatingsFormat& format = {});

enum class Gender : std::uint8_t { female, male };

/// MovieLens age buckets: 1, 18, 25, 35, 45, 50, 56.
bool is_valid_age_code(int code);

struct Demographics {
    Gender gender;
    int age_code;
};

/// Per-user demographics keyed by raw user id. Users absent from the table
/// have unknown demographics.
class DemographicTable {
public:
    void add(RawId user, Demographics d);  // throws ParseError on duplicate
    const Demographics* find(RawId user) const;
    std::size_t size() const { return records_.size(); }
    const std::unordered_map<RawId, Demographics>& records() const { return records_; }

private:
    std::unordered_map<RawId, Demographics> records_;
};

/// Parses "UserID::Gender::Age::Occupation::Zip" lines.
DemographicTable parse_users(std::istream& in);

enum class Scheme : std::uint8_t { gender, youth };
enum class GroupLabel : std::uint8_t { minority, majority, unknown };

std::string_view to_string(Scheme s);
std::string_view to_string(GroupLabel g);
Scheme parse_scheme(std::string_view text);  // throws ConfigError

/// Senior/young boundary for the youth scheme (MovieLens age code).
inline constexpr int kSeniorAgeCode = 45;

/// Minority/majority labeling of users for one scheme, keyed by raw user id.
class GroupAssignment {
public:
    GroupAssignment(Scheme scheme, std::unordered_map<RawId, GroupLabel> labels)
        : scheme_(scheme), labels_(std::move(labels)) {}

    Scheme scheme() const { return scheme_; }
    GroupLabel label(RawId user) const;

    /// Labels indexed by internal user id of the given space.
    std::vector<GroupLabel> labels_for(const IdSpace& ids) const;

    /// Human-readable name of a group under this scheme ("female", "senior", ...).
    std::string_view group_name(GroupLabel g) const;

    std::size_t count(GroupLabel g) const;

private:
    Scheme scheme_;
    std::unordered_map<RawId, GroupLabel> labels_;
};

GroupAssignment assign_groups(const DemographicTable& demographics, Scheme scheme);

struct SplitSpec {
    double train = 0.7;
    double validation = 0.1;
    double test = 0.2;
    std::uint64_t seed = 42;
};

struct SplitResult {
    RatingMatrix train;
    RatingMatrix validation;
    RatingMatrix test;
};

/// Per-rating random partition. Sizes are rounded fractions of the total;
/// the test set takes the remainder.
SplitResult split(const RatingMatrix& ratings, const SplitSpec& spec);

/// Plain-text snapshot: header line, max rating, entry count, then
/// "raw_user raw_item rating" per line (internal order), then the full id
/// space so users/items without entries survive the round trip.
void write_snapshot(std::ostream& out, const RatingMatrix& m);
RatingMatrix read_snapshot(std::istream& in);
/// Reads a snapshot whose id space must equal `ids` (for split parts).
RatingMatrix read_snapshot(std::istream& in, std::shared_ptr<const IdSpace> ids);

}  // namespace fairrec
