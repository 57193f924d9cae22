#include "fairrec/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "fairrec/errors.hpp"
#include "fairrec/random.hpp"

namespace fairrec {

namespace {

// Splits `line` on every occurrence of `delim`.
std::vector<std::string_view> split_fields(std::string_view line, std::string_view delim) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + delim.size();
    }
}

template <typename T>
bool parse_int(std::string_view text, T& out) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (text.empty()) return false;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

// Reads the next line, dropping a trailing CR. Returns false at EOF.
bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

}  // namespace

// ---------------------------------------------------------------------------
// IdSpace

IdSpace::IdSpace(std::vector<RawId> raw_users, std::vector<RawId> raw_items)
    : raw_users_(std::move(raw_users)), raw_items_(std::move(raw_items)) {
    user_index_.reserve(raw_users_.size());
    for (UserId u = 0; u < raw_users_.size(); ++u) user_index_.emplace(raw_users_[u], u);
    item_index_.reserve(raw_items_.size());
    for (ItemId i = 0; i < raw_items_.size(); ++i) item_index_.emplace(raw_items_[i], i);
}

std::optional<UserId> IdSpace::find_user(RawId raw) const {
    if (auto it = user_index_.find(raw); it != user_index_.end()) return it->second;
    return std::nullopt;
}

std::optional<ItemId> IdSpace::find_item(RawId raw) const {
    if (auto it = item_index_.find(raw); it != item_index_.end()) return it->second;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// RatingMatrix

RatingMatrix::RatingMatrix(std::shared_ptr<const IdSpace> ids, std::vector<Rating> entries, int max_rating)
    : ids_(std::move(ids)), entries_(std::move(entries)), max_rating_(max_rating) {
    if (max_rating_ < 1) throw ParseError("max rating must be >= 1", 0);
    std::sort(entries_.begin(), entries_.end(), [](const Rating& a, const Rating& b) {
        return a.user != b.user ? a.user < b.user : a.item < b.item;
    });
    const std::size_t nu = ids_->num_users();
    const std::size_t ni = ids_->num_items();
    for (std::size_t k = 0; k < entries_.size(); ++k) {
        const Rating& r = entries_[k];
        if (r.user >= nu || r.item >= ni) throw ParseError("rating refers to an unknown user or item", 0);
        if (r.value < 1 || r.value > max_rating_) {
            throw ParseError("rating " + std::to_string(r.value) + " outside [1, " +
                                 std::to_string(max_rating_) + "]",
                             0);
        }
        if (k > 0 && entries_[k - 1].user == r.user && entries_[k - 1].item == r.item) {
            throw ParseError("duplicate rating for user " + std::to_string(ids_->raw_user(r.user)) +
                                 ", item " + std::to_string(ids_->raw_item(r.item)),
                             0);
        }
    }

    user_offsets_.assign(nu + 1, 0);
    item_offsets_.assign(ni + 1, 0);
    for (const Rating& r : entries_) {
        ++user_offsets_[r.user + 1];
        ++item_offsets_[r.item + 1];
    }
    std::partial_sum(user_offsets_.begin(), user_offsets_.end(), user_offsets_.begin());
    std::partial_sum(item_offsets_.begin(), item_offsets_.end(), item_offsets_.begin());
    item_positions_.resize(entries_.size());
    std::vector<std::uint32_t> cursor(item_offsets_.begin(), item_offsets_.end() - 1);
    for (std::uint32_t k = 0; k < entries_.size(); ++k) item_positions_[cursor[entries_[k].item]++] = k;
}

RatingMatrix RatingMatrix::from_raw(std::span<const RawRating> raw, int max_rating) {
    std::vector<RawId> users, items;
    users.reserve(raw.size());
    items.reserve(raw.size());
    for (const RawRating& r : raw) {
        users.push_back(r.user);
        items.push_back(r.item);
    }
    auto dedupe = [](std::vector<RawId>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    dedupe(users);
    dedupe(items);
    auto ids = std::make_shared<IdSpace>(std::move(users), std::move(items));

    std::vector<Rating> entries;
    entries.reserve(raw.size());
    for (const RawRating& r : raw) {
        if (r.value < 1 || r.value > max_rating) {
            throw ParseError("rating " + std::to_string(r.value) + " outside [1, " + std::to_string(max_rating) + "]",
                             0);
        }
        entries.push_back({*ids->find_user(r.user), *ids->find_item(r.item), static_cast<std::uint8_t>(r.value)});
    }
    return RatingMatrix(std::move(ids), std::move(entries), max_rating);
}

std::span<const Rating> RatingMatrix::user_ratings(UserId u) const {
    if (u >= num_users()) return {};
    return std::span(entries_).subspan(user_offsets_[u], user_offsets_[u + 1] - user_offsets_[u]);
}

std::span<const std::uint32_t> RatingMatrix::item_entry_positions(ItemId i) const {
    if (i >= num_items()) return {};
    return std::span(item_positions_).subspan(item_offsets_[i], item_offsets_[i + 1] - item_offsets_[i]);
}

std::optional<int> RatingMatrix::rating(UserId u, ItemId i) const {
    const auto row = user_ratings(u);
    const auto it = std::lower_bound(row.begin(), row.end(), i, [](const Rating& r, ItemId x) { return r.item < x; });
    if (it == row.end() || it->item != i) return std::nullopt;
    return it->value;
}

RatingMatrix RatingMatrix::with_entries(std::vector<Rating> entries) const {
    return RatingMatrix(ids_, std::move(entries), max_rating_);
}

// ---------------------------------------------------------------------------
// Parsing

RatingMatrix parse_ratings(std::istream& in, const RatingsFormat& format) {
    std::vector<RawRating> raw;
    std::vector<std::size_t> source_lines;
    std::string line;
    std::size_t line_no = 0;
    while (next_line(in, line, line_no)) {
        if (is_blank(line)) continue;
        const auto fields = split_fields(line, format.delimiter);
        if (fields.size() < 3 || fields.size() > 4) {
            throw ParseError("expected UserID" + format.delimiter + "MovieID" + format.delimiter + "Rating" +
                                 format.delimiter + "Timestamp",
                             line_no);
        }
        RawRating r{};
        long long timestamp = 0;
        if (!parse_int(fields[0], r.user) || !parse_int(fields[1], r.item) || !parse_int(fields[2], r.value) ||
            (fields.size() == 4 && !parse_int(fields[3], timestamp))) {
            throw ParseError("non-numeric field", line_no);
        }
        if (r.value < 1 || r.value > format.max_rating) {
            throw ParseError("rating " + std::to_string(r.value) + " outside [1, " +
                                 std::to_string(format.max_rating) + "]",
                             line_no);
        }
        raw.push_back(r);
        source_lines.push_back(line_no);
    }

    // Report duplicates with the line number of the second occurrence.
    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (raw[a].user != raw[b].user) return raw[a].user < raw[b].user;
        if (raw[a].item != raw[b].item) return raw[a].item < raw[b].item;
        return a < b;
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
        const RawRating& a = raw[order[k - 1]];
        const RawRating& b = raw[order[k]];
        if (a.user == b.user && a.item == b.item) {
            throw ParseError("duplicate rating for user " + std::to_string(b.user) + ", item " + std::to_string(b.item),
                             source_lines[order[k]]);
        }
    }
    return RatingMatrix::from_raw(raw, format.max_rating);
}

bool is_valid_age_code(int code) {
    switch (code) {
        case 1: case 18: case 25: case 35: case 45: case 50: case 56:
            return true;
        default:
            return false;
    }
}

void DemographicTable::add(RawId user, Demographics d) {
    if (!records_.emplace(user, d).second) {
        throw ParseError("duplicate demographics for user " + std::to_string(user), 0);
    }
}

const Demographics* DemographicTable::find(RawId user) const {
    const auto it = records_.find(user);
    return it == records_.end() ? nullptr : &it->second;
}

DemographicTable parse_users(std::istream& in) {
    DemographicTable table;
    std::string line;
    std::size_t line_no = 0;
    while (next_line(in, line, line_no)) {
        if (is_blank(line)) continue;
        const auto fields = split_fields(line, "::");
        if (fields.size() != 5) throw ParseError("expected UserID::Gender::Age::Occupation::Zip", line_no);
        RawId user = 0;
        int age = 0;
        if (!parse_int(fields[0], user)) throw ParseError("non-numeric user id", line_no);
        if (!parse_int(fields[2], age)) throw ParseError("non-numeric age code", line_no);
        Gender gender;
        if (fields[1] == "F") {
            gender = Gender::female;
        } else if (fields[1] == "M") {
            gender = Gender::male;
        } else {
            throw ParseError("unknown gender code '" + std::string(fields[1]) + "'", line_no);
        }
        if (!is_valid_age_code(age)) throw ParseError("unknown age code " + std::to_string(age), line_no);
        try {
            table.add(user, {gender, age});
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Groups

std::string_view to_string(Scheme s) { return s == Scheme::gender ? "gender" : "youth"; }

std::string_view to_string(GroupLabel g) {
    switch (g) {
        case GroupLabel::minority: return "minority";
        case GroupLabel::majority: return "majority";
        default: return "unknown";
    }
}

Scheme parse_scheme(std::string_view text) {
    if (text == "gender") return Scheme::gender;
    if (text == "youth") return Scheme::youth;
    throw ConfigError("unknown scheme '" + std::string(text) + "' (expected gender or youth)");
}

GroupLabel GroupAssignment::label(RawId user) const {
    const auto it = labels_.find(user);
    return it == labels_.end() ? GroupLabel::unknown : it->second;
}

std::vector<GroupLabel> GroupAssignment::labels_for(const IdSpace& ids) const {
    std::vector<GroupLabel> out(ids.num_users());
    for (UserId u = 0; u < out.size(); ++u) out[u] = label(ids.raw_user(u));
    return out;
}

std::string_view GroupAssignment::group_name(GroupLabel g) const {
    if (g == GroupLabel::unknown) return "unknown";
    if (scheme_ == Scheme::gender) return g == GroupLabel::minority ? "female" : "male";
    return g == GroupLabel::minority ? "senior" : "young";
}

std::size_t GroupAssignment::count(GroupLabel g) const {
    return static_cast<std::size_t>(
        std::count_if(labels_.begin(), labels_.end(), [g](const auto& kv) { return kv.second == g; }));
}

GroupAssignment assign_groups(const DemographicTable& demographics, Scheme scheme) {
    std::unordered_map<RawId, GroupLabel> labels;
    labels.reserve(demographics.size());
    for (const auto& [user, d] : demographics.records()) {
        bool minority = scheme == Scheme::gender ? d.gender == Gender::female : d.age_code >= kSeniorAgeCode;
        labels.emplace(user, minority ? GroupLabel::minority : GroupLabel::majority);
    }
    return GroupAssignment(scheme, std::move(labels));
}

// ---------------------------------------------------------------------------
// Splitting

SplitResult split(const RatingMatrix& ratings, const SplitSpec& spec) {
    const double sum = spec.train + spec.validation + spec.test;
    if (!(spec.train > 0.0) || spec.validation < 0.0 || spec.test < 0.0 || std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("split fractions must be non-negative, train > 0, and sum to 1 (got " +
                          std::to_string(spec.train) + ", " + std::to_string(spec.validation) + ", " +
                          std::to_string(spec.test) + ")");
    }
    const std::size_t n = ratings.size();
    std::size_t n_train = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
    std::size_t n_val = static_cast<std::size_t>(std::llround(spec.validation * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    n_val = std::min(n_val, n - n_train);

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    Rng rng(spec.seed);
    rng.shuffle(std::span(order));

    const auto entries = ratings.entries();
    auto gather = [&](std::size_t begin, std::size_t end) {
        std::vector<Rating> part;
        part.reserve(end - begin);
        for (std::size_t k = begin; k < end; ++k) part.push_back(entries[order[k]]);
        return ratings.with_entries(std::move(part));
    };
    return SplitResult{gather(0, n_train), gather(n_train, n_train + n_val), gather(n_train + n_val, n)};
}

// ---------------------------------------------------------------------------
// Snapshots

namespace {
constexpr std::string_view kSnapshotMagic = "fairrec-ratings";
constexpr int kSnapshotVersion = 1;

template <typename T>
void expect_token(std::istream& in, std::string_view key, T& value) {
    std::string token;
    if (!(in >> token) || token != key || !(in >> value)) {
        throw ParseError("snapshot: expected '" + std::string(key) + "'", 0);
    }
}
}  // namespace

void write_snapshot(std::ostream& out, const RatingMatrix& m) {
    const IdSpace& ids = m.ids();
    out << kSnapshotMagic << ' ' << kSnapshotVersion << '\n';
    out << "max_rating " << m.max_rating() << '\n';
    out << "users " << ids.num_users() << '\n';
    for (RawId r : ids.raw_users()) out << r << '\n';
    out << "items " << ids.num_items() << '\n';
    for (RawId r : ids.raw_items()) out << r << '\n';
    out << "entries " << m.size() << '\n';
    for (const Rating& r : m.entries()) {
        out << ids.raw_user(r.user) << ' ' << ids.raw_item(r.item) << ' ' << int{r.value} << '\n';
    }
}

namespace {
RatingMatrix read_snapshot_impl(std::istream& in, std::shared_ptr<const IdSpace> expected) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kSnapshotMagic) throw ParseError("not a ratings snapshot", 0);
    if (version != kSnapshotVersion) throw ParseError("unsupported snapshot version " + std::to_string(version), 0);
    int max_rating = 0;
    std::size_t nu = 0, ni = 0, ne = 0;
    expect_token(in, "max_rating", max_rating);
    expect_token(in, "users", nu);
    std::vector<RawId> users(nu);
    for (RawId& r : users) {
        if (!(in >> r)) throw ParseError("snapshot: truncated user list", 0);
    }
    expect_token(in, "items", ni);
    std::vector<RawId> items(ni);
    for (RawId& r : items) {
        if (!(in >> r)) throw ParseError("snapshot: truncated item list", 0);
    }
    std::shared_ptr<const IdSpace> ids;
    if (expected) {
        if (!std::equal(users.begin(), users.end(), expected->raw_users().begin(), expected->raw_users().end()) ||
            !std::equal(items.begin(), items.end(), expected->raw_items().begin(), expected->raw_items().end())) {
            throw ParseError("snapshot id space does not match", 0);
        }
        ids = std::move(expected);
    } else {
        ids = std::make_shared<IdSpace>(std::move(users), std::move(items));
    }
    expect_token(in, "entries", ne);
    std::vector<Rating> entries;
    entries.reserve(ne);
    for (std::size_t k = 0; k < ne; ++k) {
        RawId u = 0, i = 0;
        int v = 0;
        if (!(in >> u >> i >> v)) throw ParseError("snapshot: truncated entries", 0);
        const auto uu = ids->find_user(u);
        const auto ii = ids->find_item(i);
        if (!uu || !ii) throw ParseError("snapshot: entry refers to unknown id", 0);
        if (v < 1 || v > max_rating) throw ParseError("snapshot: rating out of range", 0);
        entries.push_back({*uu, *ii, static_cast<std::uint8_t>(v)});
    }
    return RatingMatrix(std::move(ids), std::move(entries), max_rating);
}
}  // namespace

RatingMatrix read_snapshot(std::istream& in) { return read_snapshot_impl(in, nullptr); }

RatingMatrix read_snapshot(std::istream& in, std::shared_ptr<const IdSpace> ids) {
    return read_snapshot_impl(in, std::move(ids));
}

}  // namespace fairrec
