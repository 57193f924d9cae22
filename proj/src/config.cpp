#include "fairrec/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>

#include "fairrec/csv.hpp"
#include "fairrec/errors.hpp"
#include "fairrec/random.hpp"

namespace fairrec {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_integer(std::string_view key, std::string_view text) {
    T v{};
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size()) {
        throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(text) + "'");
    }
    return v;
}

double parse_real(std::string_view key, std::string_view text) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(v)) {
        throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(text) + "'");
    }
    return v;
}

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view text, Parse parse) {
    std::vector<T> out;
    if (trim(text).empty()) throw ConfigError("empty list");
    while (true) {
        const auto comma = text.find(',');
        const std::string_view item = trim(text.substr(0, comma));
        if (item.empty()) throw ConfigError("empty list element in '" + std::string(text) + "'");
        out.push_back(parse(item));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

template <typename T, typename Format>
std::string join(const std::vector<T>& values, Format format) {
    std::string out;
    for (const T& v : values) {
        if (!out.empty()) out += ',';
        out += format(v);
    }
    return out;
}

struct Key {
    std::string_view name;
    bool is_path;
    std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define FAIRREC_REAL(NAME, FIELD)                                                                  \
    Key {                                                                                          \
        NAME, false, [](RunConfig& c, std::string_view k, std::string_view v) { c.FIELD = parse_real(k, v); }, \
            [](const RunConfig& c) { return format_number(c.FIELD); }                              \
    }
#define FAIRREC_INT(NAME, FIELD, TYPE)                                                             \
    Key {                                                                                          \
        NAME, false,                                                                               \
            [](RunConfig& c, std::string_view k, std::string_view v) { c.FIELD = parse_integer<TYPE>(k, v); }, \
            [](const RunConfig& c) { return std::to_string(c.FIELD); }                             \
    }

const std::vector<Key>& keys() {
    static const std::vector<Key> table{
        {"ratings", true, [](RunConfig& c, auto, std::string_view v) { c.ratings = std::string(v); },
         [](const RunConfig& c) { return c.ratings.string(); }},
        {"users", true, [](RunConfig& c, auto, std::string_view v) { c.users = std::string(v); },
         [](const RunConfig& c) { return c.users.string(); }},
        {"out", true, [](RunConfig& c, auto, std::string_view v) { c.out = std::string(v); },
         [](const RunConfig& c) { return c.out.string(); }},
        {"delimiter", false, [](RunConfig& c, auto, std::string_view v) { c.delimiter = std::string(v); },
         [](const RunConfig& c) { return c.delimiter; }},
        FAIRREC_INT("max_rating", max_rating, int),
        {"scheme", false, [](RunConfig& c, auto, std::string_view v) { c.scheme = parse_scheme(v); },
         [](const RunConfig& c) { return std::string(to_string(c.scheme)); }},
        FAIRREC_INT("like", thresholds.like, int),
        FAIRREC_INT("dislike", thresholds.dislike, int),
        FAIRREC_INT("min_side_votes", thresholds.min_side_votes, std::size_t),
        {"im_mode", false, [](RunConfig& c, auto, std::string_view v) { c.im_mode = parse_im_mode(v); },
         [](const RunConfig& c) { return std::string(to_string(c.im_mode)); }},
        {"um_mode", false, [](RunConfig& c, auto, std::string_view v) { c.um_mode = parse_um_mode(v); },
         [](const RunConfig& c) { return std::string(to_string(c.um_mode)); }},
        FAIRREC_REAL("split.train", split.train),
        FAIRREC_REAL("split.validation", split.validation),
        FAIRREC_REAL("split.test", split.test),
        FAIRREC_INT("split.seed", split.seed, std::uint64_t),
        FAIRREC_REAL("pmf.learning_rate", pmf.learning_rate),
        FAIRREC_REAL("pmf.regularization", pmf.regularization),
        FAIRREC_INT("pmf.epochs", pmf.epochs, std::size_t),
        FAIRREC_INT("pmf.factors", pmf.factors, std::size_t),
        FAIRREC_REAL("pmf.init_scale", pmf.init_scale),
        FAIRREC_INT("pmf.seed", pmf.seed, std::uint64_t),
        FAIRREC_REAL("mln.split.train", mln_split.train),
        FAIRREC_REAL("mln.split.validation", mln_split.validation),
        FAIRREC_REAL("mln.split.test", mln_split.test),
        FAIRREC_INT("mln.split.seed", mln_split.seed, std::uint64_t),
        FAIRREC_INT("mln.max_ratings", mln_max_ratings, std::size_t),
        {"mln.hidden", false,
         [](RunConfig& c, std::string_view k, std::string_view v) {
             c.mln_hidden = parse_list<std::size_t>(v, [k](std::string_view t) { return parse_integer<std::size_t>(k, t); });
         },
         [](const RunConfig& c) { return join(c.mln_hidden, [](std::size_t v) { return std::to_string(v); }); }},
        FAIRREC_REAL("mln.dropout", mln_dropout),
        FAIRREC_INT("mln.init_seed", mln_init_seed, std::uint64_t),
        {"mln.label_scale", false,
         [](RunConfig& c, std::string_view k, std::string_view v) {
             if (v == "normalized") c.label_scale = AccuracyScale::normalized;
             else if (v == "raw") c.label_scale = AccuracyScale::raw;
             else throw ConfigError(std::string(k) + ": expected normalized or raw, got '" + std::string(v) + "'");
         },
         [](const RunConfig& c) { return std::string(c.label_scale == AccuracyScale::raw ? "raw" : "normalized"); }},
        FAIRREC_INT("mln.epochs", mln.epochs, std::size_t),
        FAIRREC_INT("mln.batch_size", mln.batch_size, std::size_t),
        FAIRREC_REAL("mln.learning_rate", mln.learning_rate),
        FAIRREC_REAL("mln.decay", mln.decay),
        FAIRREC_REAL("mln.epsilon", mln.epsilon),
        FAIRREC_INT("mln.seed", mln.seed, std::uint64_t),
        {"beta_grid", false,
         [](RunConfig& c, std::string_view k, std::string_view v) {
             c.beta_grid = parse_list<double>(v, [k](std::string_view t) { return parse_real(k, t); });
         },
         [](const RunConfig& c) { return join(c.beta_grid, format_number); }},
        {"alpha_grid", false,
         [](RunConfig& c, std::string_view k, std::string_view v) {
             c.alpha_grid = parse_list<double>(v, [k](std::string_view t) { return parse_real(k, t); });
         },
         [](const RunConfig& c) { return join(c.alpha_grid, format_number); }},
        FAIRREC_REAL("beta", beta),
        FAIRREC_REAL("alpha", alpha),
        FAIRREC_INT("n", n, std::size_t),
        {"recommend", false, [](RunConfig& c, auto, std::string_view v) { c.recommend = parse_recommend_mode(v); },
         [](const RunConfig& c) { return std::string(to_string(c.recommend)); }},
        {"pool", false, [](RunConfig& c, auto, std::string_view v) { c.pool = parse_candidate_pool(v); },
         [](const RunConfig& c) { return std::string(to_string(c.pool)); }},
        FAIRREC_INT("histogram_bins", histogram_bins, std::size_t),
        {"min_prediction", false,
         [](RunConfig& c, std::string_view k, std::string_view v) {
             if (v == "none") c.min_prediction.reset();
             else c.min_prediction = parse_real(k, v);
         },
         [](const RunConfig& c) { return c.min_prediction ? format_number(*c.min_prediction) : std::string("none"); }},
    };
    return table;
}

#undef FAIRREC_REAL
#undef FAIRREC_INT

const Key& find_key(std::string_view name) {
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == name; });
    if (it == table.end()) throw ConfigError("unknown configuration key '" + std::string(name) + "'");
    return *it;
}

void check_fractions(std::string_view what, const SplitSpec& s) {
    const double sum = s.train + s.validation + s.test;
    if (!(s.train > 0.0) || s.validation < 0.0 || s.test < 0.0 || std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError(std::string(what) + " fractions must be non-negative, train > 0, summing to 1");
    }
}

}  // namespace

std::string_view to_string(RecommendMode m) { return m == RecommendMode::dl ? "dl" : "heuristic"; }

RecommendMode parse_recommend_mode(std::string_view text) {
    if (text == "dl") return RecommendMode::dl;
    if (text == "heuristic") return RecommendMode::heuristic;
    throw ConfigError("unknown recommend mode '" + std::string(text) + "' (expected dl or heuristic)");
}

void RunConfig::set_base_seed(std::uint64_t seed) {
    split.seed = mix_seed(seed ^ 0x1);
    pmf.seed = mix_seed(seed ^ 0x2);
    mln_split.seed = mix_seed(seed ^ 0x3);
    mln_init_seed = mix_seed(seed ^ 0x4);
    mln.seed = mix_seed(seed ^ 0x5);
}

void RunConfig::validate() const {
    if (delimiter.empty()) throw ConfigError("delimiter must not be empty");
    if (max_rating < 2) throw ConfigError("max_rating must be >= 2");
    thresholds.validate(max_rating);
    check_fractions("split", split);
    check_fractions("mln.split", mln_split);
    pmf.validate();
    mln.validate();
    if (mln_hidden.empty() || std::find(mln_hidden.begin(), mln_hidden.end(), 0u) != mln_hidden.end()) {
        throw ConfigError("mln.hidden needs at least one non-empty layer");
    }
    if (!(mln_dropout >= 0.0 && mln_dropout < 1.0)) throw ConfigError("mln.dropout must be in [0, 1)");
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (beta_grid.empty() || !std::all_of(beta_grid.begin(), beta_grid.end(), unit)) {
        throw ConfigError("beta_grid needs values in [0, 1]");
    }
    if (alpha_grid.empty() || !std::all_of(alpha_grid.begin(), alpha_grid.end(), [](double a) { return a >= 0.0; })) {
        throw ConfigError("alpha_grid needs non-negative values");
    }
    if (!unit(beta)) throw ConfigError("beta must be in [0, 1]");
    if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
    if (n < 1) throw ConfigError("n must be >= 1");
    if (histogram_bins < 1) throw ConfigError("histogram_bins must be >= 1");
}

void set_option(RunConfig& cfg, std::string_view key, std::string_view value) {
    find_key(key).set(cfg, key, trim(value));
}

void apply_config(RunConfig& cfg, std::istream& in, const std::filesystem::path& base_dir) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
        const std::string_view key = trim(view.substr(0, eq));
        const std::string_view value = trim(view.substr(eq + 1));
        try {
            const Key& k = find_key(key);
            k.set(cfg, key, value);
            if (k.is_path && !base_dir.empty()) {
                std::filesystem::path& p = key == "ratings" ? cfg.ratings : key == "users" ? cfg.users : cfg.out;
                if (p.is_relative()) p = base_dir / p;
            }
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

RunConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open config file " + file.string());
    RunConfig cfg;
    try {
        apply_config(cfg, in, file.parent_path());
    } catch (const ParseError& e) {
        throw ParseError(file.string() + ": " + e.what(), 0);
    } catch (const ConfigError& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
    return cfg;
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Key& k : keys()) out.emplace_back(std::string(k.name), k.get(cfg));
    return out;
}

}  // namespace fairrec
