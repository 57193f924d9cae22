#include "fairrec/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include "json.hpp"

#include "fairrec/csv.hpp"
#include "fairrec/errors.hpp"
#include "fairrec/evaluate.hpp"
#include "fairrec/heuristic.hpp"
#include "fairrec/parallel.hpp"
#include "fairrec/random.hpp"
#include "fairrec/recommend.hpp"
#include "fairrec/synthetic.hpp"

namespace fairrec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array kOrder{Stage::ingest, Stage::indexes, Stage::train_mf,
                            Stage::train_mln, Stage::recommend, Stage::evaluate};

/// Compact form for progress lines; artifacts keep full precision.
std::string brief(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Bookkeeping for one stage: opens files in the output directory and
/// remembers what was read and written for the manifest.
class StageRun {
public:
    explicit StageRun(const RunConfig& cfg) : cfg_(cfg) {}

    fs::path path(std::string_view name) const { return cfg_.out / name; }

    /// External inputs are keyed by their path, artifacts by their name, so
    /// manifests of runs into different directories stay comparable.
    std::ifstream open_input(const fs::path& file, bool binary = false) { return open_keyed(file, file.string(), binary); }

    std::ifstream open_keyed(const fs::path& file, const std::string& key, bool binary) {
        std::ifstream in(file, binary ? std::ios::binary : std::ios::in);
        if (!in) throw IoError("cannot read " + file.string());
        inputs_[key] = {{"fnv1a64", hex64(file_checksum(file))}, {"bytes", fs::file_size(file)}};
        return in;
    }

    std::ifstream open_artifact(std::string_view name, bool binary = false) {
        const fs::path file = path(name);
        if (!fs::exists(file)) {
            throw IoError("missing " + file.string() + " (run the stage that produces it first)");
        }
        return open_keyed(file, std::string(name), binary);
    }

    /// Writes through a temporary file so an interrupted stage never leaves
    /// a truncated artifact behind.
    template <typename Writer>
    void write_artifact(std::string_view name, Writer&& writer, bool binary = false) {
        const fs::path file = path(name);
        const fs::path tmp = file.string() + ".tmp";
        {
            std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
            if (!out) throw IoError("cannot write " + tmp.string());
            writer(out);
            out.flush();
            if (!out) throw IoError("write failed: " + tmp.string());
        }
        fs::rename(tmp, file);
        outputs_.push_back(std::string(name));
    }

    json& metrics() { return metrics_; }

    json record() const { return {{"inputs", inputs_}, {"outputs", outputs_}, {"metrics", metrics_}}; }

private:
    const RunConfig& cfg_;
    json inputs_ = json::object();
    json outputs_ = json::array();
    json metrics_ = json::object();
};

json seeds_of(const RunConfig& cfg) {
    return {{"split", cfg.split.seed},
            {"pmf", cfg.pmf.seed},
            {"mln_split", cfg.mln_split.seed},
            {"mln_init", cfg.mln_init_seed},
            {"mln", cfg.mln.seed}};
}

void update_manifest(const RunConfig& cfg, Stage stage, const StageRun& run) {
    const fs::path file = cfg.out / artifact::manifest;
    json manifest = json::object();
    if (std::ifstream in(file); in) {
        try {
            manifest = json::parse(in);
        } catch (const json::exception&) {
            manifest = json::object();  // unreadable manifests are rebuilt
        }
    }
    json config = json::object();
    for (const auto& [k, v] : config_entries(cfg)) config[k] = v;
    manifest["format"] = "fairrec-manifest";
    manifest["version"] = 1;
    manifest["config"] = std::move(config);
    manifest["seeds"] = seeds_of(cfg);
    manifest["stages"][std::string(to_string(stage))] = run.record();

    const fs::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << manifest.dump(2) << '\n';
    }
    fs::rename(tmp, file);
}

// ---------------------------------------------------------------------------
// Shared loaders

struct Votes {
    RatingMatrix all;
    RatingMatrix train;
    RatingMatrix test;
};

Votes load_votes(StageRun& run) {
    Votes v;
    {
        auto in = run.open_artifact(artifact::ratings);
        v.all = read_snapshot(in);
    }
    {
        auto in = run.open_artifact(artifact::train);
        v.train = read_snapshot(in, v.all.shared_ids());
    }
    {
        auto in = run.open_artifact(artifact::test);
        v.test = read_snapshot(in, v.all.shared_ids());
    }
    return v;
}

DemographicTable load_users(StageRun& run) {
    auto in = run.open_artifact(artifact::users);
    return parse_users(in);
}

FactorModel load_factor_artifact(StageRun& run, const IdSpace& ids) {
    auto in = run.open_artifact(artifact::factors, true);
    FactorModel f = load_factors(in);
    if (f.num_users() != ids.num_users() || f.num_items() != ids.num_items()) {
        throw ConfigError("factor model does not match the ingested id space (rerun train-mf)");
    }
    return f;
}

MlnModel load_network_artifact(StageRun& run, const FactorModel& factors) {
    auto in = run.open_artifact(artifact::network, true);
    MlnModel m = load_mln(in);
    if (m.input_width() != 2 * factors.factors() + 1) {
        throw ConfigError("network input width does not match the factor model (rerun train-mln)");
    }
    return m;
}

ImIndex load_im(StageRun& run, const RunConfig& cfg, const IdSpace& ids) {
    auto in = run.open_artifact(artifact::im);
    return read_im_csv(in, ids, cfg.im_mode);
}

UmIndex load_um(StageRun& run, const RunConfig& cfg, const IdSpace& ids) {
    auto in = run.open_artifact(artifact::um);
    return read_um_csv(in, ids, cfg.um_mode);
}

std::vector<double> present_values(std::span<const std::optional<double>> values) {
    std::vector<double> out;
    for (const auto& v : values) {
        if (v) out.push_back(*v);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stages

void ingest(const RunConfig& cfg, StageRun& run, std::ostream& log) {
    if (cfg.ratings.empty()) throw ConfigError("no ratings file configured (set 'ratings' or pass --ratings)");
    if (cfg.users.empty()) throw ConfigError("no users file configured (set 'users' or pass --users)");
    for (const fs::path& p : {cfg.ratings, cfg.users}) {
        if (!fs::exists(p)) throw IoError("input file not found: " + p.string());
    }
    RatingMatrix all;
    {
        auto in = run.open_input(cfg.ratings);
        try {
            all = parse_ratings(in, {cfg.delimiter, cfg.max_rating});
        } catch (const ParseError& e) {
            throw ParseError(cfg.ratings.string() + ": " + e.what(), 0);
        }
    }
    DemographicTable users;
    {
        auto in = run.open_input(cfg.users);
        try {
            users = parse_users(in);
        } catch (const ParseError& e) {
            throw ParseError(cfg.users.string() + ": " + e.what(), 0);
        }
    }
    const SplitResult parts = split(all, cfg.split);

    run.write_artifact(artifact::ratings, [&](std::ostream& o) { write_snapshot(o, all); });
    run.write_artifact(artifact::train, [&](std::ostream& o) { write_snapshot(o, parts.train); });
    run.write_artifact(artifact::validation, [&](std::ostream& o) { write_snapshot(o, parts.validation); });
    run.write_artifact(artifact::test, [&](std::ostream& o) { write_snapshot(o, parts.test); });
    run.write_artifact(artifact::users, [&](std::ostream& o) { write_users_dat(o, users); });

    std::size_t unknown = 0;
    for (RawId raw : all.ids().raw_users()) {
        if (!users.find(raw)) ++unknown;
    }
    run.metrics() = {{"ratings", all.size()},     {"users", all.num_users()},
                     {"items", all.num_items()},  {"train", parts.train.size()},
                     {"validation", parts.validation.size()}, {"test", parts.test.size()},
                     {"users_without_demographics", unknown}};
    log << "ingest: " << all.size() << " votes, " << all.num_users() << " users, " << all.num_items()
        << " items; split " << parts.train.size() << '/' << parts.validation.size() << '/' << parts.test.size()
        << '\n';
    if (unknown) log << "ingest: " << unknown << " users have no demographic record\n";
}

void indexes(const RunConfig& cfg, StageRun& run, std::ostream& log) {
    const Votes votes = load_votes(run);
    const DemographicTable users = load_users(run);
    const IdSpace& ids = votes.all.ids();

    const GroupAssignment groups = assign_groups(users, cfg.scheme);
    const ImIndex im = compute_im(votes.train, groups, cfg.thresholds, cfg.im_mode);
    const UmIndex um = compute_um(votes.train, im, cfg.thresholds, cfg.um_mode);
    run.write_artifact(artifact::im, [&](std::ostream& o) { write_im_csv(o, ids, im); });
    run.write_artifact(artifact::um, [&](std::ostream& o) { write_um_csv(o, ids, um); });

    // The classification table covers both schemes regardless of --scheme.
    std::vector<std::pair<std::string, Classification>> table;
    for (Scheme s : {Scheme::gender, Scheme::youth}) {
        const GroupAssignment g = assign_groups(users, s);
        const ImIndex scheme_im = s == cfg.scheme ? im : compute_im(votes.train, g, cfg.thresholds, cfg.im_mode);
        const UmIndex scheme_um = s == cfg.scheme ? um : compute_um(votes.train, scheme_im, cfg.thresholds, cfg.um_mode);
        table.emplace_back(std::string(to_string(s)), classify_users(scheme_um, g, ids));
    }
    run.write_artifact(artifact::table3, [&](std::ostream& o) { write_table3_csv(o, table); });

    std::vector<double> im_values;
    std::size_t neutral = 0;
    for (ItemId i = 0; i < im.size(); ++i) {
        if (im.is_neutral(i)) ++neutral;
        else im_values.push_back(im.values[i]);
    }
    const std::vector<double> um_values = present_values(um.values);
    std::vector<std::pair<std::string, Histogram>> hist;
    if (!im_values.empty()) hist.emplace_back("im", histogram(im_values, cfg.histogram_bins));
    if (!um_values.empty()) hist.emplace_back("um", histogram(um_values, cfg.histogram_bins));
    run.write_artifact(artifact::histograms, [&](std::ostream& o) { write_histograms_csv(o, hist); });

    json classification = json::object();
    for (const auto& [scheme, c] : table) {
        for (const ClassificationRow* r : {&c.minority, &c.majority}) {
            classification[r->name] = {{"correct", r->correct}, {"incorrect", r->incorrect}, {"percent", r->percent()}};
        }
    }
    run.metrics() = {{"neutral_items", neutral}, {"classification", classification}};
    log << "indexes: " << im.size() << " items (" << neutral << " neutral), " << um_values.size()
        << " users with UM\n";
    for (const auto& [scheme, c] : table) {
        for (const ClassificationRow* r : {&c.minority, &c.majority}) {
            log << "indexes: " << r->name << ' ' << r->correct << '/' << r->total() << " correct ("
                << brief(r->percent()) << "%)\n";
        }
    }
}

void train_mf(const RunConfig& cfg, StageRun& run, std::ostream& log) {
    const Votes votes = load_votes(run);
    const PmfResult result = train_pmf(votes.train, cfg.pmf, votes.test.empty() ? nullptr : &votes.test);
    run.write_artifact(artifact::factors, [&](std::ostream& o) { save_factors(o, result.model); }, true);
    run.write_artifact(artifact::factors_log, [&](std::ostream& o) {
        CsvWriter csv(o, {"epoch", "train_loss", "test_mae", "test_rmse"});
        for (const PmfEpoch& e : result.history) {
            auto row = csv.row();
            row << e.epoch << e.train_loss;
            if (e.heldout) row << e.heldout->mae << e.heldout->rmse;
            else row << "" << "";
        }
    });
    const PmfEpoch& last = result.history.back();
    run.metrics() = {{"epochs", result.history.size()}, {"train_loss", last.train_loss}};
    log << "train-mf: " << result.history.size() << " epochs, train loss " << brief(last.train_loss);
    if (last.heldout) {
        run.metrics()["test_mae"] = last.heldout->mae;
        run.metrics()["test_rmse"] = last.heldout->rmse;
        log << ", test MAE " << brief(last.heldout->mae) << ", RMSE " << brief(last.heldout->rmse);
    }
    log << '\n';
}

void train_mln(const RunConfig& cfg, StageRun& run, std::ostream& log) {
    const Votes votes = load_votes(run);
    const IdSpace& ids = votes.all.ids();
    const auto factors = std::make_shared<const FactorModel>(load_factor_artifact(run, ids));
    const NormalizedIndex im_norm = normalize(load_im(run, cfg, ids));
    const NormalizedIndex um_norm = normalize(load_um(run, cfg, ids));

    RatingMatrix corpus = votes.train;
    if (cfg.mln_max_ratings > 0 && corpus.size() > cfg.mln_max_ratings) {
        std::vector<Rating> kept(corpus.entries().begin(), corpus.entries().end());
        Rng::derive(cfg.mln_split.seed, 0).shuffle(std::span(kept));
        kept.resize(cfg.mln_max_ratings);
        corpus = corpus.with_entries(std::move(kept));
    }
    const SplitResult parts = split(corpus, cfg.mln_split);
    const LabelOptions labels{cfg.label_scale, cfg.max_rating};
    const FactorExamples train = build_training_set(factors, parts.train, im_norm, um_norm, cfg.beta_grid, labels);
    const FactorExamples validation =
        build_training_set(factors, parts.validation, im_norm, um_norm, cfg.beta_grid, labels);
    const FactorExamples test = build_training_set(factors, parts.test, im_norm, um_norm, cfg.beta_grid, labels);

    MlnModel model = make_mln(train.width(), cfg.mln_hidden, cfg.mln_dropout, cfg.mln_init_seed);
    const auto history = mln_train(model, train, validation.size() ? &validation : nullptr, cfg.mln);

    // Constant predictor at the training-label mean, for reference.
    double mean = 0.0;
    for (std::size_t k = 0; k < train.size(); ++k) mean += train.target(k);
    mean /= static_cast<double>(std::max<std::size_t>(1, train.size()));
    double baseline = 0.0;
    for (std::size_t k = 0; k < test.size(); ++k) baseline += std::abs(test.target(k) - mean);
    const bool has_test = test.size() > 0;
    const double test_mae = has_test ? mln_mae(model, test) : 0.0;
    if (has_test) baseline /= static_cast<double>(test.size());

    run.write_artifact(artifact::network, [&](std::ostream& o) { save_mln(o, model); }, true);
    run.write_artifact(artifact::network_log, [&](std::ostream& o) { write_mln_log(o, history); });

    run.metrics() = {{"examples_train", train.size()},
                     {"examples_validation", validation.size()},
                     {"examples_test", test.size()},
                     {"train_mae", history.empty() ? 0.0 : history.back().train_mae}};
    log << "train-mln: " << train.size() << " training examples, " << history.size() << " epochs";
    if (has_test) {
        run.metrics()["test_mae"] = test_mae;
        run.metrics()["test_mae_constant_baseline"] = baseline;
        log << ", test MAE " << brief(test_mae) << " (constant baseline " << brief(baseline) << ')';
    }
    log << '\n';
}

void recommend(const RunConfig& cfg, StageRun& run, std::ostream& log) {
    const Votes votes = load_votes(run);
    const IdSpace& ids = votes.all.ids();
    const FactorModel factors = load_factor_artifact(run, ids);

    if (cfg.recommend == RecommendMode::dl) {
        const MlnModel mln = load_network_artifact(run, factors);
        std::vector<UserId> users(ids.num_users());
        for (UserId u = 0; u < users.size(); ++u) users[u] = u;
        const auto batch = recommend_batch(mln, factors, votes.train, users, cfg.beta, cfg.n);
        std::vector<RecommendationList> lists;
        std::size_t failed = 0;
        for (const BatchEntry& e : batch) {
            if (e.list) lists.push_back(*e.list);
            else ++failed;
        }
        run.write_artifact(artifact::recommendations_dl,
                           [&](std::ostream& o) { write_recommendations_csv(o, ids, lists); });
        run.metrics() = {{"mode", "dl"}, {"beta", cfg.beta}, {"n", cfg.n}, {"users", lists.size()}, {"failed", failed}};
        log << "recommend: dl lists for " << lists.size() << " users at beta " << brief(cfg.beta) << '\n';
        return;
    }

    const ImIndex im = load_im(run, cfg, ids);
    const GroupAssignment groups = assign_groups(load_users(run), cfg.scheme);
    const std::vector<GroupLabel> labels = groups.labels_for(ids);
    std::vector<UserId> users;
    for (UserId u = 0; u < labels.size(); ++u) {
        if (labels[u] != GroupLabel::unknown) users.push_back(u);
    }
    std::vector<HeuristicList> lists(users.size());
    parallel_for(users.size(), [&](std::size_t k) {
        lists[k] = recommend_heuristic(factors, im, votes.train, users[k], labels[users[k]], cfg.alpha, cfg.n);
    });
    const auto empty = std::count_if(lists.begin(), lists.end(), [](const HeuristicList& l) { return l.items.empty(); });
    run.write_artifact(artifact::recommendations_heuristic,
                       [&](std::ostream& o) { write_heuristic_csv(o, ids, lists); });
    run.metrics() = {{"mode", "heuristic"}, {"alpha", cfg.alpha}, {"n", cfg.n},
                     {"users", lists.size()}, {"empty_lists", empty}};
    log << "recommend: heuristic lists for " << lists.size() << " users at alpha " << brief(cfg.alpha) << " ("
        << empty << " empty)\n";
}

void evaluate(const RunConfig& cfg, StageRun& run, std::ostream& log) {
    const Votes votes = load_votes(run);
    if (votes.test.empty()) throw ConfigError("evaluation needs held-out votes (split.test is 0)");
    const IdSpace& ids = votes.all.ids();
    const FactorModel factors = load_factor_artifact(run, ids);
    const MlnModel mln = load_network_artifact(run, factors);
    const ImIndex im = load_im(run, cfg, ids);
    const UmIndex um = load_um(run, cfg, ids);
    const DemographicTable users = load_users(run);

    const std::vector<UserItems> predictions = heldout_predictions(factors, votes.test, cfg.min_prediction);
    std::vector<SchemeMeans> table4;
    for (Scheme s : {Scheme::gender, Scheme::youth}) {
        const GroupAssignment g = assign_groups(users, s);
        const ImIndex scheme_im = s == cfg.scheme ? im : compute_im(votes.train, g, cfg.thresholds, cfg.im_mode);
        table4.push_back({s, std::string(g.group_name(GroupLabel::minority)),
                          std::string(g.group_name(GroupLabel::majority)),
                          group_im_mean(predictions, scheme_im, g.labels_for(ids))});
    }
    run.write_artifact(artifact::table4, [&](std::ostream& o) { write_table4_csv(o, table4); });

    const std::vector<GroupLabel> labels = assign_groups(users, cfg.scheme).labels_for(ids);
    const auto alpha = alpha_sweep(factors, votes.test, im, labels, cfg.alpha_grid, cfg.n, cfg.min_prediction);
    run.write_artifact(artifact::fig5, [&](std::ostream& o) { write_fig5_csv(o, alpha); });
    run.write_artifact(artifact::fig6, [&](std::ostream& o) { write_fig6_csv(o, alpha); });

    const NormalizedIndex im_norm = normalize(im);
    const NormalizedIndex um_norm = normalize(um);
    const SweepData data{factors, votes.train, votes.test, im_norm, um_norm, labels};
    const BetaSweep sweep = beta_sweep(mln, data, cfg.beta_grid, cfg.n, cfg.pool);
    run.write_artifact(artifact::fig7, [&](std::ostream& o) { write_fig7_csv(o, sweep); });

    json means = json::object();
    for (const SchemeMeans& m : table4) {
        means[m.minority_name] = m.means.minority;
        means[m.majority_name] = m.means.majority;
    }
    run.metrics() = {{"table4", means}, {"optimum_beta", sweep.optimum_beta}, {"pool", to_string(cfg.pool)}};
    for (const SchemeMeans& m : table4) {
        log << "evaluate: mean IM " << m.minority_name << ' ' << brief(m.means.minority) << ", "
            << m.majority_name << ' ' << brief(m.means.majority) << '\n';
    }
    log << "evaluate: optimum beta " << brief(sweep.optimum_beta) << '\n';
}

void run_one(Stage stage, const RunConfig& cfg, std::ostream& log) {
    StageRun run(cfg);
    switch (stage) {
        case Stage::ingest: ingest(cfg, run, log); break;
        case Stage::indexes: indexes(cfg, run, log); break;
        case Stage::train_mf: train_mf(cfg, run, log); break;
        case Stage::train_mln: train_mln(cfg, run, log); break;
        case Stage::recommend: recommend(cfg, run, log); break;
        case Stage::evaluate: evaluate(cfg, run, log); break;
        case Stage::all: throw std::logic_error("run_one(all)");
    }
    update_manifest(cfg, stage, run);
}

}  // namespace

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::ingest: return "ingest";
        case Stage::indexes: return "indexes";
        case Stage::train_mf: return "train-mf";
        case Stage::train_mln: return "train-mln";
        case Stage::recommend: return "recommend";
        case Stage::evaluate: return "evaluate";
        case Stage::all: return "all";
    }
    return "?";
}

std::optional<Stage> parse_stage(std::string_view text) {
    for (Stage s : {Stage::ingest, Stage::indexes, Stage::train_mf, Stage::train_mln, Stage::recommend,
                    Stage::evaluate, Stage::all}) {
        if (to_string(s) == text) return s;
    }
    return std::nullopt;
}

std::span<const Stage> stage_order() { return kOrder; }

void run_stage(Stage stage, const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.out.string() + ": " + ec.message());
    if (stage == Stage::all) {
        for (Stage s : kOrder) run_one(s, cfg, log);
    } else {
        run_one(stage, cfg, log);
    }
}

std::uint64_t file_checksum(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot read " + file.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        for (std::streamsize k = 0; k < in.gcount(); ++k) {
            h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(k)]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

}  // namespace fairrec
