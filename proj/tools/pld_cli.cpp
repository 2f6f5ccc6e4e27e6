// Experiment driver: data preparation, training runs, loss-distribution
// analytics, closed-form-vs-simulation sweeps, and top-K evaluation, all
// from a declarative INI config. One output directory per (config, seed).

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pld/pld.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliOptions {
    std::string config_path;
    std::vector<std::int64_t> seeds;
    std::string out_dir;
    std::string checkpoint;
};

struct PreparedData {
    pld::SplitDataset split;
    pld::NoisyTrainSet noisy;
    std::optional<pld::IdMap> ids;
};

pld::ExperimentConfig load_config(const CliOptions& opts) {
    auto ini = pld::IniFile::parse(pld::read_file(opts.config_path));
    auto cfg = pld::parse_experiment_config(ini);
    if (!opts.seeds.empty()) cfg.seeds = opts.seeds;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    return cfg;
}

// Deterministic dataset pipeline shared by all commands: load or
// synthesize, filter, split, inject noise. Rebuilt per (config, seed), so
// later commands see exactly the data `prepare` exported.
PreparedData build_dataset(const pld::ExperimentConfig& cfg, std::int64_t seed) {
    PreparedData out;
    pld::InteractionSet base;
    if (cfg.dataset.source == pld::DataSource::File) {
        auto loaded = pld::load_interactions(cfg.dataset.path);
        out.ids = loaded.ids;
        base = std::move(loaded.set);
    } else {
        base = pld::generate_synthetic(cfg.dataset.num_users, cfg.dataset.num_items,
                                       cfg.dataset.latent_dim, cfg.dataset.per_user, seed)
                   .set;
    }
    if (cfg.dataset.min_degree > 1) {
        auto filtered = pld::filter_min_degree(base, cfg.dataset.min_degree);
        if (out.ids) {
            pld::IdMap remapped;
            for (int u : filtered.kept_users) remapped.users.push_back(out.ids->users[u]);
            for (int v : filtered.kept_items) remapped.items.push_back(out.ids->items[v]);
            out.ids = std::move(remapped);
        }
        base = std::move(filtered.set);
    }
    out.split = pld::split(base, cfg.dataset.train_frac, cfg.dataset.val_frac, seed);

    pld::InteractionSet forbidden = pld::make_interaction_set(
        base.num_users, base.num_items, [&] {
            auto pairs = out.split.validation.interactions;
            pairs.insert(pairs.end(), out.split.test.interactions.begin(),
                         out.split.test.interactions.end());
            return pairs;
        }());
    switch (cfg.dataset.noise_mode) {
        case pld::NoiseMode::None:
            out.noisy = pld::finish_noisy_set(out.split.train, {});
            break;
        case pld::NoiseMode::Ratio:
            out.noisy =
                pld::inject_noise_ratio(out.split.train, cfg.dataset.noise_level, seed, forbidden);
            break;
        case pld::NoiseMode::PerUser:
            out.noisy = pld::inject_noise_per_user(
                out.split.train, static_cast<int>(cfg.dataset.noise_level), seed, forbidden);
            break;
    }
    return out;
}

fs::path seed_dir(const pld::ExperimentConfig& cfg, std::int64_t seed) {
    return fs::path(cfg.out_dir) / ("seed_" + std::to_string(seed));
}

void write_run_summary(const fs::path& dir, const std::string& command, std::int64_t seed,
                       double wall_clock_s, json extra) {
    json summary;
    summary["command"] = command;
    summary["seed"] = seed;
    summary["wall_clock_s"] = wall_clock_s;
    summary["details"] = std::move(extra);
    pld::write_file_atomic(dir / (command + "_summary.json"), summary.dump(2) + "\n");
}

void write_config_snapshot(const fs::path& dir, const pld::ExperimentConfig& cfg) {
    pld::write_file_atomic(dir / "config_snapshot.ini",
                           pld::serialize_experiment_config(cfg).serialize());
}

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int cmd_prepare(const CliOptions& opts) {
    const auto cfg = load_config(opts);
    for (auto seed : cfg.seeds) {
        Stopwatch watch;
        auto data = build_dataset(cfg, seed);
        const auto dir = seed_dir(cfg, seed);
        pld::write_file_atomic(dir / "train_labeled.tsv", pld::format_labeled_set(data.noisy));
        pld::write_file_atomic(dir / "validation.tsv",
                               pld::format_plain_set(data.split.validation));
        pld::write_file_atomic(dir / "test.tsv", pld::format_plain_set(data.split.test));
        if (data.ids) {
            pld::write_id_maps(dir, *data.ids);
        }
        write_config_snapshot(dir, cfg);
        json extra;
        extra["num_users"] = data.noisy.all.num_users;
        extra["num_items"] = data.noisy.all.num_items;
        extra["train_interactions"] = data.split.train.size();
        extra["validation_interactions"] = data.split.validation.size();
        extra["test_interactions"] = data.split.test.size();
        extra["injected_noise"] = data.noisy.injected.size();
        extra["users_without_train"] = data.split.users_without_train.size();
        if (!data.noisy.shortfalls.empty()) {
            extra["noise_shortfall_users"] = data.noisy.shortfalls.size();
        }
        write_run_summary(dir, "prepare", seed, watch.seconds(), std::move(extra));
        if (!data.split.users_without_train.empty()) {
            std::cerr << "warning: " << data.split.users_without_train.size()
                      << " user(s) have no train interactions; excluded from evaluation\n";
        }
        std::cout << "prepare seed=" << seed << " -> " << dir.string() << "\n";
    }
    return 0;
}

int cmd_train(const CliOptions& opts) {
    const auto cfg = load_config(opts);
    for (auto seed : cfg.seeds) {
        Stopwatch watch;
        auto data = build_dataset(cfg, seed);
        auto train_cfg = cfg.train;
        train_cfg.seed = seed;
        auto model = pld::init_model(data.noisy.all.num_users, data.noisy.all.num_items,
                                     cfg.model.dim, cfg.model.layers, seed);
        auto result = pld::run_training(std::move(model), data.noisy, data.split.validation,
                                        train_cfg);
        const auto dir = seed_dir(cfg, seed);
        std::string csv = pld::epoch_csv_header() + "\n";
        for (const auto& row : result.history) {
            csv += pld::format_epoch_csv_row(row) + "\n";
        }
        pld::write_file_atomic(dir / "epochs.csv", csv);
        pld::save_checkpoint(result.best_state, dir / "checkpoint_best.bin");
        write_config_snapshot(dir, cfg);
        json extra;
        extra["epochs_run"] = result.history.size();
        extra["best_epoch"] = result.best_epoch;
        if (!result.history.empty() && std::isfinite(result.history.back().val_metric)) {
            extra["final_val_recall20"] = result.history.back().val_metric;
        }
        extra["checkpoint"] = (dir / "checkpoint_best.bin").string();
        write_run_summary(dir, "train", seed, watch.seconds(), std::move(extra));
        std::cout << "train seed=" << seed << " epochs=" << result.history.size() << " -> "
                  << dir.string() << "\n";
    }
    return 0;
}

int cmd_analyze(const CliOptions& opts) {
    const auto cfg = load_config(opts);
    for (auto seed : cfg.seeds) {
        Stopwatch watch;
        auto data = build_dataset(cfg, seed);
        const auto dir = seed_dir(cfg, seed);
        const fs::path ckpt = opts.checkpoint.empty() ? dir / "checkpoint_best.bin"
                                                      : fs::path(opts.checkpoint);
        auto model = pld::load_checkpoint(ckpt);
        if (model.num_users != data.noisy.all.num_users ||
            model.num_items != data.noisy.all.num_items) {
            throw std::runtime_error("checkpoint " + ckpt.string() +
                                     " does not match the configured dataset");
        }
        if (model.layers >= 1) {
            pld::propagate(model, data.noisy.all);
        }
        const auto record =
            pld::collect_losses(model, data.noisy, cfg.train.loss_kind, seed);
        const auto global = pld::overlap_stats(record, pld::OverlapScope::Global);
        const auto personal = pld::overlap_stats(record, pld::OverlapScope::Personal);
        const auto gaps = pld::quartile_gap_per_user(record);

        pld::write_file_atomic(dir / "loss_record.csv", pld::format_loss_record_csv(record));
        pld::write_file_atomic(dir / "overlap_stats.csv",
                               pld::format_overlap_stats_csv({global, personal}));
        pld::write_file_atomic(dir / "user_gaps.csv", pld::format_user_gaps_csv(gaps));
        json extra;
        extra["loss_entries"] = record.size();
        extra["normal_entries"] = global.normal_total;
        extra["noisy_entries"] = global.noise_total;
        extra["global_normal_ratio"] = global.normal_ratio;
        extra["global_noise_ratio"] = global.noise_ratio;
        extra["personal_normal_ratio"] = personal.normal_ratio;
        extra["personal_noise_ratio"] = personal.noise_ratio;
        extra["gap_users"] = gaps.gaps.size();
        extra["gap_users_skipped"] = gaps.skipped_users.size();
        if (global.noise_total == 0) {
            extra["note"] = "no noisy labels in data; noise-side statistics are empty";
        }
        write_run_summary(dir, "analyze", seed, watch.seconds(), std::move(extra));
        std::cout << "analyze seed=" << seed << " entries=" << record.size() << " -> "
                  << dir.string() << "\n";
    }
    return 0;
}

int cmd_theory(const CliOptions& opts) {
    const auto cfg = load_config(opts);
    for (auto seed : cfg.seeds) {
        Stopwatch watch;
        const auto rows = pld::run_sweep(cfg.theory, seed);
        const auto dir = seed_dir(cfg, seed);
        pld::write_file_atomic(dir / "theory_sweep.csv", pld::format_sweep_csv(rows));
        double worst = 0.0;
        for (const auto& r : rows) {
            worst = std::max(worst, std::abs(r.closed_form - r.mc.estimate));
        }
        json extra;
        extra["grid_points"] = rows.size();
        extra["trials_per_point"] = cfg.theory.trials;
        extra["worst_abs_difference"] = worst;
        write_run_summary(dir, "theory", seed, watch.seconds(), std::move(extra));
        std::cout << "theory seed=" << seed << " points=" << rows.size() << " -> "
                  << dir.string() << "\n";
    }
    return 0;
}

int cmd_eval(const CliOptions& opts) {
    const auto cfg = load_config(opts);
    for (auto seed : cfg.seeds) {
        Stopwatch watch;
        auto data = build_dataset(cfg, seed);
        const auto dir = seed_dir(cfg, seed);
        const fs::path ckpt = opts.checkpoint.empty() ? dir / "checkpoint_best.bin"
                                                      : fs::path(opts.checkpoint);
        auto model = pld::load_checkpoint(ckpt);
        if (model.num_users != data.noisy.all.num_users ||
            model.num_items != data.noisy.all.num_items) {
            throw std::runtime_error("checkpoint " + ckpt.string() +
                                     " does not match the configured dataset");
        }
        if (model.layers >= 1) {
            pld::propagate(model, data.noisy.all);
        }
        const auto report = pld::evaluate(model, data.noisy.all, data.split.test, cfg.eval_k);
        pld::write_file_atomic(dir / "metrics.csv", pld::format_metric_csv(report));
        json extra;
        extra["evaluated_users"] = report.num_evaluated_users;
        for (size_t i = 0; i < report.k_values.size(); ++i) {
            extra["recall@" + std::to_string(report.k_values[i])] = report.recall[i];
            extra["ndcg@" + std::to_string(report.k_values[i])] = report.ndcg[i];
        }
        write_run_summary(dir, "eval", seed, watch.seconds(), std::move(extra));
        std::cout << "eval seed=" << seed << " users=" << report.num_evaluated_users << " -> "
                  << dir.string() << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PLD experiment driver: loss-resampling denoising for implicit feedback"};
    app.require_subcommand(1);
    app.footer("Config sections, keys, and defaults are documented in README.md; example\n"
               "configs live under configs/.");

    CliOptions opts;
    auto add_common = [&](CLI::App* sub, bool with_checkpoint) {
        sub->add_option("--config", opts.config_path, "experiment config (INI)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", opts.seeds, "seed(s) overriding the config's [seeds]");
        sub->add_option("--out", opts.out_dir, "output directory overriding [output] dir");
        if (with_checkpoint) {
            sub->add_option("--checkpoint", opts.checkpoint,
                            "checkpoint path (default: <out>/seed_<N>/checkpoint_best.bin)");
        }
    };
    add_common(app.add_subcommand("prepare", "build, split, and noise-inject the dataset"),
               false);
    add_common(app.add_subcommand("train", "run the training loop per seed"), false);
    add_common(app.add_subcommand("analyze", "emit loss records and overlap statistics"), true);
    add_common(app.add_subcommand("theory", "closed-form vs Monte Carlo sweep"), false);
    add_common(app.add_subcommand("eval", "top-K ranking metrics on the test split"), true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("prepare")) return cmd_prepare(opts);
        if (app.got_subcommand("train")) return cmd_train(opts);
        if (app.got_subcommand("analyze")) return cmd_analyze(opts);
        if (app.got_subcommand("theory")) return cmd_theory(opts);
        if (app.got_subcommand("eval")) return cmd_eval(opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
