// Command-line front end: dataset preparation, training runs, evaluation,
// margin-grid experiments, attention export.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrmn/baselines.hpp"
#include "mrmn/config.hpp"
#include "mrmn/data.hpp"
#include "mrmn/error.hpp"
#include "mrmn/evaluation.hpp"
#include "mrmn/forward.hpp"
#include "mrmn/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mrmn;

namespace {

struct Flags {
    std::string config;
    std::vector<std::pair<std::string, std::string>> settings;  // provided flags, in order
};

void option(CLI::App* cmd, Flags& f, const std::string& flag, const std::string& key,
            const std::string& desc) {
    cmd->add_option(flag, desc)->each([&f, key](const std::string& v) {
        f.settings.emplace_back(key, v);
    });
}

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "flat key=value config file; flags override it");
    option(cmd, f, "--data", "data", "interaction file (user,item,type,timestamp lines)");
    option(cmd, f, "--out", "out", "output directory");
    option(cmd, f, "--seed", "seed", "run seed");
    option(cmd, f, "--model", "model", "mrmn, lrml, cml, or mf-bpr");
    option(cmd, f, "--eval-type", "eval-type", "feedback type to score with (default: primary)");
    option(cmd, f, "--neg-relation", "neg-relation",
           "relation vector for the corrupted score: reuse or recompute");
    option(cmd, f, "--k", "k", "ranking cutoff K");
    option(cmd, f, "--negatives", "negatives", "sampled negatives per evaluated user");
    option(cmd, f, "--delimiter", "delimiter", "input field delimiter (single character)");
    cmd->add_flag_callback(
        "--collapse-types",
        [&f] { f.settings.emplace_back("collapse-types", "true"); },
        "relabel every interaction to the primary feedback type");
}

void add_hyper(CLI::App* cmd, Flags& f) {
    option(cmd, f, "--d", "d", "embedding dimension");
    option(cmd, f, "--slots", "slots", "key/memory slot count");
    option(cmd, f, "--lr", "lr", "SGD learning rate");
    option(cmd, f, "--epochs", "epochs", "training epochs");
    option(cmd, f, "--l2-reg", "l2-reg", "L2 coefficient (mf-bpr only)");
    cmd->add_option("--margin", "margin: a bare value is the default for all types, "
                                "'type:value' pins one type (repeatable)")
        ->take_all()
        ->each([&f](const std::string& v) { f.settings.emplace_back("margin", v); });
}

RunConfig make_config(const Flags& f) {
    RunConfig cfg = f.config.empty() ? RunConfig{} : load_config_file(f.config);
    for (const auto& [key, value] : f.settings) apply_setting(cfg, key, value);
    return cfg;
}

InteractionLog load_log(const RunConfig& cfg, bool allow_collapse) {
    if (cfg.data_path.empty()) throw ConfigError("missing --data");
    ParseOptions opts;
    opts.delimiter = cfg.delimiter;
    InteractionLog log = parse_interactions_file(cfg.data_path, opts);
    if (cfg.min_user > 0 || cfg.min_item > 0)
        log = filter_by_activity(log, cfg.min_user, cfg.min_item);
    if (allow_collapse && (cfg.collapse_types || cfg.model == ModelKind::lrml))
        log = collapse_types(log, log.types.token(0));
    return log;
}

TypeIndex resolve_eval_type(const RunConfig& cfg, const Dataset& ds) {
    if (cfg.eval_type.empty()) return 0;  // primary = first type
    for (TypeIndex t = 0; t < ds.type_names.size(); ++t) {
        if (ds.type_names[t] == cfg.eval_type) return t;
    }
    throw ConfigError("eval-type '" + cfg.eval_type + "' is not a feedback type of this dataset");
}

fs::path ensure_out_dir(const RunConfig& cfg) {
    fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file: " + path.string());
    return out;
}

void write_summary_json(const fs::path& path, const RunConfig& cfg, const EvalReport& report,
                        const std::string& eval_type_name) {
    json j;
    j["model"] = model_kind_name(cfg.model);
    j["split"] = cfg.split;
    j["eval_type"] = eval_type_name;
    j["k"] = report.k;
    j["negatives"] = report.negatives;
    j["seed"] = cfg.hp.seed;
    j["hr_at_k"] = report.hr_at_k;
    j["ndcg_at_k"] = report.ndcg_at_k;
    j["users_evaluated"] = report.users_evaluated;
    j["users_skipped"] = report.users_skipped;
    open_out(path) << j.dump(2) << '\n';
}

Split split_from_config(const RunConfig& cfg) {
    return cfg.split == "valid" ? Split::valid : Split::test;
}

// Loads a checkpoint and rebuilds the model against the dataset; d, slots and
// margins come from the checkpoint header, everything else from the config.
std::unique_ptr<RankingModel> model_from_checkpoint(const RunConfig& cfg, const Dataset& ds) {
    if (cfg.checkpoint_path.empty()) throw ConfigError("missing --checkpoint");
    auto [params, ckpt_hp] = load_checkpoint(cfg.checkpoint_path);
    HyperParams hp = cfg.hp;
    hp.d = ckpt_hp.d;
    hp.slots = ckpt_hp.slots;
    hp.margins = ckpt_hp.margins;
    return make_model(cfg.model, ds, std::move(hp), std::move(params));
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_ingest(const RunConfig& cfg) {
    InteractionLog log = load_log(cfg, /*allow_collapse=*/false);
    Dataset ds = leave_one_out_split(log);

    if (log.warning_count > 0)
        std::cerr << "warning: input has a single feedback type (" << log.warning_count
                  << " warning(s)); multi-relational training needs at least two\n";

    auto stats = compute_type_stats(log);
    fs::path dir = ensure_out_dir(cfg);

    {
        auto out = open_out(dir / "canonical.csv");
        write_interactions(log, out, cfg.delimiter, /*canonical=*/true);
    }
    {
        auto out = open_out(dir / "dataset_stats.csv");
        out << "type,users,items,interactions,density\n";
        for (const auto& s : stats) {
            out << s.type << ',' << s.users << ',' << s.items << ',' << s.interactions << ','
                << std::setprecision(6) << s.density << '\n';
        }
    }

    std::size_t n_valid = 0, n_test = 0;
    for (const auto& r : ds.valid) n_valid += r.has_value();
    for (const auto& r : ds.test) n_test += r.has_value();

    std::cout << "users=" << log.users.size() << " items=" << log.items.size()
              << " types=" << log.types.size() << " records=" << log.records.size() << "\n";
    std::cout << "type,users,items,interactions,density\n";
    for (const auto& s : stats) {
        std::cout << s.type << ',' << s.users << ',' << s.items << ',' << s.interactions << ','
                  << std::setprecision(4) << s.density * 100.0 << "%\n";
    }
    std::cout << "split: train_triplets=" << ds.train_triplets.size() << " valid=" << n_valid
              << " test=" << n_test << "\n";
    std::cout << "wrote " << (dir / "canonical.csv").string() << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    InteractionLog log = load_log(cfg, /*allow_collapse=*/true);
    Dataset ds = leave_one_out_split(log);
    resolve_margins(cfg, ds.type_names);
    validate(cfg.hp, ds);

    auto model = make_model(cfg.model, ds, cfg.hp);
    UniformNegativeSampler sampler;
    Rng rng(derive_seed(cfg.hp.seed, seed_stream::train));
    TypeIndex eval_type = resolve_eval_type(cfg, ds);

    fs::path dir = ensure_out_dir(cfg);
    auto train_log = open_out(dir / "training_log.csv");
    train_log << "epoch,mean_loss,active_fraction,elapsed_ms\n";

    std::ofstream valid_metrics;
    bool periodic_eval = cfg.eval_every > 0;
    if (periodic_eval) {
        bool has_valid = false;
        for (const auto& r : ds.valid) has_valid |= r.has_value();
        if (!has_valid) {
            std::cerr << "warning: no validation records; skipping periodic evaluation\n";
            periodic_eval = false;
        } else {
            valid_metrics = open_out(dir / "valid_metrics.csv");
            valid_metrics << "epoch,hr,ndcg\n";
        }
    }

    for (std::size_t epoch = 1; epoch <= cfg.hp.epochs; ++epoch) {
        EpochSummary s = model->run_epoch(ds, sampler, rng);
        train_log << epoch << ',' << std::setprecision(10) << s.mean_loss << ','
                  << s.active_fraction << ',' << std::setprecision(6) << s.elapsed_ms << '\n';
        std::cout << "epoch " << epoch << '/' << cfg.hp.epochs << " loss=" << std::setprecision(6)
                  << s.mean_loss << " active=" << s.active_fraction << '\n';

        if (periodic_eval && epoch % cfg.eval_every == 0) {
            EvalReport report =
                evaluate(*model, ds, model->hyper_params(), Split::valid, eval_type);
            valid_metrics << epoch << ',' << std::setprecision(10) << report.hr_at_k << ','
                          << report.ndcg_at_k << '\n';
        }
    }

    fs::path ckpt = dir / "checkpoint.bin";
    save_checkpoint(model->parameters(), model->hyper_params(), ckpt.string());
    std::cout << "wrote " << ckpt.string() << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
    InteractionLog log = load_log(cfg, /*allow_collapse=*/true);
    Dataset ds = leave_one_out_split(log);
    auto model = model_from_checkpoint(cfg, ds);
    TypeIndex eval_type = resolve_eval_type(cfg, ds);

    EvalReport report =
        evaluate(*model, ds, model->hyper_params(), split_from_config(cfg), eval_type);

    const std::string& type_name = ds.type_names[eval_type];
    fs::path dir = ensure_out_dir(cfg);
    fs::path csv = dir / ("eval_" + cfg.split + "_" + type_name + ".csv");
    fs::path summary = dir / ("eval_" + cfg.split + "_" + type_name + "_summary.json");
    {
        auto out = open_out(csv);
        out << std::setprecision(10);
        write_report_csv(report, out);
    }
    write_summary_json(summary, cfg, report, type_name);

    std::cout << "split=" << cfg.split << " type=" << type_name << " hr@" << report.k << "="
              << std::setprecision(6) << report.hr_at_k << " ndcg@" << report.k << "="
              << report.ndcg_at_k << " evaluated=" << report.users_evaluated
              << " skipped=" << report.users_skipped << "\n";
    std::cout << "wrote " << csv.string() << "\n";
    return 0;
}

int cmd_margin_grid(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    if (cfg.grid.empty()) throw ConfigError("missing --grid");
    if (cfg.model != ModelKind::mrmn && cfg.model != ModelKind::lrml)
        throw ConfigError("margin-grid applies to the memory models (mrmn, lrml)");

    InteractionLog log = load_log(cfg, /*allow_collapse=*/true);
    Dataset ds = leave_one_out_split(log);
    auto grid = parse_margin_grid(cfg.grid, ds.type_names.size());
    TypeIndex eval_type = resolve_eval_type(cfg, ds);
    Split split = split_from_config(cfg);

    fs::path dir = ensure_out_dir(cfg);
    auto out = open_out(dir / "margin_grid.csv");
    out << "margins,hr@" << cfg.hp.k << ",ndcg@" << cfg.hp.k << "\n";

    for (const auto& row : grid) {
        RunConfig run = cfg;
        run.hp.margins.clear();
        for (std::size_t t = 0; t < row.size(); ++t) run.hp.margins[ds.type_names[t]] = row[t];
        validate(run.hp, ds);

        auto model = make_model(run.model, ds, run.hp);  // same seed for every setting
        UniformNegativeSampler sampler;
        Rng rng(derive_seed(run.hp.seed, seed_stream::train));
        for (std::size_t epoch = 0; epoch < run.hp.epochs; ++epoch)
            model->run_epoch(ds, sampler, rng);

        EvalReport report = evaluate(*model, ds, model->hyper_params(), split, eval_type);

        std::string joined;
        for (std::size_t t = 0; t < row.size(); ++t) {
            if (t) joined += ';';
            std::ostringstream v;
            v << row[t];
            joined += v.str();
        }
        out << joined << ',' << std::setprecision(10) << report.hr_at_k << ','
            << report.ndcg_at_k << '\n';
        std::cout << "margins [" << joined << "] hr@" << report.k << "=" << std::setprecision(6)
                  << report.hr_at_k << " ndcg@" << report.k << "=" << report.ndcg_at_k << "\n";
    }
    std::cout << "wrote " << (dir / "margin_grid.csv").string() << "\n";
    return 0;
}

int cmd_export_attention(const RunConfig& cfg) {
    InteractionLog log = load_log(cfg, /*allow_collapse=*/true);
    Dataset ds = leave_one_out_split(log);
    auto model = model_from_checkpoint(cfg, ds);
    const ModelParameters& params = model->parameters();
    if (params.slot_count() == 0)
        throw ConfigError("attention export requires a memory model checkpoint (mrmn or lrml)");

    auto rows =
        mean_attention_profiles(params, ds, cfg.attention_samples, cfg.hp.seed);

    fs::path dir = ensure_out_dir(cfg);
    fs::path path = dir / "attention.csv";
    auto out = open_out(path);
    out << "type";
    for (std::size_t s = 0; s < params.slot_count(); ++s) out << ",slot_" << s;
    out << '\n';
    out << std::setprecision(12);
    for (TypeIndex t = 0; t < rows.size(); ++t) {
        if (rows[t].empty()) {
            std::cerr << "warning: feedback type '" << ds.type_names[t]
                      << "' has no train pairs; row omitted\n";
            continue;
        }
        out << ds.type_names[t];
        for (double w : rows[t]) out << ',' << w;
        out << '\n';
    }
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-relational metric learning recommender"};
    app.require_subcommand(1);

    Flags f_ingest, f_train, f_eval, f_grid, f_attn;

    CLI::App* ingest = app.add_subcommand("ingest", "parse, filter, split, write canonical data");
    add_common(ingest, f_ingest);
    option(ingest, f_ingest, "--min-user", "min-user", "drop users with fewer interactions");
    option(ingest, f_ingest, "--min-item", "min-item", "drop items with fewer interactions");

    CLI::App* train = app.add_subcommand("train", "train a model, write checkpoint + log");
    add_common(train, f_train);
    add_hyper(train, f_train);
    option(train, f_train, "--min-user", "min-user", "drop users with fewer interactions");
    option(train, f_train, "--min-item", "min-item", "drop items with fewer interactions");
    option(train, f_train, "--eval-every", "eval-every",
           "evaluate the valid split every E epochs (0 = never)");

    CLI::App* eval = app.add_subcommand("evaluate", "rank held-out items from a checkpoint");
    add_common(eval, f_eval);
    option(eval, f_eval, "--checkpoint", "checkpoint", "checkpoint file");
    option(eval, f_eval, "--split", "split", "valid or test (default test)");
    option(eval, f_eval, "--min-user", "min-user", "drop users with fewer interactions");
    option(eval, f_eval, "--min-item", "min-item", "drop items with fewer interactions");

    CLI::App* grid = app.add_subcommand("margin-grid",
                                        "train/evaluate one run per margin setting");
    add_common(grid, f_grid);
    add_hyper(grid, f_grid);
    option(grid, f_grid, "--grid", "grid",
           "margin settings 'a,b;c,d', values in dataset type order");
    option(grid, f_grid, "--split", "split", "valid or test (default test)");
    option(grid, f_grid, "--min-user", "min-user", "drop users with fewer interactions");
    option(grid, f_grid, "--min-item", "min-item", "drop items with fewer interactions");

    CLI::App* attn = app.add_subcommand("export-attention",
                                        "mean attention weights per feedback type");
    add_common(attn, f_attn);
    option(attn, f_attn, "--checkpoint", "checkpoint", "checkpoint file");
    option(attn, f_attn, "--samples", "attention-samples", "train pairs sampled per type");
    option(attn, f_attn, "--min-user", "min-user", "drop users with fewer interactions");
    option(attn, f_attn, "--min-item", "min-item", "drop items with fewer interactions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad flags are config errors
    }

    try {
        if (ingest->parsed()) return cmd_ingest(make_config(f_ingest));
        if (train->parsed()) return cmd_train(make_config(f_train));
        if (eval->parsed()) return cmd_evaluate(make_config(f_eval));
        if (grid->parsed()) return cmd_margin_grid(make_config(f_grid));
        if (attn->parsed()) return cmd_export_attention(make_config(f_attn));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 2;
}
