// disco: build the semantic knowledge base, generate the synthetic benchmark,
// train, evaluate, and export pattern vectors.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "disco/checkpoint.hpp"
#include "disco/csv.hpp"
#include "disco/eval.hpp"
#include "disco/model.hpp"
#include "disco/semkb.hpp"
#include "disco/synth.hpp"
#include "disco/training.hpp"

namespace disco {
namespace {

std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::runtime_error("invalid value for " + key + ": expected true|false");
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos <= s.size()) {
        const size_t comma = s.find(',', pos);
        const std::string piece =
            comma == std::string::npos ? s.substr(pos) : s.substr(pos, comma - pos);
        if (!piece.empty()) out.push_back(piece);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

// Data paths resolvable from the config file as well as from flags.
struct DataPaths {
    std::string interactions, items, kb;
};

// key=value config lines ("#" comments). Flags override file values.
void apply_config_file(const std::string& path, TrainConfig& tc, DataPaths& paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "d") tc.dim = std::stoi(value);
        else if (key == "K") tc.window = std::stoi(value);
        else if (key == "alpha") tc.alpha = std::stod(value);
        else if (key == "beta") tc.beta = std::stod(value);
        else if (key == "learning_rate") tc.learning_rate = std::stod(value);
        else if (key == "weight_decay") tc.weight_decay = std::stod(value);
        else if (key == "batch_size") tc.batch_size = std::stoi(value);
        else if (key == "estimator_steps_per_iter")
            tc.estimator_steps_per_iter = std::stoi(value);
        else if (key == "estimator_per_epoch") tc.estimator_per_epoch = parse_bool(key, value);
        else if (key == "estimator_lr") tc.estimator_lr = std::stod(value);
        else if (key == "patience") tc.patience = std::stoi(value);
        else if (key == "max_epochs") tc.max_epochs = std::stoi(value);
        else if (key == "seed") tc.seed = std::stoull(value);
        else if (key == "backbone") tc.backbone = backbone_kind_from_string(value);
        else if (key == "use_ptt") tc.flags.tt = parse_bool(key, value);
        else if (key == "use_pss") tc.flags.ss = parse_bool(key, value);
        else if (key == "use_pts") tc.flags.ts = parse_bool(key, value);
        else if (key == "use_pst") tc.flags.st = parse_bool(key, value);
        else if (key == "use_sufficiency") tc.use_sufficiency = parse_bool(key, value);
        else if (key == "use_disentanglement") tc.use_disentanglement = parse_bool(key, value);
        else if (key == "tabular_fields") tc.tabular_fields = split_commas(value);
        else if (key == "kb_zero_fallback") tc.kb_zero_fallback = parse_bool(key, value);
        else if (key == "interactions") paths.interactions = value;
        else if (key == "items") paths.items = value;
        else if (key == "kb") paths.kb = value;
        else throw std::runtime_error("unknown config key: " + key);
    }
}

void echo_config(const TrainConfig& tc) {
    std::printf("d=%d\n", tc.dim);
    std::printf("K=%d\n", tc.window);
    std::printf("alpha=%g\n", tc.alpha);
    std::printf("beta=%g\n", tc.beta);
    std::printf("learning_rate=%g\n", tc.learning_rate);
    std::printf("weight_decay=%g\n", tc.weight_decay);
    std::printf("batch_size=%d\n", tc.batch_size);
    std::printf("estimator_steps_per_iter=%d\n", tc.estimator_steps_per_iter);
    std::printf("estimator_per_epoch=%s\n", tc.estimator_per_epoch ? "true" : "false");
    std::printf("estimator_lr=%g\n", tc.estimator_lr);
    std::printf("patience=%d\n", tc.patience);
    std::printf("max_epochs=%d\n", tc.max_epochs);
    std::printf("seed=%llu\n", static_cast<unsigned long long>(tc.seed));
    std::printf("backbone=%s\n", to_string(tc.backbone).c_str());
    std::printf("use_ptt=%s\n", tc.flags.tt ? "true" : "false");
    std::printf("use_pss=%s\n", tc.flags.ss ? "true" : "false");
    std::printf("use_pts=%s\n", tc.flags.ts ? "true" : "false");
    std::printf("use_pst=%s\n", tc.flags.st ? "true" : "false");
    std::printf("use_sufficiency=%s\n", tc.use_sufficiency ? "true" : "false");
    std::printf("use_disentanglement=%s\n", tc.use_disentanglement ? "true" : "false");
    std::string fields;
    for (const auto& f : tc.tabular_fields) fields += (fields.empty() ? "" : ",") + f;
    std::printf("tabular_fields=%s\n", fields.empty() ? "(all)" : fields.c_str());
    std::printf("kb_zero_fallback=%s\n", tc.kb_zero_fallback ? "true" : "false");
    std::fflush(stdout);
}

// Flag values shared by train/eval/export-patterns; optional so the config
// file fills whatever the command line leaves unset.
struct CommonFlags {
    std::string config_file;
    DataPaths paths;
    std::optional<double> alpha, beta, learning_rate, weight_decay, estimator_lr;
    std::optional<int> dim, window, batch_size, patience, max_epochs, estimator_steps;
    std::optional<uint64_t> seed;
    std::optional<std::string> backbone, tabular_fields;
    std::optional<bool> use_suf, use_dis;
    std::optional<bool> use_ptt, use_pss, use_pts, use_pst;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "key=value config file");
        cmd->add_option("--interactions", paths.interactions, "interactions csv");
        cmd->add_option("--items", paths.items, "items csv");
        cmd->add_option("--kb", paths.kb, "knowledge base file");
        cmd->add_option("--d", dim, "embedding size (even)");
        cmd->add_option("--k", window, "behavior window length");
        cmd->add_option("--alpha", alpha, "sufficiency loss coefficient");
        cmd->add_option("--beta", beta, "disentanglement loss coefficient");
        cmd->add_option("--lr", learning_rate, "learning rate");
        cmd->add_option("--weight-decay", weight_decay, "decoupled weight decay");
        cmd->add_option("--batch-size", batch_size, "batch size");
        cmd->add_option("--estimator-steps", estimator_steps,
                        "estimator fit steps per iteration");
        cmd->add_option("--estimator-lr", estimator_lr, "estimator learning rate");
        cmd->add_option("--patience", patience, "early stop patience");
        cmd->add_option("--max-epochs", max_epochs, "epoch cap");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--backbone", backbone, "dnn | din");
        cmd->add_option("--tabular-fields", tabular_fields,
                        "comma list of item fields to embed (default: all)");
        cmd->add_option("--use-ptt", use_ptt, "enable P_TT");
        cmd->add_option("--use-pss", use_pss, "enable P_SS");
        cmd->add_option("--use-pts", use_pts, "enable P_TS");
        cmd->add_option("--use-pst", use_pst, "enable P_ST");
        cmd->add_option("--use-sufficiency", use_suf, "enable the sufficiency constraint");
        cmd->add_option("--use-disentanglement", use_dis,
                        "enable the disentanglement constraint");
    }

    TrainConfig resolve() const {
        TrainConfig tc;
        DataPaths file_paths;
        if (!config_file.empty()) apply_config_file(config_file, tc, file_paths);
        DataPaths merged = paths;
        if (merged.interactions.empty()) merged.interactions = file_paths.interactions;
        if (merged.items.empty()) merged.items = file_paths.items;
        if (merged.kb.empty()) merged.kb = file_paths.kb;
        const_cast<CommonFlags*>(this)->paths = merged;

        if (dim) tc.dim = *dim;
        if (window) tc.window = *window;
        if (alpha) tc.alpha = *alpha;
        if (beta) tc.beta = *beta;
        if (learning_rate) tc.learning_rate = *learning_rate;
        if (weight_decay) tc.weight_decay = *weight_decay;
        if (batch_size) tc.batch_size = *batch_size;
        if (estimator_steps) tc.estimator_steps_per_iter = *estimator_steps;
        if (estimator_lr) tc.estimator_lr = *estimator_lr;
        if (patience) tc.patience = *patience;
        if (max_epochs) tc.max_epochs = *max_epochs;
        if (seed) tc.seed = *seed;
        if (backbone) tc.backbone = backbone_kind_from_string(*backbone);
        if (tabular_fields) tc.tabular_fields = split_commas(*tabular_fields);
        if (use_ptt) tc.flags.tt = *use_ptt;
        if (use_pss) tc.flags.ss = *use_pss;
        if (use_pts) tc.flags.ts = *use_pts;
        if (use_pst) tc.flags.st = *use_pst;
        if (use_suf) tc.use_sufficiency = *use_suf;
        if (use_dis) tc.use_disentanglement = *use_dis;
        tc.validate();
        return tc;
    }
};

// Everything train/eval/export share: data, windows, split, vocab, model.
struct Pipeline {
    Catalog catalog;
    SplitResult split;
    Vocab vocab;
    FieldSchema schema;
    std::optional<KnowledgeBase> kb;
    std::optional<DiscoModel> model;

    Pipeline(const TrainConfig& tc, const DataPaths& paths) {
        if (paths.interactions.empty())
            throw std::runtime_error("missing --interactions (or interactions= in config)");
        if (paths.items.empty())
            throw std::runtime_error("missing --items (or items= in config)");
        catalog = read_items_csv(paths.items);
        const std::vector<Interaction> log = read_interactions_csv(paths.interactions);
        split = temporal_split(build_windows(log, tc.window));

        schema.item_fields = {"item_id"};
        if (tc.tabular_fields.empty()) {
            for (const auto& [name, value] : catalog.items.front().fields)
                schema.item_fields.push_back(name);
        } else {
            schema.item_fields = tc.tabular_fields;
        }
        vocab = build_vocab(split.train, schema, catalog);

        if (tc.flags.semantic_needed()) {
            if (paths.kb.empty())
                throw std::runtime_error("missing --kb (or kb= in config): semantic "
                                         "patterns need a knowledge base");
            kb.emplace(KnowledgeBase::load(paths.kb));
            if (tc.kb_zero_fallback) kb->set_zero_fallback(true);
        }
        model.emplace(tc.model_config(), vocab, schema, catalog, kb ? &*kb : nullptr);
    }

    const std::vector<SampleWindow>& split_by_name(const std::string& name) const {
        if (name == "train") return split.train;
        if (name == "valid") return split.valid;
        if (name == "test") return split.test;
        throw std::runtime_error("unknown split: " + name + " (expected train|valid|test)");
    }
};

int cmd_build_kb(const std::string& items_path, const std::string& encoder,
                 const std::string& embeddings, int dim, uint64_t seed,
                 const std::string& noun, const std::string& out,
                 const std::string& tsv_out) {
    std::printf("items=%s\nencoder=%s\ndim=%d\nseed=%llu\nnoun=%s\nout=%s\n",
                items_path.c_str(), encoder.c_str(), dim,
                static_cast<unsigned long long>(seed), noun.c_str(), out.c_str());
    const Catalog catalog = read_items_csv(items_path);
    std::unique_ptr<TextEncoder> enc;
    if (encoder == "stub") {
        enc = std::make_unique<StubEncoder>(dim, seed);
    } else if (encoder == "file") {
        if (embeddings.empty())
            throw std::runtime_error("--encoder file requires --embeddings");
        enc = std::make_unique<FileEncoder>(embeddings);
    } else {
        throw std::runtime_error("unknown encoder: " + encoder + " (expected stub|file)");
    }
    const KnowledgeBase kb = build_kb(catalog.items, *enc, noun);
    kb.save(out);
    if (!tsv_out.empty()) kb.save_tsv(tsv_out);
    std::printf("wrote %zu entries of dim %d to %s\n", kb.size(), kb.dim(), out.c_str());
    return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
    SynthSpec spec;
    if (!spec_path.empty()) spec = parse_synth_spec(spec_path);
    std::printf("n_users=%d\nn_items=%d\nn_tab_classes=%d\nn_sem_classes=%d\n"
                "events_per_user=%d\nw_tab=%g\nw_sem=%g\nbias=%g\ntokens_per_class=%d\n"
                "tokens_per_item=%d\nshared_tokens=%d\nshared_per_item=%d\nseed=%llu\n",
                spec.n_users, spec.n_items, spec.n_tab_classes, spec.n_sem_classes,
                spec.events_per_user, spec.w_tab, spec.w_sem, spec.bias,
                spec.tokens_per_class, spec.tokens_per_item, spec.shared_tokens,
                spec.shared_per_item, static_cast<unsigned long long>(spec.seed));
    const SynthData data = synth_generate(spec);
    synth_write(data, out_dir);
    std::printf("wrote %zu interactions over %d items to %s\n", data.log.size(),
                spec.n_items, out_dir.c_str());
    return 0;
}

int cmd_train(const CommonFlags& flags, const std::string& out, const std::string& log_path) {
    const TrainConfig tc = flags.resolve();
    echo_config(tc);
    Pipeline pipe(tc, flags.paths);
    Trainer trainer(*pipe.model, tc);

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) throw std::runtime_error("cannot write training log: " + log_path);
    }
    const Trainer::FitResult result =
        trainer.fit(pipe.split.train, pipe.split.valid, log.is_open() ? &log : nullptr);
    save_checkpoint(pipe.model->named_params(), out);
    std::printf("best_epoch=%d best_valid_auc=%.6f epochs_run=%d\n", result.best_epoch,
                result.best_auc, result.epochs_run);
    std::printf("wrote checkpoint to %s\n", out.c_str());
    return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& ckpt, const std::string& split_name,
             bool long_tail, const std::string& report_path) {
    const TrainConfig tc = flags.resolve();
    echo_config(tc);
    Pipeline pipe(tc, flags.paths);
    load_checkpoint(pipe.model->named_params(), ckpt);

    const std::vector<SampleWindow>& samples = pipe.split_by_name(split_name);
    EvalReport report = evaluate(*pipe.model, samples);
    if (long_tail) {
        const auto freq = item_frequencies(pipe.split.train);
        const auto idx = long_tail_slice(samples, freq);
        std::vector<SampleWindow> tail;
        for (const size_t i : idx) tail.push_back(samples[i]);
        if (!tail.empty()) report.slices.emplace_back("long_tail", evaluate(*pipe.model, tail));
    }
    write_report(std::cout, report);
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw std::runtime_error("cannot write report: " + report_path);
        write_report(out, report);
    }
    return 0;
}

int cmd_export_patterns(const CommonFlags& flags, const std::string& ckpt,
                        const std::string& split_name, const std::string& out) {
    const TrainConfig tc = flags.resolve();
    echo_config(tc);
    Pipeline pipe(tc, flags.paths);
    load_checkpoint(pipe.model->named_params(), ckpt);
    const std::vector<SampleWindow>& samples = pipe.split_by_name(split_name);
    export_patterns(*pipe.model, samples, out);
    std::printf("wrote %zu pattern rows to %s\n", samples.size(), out.c_str());
    return 0;
}

}  // namespace
}  // namespace disco

int main(int argc, char** argv) {
    CLI::App app{"DisCo: disentangled tabular/semantic collaboration for CTR prediction"};
    app.require_subcommand(1);

    // build-kb
    auto* kb_cmd = app.add_subcommand("build-kb", "encode a catalog into a knowledge base");
    std::string kb_items, kb_encoder = "stub", kb_embeddings, kb_noun = "item", kb_out,
                kb_tsv_out;
    int kb_dim = 256;
    uint64_t kb_seed = 1;
    kb_cmd->add_option("--items", kb_items, "items csv")->required();
    kb_cmd->add_option("--encoder", kb_encoder, "stub | file");
    kb_cmd->add_option("--embeddings", kb_embeddings, "precomputed embedding tsv");
    kb_cmd->add_option("--dim", kb_dim, "stub embedding dimension");
    kb_cmd->add_option("--seed", kb_seed, "stub hash seed");
    kb_cmd->add_option("--noun", kb_noun, "category noun for the prompt template");
    kb_cmd->add_option("--out", kb_out, "output kb file")->required();
    kb_cmd->add_option("--tsv-out", kb_tsv_out, "also write the debug tsv export");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic benchmark");
    std::string synth_spec, synth_out_dir;
    synth_cmd->add_option("--spec", synth_spec, "key=value synth spec file");
    synth_cmd->add_option("--out-dir", synth_out_dir, "output directory")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model");
    disco::CommonFlags train_flags;
    train_flags.add_to(train_cmd);
    std::string train_out, train_log;
    train_cmd->add_option("--out", train_out, "checkpoint output path")->required();
    train_cmd->add_option("--log", train_log, "training log tsv");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    disco::CommonFlags eval_flags;
    eval_flags.add_to(eval_cmd);
    std::string eval_ckpt, eval_split = "test", eval_report;
    bool eval_long_tail = false;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
    eval_cmd->add_option("--split", eval_split, "train | valid | test");
    eval_cmd->add_flag("--long-tail", eval_long_tail, "add the long-tail item slice");
    eval_cmd->add_option("--report", eval_report, "also write the report to a file");

    // export-patterns
    auto* export_cmd = app.add_subcommand("export-patterns",
                                          "dump DS-Attn outputs for visualization");
    disco::CommonFlags export_flags;
    export_flags.add_to(export_cmd);
    std::string export_ckpt, export_split = "test", export_out;
    export_cmd->add_option("--checkpoint", export_ckpt, "checkpoint path")->required();
    export_cmd->add_option("--split", export_split, "train | valid | test");
    export_cmd->add_option("--out", export_out, "output tsv")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (kb_cmd->parsed())
            return disco::cmd_build_kb(kb_items, kb_encoder, kb_embeddings, kb_dim, kb_seed,
                                       kb_noun, kb_out, kb_tsv_out);
        if (synth_cmd->parsed()) return disco::cmd_synth(synth_spec, synth_out_dir);
        if (train_cmd->parsed()) return disco::cmd_train(train_flags, train_out, train_log);
        if (eval_cmd->parsed())
            return disco::cmd_eval(eval_flags, eval_ckpt, eval_split, eval_long_tail,
                                   eval_report);
        if (export_cmd->parsed())
            return disco::cmd_export_patterns(export_flags, export_ckpt, export_split,
                                              export_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
