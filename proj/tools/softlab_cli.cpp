// Command-line surface for the soft-vs-hard-label pipeline: dataset
// generation, annotation simulation, training, evaluation, embedding, and
// the multi-seed experiment driver.

#include <array>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "softlab/experiment.hpp"
#include "softlab/labelkit.hpp"
#include "softlab/metrics.hpp"
#include "softlab/model_io.hpp"
#include "softlab/nnet.hpp"
#include "softlab/report.hpp"
#include "softlab/synthgen.hpp"
#include "softlab/train.hpp"
#include "softlab/tsne.hpp"

namespace {

// Plain-JSON config files mirroring flag names (e.g. {"count": 6000}).
// Precedence stays CLI flags > config file > defaults.
class ConfigJson : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json j;
        input >> j;
        std::vector<CLI::ConfigItem> out;
        if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
        for (auto it = j.begin(); it != j.end(); ++it) {
            CLI::ConfigItem item;
            item.name = it.key();
            const auto& v = it.value();
            if (v.is_array())
                for (const auto& e : v) item.inputs.push_back(scalar(e));
            else
                item.inputs.push_back(scalar(v));
            out.push_back(item);
        }
        return out;
    }

private:
    static std::string scalar(const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        return v.dump();
    }
};

softlab::SplitTag parse_split(const std::string& s) {
    if (s == "train") return softlab::SplitTag::train;
    if (s == "val") return softlab::SplitTag::val;
    if (s == "test") return softlab::SplitTag::test;
    throw softlab::validation_error("unknown split: " + s);
}

std::array<double, 3> parse_fractions(const std::string& s) {
    std::array<double, 3> f{};
    std::stringstream ss(s);
    std::string tok;
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(ss, tok, ','))
            throw softlab::validation_error("split fractions need three values");
        f[static_cast<std::size_t>(i)] = std::stod(tok);
    }
    return f;
}

void add_config_flag(CLI::App& cmd) {
    cmd.set_config("--config", "", "JSON config file mirroring flag names");
    cmd.config_formatter(std::make_shared<ConfigJson>());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"soft vs hard label laboratory"};
    app.require_subcommand(1);

    // ---- generate ----
    auto* gen = app.add_subcommand("generate", "generate a synthetic dataset");
    std::string gen_out = "dataset.sld";
    softlab::DatasetManifest manifest;
    std::string gen_split = "0.6,0.2,0.2";
    int gen_size = 32;
    gen->add_option("--out", gen_out, "output dataset path");
    gen->add_option("--count", manifest.count, "number of samples");
    gen->add_option("--seed", manifest.seed, "generation seed");
    gen->add_option("--pure-frac", manifest.pure_fraction, "fraction of pure samples");
    gen->add_option("--split", gen_split, "train,val,test fractions");
    gen->add_option("--size", gen_size, "square image size");
    add_config_flag(*gen);

    // ---- annotate ----
    auto* ann = app.add_subcommand("annotate", "simulate human annotations");
    std::string ann_dataset, ann_out = "annotations.csv";
    int ann_n = 15;
    std::uint64_t ann_seed = 0;
    double ann_flip = 0.0;
    ann->add_option("--dataset", ann_dataset, "SLD1 dataset path")->required();
    ann->add_option("--annotators", ann_n, "annotations per item");
    ann->add_option("--seed", ann_seed, "simulation seed");
    ann->add_option("--flip-rate", ann_flip, "uniform annotation flip rate");
    ann->add_option("--out", ann_out, "output annotation table");
    add_config_flag(*ann);

    // ---- train ----
    auto* tr = app.add_subcommand("train", "train a classifier");
    std::string tr_dataset, tr_labels = "gt-soft", tr_out = "model.slm", tr_log;
    softlab::TrainConfig tcfg;
    int tr_restart = 0;
    tr->add_option("--dataset", tr_dataset, "SLD1 dataset path")->required();
    tr->add_option("--labels", tr_labels, "gt-soft|gt-hard|sim-soft|sim-hard");
    tr->add_option("--annotators", tcfg.annotators, "annotators for sim-* modes");
    tr->add_option("--epochs", tcfg.epochs, "training epochs");
    tr->add_option("--batch", tcfg.batch_size, "batch size");
    tr->add_option("--lr", tcfg.base_lr, "base learning rate");
    tr->add_option("--wd", tcfg.weight_decay, "weight decay");
    tr->add_option("--momentum", tcfg.momentum, "SGD momentum");
    tr->add_option("--warm-restart-epochs", tr_restart,
                   "cosine warm-restart period in epochs (0 = plain cosine)");
    tr->add_option("--seed", tcfg.seed, "training seed");
    tr->add_option("--out", tr_out, "output model path");
    tr->add_option("--log", tr_log, "training log path (default <out>.log.csv)");
    add_config_flag(*tr);

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "evaluate a model on a split");
    std::string ev_model, ev_dataset, ev_split = "test", ev_out = "evals.csv",
                ev_run_id = "run";
    std::uint64_t ev_seed = 0;
    ev->add_option("--model", ev_model, "SLM1 model path")->required();
    ev->add_option("--dataset", ev_dataset, "SLD1 dataset path")->required();
    ev->add_option("--split", ev_split, "train|val|test");
    ev->add_option("--out", ev_out, "eval table to append to");
    ev->add_option("--run-id", ev_run_id, "row identifier");
    ev->add_option("--seed", ev_seed, "seed recorded in the row");
    add_config_flag(*ev);

    // ---- embed ----
    auto* em = app.add_subcommand("embed", "T-SNE of GAP features");
    std::string em_model, em_dataset, em_split = "test",
                em_csv = "embedding.csv", em_svg = "embedding.svg";
    int em_sample = 1000;
    softlab::TsneConfig tsne_cfg;
    em->add_option("--model", em_model, "SLM1 model path")->required();
    em->add_option("--dataset", em_dataset, "SLD1 dataset path")->required();
    em->add_option("--split", em_split, "train|val|test");
    em->add_option("--sample", em_sample, "subsample size");
    em->add_option("--perplexity", tsne_cfg.perplexity, "T-SNE perplexity");
    em->add_option("--iters", tsne_cfg.iterations, "T-SNE iterations");
    em->add_option("--seed", tsne_cfg.seed, "T-SNE seed");
    em->add_option("--out-csv", em_csv, "embedding table path");
    em->add_option("--out-svg", em_svg, "scatter SVG path");
    add_config_flag(*em);

    // ---- experiment ----
    auto* ex = app.add_subcommand("experiment",
                                  "multi-seed hard-vs-soft comparison");
    std::string ex_out = "experiment_out", ex_modes = "gt-soft,gt-hard",
                ex_split = "0.6,0.2,0.2";
    softlab::ExperimentSpec spec;
    int ex_size = 32;
    ex->add_option("--out-dir", ex_out, "output directory");
    ex->add_option("--count", spec.manifest.count, "dataset sample count");
    ex->add_option("--dataset-seed", spec.manifest.seed, "dataset seed");
    ex->add_option("--pure-frac", spec.manifest.pure_fraction, "pure fraction");
    ex->add_option("--split", ex_split, "train,val,test fractions");
    ex->add_option("--size", ex_size, "square image size");
    ex->add_option("--modes", ex_modes, "comma list of label modes");
    ex->add_option("--seeds", spec.n_seeds, "number of experiment seeds");
    ex->add_option("--seed", spec.train_template.seed, "base training seed");
    ex->add_option("--epochs", spec.train_template.epochs, "epochs per run");
    ex->add_option("--batch", spec.train_template.batch_size, "batch size");
    ex->add_option("--lr", spec.train_template.base_lr, "base learning rate");
    ex->add_option("--wd", spec.train_template.weight_decay, "weight decay");
    ex->add_option("--annotators", spec.train_template.annotators,
                   "annotators for sim-* modes");
    add_config_flag(*ex);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            manifest.split_fractions = parse_fractions(gen_split);
            manifest.image_height = manifest.image_width = gen_size;
            auto ds = softlab::generate_dataset(manifest);
            softlab::write_dataset(gen_out, ds);
            std::printf("wrote %d samples to %s\n", manifest.count, gen_out.c_str());
        } else if (*ann) {
            auto ds = softlab::read_dataset(ann_dataset);
            std::vector<softlab::AnnotationSet> sets;
            sets.reserve(ds.samples.size());
            for (std::size_t i = 0; i < ds.samples.size(); ++i)
                sets.push_back(softlab::simulate_annotations(
                    ds.samples[i].soft_label, ann_n,
                    softlab::hash_combine(softlab::hash_combine(ann_seed, 0xA770u), i),
                    ann_flip));
            softlab::write_annotation_table(ann_out, sets);
            std::printf("wrote %zu annotation sets to %s\n", sets.size(),
                        ann_out.c_str());
        } else if (*tr) {
            tcfg.target_mode = softlab::parse_target_mode(tr_labels);
            if (tr_restart > 0) {
                tcfg.warm_restarts = true;
                tcfg.restart_period_epochs = tr_restart;
            }
            auto ds = softlab::read_dataset(tr_dataset);
            auto result = softlab::train(ds, tcfg);
            softlab::save_model(tr_out, result.net);
            softlab::write_train_log(tr_log.empty() ? tr_out + ".log.csv" : tr_log,
                                     result.log);
            std::printf("trained %s, final val macro acc %.4f\n", tr_labels.c_str(),
                        result.log.back().val_macro_acc);
        } else if (*ev) {
            auto net = softlab::load_model(ev_model);
            auto ds = softlab::read_dataset(ev_dataset);
            if (net.num_classes() != softlab::kNumClasses)
                throw softlab::validation_error("class-count mismatch");
            if (net.in_h != ds.manifest.image_height ||
                net.in_w != ds.manifest.image_width)
                throw softlab::validation_error("image-size mismatch");
            auto idx = softlab::split_indices(ds, parse_split(ev_split));
            if (idx.empty())
                throw softlab::validation_error("split has no items: " + ev_split);
            auto truth = softlab::ground_truth_labels(ds, idx);
            auto preds = softlab::predict(net, ds, idx);
            auto report = softlab::evaluate(preds, truth);
            softlab::append_eval_row(ev_out, ev_run_id, ev_seed, ev_split, report);
            std::printf("macro_acc=%.4f mean_kl=%.4f ece=%.4f n=%d\n",
                        report.macro_acc, report.mean_kl, report.ece,
                        report.n_items);
        } else if (*em) {
            auto net = softlab::load_model(em_model);
            auto ds = softlab::read_dataset(em_dataset);
            auto idx = softlab::split_indices(ds, parse_split(em_split));
            if (idx.empty())
                throw softlab::validation_error("split has no items: " + em_split);
            if (em_sample > static_cast<int>(idx.size())) {
                std::fprintf(stderr,
                             "warning: sample %d exceeds split size %zu, clamping\n",
                             em_sample, idx.size());
                em_sample = static_cast<int>(idx.size());
            }
            auto perm = softlab::detail::seeded_permutation(
                softlab::hash_combine(tsne_cfg.seed, 0x5A3Bu),
                static_cast<int>(idx.size()));
            std::vector<int> chosen;
            chosen.reserve(static_cast<std::size_t>(em_sample));
            for (int i = 0; i < em_sample; ++i)
                chosen.push_back(idx[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
            auto features = softlab::extract_embeddings(net, ds, chosen);
            auto emb = softlab::tsne(features, tsne_cfg);
            auto truth = softlab::ground_truth_labels(ds, chosen);
            softlab::write_embedding_table(em_csv, chosen, emb.points, truth);
            softlab::write_scatter_svg(em_svg, emb.points, truth);
            std::printf("embedded %d points, final KL %.4f\n", em_sample,
                        emb.objective_trace.back());
        } else if (*ex) {
            spec.manifest.split_fractions = parse_fractions(ex_split);
            spec.manifest.image_height = spec.manifest.image_width = ex_size;
            spec.modes.clear();
            std::stringstream ss(ex_modes);
            std::string tok;
            while (std::getline(ss, tok, ','))
                spec.modes.push_back(softlab::parse_target_mode(tok));
            spec.out_dir = ex_out;
            auto result = softlab::run_experiment(spec);
            for (const auto& row : result.table)
                std::printf("%s: acc %.4f +- %.4f, kl %.4f +- %.4f, ece %.4f +- %.4f\n",
                            softlab::target_mode_name(row.mode).c_str(),
                            row.acc_mean, row.acc_std, row.kl_mean, row.kl_std,
                            row.ece_mean, row.ece_std);
            for (const auto& v : result.verdicts) std::printf("%s\n", v.c_str());
        }
    } catch (const softlab::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
