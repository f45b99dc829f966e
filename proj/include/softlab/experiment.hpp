#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "softlab/error.hpp"
#include "softlab/metrics.hpp"
#include "softlab/model_io.hpp"
#include "softlab/report.hpp"
#include "softlab/synthgen.hpp"
#include "softlab/train.hpp"

namespace softlab {

// Multi-seed hard-vs-soft comparison. Per seed, the same sample pool is
// resplit with a fresh permutation; one model per label mode is trained with
// identical everything-but-targets and evaluated on the test split.
struct ExperimentSpec {
    DatasetManifest manifest;
    TrainConfig train_template;
    std::vector<TargetMode> modes{TargetMode::gt_soft, TargetMode::gt_hard};
    int n_seeds = 3;
    std::string out_dir;

    void validate() const {
        manifest.validate();
        train_template.validate();
        if (n_seeds < 1) throw validation_error("n_seeds must be >= 1");
        if (modes.size() < 2)
            throw validation_error("need at least two label modes");
    }
};

struct ModeStats {
    TargetMode mode = TargetMode::gt_soft;
    double acc_mean = 0.0, acc_std = 0.0;
    double kl_mean = 0.0, kl_std = 0.0;
    double ece_mean = 0.0, ece_std = 0.0;
};

struct ExperimentResult {
    std::vector<ModeStats> table;
    std::vector<std::string> verdicts;
};

namespace detail {

inline void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    sd = 0.0;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
}

}  // namespace detail

inline void write_results_table(const std::string& path,
                                const std::vector<ModeStats>& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << "label_mode,macro_acc_mean,macro_acc_std,mean_kl_mean,mean_kl_std,"
           "ece_mean,ece_std\n";
    char buf[256];
    for (const auto& row : table) {
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                      target_mode_name(row.mode).c_str(), row.acc_mean,
                      row.acc_std, row.kl_mean, row.kl_std, row.ece_mean,
                      row.ece_std);
        out << buf;
    }
    if (!out) throw io_error("write failed: " + path);
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec,
                                       bool quiet = false) {
    spec.validate();
    namespace fs = std::filesystem;
    fs::create_directories(spec.out_dir);

    Dataset ds = generate_dataset(spec.manifest);
    const std::string dataset_path = spec.out_dir + "/dataset.sld";
    write_dataset(dataset_path, ds);

    const std::string evals_path = spec.out_dir + "/evals.csv";
    std::error_code ec;
    fs::remove(evals_path, ec);

    std::vector<std::vector<EvalReport>> reports(spec.modes.size());
    for (int s = 0; s < spec.n_seeds; ++s) {
        // fresh split permutation over the same sample pool
        const std::uint64_t split_seed =
            hash_combine(spec.manifest.seed,
                         hash_combine(spec.train_template.seed,
                                      static_cast<std::uint64_t>(s)));
        auto splits = assign_splits(split_seed, spec.manifest.count,
                                    spec.manifest.split_fractions);
        for (std::size_t i = 0; i < ds.samples.size(); ++i)
            ds.samples[i].split = splits[i];

        auto test_idx = split_indices(ds, SplitTag::test);
        auto test_truth = ground_truth_labels(ds, test_idx);

        for (std::size_t m = 0; m < spec.modes.size(); ++m) {
            TrainConfig cfg = spec.train_template;
            cfg.target_mode = spec.modes[m];
            cfg.seed = hash_combine(spec.train_template.seed,
                                    static_cast<std::uint64_t>(s) + 1);
            const std::string tag = "s" + std::to_string(s) + "_" +
                                    target_mode_name(spec.modes[m]);
            if (!quiet)
                std::fprintf(stderr, "[experiment] training %s\n", tag.c_str());
            TrainResult tr = train(ds, cfg);
            save_model(spec.out_dir + "/model_" + tag + ".slm", tr.net);
            write_train_log(spec.out_dir + "/train_" + tag + ".csv", tr.log);

            auto preds = predict(tr.net, ds, test_idx, cfg.batch_size);
            EvalReport report = evaluate(preds, test_truth);
            reports[m].push_back(report);
            append_eval_row(evals_path, tag, cfg.seed,
                            target_mode_name(spec.modes[m]), report);
        }
    }

    ExperimentResult result;
    for (std::size_t m = 0; m < spec.modes.size(); ++m) {
        ModeStats row;
        row.mode = spec.modes[m];
        std::vector<double> acc, kl, ece;
        for (const auto& r : reports[m]) {
            acc.push_back(r.macro_acc);
            kl.push_back(r.mean_kl);
            ece.push_back(r.ece);
        }
        detail::mean_std(acc, row.acc_mean, row.acc_std);
        detail::mean_std(kl, row.kl_mean, row.kl_std);
        detail::mean_std(ece, row.ece_mean, row.ece_std);
        result.table.push_back(row);
    }
    write_results_table(spec.out_dir + "/results.csv", result.table);

    // soft-vs-hard verdicts for the mode pairs present
    auto find_mode = [&](TargetMode m) -> const ModeStats* {
        for (const auto& row : result.table)
            if (row.mode == m) return &row;
        return nullptr;
    };
    const std::pair<TargetMode, TargetMode> pairs[] = {
        {TargetMode::gt_soft, TargetMode::gt_hard},
        {TargetMode::sim_soft, TargetMode::sim_hard},
    };
    for (const auto& [soft, hard] : pairs) {
        const ModeStats* s_row = find_mode(soft);
        const ModeStats* h_row = find_mode(hard);
        if (!s_row || !h_row) continue;
        char buf[320];
        std::snprintf(buf, sizeof(buf),
                      "verdict %s vs %s: acc_delta=%+.4f kl_ratio=%.4f "
                      "soft_better_acc=%s soft_better_kl=%s",
                      target_mode_name(soft).c_str(),
                      target_mode_name(hard).c_str(),
                      s_row->acc_mean - h_row->acc_mean,
                      h_row->kl_mean > 0.0 ? s_row->kl_mean / h_row->kl_mean : 0.0,
                      s_row->acc_mean > h_row->acc_mean ? "yes" : "no",
                      s_row->kl_mean < h_row->kl_mean ? "yes" : "no");
        result.verdicts.emplace_back(buf);
    }
    {
        std::ofstream out(spec.out_dir + "/verdict.txt", std::ios::binary);
        if (!out) throw io_error("cannot open for writing: verdict.txt");
        for (const auto& v : result.verdicts) out << v << '\n';
    }
    return result;
}

}  // namespace softlab
