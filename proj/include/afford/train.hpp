#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>

#include "afford/data.hpp"
#include "afford/losses.hpp"
#include "afford/metrics.hpp"
#include "afford/model.hpp"
#include "afford/tokenizer.hpp"

namespace afford::train {

struct DatasetConfig {
    std::string kind = "synthetic";  // synthetic | agd20k

    // synthetic
    int n_train = 96;
    int n_heldout_seen = 24;
    int n_heldout_unseen = 24;
    std::vector<std::string> archetypes = {"mallet", "stool", "pitcher"};
    std::vector<std::string> holdout_archetypes = {"plank", "orb"};
    unsigned long long seed = 7;

    // agd20k
    std::string root;
    std::string split = "easy";  // easy | hard | path to a split file
};

struct OptimizerConfig {
    double learning_rate = 2e-5;
    int batch_size = 4;
    int steps = 400;
    int warmup_steps = 50;
    double grad_clip = 1.0;
    unsigned long long seed = 1;
};

struct EvalConfig {
    bool enabled = true;
    int max_eval_samples = 64;
    int max_forced_check = 128;  // train samples probed for unforced emission
    bool nss_binarize = false;
    int panel_samples = 6;
};

struct RunConfig {
    model::ModelConfig model;
    losses::LossWeights loss_weights;
    data::PromptVariant prompt_variant = data::PromptVariant::Full;
    DatasetConfig dataset;
    OptimizerConfig optimizer;
    EvalConfig eval;
    std::string output_dir = "run";
    // reserved for forward compatibility; accepted and echoed, never read
    std::string parallel_json = "{}";

    void validate() const;
};

RunConfig run_config_from_json(const std::string& json_text);
std::string run_config_to_json(const RunConfig& cfg);

/// Paper-stated defaults that deviations are reported against.
std::vector<std::pair<std::string, std::string>> config_deviations(const RunConfig& cfg);

struct TrainSummary {
    double step0_l_aff = 0.0, step0_l_text = 0.0, step0_total = 0.0;
    double final_l_aff = 0.0, final_l_text = 0.0, final_total = 0.0;
    int steps_run = 0;
    int forced_checked = 0, forced_count = 0;
    double forced_rate = 0.0;
    std::map<std::string, metrics::MetricReport> reports;  // set name -> report
    double wall_seconds = 0.0;
    std::filesystem::path checkpoint_path;
    std::filesystem::path manifest_path;
};

/// Full training pipeline: validates inputs, trains, writes
/// checkpoint.afck, train_log.jsonl, manifest.json, eval report JSON/tables
/// and panel images under output_dir. Aborts with a diagnostic naming the
/// batch samples when a loss turns non-finite.
TrainSummary train_run(const RunConfig& cfg, std::ostream* progress = nullptr);

/// A trained model plus everything needed to run it.
struct LoadedModel {
    model::ModelConfig config;
    losses::LossWeights loss_weights;
    data::PromptVariant prompt_variant = data::PromptVariant::Full;
    data::Tokenizer tokenizer;
    std::unique_ptr<model::AffordanceModel<float>> net;
    long long trained_steps = 0;
};

LoadedModel load_model(const std::filesystem::path& checkpoint_path);

struct Prediction {
    std::string sample_id;
    DenseMap map;
    std::string text;
    bool forced = false;
};

Prediction predict_sample(const LoadedModel& lm, const ImageRGB& image,
                          const std::optional<ImageGray>& depth, const std::string& object_name,
                          const std::string& action_name, const std::string& sample_id);

unsigned long long fnv1a64(const std::string& s);

}  // namespace afford::train
