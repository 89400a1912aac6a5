#include <filesystem>
#include <fstream>

#include "afford/report.hpp"
#include "afford/train.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
namespace train = afford::train;

namespace {

// tiny everything: a handful of steps, just exercising the pipeline
train::RunConfig smoke_config(const std::string& out) {
    train::RunConfig cfg;
    cfg.model.image_size = 32;
    cfg.model.patch_size = 8;
    cfg.model.encoder_dim = 16;
    cfg.model.encoder_layers = 1;
    cfg.model.projection_dim = 8;
    cfg.model.lm_dim = 32;
    cfg.model.lm_layers = 1;
    cfg.model.vocab_size = 128;
    cfg.model.map_size = 16;
    cfg.model.seed = 3;
    cfg.dataset.n_train = 8;
    cfg.dataset.n_heldout_seen = 4;
    cfg.dataset.n_heldout_unseen = 4;
    cfg.optimizer.steps = 3;
    cfg.optimizer.batch_size = 2;
    cfg.optimizer.learning_rate = 1e-3;
    cfg.optimizer.seed = 11;
    cfg.eval.max_forced_check = 4;
    cfg.eval.max_eval_samples = 4;
    cfg.eval.panel_samples = 3;
    cfg.output_dir = out;
    return cfg;
}

}  // namespace

TEST_CASE("run config JSON round-trip and defaults") {
    const train::RunConfig defaults;
    CHECK(defaults.optimizer.learning_rate == 2e-5);
    CHECK(defaults.optimizer.batch_size == 4);
    CHECK(defaults.loss_weights.lambda_text == 0.01);

    const auto cfg = smoke_config("x");
    const auto round = train::run_config_from_json(train::run_config_to_json(cfg));
    CHECK(round.model.image_size == 32);
    CHECK(round.optimizer.steps == 3);
    CHECK(round.dataset.n_train == 8);
    CHECK(round.output_dir == "x");

    CHECK_THROWS_AS(train::run_config_from_json("{nope"), std::invalid_argument);
}

TEST_CASE("deviations from documented defaults are reported") {
    train::RunConfig cfg;
    CHECK(train::config_deviations(cfg).empty());
    cfg.optimizer.learning_rate = 3e-4;
    cfg.loss_weights.lambda_text = 0.5;
    const auto dev = train::config_deviations(cfg);
    REQUIRE(dev.size() == 2);
    CHECK(dev[0].first == "optimizer.learning_rate");
    CHECK(dev[1].first == "losses.lambda_text");
}

TEST_CASE("validation rejects a missing dataset root before training") {
    train::RunConfig cfg = smoke_config("never_used");
    cfg.dataset.kind = "agd20k";
    cfg.dataset.root = "/no/such/root";
    CHECK_THROWS_AS(train::train_run(cfg), std::invalid_argument);
    CHECK(!fs::exists("never_used"));  // no side effects on validation failure
}

TEST_CASE("train smoke run: artifacts, determinism, reload") {
    const fs::path out = fs::temp_directory_path() / "afford_train_smoke";
    fs::remove_all(out);
    auto cfg = smoke_config((out / "a").string());
    const auto s1 = train::train_run(cfg);
    CHECK(s1.steps_run == 3);
    CHECK(fs::exists(s1.checkpoint_path));
    CHECK(fs::exists(s1.manifest_path));
    CHECK(fs::exists(out / "a" / "train_log.jsonl"));
    CHECK(fs::exists(out / "a" / "report.json"));
    CHECK(s1.reports.count("heldout_seen") == 1);
    CHECK(s1.reports.count("heldout_unseen") == 1);

    // seed-fixed rerun reproduces the step-0 loss
    cfg.output_dir = (out / "b").string();
    const auto s2 = train::train_run(cfg);
    CHECK(s2.step0_total == doctest::Approx(s1.step0_total).epsilon(1e-6));

    // reload and predict
    const auto lm = train::load_model(s1.checkpoint_path);
    CHECK(lm.config.image_size == 32);
    CHECK(lm.trained_steps == 3);
    afford::ImageRGB img(32, 32, 0.3f);
    afford::ImageGray depth(32, 32, 0.6f);
    const auto pred = train::predict_sample(lm, img, depth, "mallet", "hold", "p0");
    CHECK(pred.map.height() == 16);
    CHECK(pred.map.width() == 16);

    // report renders from the run dir
    CHECK_NOTHROW(afford::report::write_run_report(out / "a"));
    CHECK(fs::exists(out / "a" / "report.md"));
    CHECK(fs::exists(out / "a" / "loss_curve.png"));
    int panels = 0;
    for (const auto& e : fs::directory_iterator(out / "a" / "panels"))
        panels += e.path().filename().string().find("_panel.png") != std::string::npos;
    CHECK(panels >= 3);

    // comparison layout
    CHECK_NOTHROW(afford::report::write_run_report(out / "a", out / "b"));

    // incomplete run dir errors listing what is missing
    fs::remove(out / "b" / "report.json");
    CHECK_THROWS_WITH_AS(afford::report::write_run_report(out / "b"),
                         doctest::Contains("report.json"), std::runtime_error);
    fs::remove_all(out);
}
