#include "afford/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include "afford/checkpoint.hpp"
#include "afford/image_io.hpp"
#include "json.hpp"

namespace afford::train {

using nlohmann::json;

unsigned long long fnv1a64(const std::string& s) {
    unsigned long long h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void RunConfig::validate() const {
    model.validate();
    loss_weights.validate();
    if (optimizer.learning_rate <= 0.0) throw std::invalid_argument("optimizer.learning_rate <= 0");
    if (optimizer.batch_size < 1) throw std::invalid_argument("optimizer.batch_size < 1");
    if (optimizer.steps < 1) throw std::invalid_argument("optimizer.steps < 1");
    if (dataset.kind != "synthetic" && dataset.kind != "agd20k")
        throw std::invalid_argument("dataset.kind must be synthetic or agd20k");
    if (dataset.kind == "synthetic") {
        if (dataset.n_train < 1) throw std::invalid_argument("dataset.n_train < 1");
        for (const auto& a : dataset.archetypes) data::synthetic_actions_for(a);
        for (const auto& a : dataset.holdout_archetypes) data::synthetic_actions_for(a);
    } else {
        if (dataset.root.empty()) throw std::invalid_argument("dataset.root required for agd20k");
        if (!std::filesystem::is_directory(dataset.root))
            throw std::invalid_argument("dataset.root does not exist: " + dataset.root);
    }
    if (output_dir.empty()) throw std::invalid_argument("output_dir required");
}

namespace {

json model_config_to_json(const model::ModelConfig& m) {
    return json{{"image_size", m.image_size},
                {"patch_size", m.patch_size},
                {"encoder_dim", m.encoder_dim},
                {"encoder_layers", m.encoder_layers},
                {"projection_dim", m.projection_dim},
                {"group_factor", m.group_factor},
                {"lm_dim", m.lm_dim},
                {"lm_layers", m.lm_layers},
                {"vocab_size", m.vocab_size},
                {"map_size", m.map_size},
                {"max_text_len", m.max_text_len},
                {"use_depth", m.use_depth},
                {"seed", m.seed}};
}

model::ModelConfig model_config_from_json(const json& j) {
    model::ModelConfig m;
    m.image_size = j.value("image_size", m.image_size);
    m.patch_size = j.value("patch_size", m.patch_size);
    m.encoder_dim = j.value("encoder_dim", m.encoder_dim);
    m.encoder_layers = j.value("encoder_layers", m.encoder_layers);
    m.projection_dim = j.value("projection_dim", m.projection_dim);
    m.group_factor = j.value("group_factor", m.group_factor);
    m.lm_dim = j.value("lm_dim", m.lm_dim);
    m.lm_layers = j.value("lm_layers", m.lm_layers);
    m.vocab_size = j.value("vocab_size", m.vocab_size);
    m.map_size = j.value("map_size", m.map_size);
    m.max_text_len = j.value("max_text_len", m.max_text_len);
    m.use_depth = j.value("use_depth", m.use_depth);
    m.seed = j.value("seed", m.seed);
    return m;
}

json losses_to_json(const losses::LossWeights& w) {
    return json{{"alpha_pos", w.alpha_pos},     {"alpha_neg", w.alpha_neg},
                {"gamma", w.gamma},             {"lambda_text", w.lambda_text},
                {"hard_target", w.hard_target}, {"hard_threshold", w.hard_threshold}};
}

losses::LossWeights losses_from_json(const json& j) {
    losses::LossWeights w;
    w.alpha_pos = j.value("alpha_pos", w.alpha_pos);
    w.alpha_neg = j.value("alpha_neg", w.alpha_neg);
    w.gamma = j.value("gamma", w.gamma);
    w.lambda_text = j.value("lambda_text", w.lambda_text);
    w.hard_target = j.value("hard_target", w.hard_target);
    w.hard_threshold = j.value("hard_threshold", w.hard_threshold);
    return w;
}

}  // namespace

RunConfig run_config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    RunConfig cfg;
    if (j.contains("model")) cfg.model = model_config_from_json(j["model"]);
    if (j.contains("losses")) cfg.loss_weights = losses_from_json(j["losses"]);
    cfg.prompt_variant =
        data::prompt_variant_from_string(j.value("prompt_variant", std::string("full")));
    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        cfg.dataset.kind = d.value("kind", cfg.dataset.kind);
        cfg.dataset.n_train = d.value("n_train", cfg.dataset.n_train);
        cfg.dataset.n_heldout_seen = d.value("n_heldout_seen", cfg.dataset.n_heldout_seen);
        cfg.dataset.n_heldout_unseen = d.value("n_heldout_unseen", cfg.dataset.n_heldout_unseen);
        if (d.contains("archetypes"))
            cfg.dataset.archetypes = d["archetypes"].get<std::vector<std::string>>();
        if (d.contains("holdout_archetypes"))
            cfg.dataset.holdout_archetypes =
                d["holdout_archetypes"].get<std::vector<std::string>>();
        cfg.dataset.seed = d.value("seed", cfg.dataset.seed);
        cfg.dataset.root = d.value("root", cfg.dataset.root);
        cfg.dataset.split = d.value("split", cfg.dataset.split);
    }
    if (j.contains("optimizer")) {
        const json& o = j["optimizer"];
        cfg.optimizer.learning_rate = o.value("learning_rate", cfg.optimizer.learning_rate);
        cfg.optimizer.batch_size = o.value("batch_size", cfg.optimizer.batch_size);
        cfg.optimizer.steps = o.value("steps", cfg.optimizer.steps);
        cfg.optimizer.warmup_steps = o.value("warmup_steps", cfg.optimizer.warmup_steps);
        cfg.optimizer.grad_clip = o.value("grad_clip", cfg.optimizer.grad_clip);
        cfg.optimizer.seed = o.value("seed", cfg.optimizer.seed);
    }
    if (j.contains("eval")) {
        const json& e = j["eval"];
        cfg.eval.enabled = e.value("enabled", cfg.eval.enabled);
        cfg.eval.max_eval_samples = e.value("max_eval_samples", cfg.eval.max_eval_samples);
        cfg.eval.max_forced_check = e.value("max_forced_check", cfg.eval.max_forced_check);
        cfg.eval.nss_binarize = e.value("nss_binarize", cfg.eval.nss_binarize);
        cfg.eval.panel_samples = e.value("panel_samples", cfg.eval.panel_samples);
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    if (j.contains("parallel")) cfg.parallel_json = j["parallel"].dump();
    return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["model"] = model_config_to_json(cfg.model);
    j["losses"] = losses_to_json(cfg.loss_weights);
    j["prompt_variant"] = data::prompt_variant_to_string(cfg.prompt_variant);
    j["dataset"] = {{"kind", cfg.dataset.kind},
                    {"n_train", cfg.dataset.n_train},
                    {"n_heldout_seen", cfg.dataset.n_heldout_seen},
                    {"n_heldout_unseen", cfg.dataset.n_heldout_unseen},
                    {"archetypes", cfg.dataset.archetypes},
                    {"holdout_archetypes", cfg.dataset.holdout_archetypes},
                    {"seed", cfg.dataset.seed},
                    {"root", cfg.dataset.root},
                    {"split", cfg.dataset.split}};
    j["optimizer"] = {{"learning_rate", cfg.optimizer.learning_rate},
                      {"batch_size", cfg.optimizer.batch_size},
                      {"steps", cfg.optimizer.steps},
                      {"warmup_steps", cfg.optimizer.warmup_steps},
                      {"grad_clip", cfg.optimizer.grad_clip},
                      {"seed", cfg.optimizer.seed}};
    j["eval"] = {{"enabled", cfg.eval.enabled},
                 {"max_eval_samples", cfg.eval.max_eval_samples},
                 {"max_forced_check", cfg.eval.max_forced_check},
                 {"nss_binarize", cfg.eval.nss_binarize},
                 {"panel_samples", cfg.eval.panel_samples}};
    j["output_dir"] = cfg.output_dir;
    j["parallel"] = json::parse(cfg.parallel_json);
    return j.dump(2);
}

std::vector<std::pair<std::string, std::string>> config_deviations(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> dev;
    auto note = [&](const std::string& field, double value, double documented) {
        if (value != documented)
            dev.emplace_back(field, "value " + std::to_string(value) + " (documented default " +
                                        std::to_string(documented) + ")");
    };
    note("optimizer.learning_rate", cfg.optimizer.learning_rate, 2e-5);
    note("optimizer.batch_size", cfg.optimizer.batch_size, 4);
    note("losses.lambda_text", cfg.loss_weights.lambda_text, 0.01);
    note("losses.alpha_pos", cfg.loss_weights.alpha_pos, 0.95);
    note("losses.alpha_neg", cfg.loss_weights.alpha_neg, 0.05);
    return dev;
}

namespace {

struct TrainItem {
    const data::Sample* sample;
    std::vector<int> text_ids;      // bos + prompt + answer + eos
    std::vector<int> targets;       // next-token target per position (last unused)
    std::vector<bool> ignore;       // true where not scored
    DenseMap gt_small;              // GT resized to map_size for the loss
    std::vector<int> prompt_ids;    // without bos/eos
};

struct Corpus {
    std::vector<data::Sample> train, heldout_seen, heldout_unseen;
};

Corpus build_corpus(const RunConfig& cfg) {
    Corpus c;
    if (cfg.dataset.kind == "synthetic") {
        data::SyntheticConfig sc;
        sc.image_size = cfg.model.image_size;
        sc.with_depth = cfg.model.use_depth;
        sc.archetypes = cfg.dataset.archetypes;
        sc.n_samples = cfg.dataset.n_train;
        sc.seed = cfg.dataset.seed;
        c.train = data::generate_synthetic(sc);
        if (cfg.dataset.n_heldout_seen > 0) {
            sc.n_samples = cfg.dataset.n_heldout_seen;
            sc.seed = cfg.dataset.seed + 1000;
            c.heldout_seen = data::generate_synthetic(sc);
            for (auto& s : c.heldout_seen) s.sample_id = "seen_" + s.sample_id;
        }
        if (cfg.dataset.n_heldout_unseen > 0 && !cfg.dataset.holdout_archetypes.empty()) {
            sc.archetypes = cfg.dataset.holdout_archetypes;
            sc.n_samples = cfg.dataset.n_heldout_unseen;
            sc.seed = cfg.dataset.seed + 2000;
            c.heldout_unseen = data::generate_synthetic(sc);
            for (auto& s : c.heldout_unseen) s.sample_id = "unseen_" + s.sample_id;
        }
        for (auto& s : c.heldout_seen) s.split_role = data::SplitRole::Test;
        for (auto& s : c.heldout_unseen) s.split_role = data::SplitRole::Test;
    } else {
        splits::SplitSpec spec;
        if (cfg.dataset.split == "easy")
            spec = splits::load_canonical_splits().first;
        else if (cfg.dataset.split == "hard")
            spec = splits::load_canonical_splits().second;
        else
            spec = splits::load_split_file(cfg.dataset.split);
        c.train = data::load_agd20k(cfg.dataset.root, spec, data::SplitRole::Train,
                                    cfg.model.use_depth);
        c.heldout_unseen = data::load_agd20k(cfg.dataset.root, spec, data::SplitRole::Test,
                                             cfg.model.use_depth);
        if (c.train.empty()) throw std::runtime_error("agd20k: no training samples under root");
    }
    return c;
}

data::Tokenizer build_tokenizer(const RunConfig& cfg, const Corpus& corpus) {
    std::vector<std::string> texts = data::synthetic_text_corpus();
    auto add_sample_text = [&](const data::Sample& s) {
        for (auto v : {data::PromptVariant::Hi, data::PromptVariant::Action,
                       data::PromptVariant::ObjectAction, data::PromptVariant::Full})
            texts.push_back(data::build_prompt(s.object_name, s.action_name, v));
    };
    for (const auto& s : corpus.train) add_sample_text(s);
    for (const auto& s : corpus.heldout_seen) add_sample_text(s);
    for (const auto& s : corpus.heldout_unseen) add_sample_text(s);
    texts.push_back(data::target_answer_template());
    return data::Tokenizer::build(texts, cfg.model.vocab_size);
}

TrainItem make_item(const data::Sample& s, const data::Tokenizer& tok, const RunConfig& cfg) {
    TrainItem item;
    item.sample = &s;
    const std::string prompt =
        data::build_prompt(s.object_name, s.action_name, cfg.prompt_variant);
    item.prompt_ids = tok.encode(prompt, /*add_bos_eos=*/false);
    const std::vector<int> answer_ids =
        tok.encode(data::target_answer_template(), /*add_bos_eos=*/false);

    item.text_ids.push_back(data::kBos);
    item.text_ids.insert(item.text_ids.end(), item.prompt_ids.begin(), item.prompt_ids.end());
    const int answer_start = static_cast<int>(item.text_ids.size());
    item.text_ids.insert(item.text_ids.end(), answer_ids.begin(), answer_ids.end());
    item.text_ids.push_back(data::kEos);

    const int n = static_cast<int>(item.text_ids.size());
    item.targets.assign(n, data::kPad);
    item.ignore.assign(n, true);
    for (int p = 0; p + 1 < n; ++p) {
        if (p + 1 >= answer_start) {  // positions predicting answer tokens + eos
            item.targets[p] = item.text_ids[p + 1];
            item.ignore[p] = false;
        }
    }
    item.gt_small = resize_bilinear(s.gt_map, cfg.model.map_size, cfg.model.map_size);
    double mx = item.gt_small.max_value();
    if (mx > 1.0)
        for (std::size_t i = 0; i < item.gt_small.size(); ++i) item.gt_small[i] /= mx;
    return item;
}

struct Adam {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long long t = 0;

    void step(ag::ParamStore<float>& store, double lr) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (int i = 0; i < store.count(); ++i) {
            auto& p = store.at(i);
            if (p.adam_m.size() != p.value.size()) {
                p.adam_m = ag::Tensor2<float>(p.value.rows, p.value.cols);
                p.adam_v = ag::Tensor2<float>(p.value.rows, p.value.cols);
            }
            for (std::size_t j = 0; j < p.value.size(); ++j) {
                const double g = p.grad.v[j];
                const double m = p.adam_m.v[j] = static_cast<float>(beta1 * p.adam_m.v[j] +
                                                                    (1.0 - beta1) * g);
                const double v = p.adam_v.v[j] = static_cast<float>(beta2 * p.adam_v.v[j] +
                                                                    (1.0 - beta2) * g * g);
                p.value.v[j] -= static_cast<float>(lr * (m / bc1) /
                                                   (std::sqrt(v / bc2) + eps));
            }
        }
    }
};

double global_grad_norm(ag::ParamStore<float>& store) {
    double acc = 0.0;
    for (int i = 0; i < store.count(); ++i)
        for (float g : store.at(i).grad.v) acc += static_cast<double>(g) * g;
    return std::sqrt(acc);
}

void scale_grads(ag::ParamStore<float>& store, double s) {
    for (int i = 0; i < store.count(); ++i)
        for (float& g : store.at(i).grad.v) g = static_cast<float>(g * s);
}

struct LossPair {
    double l_aff = 0.0, l_text = 0.0, total = 0.0;
};

// One sample's contribution: builds the graph, returns losses, and (when
// training) backpropagates total/batch_size into the parameter grads.
LossPair run_sample(model::AffordanceModel<float>& net, const TrainItem& item,
                    const losses::LossWeights& w, int batch_size, bool do_backward) {
    ag::Tape<float> tape(&net.params());
    std::optional<ImageGray> depth;
    if (net.config().use_depth) depth = item.sample->depth;
    auto out = net.forward(tape, item.sample->image, depth, item.text_ids);

    // focal loss on the sigmoid map vs the resized GT
    const auto& map_t = tape.value(out.map);
    DenseMap pred(net.config().map_size, net.config().map_size);
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = map_t.v[i];
    const double l_aff_v = losses::focal_affordance_loss(pred, item.gt_small, w);
    const auto aff_grad = losses::focal_affordance_loss_grad(pred, item.gt_small, w);
    std::vector<float> gaff(aff_grad.begin(), aff_grad.end());
    ag::Var l_aff = tape.custom_scalar(out.map, l_aff_v, std::move(gaff));

    // text cross-entropy at scored positions
    const auto& logit_t = tape.value(out.text_logits);
    std::vector<std::vector<double>> logits(logit_t.rows);
    for (int r = 0; r < logit_t.rows; ++r)
        logits[r].assign(logit_t.row(r), logit_t.row(r) + logit_t.cols);
    const double l_text_v = losses::text_loss(logits, item.targets, item.ignore);
    const auto text_grad = losses::text_loss_grad(logits, item.targets, item.ignore);
    std::vector<float> gtext;
    gtext.reserve(logit_t.size());
    for (const auto& row : text_grad)
        for (double g : row) gtext.push_back(static_cast<float>(g));
    ag::Var l_text = tape.custom_scalar(out.text_logits, l_text_v, std::move(gtext));

    ag::Var total = tape.axpy_scalar(l_aff, l_text, w.lambda_text);
    LossPair lp{l_aff_v, l_text_v, losses::total_loss(l_aff_v, l_text_v, w)};
    if (do_backward) {
        ag::Var scaled = tape.scale(total, 1.0 / batch_size);
        tape.backward(scaled);
    }
    return lp;
}

json report_set_to_json(const std::map<std::string, metrics::MetricReport>& reports) {
    json j = json::object();
    for (const auto& [name, rep] : reports) j[name] = json::parse(metrics::report_to_json(rep));
    return j;
}

}  // namespace

TrainSummary train_run(const RunConfig& cfg, std::ostream* progress) {
    const auto t_start = std::chrono::steady_clock::now();
    cfg.validate();  // full validation before any side effect

    Corpus corpus = build_corpus(cfg);
    data::Tokenizer tokenizer = build_tokenizer(cfg, corpus);

    std::vector<TrainItem> items;
    items.reserve(corpus.train.size());
    for (const auto& s : corpus.train) {
        if (s.gt_map.sum() <= 0.0)
            throw std::runtime_error("training sample with degenerate GT: " + s.sample_id);
        items.push_back(make_item(s, tokenizer, cfg));
    }

    const std::filesystem::path out_dir(cfg.output_dir);
    std::filesystem::create_directories(out_dir);
    std::ofstream log(out_dir / "train_log.jsonl");
    if (!log) throw std::runtime_error("cannot write " + (out_dir / "train_log.jsonl").string());

    model::AffordanceModel<float> net(cfg.model);
    Adam adam;
    TrainSummary summary;

    std::mt19937_64 order_rng(cfg.optimizer.seed);
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t cursor = order.size();  // forces an initial shuffle

    for (int step = 0; step < cfg.optimizer.steps; ++step) {
        net.params().zero_grad();
        LossPair batch{};
        std::vector<std::string> batch_ids;
        for (int b = 0; b < cfg.optimizer.batch_size; ++b) {
            if (cursor >= order.size()) {
                for (std::size_t i = order.size() - 1; i > 0; --i)
                    std::swap(order[i], order[order_rng() % (i + 1)]);
                cursor = 0;
            }
            const TrainItem& item = items[order[cursor++]];
            batch_ids.push_back(item.sample->sample_id);
            const LossPair lp =
                run_sample(net, item, cfg.loss_weights, cfg.optimizer.batch_size, true);
            batch.l_aff += lp.l_aff;
            batch.l_text += lp.l_text;
            batch.total += lp.total;
        }
        batch.l_aff /= cfg.optimizer.batch_size;
        batch.l_text /= cfg.optimizer.batch_size;
        batch.total /= cfg.optimizer.batch_size;

        if (!std::isfinite(batch.total)) {
            json diag{{"step", step}, {"batch", batch_ids}, {"l_aff", batch.l_aff},
                      {"l_text", batch.l_text}};
            throw std::runtime_error("non-finite loss; offending batch: " + diag.dump());
        }

        if (cfg.optimizer.grad_clip > 0.0) {
            const double norm = global_grad_norm(net.params());
            if (norm > cfg.optimizer.grad_clip) scale_grads(net.params(), cfg.optimizer.grad_clip / norm);
        }
        const double warm =
            cfg.optimizer.warmup_steps > 0
                ? std::min(1.0, (step + 1.0) / cfg.optimizer.warmup_steps)
                : 1.0;
        adam.step(net.params(), cfg.optimizer.learning_rate * warm);

        log << json{{"step", step}, {"l_aff", batch.l_aff}, {"l_text", batch.l_text},
                    {"total", batch.total}}
                   .dump()
            << "\n";
        if (step == 0) {
            summary.step0_l_aff = batch.l_aff;
            summary.step0_l_text = batch.l_text;
            summary.step0_total = batch.total;
        }
        summary.final_l_aff = batch.l_aff;
        summary.final_l_text = batch.l_text;
        summary.final_total = batch.total;
        summary.steps_run = step + 1;
        if (progress && (step % 25 == 0 || step + 1 == cfg.optimizer.steps))
            *progress << "step " << step << " l_aff " << batch.l_aff << " l_text " << batch.l_text
                      << " total " << batch.total << "\n";
    }
    log.flush();

    // persist the checkpoint before evaluation
    json ck_cfg;
    ck_cfg["model"] = model_config_to_json(cfg.model);
    ck_cfg["losses"] = losses_to_json(cfg.loss_weights);
    ck_cfg["prompt_variant"] = data::prompt_variant_to_string(cfg.prompt_variant);
    ck_cfg["tokenizer_words"] = tokenizer.words();
    ck_cfg["training_state"] = {{"steps", summary.steps_run}};
    ckpt::Checkpoint ck;
    ck.config_json = ck_cfg.dump();
    ck.blobs = ckpt::store_to_blobs(net.params());
    summary.checkpoint_path = out_dir / "checkpoint.afck";
    ckpt::save_checkpoint(ck, summary.checkpoint_path);

    // unforced mask emission over training samples
    if (cfg.eval.enabled) {
        const int n_check =
            std::min<int>(cfg.eval.max_forced_check, static_cast<int>(items.size()));
        for (int i = 0; i < n_check; ++i) {
            const TrainItem& item = items[i];
            std::optional<ImageGray> depth;
            if (cfg.model.use_depth) depth = item.sample->depth;
            auto gen = net.generate(item.sample->image, depth, item.prompt_ids, 16);
            summary.forced_checked++;
            if (gen.forced) summary.forced_count++;
        }
        summary.forced_rate =
            summary.forced_checked ? static_cast<double>(summary.forced_count) /
                                         summary.forced_checked
                                   : 0.0;

        auto eval_set = [&](const std::vector<data::Sample>& set, const std::string& name) {
            if (set.empty()) return;
            std::vector<metrics::EvalPair> pairs;
            const int n = std::min<int>(cfg.eval.max_eval_samples, static_cast<int>(set.size()));
            std::filesystem::path panel_dir = out_dir / "panels";
            std::filesystem::create_directories(panel_dir);
            int panels = 0;
            for (int i = 0; i < n; ++i) {
                const data::Sample& s = set[i];
                if (s.gt_map.sum() <= 0.0) continue;
                const std::string prompt =
                    data::build_prompt(s.object_name, s.action_name, cfg.prompt_variant);
                std::optional<ImageGray> depth;
                if (cfg.model.use_depth) depth = s.depth;
                auto gen = net.generate(s.image, depth, tokenizer.encode(prompt, false), 16);
                pairs.push_back({gen.map, s.gt_map, s.sample_id});
                if (name == "heldout_seen" && panels < cfg.eval.panel_samples) {
                    save_image_png(s.image, panel_dir / (s.sample_id + "_img.png"));
                    save_map_png(s.gt_map, panel_dir / (s.sample_id + "_gt.png"));
                    save_map_png(resize_bilinear(gen.map, s.gt_map.height(), s.gt_map.width()),
                                 panel_dir / (s.sample_id + "_pred.png"));
                    panels++;
                }
            }
            if (pairs.empty()) return;
            metrics::EvalOptions opts;
            opts.nss_binarize_gt = cfg.eval.nss_binarize;
            summary.reports[name] = metrics::evaluate_batch(std::move(pairs), opts);
        };
        eval_set(corpus.heldout_seen, "heldout_seen");
        eval_set(corpus.heldout_unseen, "heldout_unseen");

        json jrep = report_set_to_json(summary.reports);
        std::ofstream rep(out_dir / "report.json");
        rep << jrep.dump(2) << "\n";
        std::ofstream tab(out_dir / "report.txt");
        for (const auto& [name, r] : summary.reports)
            tab << metrics::report_to_table(r, name) << "\n";
    }

    summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    // machine-readable manifest
    json manifest;
    manifest["config"] = json::parse(run_config_to_json(cfg));
    manifest["config_hash"] = fnv1a64(json::parse(run_config_to_json(cfg)).dump());
    manifest["seed"] = cfg.optimizer.seed;
    if (cfg.dataset.kind == "agd20k") {
        splits::SplitSpec spec;
        if (cfg.dataset.split == "easy")
            spec = splits::load_canonical_splits().first;
        else if (cfg.dataset.split == "hard")
            spec = splits::load_canonical_splits().second;
        else
            spec = splits::load_split_file(cfg.dataset.split);
        manifest["split_hash"] = splits::split_content_hash(spec);
    }
    json jdev = json::array();
    for (const auto& [field, msg] : config_deviations(cfg))
        jdev.push_back({{"field", field}, {"note", msg}});
    manifest["deviations"] = jdev;
    manifest["losses_logged"] = losses_to_json(cfg.loss_weights);
    manifest["step0"] = {{"l_aff", summary.step0_l_aff},
                         {"l_text", summary.step0_l_text},
                         {"total", summary.step0_total}};
    manifest["final"] = {{"l_aff", summary.final_l_aff},
                         {"l_text", summary.final_l_text},
                         {"total", summary.final_total}};
    manifest["steps_run"] = summary.steps_run;
    manifest["forced_token"] = {{"checked", summary.forced_checked},
                                {"forced", summary.forced_count},
                                {"rate", summary.forced_rate}};
    manifest["wall_seconds"] = summary.wall_seconds;
    manifest["artifacts"] = {{"checkpoint", "checkpoint.afck"},
                             {"train_log", "train_log.jsonl"},
                             {"report", "report.json"}};
    summary.manifest_path = out_dir / "manifest.json";
    std::ofstream mf(summary.manifest_path);
    mf << manifest.dump(2) << "\n";
    return summary;
}

LoadedModel load_model(const std::filesystem::path& checkpoint_path) {
    ckpt::Checkpoint ck = ckpt::load_checkpoint(checkpoint_path);
    json cfg;
    try {
        cfg = json::parse(ck.config_json);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("checkpoint: bad config JSON: ") + e.what());
    }
    LoadedModel lm;
    lm.config = model_config_from_json(cfg.at("model"));
    lm.loss_weights = losses_from_json(cfg.value("losses", json::object()));
    lm.prompt_variant =
        data::prompt_variant_from_string(cfg.value("prompt_variant", std::string("full")));
    lm.tokenizer =
        data::Tokenizer::from_words(cfg.at("tokenizer_words").get<std::vector<std::string>>());
    lm.trained_steps = cfg.value("training_state", json::object()).value("steps", 0);
    lm.net = std::make_unique<model::AffordanceModel<float>>(lm.config);
    ckpt::blobs_to_store(ck.blobs, lm.net->params());
    return lm;
}

Prediction predict_sample(const LoadedModel& lm, const ImageRGB& image,
                          const std::optional<ImageGray>& depth, const std::string& object_name,
                          const std::string& action_name, const std::string& sample_id) {
    ImageRGB img = resize_image(image, lm.config.image_size, lm.config.image_size);
    std::optional<ImageGray> dep;
    if (lm.config.use_depth) {
        if (!depth)
            throw std::invalid_argument("predict: model was trained with depth inputs; none given");
        dep = resize_image(*depth, lm.config.image_size, lm.config.image_size);
    }
    const std::string prompt = data::build_prompt(object_name, action_name, lm.prompt_variant);
    auto gen = lm.net->generate(img, dep, lm.tokenizer.encode(prompt, false), 16);
    Prediction p;
    p.sample_id = sample_id;
    p.map = std::move(gen.map);
    p.text = lm.tokenizer.decode(gen.tokens);
    p.forced = gen.forced;
    return p;
}

}  // namespace afford::train
