// afford — train/predict/eval/split/report for the affordance-grounding
// toolkit. Exit codes: 0 ok, 2 validation failure, 1 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "afford/data.hpp"
#include "afford/image_io.hpp"
#include "afford/metrics.hpp"
#include "afford/report.hpp"
#include "afford/splits.hpp"
#include "afford/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

afford::train::RunConfig load_run_config(const std::string& config_path,
                                         const std::string& output_dir, long long seed) {
    afford::train::RunConfig cfg;
    if (!config_path.empty())
        cfg = afford::train::run_config_from_json(read_file(config_path));
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (seed >= 0) {
        cfg.optimizer.seed = static_cast<unsigned long long>(seed);
        cfg.model.seed = static_cast<unsigned long long>(seed);
    }
    return cfg;
}

int cmd_train(const std::string& config_path, const std::string& output_dir, long long seed) {
    auto cfg = load_run_config(config_path, output_dir, seed);
    auto summary = afford::train::train_run(cfg, &std::cout);
    std::cout << "checkpoint: " << summary.checkpoint_path.string() << "\n"
              << "manifest:   " << summary.manifest_path.string() << "\n"
              << "final total loss " << summary.final_total << " (step0 " << summary.step0_total
              << ")\n";
    return 0;
}

int cmd_predict(const std::string& checkpoint, const std::vector<std::string>& images,
                const std::string& images_dir, const std::string& depth_dir,
                const std::string& object_name, const std::string& action_name,
                const std::string& output_dir) {
    auto lm = afford::train::load_model(checkpoint);

    std::vector<fs::path> inputs;
    for (const auto& p : images) inputs.emplace_back(p);
    if (!images_dir.empty()) {
        if (!fs::is_directory(images_dir))
            throw std::invalid_argument("not a directory: " + images_dir);
        for (const auto& e : fs::directory_iterator(images_dir)) {
            const auto ext = e.path().extension().string();
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") inputs.push_back(e.path());
        }
        std::sort(inputs.begin(), inputs.end());
    }
    if (inputs.empty()) throw std::invalid_argument("predict: no input images");
    for (const auto& p : inputs)
        if (!fs::exists(p)) throw std::invalid_argument("missing image: " + p.string());

    fs::create_directories(output_dir);
    int forced = 0;
    for (const auto& p : inputs) {
        const std::string stem = p.stem().string();
        std::optional<afford::ImageGray> depth;
        if (lm.config.use_depth) {
            const fs::path dp = depth_dir.empty() ? p.parent_path() / (stem + "_depth.png")
                                                  : fs::path(depth_dir) / (stem + ".png");
            depth = afford::data::load_depth(dp);
        }
        auto pred = afford::train::predict_sample(lm, afford::load_image(p), depth, object_name,
                                                  action_name, stem);
        afford::save_map_png(pred.map, fs::path(output_dir) / (stem + "_pred.png"));
        afford::save_map_sidecar(pred.map, fs::path(output_dir) / (stem + "_pred.afmp"));
        if (pred.forced) forced++;
        std::cout << stem << ": \"" << pred.text << "\"" << (pred.forced ? " [forced]" : "")
                  << "\n";
    }
    json stats{{"inputs", inputs.size()},
               {"forced", forced},
               {"forced_rate", static_cast<double>(forced) / inputs.size()}};
    std::ofstream st(fs::path(output_dir) / "generation_stats.json");
    st << stats.dump(2) << "\n";
    return 0;
}

std::map<std::string, fs::path> index_maps(const fs::path& dir) {
    std::map<std::string, fs::path> out;
    if (!fs::is_directory(dir)) throw std::invalid_argument("not a directory: " + dir.string());
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto ext = e.path().extension().string();
        if (ext != ".png" && ext != ".afmp") continue;
        std::string stem = e.path().stem().string();
        // prediction outputs carry a _pred suffix; strip for matching
        const std::string suffix = "_pred";
        if (stem.size() > suffix.size() &&
            stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0)
            stem = stem.substr(0, stem.size() - suffix.size());
        // prefer the lossless sidecar when both formats exist
        if (!out.count(stem) || ext == ".afmp") out[stem] = e.path();
    }
    return out;
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir,
             const std::string& output_dir, double eps, bool nss_binarize, int workers) {
    const auto preds = index_maps(pred_dir);
    const auto gts = index_maps(gt_dir);
    if (preds.empty()) throw std::invalid_argument("eval: no prediction maps in " + pred_dir);
    if (gts.empty()) throw std::invalid_argument("eval: no GT maps in " + gt_dir);

    std::vector<std::string> unmatched;
    for (const auto& [id, _] : preds)
        if (!gts.count(id)) unmatched.push_back("prediction without GT: " + id);
    for (const auto& [id, _] : gts)
        if (!preds.count(id)) unmatched.push_back("GT without prediction: " + id);
    if (!unmatched.empty()) {
        std::string msg = "eval: unmatched sample ids:";
        for (const auto& u : unmatched) msg += "\n  " + u;
        throw std::invalid_argument(msg);
    }

    std::vector<afford::metrics::EvalPair> pairs;
    for (const auto& [id, pred_path] : preds)
        pairs.push_back({afford::load_map_any(pred_path), afford::load_map_any(gts.at(id)), id});

    afford::metrics::EvalOptions opts;
    opts.eps = eps;
    opts.nss_binarize_gt = nss_binarize;
    opts.workers = workers;
    const auto report = afford::metrics::evaluate_batch(std::move(pairs), opts);

    fs::create_directories(output_dir);
    std::ofstream jf(fs::path(output_dir) / "report.json");
    jf << afford::metrics::report_to_json(report) << "\n";
    const std::string table = afford::metrics::report_to_table(report, "evaluation");
    std::ofstream tf(fs::path(output_dir) / "report.txt");
    tf << table;
    std::cout << table;
    return 0;
}

afford::splits::SplitSpec resolve_split(const std::string& name_or_path) {
    if (name_or_path == "easy") return afford::splits::load_canonical_splits().first;
    if (name_or_path == "hard") return afford::splits::load_canonical_splits().second;
    return afford::splits::load_split_file(name_or_path);
}

int cmd_split_score(const std::string& split_arg, const std::string& embeddings) {
    const auto split = resolve_split(split_arg);
    const auto table = afford::splits::load_embedding_table(embeddings);
    const double d = afford::splits::split_difficulty(split, table);
    std::cout << "split " << split.name << ": difficulty " << std::fixed << std::setprecision(3)
              << d << "  (train " << split.train_classes.size() << ", test "
              << split.test_classes.size() << ")\n";
    return 0;
}

int cmd_split_build(const std::string& classes_file, double test_fraction, long long seed,
                    const std::string& output) {
    std::set<std::string> classes;
    std::ifstream in(classes_file);
    if (!in) throw std::invalid_argument("cannot open class list: " + classes_file);
    std::string line;
    while (std::getline(in, line)) {
        const auto norm = afford::splits::normalize_class_name(line);
        if (!norm.empty()) classes.insert(norm);
    }
    const auto spec = afford::splits::build_random_split(
        classes, test_fraction, static_cast<unsigned long long>(seed < 0 ? 0 : seed));
    afford::splits::save_split_file(spec, output);
    std::cout << "wrote " << output << " (" << spec.train_classes.size() << " train / "
              << spec.test_classes.size() << " test)\n";
    return 0;
}

int cmd_split_show(const std::string& split_arg) {
    const auto split = resolve_split(split_arg);
    std::cout << "split " << split.name << ": " << split.train_classes.size() << " train / "
              << split.test_classes.size() << " test classes\n[train]\n";
    for (const auto& c : split.train_classes) std::cout << "  " << c << "\n";
    std::cout << "[test]\n";
    for (const auto& c : split.test_classes) std::cout << "  " << c << "\n";
    return 0;
}

int cmd_report(const std::string& run_dir, const std::string& compare) {
    std::optional<fs::path> cmp;
    if (!compare.empty()) cmp = fs::path(compare);
    afford::report::write_run_report(run_dir, cmp);
    std::cout << "wrote " << (fs::path(run_dir) / "report.md").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"affordance grounding toolkit"};
    app.require_subcommand(1);

    std::string config_path, output_dir;
    long long seed = -1;

    auto* train = app.add_subcommand("train", "train a model from a run config");
    train->add_option("--config", config_path, "run config JSON");
    train->add_option("--output-dir", output_dir, "output directory (overrides config)");
    train->add_option("--seed", seed, "seed override");

    std::string checkpoint, images_dir, depth_dir, object_name, action_name;
    std::vector<std::string> images;
    auto* predict = app.add_subcommand("predict", "predict affordance maps");
    predict->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    predict->add_option("--image", images, "input image (repeatable)");
    predict->add_option("--images-dir", images_dir, "directory of input images");
    predict->add_option("--depth-dir", depth_dir, "directory of depth PNGs (stem-matched)");
    predict->add_option("--object", object_name, "object name for the prompt");
    predict->add_option("--action", action_name, "action name for the prompt")->required();
    predict->add_option("--output-dir", output_dir, "output directory")->required();

    std::string pred_dir, gt_dir;
    double eps = afford::metrics::kDefaultEps;
    bool nss_binarize = false;
    int workers = 1;
    auto* eval = app.add_subcommand("eval", "score prediction maps against GT maps");
    eval->add_option("--pred-dir", pred_dir)->required();
    eval->add_option("--gt-dir", gt_dir)->required();
    eval->add_option("--output-dir", output_dir)->required();
    eval->add_option("--eps", eps, "KLD epsilon");
    eval->add_flag("--nss-binarize", nss_binarize, "binarize GT weights for NSS");
    eval->add_option("--workers", workers, "worker threads (deterministic merge)");

    auto* split = app.add_subcommand("split", "split scoring and construction");
    split->require_subcommand(1);
    std::string split_arg = "easy", embeddings, classes_file, split_out = "split.txt";
    double test_fraction = 0.5;
    auto* score = split->add_subcommand("score", "difficulty score of a split");
    score->add_option("split", split_arg, "easy | hard | split file")->required();
    score->add_option("--embeddings", embeddings, "embedding table TSV")->required();
    auto* build = split->add_subcommand("build", "seeded random split");
    build->add_option("--classes", classes_file, "class list, one per line")->required();
    build->add_option("--test-fraction", test_fraction);
    build->add_option("--seed", seed);
    build->add_option("--output", split_out);
    auto* show = split->add_subcommand("show", "print a split");
    show->add_option("split", split_arg)->required();

    std::string run_dir, compare;
    auto* rep = app.add_subcommand("report", "render report.md + plots for a run");
    rep->add_option("--run-dir", run_dir)->required();
    rep->add_option("--compare", compare, "second run directory for ablation layout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(config_path, output_dir, seed);
        if (predict->parsed())
            return cmd_predict(checkpoint, images, images_dir, depth_dir, object_name,
                               action_name, output_dir);
        if (eval->parsed())
            return cmd_eval(pred_dir, gt_dir, output_dir, eps, nss_binarize, workers);
        if (split->parsed()) {
            if (score->parsed()) return cmd_split_score(split_arg, embeddings);
            if (build->parsed()) return cmd_split_build(classes_file, test_fraction, seed, split_out);
            if (show->parsed()) return cmd_split_show(split_arg);
        }
        if (rep->parsed()) return cmd_report(run_dir, compare);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
