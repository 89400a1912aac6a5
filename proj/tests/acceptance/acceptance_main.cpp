// Acceptance suite: one criterion per section, one PASS/FAIL line each.
// Runs the full synthetic training (criterion 6/7), so expect ~20 minutes.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "afford/data.hpp"
#include "afford/image_io.hpp"
#include "afford/losses.hpp"
#include "afford/metrics.hpp"
#include "afford/model.hpp"
#include "afford/report.hpp"
#include "afford/splits.hpp"
#include "afford/train.hpp"

namespace fs = std::filesystem;
using afford::DenseMap;
namespace metrics = afford::metrics;
namespace splits = afford::splits;
namespace train = afford::train;

namespace {

int g_failures = 0;

struct Criterion {
    std::string name;
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << "    FAILED: " << what << "\n";
        }
    }

    ~Criterion() {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
        const std::string d = detail.str();
        if (!d.empty()) std::cout << d;
        if (!ok) g_failures++;
        std::cout.flush();
    }
};

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- independent oracles (straight-line, long double) ----

long double oracle_kld(const DenseMap& pred, const DenseMap& gt, long double eps) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < gt.size(); ++i)
        acc += static_cast<long double>(gt[i]) *
               std::log(eps + static_cast<long double>(gt[i]) / (eps + pred[i]));
    return acc;
}

long double oracle_sim(const DenseMap& pred, const DenseMap& gt) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < gt.size(); ++i) acc += std::min<long double>(pred[i], gt[i]);
    return acc;
}

long double oracle_nss(const DenseMap& pred, const DenseMap& gt) {
    const long double n = static_cast<long double>(pred.size());
    long double mu = 0.0L;
    for (std::size_t i = 0; i < pred.size(); ++i) mu += pred[i];
    mu /= n;
    long double var = 0.0L;
    for (std::size_t i = 0; i < pred.size(); ++i) var += (pred[i] - mu) * (pred[i] - mu);
    const long double sigma = std::sqrt(var / n);
    long double wsum = 0.0L, acc = 0.0L;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        wsum += gt[i];
        acc += (pred[i] - mu) / sigma * gt[i];
    }
    return acc / wsum;
}

DenseMap random_distribution(std::mt19937_64& rng, int h, int w, double floor = 0.0) {
    std::uniform_real_distribution<double> u(floor, 1.0);
    DenseMap m(h, w);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = u(rng);
    return afford::normalize_to_distribution(m);
}

const fs::path kAssets = AFFORD_ASSETS_DIR;

void criterion_1_metric_oracles() {
    Criterion c{"C1 metric oracle equivalence (fixtures to 1e-5, 1000 random pairs to 1e-6)"};
    const auto t0 = std::chrono::steady_clock::now();

    c.require(std::fabs(metrics::kld(DenseMap(1, 2, {0.5, 0.5}), DenseMap(1, 2, {1.0, 0.0})) -
                        0.693147) < 1e-5,
              "KLD fixture ln2");
    c.require(std::fabs(metrics::kld(DenseMap(1, 2, {0.9, 0.1}), DenseMap(1, 2, {0.5, 0.5})) -
                        0.510825) < 1e-5,
              "KLD fixture 0.510825");
    c.require(std::fabs(metrics::sim(DenseMap(1, 2, {0.7, 0.3}), DenseMap(1, 2, {0.4, 0.6})) -
                        0.7) < 1e-5,
              "SIM fixture 0.7");
    c.require(std::fabs(metrics::nss(DenseMap(1, 4, {0, 1, 0, 1}), DenseMap(1, 4, {0, 1, 0, 0})) -
                        1.0) < 1e-5,
              "NSS fixture +1");
    c.require(std::fabs(metrics::nss(DenseMap(1, 4, {0, 1, 0, 1}), DenseMap(1, 4, {1, 0, 0, 0})) +
                        1.0) < 1e-5,
              "NSS fixture -1");

    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int h = 1 + static_cast<int>(rng() % 12);
        const int w = 1 + static_cast<int>(rng() % 12);
        const DenseMap pred = random_distribution(rng, h, w, 1e-4);
        const DenseMap gt = random_distribution(rng, h, w);
        worst = std::max(worst, std::fabs(metrics::kld(pred, gt) -
                                          static_cast<double>(oracle_kld(pred, gt, 1e-12L))));
        worst = std::max(worst, std::fabs(metrics::sim(pred, gt) -
                                          static_cast<double>(oracle_sim(pred, gt))));
        if (pred.max_value() - pred.min_value() > 1e-9)
            worst = std::max(worst, std::fabs(metrics::nss(pred, gt) -
                                              static_cast<double>(oracle_nss(pred, gt))));
    }
    c.require(worst < 1e-6, "random-pair agreement, worst |diff| = " + std::to_string(worst));
    c.require(elapsed_s(t0) < 60.0, "runtime under 1 minute");
}

void criterion_2_metric_invariants() {
    Criterion c{"C2 metric invariants (>= 10000 randomized property cases)"};
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int cases = 0;
    bool sim_range_ok = true, sim_sym_ok = true, kld_self_ok = true, nss_affine_ok = true,
         gibbs_ok = true, eps_agree_ok = true;

    for (int trial = 0; trial < 2600; ++trial) {
        const int h = 1 + static_cast<int>(rng() % 6);
        const int w = 2 + static_cast<int>(rng() % 6);
        const DenseMap p = random_distribution(rng, h, w, 1e-4);
        const DenseMap g = random_distribution(rng, h, w);

        const double s = metrics::sim(p, g);
        sim_range_ok &= s >= 0.0 && s <= 1.0 + 1e-12;
        sim_sym_ok &= std::fabs(s - metrics::sim(g, p)) < 1e-12;
        cases += 2;

        kld_self_ok &= metrics::kld(p, p) < 1e-9;
        cases++;

        // Gibbs: eps-0 oracle is non-negative; implementation agrees when
        // the prediction is bounded away from zero
        const double oracle0 = static_cast<double>(oracle_kld(p, g, 0.0L));
        gibbs_ok &= oracle0 >= -1e-12;
        eps_agree_ok &= std::fabs(metrics::kld(p, g) - oracle0) < 1e-6;
        cases += 2;

        if (p.max_value() - p.min_value() > 1e-9) {
            DenseMap scaled(h, w);
            const double a = 0.2 + 4.0 * u(rng), b = u(rng);
            for (std::size_t i = 0; i < p.size(); ++i) scaled[i] = a * p[i] + b;
            nss_affine_ok &= std::fabs(metrics::nss(scaled, g) - metrics::nss(p, g)) < 1e-9;
            cases++;
        }
    }
    c.require(sim_range_ok, "SIM in [0,1]");
    c.require(sim_sym_ok, "SIM symmetric");
    c.require(kld_self_ok, "KLD(m,m) < 1e-9");
    c.require(nss_affine_ok, "NSS affine invariance to 1e-9");
    c.require(gibbs_ok, "eps-0 oracle KLD >= 0 (Gibbs)");
    c.require(eps_agree_ok, "eps=1e-12 implementation vs eps=0 oracle < 1e-6");
    c.require(cases >= 10000, "case count " + std::to_string(cases));
    c.require(elapsed_s(t0) < 120.0, "runtime under 2 minutes");
}

void criterion_3_split_difficulty() {
    Criterion c{"C3 split difficulty reproduces the published scores and ordering"};
    const auto t0 = std::chrono::steady_clock::now();
    const auto table =
        splits::load_embedding_table(kAssets / "embeddings" / "class_embeddings.tsv");
    const auto [easy, hard] = splits::load_canonical_splits();

    // Same: every test class present in train -> exactly 0
    splits::SplitSpec same;
    same.name = "same";
    same.train_classes = easy.train_classes;
    for (const auto& cls : easy.train_classes) same.test_classes.insert(cls);
    // disjointness is a type invariant; emulate Same by duplicate embeddings
    same.test_classes.clear();
    splits::EmbeddingTable with_dupes = table;
    for (const auto& cls : easy.train_classes) {
        with_dupes.entries[cls + " (dup)"] = table.entries.at(cls);
        same.test_classes.insert(cls + " (dup)");
    }
    const double d_same = splits::split_difficulty(same, with_dupes);
    c.require(d_same == 0.0, "Same = 0.000 exactly, got " + std::to_string(d_same));

    const double d_easy = splits::split_difficulty(easy, table);
    const double d_hard = splits::split_difficulty(hard, table);
    c.require(std::fabs(d_easy - 0.356) <= 0.05,
              "easy within +-0.05 of 0.356, got " + std::to_string(d_easy));
    c.require(std::fabs(d_hard - 0.412) <= 0.05,
              "hard within +-0.05 of 0.412, got " + std::to_string(d_hard));

    // seeded LVIS-derived random split; ordering asserted, value not
    std::set<std::string> lvis;
    {
        std::ifstream in(kAssets / "splits" / "lvis50.txt");
        std::string line;
        while (std::getline(in, line)) {
            const auto cls = splits::normalize_class_name(line);
            if (!cls.empty()) lvis.insert(cls);
        }
    }
    c.require(lvis.size() == 50, "LVIS class sample has 50 entries");
    const auto random_split = splits::build_random_split(lvis, 0.5, 20240501, "random");
    const double d_random = splits::split_difficulty(random_split, table);
    c.require(d_same < d_easy && d_easy < d_hard && d_hard < d_random,
              "ordering Same < Easy < Hard < Random (random " + std::to_string(d_random) + ")");
    c.require(elapsed_s(t0) < 60.0, "runtime under 1 minute");
}

void criterion_4_canonical_split_fidelity() {
    Criterion c{"C4 canonical split fidelity (33/14 and 28/22, disjoint, verbatim)"};
    const auto [easy, hard] = splits::load_canonical_splits();
    c.require(easy.train_classes.size() == 33, "easy train 33");
    c.require(easy.test_classes.size() == 14, "easy test 14");
    c.require(hard.train_classes.size() == 28, "hard train 28");
    c.require(hard.test_classes.size() == 22, "hard test 22");
    bool disjoint = true;
    for (const auto& cls : easy.test_classes) disjoint &= !easy.train_classes.count(cls);
    for (const auto& cls : hard.test_classes) disjoint &= !hard.train_classes.count(cls);
    c.require(disjoint, "disjoint sides");

    // spot checks against the published lists
    c.require(easy.train_classes.count("scissors") && easy.train_classes.count("baseball bat"),
              "easy train contains scissors, baseball bat");
    c.require(easy.test_classes.count("camera") && easy.test_classes.count("refrigerator"),
              "easy test contains camera, refrigerator");
    c.require(hard.train_classes.count("camera") && hard.train_classes.count("binoculars"),
              "hard train contains camera, binoculars");
    c.require(hard.test_classes.count("pen") && hard.test_classes.count("toothbrush"),
              "hard test contains pen, toothbrush");

    // file assets match the embedded lists
    const auto easy_file = splits::load_split_file(kAssets / "splits" / "easy.split");
    const auto hard_file = splits::load_split_file(kAssets / "splits" / "hard.split");
    c.require(easy_file.train_classes == easy.train_classes &&
                  easy_file.test_classes == easy.test_classes,
              "easy asset file matches");
    c.require(hard_file.train_classes == hard.train_classes &&
                  hard_file.test_classes == hard.test_classes,
              "hard asset file matches");
}

void criterion_5_gradient_correctness() {
    Criterion c{"C5 gradient correctness (loss-level < 1e-4, end-to-end < 1e-3 on 20 params)"};
    const auto t0 = std::chrono::steady_clock::now();
    namespace losses = afford::losses;
    namespace model = afford::model;
    namespace data = afford::data;
    namespace ag = afford::ag;

    // loss-level: focal + text CE vs central differences at 1e-4
    {
        losses::LossWeights w;
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> up(0.05, 0.95), uy(0.0, 1.0);
        bool ok = true;
        for (int trial = 0; trial < 10; ++trial) {
            DenseMap p(3, 3), y(3, 3);
            for (std::size_t i = 0; i < p.size(); ++i) {
                p[i] = up(rng);
                y[i] = uy(rng);
            }
            const auto grad = losses::focal_affordance_loss_grad(p, y, w);
            for (std::size_t i = 0; i < p.size(); ++i) {
                DenseMap hi = p, lo = p;
                hi[i] += 1e-4;
                lo[i] -= 1e-4;
                const double fd = (losses::focal_affordance_loss(hi, y, w) -
                                   losses::focal_affordance_loss(lo, y, w)) /
                                  2e-4;
                const double denom = std::max({std::fabs(fd), std::fabs(grad[i]), 1e-10});
                ok &= std::fabs(fd - grad[i]) / denom < 1e-4;
            }
        }
        c.require(ok, "focal gradient vs finite differences");

        std::uniform_real_distribution<double> ul(-2.0, 2.0);
        std::vector<std::vector<double>> logits(5, std::vector<double>(7));
        for (auto& row : logits)
            for (auto& v : row) v = ul(rng);
        const std::vector<int> targets = {1, 2, 3, 4, 5};
        const std::vector<bool> ignore = {false, false, true, false, false};
        const auto tg = losses::text_loss_grad(logits, targets, ignore);
        bool ok2 = true;
        for (std::size_t i = 0; i < logits.size(); ++i)
            for (std::size_t k = 0; k < logits[i].size(); ++k) {
                auto hi = logits, lo = logits;
                hi[i][k] += 1e-4;
                lo[i][k] -= 1e-4;
                const double fd = (losses::text_loss(hi, targets, ignore) -
                                   losses::text_loss(lo, targets, ignore)) /
                                  2e-4;
                const double denom = std::max({std::fabs(fd), std::fabs(tg[i][k]), 1e-10});
                ok2 &= std::fabs(fd - tg[i][k]) / denom < 1e-4;
            }
        c.require(ok2, "text CE gradient vs finite differences");
    }

    // end-to-end: tiny double model, 20 random parameters, step 1e-3
    {
        model::ModelConfig cfg;
        cfg.image_size = 16;
        cfg.patch_size = 8;
        cfg.encoder_dim = 16;
        cfg.encoder_layers = 1;
        cfg.projection_dim = 8;
        cfg.lm_dim = 32;
        cfg.lm_layers = 1;
        cfg.vocab_size = 64;
        cfg.map_size = 8;
        cfg.use_depth = true;
        cfg.seed = 77;
        model::AffordanceModel<double> net(cfg);

        afford::ImageRGB img(16, 16);
        afford::ImageGray dep(16, 16);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<float> u01(0.0f, 1.0f);
        for (auto& v : img.pixels) v = u01(rng);
        for (auto& v : dep.pixels) v = u01(rng);
        std::vector<int> text = {data::kBos, 7, 8, 9, data::kMask, 10, data::kEos};
        DenseMap gt(8, 8, 0.0);
        gt.at(2, 2) = 1.0;
        gt.at(2, 3) = 0.6;
        losses::LossWeights w;

        std::vector<int> targets(text.size(), 0);
        std::vector<bool> ignore(text.size(), true);
        for (std::size_t p = 3; p + 1 < text.size(); ++p) {
            targets[p] = text[p + 1];
            ignore[p] = false;
        }

        auto loss_value = [&]() {
            ag::Tape<double> tape(&net.params());
            auto out = net.forward(tape, img, dep, text);
            const auto& mt = tape.value(out.map);
            DenseMap pm(8, 8);
            for (std::size_t i = 0; i < pm.size(); ++i) pm[i] = mt.v[i];
            const double l_aff = losses::focal_affordance_loss(pm, gt, w);
            const auto& lt = tape.value(out.text_logits);
            std::vector<std::vector<double>> lrows(lt.rows);
            for (int r = 0; r < lt.rows; ++r) lrows[r].assign(lt.row(r), lt.row(r) + lt.cols);
            const double l_text = losses::text_loss(lrows, targets, ignore);
            return losses::total_loss(l_aff, l_text, w);
        };

        // analytic gradients
        net.params().zero_grad();
        {
            ag::Tape<double> tape(&net.params());
            auto out = net.forward(tape, img, dep, text);
            const auto& mt = tape.value(out.map);
            DenseMap pm(8, 8);
            for (std::size_t i = 0; i < pm.size(); ++i) pm[i] = mt.v[i];
            const double l_aff_v = losses::focal_affordance_loss(pm, gt, w);
            auto ga = losses::focal_affordance_loss_grad(pm, gt, w);
            ag::Var l_aff = tape.custom_scalar(out.map, l_aff_v, ga);
            const auto& lt = tape.value(out.text_logits);
            std::vector<std::vector<double>> lrows(lt.rows);
            for (int r = 0; r < lt.rows; ++r) lrows[r].assign(lt.row(r), lt.row(r) + lt.cols);
            const double l_text_v = losses::text_loss(lrows, targets, ignore);
            const auto tg = losses::text_loss_grad(lrows, targets, ignore);
            std::vector<double> tg_flat;
            for (const auto& row : tg) tg_flat.insert(tg_flat.end(), row.begin(), row.end());
            ag::Var l_text = tape.custom_scalar(out.text_logits, l_text_v, tg_flat);
            tape.backward(tape.axpy_scalar(l_aff, l_text, w.lambda_text));
        }

        // sample 20 parameters with non-trivial gradients across the net
        std::mt19937_64 pick(99);
        int checked = 0;
        bool ok = true;
        double worst = 0.0;
        int guard = 0;
        while (checked < 20 && guard++ < 4000) {
            const int pi = static_cast<int>(pick() % net.params().count());
            auto& p = net.params().at(pi);
            const std::size_t j = pick() % p.value.size();
            const double g = p.grad.v[j];
            if (std::fabs(g) < 1e-7) continue;  // FD noise would dominate
            const double orig = p.value.v[j];
            p.value.v[j] = orig + 1e-3;
            const double hi = loss_value();
            p.value.v[j] = orig - 1e-3;
            const double lo = loss_value();
            p.value.v[j] = orig;
            const double fd = (hi - lo) / 2e-3;
            const double rel = std::fabs(fd - g) / std::max({std::fabs(fd), std::fabs(g), 1e-12});
            worst = std::max(worst, rel);
            ok &= rel < 1e-3;
            checked++;
        }
        c.require(checked == 20, "sampled 20 parameters");
        c.require(ok, "end-to-end rel err < 1e-3, worst " + std::to_string(worst));
    }
    c.require(elapsed_s(t0) < 300.0, "runtime under 5 minutes");
}

// shared across criteria 6 and 7
struct TrainingArtifacts {
    train::TrainSummary summary;
    fs::path run_dir;
};

afford::train::RunConfig acceptance_train_config(const fs::path& out_dir, bool use_depth,
                                                 int steps) {
    afford::train::RunConfig cfg;  // model defaults = toy defaults from the docs
    cfg.model.use_depth = use_depth;
    cfg.model.seed = 1234;
    cfg.dataset.kind = "synthetic";
    cfg.dataset.n_train = 96;
    cfg.dataset.n_heldout_seen = 24;
    cfg.dataset.n_heldout_unseen = 24;
    cfg.dataset.seed = 7;
    cfg.optimizer.steps = steps;
    cfg.optimizer.batch_size = 4;       // documented default
    cfg.optimizer.learning_rate = 3e-4; // deviation: from-scratch toy training
    cfg.optimizer.warmup_steps = 40;
    cfg.optimizer.seed = 11;
    cfg.eval.max_eval_samples = 24;
    cfg.eval.max_forced_check = 96;
    cfg.output_dir = out_dir.string();
    return cfg;
}

void criterion_6_desk_scale_learning(TrainingArtifacts& arts) {
    Criterion c{"C6 desk-scale learning (loss halved, NSS > 0.5, SIM >= 2x uniform, >= 90% unforced)"};
    const auto t0 = std::chrono::steady_clock::now();

    const fs::path run_dir = fs::temp_directory_path() / "afford_acceptance" / "depth_on";
    fs::remove_all(run_dir);
    auto cfg = acceptance_train_config(run_dir, /*use_depth=*/true, /*steps=*/600);
    arts.run_dir = run_dir;

    std::cout << "  [C6] training " << cfg.optimizer.steps << " steps on the synthetic set...\n";
    arts.summary = train::train_run(cfg, &std::cout);
    const auto& s = arts.summary;

    c.require(s.steps_run <= 2000, "step budget <= 2000");
    c.require(s.wall_seconds <= 1800.0,
              "wall time " + std::to_string(s.wall_seconds) + "s <= 30 minutes");
    c.require(s.final_l_aff <= 0.5 * s.step0_l_aff,
              "focal loss halved: step0 " + std::to_string(s.step0_l_aff) + " final " +
                  std::to_string(s.final_l_aff));
    c.require(s.reports.count("heldout_seen") == 1, "held-out seen report exists");
    if (s.reports.count("heldout_seen")) {
        const auto& rep = s.reports.at("heldout_seen");
        c.require(rep.mean_nss > 0.5, "mean NSS " + std::to_string(rep.mean_nss) + " > 0.5");

        // uniform-prediction SIM baseline on the same held-out samples
        afford::data::SyntheticConfig sc;
        sc.image_size = cfg.model.image_size;
        sc.with_depth = cfg.model.use_depth;
        sc.archetypes = cfg.dataset.archetypes;
        sc.n_samples = cfg.dataset.n_heldout_seen;
        sc.seed = cfg.dataset.seed + 1000;
        const auto heldout = afford::data::generate_synthetic(sc);
        std::vector<metrics::EvalPair> uni;
        for (std::size_t i = 0; i < heldout.size() && i < static_cast<std::size_t>(cfg.eval.max_eval_samples); ++i)
            uni.push_back({DenseMap(cfg.model.map_size, cfg.model.map_size, 0.5),
                           heldout[i].gt_map, heldout[i].sample_id});
        const auto uni_rep = metrics::evaluate_batch(std::move(uni));
        c.require(rep.mean_sim >= 2.0 * uni_rep.mean_sim,
                  "mean SIM " + std::to_string(rep.mean_sim) + " >= 2x uniform baseline " +
                      std::to_string(uni_rep.mean_sim));
    }
    c.require(s.forced_checked > 0 && s.forced_rate <= 0.10,
              "unforced emission on >= 90% of training samples (forced rate " +
                  std::to_string(s.forced_rate) + ")");
    std::cout << "  [C6] " << elapsed_s(t0) << "s\n";
}

void criterion_7_generalization_harness(const TrainingArtifacts& arts) {
    Criterion c{"C7 generalization harness (hard-split report complete, depth ablation logged)"};
    const auto t0 = std::chrono::steady_clock::now();

    // the depth-on run already evaluated held-out (unseen-archetype) samples
    c.require(arts.summary.reports.count("heldout_unseen") == 1,
              "synthetic hard-split report exists");
    if (arts.summary.reports.count("heldout_unseen")) {
        const auto& rep = arts.summary.reports.at("heldout_unseen");
        c.require(std::isfinite(rep.mean_kld) && std::isfinite(rep.mean_sim) &&
                      std::isfinite(rep.mean_nss),
                  "unseen-archetype metric triple is finite");
        c.require(rep.num_samples > 0, "unseen-archetype report non-empty");
    }

    // depth-off arm: shorter run, same protocol; triples must be distinct and logged
    const fs::path run_dir = fs::temp_directory_path() / "afford_acceptance" / "depth_off";
    fs::remove_all(run_dir);
    auto cfg = acceptance_train_config(run_dir, /*use_depth=*/false, /*steps=*/250);
    std::cout << "  [C7] training the depth-off arm (" << cfg.optimizer.steps << " steps)...\n";
    const auto off = train::train_run(cfg, nullptr);

    c.require(off.reports.count("heldout_seen") == 1 && off.reports.count("heldout_unseen") == 1,
              "depth-off reports exist");
    if (off.reports.count("heldout_seen") && arts.summary.reports.count("heldout_seen")) {
        const auto& a = arts.summary.reports.at("heldout_seen");
        const auto& b = off.reports.at("heldout_seen");
        const bool distinct = a.mean_kld != b.mean_kld || a.mean_sim != b.mean_sim ||
                              a.mean_nss != b.mean_nss;
        c.require(distinct, "depth-on vs depth-off triples are distinct");
    }

    // ablation-style two-column report renders from the two run dirs
    try {
        afford::report::write_run_report(arts.run_dir, run_dir);
        c.require(fs::exists(arts.run_dir / "report.md"), "comparison report written");
        std::ifstream md(arts.run_dir / "report.md");
        std::stringstream ss;
        ss << md.rdbuf();
        c.require(ss.str().find("depth on") != std::string::npos &&
                      ss.str().find("depth off") != std::string::npos,
                  "two-column depth comparison present");
    } catch (const std::exception& e) {
        c.require(false, std::string("report rendering: ") + e.what());
    }
    std::cout << "  [C7] " << elapsed_s(t0) << "s\n";
}

void criterion_8_protocol_reproduction() {
    Criterion c{"C8 scoring harness reproduces the protocol bit-for-bit on prediction files"};

    // full-scale pretrained-backbone results are out of scope at desk scale;
    // what ships instead is the exact scoring protocol over anyone's
    // prediction files. Write the fixture trio via the lossless sidecar and
    // score the files end to end.
    const fs::path dir = fs::temp_directory_path() / "afford_acceptance" / "protocol";
    fs::remove_all(dir);
    fs::create_directories(dir / "pred");
    fs::create_directories(dir / "gt");

    afford::save_map_sidecar(DenseMap(1, 2, {0.5, 0.5}), dir / "pred" / "kld_pair.afmp");
    afford::save_map_sidecar(DenseMap(1, 2, {1.0, 0.0}), dir / "gt" / "kld_pair.afmp");
    afford::save_map_sidecar(DenseMap(1, 2, {0.7, 0.3}), dir / "pred" / "sim_pair.afmp");
    afford::save_map_sidecar(DenseMap(1, 2, {0.4, 0.6}), dir / "gt" / "sim_pair.afmp");
    afford::save_map_sidecar(DenseMap(1, 4, {0, 1, 0, 1}), dir / "pred" / "nss_pair.afmp");
    afford::save_map_sidecar(DenseMap(1, 4, {0, 1, 0, 0}), dir / "gt" / "nss_pair.afmp");

    std::vector<metrics::EvalPair> pairs;
    for (const auto& id : {"kld_pair", "sim_pair", "nss_pair"})
        pairs.push_back({afford::load_map_sidecar(dir / "pred" / (std::string(id) + ".afmp")),
                         afford::load_map_sidecar(dir / "gt" / (std::string(id) + ".afmp")),
                         id});
    const auto rep = metrics::evaluate_batch(std::move(pairs));
    c.require(rep.per_sample.size() == 3, "three pairs scored");
    // per_sample sorted by id: kld_pair, nss_pair, sim_pair
    c.require(std::fabs(rep.per_sample[0].kld - 0.693147) < 1e-5, "file-scored KLD fixture");
    c.require(std::fabs(rep.per_sample[2].sim - 0.7) < 1e-9, "file-scored SIM fixture");
    c.require(std::fabs(rep.per_sample[1].nss - 1.0) < 1e-9, "file-scored NSS fixture");

    // scoring identical files twice is byte-identical (JSON report equality)
    std::vector<metrics::EvalPair> again;
    for (const auto& id : {"kld_pair", "sim_pair", "nss_pair"})
        again.push_back({afford::load_map_sidecar(dir / "pred" / (std::string(id) + ".afmp")),
                         afford::load_map_sidecar(dir / "gt" / (std::string(id) + ".afmp")),
                         id});
    const auto rep2 = metrics::evaluate_batch(std::move(again));
    c.require(metrics::report_to_json(rep) == metrics::report_to_json(rep2),
              "byte-identical reports for identical inputs");

    std::cout << "  [C8] note: full-scale benchmark absolutes require pretrained 7B-scale\n"
                 "       components and are out of scope here; the harness above scores any\n"
                 "       method's prediction files under the exact protocol instead.\n";
}

}  // namespace

int main() {
    std::cout << "affordkit acceptance suite\n==========================\n";
    criterion_1_metric_oracles();
    criterion_2_metric_invariants();
    criterion_3_split_difficulty();
    criterion_4_canonical_split_fidelity();
    criterion_5_gradient_correctness();
    TrainingArtifacts arts;
    criterion_6_desk_scale_learning(arts);
    criterion_7_generalization_harness(arts);
    criterion_8_protocol_reproduction();
    std::cout << "==========================\n"
              << (g_failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES: ") << (g_failures ? std::to_string(g_failures) : "")
              << "\n";
    return g_failures == 0 ? 0 : 1;
}
