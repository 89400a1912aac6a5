#include "afford/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace afford::metrics {

namespace {

constexpr double kSumTolerance = 1e-6;

void check_pair(const DenseMap& pred, const DenseMap& gt, const char* op, bool check_norm) {
    if (!pred.same_shape(gt))
        throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                    std::to_string(pred.height()) + "x" + std::to_string(pred.width()) +
                                    " vs " + std::to_string(gt.height()) + "x" +
                                    std::to_string(gt.width()) + ")");
    pred.validate(op);
    gt.validate(op);
    if (check_norm) {
        if (std::fabs(pred.sum() - 1.0) > kSumTolerance)
            throw std::invalid_argument(std::string(op) +
                                        ": prediction is not a distribution (normalize first)");
        if (std::fabs(gt.sum() - 1.0) > kSumTolerance)
            throw std::invalid_argument(std::string(op) +
                                        ": ground truth is not a distribution (normalize first)");
    }
}

}  // namespace

double kld(const DenseMap& pred, const DenseMap& gt, double eps) {
    check_pair(pred, gt, "kld", true);
    double acc = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i)
        acc += gt[i] * std::log(eps + gt[i] / (eps + pred[i]));
    return acc;
}

double sim(const DenseMap& pred, const DenseMap& gt) {
    check_pair(pred, gt, "sim", true);
    double acc = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) acc += std::min(pred[i], gt[i]);
    return acc;
}

double nss(const DenseMap& pred, const DenseMap& gt, bool binarize_gt) {
    check_pair(pred, gt, "nss", false);
    const double n = static_cast<double>(pred.size());

    double weight_sum = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i)
        weight_sum += binarize_gt ? (gt[i] > 0.0 ? 1.0 : 0.0) : gt[i];
    if (weight_sum <= 0.0)
        throw std::invalid_argument("nss: ground truth has no positive values");

    double mu = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) mu += pred[i];
    mu /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) var += (pred[i] - mu) * (pred[i] - mu);
    const double sigma = std::sqrt(var / n);  // population sigma, no sample correction
    if (sigma < 1e-12) return 0.0;            // constant prediction: degenerate

    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double w = binarize_gt ? (gt[i] > 0.0 ? 1.0 : 0.0) : gt[i];
        acc += (pred[i] - mu) / sigma * w;
    }
    return acc / weight_sum;
}

namespace {

bool pred_is_constant(const DenseMap& m) {
    const double n = static_cast<double>(m.size());
    double mu = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) mu += m[i];
    mu /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) var += (m[i] - mu) * (m[i] - mu);
    return std::sqrt(var / n) < 1e-12;
}

struct PairScore {
    SampleMetrics metrics;
    bool degenerate = false;
};

PairScore score_pair(const EvalPair& pair, const EvalOptions& opts) {
    pair.pred.validate("evaluate_batch prediction");
    pair.gt.validate("evaluate_batch ground truth");
    if (pair.gt.sum() <= 0.0)
        throw std::invalid_argument("evaluate_batch: all-zero ground truth for sample " +
                                    pair.sample_id);

    const DenseMap resized = resize_bilinear(pair.pred, pair.gt.height(), pair.gt.width());
    const DenseMap gt_dist = normalize_to_distribution(pair.gt);

    PairScore out;
    out.metrics.sample_id = pair.sample_id;

    DenseMap pred_dist;
    if (resized.sum() > 0.0) {
        pred_dist = normalize_to_distribution(resized);
    } else {
        // unusable prediction: score against uniform, record it
        pred_dist = DenseMap(resized.height(), resized.width(),
                             1.0 / static_cast<double>(resized.size()));
        out.degenerate = true;
    }
    out.metrics.kld = kld(pred_dist, gt_dist, opts.eps);
    out.metrics.sim = sim(pred_dist, gt_dist);

    if (pred_is_constant(resized)) {
        out.metrics.nss = 0.0;
        out.degenerate = true;
    } else {
        out.metrics.nss = nss(minmax_normalize(resized), pair.gt, opts.nss_binarize_gt);
    }
    return out;
}

}  // namespace

MetricReport evaluate_batch(std::vector<EvalPair> pairs, const EvalOptions& opts) {
    if (pairs.empty()) throw std::invalid_argument("evaluate_batch: no pairs");

    std::sort(pairs.begin(), pairs.end(),
              [](const EvalPair& a, const EvalPair& b) { return a.sample_id < b.sample_id; });

    std::vector<PairScore> scores(pairs.size());
    const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(pairs.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < pairs.size(); ++i) scores[i] = score_pair(pairs[i], opts);
    } else {
        // fixed index->worker mapping keeps the merge deterministic
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i = t; i < pairs.size(); i += workers)
                        scores[i] = score_pair(pairs[i], opts);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    MetricReport report;
    report.num_samples = static_cast<int>(scores.size());
    for (const auto& s : scores) {
        report.per_sample.push_back(s.metrics);
        report.mean_kld += s.metrics.kld;
        report.mean_sim += s.metrics.sim;
        report.mean_nss += s.metrics.nss;
        if (s.degenerate) report.num_degenerate++;
    }
    report.mean_kld /= report.num_samples;
    report.mean_sim /= report.num_samples;
    report.mean_nss /= report.num_samples;
    return report;
}

std::string report_to_json(const MetricReport& report) {
    nlohmann::json j;
    j["mean_kld"] = report.mean_kld;
    j["mean_sim"] = report.mean_sim;
    j["mean_nss"] = report.mean_nss;
    j["num_samples"] = report.num_samples;
    j["num_degenerate"] = report.num_degenerate;
    auto& per = j["per_sample"] = nlohmann::json::array();
    for (const auto& s : report.per_sample)
        per.push_back({{"sample_id", s.sample_id}, {"kld", s.kld}, {"sim", s.sim}, {"nss", s.nss}});
    return j.dump(2);
}

MetricReport report_from_json(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    MetricReport report;
    report.mean_kld = j.at("mean_kld").get<double>();
    report.mean_sim = j.at("mean_sim").get<double>();
    report.mean_nss = j.at("mean_nss").get<double>();
    report.num_samples = j.at("num_samples").get<int>();
    report.num_degenerate = j.at("num_degenerate").get<int>();
    for (const auto& s : j.at("per_sample")) {
        report.per_sample.push_back({s.at("sample_id").get<std::string>(),
                                     s.at("kld").get<double>(), s.at("sim").get<double>(),
                                     s.at("nss").get<double>()});
    }
    return report;
}

std::string report_to_table(const MetricReport& report, const std::string& title) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    if (!title.empty()) os << title << "\n";
    os << std::left << std::setw(32) << "Sample"
       << std::right << std::setw(10) << "KLD v" << std::setw(10) << "SIM ^"
       << std::setw(10) << "NSS ^" << "\n";
    os << std::string(62, '-') << "\n";
    for (const auto& s : report.per_sample) {
        os << std::left << std::setw(32) << s.sample_id << std::right << std::setw(10) << s.kld
           << std::setw(10) << s.sim << std::setw(10) << s.nss << "\n";
    }
    os << std::string(62, '-') << "\n";
    os << std::left << std::setw(32) << "Mean" << std::right << std::setw(10) << report.mean_kld
       << std::setw(10) << report.mean_sim << std::setw(10) << report.mean_nss << "\n";
    os << "samples: " << report.num_samples << "  degenerate: " << report.num_degenerate << "\n";
    return os.str();
}

}  // namespace afford::metrics
