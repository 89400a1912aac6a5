#pragma once

#include <string>
#include <vector>

#include "afford/dense_map.hpp"

namespace afford::metrics {

inline constexpr double kDefaultEps = 1e-12;

/// KLD(M, M') = sum_i M'_i * log(eps + M'_i / (eps + M_i)). Lower is better.
/// Both inputs must be distributions (sum to 1 within 1e-6) of equal shape.
double kld(const DenseMap& pred, const DenseMap& gt, double eps = kDefaultEps);

/// Histogram intersection: sum_i min(M_i, M'_i), in [0, 1] for distributions.
double sim(const DenseMap& pred, const DenseMap& gt);

/// Normalized scanpath saliency. The prediction is standardized with the
/// population sigma; the ground truth weights are used as-is (continuous),
/// or binarized (> 0) when binarize_gt is set — published benchmark code
/// differs on this, so both modes exist. A constant prediction
/// (sigma < 1e-12) scores 0 by convention.
double nss(const DenseMap& pred, const DenseMap& gt, bool binarize_gt = false);

struct SampleMetrics {
    std::string sample_id;
    double kld = 0.0;
    double sim = 0.0;
    double nss = 0.0;
};

struct MetricReport {
    std::vector<SampleMetrics> per_sample;  // sorted by sample_id
    double mean_kld = 0.0;
    double mean_sim = 0.0;
    double mean_nss = 0.0;
    int num_samples = 0;
    int num_degenerate = 0;
};

struct EvalPair {
    DenseMap pred;
    DenseMap gt;
    std::string sample_id;
};

struct EvalOptions {
    double eps = kDefaultEps;
    bool nss_binarize_gt = false;
    int workers = 1;  // results are byte-identical for any worker count
};

/// Scores every pair. Predictions are resized to the GT resolution
/// (bilinear, align-corners), both maps are normalized to distributions for
/// KLD/SIM, and the minmax-normalized prediction feeds NSS. A prediction
/// that cannot be normalized (all zeros) is scored against the uniform
/// distribution and counted in num_degenerate; an all-zero GT is an error.
/// Aggregates are unweighted means; per_sample is sorted by sample_id.
MetricReport evaluate_batch(std::vector<EvalPair> pairs, const EvalOptions& opts = {});

std::string report_to_json(const MetricReport& report);
MetricReport report_from_json(const std::string& json_text);

/// Fixed-column plain-text table, floats to 3 decimals.
std::string report_to_table(const MetricReport& report, const std::string& title = "");

}  // namespace afford::metrics
