#include "afford/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace afford::losses {

void LossWeights::validate() const {
    if (alpha_pos <= 0.0 || alpha_pos >= 1.0 || alpha_neg <= 0.0 || alpha_neg >= 1.0)
        throw std::invalid_argument("LossWeights: alphas must lie in (0,1)");
    if (gamma < 0.0) throw std::invalid_argument("LossWeights: gamma must be >= 0");
    if (lambda_text < 0.0) throw std::invalid_argument("LossWeights: lambda_text must be >= 0");
    if (hard_threshold < 0.0 || hard_threshold > 1.0)
        throw std::invalid_argument("LossWeights: hard_threshold must lie in [0,1]");
}

namespace {

inline double clamp_prob(double p) {
    return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

inline double target_of(double y, const LossWeights& w) {
    if (!w.hard_target) return y;
    return y >= w.hard_threshold ? 1.0 : 0.0;
}

// pow with the gamma = 0 and gamma = 1 fast paths exact
inline double powg(double base, double g) {
    if (g == 0.0) return 1.0;
    if (g == 1.0) return base;
    if (g == 2.0) return base * base;
    return std::pow(base, g);
}

}  // namespace

double focal_affordance_loss(const DenseMap& pred_prob, const DenseMap& gt,
                             const LossWeights& w) {
    w.validate();
    if (!pred_prob.same_shape(gt))
        throw std::invalid_argument("focal_affordance_loss: dimension mismatch");
    gt.validate("focal_affordance_loss gt");

    double acc = 0.0;
    for (std::size_t i = 0; i < pred_prob.size(); ++i) {
        const double p = clamp_prob(pred_prob[i]);
        const double y = target_of(gt[i], w);
        acc += w.alpha_pos * y * powg(1.0 - p, w.gamma) * (-std::log(p)) +
               w.alpha_neg * (1.0 - y) * powg(p, w.gamma) * (-std::log(1.0 - p));
    }
    return acc / static_cast<double>(pred_prob.size());
}

std::vector<double> focal_affordance_loss_grad(const DenseMap& pred_prob, const DenseMap& gt,
                                               const LossWeights& w) {
    w.validate();
    if (!pred_prob.same_shape(gt))
        throw std::invalid_argument("focal_affordance_loss_grad: dimension mismatch");

    const double inv_n = 1.0 / static_cast<double>(pred_prob.size());
    std::vector<double> grad(pred_prob.size(), 0.0);
    for (std::size_t i = 0; i < pred_prob.size(); ++i) {
        const double raw = pred_prob[i];
        if (raw < kProbClamp || raw > 1.0 - kProbClamp) continue;  // clamp region
        const double p = raw;
        const double y = target_of(gt[i], w);
        // d/dp [(1-p)^g * (-ln p)] = g (1-p)^(g-1) ln p - (1-p)^g / p
        double dpos = -powg(1.0 - p, w.gamma) / p;
        if (w.gamma != 0.0) dpos += w.gamma * powg(1.0 - p, w.gamma - 1.0) * std::log(p);
        // d/dp [p^g * (-ln(1-p))] = g p^(g-1) (-ln(1-p)) + p^g / (1-p)
        double dneg = powg(p, w.gamma) / (1.0 - p);
        if (w.gamma != 0.0) dneg += w.gamma * powg(p, w.gamma - 1.0) * (-std::log(1.0 - p));
        grad[i] = (w.alpha_pos * y * dpos + w.alpha_neg * (1.0 - y) * dneg) * inv_n;
    }
    return grad;
}

namespace {

int count_scored(const std::vector<int>& targets, const std::vector<bool>& ignore,
                 std::size_t n_logits) {
    if (targets.size() != n_logits || ignore.size() != n_logits)
        throw std::invalid_argument("text_loss: logits/targets/ignore length mismatch");
    int scored = 0;
    for (bool ig : ignore)
        if (!ig) scored++;
    if (scored == 0) throw std::invalid_argument("text_loss: all positions ignored");
    return scored;
}

}  // namespace

double text_loss(const std::vector<std::vector<double>>& logits, const std::vector<int>& targets,
                 const std::vector<bool>& ignore) {
    const int scored = count_scored(targets, ignore, logits.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (ignore[i]) continue;
        const auto& row = logits[i];
        const int t = targets[i];
        if (t < 0 || t >= static_cast<int>(row.size()))
            throw std::invalid_argument("text_loss: target id out of vocabulary");
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double v : row) z += std::exp(v - mx);
        acc += -(row[t] - mx - std::log(z));
    }
    return acc / scored;
}

std::vector<std::vector<double>> text_loss_grad(const std::vector<std::vector<double>>& logits,
                                                const std::vector<int>& targets,
                                                const std::vector<bool>& ignore) {
    const int scored = count_scored(targets, ignore, logits.size());
    std::vector<std::vector<double>> grad(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        grad[i].assign(logits[i].size(), 0.0);
        if (ignore[i]) continue;
        const auto& row = logits[i];
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double v : row) z += std::exp(v - mx);
        for (std::size_t k = 0; k < row.size(); ++k)
            grad[i][k] = std::exp(row[k] - mx) / z / scored;
        grad[i][targets[i]] -= 1.0 / scored;
    }
    return grad;
}

double total_loss(double l_aff, double l_text, const LossWeights& w) {
    if (!std::isfinite(l_aff) || !std::isfinite(l_text) || l_aff < 0.0 || l_text < 0.0)
        throw std::invalid_argument("total_loss: losses must be finite and >= 0");
    return l_aff + w.lambda_text * l_text;
}

}  // namespace afford::losses
