#pragma once

#include <vector>

#include "afford/dense_map.hpp"

namespace afford::losses {

struct LossWeights {
    double alpha_pos = 0.95;
    double alpha_neg = 0.05;
    double gamma = 2.0;
    double lambda_text = 0.01;
    // Ablation mode: threshold GT to {0,1} instead of the soft-target form.
    bool hard_target = false;
    double hard_threshold = 0.5;

    void validate() const;
};

// Probabilities are clamped to this range before any log.
inline constexpr double kProbClamp = 1e-6;

/// Soft-target focal loss, mean over pixels:
///   alpha_pos*y*(1-p)^g*(-log p) + alpha_neg*(1-y)*p^g*(-log(1-p))
/// Reduces to the standard binary focal loss when y is 0/1.
double focal_affordance_loss(const DenseMap& pred_prob, const DenseMap& gt,
                             const LossWeights& w);

/// dL/dp per pixel (same mean-over-pixels reduction). Zero where the clamp
/// is active.
std::vector<double> focal_affordance_loss_grad(const DenseMap& pred_prob, const DenseMap& gt,
                                               const LossWeights& w);

/// Mean negative log-likelihood of target tokens over non-ignored positions.
/// logits[i] holds scores over the vocabulary for position i.
double text_loss(const std::vector<std::vector<double>>& logits,
                 const std::vector<int>& targets, const std::vector<bool>& ignore);

/// dL/dlogits: (softmax - onehot) / n_scored at scored positions, zeros at
/// ignored positions.
std::vector<std::vector<double>> text_loss_grad(const std::vector<std::vector<double>>& logits,
                                                const std::vector<int>& targets,
                                                const std::vector<bool>& ignore);

/// Combined objective: l_aff + lambda_text * l_text.
double total_loss(double l_aff, double l_text, const LossWeights& w);

}  // namespace afford::losses
