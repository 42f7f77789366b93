#pragma once

#include <vector>

#include "codistill/tensor.hpp"

namespace codistill {

// Integer class labels for a batch; every label lies in [0, num_classes).
struct LabelBatch {
    std::vector<int> labels;
    std::size_t num_classes = 0;

    static LabelBatch make(std::vector<int> labels, std::size_t num_classes);
    std::size_t size() const { return labels.size(); }
};

// A [N, C] matrix of class probabilities together with the temperature that
// produced it. Rows sum to 1 within 1e-9 and entries lie in [0, 1]; make()
// enforces this for externally built matrices.
struct ProbBatch {
    Tensor probs;
    double temperature = 1.0;

    static ProbBatch make(Tensor probs, double temperature);
    std::size_t batch() const { return probs.dim(0); }
    std::size_t classes() const { return probs.dim(1); }
};

// Mixing weights for the combined student objective: alpha on supervised CE,
// beta on the teacher-matching term, gamma on the peer-matching sum. All
// nonnegative, not all zero.
struct LossWeights {
    double alpha = 0.1;
    double beta = 0.45;
    double gamma = 0.45;

    void validate() const;
};

enum class MlDirection {
    PaperOrder,  // peer term D_KL(self || peer)
    Reversed,    // peer term D_KL(peer || self)
};

struct StudentLossOptions {
    MlDirection ml_direction = MlDirection::PaperOrder;
    // Multiply the teacher-matching term by T^2 (off by default; exposed for
    // comparison runs).
    bool kd_t2_rescale = false;
};

// Temperature-scaled softmax over each row of [N, C] logits, computed with
// max-subtraction so large logits cannot overflow. Differentiable w.r.t. the
// logits; throws DomainError for T <= 0 or non-finite logits.
ProbBatch extended_softmax(const Tensor& logits, double temperature);

// Batch-mean cross entropy, -1/N sum_i log p[i, y_i], with a 1e-12 floor
// inside the log. Differentiable through `probs`.
Tensor cross_entropy(const ProbBatch& probs, const LabelBatch& labels);

// Batch-mean KL divergence 1/N sum_i sum_c p log(p/q), both arguments floored
// at 1e-12 inside the logs. Differentiates through whichever argument is live
// on the tape; callers pass detached distributions to block a side.
Tensor kl_divergence(const ProbBatch& p, const ProbBatch& q);

// Combined objective for student k:
//   alpha * ce + beta * D_KL(teacher || s_k) + gamma * sum_{k' != k} ML(s_k, s_k')
// The teacher and the peers are detached internally, so the gradient reaches
// only student k's logits (plus whatever feeds `ce`). `teacher` may be null
// when beta == 0 (mutual-learning-only training).
Tensor student_loss(std::size_t k,
                    const Tensor& ce,
                    const ProbBatch* teacher,
                    const std::vector<ProbBatch>& students,
                    const LossWeights& weights,
                    const StudentLossOptions& options = {});

// The teacher trains on plain cross entropy; alias kept separate because the
// teacher never receives distillation or peer terms.
Tensor teacher_loss(const ProbBatch& probs, const LabelBatch& labels);

// Indicator expansion of labels into a constant [N, C] 0/1 matrix.
Tensor one_hot(const LabelBatch& labels);

}  // namespace codistill
