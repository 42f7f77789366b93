#include "codistill/losses.hpp"

#include <cmath>
#include <string>

#include "codistill/error.hpp"
#include "codistill/ops.hpp"

namespace codistill {

namespace {
constexpr double kLogFloor = 1e-12;

void require_rank2(const Tensor& t, const char* what) {
    if (!t.defined() || t.ndim() != 2) {
        throw ShapeError(std::string(what) + " must be a [N, C] matrix");
    }
}
}  // namespace

LabelBatch LabelBatch::make(std::vector<int> labels, std::size_t num_classes) {
    if (num_classes == 0) throw ValueError("LabelBatch: num_classes must be positive");
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
            throw ValueError("LabelBatch: label " + std::to_string(y) + " out of range [0, " +
                             std::to_string(num_classes) + ")");
        }
    }
    return LabelBatch{std::move(labels), num_classes};
}

ProbBatch ProbBatch::make(Tensor probs, double temperature) {
    require_rank2(probs, "ProbBatch");
    std::size_t rows = probs.dim(0), cols = probs.dim(1);
    auto v = probs.values();
    for (std::size_t r = 0; r < rows; ++r) {
        double row_sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            double p = v[r * cols + c];
            if (p < 0.0 || p > 1.0) {
                throw ValueError("ProbBatch: entry outside [0, 1] at row " + std::to_string(r));
            }
            row_sum += p;
        }
        if (std::abs(row_sum - 1.0) > 1e-9) {
            throw ValueError("ProbBatch: row " + std::to_string(r) + " sums to " +
                             std::to_string(row_sum));
        }
    }
    return ProbBatch{std::move(probs), temperature};
}

void LossWeights::validate() const {
    if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) {
        throw DomainError("loss weights must be nonnegative");
    }
    if (alpha == 0.0 && beta == 0.0 && gamma == 0.0) {
        throw DomainError("loss weights must not all be zero");
    }
}

ProbBatch extended_softmax(const Tensor& logits, double temperature) {
    require_rank2(logits, "logits");
    if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
    if (!logits.all_finite()) throw DomainError("logits contain non-finite values");

    std::size_t rows = logits.dim(0), cols = logits.dim(1);
    Tensor scaled = scale(logits, 1.0 / temperature);
    // The row max is a constant shift: softmax(z - m) == softmax(z) exactly,
    // and a uniform per-row shift has zero gradient, so detaching it keeps
    // both the value and the derivative intact while preventing overflow.
    Tensor row_max = detach(max_along_axis(scaled, 1));
    Tensor shifted = sub(scaled, matmul(reshape(row_max, Shape{rows, 1}),
                                        Tensor::full(Shape{1, cols}, 1.0)));
    Tensor e = codistill::exp(shifted);
    Tensor denom = matmul(reshape(sum(e, 1), Shape{rows, 1}), Tensor::full(Shape{1, cols}, 1.0));
    return ProbBatch{div(e, denom), temperature};
}

Tensor cross_entropy(const ProbBatch& probs, const LabelBatch& labels) {
    require_rank2(probs.probs, "probs");
    if (probs.batch() != labels.size()) {
        throw ShapeError("cross_entropy: batch size mismatch, " + std::to_string(probs.batch()) +
                         " probs vs " + std::to_string(labels.size()) + " labels");
    }
    if (probs.classes() != labels.num_classes) {
        throw ValueError("cross_entropy: class count mismatch");
    }
    Tensor picked = mul(one_hot(labels), codistill::log(maximum(probs.probs, kLogFloor)));
    return scale(sum(picked), -1.0 / static_cast<double>(labels.size()));
}

Tensor kl_divergence(const ProbBatch& p, const ProbBatch& q) {
    require_rank2(p.probs, "p");
    require_rank2(q.probs, "q");
    if (p.probs.shape() != q.probs.shape()) {
        throw ShapeError("kl_divergence: shape mismatch " + shape_to_string(p.probs.shape()) +
                         " vs " + shape_to_string(q.probs.shape()));
    }
    Tensor log_ratio = sub(codistill::log(maximum(p.probs, kLogFloor)),
                           codistill::log(maximum(q.probs, kLogFloor)));
    Tensor terms = mul(p.probs, log_ratio);
    return scale(sum(terms), 1.0 / static_cast<double>(p.batch()));
}

Tensor student_loss(std::size_t k,
                    const Tensor& ce,
                    const ProbBatch* teacher,
                    const std::vector<ProbBatch>& students,
                    const LossWeights& weights,
                    const StudentLossOptions& options) {
    weights.validate();
    if (k >= students.size()) {
        throw ValueError("student index " + std::to_string(k) + " out of range for " +
                         std::to_string(students.size()) + " students");
    }
    if (weights.beta > 0.0 && teacher == nullptr) {
        throw ValueError("student_loss: beta > 0 requires teacher predictions");
    }
    const ProbBatch& self = students[k];

    Tensor loss = scale(ce, weights.alpha);
    if (weights.beta > 0.0 && teacher != nullptr) {
        ProbBatch teacher_fixed{detach(teacher->probs), teacher->temperature};
        double beta = weights.beta;
        if (options.kd_t2_rescale) beta *= teacher->temperature * teacher->temperature;
        loss = add(loss, scale(kl_divergence(teacher_fixed, self), beta));
    }
    if (weights.gamma > 0.0 && students.size() > 1) {
        Tensor peer_sum;
        for (std::size_t j = 0; j < students.size(); ++j) {
            if (j == k) continue;
            ProbBatch peer_fixed{detach(students[j].probs), students[j].temperature};
            Tensor term = options.ml_direction == MlDirection::PaperOrder
                              ? kl_divergence(self, peer_fixed)
                              : kl_divergence(peer_fixed, self);
            peer_sum = peer_sum.defined() ? add(peer_sum, term) : term;
        }
        loss = add(loss, scale(peer_sum, weights.gamma));
    }
    return loss;
}

Tensor teacher_loss(const ProbBatch& probs, const LabelBatch& labels) {
    return cross_entropy(probs, labels);
}

Tensor one_hot(const LabelBatch& labels) {
    std::size_t n = labels.size(), c = labels.num_classes;
    std::vector<double> data(n * c, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        data[i * c + static_cast<std::size_t>(labels.labels[i])] = 1.0;
    }
    return Tensor::from_data(Shape{n, c}, std::move(data));
}

}  // namespace codistill
