#include "codistill/train.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "codistill/error.hpp"
#include "codistill/eval.hpp"
#include "codistill/ops.hpp"
#include "codistill/tape.hpp"

namespace codistill {

std::string to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::Online: return "online";
        case TrainMode::Offline: return "offline";
        case TrainMode::KdOnly: return "kd_only";
        case TrainMode::MlOnly: return "ml_only";
    }
    return "?";
}

TrainMode train_mode_from_string(const std::string& s) {
    if (s == "online") return TrainMode::Online;
    if (s == "offline") return TrainMode::Offline;
    if (s == "kd_only") return TrainMode::KdOnly;
    if (s == "ml_only") return TrainMode::MlOnly;
    throw ConfigError("unknown training mode '" + s + "'");
}

DistillConfig DistillConfig::validated() const {
    DistillConfig c = *this;
    if (!(c.temperature > 0.0)) throw ConfigError("temperature must be positive");
    if (!(c.lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (c.num_students < 1) throw ConfigError("need at least one student");
    if (c.batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (c.momentum < 0.0 || c.momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
    if (c.weight_decay < 0.0) throw ConfigError("weight decay must be nonnegative");
    if (c.mode == TrainMode::KdOnly) c.weights.gamma = 0.0;
    if (c.mode == TrainMode::MlOnly) {
        if (c.num_students < 2) throw ConfigError("ml_only needs at least 2 students");
        c.weights.beta = 0.0;
    }
    if (c.weights.alpha < 0.0 || c.weights.beta < 0.0 || c.weights.gamma < 0.0) {
        throw ConfigError("loss weights must be nonnegative");
    }
    if (c.weights.alpha == 0.0 && c.weights.beta == 0.0 && c.weights.gamma == 0.0) {
        throw ConfigError("loss weights must not all be zero");
    }
    return c;
}

SgdState SgdState::for_params(const std::vector<Tensor>& params) {
    SgdState st;
    st.velocity.reserve(params.size());
    for (const Tensor& p : params) st.velocity.emplace_back(p.numel(), 0.0);
    return st;
}

void sgd_step(std::vector<Tensor>& params, SgdState& state, double lr, double momentum,
              double weight_decay) {
    if (state.velocity.size() != params.size()) {
        throw ValueError("sgd_step: optimizer state does not match parameter list");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params[i];
        if (!p.has_grad()) {
            throw ValueError("sgd_step: parameter " + std::to_string(i) + " has no gradient");
        }
        auto& impl = *p.impl();
        std::vector<double>& v = state.velocity[i];
        if (v.size() != impl.data.size()) {
            throw ValueError("sgd_step: velocity shape mismatch at parameter " + std::to_string(i));
        }
        for (std::size_t j = 0; j < v.size(); ++j) {
            v[j] = momentum * v[j] + (impl.grad[j] + weight_decay * impl.data[j]);
            impl.data[j] -= lr * v[j];
        }
        p.zero_grad();
    }
}

Tensor augment(const Tensor& batch, Rng& rng, const AugmentOptions& options) {
    std::vector<double> out(batch.values().begin(), batch.values().end());
    const Shape& s = batch.shape();
    if (s.size() == 4 && options.flip_enabled && options.flip_prob > 0.0) {
        std::size_t n = s[0], ch = s[1], h = s[2], w = s[3];
        for (std::size_t i = 0; i < n; ++i) {
            if (!rng.bernoulli(options.flip_prob)) continue;
            for (std::size_t c = 0; c < ch; ++c) {
                for (std::size_t y = 0; y < h; ++y) {
                    double* row = &out[((i * ch + c) * h + y) * w];
                    for (std::size_t x = 0; x < w / 2; ++x) std::swap(row[x], row[w - 1 - x]);
                }
            }
        }
    }
    if (options.noise_sigma > 0.0) {
        for (double& v : out) v += rng.normal(0.0, options.noise_sigma);
    }
    return Tensor::from_data(s, std::move(out));
}

namespace {

ProbBatch eval_probs(const Network& net, const Tensor& x) {
    return extended_softmax(forward(net, x), 1.0);
}

}  // namespace

EvalAccuracies evaluate_models(const Network* teacher, const std::vector<Network>& students,
                               const Dataset& test) {
    if (test.size() == 0) throw ValueError("evaluate_models: empty test split");
    EvalAccuracies acc;
    if (teacher) {
        ProbBatch tp = eval_probs(*teacher, test.features);
        acc.teacher = accuracy(ensemble_predict(tp.probs), test.labels);
    }
    std::vector<ProbBatch> sp;
    sp.reserve(students.size());
    for (const Network& s : students) sp.push_back(eval_probs(s, test.features));
    for (const ProbBatch& p : sp) {
        acc.students.push_back(accuracy(ensemble_predict(p.probs), test.labels));
    }
    acc.ensemble = accuracy(ensemble_predict(ensemble_probs(sp)), test.labels);
    return acc;
}

namespace {

// The one training loop behind every protocol. Per batch: all forward passes
// first (so every model sees pre-update predictions), then the teacher
// update, then student updates in index order. Students receive the
// teacher's tempered predictions and their peers' tempered predictions as
// detached constants, so each backward pass reaches exactly one model.
std::vector<EpochRecord> run_loop(Network* teacher, bool teacher_trained,
                                  std::vector<Network>& students, const Split& data,
                                  const DistillConfig& cfg) {
    std::size_t k_count = students.size();
    if (k_count != cfg.num_students) {
        throw ConfigError("config says " + std::to_string(cfg.num_students) + " students, got " +
                          std::to_string(k_count));
    }
    const Dataset& train = data.train;
    const Dataset& test = data.test;
    if (train.size() == 0) throw ValueError("empty training split");

    StudentLossOptions loss_options{cfg.ml_direction, cfg.kd_t2_rescale};
    bool need_teacher_soft = teacher != nullptr && cfg.weights.beta > 0.0;

    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
    Rng augment_rng(derive_seed(cfg.seed, "augment"));

    SgdState teacher_state = teacher ? SgdState::for_params(teacher->params) : SgdState{};
    std::vector<SgdState> student_state;
    for (Network& s : students) student_state.push_back(SgdState::for_params(s.params));

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<EpochRecord> records;
    records.reserve(cfg.epochs);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double teacher_loss_sum = 0.0;
        std::vector<double> student_loss_sum(k_count, 0.0);
        std::size_t batches = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
            Tensor xb = take_rows(train.features, idx);
            std::vector<int> yl(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) yl[i] = train.labels.labels[idx[i]];
            LabelBatch yb = LabelBatch::make(std::move(yl), train.class_count);
            xb = augment(xb, augment_rng);

            TapeScope scope;

            Tensor t_logits;
            Tensor t_loss;
            ProbBatch teacher_soft;
            if (teacher) {
                t_logits = forward(*teacher, xb);
                t_loss = teacher_loss(extended_softmax(t_logits, 1.0), yb);
                if (need_teacher_soft) teacher_soft = extended_softmax(t_logits, cfg.temperature);
            }

            std::vector<Tensor> s_logits;
            s_logits.reserve(k_count);
            for (Network& s : students) s_logits.push_back(forward(s, xb));

            std::vector<ProbBatch> s_soft;
            s_soft.reserve(k_count);
            for (const Tensor& lg : s_logits) s_soft.push_back(extended_softmax(lg, cfg.temperature));

            std::vector<Tensor> s_loss;
            s_loss.reserve(k_count);
            for (std::size_t k = 0; k < k_count; ++k) {
                Tensor ce = cross_entropy(extended_softmax(s_logits[k], 1.0), yb);
                s_loss.push_back(student_loss(k, ce, need_teacher_soft ? &teacher_soft : nullptr,
                                              s_soft, cfg.weights, loss_options));
            }

            long batch_no = static_cast<long>(batches);
            if (teacher && !std::isfinite(t_loss.item())) {
                throw DivergenceError("teacher", batch_no,
                                      "non-finite teacher loss at epoch " + std::to_string(epoch) +
                                          ", batch " + std::to_string(batch_no));
            }
            for (std::size_t k = 0; k < k_count; ++k) {
                if (!std::isfinite(s_loss[k].item())) {
                    throw DivergenceError("student" + std::to_string(k + 1), batch_no,
                                          "non-finite loss for student" + std::to_string(k + 1) +
                                              " at epoch " + std::to_string(epoch) + ", batch " +
                                              std::to_string(batch_no));
                }
            }

            if (teacher && teacher_trained) {
                backward(t_loss);
                sgd_step(teacher->params, teacher_state, cfg.lr, cfg.momentum, cfg.weight_decay);
            }
            for (std::size_t k = 0; k < k_count; ++k) {
                backward(s_loss[k]);
                sgd_step(students[k].params, student_state[k], cfg.lr, cfg.momentum,
                         cfg.weight_decay);
            }

            if (teacher) teacher_loss_sum += t_loss.item();
            for (std::size_t k = 0; k < k_count; ++k) student_loss_sum[k] += s_loss[k].item();
            ++batches;
        }

        EvalAccuracies acc = evaluate_models(teacher, students, test);
        EpochRecord rec;
        rec.epoch = epoch;
        double inv_batches = 1.0 / static_cast<double>(batches);
        if (teacher) {
            rec.models.push_back({"teacher", teacher_loss_sum * inv_batches, acc.teacher});
        }
        for (std::size_t k = 0; k < k_count; ++k) {
            rec.models.push_back({"student" + std::to_string(k + 1),
                                  student_loss_sum[k] * inv_batches, acc.students[k]});
        }
        rec.ensemble_accuracy = acc.ensemble;
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace

std::vector<EpochRecord> train_online(Network* teacher, std::vector<Network>& students,
                                      const Split& data, const DistillConfig& cfg_in) {
    DistillConfig cfg = cfg_in.validated();
    switch (cfg.mode) {
        case TrainMode::Online:
        case TrainMode::KdOnly:
            if (!teacher) throw ConfigError(to_string(cfg.mode) + " training needs a teacher");
            return run_loop(teacher, /*teacher_trained=*/true, students, data, cfg);
        case TrainMode::MlOnly:
            if (teacher) throw ConfigError("ml_only training takes no teacher");
            return run_loop(nullptr, false, students, data, cfg);
        case TrainMode::Offline:
            throw ConfigError("offline mode requires train_offline");
    }
    throw ConfigError("unhandled training mode");
}

std::vector<EpochRecord> train_offline(Network& teacher, std::vector<Network>& students,
                                       const Split& data, const DistillConfig& cfg_in) {
    DistillConfig cfg = cfg_in.validated();
    if (cfg.mode != TrainMode::Offline) throw ConfigError("train_offline requires mode offline");
    return run_loop(&teacher, /*teacher_trained=*/false, students, data, cfg);
}

std::filesystem::path pretrain_teacher(Network& teacher, const Split& data,
                                       const DistillConfig& cfg_in,
                                       const std::filesystem::path& checkpoint_path) {
    DistillConfig cfg = cfg_in.validated();
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
    Rng augment_rng(derive_seed(cfg.seed, "augment"));
    SgdState state = SgdState::for_params(teacher.params);

    const Dataset& train = data.train;
    if (train.size() == 0) throw ValueError("empty training split");
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        std::size_t batch_no = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
            Tensor xb = take_rows(train.features, idx);
            std::vector<int> yl(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) yl[i] = train.labels.labels[idx[i]];
            LabelBatch yb = LabelBatch::make(std::move(yl), train.class_count);
            xb = augment(xb, augment_rng);

            TapeScope scope;
            Tensor loss = teacher_loss(extended_softmax(forward(teacher, xb), 1.0), yb);
            if (!std::isfinite(loss.item())) {
                throw DivergenceError("teacher", static_cast<long>(batch_no),
                                      "non-finite teacher loss during pretraining at epoch " +
                                          std::to_string(epoch));
            }
            backward(loss);
            sgd_step(teacher.params, state, cfg.lr, cfg.momentum, cfg.weight_decay);
            ++batch_no;
        }
    }
    save_network(teacher, checkpoint_path);
    return checkpoint_path;
}

void append_epoch_records(const std::filesystem::path& log_path,
                          const std::vector<EpochRecord>& records) {
    std::ofstream os(log_path, std::ios::app);
    if (!os) throw IoError("cannot open training log: " + log_path.string());
    os << std::setprecision(12);
    for (const EpochRecord& rec : records) {
        for (const ModelEpoch& m : rec.models) {
            os << rec.epoch << ' ' << m.model << ' ' << m.train_loss << ' ' << m.test_accuracy
               << '\n';
        }
        os << rec.epoch << " ensemble - " << rec.ensemble_accuracy << '\n';
    }
}

}  // namespace codistill
