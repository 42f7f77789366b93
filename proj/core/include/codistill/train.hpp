#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "codistill/data.hpp"
#include "codistill/losses.hpp"
#include "codistill/nn.hpp"
#include "codistill/rng.hpp"

namespace codistill {

enum class TrainMode { Online, Offline, KdOnly, MlOnly };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& s);

// Full protocol configuration. Defaults follow the shipped training recipe:
// SGD at lr 0.01 with momentum 0.9, batch 16, T = 2, weights 0.1/0.45/0.45,
// L2 coefficient 1e-4, 100 epochs, no schedule and no early stopping.
struct DistillConfig {
    double temperature = 2.0;
    LossWeights weights{0.1, 0.45, 0.45};
    std::size_t num_students = 2;
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::size_t batch_size = 16;
    std::size_t epochs = 100;
    TrainMode mode = TrainMode::Online;
    std::uint64_t seed = 1;
    MlDirection ml_direction = MlDirection::PaperOrder;
    bool kd_t2_rescale = false;

    // Returns a checked copy with the mode forcing rules applied:
    // kd_only zeroes gamma, ml_only zeroes beta (and needs K >= 2).
    // Throws ConfigError on any invariant violation.
    DistillConfig validated() const;
};

struct ModelEpoch {
    std::string model;
    double train_loss = 0.0;
    double test_accuracy = 0.0;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    std::vector<ModelEpoch> models;
    double ensemble_accuracy = 0.0;
};

// Momentum buffers, one per trainable parameter, zero-initialized.
struct SgdState {
    std::vector<std::vector<double>> velocity;
    static SgdState for_params(const std::vector<Tensor>& params);
};

// v <- momentum * v + (grad + weight_decay * param); param <- param - lr * v.
// Consumes the gradients: they are zeroed after the update. Throws ValueError
// if any parameter arrives without a gradient.
void sgd_step(std::vector<Tensor>& params, SgdState& state, double lr, double momentum,
              double weight_decay);

struct AugmentOptions {
    double noise_sigma = 0.01;
    double flip_prob = 0.5;
    bool flip_enabled = true;  // horizontal flips apply to [N,C,H,W] batches only
};

// Random horizontal flip (image batches) plus additive Gaussian pixel noise.
// Pure function of (batch, rng state, options).
Tensor augment(const Tensor& batch, Rng& rng, const AugmentOptions& options = {});

// Single-stage joint training. Accepts modes online, kd_only and ml_only:
// all three run the same loop, with kd_only differing only in gamma = 0 and
// ml_only running without a teacher (pass nullptr). Per batch, every forward
// pass happens before any update; the teacher steps first, then students in
// index order, each student seeing the teacher's and peers' pre-update
// predictions as detached constants.
std::vector<EpochRecord> train_online(Network* teacher, std::vector<Network>& students,
                                      const Split& data, const DistillConfig& cfg);

// Two-stage protocol, stage 2: the teacher arrives pre-trained (normally via
// load_network of a pretrain_teacher checkpoint) and is never updated; its
// parameter checksum is invariant across the run.
std::vector<EpochRecord> train_offline(Network& teacher, std::vector<Network>& students,
                                       const Split& data, const DistillConfig& cfg);

// Stage 1 of the offline protocol: cross-entropy-only training of the
// teacher, serialized to `checkpoint_path`. Returns the path written.
std::filesystem::path pretrain_teacher(Network& teacher, const Split& data,
                                       const DistillConfig& cfg,
                                       const std::filesystem::path& checkpoint_path);

// Appends records to a line-delimited text log, one line per (epoch, model):
//   <epoch> <model> <train_loss> <test_acc>
// plus an ensemble line per epoch with "-" in the loss field.
void append_epoch_records(const std::filesystem::path& log_path,
                          const std::vector<EpochRecord>& records);

struct EvalAccuracies {
    double teacher = 0.0;  // meaningful only when a teacher was evaluated
    std::vector<double> students;
    double ensemble = 0.0;
};

// Test-split evaluation at temperature 1 with no gradient recording.
EvalAccuracies evaluate_models(const Network* teacher, const std::vector<Network>& students,
                               const Dataset& test);

}  // namespace codistill
