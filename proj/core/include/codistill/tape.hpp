#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "codistill/tensor.hpp"

namespace codistill {

// Per-backward adjoint buffers, indexed by node id. Slots stay empty until a
// gradient first reaches them, which is also how backward() skips whole
// subgraphs the loss never touched.
using Adjoints = std::vector<std::vector<double>>;

// One recorded operation (or leaf). `inputs` lists the node ids of the
// differentiable inputs; ids grow in append order, so every input id is
// smaller than the node's own id and a reverse scan of the node list is a
// valid topological traversal.
struct TapeNode {
    std::vector<std::size_t> inputs;
    std::shared_ptr<TensorImpl> tensor;
    // Receives this node's adjoint and scatters contributions into the
    // adjoints of its inputs. Null for leaves.
    std::function<void(const std::vector<double>& out_adj, Adjoints& adj)> backward;
};

struct BackwardStats {
    std::size_t nodes_visited = 0;  // nodes whose backward rule ran
    std::size_t nodes_total = 0;
};

// Reverse-mode gradient tape. Strictly single-threaded: a tape and every
// tensor registered on it must stay on the thread that created it. Each tape
// instance gets a globally unique id, so a tensor that survived an earlier
// batch is recognized as foreign and re-registered as a fresh leaf.
class Tape {
public:
    Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    std::uint64_t id() const { return id_; }
    std::size_t size() const { return nodes_.size(); }
    const TapeNode& node(std::size_t i) const { return nodes_[i]; }

    // Idempotent: a tensor already on this tape keeps its node id.
    std::size_t register_leaf(const std::shared_ptr<TensorImpl>& t);

    // Appends an operation node. `inputs` must already be registered.
    std::size_t record(std::vector<std::size_t> inputs,
                       const std::shared_ptr<TensorImpl>& output,
                       std::function<void(const std::vector<double>&, Adjoints&)> backward_fn);

    // Reverse accumulation from `loss` (numel == 1, on this tape). Every
    // requires_grad tensor reachable from the loss gets d(loss)/d(tensor)
    // ADDED into its grad buffer; repeated calls keep accumulating until the
    // owner zeroes the grads.
    void backward(const Tensor& loss);

    const BackwardStats& last_backward_stats() const { return stats_; }

private:
    std::uint64_t id_;
    std::vector<TapeNode> nodes_;
    BackwardStats stats_;
};

// RAII activation of a tape as the calling thread's recording target.
// Scopes nest; the previous tape is restored on destruction.
class TapeScope {
public:
    TapeScope();
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

    Tape& tape() { return tape_; }

private:
    Tape tape_;
    Tape* previous_;
};

// The tape currently recording on this thread, or nullptr.
Tape* active_tape();

// backward() through the active tape; TapeError when there is none or the
// loss never made it onto it.
void backward(const Tensor& loss);

namespace detail {
// Ensures adj[id] is allocated (zero-filled) at `n` elements and returns it.
std::vector<double>& adjoint_slot(Adjoints& adj, std::size_t id, std::size_t n);
}  // namespace detail

}  // namespace codistill
