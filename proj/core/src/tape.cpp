#include "codistill/tape.hpp"

#include <atomic>

#include "codistill/error.hpp"

namespace codistill {

namespace {
std::atomic<std::uint64_t> g_next_tape_id{1};
thread_local Tape* g_active_tape = nullptr;
}  // namespace

Tape::Tape() : id_(g_next_tape_id.fetch_add(1, std::memory_order_relaxed)) {}

std::size_t Tape::register_leaf(const std::shared_ptr<TensorImpl>& t) {
    if (t->tape_id == id_) return t->node_id;
    t->tape_id = id_;
    t->node_id = nodes_.size();
    nodes_.push_back(TapeNode{{}, t, nullptr});
    return t->node_id;
}

std::size_t Tape::record(std::vector<std::size_t> inputs,
                         const std::shared_ptr<TensorImpl>& output,
                         std::function<void(const std::vector<double>&, Adjoints&)> backward_fn) {
    for (std::size_t in : inputs) {
        if (in >= nodes_.size()) throw TapeError("op references a node that is not on the tape");
    }
    output->tape_id = id_;
    output->node_id = nodes_.size();
    nodes_.push_back(TapeNode{std::move(inputs), output, std::move(backward_fn)});
    return output->node_id;
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined()) throw TapeError("backward from an undefined tensor");
    if (loss.numel() != 1) {
        throw ShapeError("backward needs a scalar loss, got shape " +
                         shape_to_string(loss.shape()));
    }
    const auto& impl = loss.impl();
    if (impl->tape_id != id_) {
        throw TapeError("loss is not on the active tape (constant or detached value)");
    }

    stats_ = BackwardStats{};
    stats_.nodes_total = nodes_.size();

    Adjoints adj(nodes_.size());
    adj[impl->node_id] = {1.0};

    // Reverse scan: ids are appended in topological order, so by the time a
    // node is visited every contribution to its adjoint has already landed.
    for (std::size_t i = impl->node_id + 1; i-- > 0;) {
        TapeNode& node = nodes_[i];
        if (adj[i].empty() || !node.backward) continue;
        node.backward(adj[i], adj);
        ++stats_.nodes_visited;
    }

    for (std::size_t i = 0; i <= impl->node_id; ++i) {
        if (adj[i].empty()) continue;
        auto& t = nodes_[i].tensor;
        if (!t || !t->requires_grad) continue;
        if (t->grad.empty()) t->grad.assign(t->data.size(), 0.0);
        for (std::size_t j = 0; j < t->data.size(); ++j) t->grad[j] += adj[i][j];
    }
}

TapeScope::TapeScope() : previous_(g_active_tape) {
    g_active_tape = &tape_;
}

TapeScope::~TapeScope() {
    g_active_tape = previous_;
}

Tape* active_tape() {
    return g_active_tape;
}

void backward(const Tensor& loss) {
    Tape* tape = active_tape();
    if (!tape) throw TapeError("backward called with no active tape");
    tape->backward(loss);
}

namespace detail {
std::vector<double>& adjoint_slot(Adjoints& adj, std::size_t id, std::size_t n) {
    if (adj[id].empty()) adj[id].assign(n, 0.0);
    return adj[id];
}
}  // namespace detail

}  // namespace codistill
