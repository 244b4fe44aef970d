#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "panforge/core/errors.hpp"
#include "panforge/core/tensor.hpp"

namespace panforge {

/// Reverse-mode tape. Operations append nodes in execution order, so the
/// append order is already a topological order and the backward sweep is a
/// single reverse pass.
template <typename Real>
class Graph {
 public:
  struct Node {
    const char* tag;
    std::vector<NodeId> inputs;
    Tensor<Real> output;
    std::function<void()> backward;
  };

  bool recording() const { return recording_; }
  void set_recording(bool b) { recording_ = b; }

  std::size_t node_count() const { return nodes_.size(); }

  /// Appends a node for an op whose forward already ran. `backward` must
  /// accumulate (+=) into the input gradients using `output`'s gradient.
  NodeId add_node(const char* tag, Tensor<Real>& output,
                  std::vector<NodeId> input_ids, std::function<void()> backward) {
    NodeId id = static_cast<NodeId>(nodes_.size());
    output.set_node(id);
    nodes_.push_back(Node{tag, std::move(input_ids), output, std::move(backward)});
    return id;
  }

  /// Propagates d(loss)/d(node) through the tape, then resets it. Gradients
  /// accumulate additively across fan-out. Every recorded node ends up with a
  /// populated (possibly zero) gradient buffer.
  void backward(Tensor<Real>& loss) {
    if (loss.size() != 1)
      throw ContractError("backward requires a scalar loss, got shape " + loss.shape().to_string());
    loss.grad()[0] += Real(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      it->output.grad();  // ensure allocated even when nothing flowed here
      it->backward();
    }
    clear();
  }

  void clear() { nodes_.clear(); }

  /// Tag of the earliest node whose output holds a NaN/Inf, or nullptr.
  const char* first_nonfinite_tag() const {
    for (const auto& n : nodes_)
      if (!n.output.all_finite()) return n.tag;
    return nullptr;
  }

 private:
  std::vector<Node> nodes_;
  bool recording_ = true;
};

/// RAII toggle for running forwards without recording (inference, detached
/// branches).
template <typename Real>
class NoRecord {
 public:
  explicit NoRecord(Graph<Real>& g) : g_(g), prev_(g.recording()) { g_.set_recording(false); }
  ~NoRecord() { g_.set_recording(prev_); }
  NoRecord(const NoRecord&) = delete;
  NoRecord& operator=(const NoRecord&) = delete;

 private:
  Graph<Real>& g_;
  bool prev_;
};

namespace detail {

template <typename Real>
inline bool any_requires_grad(std::initializer_list<const Tensor<Real>*> ts) {
  for (const auto* t : ts)
    if (t->requires_grad()) return true;
  return false;
}

template <typename Real>
inline std::vector<NodeId> node_ids(std::initializer_list<const Tensor<Real>*> ts) {
  std::vector<NodeId> ids;
  ids.reserve(ts.size());
  for (const auto* t : ts) ids.push_back(t->node());
  return ids;
}

/// Common tail of every differentiable op: decide whether to record, mark the
/// output, and append the node.
template <typename Real>
inline void record(Graph<Real>& g, const char* tag, Tensor<Real>& out,
                   std::initializer_list<const Tensor<Real>*> inputs,
                   std::function<void()> backward) {
  if (!g.recording() || !any_requires_grad<Real>(inputs)) return;
  out.set_requires_grad(true);
  g.add_node(tag, out, node_ids<Real>(inputs), std::move(backward));
}

template <typename Real>
inline void check_finite(const Tensor<Real>& t, const char* tag) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite values produced by ") + tag);
}

}  // namespace detail

// Debug-mode guarantee that documented ops keep values finite on finite
// inputs. Opt out with -DPANFORGE_FINITE_CHECKS=0 even in debug builds.
#ifndef PANFORGE_FINITE_CHECKS
#ifdef NDEBUG
#define PANFORGE_FINITE_CHECKS 0
#else
#define PANFORGE_FINITE_CHECKS 1
#endif
#endif

#if PANFORGE_FINITE_CHECKS
#define PANFORGE_CHECK_FINITE(tensor, tag) ::panforge::detail::check_finite((tensor), (tag))
#else
#define PANFORGE_CHECK_FINITE(tensor, tag) ((void)0)
#endif

}  // namespace panforge
