// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/tape.hpp"

#include "frdiff/errors.hpp"

namespace frdiff {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape* active_tape() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

Tensor Gradients::of(const Tensor& leaf) const {
  auto it = grads_.find(leaf.grad_id());
  if (leaf.grad_id() < 0 || it == grads_.end()) return Tensor(leaf.shape());
  return Tensor(leaf.shape(), it->second);
}

bool Gradients::contains(const Tensor& leaf) const {
  return leaf.grad_id() >= 0 && grads_.count(leaf.grad_id()) > 0;
}

int Tape::new_slot(std::size_t numel, bool leaf) {
  slot_sizes_.push_back(numel);
  slot_is_leaf_.push_back(leaf);
  return static_cast<int>(slot_sizes_.size() - 1);
}

Tensor Tape::watch(const Tensor& value) {
  if (!value.defined()) throw ContractError("cannot watch an undefined tensor");
  Tensor leaf = value.detach();
  leaf.tape_ = this;
  leaf.grad_id_ = new_slot(leaf.numel(), true);
  return leaf;
}

Tensor Tape::record(Tensor output, std::initializer_list<const Tensor*> inputs, BackwardFn fn) {
  std::vector<int> ids;
  ids.reserve(inputs.size());
  bool any = false;
  for (const Tensor* in : inputs) {
    const bool mine = in != nullptr && owns(*in);
    ids.push_back(mine ? in->grad_id_ : -1);
    any = any || mine;
  }
  if (!any) return output;
  output.tape_ = this;
  output.grad_id_ = new_slot(output.numel(), false);
  nodes_.push_back(Node{output.grad_id_, std::move(ids), std::move(fn)});
  return output;
}

Gradients Tape::backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got " + shape_string(loss.shape()));
  }
  if (!owns(loss)) throw ContractError("loss was not recorded on this tape");

  std::vector<std::vector<double>> grads(slot_sizes_.size());
  grads[loss.grad_id_].assign(1, 1.0);

  std::vector<std::vector<double>*> slots;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    auto& g_out = grads[it->output];
    if (g_out.empty()) continue;  // unreachable from the loss
    slots.assign(it->inputs.size(), nullptr);
    for (std::size_t k = 0; k < it->inputs.size(); ++k) {
      const int id = it->inputs[k];
      if (id < 0) continue;
      if (grads[id].empty()) grads[id].assign(slot_sizes_[id], 0.0);
      slots[k] = &grads[id];
    }
    it->fn(g_out, GradSlots(slots.data(), slots.size()));
    if (!slot_is_leaf_[it->output]) std::vector<double>().swap(g_out);
  }

  Gradients result;
  for (std::size_t id = 0; id < grads.size(); ++id) {
    if (slot_is_leaf_[id] && !grads[id].empty()) {
      result.grads_.emplace(static_cast<int>(id), std::move(grads[id]));
    }
  }
  return result;
}

}  // namespace frdiff
