// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "frdiff/tensor.hpp"

namespace frdiff {

class Gradients {
 public:
  // Gradient with respect to a watched leaf; zeros when the loss does not
  // depend on it.
  Tensor of(const Tensor& leaf) const;
  bool contains(const Tensor& leaf) const;

 private:
  friend class Tape;
  std::unordered_map<int, std::vector<double>> grads_;
};

/// Append-only record of differentiable operations.
///
/// Nodes are stored in recording order, which is a valid topological order;
/// backward() visits them once each in reverse. A tape is single-threaded
/// state: activate it on the thread that runs the forward computation.
class Tape {
 public:
  // grad_in[k] is null when input k does not participate in the tape.
  using GradSlots = std::span<std::vector<double>* const>;
  using BackwardFn = std::function<void(std::span<const double> grad_out, GradSlots grad_in)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Returns a leaf sharing storage with `value` whose gradient is collected.
  Tensor watch(const Tensor& value);

  // Attaches `output` to the tape if any input is tracked here; otherwise
  // returns it unchanged and drops `fn`.
  Tensor record(Tensor output, std::initializer_list<const Tensor*> inputs, BackwardFn fn);

  Gradients backward(const Tensor& loss);

  std::size_t node_count() const { return nodes_.size(); }
  bool owns(const Tensor& t) const { return t.tape_ == this && t.grad_id_ >= 0; }

 private:
  struct Node {
    int output;
    std::vector<int> inputs;
    BackwardFn fn;
  };

  int new_slot(std::size_t numel, bool leaf);

  std::vector<Node> nodes_;
  std::vector<std::size_t> slot_sizes_;
  std::vector<bool> slot_is_leaf_;
};

Tape* active_tape();

// Activates a tape on the current thread for the lifetime of the scope.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Disables recording on the current thread for the lifetime of the scope.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

}  // namespace frdiff
