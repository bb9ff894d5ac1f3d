#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dinozaur/field.hpp"

namespace dinozaur::nn {

/// A named trainable tensor with its gradient accumulator.
struct Parameter {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;

  std::size_t size() const { return value.size(); }
};

/// Registry of trainable tensors keyed by path-like names ("block.2.w_mix").
/// Iteration order is lexicographic by name, which fixes the layout of
/// checkpoints and optimizer state.
class ParamStore {
 public:
  /// Registers a zero-initialized tensor. Throws ConfigError on duplicate names.
  Parameter& add(const std::string& name, std::vector<int> shape);
  void remove(const std::string& name);

  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  std::vector<std::string> names() const;
  std::size_t total_size() const;
  void zero_grad();
  bool all_finite() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::map<std::string, Parameter> entries_;
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  const Field& value() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode recorder for the fixed operator architectures.
///
/// Each operation pushes its output value together with a closure that maps
/// the output gradient onto its inputs. backward() replays the closures in
/// reverse order and adds parameter gradients into a ParamStore. A tape built
/// with recording disabled keeps values only and is used for inference.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t out)>;

  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  Var constant(Field value);
  /// Leaf bound to store entry `name`; its value is viewed as a zero-dimensional field.
  Var parameter(const ParamStore& store, const std::string& name);

  /// Records an operation output. `inputs` decide whether a gradient is needed;
  /// the closure is dropped when none of them requires one.
  Var push(Field value, std::initializer_list<Var> inputs, Backward backward);
  Var push(Field value, std::span<const Var> inputs, Backward backward);

  const Field& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient of node `id`; empty when nothing has flowed into it yet.
  const Field& grad(std::size_t id) const { return nodes_[id].grad; }
  /// Zero-initialized gradient buffer of node `id` for accumulation.
  Field& grad_buffer(std::size_t id);

  /// Seeds d(loss)/d(loss) = `seed`, replays the tape, and adds parameter
  /// gradients into `store`. Throws NumericError on a non-finite loss.
  void backward(const Var& loss, ParamStore& store, double seed = 1.0);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Field value;
    Field grad;
    bool requires_grad = false;
    Backward backward;
    std::string parameter;  // non-empty for parameter leaves
  };
  std::vector<Node> nodes_;
  bool recording_;
};

}  // namespace dinozaur::nn
